"""Local enrollment/authentication HTTP service.

State lives in a single directory: a user registry with enrolled feature
rows (users.json), the binary-template gallery (gallery.json), an optional
latest evaluation report (report.json) and an append-only journal. Sessions
are in-memory and expire after 15 idle minutes.

The live path is keystroke-first: EEG participates when a trial file
reference (relative to the state directory) accompanies a request.
"""

from __future__ import annotations

import json
import secrets
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dataio, matcher
from .dataio import FeatureMatrix, KeyEvent
from .errors import BiokeyError, IntegrityError, ParameterError
from .features import eeg_feature_vector, keystroke_features
from .learn import GENUINE, ModelSpec, fit
from .pipeline import extract_trial

SESSION_IDLE_SECONDS = 15 * 60
SERVICE_FOREST_TREES = 100
FUSED_ACCEPT_SCORE = 1.0   # sum of two genuine probabilities
SINGLE_ACCEPT_SCORE = 0.5


class ServiceError(BiokeyError):
    def __init__(self, code: str, message: str, status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


@dataclass
class EnrollmentSession:
    token: str
    user_id: str
    trials_required: int
    key_rows: list = field(default_factory=list)     # per-trial keystroke features
    eeg_rows: list = field(default_factory=list)     # per-trial EEG features or None
    state: str = "open"                              # open | finalized | expired
    last_activity: float = field(default_factory=time.monotonic)
    result: dict | None = None

    @property
    def trials_received(self) -> int:
        return len(self.key_rows)


class BiometricService:
    """All endpoint logic, HTTP-framework free (the FastAPI app wraps this)."""

    def __init__(self, state_dir, password_keys=None, clock=time.monotonic):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self.password_keys = list(password_keys or dataio.PASSWORD_KEYS)
        self.sessions: dict[str, EnrollmentSession] = {}
        self._models: dict[str, dict] = {}   # user_id -> trained personalized models
        self.users: dict[str, dict] = {}
        self.key_gallery: matcher.TemplateGallery | None = None
        self.eeg_gallery: matcher.TemplateGallery | None = None
        self._load_state()

    # -- persistence --------------------------------------------------------

    def _users_path(self) -> Path:
        return self.state_dir / "users.json"

    def _load_state(self):
        p = self._users_path()
        if p.exists():
            raw = json.loads(p.read_text(encoding="utf-8"))
            self.password_keys = raw.get("password_keys", self.password_keys)
            self.users = raw["users"]
            self._rebuild_galleries()

    def _save_state(self):
        payload = {"password_keys": self.password_keys, "users": self.users}
        self._users_path().write_text(
            json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
        )
        if self.key_gallery is not None:
            (self.state_dir / "gallery.json").write_text(
                self.key_gallery.to_json(), encoding="utf-8"
            )

    def _journal(self, kind: str, payload: dict):
        entry = {"t": time.time(), "event": kind, **payload}
        with open(self.state_dir / "journal.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")

    # -- helpers ------------------------------------------------------------

    def _uid(self, user_id: str) -> int:
        return sorted(self.users).index(user_id) + 1

    def _session(self, token: str) -> EnrollmentSession:
        sess = self.sessions.get(token)
        if sess is None:
            raise ServiceError("unknown_token", "no such enrollment session", 401)
        if sess.state == "open" and self.clock() - sess.last_activity > SESSION_IDLE_SECONDS:
            sess.state = "expired"
        if sess.state == "expired":
            raise ServiceError("session_expired", "enrollment session expired", 401)
        return sess

    def parse_events(self, raw_events) -> list[KeyEvent]:
        events = []
        for e in raw_events:
            try:
                action = e["action"]
                if action not in ("down", "up"):
                    raise ServiceError("bad_event", f"invalid action {action!r}")
                events.append(KeyEvent(str(e["key"]), action, float(e["t_ms"])))
            except (KeyError, TypeError, ValueError):
                raise ServiceError("bad_event", f"malformed key event: {e!r}") from None
        return sorted(events, key=lambda ev: ev.t_ms)

    def validate_trial(self, events: list[KeyEvent]) -> FeatureVectorPair:
        try:
            pairs = dataio.validate_key_pairing(events)
        except IntegrityError as exc:
            raise ServiceError("bad_trial", str(exc)) from None
        if len(pairs) != 12:
            raise ServiceError("bad_trial", f"expected 12 keypresses, got {len(pairs)}")
        typed = [d.key for d, _ in pairs]
        if typed != self.password_keys:
            raise ServiceError("bad_trial", "key sequence does not match the configured password")
        fv = keystroke_features(events)
        return FeatureVectorPair(fv.names, fv.values)

    def _eeg_features(self, eeg_ref: str | None):
        if not eeg_ref:
            return None
        path = (self.state_dir / eeg_ref).resolve()
        if not str(path).startswith(str(self.state_dir.resolve())):
            raise ServiceError("bad_ref", "eeg_ref must stay inside the state directory")
        if not path.exists():
            raise ServiceError("bad_ref", f"no such EEG trial file: {eeg_ref}", 404)
        try:
            rec = dataio.load_recording(path)
            jsonl = path.with_suffix(".jsonl")
            if jsonl.exists():
                rec.key_events = dataio.load_keystrokes(jsonl)
            sample = extract_trial(rec, 0, 0, 0)
        except BiokeyError as exc:
            raise ServiceError("bad_ref", f"could not preprocess EEG trial: {exc}") from None
        return eeg_feature_vector(sample.eeg).values

    # -- enrollment ---------------------------------------------------------

    def enroll_start(self, user_id: str, trials_count: int) -> dict:
        if not user_id or not isinstance(user_id, str):
            raise ServiceError("bad_request", "user_id must be a non-empty string")
        if trials_count < 1:
            raise ServiceError("bad_request", "trials_count must be at least 1")
        for sess in self.sessions.values():
            if sess.user_id == user_id and sess.state == "open":
                if self.clock() - sess.last_activity > SESSION_IDLE_SECONDS:
                    sess.state = "expired"
                else:
                    raise ServiceError(
                        "conflict", f"an open enrollment session exists for {user_id!r}", 409
                    )
        token = secrets.token_urlsafe(32)  # 256 bits
        sess = EnrollmentSession(token, user_id, trials_count)
        sess.last_activity = self.clock()
        self.sessions[token] = sess
        return {"token": token, "trials_required": trials_count}

    def enroll_trial(self, token: str, raw_events, eeg_ref: str | None = None) -> dict:
        sess = self._session(token)
        if sess.state != "open":
            raise ServiceError("finalized", "session already finalized", 409)
        if sess.trials_received >= sess.trials_required:
            raise ServiceError("session_full", "all trials already received", 409)
        events = self.parse_events(raw_events)
        fv = self.validate_trial(events)
        eeg_values = self._eeg_features(eeg_ref)
        sess.key_rows.append(fv.values.tolist())
        sess.eeg_rows.append(None if eeg_values is None else eeg_values.tolist())
        sess.last_activity = self.clock()
        return {
            "received": sess.trials_received,
            "required": sess.trials_required,
            "holds": fv.values[:12].tolist(),
        }

    def enroll_finish(self, token: str) -> dict:
        sess = self._session(token)
        if sess.state == "finalized":
            return sess.result  # idempotent
        if sess.trials_received == 0:
            raise ServiceError("no_trials", "cannot finalize an empty session")
        user = self.users.setdefault(
            sess.user_id, {"key_rows": [], "eeg_rows": []}
        )
        user["key_rows"].extend(sess.key_rows)
        user["eeg_rows"].extend(sess.eeg_rows)
        self._rebuild_galleries()
        self._models.clear()
        self._save_state()
        sess.state = "finalized"
        sess.result = {
            "user_id": sess.user_id,
            "templates": len(user["key_rows"]),
        }
        self._journal("enroll_finish", {"user": sess.user_id, "trials": sess.trials_received})
        return sess.result

    def _rebuild_galleries(self):
        if not self.users:
            self.key_gallery = None
            self.eeg_gallery = None
            return
        key_rows, key_labels = [], []
        eeg_rows, eeg_labels = [], []
        names_key = [f"hold_{i}" for i in range(1, 13)] + \
            [f"downdown_{i}" for i in range(1, 12)] + \
            [f"upup_{i}" for i in range(1, 12)] + \
            [f"updown_{i}" for i in range(1, 12)]
        for user_id in sorted(self.users):
            uid = self._uid(user_id)
            for row, eeg in zip(self.users[user_id]["key_rows"], self.users[user_id]["eeg_rows"]):
                key_rows.append(row)
                key_labels.append((uid, 0, len(key_rows)))
                if eeg is not None:
                    eeg_rows.append(eeg)
                    eeg_labels.append((uid, 0, len(eeg_rows)))
        self.key_gallery = matcher.build_gallery(
            FeatureMatrix(names_key, np.asarray(key_rows), np.asarray(key_labels))
        )
        if eeg_rows:
            from .features import scheme_feature_names

            self.eeg_gallery = matcher.build_gallery(
                FeatureMatrix(scheme_feature_names(), np.asarray(eeg_rows), np.asarray(eeg_labels))
            )
        else:
            self.eeg_gallery = None

    # -- authentication -----------------------------------------------------

    def _personalized_model(self, user_id: str, modality: str):
        cached = self._models.get(user_id, {}).get(modality)
        if cached is not None:
            return cached
        rows_attr = "key_rows" if modality == "key" else "eeg_rows"
        X, y = [], []
        for other_id in sorted(self.users):
            for row in self.users[other_id][rows_attr]:
                if row is None:
                    continue
                X.append(row)
                y.append(GENUINE if other_id == user_id else 0)
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.size == 0 or (y == GENUINE).sum() == 0 or (y == 0).sum() == 0:
            return None
        spec = ModelSpec(kind="forest", n_trees=SERVICE_FOREST_TREES, seed=self._uid(user_id))
        model = fit(spec, X, y)
        self._models.setdefault(user_id, {})[modality] = model
        return model

    def authenticate(
        self,
        user_id: str,
        trials,                      # list of raw event lists
        eeg_refs=None,               # optional list aligned with trials
        method: str = "template",
    ) -> dict:
        if user_id not in self.users:
            raise ServiceError("not_found", f"user {user_id!r} is not enrolled", 404)
        if method not in ("template", "classifier"):
            raise ServiceError("bad_request", f"unknown method {method!r}")
        if not trials:
            raise ServiceError("bad_request", "at least one trial is required")
        eeg_refs = eeg_refs or [None] * len(trials)
        uid = self._uid(user_id)
        per_trial = []
        accepts = 0
        total_latency = 0.0
        for raw_events, ref in zip(trials, eeg_refs):
            events = self.parse_events(raw_events)
            fv = self.validate_trial(events)
            eeg_values = self._eeg_features(ref)
            if method == "template":
                result = self._auth_template(uid, fv.values, eeg_values)
            else:
                result = self._auth_classifier(user_id, fv.values, eeg_values)
            accepts += int(result["accepted"])
            total_latency += result["latency_ms"]
            per_trial.append(result)
        decision = accepts * 2 > len(trials)  # majority vote
        out = {
            "user_id": user_id,
            "method": method,
            "decision": "accept" if decision else "reject",
            "accepted_trials": accepts,
            "total_trials": len(trials),
            "score": float(np.mean([t["score"] for t in per_trial])),
            "latency_ms": total_latency / len(trials),
            "per_trial": per_trial,
        }
        self._journal("auth", {
            "user": user_id, "method": method, "decision": out["decision"],
            "trials": len(trials),
        })
        return out

    def _auth_template(self, uid: int, key_values, eeg_values) -> dict:
        t0 = time.perf_counter()
        decision = matcher.authenticate_template(key_values, self.key_gallery, uid)
        accepted = decision.accepted
        score = 1.0 - decision.normalized_genuine
        if eeg_values is not None and self.eeg_gallery is not None and uid in self.eeg_gallery.groups:
            eeg_decision = matcher.authenticate_template(eeg_values, self.eeg_gallery, uid)
            accepted = accepted and eeg_decision.accepted
            score = 0.5 * (score + 1.0 - eeg_decision.normalized_genuine)
        latency = (time.perf_counter() - t0) * 1000.0
        return {
            "accepted": bool(accepted),
            "score": float(score),
            "genuine_distance": decision.genuine_distance,
            "imposter_distance": (
                None if decision.imposter_distance == float("inf")
                else int(decision.imposter_distance)
            ),
            "latency_ms": latency,
        }

    def _auth_classifier(self, user_id: str, key_values, eeg_values) -> dict:
        key_model = self._personalized_model(user_id, "key")
        if key_model is None:
            raise ServiceError(
                "insufficient_data",
                "classifier method needs at least two enrolled users",
                409,
            )
        t0 = time.perf_counter()
        p_key = _genuine_probability(key_model, key_values)
        score = p_key
        threshold = SINGLE_ACCEPT_SCORE
        if eeg_values is not None:
            eeg_model = self._personalized_model(user_id, "eeg")
            if eeg_model is not None:
                score = p_key + _genuine_probability(eeg_model, eeg_values)
                threshold = FUSED_ACCEPT_SCORE
        latency = (time.perf_counter() - t0) * 1000.0
        return {
            "accepted": bool(score >= threshold),
            "score": float(score),
            "latency_ms": latency,
        }

    # -- queries -------------------------------------------------------------

    def list_users(self) -> dict:
        return {
            "users": [
                {"user_id": u, "templates": len(self.users[u]["key_rows"])}
                for u in sorted(self.users)
            ]
        }

    def latest_report(self) -> dict:
        p = self.state_dir / "report.json"
        if not p.exists():
            raise ServiceError("no_report", "no evaluation report has been produced yet", 404)
        return json.loads(p.read_text(encoding="utf-8"))


def _genuine_probability(model, values) -> float:
    proba = model.predict_proba(np.asarray(values, dtype=float)[None, :])[0]
    for i, c in enumerate(model.classes_):
        if c == GENUINE:
            return float(proba[i])
    return 0.0


@dataclass
class FeatureVectorPair:
    names: list[str]
    values: np.ndarray


# ---------------------------------------------------------------------------
# FastAPI wiring

def create_app(state_dir, ui_dir=None, password_keys=None):
    from fastapi import FastAPI, Request
    from fastapi.responses import FileResponse, JSONResponse

    service = BiometricService(state_dir, password_keys=password_keys)
    app = FastAPI(title="biokey", docs_url=None, redoc_url=None)
    app.state.service = service
    ui_root = Path(ui_dir) if ui_dir else None

    @app.exception_handler(ServiceError)
    async def service_error_handler(request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(BiokeyError)
    async def biokey_error_handler(request: Request, exc: BiokeyError):
        return JSONResponse(
            status_code=400, content={"code": "invalid_input", "message": str(exc)}
        )

    @app.post("/api/enroll/start")
    async def enroll_start(payload: dict):
        return service.enroll_start(payload.get("user_id", ""), int(payload.get("trials", 0)))

    @app.post("/api/enroll/trial")
    async def enroll_trial(payload: dict):
        return service.enroll_trial(
            payload.get("token", ""), payload.get("events", []), payload.get("eeg_ref")
        )

    @app.post("/api/enroll/finish")
    async def enroll_finish(payload: dict):
        return service.enroll_finish(payload.get("token", ""))

    @app.post("/api/auth")
    async def auth(payload: dict):
        trials = payload.get("trials")
        if trials is None:
            events = payload.get("events")
            trials = [events] if events else []
        eeg_refs = payload.get("eeg_refs")
        if eeg_refs is None and payload.get("eeg_ref"):
            eeg_refs = [payload["eeg_ref"]] * len(trials)
        return service.authenticate(
            payload.get("user_id", ""),
            trials,
            eeg_refs=eeg_refs,
            method=payload.get("method", "template"),
        )

    @app.get("/api/users")
    async def users():
        return service.list_users()

    @app.get("/api/report")
    async def report():
        return service.latest_report()

    @app.get("/api/config")
    async def config():
        return {"password_keys": service.password_keys}

    @app.get("/")
    async def index():
        if ui_root and (ui_root / "index.html").exists():
            return FileResponse(ui_root / "index.html")
        return JSONResponse({"service": "biokey", "ui": "not installed"})

    @app.get("/assets/{name}")
    async def assets(name: str):
        if ui_root is None:
            return JSONResponse({"code": "no_ui", "message": "UI not installed"}, status_code=404)
        target = (ui_root / name).resolve()
        if not str(target).startswith(str(ui_root.resolve())) or not target.exists():
            return JSONResponse({"code": "not_found", "message": name}, status_code=404)
        return FileResponse(target)

    return app
