"""Binary-template matching: median thresholds, packed Hamming distances,
CMC / rank-N identification and FAR / FRR / EER authentication.

Templates are stored as 64-bit words and compared with XOR + population
count, which is what makes this path several times faster than forest
prediction on the same feature vectors (see benchmark()).

Note on conventions: FAR here is the accepted-imposter fraction and FRR the
rejected-genuine fraction (the standard reading); acceptance means distance
at or below the threshold.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .dataio import FeatureMatrix
from .errors import ParameterError
from .features import percentile

_HAS_BITCOUNT = hasattr(np, "bitwise_count")
if not _HAS_BITCOUNT:  # numpy < 2: byte-wise lookup table
    _POP_LUT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)


def _popcount(words: np.ndarray) -> np.ndarray:
    if _HAS_BITCOUNT:
        return np.bitwise_count(words)
    return _POP_LUT[words.view(np.uint8)].reshape(*words.shape, 8).sum(axis=-1)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """0/1 vector (or matrix of them) -> little-endian uint64 words."""
    bits = np.atleast_2d(np.asarray(bits))
    n_words = (bits.shape[1] + 63) // 64
    padded = np.zeros((bits.shape[0], n_words * 64), dtype=np.uint8)
    padded[:, : bits.shape[1]] = bits != 0
    words = np.packbits(padded, axis=1, bitorder="little")
    return words.view(np.uint64)


def compute_thresholds(gallery: FeatureMatrix) -> np.ndarray:
    """Per-feature median over the gallery rows (rank-percentile rule)."""
    if gallery.rows.shape[0] < 1:
        raise ParameterError("cannot compute thresholds from an empty gallery")
    return np.array([percentile(gallery.rows[:, k], 50.0) for k in range(gallery.rows.shape[1])])


def binarize(values: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """bit k = 1 iff value k >= threshold k (boundary inclusive)."""
    values = np.asarray(values, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    if values.shape[-1] != thresholds.size:
        raise ParameterError("value width does not match threshold count")
    return (values >= thresholds).astype(np.uint8)


def hamming(a, b) -> int:
    """Number of differing bits between two equal-length bit vectors."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.size != b.size:
        raise ParameterError(f"bit lengths differ: {a.size} vs {b.size}")
    return int(_popcount(pack_bits(a) ^ pack_bits(b)).sum())


@dataclass
class TemplateGallery:
    feature_names: list[str]
    thresholds: np.ndarray
    groups: dict                       # subject -> packed templates [n_i x n_words]
    bit_length: int

    @property
    def subject_ids(self) -> list:
        return sorted(self.groups)

    def to_json(self) -> str:
        subjects = {}
        n_bytes = (self.bit_length + 7) // 8
        for sid, words in self.groups.items():
            raw = words.view(np.uint8).reshape(words.shape[0], -1)[:, :n_bytes]
            subjects[str(sid)] = [bytes(row).hex() for row in raw]
        return json.dumps(
            {
                "feature_names": self.feature_names,
                "thresholds": self.thresholds.tolist(),
                "bit_length": self.bit_length,
                "subjects": subjects,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "TemplateGallery":
        d = json.loads(text)
        bit_length = d["bit_length"]
        n_words = (bit_length + 63) // 64
        groups = {}
        for sid, rows in d["subjects"].items():
            packed = np.zeros((len(rows), n_words * 8), dtype=np.uint8)
            for i, hx in enumerate(rows):
                raw = bytes.fromhex(hx)
                packed[i, : len(raw)] = np.frombuffer(raw, dtype=np.uint8)
            key = int(sid) if sid.lstrip("-").isdigit() else sid
            groups[key] = packed.view(np.uint64)
        return cls(d["feature_names"], np.asarray(d["thresholds"], dtype=float), groups, bit_length)


def build_gallery(gallery: FeatureMatrix) -> TemplateGallery:
    """Binarize every gallery row against gallery medians and group by subject."""
    thresholds = compute_thresholds(gallery)
    bits = binarize(gallery.rows, thresholds)
    packed = pack_bits(bits)
    groups = {}
    for sid in np.unique(gallery.subjects):
        groups[int(sid)] = packed[gallery.subjects == sid]
    return TemplateGallery(list(gallery.feature_names), thresholds, groups, len(gallery.feature_names))


@dataclass
class MatchMatrix:
    distances: np.ndarray      # [n_probes x n_groups] min Hamming per group
    subject_order: list
    bit_length: int


def match_matrix(probes: FeatureMatrix, gallery: TemplateGallery) -> MatchMatrix:
    """Min Hamming distance from every probe to every gallery group.

    Probes are binarized with the gallery's thresholds; probe rows never
    influence the quantization.
    """
    if list(probes.feature_names) != list(gallery.feature_names):
        raise ParameterError("probe features are not aligned with the gallery")
    probe_words = pack_bits(binarize(probes.rows, gallery.thresholds))
    order = gallery.subject_ids
    out = np.empty((probe_words.shape[0], len(order)), dtype=np.int64)
    for g, sid in enumerate(order):
        templates = gallery.groups[sid]
        xor = probe_words[:, None, :] ^ templates[None, :, :]
        out[:, g] = _popcount(xor).sum(axis=2).min(axis=1)
    return MatchMatrix(out, order, gallery.bit_length)


def cmc(matrix: MatchMatrix, probe_truth) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative match curve over ranks 1..G plus each probe's rank.

    Per probe the groups are ordered by ascending distance (ties by subject
    order); the rank is the true subject's position in that ordering.
    """
    truth = np.asarray(probe_truth)
    order_index = {sid: i for i, sid in enumerate(matrix.subject_order)}
    missing = [t for t in np.unique(truth) if t not in order_index]
    if missing:
        raise ParameterError(f"open-set probes are unsupported; unknown subjects {missing}")
    n, g = matrix.distances.shape
    ranks = np.empty(n, dtype=np.int64)
    for p in range(n):
        row = matrix.distances[p]
        ordering = np.lexsort((np.arange(g), row))  # distance, then subject order
        ranks[p] = int(np.where(ordering == order_index[truth[p]])[0][0]) + 1
    curve = np.array([(ranks <= r).mean() for r in range(1, g + 1)])
    return curve, ranks


@dataclass
class ErrorRates:
    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray
    eer: float
    eer_threshold: float

    def rates_at(self, tau: float) -> tuple[float, float]:
        """(FAR, FRR) at tau on the piecewise-linear curves.

        Integer Hamming distances tie heavily, so the step curves can jump
        by many samples at one value and no deterministic threshold exactly
        equalizes them; the reported EER operating point lives on the
        interpolated (randomized-decision) curves, and consistency checks
        must read the rates the same way.
        """
        return (
            float(np.interp(tau, self.thresholds, self.far)),
            float(np.interp(tau, self.thresholds, self.frr)),
        )


def far_frr_eer(genuine_distances, imposter_distances, bit_length: int | None = None) -> ErrorRates:
    """Sweep accept thresholds over normalized distances.

    Acceptance is distance <= threshold, so FAR is non-decreasing and FRR
    non-increasing in the threshold. The EER is read at the sign change of
    FAR - FRR, linearly interpolating both curves between candidates.
    """
    gen = np.asarray(genuine_distances, dtype=float).ravel()
    imp = np.asarray(imposter_distances, dtype=float).ravel()
    if gen.size == 0 or imp.size == 0:
        raise ParameterError("need both genuine and imposter distances")
    if bit_length:
        gen = gen / bit_length
        imp = imp / bit_length
    pooled = np.unique(np.concatenate([gen, imp]))
    mids = (pooled[1:] + pooled[:-1]) / 2.0
    taus = np.unique(np.concatenate([[pooled[0] - 1.0], pooled, mids]))
    far = np.array([(imp <= t).mean() for t in taus])
    frr = np.array([(gen > t).mean() for t in taus])
    diff = far - frr
    zero = np.where(diff == 0)[0]
    if zero.size:
        # FAR == FRR exactly at a candidate; on a zero plateau all values agree
        i = int(zero[0])
        eer, tau_star = float(far[i]), float(taus[i])
    else:
        i = int(np.where(diff > 0)[0][0]) - 1
        alpha = -diff[i] / (diff[i + 1] - diff[i])
        eer = float(far[i] + alpha * (far[i + 1] - far[i]))
        tau_star = float(taus[i] + alpha * (taus[i + 1] - taus[i]))
    return ErrorRates(taus, far, frr, eer, tau_star)


@dataclass
class AuthDecision:
    accepted: bool
    genuine_distance: int
    imposter_distance: float       # inf when no other subject is enrolled
    normalized_genuine: float


def authenticate_template(probe_values, gallery: TemplateGallery, claimed) -> AuthDecision:
    """Accept iff the probe is strictly closer to the claimed subject's
    templates than to every other subject's (ties reject, fail closed)."""
    if claimed not in gallery.groups:
        raise ParameterError(f"unknown claimed subject {claimed!r}")
    words = pack_bits(binarize(np.asarray(probe_values, dtype=float), gallery.thresholds))
    d_claimed = int(_popcount(gallery.groups[claimed] ^ words).sum(axis=1).min())
    others = [sid for sid in gallery.groups if sid != claimed]
    if others:
        d_other = min(
            int(_popcount(gallery.groups[sid] ^ words).sum(axis=1).min()) for sid in others
        )
    else:
        d_other = float("inf")
    return AuthDecision(
        accepted=d_claimed < d_other,
        genuine_distance=d_claimed,
        imposter_distance=d_other,
        normalized_genuine=d_claimed / gallery.bit_length,
    )


# ---------------------------------------------------------------------------
# reporting helpers

def cmc_to_tsv(curve: np.ndarray) -> str:
    lines = ["rank\tidentification_rate"]
    for r, v in enumerate(curve, start=1):
        lines.append(f"{r}\t{v!r}")
    return "\n".join(lines) + "\n"


def error_rates_to_tsv(rates: ErrorRates) -> str:
    lines = ["threshold\tfar\tfrr"]
    for t, fa, fr in zip(rates.thresholds, rates.far, rates.frr):
        lines.append(f"{t!r}\t{fa!r}\t{fr!r}")
    return "\n".join(lines) + "\n"


@dataclass
class BenchmarkReport:
    template_mean_ms: float
    classifier_mean_ms: float
    n_queries: int
    speedup: float

    def to_dict(self) -> dict:
        return {
            "template_mean_ms": self.template_mean_ms,
            "classifier_mean_ms": self.classifier_mean_ms,
            "n_queries": self.n_queries,
            "speedup": self.speedup,
        }


def benchmark(gallery: TemplateGallery, forest, probes: FeatureMatrix, n_queries: int = 1000) -> BenchmarkReport:
    """Mean per-query latency of template matching vs forest prediction on
    the same feature vectors, single execution lane."""
    rows = probes.rows
    subjects = gallery.subject_ids
    n = rows.shape[0]
    idx = [i % n for i in range(n_queries)]

    t0 = time.perf_counter()
    for i in idx:
        words = pack_bits(binarize(rows[i], gallery.thresholds))
        best = None
        for sid in subjects:
            d = int(_popcount(gallery.groups[sid] ^ words).sum(axis=1).min())
            if best is None or d < best:
                best = d
    template_s = time.perf_counter() - t0

    t1 = time.perf_counter()
    for i in idx:
        forest.predict_proba_one(rows[i])
    classifier_s = time.perf_counter() - t1

    template_ms = template_s / n_queries * 1000.0
    classifier_ms = classifier_s / n_queries * 1000.0
    return BenchmarkReport(
        template_mean_ms=template_ms,
        classifier_mean_ms=classifier_ms,
        n_queries=n_queries,
        speedup=classifier_ms / template_ms if template_ms > 0 else float("inf"),
    )
