"""Drive the enrollment/authentication HTTP API end to end.

Two synthetic typists enroll; the first then authenticates with a fresh
trial of their own timing profile (accept) and with the second typist's
profile claimed under the first identity (reject). The same endpoints back
the browser UI in frontend/.
"""

import tempfile

import numpy as np
from fastapi.testclient import TestClient

from biokey import dataio
from biokey.service import create_app

PASSWORD = list(dataio.PASSWORD_KEYS)


def typing_profile(seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(60, 180, 12), rng.uniform(80, 350, 11)


def one_trial(holds, dds, seed):
    rng = np.random.default_rng(seed)
    downs = [500.0]
    for i in range(11):
        downs.append(downs[-1] + max(30.0, dds[i] + rng.normal(0, 4.0)))
    events = []
    for i, key in enumerate(PASSWORD):
        up = downs[i] + max(20.0, holds[i] + rng.normal(0, 4.0))
        nxt = [j for j in range(i + 1, 12) if PASSWORD[j] == key]
        if nxt and up >= downs[nxt[0]]:
            up = downs[nxt[0]] - 1.0
        events.append({"key": key, "action": "down", "t_ms": downs[i]})
        events.append({"key": key, "action": "up", "t_ms": up})
    return sorted(events, key=lambda e: e["t_ms"])


state_dir = tempfile.mkdtemp(prefix="biokey-state-")
client = TestClient(create_app(state_dir))

for user, seed in [("alice", 101), ("bob", 202)]:
    holds, dds = typing_profile(seed)
    token = client.post(
        "/api/enroll/start", json={"user_id": user, "trials": 5}
    ).json()["token"]
    for t in range(5):
        r = client.post(
            "/api/enroll/trial",
            json={"token": token, "events": one_trial(holds, dds, seed * 10 + t)},
        )
        assert r.status_code == 200, r.text
    result = client.post("/api/enroll/finish", json={"token": token}).json()
    print(f"enrolled {result['user_id']} with {result['templates']} templates")

print("\nusers:", client.get("/api/users").json()["users"])

holds_a, dds_a = typing_profile(101)
holds_b, dds_b = typing_profile(202)
for label, events, method in [
    ("alice as alice (template)  ", one_trial(holds_a, dds_a, 999), "template"),
    ("bob's timing as alice      ", one_trial(holds_b, dds_b, 998), "template"),
    ("alice as alice (classifier)", one_trial(holds_a, dds_a, 997), "classifier"),
    ("bob's timing as alice (clf)", one_trial(holds_b, dds_b, 996), "classifier"),
]:
    r = client.post(
        "/api/auth", json={"user_id": "alice", "events": events, "method": method}
    ).json()
    print(f"{label} -> {r['decision']:6s} score={r['score']:.3f} "
          f"latency={r['latency_ms']:.2f} ms")

print(f"\nstate persisted under {state_dir}")
