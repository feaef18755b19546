"""
Marking a model and catching a tamper
=====================================

The whole workflow in one sitting: build a toy checkpoint, stamp a hidden
message into its weights, confirm the stamp reads back cleanly, then poke a
single weight and watch verification fail.
"""

import numpy as np

from whstamp import WatermarkKey, embed, extract, recommend_payload_bits

# Step 1: fabricate a checkpoint to protect.
#
# Any dict of float arrays works; real use would come from load_container().
rng = np.random.default_rng(7)
model = {
    "conv1/kernel": rng.normal(0.0, 0.1, size=(3, 3, 8, 16)),
    "conv1/bias": rng.normal(0.0, 0.1, size=(16,)),
    "dense/kernel": rng.normal(0.0, 0.1, size=(2048, 64)),
    "dense/bias": rng.normal(0.0, 0.1, size=(64,)),
}
n_params = sum(a.size for a in model.values())
print(f"model: {len(model)} tensors, {n_params} parameters")

# Step 2: choose a key and size the payload.
#
# The key is 32 secret bytes; everything about where the bits go is derived
# from it. recommend_payload_bits tells us how large a message fits at a
# given hiding density (here 1% of capacity, minus framing overhead).
key = WatermarkKey(bytes(range(32, 64)))
budget_bits = recommend_payload_bits(n_params, density=0.01)
print(f"payload budget at 1% density: {budget_bits} bits")

payload = b"release 2.3.1, signed off 2026-08-15"
assert len(payload) * 8 <= budget_bits

# Step 3: embed. The result is a new dict of float64 tensors; the original
# is untouched. The weights move by less than one part in ~1e4.
marked = embed(model, key, payload)
worst = max(
    float(np.max(np.abs(marked[name] - model[name]))) for name in model
)
print(f"largest single-weight change from embedding: {worst:.3e}")

# Step 4: verify with the right key. The hidden frame carries a checksum,
# so verified=True also returns the exact payload.
report = extract(marked, key)
print(f"verified: {report.verified}, payload: {report.payload!r}")
assert report.verified and report.payload == payload

# Step 5: verify with a wrong key. The read positions and unshuffling are
# all key-dependent, so a wrong key sees checksum garbage.
imposter = WatermarkKey(bytes(range(100, 132)))
print(f"wrong key verifies: {extract(marked, imposter).verified}")

# Step 6: tamper with exactly one weight and check again.
tampered = {name: arr.copy() for name, arr in marked.items()}
tampered["dense/kernel"][17, 3] += 1e-3
report = extract(tampered, key)
print(f"after a 1e-3 bump to one weight, verified: {report.verified}")
assert not report.verified

# A reference copy of the framed payload lets extract() also report the
# bit error rate of the damaged read-back.
from whstamp.core import frame_payload

report = extract(tampered, key, reference=frame_payload(payload))
print(f"bit error rate against the reference frame: {report.ber:.4f}")
