"""Tamper attacks and the detection-measurement harness.

Attacks are pure copy-modify transforms on a checkpoint: additive Gaussian
noise on a random parameter subset, zeroing a contiguous range, or
overwriting a range with a constant. Their randomness comes from seeds
derived under a dedicated label, never from the watermark seeds, so
experiments are reproducible without coupling to the protocol.

The Gaussian attack draws its victim indices as a prefix of one seeded
without-replacement stream and its noise values as a prefix of a second
stream. Larger fractions therefore perturb a superset of the parameters a
smaller fraction perturbs, with identical noise on the shared ones —
common-random-numbers coupling that makes measured BER behave monotonically
across a sweep instead of jittering between independent samples.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .container import flatten, restore
from .core import Bitstream, WatermarkConfig, embed, extract, frame_payload
from .keys import LABEL_ATTACK, RandomStream, SeedValue, WatermarkKey, derive_seed, derive_subseed


@dataclass(frozen=True)
class AttackSpec:
    """One parameter-space tampering action.

    mode "gaussian" uses fraction/sigma/seed_label; "zero_range" and
    "replace_value" use tensor/start/stop (+ value for replace).
    """

    mode: str
    fraction: float | None = None
    sigma: float = 1.0
    tensor: str | None = None
    start: int | None = None
    stop: int | None = None
    value: float = 0.0
    seed_label: str = "0"

    def __post_init__(self) -> None:
        if self.mode == "gaussian":
            if self.fraction is None or not 0.0 <= self.fraction <= 1.0:
                raise ValueError("gaussian attack needs fraction in [0, 1]")
        elif self.mode in ("zero_range", "replace_value"):
            if self.tensor is None or self.start is None or self.stop is None:
                raise ValueError(f"{self.mode} attack needs tensor/start/stop")
            if self.start < 0 or self.stop < self.start:
                raise ValueError("need 0 <= start <= stop")
        else:
            raise ValueError(f"unknown attack mode {self.mode!r}")

    def describe(self) -> str:
        if self.mode == "gaussian":
            return repr(self.fraction)
        return f"{self.tensor}[{self.start}:{self.stop}]"


@dataclass(frozen=True)
class AttackReport:
    """Detection outcome for one attack on one watermarked model."""

    attack: AttackSpec | None
    modified_count: int
    ber: float | None
    verified: bool
    wall_time_s: float

    def to_dict(self) -> dict:
        # wall time deliberately excluded: serialized reports must be
        # byte-identical across runs
        return {
            "attack": self.attack.describe() if self.attack else "baseline",
            "modified_count": self.modified_count,
            "ber": self.ber,
            "verified": self.verified,
        }


def _copy(tensors: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: v.copy() for k, v in tensors.items()}


def gaussian_attack(
    tensors: dict[str, np.ndarray],
    fraction: float,
    sigma: float,
    seed: SeedValue,
) -> dict[str, np.ndarray]:
    """Add N(0, sigma^2) noise to ceil(fraction * n_p) distinct parameters."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    flat, manifest = flatten(tensors, require_finite=False)
    n_p = flat.size
    count = int(np.ceil(fraction * n_p))
    if count == 0:
        return _copy(tensors)
    idx = RandomStream(derive_subseed(seed, "index")).sample_distinct(count, n_p)
    noise = RandomStream(derive_subseed(seed, "noise")).gaussians(count)
    flat[idx] += sigma * noise
    return restore(flat, manifest)


def _range_attack(
    tensors: dict[str, np.ndarray], tensor: str, start: int, stop: int
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    if tensor not in tensors:
        raise KeyError(f"no tensor named {tensor!r}")
    out = _copy(tensors)
    view = out[tensor].reshape(-1)
    if not 0 <= start <= stop <= view.size:
        raise IndexError(
            f"range [{start}, {stop}) outside tensor of {view.size} elements"
        )
    return out, view


def zero_attack(
    tensors: dict[str, np.ndarray], tensor: str, start: int, stop: int
) -> dict[str, np.ndarray]:
    """Zero a contiguous run of one tensor's elements (flat order)."""
    out, view = _range_attack(tensors, tensor, start, stop)
    view[start:stop] = 0.0
    return out


def replace_attack(
    tensors: dict[str, np.ndarray],
    tensor: str,
    start: int,
    stop: int,
    value: float,
) -> dict[str, np.ndarray]:
    """Overwrite a contiguous run of one tensor's elements with a constant."""
    out, view = _range_attack(tensors, tensor, start, stop)
    view[start:stop] = value
    return out


def apply_attack(
    tensors: dict[str, np.ndarray], spec: AttackSpec, key: WatermarkKey
) -> tuple[dict[str, np.ndarray], int]:
    """Run one attack; returns (attacked tensors, modified parameter count)."""
    if spec.mode == "gaussian":
        seed = derive_subseed(derive_seed(key, LABEL_ATTACK), spec.seed_label)
        n_p = sum(t.size for t in tensors.values())
        count = int(np.ceil(spec.fraction * n_p))
        return gaussian_attack(tensors, spec.fraction, spec.sigma, seed), count
    if spec.mode == "zero_range":
        return zero_attack(tensors, spec.tensor, spec.start, spec.stop), (
            spec.stop - spec.start
        )
    return (
        replace_attack(tensors, spec.tensor, spec.start, spec.stop, spec.value),
        spec.stop - spec.start,
    )


def run_experiment(
    model: dict[str, np.ndarray],
    key: WatermarkKey,
    payload: bytes,
    attacks: list[AttackSpec],
    cfg: WatermarkConfig = WatermarkConfig(),
) -> list[AttackReport]:
    """Embed once, attack fresh copies, measure extraction damage.

    An empty attack list yields the single baseline (unattacked) report.
    """
    marked = embed(model, key, payload, cfg)
    reference = frame_payload(payload)
    reports = []
    if not attacks:
        t0 = time.perf_counter()
        rep = extract(marked, key, cfg, reference)
        reports.append(
            AttackReport(None, 0, rep.ber, rep.verified, time.perf_counter() - t0)
        )
        return reports
    for spec in attacks:
        t0 = time.perf_counter()
        attacked, count = apply_attack(marked, spec, key)
        rep = extract(attacked, key, cfg, reference)
        reports.append(
            AttackReport(spec, count, rep.ber, rep.verified, time.perf_counter() - t0)
        )
    return reports


@dataclass(frozen=True)
class SweepRow:
    """Averaged detection stats for one noise fraction."""

    fraction: float
    modified_count: int
    ber: float
    verified: bool


def sweep_gaussian(
    model: dict[str, np.ndarray],
    key: WatermarkKey,
    payload: bytes,
    fractions: list[float],
    trials: int = 20,
    sigma: float = 1.0,
    cfg: WatermarkConfig = WatermarkConfig(),
) -> list[SweepRow]:
    """BER/verdict per fraction, averaged over seeded trials.

    Trial t uses the same derived seed at every fraction, so rows are
    coupled (see module doc) and the mean BER column is monotone in
    expectation. The verified column is the AND over trials.
    """
    marked = embed(model, key, payload, cfg)
    reference = frame_payload(payload)
    base = derive_seed(key, LABEL_ATTACK)
    rows = []
    for fraction in fractions:
        bers = []
        all_ok = True
        count = 0
        for t in range(trials):
            seed = derive_subseed(base, f"trial-{t}")
            if fraction == 0.0:
                attacked = marked
                count = 0
            else:
                attacked = gaussian_attack(marked, fraction, sigma, seed)
                count = int(np.ceil(fraction * sum(x.size for x in model.values())))
            rep = extract(attacked, key, cfg, reference)
            bers.append(rep.ber)
            all_ok = all_ok and rep.verified
        rows.append(
            SweepRow(fraction, count, float(np.mean(bers)), all_ok)
        )
    return rows


def sweep_to_csv(rows: list[SweepRow]) -> str:
    """Render sweep rows as CSV, byte-deterministic for identical inputs."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["fraction", "modified_count", "ber", "verified"])
    for row in rows:
        writer.writerow(
            [repr(row.fraction), row.modified_count, f"{row.ber:.8f}",
             "true" if row.verified else "false"]
        )
    return buf.getvalue()


def reports_to_csv(reports: list[AttackReport]) -> str:
    """Render attack reports as CSV (fraction-or-range first column)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["attack", "modified_count", "ber", "verified"])
    for rep in reports:
        writer.writerow(
            [
                rep.attack.describe() if rep.attack else "baseline",
                rep.modified_count,
                "" if rep.ber is None else f"{rep.ber:.8f}",
                "true" if rep.verified else "false",
            ]
        )
    return buf.getvalue()
