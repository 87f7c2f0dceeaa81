"""Monte Carlo generation of Gaussian-modulated quadrature data.

One quadrature is drawn per pulse (the homodyne receiver picks a basis; the
statistics are basis-symmetric, so the basis itself is not modeled). The
measured quadrature follows

    x_B = sqrt(eta * T) * x_A + z,    Var(z) = 1 + eta*T*xi + v_el   (SNU)

so Var(x_B) = eta*T*V_A + 1 + eta*T*xi + v_el. Calibration frames are taken
with the signal blocked and carry shot plus electronic noise only.

All randomness flows through named substreams derived from one master seed,
so per-ONU and per-chunk generation is reproducible and order-independent.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .units import ChannelModel, SystemParams, channel_from_dict, params_from_dict


class CalibrationError(ValueError):
    """Calibration frames cannot yield a positive shot-noise estimate."""


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"stream keys must be non-negative, got {key}")
        return int(key)
    if isinstance(key, str):
        return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "big")
    raise TypeError(f"stream key must be int or str, got {type(key).__name__}")


def substream(seed: int, *keys) -> np.random.Generator:
    """Deterministic named RNG substream.

    String keys are hashed (SHA-256), so ``substream(seed, "onu-1", 3)``
    yields the same stream on every platform and run, independent of how
    many other streams were created or in which order.
    """
    entropy = [_key_to_int(seed)] + [_key_to_int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def modulate(n: int, params: SystemParams, rng: np.random.Generator) -> np.ndarray:
    """Draw n transmitter quadratures: i.i.d. N(0, mod_variance_snu)."""
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    return rng.normal(0.0, math.sqrt(params.mod_variance_snu), size=n)


def transmit_and_detect(x_a: np.ndarray, channel: ChannelModel, params: SystemParams,
                        rng: np.random.Generator) -> np.ndarray:
    """Push transmitter quadratures through the channel and homodyne receiver."""
    eta = params.det_efficiency
    t = channel.transmittance
    gain = math.sqrt(eta * t)
    noise_var = 1.0 + eta * t * channel.excess_noise_snu + params.elec_noise_snu
    return gain * np.asarray(x_a) + rng.normal(0.0, math.sqrt(noise_var), size=len(x_a))


def calibration_frames(n: int, params: SystemParams, rng: np.random.Generator) -> np.ndarray:
    """Detector samples with the signal blocked: vacuum plus electronic noise."""
    if n < 1:
        raise ValueError(f"need at least one calibration sample, got n={n}")
    return rng.normal(0.0, math.sqrt(1.0 + params.elec_noise_snu), size=n)


def calibrate_snu(cal_samples, elec_noise_known: float | None = None) -> float:
    """Estimate the shot-noise variance from signal-blocked frames.

    Returns the sample variance of the calibration frames minus the known
    electronic noise (if provided). Raw detector data is divided by the
    square root of this estimate to land on the SNU scale; on synthetic
    SNU-native data the estimate converges to 1.
    """
    cal = np.asarray(cal_samples, dtype=float)
    if cal.size < 2:
        raise ValueError(f"need at least 2 calibration samples, got {cal.size}")
    estimate = float(np.var(cal, ddof=1))
    if elec_noise_known is not None:
        estimate -= elec_noise_known
    if estimate <= 0:
        raise CalibrationError(
            f"shot-noise estimate {estimate} is not positive; calibration frames are "
            "degenerate or the stated electronic noise is too large")
    return estimate


@dataclass(frozen=True)
class QuadratureDataset:
    """Paired transmitter/receiver quadratures plus calibration frames.

    ``ground_truth`` carries the (ChannelModel, SystemParams) that generated
    the data; it is present only for synthetic datasets.
    """

    alice: np.ndarray
    bob: np.ndarray
    calibration: np.ndarray
    seed: int
    ground_truth: tuple[ChannelModel, SystemParams] | None = None

    def __post_init__(self):
        if len(self.alice) != len(self.bob):
            raise ValueError(f"alice ({len(self.alice)}) and bob ({len(self.bob)}) lengths differ")
        if len(self.alice) < 1:
            raise ValueError("dataset must contain at least one sample pair")
        if len(self.calibration) < 1:
            raise ValueError("dataset must contain at least one calibration sample")

    def __len__(self) -> int:
        return len(self.alice)


def _chunk_sizes(n: int, chunks: int) -> list[int]:
    base, extra = divmod(n, chunks)
    return [base + (1 if i < extra else 0) for i in range(chunks)]


def simulate_dataset(params: SystemParams, channel: ChannelModel, n: int, seed: int, *,
                     onu_id: str = "onu", n_cal: int | None = None,
                     chunks: int = 1) -> QuadratureDataset:
    """Generate a synthetic dataset of n quadrature pairs.

    ``chunks`` splits generation into independently seeded pieces (substream
    per chunk), so chunked runs can execute concurrently and concatenate to
    the same statistics as a single run. The output is a pure function of
    (seed, onu_id, chunks, n, params, channel).
    """
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    if chunks < 1 or chunks > n:
        raise ValueError(f"chunks must be in [1, n], got {chunks}")
    if n_cal is None:
        n_cal = max(2, n // 10)
    alice_parts, bob_parts = [], []
    for ci, size in enumerate(_chunk_sizes(n, chunks)):
        rng = substream(seed, onu_id, "quadratures", ci)
        x_a = modulate(size, params, rng)
        x_b = transmit_and_detect(x_a, channel, params, rng)
        alice_parts.append(x_a)
        bob_parts.append(x_b)
    cal = calibration_frames(n_cal, params, substream(seed, onu_id, "calibration"))
    return QuadratureDataset(
        alice=np.concatenate(alice_parts),
        bob=np.concatenate(bob_parts),
        calibration=cal,
        seed=seed,
        ground_truth=(channel, params),
    )


def write_dataset_csv(dataset: QuadratureDataset, path, *, onu_id: str = "onu") -> dict:
    """Write a dataset as CSV plus a JSON sidecar.

    Layout for ``<stem>.csv``: columns ``index,x_A,x_B``; calibration frames
    go to ``<stem>.cal.csv`` (columns ``index,sample``); the sidecar
    ``<stem>.json`` records seed, generation parameters, and ground truth.
    Floats are written with 17 significant digits, so a read-back is exact.
    Returns the sidecar document.
    """
    path = Path(path)
    n = len(dataset)
    idx = np.arange(n)
    data = np.column_stack([idx, dataset.alice, dataset.bob])
    np.savetxt(path, data, fmt=["%d", "%.17g", "%.17g"], delimiter=",",
               header="index,x_A,x_B", comments="")
    cal_path = path.with_suffix(".cal.csv")
    cal = np.column_stack([np.arange(len(dataset.calibration)), dataset.calibration])
    np.savetxt(cal_path, cal, fmt=["%d", "%.17g"], delimiter=",",
               header="index,sample", comments="")
    sidecar = {
        "onu_id": onu_id,
        "seed": dataset.seed,
        "n": n,
        "n_calibration": len(dataset.calibration),
        "calibration_file": cal_path.name,
        "channel": dataset.ground_truth[0].to_dict() if dataset.ground_truth else None,
        "params": dataset.ground_truth[1].to_dict() if dataset.ground_truth else None,
    }
    with open(path.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar


def read_dataset_csv(path) -> QuadratureDataset:
    """Read a dataset written by write_dataset_csv (CSV + sidecar)."""
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    sidecar_path = path.with_suffix(".json")
    with open(sidecar_path, encoding="utf-8") as fh:
        sidecar = json.load(fh)
    cal = np.loadtxt(path.parent / sidecar["calibration_file"], delimiter=",",
                     skiprows=1, ndmin=2)
    ground_truth = None
    if sidecar.get("channel") is not None and sidecar.get("params") is not None:
        ground_truth = (channel_from_dict(sidecar["channel"]), params_from_dict(sidecar["params"]))
    return QuadratureDataset(
        alice=data[:, 1],
        bob=data[:, 2],
        calibration=cal[:, 1],
        seed=int(sidecar["seed"]),
        ground_truth=ground_truth,
    )
