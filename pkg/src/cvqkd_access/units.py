"""Shot-noise-normalized units and validated link parameters.

Every variance in this package is expressed in shot-noise units (SNU): the
vacuum quadrature variance is 1. Channel excess noise ``xi`` is referenced at
the channel input, so its contribution to the detected variance is
``eta * T * xi``. This convention is global; all modules assume it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path


class ValidationError(ValueError):
    """One or more parameter invariants are violated.

    Collects every violation instead of stopping at the first, so a bad
    config file is reported in full. ``violations`` is a list of
    ``(field_name, message)`` pairs.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        detail = "; ".join(f"{name}: {msg}" for name, msg in self.violations)
        super().__init__(f"invalid parameters: {detail}")


def db_to_transmittance(loss_db: float) -> float:
    """Convert optical loss in dB to linear transmittance ``10**(-dB/10)``.

    Negative loss is rejected: it would describe gain, which has no place in
    a passive optical plant.
    """
    if not math.isfinite(loss_db) or loss_db < 0:
        raise ValueError(f"loss_db must be finite and >= 0, got {loss_db}")
    return 10.0 ** (-loss_db / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """Protocol, detector, and security parameters of one ONU-OLT link.

    Attributes:
        rep_rate_hz: pulse repetition frequency in Hz.
        duty_cycle: fraction of the period occupied by one pulse, in (0, 1].
        mod_variance_snu: transmitter Gaussian modulation variance V_A (SNU).
        recon_efficiency: reconciliation efficiency beta, in (0, 1].
        det_efficiency: receiver homodyne efficiency eta, in (0, 1].
        elec_noise_snu: receiver electronic noise v_el (SNU), >= 0.
        block_length: total pulses N per security block.
        key_fraction: fraction of the block kept for key extraction; the
            remainder is disclosed for parameter estimation. Strictly in (0, 1).
        security_eps: failure probabilities (eps_pe, eps_smooth, eps_bar) of
            the finite-size analysis, each in (0, 1).
    """

    rep_rate_hz: float = 5e6
    duty_cycle: float = 0.1
    mod_variance_snu: float = 4.0
    recon_efficiency: float = 0.95
    det_efficiency: float = 1.0
    elec_noise_snu: float = 0.0
    block_length: int = 100_000_000
    key_fraction: float = 0.5
    security_eps: tuple[float, float, float] = (1e-10, 1e-10, 1e-10)

    @property
    def pulse_width_ns(self) -> float:
        """Pulse duration in ns, ``duty_cycle / rep_rate_hz`` scaled to ns."""
        return self.duty_cycle / self.rep_rate_hz * 1e9

    @property
    def period_ns(self) -> float:
        """Repetition period in ns."""
        return 1e9 / self.rep_rate_hz

    @property
    def eps_pe(self) -> float:
        return self.security_eps[0]

    @property
    def eps_smooth(self) -> float:
        return self.security_eps[1]

    @property
    def eps_bar(self) -> float:
        return self.security_eps[2]

    @property
    def n_key(self) -> int:
        """Pulses of the block kept for key extraction."""
        return int(round(self.key_fraction * self.block_length))

    @property
    def n_pe(self) -> int:
        """Pulses of the block disclosed for parameter estimation."""
        return self.block_length - self.n_key

    def to_dict(self) -> dict:
        return {
            "rep_rate_hz": self.rep_rate_hz,
            "duty_cycle": self.duty_cycle,
            "mod_variance_snu": self.mod_variance_snu,
            "recon_efficiency": self.recon_efficiency,
            "det_efficiency": self.det_efficiency,
            "elec_noise_snu": self.elec_noise_snu,
            "block_length": self.block_length,
            "key_fraction": self.key_fraction,
            "security_eps": list(self.security_eps),
        }


def _in_unit_interval(x, *, open_left=True, open_right=False) -> bool:
    if not isinstance(x, (int, float)) or not math.isfinite(x):
        return False
    lo_ok = x > 0 if open_left else x >= 0
    hi_ok = x < 1 if open_right else x <= 1
    return lo_ok and hi_ok


def validate_params(raw: SystemParams) -> SystemParams:
    """Check every invariant of ``raw`` and return it unchanged if valid.

    Raises ValidationError naming each violated field; validating an
    already-valid parameter set is a no-op (idempotent).
    """
    bad = []
    if not (isinstance(raw.rep_rate_hz, (int, float)) and math.isfinite(raw.rep_rate_hz) and raw.rep_rate_hz > 0):
        bad.append(("rep_rate_hz", f"must be finite and > 0, got {raw.rep_rate_hz}"))
    if not _in_unit_interval(raw.duty_cycle):
        bad.append(("duty_cycle", f"must be in (0, 1], got {raw.duty_cycle}"))
    if not (isinstance(raw.mod_variance_snu, (int, float)) and math.isfinite(raw.mod_variance_snu) and raw.mod_variance_snu > 0):
        bad.append(("mod_variance_snu", f"must be finite and > 0, got {raw.mod_variance_snu}"))
    if not _in_unit_interval(raw.recon_efficiency):
        bad.append(("recon_efficiency", f"must be in (0, 1], got {raw.recon_efficiency}"))
    if not _in_unit_interval(raw.det_efficiency):
        bad.append(("det_efficiency", f"must be in (0, 1], got {raw.det_efficiency}"))
    if not (isinstance(raw.elec_noise_snu, (int, float)) and math.isfinite(raw.elec_noise_snu) and raw.elec_noise_snu >= 0):
        bad.append(("elec_noise_snu", f"must be finite and >= 0, got {raw.elec_noise_snu}"))
    if not (isinstance(raw.block_length, int) and raw.block_length >= 2):
        bad.append(("block_length", f"must be an integer >= 2, got {raw.block_length}"))
    if not _in_unit_interval(raw.key_fraction, open_right=True):
        bad.append(("key_fraction", f"must be strictly in (0, 1), got {raw.key_fraction}"))
    eps = raw.security_eps
    if not (isinstance(eps, tuple) and len(eps) == 3 and all(_in_unit_interval(e, open_right=True) for e in eps)):
        bad.append(("security_eps", f"must be three probabilities in (0, 1), got {eps!r}"))
    if bad:
        raise ValidationError(bad)
    return raw


_PARAM_FIELDS = tuple(f.name for f in fields(SystemParams))


def params_from_dict(doc: dict) -> SystemParams:
    """Build and validate SystemParams from a JSON-style mapping.

    Unknown keys are rejected so typos in scientific configs surface
    immediately. A redundant ``pulse_width_ns`` key is accepted but cross
    checked against the derived value.
    """
    if not isinstance(doc, dict):
        raise ValidationError([("params", f"expected an object, got {type(doc).__name__}")])
    unknown = sorted(set(doc) - set(_PARAM_FIELDS) - {"pulse_width_ns"})
    if unknown:
        raise ValidationError([(k, "unknown field") for k in unknown])
    kwargs = {k: v for k, v in doc.items() if k in _PARAM_FIELDS}
    if "security_eps" in kwargs:
        eps = kwargs["security_eps"]
        if not isinstance(eps, (list, tuple)):
            raise ValidationError([("security_eps", f"expected a list of three values, got {eps!r}")])
        kwargs["security_eps"] = tuple(eps)
    if "block_length" in kwargs:
        bl = kwargs["block_length"]
        if isinstance(bl, float):
            if not bl.is_integer():
                raise ValidationError([("block_length", f"must be an integer, got {bl}")])
            kwargs["block_length"] = int(bl)
    params = validate_params(SystemParams(**kwargs))
    if "pulse_width_ns" in doc:
        stated = doc["pulse_width_ns"]
        if not (isinstance(stated, (int, float)) and math.isclose(stated, params.pulse_width_ns, rel_tol=1e-9)):
            raise ValidationError([
                ("pulse_width_ns",
                 f"stated {stated} ns conflicts with duty_cycle/rep_rate_hz = {params.pulse_width_ns} ns"),
            ])
    return params


def params_from_json(path) -> SystemParams:
    """Load SystemParams from a JSON file."""
    with open(Path(path), encoding="utf-8") as fh:
        return params_from_dict(json.load(fh))


@dataclass(frozen=True)
class ChannelModel:
    """Aggregate ONU-to-OLT optical channel: total loss and excess noise.

    ``loss_db`` is the one-number total (fiber plus distribution network);
    ``excess_noise_snu`` is the input-referred excess noise xi.
    """

    loss_db: float
    excess_noise_snu: float = 0.0

    def __post_init__(self):
        bad = []
        if not (isinstance(self.loss_db, (int, float)) and math.isfinite(self.loss_db) and self.loss_db >= 0):
            bad.append(("loss_db", f"must be finite and >= 0, got {self.loss_db}"))
        if not (isinstance(self.excess_noise_snu, (int, float)) and math.isfinite(self.excess_noise_snu)
                and self.excess_noise_snu >= 0):
            bad.append(("excess_noise_snu", f"must be finite and >= 0, got {self.excess_noise_snu}"))
        if bad:
            raise ValidationError(bad)

    @property
    def transmittance(self) -> float:
        """Linear transmittance ``10**(-loss_db/10)``."""
        return db_to_transmittance(self.loss_db)

    def to_dict(self) -> dict:
        return {"loss_db": self.loss_db, "excess_noise_snu": self.excess_noise_snu}


_CHANNEL_FIELDS = ("loss_db", "excess_noise_snu")


def channel_from_dict(doc: dict) -> ChannelModel:
    """Build a ChannelModel from a JSON-style mapping; unknown keys rejected."""
    if not isinstance(doc, dict):
        raise ValidationError([("channel", f"expected an object, got {type(doc).__name__}")])
    unknown = sorted(set(doc) - set(_CHANNEL_FIELDS) - {"transmittance"})
    if unknown:
        raise ValidationError([(k, "unknown field") for k in unknown])
    model = ChannelModel(**{k: v for k, v in doc.items() if k in _CHANNEL_FIELDS})
    if "transmittance" in doc:
        stated = doc["transmittance"]
        if not (isinstance(stated, (int, float)) and math.isclose(stated, model.transmittance, rel_tol=1e-9)):
            raise ValidationError([
                ("transmittance", f"stated {stated} conflicts with 10**(-loss_db/10) = {model.transmittance}"),
            ])
    return model
