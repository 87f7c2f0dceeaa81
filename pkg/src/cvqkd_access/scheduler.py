"""Time-slot allocation for the shared upstream fiber.

A repetition period of ``1e9 / rep_rate_hz`` ns is divided into
``floor(period / slot_width)`` slots; each ONU owns one slot (its quantum
signal and local oscillator both live inside it, so the slot is the atomic
unit here). Slot distance is circular because the pulse train is periodic:
``d(i, j) = min(|i-j|, n_slots - |i-j|)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

from .units import ValidationError


class ScheduleError(Exception):
    """Slot allocation failed (schedule full, or ONU not assigned)."""


def max_onus(rep_rate_hz: float, slot_width_ns: float) -> int:
    """Largest ONU count a period can hold: ``floor(period_ns / slot_width_ns)``.

    Returns 0 when the slot is wider than the period (infeasible).
    """
    if rep_rate_hz <= 0 or slot_width_ns <= 0:
        raise ValueError("rep_rate_hz and slot_width_ns must both be positive")
    period_ns = 1e9 / rep_rate_hz
    return int(period_ns // slot_width_ns)


def circular_slot_distance(i: int, j: int, n_slots: int) -> int:
    """Distance between slots on the periodic slot ring."""
    if n_slots < 1:
        raise ValueError("n_slots must be >= 1")
    d = abs(i - j) % n_slots
    return min(d, n_slots - d)


@dataclass(frozen=True)
class SlotSchedule:
    """Immutable assignment of ONUs to slots within one repetition period."""

    period_ns: float
    slot_width_ns: float
    assignments: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.period_ns <= 0 or self.slot_width_ns <= 0:
            raise ValidationError([("slot_width_ns", "period and slot width must be positive")])
        n = self.n_slots
        if n < 1:
            raise ValidationError([("slot_width_ns",
                                    f"slot width {self.slot_width_ns} ns exceeds period {self.period_ns} ns")])
        slots = list(self.assignments.values())
        if len(set(slots)) != len(slots):
            raise ValidationError([("assignments", "two ONUs share a slot")])
        for onu, s in self.assignments.items():
            if not (isinstance(s, int) and 0 <= s < n):
                raise ValidationError([("assignments", f"{onu}: slot {s} outside [0, {n})")])

    @classmethod
    def empty(cls, rep_rate_hz: float, slot_width_ns: float) -> "SlotSchedule":
        return cls(period_ns=1e9 / rep_rate_hz, slot_width_ns=slot_width_ns)

    @property
    def n_slots(self) -> int:
        return int(self.period_ns // self.slot_width_ns)

    def occupied(self) -> list[int]:
        return sorted(self.assignments.values())

    def free_slots(self) -> list[int]:
        taken = set(self.assignments.values())
        return [s for s in range(self.n_slots) if s not in taken]

    def with_assignment(self, onu_id: str, slot: int) -> "SlotSchedule":
        """New schedule with one extra ONU; the original is untouched."""
        if onu_id in self.assignments:
            raise ScheduleError(f"ONU {onu_id!r} already assigned to slot {self.assignments[onu_id]}")
        return SlotSchedule(self.period_ns, self.slot_width_ns, {**self.assignments, onu_id: slot})

    def to_dict(self) -> dict:
        return {
            "period_ns": self.period_ns,
            "slot_width_ns": self.slot_width_ns,
            "n_slots": self.n_slots,
            "assignments": dict(sorted(self.assignments.items())),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SlotSchedule":
        return cls(doc["period_ns"], doc["slot_width_ns"], dict(doc["assignments"]))


def assign_farthest(schedule: SlotSchedule, onu_id: str) -> SlotSchedule:
    """Place ``onu_id`` in the free slot farthest from every occupied slot.

    "Farthest" maximizes the minimum circular slot distance to the occupied
    set; ties go to the lowest slot index. An empty schedule gets slot 0.
    Raises ScheduleError when no slot is free.
    """
    free = schedule.free_slots()
    if not free:
        raise ScheduleError(
            f"no free slot for ONU {onu_id!r}: all {schedule.n_slots} slots occupied")
    occupied = schedule.occupied()
    if not occupied:
        return schedule.with_assignment(onu_id, free[0])
    best_slot, best_dist = None, -1
    for s in free:  # ascending, so the first maximum wins ties
        d = min(circular_slot_distance(s, o, schedule.n_slots) for o in occupied)
        if d > best_dist:
            best_slot, best_dist = s, d
    return schedule.with_assignment(onu_id, best_slot)


@dataclass(frozen=True)
class CrosstalkTable:
    """Additive excess noise (SNU) caused by a neighbor at a given slot distance.

    The table is empirical: values need not decrease with distance, but they
    must be finite and non-negative. Distances beyond the table fall back to
    ``default_beyond``.
    """

    entries: dict
    default_beyond: float
    source: str = "inline"

    def __post_init__(self):
        bad = []
        for d, v in self.entries.items():
            if not (isinstance(d, int) and d >= 1):
                bad.append(("entries", f"slot distance {d!r} must be an integer >= 1"))
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                bad.append(("entries", f"noise at distance {d} must be finite and >= 0, got {v}"))
        if not (isinstance(self.default_beyond, (int, float)) and math.isfinite(self.default_beyond)
                and self.default_beyond >= 0):
            bad.append(("default_beyond", f"must be finite and >= 0, got {self.default_beyond}"))
        if bad:
            raise ValidationError(bad)

    def noise_at(self, distance: int) -> float:
        """Additive noise for one neighbor at the given circular slot distance."""
        if distance < 1:
            raise ValueError(f"slot distance must be >= 1, got {distance}")
        return self.entries.get(distance, self.default_beyond)

    def to_dict(self) -> dict:
        return {
            "entries": {str(d): v for d, v in sorted(self.entries.items())},
            "default_beyond": self.default_beyond,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, doc: dict, source: str = "inline") -> "CrosstalkTable":
        entries = {int(d): float(v) for d, v in doc["entries"].items()}
        default = doc.get("default_beyond")
        if default is None:
            default = entries[max(entries)]
        return cls(entries=entries, default_beyond=float(default), source=source)

    @classmethod
    def from_json(cls, path) -> "CrosstalkTable":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh), source=str(path))

    @classmethod
    def default(cls) -> "CrosstalkTable":
        """Bundled estimated table (see data/crosstalk_default.json)."""
        from importlib.resources import files

        res = files("cvqkd_access.data").joinpath("crosstalk_default.json")
        return cls.from_dict(json.loads(res.read_text(encoding="utf-8")),
                             source="builtin:crosstalk_default.json")


def crosstalk_noise(schedule: SlotSchedule, onu_id: str, table: CrosstalkTable) -> float:
    """Total additive excess noise on one ONU from every other occupied slot.

    Contributions are summed linearly over neighbors; a lone ONU gets 0.
    """
    if onu_id not in schedule.assignments:
        raise ScheduleError(f"ONU {onu_id!r} is not assigned in this schedule")
    own = schedule.assignments[onu_id]
    n = schedule.n_slots
    return math.fsum(
        table.noise_at(circular_slot_distance(own, slot, n))
        for other, slot in schedule.assignments.items()
        if other != onu_id
    )


def check_overlap(pulse_trains: dict, period_ns: float) -> list[tuple[str, str]]:
    """Find every pair of ONUs whose pulse intervals intersect modulo the period.

    ``pulse_trains`` maps ONU id to ``(offset_ns, pulse_width_ns)``; intervals
    are half-open ``[offset, offset + width)`` on the periodic time axis. An
    empty result means the arrangement is feasible.
    """
    if period_ns <= 0:
        raise ValueError("period_ns must be positive")
    for onu, (offset, width) in pulse_trains.items():
        if not (0 <= offset < period_ns):
            raise ValueError(f"{onu}: offset {offset} ns outside [0, {period_ns}) ns")
        if not (0 < width <= period_ns):
            raise ValueError(f"{onu}: pulse width {width} ns outside (0, {period_ns}] ns")
    collisions = []
    for (a, (oa, wa)), (b, (ob, wb)) in combinations(sorted(pulse_trains.items()), 2):
        if ((ob - oa) % period_ns) < wa or ((oa - ob) % period_ns) < wb:
            collisions.append((a, b))
    return collisions


def odn_insertion_db(odn_kind: str, n_onus: int, *,
                     dwdm_insertion_db: float = 1.5,
                     bs_excess_db: float = 0.5) -> float:
    """Count-dependent insertion loss of the distribution network, in dB.

    A splitter-based plant loses ``10*log10(n)`` per port plus a fixed excess;
    a wavelength-multiplexed plant has a fixed per-channel insertion loss
    regardless of how many ONUs attach. The defaults are documented
    assumptions, not measured values.
    """
    if n_onus < 1:
        raise ValueError("n_onus must be >= 1")
    if odn_kind == "dwdm":
        return dwdm_insertion_db
    if odn_kind == "bs":
        return 10.0 * math.log10(n_onus) + bs_excess_db
    raise ValueError(f"unknown odn_kind {odn_kind!r}; expected 'bs' or 'dwdm'")
