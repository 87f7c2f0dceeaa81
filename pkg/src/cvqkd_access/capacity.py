"""Multi-ONU network analyses: per-ONU rates and total upstream capacity.

ONUs join one at a time and each takes the free slot farthest from the
occupied ones. Every ONU's effective excess noise is its intrinsic value
plus the summed slot-crosstalk contributions of its neighbors, and its key
rate is then evaluated as a single link. Totals use exact summation, so a
zero crosstalk table makes capacity exactly linear in the ONU count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimation import exact_estimate
from .keyrate import KeyRateInputs, asymptotic_rate, finite_size_rate
from .scheduler import (CrosstalkTable, SlotSchedule, assign_farthest,
                        crosstalk_noise, max_onus, odn_insertion_db)
from .units import ChannelModel, SystemParams, ValidationError


def onu_name(index: int) -> str:
    """Canonical id of the index-th ONU to join (1-based)."""
    return f"onu-{index}"


def build_schedule(n_onus: int, rep_rate_hz: float, slot_width_ns: float) -> SlotSchedule:
    """Schedule after n_onus sequential farthest-slot joins."""
    schedule = SlotSchedule.empty(rep_rate_hz, slot_width_ns)
    for i in range(1, n_onus + 1):
        schedule = assign_farthest(schedule, onu_name(i))
    return schedule


@dataclass(frozen=True)
class CapacityScenario:
    """A uniform multi-ONU what-if: every ONU sees the same total loss.

    ``loss_db_per_onu`` is the aggregate ONU-to-OLT loss. With
    ``include_odn_loss`` the count-dependent insertion loss of the chosen
    distribution network ("bs" splitter or "dwdm") is added on top;
    by default the aggregate is taken as already inclusive, matching how
    total link budgets are usually quoted.
    """

    n_onus: int
    loss_db_per_onu: float
    base_excess_noise_snu: float
    params: SystemParams
    crosstalk_table: CrosstalkTable
    slot_width_ns: float = 25.0
    odn_kind: str = "dwdm"
    include_odn_loss: bool = False
    dwdm_insertion_db: float = 1.5
    bs_excess_db: float = 0.5
    asymptotic: bool = False

    def __post_init__(self):
        bad = []
        cap = max_onus(self.params.rep_rate_hz, self.slot_width_ns)
        if not (isinstance(self.n_onus, int) and 1 <= self.n_onus):
            bad.append(("n_onus", f"must be an integer >= 1, got {self.n_onus}"))
        elif self.n_onus > cap:
            bad.append(("n_onus", f"{self.n_onus} exceeds the {cap} slots of this grid"))
        if not (math.isfinite(self.loss_db_per_onu) and self.loss_db_per_onu >= 0):
            bad.append(("loss_db_per_onu", f"must be finite and >= 0, got {self.loss_db_per_onu}"))
        if not (math.isfinite(self.base_excess_noise_snu) and self.base_excess_noise_snu >= 0):
            bad.append(("base_excess_noise_snu",
                        f"must be finite and >= 0, got {self.base_excess_noise_snu}"))
        if self.odn_kind not in ("bs", "dwdm"):
            bad.append(("odn_kind", f"expected 'bs' or 'dwdm', got {self.odn_kind!r}"))
        if bad:
            raise ValidationError(bad)

    def effective_loss_db(self) -> float:
        if not self.include_odn_loss:
            return self.loss_db_per_onu
        return self.loss_db_per_onu + odn_insertion_db(
            self.odn_kind, self.n_onus,
            dwdm_insertion_db=self.dwdm_insertion_db, bs_excess_db=self.bs_excess_db)


def _link_rate_bps(loss_db: float, xi: float, params: SystemParams, asymptotic: bool) -> float:
    channel = ChannelModel(loss_db=loss_db, excess_noise_snu=xi)
    if asymptotic:
        inputs = KeyRateInputs.from_params(params, channel.transmittance, xi)
        return asymptotic_rate(inputs) * params.rep_rate_hz
    est = exact_estimate(channel, params)
    return finite_size_rate(est, params).skr_bps


def per_onu_rates(scenario: CapacityScenario) -> dict[str, float]:
    """Secret key rate (bits/s) of each ONU in the scenario, by join order."""
    schedule = build_schedule(scenario.n_onus, scenario.params.rep_rate_hz,
                              scenario.slot_width_ns)
    loss_db = scenario.effective_loss_db()
    rates = {}
    for i in range(1, scenario.n_onus + 1):
        onu = onu_name(i)
        xi_eff = scenario.base_excess_noise_snu + crosstalk_noise(
            schedule, onu, scenario.crosstalk_table)
        rates[onu] = _link_rate_bps(loss_db, xi_eff, scenario.params, scenario.asymptotic)
    return rates


def network_capacity_curve(loss_db: float, params: SystemParams, table: CrosstalkTable,
                           n_max: int, **scenario_opts) -> list[tuple[int, float]]:
    """Total network throughput (bits/s) for every ONU count 1..n_max."""
    base_xi = scenario_opts.pop("base_excess_noise_snu", 0.018)
    curve = []
    for n in range(1, n_max + 1):
        scenario = CapacityScenario(
            n_onus=n, loss_db_per_onu=loss_db, base_excess_noise_snu=base_xi,
            params=params, crosstalk_table=table, **scenario_opts)
        curve.append((n, math.fsum(per_onu_rates(scenario).values())))
    return curve


def rate_grid(n_onus_values, loss_values, params: SystemParams, table: CrosstalkTable, *,
              view: str = "latest", max_workers: int | None = None,
              **scenario_opts) -> np.ndarray:
    """Per-ONU rate (bits/s) over an (ONU count) x (loss) grid.

    ``view="latest"`` reports the most recently joined ONU under farthest
    assignment; ``view="worst"`` reports the minimum over ONUs. Rows follow
    ``n_onus_values``, columns follow ``loss_values``; cells are independent,
    so they may be computed concurrently without changing the result.
    """
    if view not in ("latest", "worst"):
        raise ValueError(f"view must be 'latest' or 'worst', got {view!r}")
    n_values = list(n_onus_values)
    losses = list(loss_values)
    if not n_values or not losses:
        raise ValueError("n_onus_values and loss_values must be non-empty")
    base_xi = scenario_opts.pop("base_excess_noise_snu", 0.018)
    grid = np.empty((len(n_values), len(losses)))

    def cell(i: int, j: int) -> None:
        scenario = CapacityScenario(
            n_onus=n_values[i], loss_db_per_onu=losses[j],
            base_excess_noise_snu=base_xi, params=params, crosstalk_table=table,
            **scenario_opts)
        rates = per_onu_rates(scenario)
        grid[i, j] = rates[onu_name(n_values[i])] if view == "latest" else min(rates.values())

    pairs = [(i, j) for i in range(len(n_values)) for j in range(len(losses))]
    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            list(pool.map(lambda ij: cell(*ij), pairs))
    else:
        for i, j in pairs:
            cell(i, j)
    return grid
