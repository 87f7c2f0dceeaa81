"""Command-line interface for the access-network toolkit.

Subcommands: ``simulate``, ``estimate``, ``keyrate``, ``schedule``,
``capacity``, ``pipeline``. Each reads a JSON config and writes JSON/CSV
(and figures on the report paths) under the output directory; nothing is
written anywhere else. Exit codes: 0 success, 2 configuration error,
3 runtime or numeric error. File formats are documented in FORMATS.md.

All randomness derives from the single config seed (overridable with
``--seed``) through named per-ONU substreams, so outputs are byte-identical
across reruns and worker counts.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .capacity import CapacityScenario, network_capacity_curve, per_onu_rates, rate_grid
from .estimation import EstimationError, estimate_channel, exact_estimate
from .keyrate import PhysicalityError, finite_size_rate
from .scheduler import (CrosstalkTable, ScheduleError, SlotSchedule, assign_farthest,
                        check_overlap, max_onus)
from .simulate import (CalibrationError, QuadratureDataset, calibrate_snu,
                       read_dataset_csv, simulate_dataset, write_dataset_csv)
from .units import (ChannelModel, SystemParams, ValidationError, channel_from_dict,
                    params_from_dict)


class ConfigError(Exception):
    """The run configuration is unusable; nothing was executed."""


def _load_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc


def _require_keys(doc: dict, known: set, label: str) -> None:
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"{label}: unknown keys {unknown}; expected a subset of {sorted(known)}")


def _write_json(doc, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_csv(path, header: str, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")
    return path


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_crosstalk(ref, config_dir: Path) -> CrosstalkTable:
    if ref is None or ref == "default":
        return CrosstalkTable.default()
    if isinstance(ref, str):
        path = Path(ref)
        if not path.is_absolute():
            path = config_dir / path
        if not path.is_file():
            raise ConfigError(f"crosstalk table file not found: {path}")
        return CrosstalkTable.from_json(path)
    if isinstance(ref, dict):
        return CrosstalkTable.from_dict(ref)
    raise ConfigError(f"crosstalk_table must be a path, 'default', or an object, got {ref!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated multi-ONU run configuration."""

    params: SystemParams
    channels: list
    seed: int
    slot_width_ns: float
    crosstalk_table: CrosstalkTable
    calibration_samples: int | None
    apply_calibration: bool
    include_crosstalk: bool
    worst_case_mutual_info: bool

    def echo(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "channels": [{"onu_id": onu, **model.to_dict()} for onu, model in self.channels],
            "seed": self.seed,
            "slot_width_ns": self.slot_width_ns,
            "crosstalk_table": self.crosstalk_table.to_dict(),
            "calibration_samples": self.calibration_samples,
            "apply_calibration": self.apply_calibration,
            "include_crosstalk": self.include_crosstalk,
            "worst_case_mutual_info": self.worst_case_mutual_info,
        }


_SCENARIO_KEYS = {"params", "channels", "seed", "slot_width_ns", "crosstalk_table",
                  "calibration_samples", "apply_calibration", "include_crosstalk",
                  "worst_case_mutual_info"}


def load_scenario_config(path, *, seed_override: int | None = None) -> ScenarioConfig:
    doc = _load_json(path)
    _require_keys(doc, _SCENARIO_KEYS, str(path))
    if "params" not in doc:
        raise ConfigError(f"{path}: missing required key 'params'")
    params = params_from_dict(doc["params"])
    raw_channels = doc.get("channels", [])
    if not isinstance(raw_channels, list) or not raw_channels:
        raise ConfigError(f"{path}: 'channels' must be a non-empty list of ONU channel objects")
    channels = []
    seen = set()
    for entry in raw_channels:
        if not isinstance(entry, dict) or "onu_id" not in entry:
            raise ConfigError(f"{path}: each channel entry needs an 'onu_id'")
        onu = str(entry["onu_id"])
        if onu in seen:
            raise ConfigError(f"{path}: duplicate onu_id {onu!r}")
        seen.add(onu)
        channels.append((onu, channel_from_dict({k: v for k, v in entry.items() if k != "onu_id"})))
    seed = doc.get("seed", 0)
    if seed_override is not None:
        seed = seed_override
    if not (isinstance(seed, int) and seed >= 0):
        raise ConfigError(f"{path}: seed must be a non-negative integer, got {seed!r}")
    slot_width_ns = float(doc.get("slot_width_ns", 25.0))
    if slot_width_ns <= 0:
        raise ConfigError(f"{path}: slot_width_ns must be positive, got {slot_width_ns}")
    table = _load_crosstalk(doc.get("crosstalk_table"), Path(path).parent)
    n_cal = doc.get("calibration_samples")
    if n_cal is not None and (not isinstance(n_cal, int) or n_cal < 2):
        raise ConfigError(f"{path}: calibration_samples must be an integer >= 2, got {n_cal!r}")
    return ScenarioConfig(
        params=params,
        channels=channels,
        seed=seed,
        slot_width_ns=slot_width_ns,
        crosstalk_table=table,
        calibration_samples=n_cal,
        apply_calibration=bool(doc.get("apply_calibration", False)),
        include_crosstalk=bool(doc.get("include_crosstalk", False)),
        worst_case_mutual_info=bool(doc.get("worst_case_mutual_info", False)),
    )


def _build_join_schedule(config: ScenarioConfig) -> SlotSchedule:
    """Farthest-slot schedule over the configured ONUs, in config order."""
    cap = max_onus(config.params.rep_rate_hz, config.slot_width_ns)
    if len(config.channels) > cap:
        raise ConfigError(
            f"{len(config.channels)} ONUs do not fit the {cap} slots of the "
            f"{config.slot_width_ns} ns grid")
    schedule = SlotSchedule.empty(config.params.rep_rate_hz, config.slot_width_ns)
    for onu, _ in config.channels:
        schedule = assign_farthest(schedule, onu)
    return schedule


def _effective_channels(config: ScenarioConfig, schedule: SlotSchedule) -> list:
    """Per-ONU channels with slot crosstalk folded into the excess noise."""
    from .scheduler import crosstalk_noise

    out = []
    for onu, model in config.channels:
        xi = model.excess_noise_snu
        if config.include_crosstalk:
            xi += crosstalk_noise(schedule, onu, config.crosstalk_table)
        out.append((onu, ChannelModel(loss_db=model.loss_db, excess_noise_snu=xi)))
    return out


def _print_summary(doc: dict, fmt: str) -> None:
    if fmt == "csv":
        keys = sorted(doc)
        print(",".join(keys))
        print(",".join(str(doc[k]) for k in keys))
    else:
        print(json.dumps(doc, sort_keys=True))


def _simulate_one(config: ScenarioConfig, onu: str, model: ChannelModel) -> QuadratureDataset:
    n_cal = config.calibration_samples or max(2, config.params.block_length // 10)
    return simulate_dataset(config.params, model, config.params.block_length,
                            config.seed, onu_id=onu, n_cal=n_cal)


def cmd_simulate(args) -> int:
    config = load_scenario_config(args.config, seed_override=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    schedule = _build_join_schedule(config)
    channels = _effective_channels(config, schedule)

    def work(item):
        onu, model = item
        return onu, _simulate_one(config, onu, model)

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        datasets = list(pool.map(work, channels))

    files = []
    for onu, dataset in datasets:
        path = out / f"{onu}.csv"
        write_dataset_csv(dataset, path, onu_id=onu)
        files.extend([path, path.with_suffix(".cal.csv"), path.with_suffix(".json")])
    manifest = {
        "package_version": __version__,
        "seed": config.seed,
        "config": config.echo(),
        "schedule": schedule.to_dict(),
        "files": {f.name: _sha256(f) for f in sorted(files)},
    }
    _write_json(manifest, out / "manifest.json")
    _print_summary({"command": "simulate", "onus": len(channels),
                    "out": str(out), "seed": config.seed}, args.format)
    return 0


def cmd_estimate(args) -> int:
    data_path = Path(args.data)
    if not data_path.is_file():
        raise ConfigError(f"dataset file not found: {data_path}")
    dataset = read_dataset_csv(data_path)
    if args.config:
        doc = _load_json(args.config)
        _require_keys(doc, {"params"}, str(args.config))
        params = params_from_dict(doc["params"])
    elif dataset.ground_truth is not None:
        params = dataset.ground_truth[1]
    else:
        raise ConfigError("dataset has no embedded parameters; pass --config")

    snu_hat = calibrate_snu(dataset.calibration, elec_noise_known=params.elec_noise_snu)
    # one SNU spans sqrt(snu_hat) raw units; synthetic data is already SNU-native
    bob = dataset.bob / math.sqrt(snu_hat) if args.apply_calibration else dataset.bob
    est = estimate_channel(
        QuadratureDataset(dataset.alice, bob, dataset.calibration, dataset.seed,
                          dataset.ground_truth),
        params)
    out = Path(args.out)
    report = {
        "package_version": __version__,
        "dataset": data_path.name,
        "n_samples": len(dataset),
        "shot_noise_estimate": snu_hat,
        "calibration_applied": bool(args.apply_calibration),
        "estimate": est.to_dict(),
    }
    path = _write_json(report, out / f"{data_path.stem}.estimate.json")
    _print_summary({"command": "estimate", "T_hat": est.T_hat, "xi_hat": est.xi_hat,
                    "out": str(path)}, args.format)
    return 0


_KEYRATE_KEYS = {"params", "channel", "n_pe"}


def cmd_keyrate(args) -> int:
    doc = _load_json(args.config)
    _require_keys(doc, _KEYRATE_KEYS, str(args.config))
    if "params" not in doc or "channel" not in doc:
        raise ConfigError(f"{args.config}: needs 'params' and 'channel' objects")
    params = params_from_dict(doc["params"])
    channel = channel_from_dict(doc["channel"])
    n_pe = doc.get("n_pe")

    est = exact_estimate(channel, params, n_pe=n_pe)
    report = finite_size_rate(est, params, worst_case_mutual_info=args.worst_case_mutual_info)
    out = Path(args.out)
    result = {
        "package_version": __version__,
        "params": params.to_dict(),
        "channel": channel.to_dict(),
        "estimate": est.to_dict(),
        "report": report.to_dict(),
    }
    _write_json(result, out / "keyrate_report.json")

    if args.loss_steps:
        losses = np.linspace(args.loss_min, args.loss_max, args.loss_steps)
        rows = []
        for loss in losses:
            try:
                sweep_est = exact_estimate(
                    ChannelModel(loss_db=float(loss),
                                 excess_noise_snu=channel.excess_noise_snu),
                    params, n_pe=n_pe)
                skr = finite_size_rate(sweep_est, params,
                                       worst_case_mutual_info=args.worst_case_mutual_info).skr_bps
            except EstimationError:
                skr = 0.0  # gain bound hit zero: no key at this loss
            rows.append((float(loss), skr))
        _write_csv(out / "rate_vs_loss.csv", "loss_db,skr_bps", rows)
        from .plotting import save_rate_vs_loss

        marks = [(channel.loss_db, report.skr_bps, f"{report.skr_bps / 1e3:.0f} kbit/s")] \
            if report.skr_bps > 0 else None
        save_rate_vs_loss([r[0] for r in rows], [r[1] for r in rows],
                          out / "fig_rate_vs_loss.png", marks=marks)

    _print_summary({"command": "keyrate", "skr_bps": report.skr_bps,
                    "rate_per_pulse": report.rate_per_pulse, "out": str(out)}, args.format)
    return 0


_SCHEDULE_KEYS = {"rep_rate_hz", "slot_width_ns", "onus", "pulse_trains", "period_ns"}


def cmd_schedule(args) -> int:
    doc = _load_json(args.config)
    _require_keys(doc, _SCHEDULE_KEYS, str(args.config))
    rep = doc.get("rep_rate_hz", 5e6)
    width = doc.get("slot_width_ns", 25.0)
    onus = doc.get("onus", [])
    if len(set(onus)) != len(onus):
        raise ConfigError(f"{args.config}: duplicate ONU ids in 'onus'")
    cap = max_onus(rep, width)
    if cap < 1:
        raise ConfigError(f"slot width {width} ns exceeds the period {1e9 / rep} ns")
    if len(onus) > cap:
        raise ConfigError(f"{len(onus)} ONUs exceed the capacity of {cap} slots")
    schedule = SlotSchedule.empty(rep, width)
    for onu in onus:
        schedule = assign_farthest(schedule, str(onu))
    result = {
        "package_version": __version__,
        "max_onus": cap,
        "schedule": schedule.to_dict(),
    }
    if "pulse_trains" in doc:
        trains = {str(k): tuple(v) for k, v in doc["pulse_trains"].items()}
        period = doc.get("period_ns", 1e9 / rep)
        result["collisions"] = [list(pair) for pair in check_overlap(trains, period)]
    out = Path(args.out)
    _write_json(result, out / "schedule.json")
    _print_summary({"command": "schedule", "n_slots": schedule.n_slots,
                    "assigned": len(onus), "max_onus": cap, "out": str(out)}, args.format)
    return 0


_CAPACITY_KEYS = {"params", "loss_db_per_onu", "base_excess_noise_snu", "n_max",
                  "slot_width_ns", "odn_kind", "include_odn_loss", "asymptotic",
                  "crosstalk_table", "loss_sweep", "dwdm_insertion_db", "bs_excess_db"}


def cmd_capacity(args) -> int:
    doc = _load_json(args.config)
    _require_keys(doc, _CAPACITY_KEYS, str(args.config))
    if "params" not in doc:
        raise ConfigError(f"{args.config}: missing required key 'params'")
    params = params_from_dict(doc["params"])
    table = _load_crosstalk(doc.get("crosstalk_table"), Path(args.config).parent)
    loss = float(doc.get("loss_db_per_onu", 6.26))
    base_xi = float(doc.get("base_excess_noise_snu", 0.018))
    slot_width = float(doc.get("slot_width_ns", 25.0))
    n_max = int(doc.get("n_max", max_onus(params.rep_rate_hz, slot_width)))
    opts = {
        "slot_width_ns": slot_width,
        "odn_kind": doc.get("odn_kind", "dwdm"),
        "include_odn_loss": bool(doc.get("include_odn_loss", False)),
        "asymptotic": bool(doc.get("asymptotic", False)),
        "dwdm_insertion_db": float(doc.get("dwdm_insertion_db", 1.5)),
        "bs_excess_db": float(doc.get("bs_excess_db", 0.5)),
    }

    curve = network_capacity_curve(loss, params, table, n_max,
                                   base_excess_noise_snu=base_xi, **opts)
    sweep = doc.get("loss_sweep", {})
    _require_keys(sweep, {"min", "max", "steps"}, "loss_sweep")
    losses = np.linspace(float(sweep.get("min", 2.0)), float(sweep.get("max", 14.0)),
                         int(sweep.get("steps", 13)))
    n_values = list(range(1, n_max + 1))
    grid = rate_grid(n_values, [float(x) for x in losses], params, table,
                     base_excess_noise_snu=base_xi,
                     max_workers=(args.threads if args.threads > 1 else None), **opts)

    out = Path(args.out)
    _write_csv(out / "capacity_bars.csv", "n_onus,total_bps", curve)
    header = "n_onus," + ",".join(repr(float(x)) for x in losses)
    _write_csv(out / "rate_grid.csv", header,
               [(n, *[float(g) for g in grid[i]]) for i, n in enumerate(n_values)])

    final = CapacityScenario(n_onus=n_max, loss_db_per_onu=loss,
                             base_excess_noise_snu=base_xi, params=params,
                             crosstalk_table=table, **opts)
    summary = {
        "package_version": __version__,
        "params": params.to_dict(),
        "loss_db_per_onu": loss,
        "base_excess_noise_snu": base_xi,
        "options": opts,
        "crosstalk_table": table.to_dict(),
        "capacity_curve": [{"n_onus": n, "total_bps": t} for n, t in curve],
        "per_onu_rates_at_n_max": per_onu_rates(final),
    }
    _write_json(summary, out / "capacity_summary.json")

    from .plotting import save_capacity_bars, save_rate_grid

    save_capacity_bars([n for n, _ in curve], [t for _, t in curve],
                       out / "fig_capacity_bars.png")
    save_rate_grid(grid, n_values, losses, out / "fig_rate_grid.png")

    _print_summary({"command": "capacity", "n_max": n_max,
                    "total_bps_at_n_max": curve[-1][1], "out": str(out)}, args.format)
    return 0


def _pipeline_one(config: ScenarioConfig, onu: str, model: ChannelModel) -> dict:
    """Simulate, estimate, and rate one ONU; failures stay inside its report."""
    params = config.params
    dataset = _simulate_one(config, onu, model)
    result = {"onu_id": onu, "seed": config.seed, "channel": model.to_dict(),
              "dataset": None, "error": None}
    try:
        snu_hat = calibrate_snu(dataset.calibration, elec_noise_known=params.elec_noise_snu)
        result["shot_noise_estimate"] = snu_hat
        bob = dataset.bob
        if config.apply_calibration:
            bob = bob / math.sqrt(snu_hat)
        pe_slice = slice(0, params.n_pe)  # disclosed prefix; the rest makes key
        est = estimate_channel(
            QuadratureDataset(dataset.alice[pe_slice], bob[pe_slice],
                              dataset.calibration, dataset.seed, dataset.ground_truth),
            params)
        report = finite_size_rate(est, params,
                                  worst_case_mutual_info=config.worst_case_mutual_info)
        result["estimate"] = est.to_dict()
        result["report"] = report.to_dict()
    except (EstimationError, CalibrationError, PhysicalityError) as exc:
        result["error"] = f"{type(exc).__name__}: {exc}"
    return result, dataset


def cmd_pipeline(args) -> int:
    config = load_scenario_config(args.config, seed_override=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    schedule = _build_join_schedule(config)  # fails before any simulation
    channels = _effective_channels(config, schedule)

    def work(item):
        onu, model = item
        return onu, *_pipeline_one(config, onu, model)

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        results = list(pool.map(work, channels))

    files = []
    rates = {}
    errors = {}
    for onu, result, dataset in results:
        data_path = out / f"{onu}.csv"
        write_dataset_csv(dataset, data_path, onu_id=onu)
        result["dataset"] = data_path.name
        files.extend([data_path, data_path.with_suffix(".cal.csv"),
                      data_path.with_suffix(".json")])
        files.append(_write_json(result, out / f"{onu}.report.json"))
        if result["error"] is None:
            rates[onu] = result["report"]["skr_bps"]
        else:
            errors[onu] = result["error"]

    total = math.fsum(rates[onu] for onu in sorted(rates))
    summary = {
        "package_version": __version__,
        "seed": config.seed,
        "config": config.echo(),
        "schedule": schedule.to_dict(),
        "per_onu_skr_bps": rates,
        "errors": errors,
        "total_skr_bps": total,
    }
    files.append(_write_json(summary, out / "network_summary.json"))

    if rates:
        from .plotting import save_network_rates

        files.append(save_network_rates(rates, out / "fig_network_rates.png"))

    manifest = {
        "package_version": __version__,
        "seed": config.seed,
        "config": config.echo(),
        "files": {f.name: _sha256(f) for f in sorted(set(files))},
    }
    _write_json(manifest, out / "manifest.json")
    _print_summary({"command": "pipeline", "onus": len(channels),
                    "total_skr_bps": total, "errors": len(errors),
                    "out": str(out)}, args.format)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvqkd-access",
        description="Upstream TDM CV-QKD access network: simulation, estimation, "
                    "key rates, scheduling, and capacity analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--seed", type=int, default=None,
                        help="master seed; overrides the config seed")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for per-ONU / per-cell work")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="stdout summary format")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common],
                       help="generate per-ONU quadrature datasets")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", parents=[common],
                       help="estimate channel parameters from a dataset CSV")
    p.add_argument("--data", required=True, help="dataset CSV written by 'simulate'")
    p.add_argument("--config", default=None, help="params JSON (default: dataset sidecar)")
    p.add_argument("--apply-calibration", action="store_true",
                   help="rescale receiver data by the measured shot-noise unit")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("keyrate", parents=[common],
                       help="finite-size key rate from configured parameters")
    p.add_argument("--config", required=True, help="JSON with 'params' and 'channel'")
    p.add_argument("--loss-min", type=float, default=0.0)
    p.add_argument("--loss-max", type=float, default=20.0)
    p.add_argument("--loss-steps", type=int, default=0,
                   help="emit rate_vs_loss.csv and figure with this many sweep points")
    p.add_argument("--worst-case-mutual-info", action="store_true",
                   help="evaluate the mutual information at the worst-case bounds too")
    p.set_defaults(func=cmd_keyrate)

    p = sub.add_parser("schedule", parents=[common],
                       help="assign ONUs to time slots and check pulse overlaps")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("capacity", parents=[common],
                       help="network capacity curve and per-ONU rate grid")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("pipeline", parents=[common],
                       help="simulate, estimate, and rate every configured ONU")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (EstimationError, CalibrationError, PhysicalityError, ScheduleError,
            ValueError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
