"""Desk-scale simulator and analysis toolkit for an upstream TDM CV-QKD access network.

The package covers the full chain: Gaussian-modulated quadrature simulation,
shot-noise calibration, channel parameter estimation with finite-size
worst-case bounds, collective-attack secret key rates, time-slot scheduling
with a crosstalk model, and multi-ONU network capacity analysis.
"""

__version__ = "0.1.0"

from .capacity import (CapacityScenario, build_schedule, network_capacity_curve,
                       onu_name, per_onu_rates, rate_grid)
from .estimation import (ChannelEstimate, EstimationError, SufficientStats,
                         estimate_channel, estimate_from_stats, exact_estimate,
                         worst_case_bounds)
from .keyrate import (KeyRateInputs, KeyRateReport, PhysicalityError, asymptotic_rate,
                      entropy_g, finite_size_penalty, finite_size_rate, holevo_bound,
                      mutual_information)
from .scheduler import (CrosstalkTable, ScheduleError, SlotSchedule, assign_farthest,
                        check_overlap, circular_slot_distance, crosstalk_noise,
                        max_onus, odn_insertion_db)
from .simulate import (CalibrationError, QuadratureDataset, calibrate_snu,
                       calibration_frames, modulate, read_dataset_csv,
                       simulate_dataset, substream, transmit_and_detect,
                       write_dataset_csv)
from .units import (ChannelModel, SystemParams, ValidationError, channel_from_dict,
                    db_to_transmittance, params_from_dict, params_from_json,
                    validate_params)

__all__ = [
    "__version__",
    "CapacityScenario", "build_schedule", "network_capacity_curve", "onu_name",
    "per_onu_rates", "rate_grid",
    "ChannelEstimate", "EstimationError", "SufficientStats", "estimate_channel",
    "estimate_from_stats", "exact_estimate", "worst_case_bounds",
    "KeyRateInputs", "KeyRateReport", "PhysicalityError", "asymptotic_rate",
    "entropy_g", "finite_size_penalty", "finite_size_rate", "holevo_bound",
    "mutual_information",
    "CrosstalkTable", "ScheduleError", "SlotSchedule", "assign_farthest",
    "check_overlap", "circular_slot_distance", "crosstalk_noise", "max_onus",
    "odn_insertion_db",
    "CalibrationError", "QuadratureDataset", "calibrate_snu", "calibration_frames",
    "modulate", "read_dataset_csv", "simulate_dataset", "substream",
    "transmit_and_detect", "write_dataset_csv",
    "ChannelModel", "SystemParams", "ValidationError", "channel_from_dict",
    "db_to_transmittance", "params_from_dict", "params_from_json", "validate_params",
]
