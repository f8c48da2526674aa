"""Uplink RU allocation for periodic short packets with reliability and delay targets."""

from .allocators import Schedule, analytic_success, bca, check_schedule, fsa, gba, gba_sic, optimal_bit_split
from .core import decode_prob, exact_error_prob, min_rus, min_rus_exact, same_channel_packet_prob, snr_threshold
from .correlated import CorrelatedSplit, correlated_optimal_split, correlated_packet_prob, fsa_correlated
from .experiment import ALGORITHMS, SweepSpec, evaluate, run_sweep
from .matching import max_cardinality_matching, max_weight_bipartite_matching
from .metrics import MetricsReport, jain
from .params import Channel, Device, SystemParams, load_config
from .scenario import Scenario, generate_scenario
from .sic import build_pairing, equivalent_device, pair_success_prob, shareable, shared_demand, sharing_gain
from .validate import validate_reliability

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "Channel", "CorrelatedSplit", "Device", "MetricsReport", "Scenario", "Schedule", "SweepSpec",
    "SystemParams", "analytic_success", "bca", "build_pairing", "check_schedule", "correlated_optimal_split",
    "correlated_packet_prob", "decode_prob", "equivalent_device", "evaluate", "exact_error_prob", "fsa",
    "fsa_correlated", "gba", "gba_sic", "generate_scenario", "jain", "load_config", "max_cardinality_matching",
    "max_weight_bipartite_matching", "min_rus", "min_rus_exact", "optimal_bit_split", "pair_success_prob",
    "run_sweep", "same_channel_packet_prob", "shareable", "shared_demand", "sharing_gain", "snr_threshold",
    "validate_reliability",
]
