"""Loss-tolerant logical Bell measurements: codes, erasure oracles, protocols and estimators."""

__version__ = "0.1.0"

from .bounds import (detection_window, repeater_max_distance, static_bound_product,
                     adaptive_bound_product, table1_thresholds)
from .codes import (JointBellCode, QpcVariantCode, StabilizerCode, build_bell_repetition,
                    build_qpc, build_qpc2_variant, build_repetition, build_rotated_surface,
                    build_tree_code, joint_code, parse_code)
from .decodability import decodable, exact_probability, measurable, measurable_with
from .erasure import ChannelParams, LossPattern, sample_loss
from .estimate import (EstimateResult, ThresholdQuery, ThresholdResult, exact_success,
                       find_threshold, mc_success, qpc_closed_form)
from .estimators import SuccessProbabilityEstimator, ThresholdEstimator
from .gf2 import Gf2Matrix, PauliOperator, in_row_span, rank
from .lobsm import LobsmModel, LobsmOutcome, parse_model
from .protocols import ProtocolRun, run_protocol, run_teleport_decode

__all__ = [
    "ChannelParams", "EstimateResult", "Gf2Matrix", "JointBellCode", "LobsmModel",
    "LobsmOutcome", "LossPattern", "PauliOperator", "ProtocolRun", "QpcVariantCode",
    "StabilizerCode", "SuccessProbabilityEstimator", "ThresholdEstimator", "ThresholdQuery",
    "ThresholdResult", "adaptive_bound_product", "build_bell_repetition", "build_qpc",
    "build_qpc2_variant", "build_repetition", "build_rotated_surface", "build_tree_code",
    "decodable", "detection_window", "exact_probability", "exact_success", "find_threshold",
    "in_row_span", "joint_code", "mc_success", "measurable", "measurable_with", "parse_code",
    "parse_model", "qpc_closed_form", "rank", "repeater_max_distance", "run_protocol",
    "run_teleport_decode", "sample_loss", "static_bound_product", "table1_thresholds",
]
