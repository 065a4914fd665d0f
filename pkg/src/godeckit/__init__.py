"""Low-rank plus sparse matrix decomposition: GoDec, BRP, GreBsmo, LinGoDec."""

from .brp import BrpConfig, BrpResult, bound_report, brp, brp_approx, brp_details, brp_power
from .estimators import BRPLowRank, GoDec, GreBsmo, LinGoDec
from .exceptions import DimensionError, FormatError, ParameterError, RankReductionWarning
from .godec import DecompResult, GodecConfig, godec, godec_brp, godec_naive
from .grebsmo import FactoredResult, GrebConfig, grebsmo
from .lingodec import LinGodecConfig, LinGodecResult, lingodec, predict_scores
from .matcore import RngSeed, hard_threshold_entries, rel_error, soft_threshold, svd_truncate

__version__ = "0.1.0"

__all__ = [
    "BRPLowRank",
    "BrpConfig",
    "BrpResult",
    "DecompResult",
    "DimensionError",
    "FactoredResult",
    "FormatError",
    "GoDec",
    "GodecConfig",
    "GreBsmo",
    "GrebConfig",
    "LinGoDec",
    "LinGodecConfig",
    "LinGodecResult",
    "ParameterError",
    "RankReductionWarning",
    "RngSeed",
    "bound_report",
    "brp",
    "brp_approx",
    "brp_details",
    "brp_power",
    "godec",
    "godec_brp",
    "godec_naive",
    "grebsmo",
    "hard_threshold_entries",
    "lingodec",
    "predict_scores",
    "rel_error",
    "soft_threshold",
    "svd_truncate",
]
