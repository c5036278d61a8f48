"""Attack-based privacy risk evaluation for synthetic tabular data."""

from . import inference, linkability, singling_out
from .tabular import (
    ColumnKind,
    Dataset,
    DatasetRole,
    SplitSpec,
    TabularError,
    align,
    load_csv,
    split,
    write_csv,
)
from .distance import NeighborSet, RangeTable, build_ranges, gower_distance, knn
from .predicates import (
    Atom,
    AtomOp,
    Predicate,
    evaluate,
    multivariate_predicate,
    random_predicate,
    univariate_predicates,
)
from .stats import (
    AttackStrength,
    CorrectionModel,
    PrivacyRisk,
    RiskEstimate,
    fit_correction_model,
    quality_cut,
    risk,
    scale_control_successes,
    so_success_curve,
    strength,
    wilson,
)
from .singling_out import SinglingOutConfig, SinglingOutMode, SinglingOutResult
from .linkability import LinkabilityConfig, LinkabilityResult
from .inference import InferenceConfig, InferenceResult
from .utility import UtilityScore, utility_score
from .harness import (
    LeakyConfig,
    LinearityConfig,
    RunConfig,
    leaky_synthesize,
    linearity_experiment,
    run_evaluation,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "AtomOp",
    "AttackStrength",
    "ColumnKind",
    "CorrectionModel",
    "Dataset",
    "DatasetRole",
    "InferenceConfig",
    "InferenceResult",
    "LeakyConfig",
    "LinearityConfig",
    "LinkabilityConfig",
    "LinkabilityResult",
    "NeighborSet",
    "Predicate",
    "PrivacyRisk",
    "RangeTable",
    "RiskEstimate",
    "RunConfig",
    "SinglingOutConfig",
    "SinglingOutMode",
    "SinglingOutResult",
    "SplitSpec",
    "TabularError",
    "UtilityScore",
    "align",
    "build_ranges",
    "evaluate",
    "fit_correction_model",
    "gower_distance",
    "inference",
    "knn",
    "leaky_synthesize",
    "linearity_experiment",
    "linkability",
    "load_csv",
    "multivariate_predicate",
    "quality_cut",
    "random_predicate",
    "risk",
    "run_evaluation",
    "scale_control_successes",
    "singling_out",
    "so_success_curve",
    "split",
    "strength",
    "univariate_predicates",
    "utility_score",
    "wilson",
    "write_csv",
]
