"""Minimal imputation sets: which missing values actually matter for a linear SVM
or a least-squares fit, and which can be left as they are."""

__version__ = "0.1.0"

from .dataset import (  # noqa: E402
    Bounds,
    CapExceeded,
    CellRef,
    CompleteMatrix,
    DataError,
    Edge,
    EdgeAssignment,
    IncompleteMatrix,
    LabelVector,
    apply_assignment,
    enumerate_edge_assignments,
    infer_bounds,
    load_csv,
)
from .imputers import ImputeResult, impute, knn_impute, mean_impute  # noqa: E402
from .linreg import (  # noqa: E402
    LinModel,
    add_feature_incremental,
    mutual_incoherence,
    mutual_incoherence_and_bound,
    train_ols,
)
from .lr_minimal import (  # noqa: E402
    approx_minimal_features,
    certain_model_check_lr,
    exact_minimal_features_lr,
)
from .report import MinimalSetReport  # noqa: E402
from .svm import SvmModel, SvmParams, support_vectors, train_svm, warm_update  # noqa: E402
from .svm_minimal import (  # noqa: E402
    Uniform,
    TruncatedNormal,
    approx_minimal_set_svm,
    exact_minimal_set_svm,
    hull_probability,
    miss_probability,
)

__all__ = [
    "Bounds",
    "CapExceeded",
    "CellRef",
    "CompleteMatrix",
    "DataError",
    "Edge",
    "EdgeAssignment",
    "ImputeResult",
    "IncompleteMatrix",
    "LabelVector",
    "LinModel",
    "MinimalSetReport",
    "SvmModel",
    "SvmParams",
    "TruncatedNormal",
    "Uniform",
    "add_feature_incremental",
    "apply_assignment",
    "approx_minimal_features",
    "approx_minimal_set_svm",
    "certain_model_check_lr",
    "enumerate_edge_assignments",
    "exact_minimal_features_lr",
    "exact_minimal_set_svm",
    "hull_probability",
    "impute",
    "infer_bounds",
    "knn_impute",
    "load_csv",
    "mean_impute",
    "miss_probability",
    "mutual_incoherence",
    "mutual_incoherence_and_bound",
    "support_vectors",
    "train_ols",
    "train_svm",
    "warm_update",
]
