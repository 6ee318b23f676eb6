"""Two-stage distribution regression on bags of points.

Bags stand in for unobserved distributions through their empirical mean
embeddings; a second-level kernel ridge estimator with an extra operator
penalty is fit in representer coordinates, optionally split across
machines and averaged.  Numerical checks for the operator facts behind
the regularization coupling live in :mod:`distreg.analysis`.
"""

from .backend import BACKEND
from .embedding import Bag, EmbeddingGram, embed_dist, embed_inner, embedding_error_curve, embedding_gram
from .errors import (
    DegenerateCorpusError,
    DistRegError,
    LocalFitError,
    NumericalInconsistencyError,
    SingularSystemError,
)
from .kernels import (
    BaseKernelSpec,
    EmbeddingKernelSpec,
    HolderEstimate,
    base_kernel_eval,
    embedding_kernel_eval,
    holder_probe,
)
from .solver import (
    Model,
    ParamSchedule,
    PenaltySpec,
    TwoStageDataset,
    build_gram,
    build_penalty_matrix,
    estimate_cV,
    fit,
    predict,
    predict_batch,
    schedule_params,
)
from .distributed import (
    AveragedModel,
    Partition,
    fit_distributed,
    max_machines,
    partition,
    predict_averaged,
    predict_averaged_batch,
)
from .analysis import (
    BoundQuantities,
    CapacityFit,
    EffectiveDimensionCurve,
    bound_quantities,
    capacity_fit,
    effective_dimension,
    effective_dimension_curve,
    excess_error,
    lemma_norm_check,
    rate_slope,
    second_order_identity_check,
)
from .synthetic import SyntheticConfig, generate_synthetic

__version__ = "0.1.0"
