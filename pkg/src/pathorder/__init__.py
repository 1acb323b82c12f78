"""Learn the maximum Markov order of paths constrained to a network."""

__version__ = "0.1.0"

from pathorder.constraint import (
    DegreesOfFreedom,
    NetworkConstraint,
    build,
    complete_digraph,
    degrees_of_freedom,
    parse_edge_lines,
)
from pathorder.errors import (
    CapacityError,
    ConstraintViolationError,
    DomainError,
    MethodUnavailableError,
    NumericError,
    ParseError,
    PathOrderError,
    UsageError,
)
from pathorder.model import (
    DirichletPosterior,
    ModelScore,
    MultiOrderParams,
    flat_prior,
    load_model,
    log_likelihood,
    log_marginal_likelihood,
    mle_fit,
    posterior_update,
    save_model,
    sequence_log_probability,
)
from pathorder.pathdata import Path, PathDataset, TransitionCounts, count, ingest
from pathorder.selection import (
    OrderPrior,
    SelectionReport,
    evidence_threshold,
    lr_test,
    score_all,
    select_bf,
    select_ic,
    select_lr,
    wilson_interval,
)
from pathorder.synth import (
    GroundTruth,
    PathLengthLaw,
    generate_paths,
    perturb_constraint,
    random_gnm,
    sample_ground_truth,
)

__all__ = [
    "CapacityError",
    "ConstraintViolationError",
    "DegreesOfFreedom",
    "DirichletPosterior",
    "DomainError",
    "GroundTruth",
    "MethodUnavailableError",
    "ModelScore",
    "MultiOrderParams",
    "NetworkConstraint",
    "NumericError",
    "OrderPrior",
    "ParseError",
    "Path",
    "PathDataset",
    "PathOrderError",
    "SelectionReport",
    "TransitionCounts",
    "UsageError",
    "__version__",
    "build",
    "complete_digraph",
    "count",
    "degrees_of_freedom",
    "evidence_threshold",
    "flat_prior",
    "generate_paths",
    "ingest",
    "load_model",
    "log_likelihood",
    "log_marginal_likelihood",
    "lr_test",
    "mle_fit",
    "parse_edge_lines",
    "perturb_constraint",
    "posterior_update",
    "random_gnm",
    "sample_ground_truth",
    "save_model",
    "score_all",
    "select_bf",
    "select_ic",
    "select_lr",
    "sequence_log_probability",
    "wilson_interval",
]
