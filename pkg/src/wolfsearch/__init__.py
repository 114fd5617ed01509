"""Black-box master-sample search against biometric verification systems.

A master sample is a single probe crafted to falsely match many
enrolled identities at once. This package searches for such samples by
evolving a generator's latent vector with CMA-ES, scoring candidates
as the mean similarity against one or more enrollment databases, and
ships the surrounding laboratory: a synthetic Gaussian-mixture identity
space, a verification evaluation harness (EER thresholds, normal vs
master-sample false match rates), density diagnostics, and a line
protocol for plugging in external generators and matchers.
"""

from .cmaes import Cmaes, CmaesConfig, CovarianceError, minimize
from .core import DimensionMismatchError, as_vector, dot, l2_normalize, norm
from .enrollment import (
    EnrollmentSet,
    Template,
    genuine_impostor_pairs,
    load_enrollment,
    save_enrollment,
    split_dev_eval,
)
from .evaluation import (
    EvalReport,
    MasterFaceResult,
    ThresholdReport,
    attack_success,
    eer_threshold,
    evaluate_master,
    fmr,
    fnmr,
    master_face_test,
    score_pairs,
)
from .generators import Generator, GeneratorSpec, generate
from .lve import (
    BestFace,
    ConflictReport,
    LveConfig,
    LveResult,
    LveRunError,
    SystemSpec,
    aggregate,
    conflict_report,
    get_best_face,
    run_lve,
)
from .matchers import Matcher, MatcherSpec, match, mean_score
from .oracle import OracleEndpoint, OracleError, OracleProcess
from .storage import ConfigError, load_experiment_config
from .synth import (
    ClusterSpec,
    DensityReport,
    MixtureSpec,
    density_percentile,
    density_report,
    sample_enrollment,
)

__version__ = "0.1.0"

__all__ = [
    "Cmaes",
    "CmaesConfig",
    "CovarianceError",
    "minimize",
    "DimensionMismatchError",
    "as_vector",
    "dot",
    "l2_normalize",
    "norm",
    "EnrollmentSet",
    "Template",
    "genuine_impostor_pairs",
    "load_enrollment",
    "save_enrollment",
    "split_dev_eval",
    "EvalReport",
    "MasterFaceResult",
    "ThresholdReport",
    "attack_success",
    "eer_threshold",
    "evaluate_master",
    "fmr",
    "fnmr",
    "master_face_test",
    "score_pairs",
    "Generator",
    "GeneratorSpec",
    "generate",
    "BestFace",
    "ConflictReport",
    "LveConfig",
    "LveResult",
    "LveRunError",
    "SystemSpec",
    "aggregate",
    "conflict_report",
    "get_best_face",
    "run_lve",
    "Matcher",
    "MatcherSpec",
    "match",
    "mean_score",
    "OracleEndpoint",
    "OracleError",
    "OracleProcess",
    "ConfigError",
    "load_experiment_config",
    "ClusterSpec",
    "DensityReport",
    "MixtureSpec",
    "density_percentile",
    "density_report",
    "sample_enrollment",
    "__version__",
]
