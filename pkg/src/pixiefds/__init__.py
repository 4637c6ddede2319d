"""Grounded functional distributional semantics.

A Gaussian world model over pixie triples, logistic semantic functions
per predicate, variational inference of latent pixies from words, and a
word/contextual-similarity evaluation harness.
"""

from .data import (
    FilterMode,
    FilterPolicy,
    LabeledTriple,
    Predicate,
    RawTriple,
    Vocabulary,
    build_vocabulary,
    filter_triples,
    load_raw_triples,
    load_triples,
)
from .errors import ConfigError, DataError, FormatError, NumericalError, PixieFdsError
from .formats import FeatureFile, read_features, write_features
from .inference import (
    InferenceConfig,
    ObservationPattern,
    VariationalPosterior,
    approx_truth,
    elbo,
    expected_log_sigmoid,
    expected_sigmoid,
    infer_posterior,
    kl_gaussian,
)
from .lexicon import (
    Lexicon,
    LexiconTrainConfig,
    LexiconTrainer,
    auc_roc,
    total_truth_audit,
)
from .pca import PixiePca
from .world import GaussianMarginal, SituationGaussian

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "FeatureFile",
    "FilterMode",
    "FilterPolicy",
    "FormatError",
    "GaussianMarginal",
    "InferenceConfig",
    "LabeledTriple",
    "Lexicon",
    "LexiconTrainConfig",
    "LexiconTrainer",
    "NumericalError",
    "ObservationPattern",
    "PixieFdsError",
    "PixiePca",
    "Predicate",
    "RawTriple",
    "SituationGaussian",
    "VariationalPosterior",
    "Vocabulary",
    "approx_truth",
    "auc_roc",
    "build_vocabulary",
    "elbo",
    "expected_log_sigmoid",
    "expected_sigmoid",
    "filter_triples",
    "infer_posterior",
    "kl_gaussian",
    "load_raw_triples",
    "load_triples",
    "read_features",
    "total_truth_audit",
    "write_features",
]
