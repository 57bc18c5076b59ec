"""herbvec: distributed herb representations from prescription corpora."""

from .corpus import (
    BLANK_MARK,
    BOS_TOKEN,
    EOS_TOKEN,
    UNK_TOKEN,
    PredictionItem,
    Prescription,
    RawPrescription,
    Vocabulary,
    build_vocabulary,
    encode,
    encode_corpus,
    make_prediction_testset,
    parse_corpus,
    project_rare_herbs,
    split_corpus,
)
from .embeddings import EmbeddingMatrix, cosine, load_text, save_text
from .errors import (
    CheckpointError,
    ConfigError,
    ConvergenceError,
    DataError,
    HerbvecError,
    TrainingError,
    ZeroVectorError,
)

__version__ = "0.1.0"

__all__ = [
    "BLANK_MARK",
    "BOS_TOKEN",
    "EOS_TOKEN",
    "UNK_TOKEN",
    "PredictionItem",
    "Prescription",
    "RawPrescription",
    "Vocabulary",
    "build_vocabulary",
    "encode",
    "encode_corpus",
    "make_prediction_testset",
    "parse_corpus",
    "project_rare_herbs",
    "split_corpus",
    "EmbeddingMatrix",
    "cosine",
    "load_text",
    "save_text",
    "CheckpointError",
    "ConfigError",
    "ConvergenceError",
    "DataError",
    "HerbvecError",
    "TrainingError",
    "ZeroVectorError",
    "__version__",
]
