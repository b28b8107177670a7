"""TeXBLEU: an n-gram, embedding-based metric for LaTeX math expressions."""

__version__ = "0.1.0"

from .errors import ArtifactMismatchError, DataError, FormatError, TexbleuError
from .textnorm import NormalizedText, normalize, normalize_spacing
from .tokenizer import TokenSeq, Vocab, byte_vocab, decode, encode, load_vocab, save_vocab, train_bpe
from .embeddings import (
    EmbeddingTable, PositionalTable, cos_dist, load_table, save_table,
    sinusoidal_positions, train_embeddings,
)
from .metric import EmbeddedToken, MetricConfig, Scorer, ngram_similarity, texbleu, token_distance
from .baselines import bleu, cer, levenshtein, rouge1, wer
from .harness import EvalRecord, load_dataset, pearson, run_evaluation, spearman

__all__ = [
    "ArtifactMismatchError", "DataError", "FormatError", "TexbleuError",
    "NormalizedText", "normalize", "normalize_spacing",
    "TokenSeq", "Vocab", "byte_vocab", "decode", "encode", "load_vocab", "save_vocab", "train_bpe",
    "EmbeddingTable", "PositionalTable", "cos_dist", "load_table", "save_table",
    "sinusoidal_positions", "train_embeddings",
    "EmbeddedToken", "MetricConfig", "Scorer", "ngram_similarity", "texbleu", "token_distance",
    "bleu", "cer", "levenshtein", "rouge1", "wer",
    "EvalRecord", "load_dataset", "pearson", "run_evaluation", "spearman",
]
