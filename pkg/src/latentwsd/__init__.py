"""Supervised word sense disambiguation with interleaved non-negative matrix factorization."""

from .corpus import (
    CorpusMatrices,
    Instance,
    Token,
    Vocabulary,
    build_corpus_matrices,
    build_matrix_A,
    build_matrix_B,
    build_matrix_C_local,
    build_matrix_D_global,
    build_vocab,
    load_instances,
)
from .errors import ConfigError, NonNegativityViolation, ParseError, ShapeError
from .evaluation import EvalReport, RunSpec, precision, report_render, run_experiment
from .interleaved import CoupledFactorization, InterleavedConfig, copy_coupling_audit, interleaved_factorize
from .matrix import SparseMatrix, from_triplets, kl_objective, frobenius_objective
from .nmf import Factorization, NmfConfig, Objective, factorize, factorize_warm, init_factors, update_step
from .wsd import SenseModel, TrainConfig, Variant, classify, train

__version__ = "0.1.0"
