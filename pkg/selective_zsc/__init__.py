"""
Selective zero-shot classification with augmented attributes.

Learns a defined-attribute dictionary and a residual-attribute dictionary
on seen classes, predicts unseen classes by attribute similarity, and
abstains when the combined defined/residual confidence is low.
"""

from .errors import (
    SZSCError,
    InputError,
    NumericalError,
    EmptyCoverageError,
    FormatError,
    ArchiveError,
)
from .models import (
    HyperParams,
    SolverSettings,
    SearchPlan,
    SynthConfig,
    ConfidenceReport,
    ValidationReport,
    DatasetRole,
    Decision,
    AurccMethod,
    Ordering,
    DEFAULT_LAMBDA_GRID,
)
from .matrix_core import ridge_solve, constrained_dict_solve, cosine_sim
from .data_model import Dataset, one_hot, validate, BENCHMARK_SPLITS, benchmark_stub
from .lad_solver import LadModel, fit_lad
from .residual_solver import AugmentedModel, ResidualModel, fit_residual, fit_augmented
from .inference import REJECT, infer_codes, classify, predict, predict_batch, selective_predict, combine_conf, combine_external
from .evaluation import RiskCoverageCurve, coverage_risk, rcc, aurcc_compare, ideal_curve, excess_aurcc, risk_at_coverage
from .cv_harness import class_folds, staged_search
from .synth import synth_generate
from .pipeline_manager import SelectivePipeline

__version__ = "0.1.0"

__all__ = [
    # Errors
    'SZSCError',
    'InputError',
    'NumericalError',
    'EmptyCoverageError',
    'FormatError',
    'ArchiveError',

    # Models
    'HyperParams',
    'SolverSettings',
    'SearchPlan',
    'SynthConfig',
    'ConfidenceReport',
    'ValidationReport',
    'DatasetRole',
    'Decision',
    'AurccMethod',
    'Ordering',
    'DEFAULT_LAMBDA_GRID',

    # Solvers
    'ridge_solve',
    'constrained_dict_solve',
    'cosine_sim',
    'LadModel',
    'fit_lad',
    'AugmentedModel',
    'ResidualModel',
    'fit_residual',
    'fit_augmented',

    # Data
    'Dataset',
    'one_hot',
    'validate',
    'BENCHMARK_SPLITS',
    'benchmark_stub',
    'synth_generate',

    # Inference and evaluation
    'REJECT',
    'infer_codes',
    'classify',
    'predict',
    'predict_batch',
    'selective_predict',
    'combine_conf',
    'combine_external',
    'RiskCoverageCurve',
    'coverage_risk',
    'rcc',
    'aurcc_compare',
    'ideal_curve',
    'excess_aurcc',
    'risk_at_coverage',

    # Orchestration
    'class_folds',
    'staged_search',
    'SelectivePipeline',
]
