"""
Pydantic models for the selective zero-shot toolkit.

Configuration, reports and manifests shared by the solvers, the harness
and the command-line surface.
"""

from .pydantic_models import (
    # Enums
    ResidualCenterSource,
    MatchSpace,
    DatasetRole,
    Decision,
    Ordering,
    AurccMethod,

    # Configuration Models
    SolverSettings,
    HyperParams,
    SearchPlan,
    SynthConfig,

    # Report Models
    Violation,
    ValidationReport,
    ConfidenceReport,

    # Persistence Models
    ArchiveManifest,

    # Constants
    DEFAULT_LAMBDA_GRID,
    SOLVER_KEYS,
)

__all__ = [
    # Enums
    'ResidualCenterSource',
    'MatchSpace',
    'DatasetRole',
    'Decision',
    'Ordering',
    'AurccMethod',

    # Configuration Models
    'SolverSettings',
    'HyperParams',
    'SearchPlan',
    'SynthConfig',

    # Report Models
    'Violation',
    'ValidationReport',
    'ConfidenceReport',

    # Persistence Models
    'ArchiveManifest',

    # Constants
    'DEFAULT_LAMBDA_GRID',
    'SOLVER_KEYS',
]
