from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import InputError


# Enums
class ResidualCenterSource(str, Enum):
    CODES = "codes"
    REINFER = "reinfer"


class MatchSpace(str, Enum):
    DEFINED = "defined"
    LATENT = "latent"


class DatasetRole(str, Enum):
    TRAIN = "train"
    TEST = "test"
    MIXED = "mixed"


class Decision(str, Enum):
    REJECT = "REJECT"


class Ordering(str, Enum):
    A_BETTER = "a_better"
    B_BETTER = "b_better"
    TIE = "tie"


class AurccMethod(str, Enum):
    STEP = "step"
    TRAPEZOID = "trapezoid"


SOLVER_KEYS = ("max_iters", "rel_tol", "jitter", "dual_max_iters", "dual_tol")
DEFAULT_LAMBDA_GRID = [round(0.1 * i, 1) for i in range(11)]


def _scalar(key: str, values: List[str]) -> str:
    if len(values) != 1:
        raise InputError(f"config key '{key}' expects exactly one value, got {len(values)}")
    return values[0]


# Solver and hyper-parameter models
class SolverSettings(BaseModel):
    """Iteration caps and tolerances shared by every solver"""
    model_config = ConfigDict(frozen=True)

    max_iters: int = Field(100, ge=1, description="Maximum alternation sweeps")
    rel_tol: float = Field(1e-6, gt=0, description="Relative objective change that stops a fit")
    jitter: float = Field(1e-8, ge=0, description="Relative diagonal regularizer for singular normal matrices")
    dual_max_iters: int = Field(500, ge=1, description="Newton iterations for the Lagrange dual")
    dual_tol: float = Field(1e-10, gt=0, description="KKT tolerance for the Lagrange dual")


class HyperParams(BaseModel):
    """
    Every scalar knob of the augmented-attribute model.

    `lambda` is a keyword, so the field is `lambda_` and is read and
    written under the alias `lambda`.
    """
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    alpha: float = Field(1.0, ge=0, description="Weight of the latent prior term")
    beta: float = Field(1.0, ge=0, description="Weight of the seen-class label term")
    delta: float = Field(1.0, ge=0, description="Weight of the residual discriminability term")
    eta: float = Field(0.1, ge=0, description="Weight of the residual predictability term")
    gamma: float = Field(0.1, ge=0, description="Ridge weight of the similarity vectors")
    lambda_: float = Field(0.5, ge=0, le=1, alias="lambda", description="Trade-off between conf_d and conf_r")
    k_l: Optional[int] = Field(None, ge=1, description="Latent dimension, defaults to K_d")
    k_r: int = Field(8, ge=1, description="Residual attribute dimension")
    tau: float = Field(0.0, description="Selection threshold")
    epsilon: float = Field(1e-3, gt=0, description="Ridge weight of the test-time encoder")
    seed: int = Field(0, description="Seed for dictionary initialization")
    residual_centers: ResidualCenterSource = ResidualCenterSource.CODES
    match_space: MatchSpace = MatchSpace.DEFINED
    solver: SolverSettings = Field(default_factory=SolverSettings)

    def latent_dim(self, k_d: int) -> int:
        return self.k_l if self.k_l is not None else k_d

    def with_updates(self, **changes: Any) -> "HyperParams":
        """Copy with changes applied and re-validated."""
        if "lambda_" in changes:
            changes["lambda"] = changes.pop("lambda_")
        data = self.model_dump(by_alias=True)
        data.update(changes)
        try:
            return type(self).model_validate(data)
        except ValidationError as e:
            raise InputError(f"invalid hyper-parameters: {e}") from e

    @classmethod
    def from_config(cls, config: Dict[str, List[str]]) -> "HyperParams":
        """
        Build from parsed `key value` lines.

        Args:
            config: Mapping of key to its whitespace-separated values

        Returns:
            Validated hyper-parameters
        """
        top: Dict[str, Any] = {}
        solver: Dict[str, Any] = {}
        known = set(cls.model_fields) | {"lambda"}
        for key, values in config.items():
            value = _scalar(key, values)
            if key in SOLVER_KEYS:
                solver[key] = value
            elif key in known:
                top[key] = None if value.lower() == "none" else value
            else:
                raise InputError(f"unknown hyper-parameter key '{key}'")
        if solver:
            top["solver"] = solver
        try:
            return cls.model_validate(top)
        except ValidationError as e:
            raise InputError(f"invalid hyper-parameters: {e}") from e

    def to_config_lines(self) -> List[str]:
        data = self.model_dump(by_alias=True, mode="json")
        solver = data.pop("solver")
        lines = [f"{key} {_format_value(value)}" for key, value in data.items()]
        lines.extend(f"{key} {_format_value(value)}" for key, value in solver.items())
        return lines


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    if value is None:
        return "none"
    return str(value)


class SearchPlan(BaseModel):
    """Grids for the staged class-wise cross-validation"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    alpha: List[float] = Field(default_factory=lambda: [1.0], min_length=1)
    beta: List[float] = Field(default_factory=lambda: [1.0], min_length=1)
    delta: List[float] = Field(default_factory=lambda: [1.0], min_length=1)
    eta: List[float] = Field(default_factory=lambda: [0.1], min_length=1)
    k_r: List[int] = Field(default_factory=lambda: [8], min_length=1)
    gamma: List[float] = Field(default_factory=lambda: [0.1], min_length=1)
    lambda_: List[float] = Field(default_factory=lambda: list(DEFAULT_LAMBDA_GRID), min_length=1, alias="lambda")
    fold_count: int = Field(5, ge=2, description="Number of class-wise folds")
    seed: int = 0

    @field_validator("alpha", "beta", "delta", "eta", "gamma")
    @classmethod
    def validate_nonnegative(cls, v):
        if any(x < 0 for x in v):
            raise ValueError("grid values must be nonnegative")
        return v

    @field_validator("k_r")
    @classmethod
    def validate_dimensions(cls, v):
        if any(x < 1 for x in v):
            raise ValueError("K_r grid values must be >= 1")
        return v

    @field_validator("lambda_")
    @classmethod
    def validate_lambda(cls, v):
        if any(x < 0 or x > 1 for x in v):
            raise ValueError("lambda grid values must lie in [0, 1]")
        return v

    @classmethod
    def from_config(cls, config: Dict[str, List[str]]) -> "SearchPlan":
        data: Dict[str, Any] = {}
        known = set(cls.model_fields) | {"lambda"}
        for key, values in config.items():
            if key not in known:
                raise InputError(f"unknown search-plan key '{key}'")
            data[key] = _scalar(key, values) if key in ("fold_count", "seed") else values
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise InputError(f"invalid search plan: {e}") from e


class SynthConfig(BaseModel):
    """Shape and noise knobs of the planted synthetic benchmark"""
    model_config = ConfigDict(frozen=True)

    seed: int = 0
    k_o: int = Field(64, ge=1)
    k_d: int = Field(16, ge=1)
    k_l: int = Field(16, ge=1)
    k_r: int = Field(8, ge=1)
    classes_seen: int = Field(10, ge=1)
    classes_unseen: int = Field(4, ge=1)
    samples_per_class: int = Field(30, ge=1)
    noise: float = Field(0.1, ge=0, description="Feature noise level")
    attribute_noise: float = Field(0.5, ge=0, description="Per-sample spread of defined attributes")
    residual_noise: float = Field(0.05, ge=0, description="Per-sample spread of residual codes")
    residual_scale: float = Field(1.0, gt=0, description="Magnitude of the residual prototypes")


# Validation report
class Violation(BaseModel):
    kind: str
    message: str
    sample: Optional[int] = None
    class_id: Optional[int] = None
    row: Optional[int] = None
    col: Optional[int] = None


class ValidationReport(BaseModel):
    violations: List[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> List[str]:
        return [v.kind for v in self.violations]


# Inference record
class ConfidenceReport(BaseModel):
    """Per-sample prediction with its three confidence scores"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    predicted_class: int
    conf_d: float = Field(..., ge=-1.0, le=1.0)
    conf_r: float = Field(..., ge=-1.0, le=1.0)
    conf: float
    s_d: np.ndarray
    s_r: np.ndarray

    @model_validator(mode="after")
    def validate_lengths(self):
        if self.s_d.shape != self.s_r.shape:
            raise ValueError("s_d and s_r must have equal lengths")
        return self


# Persistence
class ArchiveManifest(BaseModel):
    """Manifest stored next to the factor matrices of a model archive"""
    format_version: int = 1
    params: HyperParams
    seen_class_order: List[int]
    dims: Dict[str, Tuple[int, int]]
    has_residual: bool = True

    def expected_files(self) -> Iterable[str]:
        return self.dims.keys()
