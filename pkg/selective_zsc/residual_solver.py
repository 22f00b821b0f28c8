"""
Second subproblem: residual attribute learning with the first-subproblem
factors frozen.

Each sweep refreshes R_s, Q_r, V and W in that order, every update being
the closed form of its block:

    R_s = (Q~^T Q~)^-1 Q~^T X~,  X~ = [X_s - Q_d L; delta (H - U L); -eta W L],
                                Q~ = [Q_r; delta V; -eta I]
    Q_r, V, W = unit-column constrained least squares on their own terms.

Those closed forms minimize the stacked surrogate

    ||X_s - Q_d L - Q_r R_s||^2 + delta^2 ||H - U L - V R_s||^2 + eta^2 ||W L - R_s||^2

which is what convergence is monitored on; the scalarized objective with
its -eta term is only reported.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .data_model import Dataset, one_hot
from .errors import InputError, NumericalError
from .lad_solver import LadFit, LadModel, fit_lad
from .matrix_core import as_matrix, constrained_dict_solve, random_unit_columns, ridge_solve, store_c_order
from .models import HyperParams, ResidualCenterSource, SolverSettings

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResidualModel:
    """Q_r (K_o x K_r), R_s (K_r x N_s), V (C_s x K_r), W (K_r x K_l), centers R_o (K_r x C_s)"""
    Q_r: np.ndarray
    R_s: np.ndarray
    V: np.ndarray
    W: np.ndarray
    R_o: np.ndarray

    def __post_init__(self):
        store_c_order(self)

    @property
    def k_r(self) -> int:
        return int(self.Q_r.shape[1])


@dataclass(frozen=True)
class AugmentedModel:
    """
    Everything inference needs: both subproblem solutions, the
    hyper-parameters, the seen class ordering and the seen attribute table.

    `residual` is None for a model trained on the first criterion only.
    """
    lad: LadModel
    residual: Optional[ResidualModel]
    params: HyperParams
    seen_class_order: Tuple[int, ...]
    class_attr_seen: np.ndarray

    def __post_init__(self):
        store_c_order(self)

    @property
    def k_d(self) -> int:
        return int(self.class_attr_seen.shape[0])


@dataclass
class ResidualFit:
    """Surrogate values per sweep, with the scalarized objective alongside"""
    model: Optional[ResidualModel]
    initial_objective: float
    trace: List[float] = field(default_factory=list)
    eq10_trace: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.trace)


def update_Rs(Q_r, V, W, Q_d, L, U, X_s, H, delta: float, eta: float,
              settings: Optional[SolverSettings] = None) -> np.ndarray:
    """
    Closed-form residual codes.

    Args:
        Q_r: Residual dictionary (K_o x K_r)
        V: Residual classifier (C_s x K_r)
        W: Residual predictor (K_r x K_l)
        Q_d: Defined dictionary (K_o x K_l)
        L: Latent codes (K_l x N_s)
        U: Seen-class classifier (C_s x K_l)
        X_s: Seen features (K_o x N_s)
        H: One-hot labels (C_s x N_s)
        delta: Discriminability weight
        eta: Predictability weight

    Returns:
        R_s (K_r x N_s)
    """
    k_r = Q_r.shape[1]
    Q_tilde = np.vstack([Q_r, delta * V, -eta * np.eye(k_r)])
    X_tilde = np.vstack([X_s - Q_d @ L, delta * (H - U @ L), -eta * (W @ L)])
    return ridge_solve(Q_tilde, X_tilde, 0.0, settings)


def update_Qr(X_s, Q_d, L, R_s, settings: Optional[SolverSettings] = None) -> np.ndarray:
    return constrained_dict_solve(X_s - Q_d @ L, R_s, settings)


def update_V(H, U, L, R_s, settings: Optional[SolverSettings] = None) -> np.ndarray:
    return constrained_dict_solve(H - U @ L, R_s, settings)


def update_W(R_s, L, settings: Optional[SolverSettings] = None) -> np.ndarray:
    return constrained_dict_solve(R_s, L, settings)


def stacked_objective(Q_r, R_s, V, W, Q_d, L, U, X_s, H, delta: float, eta: float) -> float:
    """Surrogate that every residual update minimizes exactly."""
    data = np.sum((X_s - Q_d @ L - Q_r @ R_s) ** 2)
    label = np.sum((H - U @ L - V @ R_s) ** 2)
    predict = np.sum((W @ L - R_s) ** 2)
    return float(data + delta ** 2 * label + eta ** 2 * predict)


def eq10_objective(Q_r, R_s, V, W, Q_d, L, U, X_s, H, delta: float, eta: float) -> float:
    """
    Scalarized second-subproblem objective, possibly negative.

    Returns:
        ||X_s - Q_d L - Q_r R_s||^2 + delta ||H - U L - V R_s||^2 - eta ||R_s - W L||^2
    """
    X_s, H = as_matrix(X_s, "X_s"), as_matrix(H, "H")
    if Q_r.shape[0] != X_s.shape[0] or R_s.shape != (Q_r.shape[1], X_s.shape[1]):
        raise InputError(f"residual factors do not match features: Q_r {Q_r.shape}, R_s {R_s.shape}, X_s {X_s.shape}")
    if V.shape != (H.shape[0], Q_r.shape[1]) or W.shape != (Q_r.shape[1], L.shape[0]):
        raise InputError(f"V {V.shape} or W {W.shape} inconsistent with K_r={Q_r.shape[1]}, K_l={L.shape[0]}")
    data = np.sum((X_s - Q_d @ L - Q_r @ R_s) ** 2)
    label = np.sum((H - U @ L - V @ R_s) ** 2)
    predict = np.sum((R_s - W @ L) ** 2)
    return float(data + delta * label - eta * predict)


def encode_augmented(X, Q_d: np.ndarray, Q_r: Optional[np.ndarray], epsilon: float,
                     settings: Optional[SolverSettings] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Joint ridge encoding over the concatenated dictionary [Q_d | Q_r].

    Args:
        X: Features (K_o x N) or a single feature vector
        Q_d: Defined dictionary
        Q_r: Residual dictionary, or None for a first-criterion model
        epsilon: Ridge weight

    Returns:
        Latent codes and residual codes (the latter has zero rows without Q_r)
    """
    dictionary = Q_d if Q_r is None else np.hstack([Q_d, Q_r])
    codes = ridge_solve(dictionary, X, epsilon, settings)
    k_l = Q_d.shape[1]
    return codes[:k_l], codes[k_l:]


def residual_centers(R: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Per-class means of residual code columns; a class without samples gets a zero column."""
    counts = H.sum(axis=1)
    sums = R @ H.T
    return sums / np.where(counts > 0, counts, 1.0)


def init_residual(k_o: int, n_classes: int, k_r: int, k_l: int, seed: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng([seed, 1])
    Q_r = random_unit_columns(rng, k_o, k_r)
    V = random_unit_columns(rng, n_classes, k_r)
    W = random_unit_columns(rng, k_r, k_l)
    return Q_r, V, W


def fit_residual(X_s, H, labels: Sequence[int], lad: LadModel, params: HyperParams) -> ResidualFit:
    """
    Alternating residual attribute learning.

    Args:
        X_s: Seen features (K_o x N_s)
        H: One-hot labels (C_s x N_s)
        labels: Class id per sample, consistent with H
        lad: Frozen first-subproblem solution
        params: Hyper-parameters (delta, eta, k_r, seed, residual_centers, solver)

    Returns:
        The fitted residual model with surrogate and scalarized traces
    """
    X_s, H = as_matrix(X_s, "X_s"), as_matrix(H, "H")
    if len(labels) != X_s.shape[1] or H.shape[1] != X_s.shape[1]:
        raise InputError(f"labels ({len(labels)}) and H ({H.shape[1]}) must cover all {X_s.shape[1]} samples")
    settings = params.solver
    delta, eta = params.delta, params.eta
    Q_d, L, U = lad.Q_d, lad.L, lad.U

    Q_r, V, W = init_residual(X_s.shape[0], H.shape[0], params.k_r, lad.k_l, params.seed)
    R_s = np.zeros((params.k_r, X_s.shape[1]))
    previous = stacked_objective(Q_r, R_s, V, W, Q_d, L, U, X_s, H, delta, eta)
    fit = ResidualFit(model=None, initial_objective=previous)
    for sweep in range(1, settings.max_iters + 1):
        R_s = update_Rs(Q_r, V, W, Q_d, L, U, X_s, H, delta, eta, settings)
        Q_r = update_Qr(X_s, Q_d, L, R_s, settings)
        V = update_V(H, U, L, R_s, settings)
        W = update_W(R_s, L, settings)

        value = stacked_objective(Q_r, R_s, V, W, Q_d, L, U, X_s, H, delta, eta)
        literal = eq10_objective(Q_r, R_s, V, W, Q_d, L, U, X_s, H, delta, eta)
        if not (np.isfinite(value) and np.isfinite(literal)):
            raise NumericalError(f"residual objective became non-finite at sweep {sweep}", iteration=sweep)
        fit.trace.append(value)
        fit.eq10_trace.append(literal)
        logger.debug(f"Residual sweep {sweep}: surrogate {value:.10g}, scalarized {literal:.10g}")
        if abs(previous - value) < settings.rel_tol * max(abs(previous), np.finfo(float).tiny):
            fit.converged = True
            break
        previous = value

    if params.residual_centers == ResidualCenterSource.REINFER:
        _, codes = encode_augmented(X_s, Q_d, Q_r, params.epsilon, settings)
    else:
        codes = R_s
    fit.model = ResidualModel(Q_r=Q_r, R_s=R_s, V=V, W=W, R_o=residual_centers(codes, H))
    logger.info(
        f"Residual fit finished after {fit.iterations} sweeps: surrogate {fit.trace[-1]:.6g}, "
        f"converged={fit.converged}"
    )
    return fit


@dataclass
class AugmentedFit:
    model: AugmentedModel
    lad_fit: LadFit
    residual_fit: Optional[ResidualFit] = None


def fit_augmented(dataset: Dataset, params: HyperParams, with_residual: bool = True,
                  lad_fit: Optional[LadFit] = None) -> AugmentedFit:
    """
    Train both subproblems on the seen-class samples of a dataset.

    Args:
        dataset: Dataset whose seen-class samples form the training split
        params: Hyper-parameters
        with_residual: False trains the first criterion only
        lad_fit: A first-subproblem fit on the same samples to reuse

    Returns:
        The augmented model with both fit traces
    """
    train = dataset.train_view()
    if train.n_samples == 0:
        raise InputError("dataset holds no samples of seen classes")
    order = train.seen_order
    X_s = np.array(train.X)
    D_s = train.per_sample_attributes()
    H = one_hot(train.labels, order).H
    if lad_fit is None:
        lad_fit = fit_lad(X_s, D_s, H, params)
    elif lad_fit.model.L.shape[1] != X_s.shape[1]:
        raise InputError(f"reused first-subproblem fit covers {lad_fit.model.L.shape[1]} samples, dataset has {X_s.shape[1]}")
    residual_fit = None
    if with_residual:
        residual_fit = fit_residual(X_s, H, train.labels.tolist(), lad_fit.model, params)
    model = AugmentedModel(
        lad=lad_fit.model,
        residual=residual_fit.model if residual_fit else None,
        params=params,
        seen_class_order=order,
        class_attr_seen=train.attributes_for(order),
    )
    return AugmentedFit(model=model, lad_fit=lad_fit, residual_fit=residual_fit)
