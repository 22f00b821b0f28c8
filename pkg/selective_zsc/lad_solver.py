"""
First subproblem: defined-attribute-correlated dictionary learning.

    min  ||X_s - Q_d L||^2 + alpha ||L - Q_l D_s||^2 + beta ||H - U L||^2
    s.t. unit-bounded columns of Q_d, Q_l and U

solved by alternating exact minimization over L, Q_d, Q_l and U.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import InputError, NumericalError
from .matrix_core import as_matrix, constrained_dict_solve, random_unit_columns, ridge_solve, store_c_order
from .models import HyperParams, SolverSettings

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LadModel:
    """Dictionary Q_d (K_o x K_l), codes L (K_l x N_s), projection Q_l (K_l x K_d), classifier U (C_s x K_l)"""
    Q_d: np.ndarray
    L: np.ndarray
    Q_l: np.ndarray
    U: np.ndarray

    def __post_init__(self):
        store_c_order(self)

    @property
    def k_l(self) -> int:
        return int(self.Q_d.shape[1])


@dataclass
class LadFit:
    """Fitted model, initial objective and one objective value per sweep"""
    model: LadModel
    initial_objective: float
    trace: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.trace)


def _check_dims(Q_d, L, Q_l, U, X_s, D_s, H):
    k_l = L.shape[0]
    if Q_d.shape != (X_s.shape[0], k_l):
        raise InputError(f"Q_d must be {(X_s.shape[0], k_l)}, got {Q_d.shape}")
    if Q_l.shape != (k_l, D_s.shape[0]):
        raise InputError(f"Q_l must be {(k_l, D_s.shape[0])}, got {Q_l.shape}")
    if U.shape != (H.shape[0], k_l):
        raise InputError(f"U must be {(H.shape[0], k_l)}, got {U.shape}")
    n = X_s.shape[1]
    if L.shape[1] != n or D_s.shape[1] != n or H.shape[1] != n:
        raise InputError(f"sample counts disagree: X_s {n}, L {L.shape[1]}, D_s {D_s.shape[1]}, H {H.shape[1]}")


def lad_objective(model: LadModel, X_s, D_s, H, alpha: float, beta: float) -> float:
    """
    Value of the first-subproblem objective.

    Args:
        model: Current factors
        X_s: Seen features (K_o x N_s)
        D_s: Seen defined attributes (K_d x N_s)
        H: One-hot labels (C_s x N_s)
        alpha: Prior weight
        beta: Label weight

    Returns:
        ||X_s - Q_d L||^2 + alpha ||L - Q_l D_s||^2 + beta ||H - U L||^2
    """
    X_s, D_s, H = as_matrix(X_s, "X_s"), as_matrix(D_s, "D_s"), as_matrix(H, "H")
    _check_dims(model.Q_d, model.L, model.Q_l, model.U, X_s, D_s, H)
    data = np.sum((X_s - model.Q_d @ model.L) ** 2)
    prior = np.sum((model.L - model.Q_l @ D_s) ** 2)
    label = np.sum((H - model.U @ model.L) ** 2)
    return float(data + alpha * prior + beta * label)


def update_latent(Q_d, Q_l, U, X_s, D_s, H, alpha: float, beta: float,
                  settings: Optional[SolverSettings] = None) -> np.ndarray:
    """
    Exact minimizer in L with the other factors fixed.

    Solves the stacked least squares
    [Q_d; sqrt(alpha) I; sqrt(beta) U] L ~ [X_s; sqrt(alpha) Q_l D_s; sqrt(beta) H].
    """
    Q_d, Q_l, U = as_matrix(Q_d, "Q_d"), as_matrix(Q_l, "Q_l"), as_matrix(U, "U")
    X_s, D_s, H = as_matrix(X_s, "X_s"), as_matrix(D_s, "D_s"), as_matrix(H, "H")
    if alpha < 0 or beta < 0:
        raise InputError(f"alpha and beta must be nonnegative, got {alpha}, {beta}")
    k_l = Q_d.shape[1]
    _check_dims(Q_d, np.zeros((k_l, X_s.shape[1])), Q_l, U, X_s, D_s, H)
    ra, rb = np.sqrt(alpha), np.sqrt(beta)
    A = np.vstack([Q_d, ra * np.eye(k_l), rb * U])
    B = np.vstack([X_s, ra * (Q_l @ D_s), rb * H])
    return ridge_solve(A, B, 0.0, settings)


def init_lad(X_s: np.ndarray, D_s: np.ndarray, n_classes: int, k_l: int, seed: int) -> LadModel:
    """Seeded feasible start: unit columns for Q_d, Q_l, U and L = Q_l D_s."""
    rng = np.random.default_rng([seed, 0])
    Q_d = random_unit_columns(rng, X_s.shape[0], k_l)
    Q_l = random_unit_columns(rng, k_l, D_s.shape[0])
    U = random_unit_columns(rng, n_classes, k_l)
    return LadModel(Q_d=Q_d, L=Q_l @ D_s, Q_l=Q_l, U=U)


def fit_lad(X_s, D_s, H, params: HyperParams) -> LadFit:
    """
    Alternating minimization of the first subproblem.

    Each sweep updates L, then Q_d, Q_l and U, every step an exact
    coordinate minimizer, so the objective never increases.

    Args:
        X_s: Seen features (K_o x N_s)
        D_s: Seen defined attributes (K_d x N_s)
        H: One-hot labels (C_s x N_s)
        params: Hyper-parameters (alpha, beta, k_l, seed, solver)

    Returns:
        The fitted model with its per-sweep objective trace
    """
    X_s, D_s, H = as_matrix(X_s, "X_s"), as_matrix(D_s, "D_s"), as_matrix(H, "H")
    settings = params.solver
    alpha, beta = params.alpha, params.beta
    model = init_lad(X_s, D_s, H.shape[0], params.latent_dim(D_s.shape[0]), params.seed)
    _check_dims(model.Q_d, model.L, model.Q_l, model.U, X_s, D_s, H)

    fit = LadFit(model=model, initial_objective=lad_objective(model, X_s, D_s, H, alpha, beta))
    for sweep in range(1, settings.max_iters + 1):
        L = update_latent(model.Q_d, model.Q_l, model.U, X_s, D_s, H, alpha, beta, settings)
        Q_d = constrained_dict_solve(X_s, L, settings)
        Q_l = constrained_dict_solve(L, D_s, settings)
        U = constrained_dict_solve(H, L, settings)
        model = LadModel(Q_d=Q_d, L=L, Q_l=Q_l, U=U)

        value = lad_objective(model, X_s, D_s, H, alpha, beta)
        if not np.isfinite(value):
            raise NumericalError(f"first-subproblem objective became non-finite at sweep {sweep}", iteration=sweep)
        previous = fit.trace[-1] if fit.trace else fit.initial_objective
        fit.trace.append(value)
        fit.model = model
        logger.debug(f"LAD sweep {sweep}: objective {value:.10g}")
        if abs(previous - value) < settings.rel_tol * max(abs(previous), np.finfo(float).tiny):
            fit.converged = True
            break

    logger.info(
        f"LAD fit finished after {fit.iterations} sweeps: objective {fit.trace[-1]:.6g}, converged={fit.converged}"
    )
    return fit
