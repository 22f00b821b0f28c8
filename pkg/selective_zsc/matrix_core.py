"""
Dense-matrix primitives for the selective zero-shot toolkit.

Every model update reduces to one of two solvers:

    ridge_solve             min_S (gamma/2)||S||^2 + (1/2)||B - A S||_F^2
    constrained_dict_solve  min_D ||Y - D C||_F^2  s.t. ||d_i||^2 <= 1

The second is solved through its Lagrange dual, maximized by projected
Newton iterations on the diagonal dual variables.
"""
import logging
from dataclasses import dataclass, fields
from typing import Optional, Tuple

import numpy as np
from tenacity import Retrying, after_log, before_log, retry_if_exception_type, stop_after_attempt

from .errors import InputError, NumericalError
from .models import SolverSettings

logger = logging.getLogger(__name__)

ZERO_NORM = 1e-12
JITTER_ATTEMPTS = 3
JITTER_GROWTH = 10.0
MIN_STEP = 1e-12
# complementary slackness accepted when the Newton loop can make no further progress
SLACKNESS_TOL = 1e-6
# dual values closer than this fraction of ||Y||^2 are indistinguishable
DUAL_ROUNDOFF = 1e-14


def as_matrix(value, name: str) -> np.ndarray:
    """
    Coerce to a finite 2-D float array.

    Args:
        value: Array-like input
        name: Name used in error messages

    Returns:
        A float64 array with at least one row and one column
    """
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"{name} must be a 2-D matrix, got {arr.ndim} dimension(s)")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"{name} must have at least one row and one column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def as_vector(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"{name} must be a vector, got {arr.ndim} dimension(s)")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def column_norms_sq(M: np.ndarray) -> np.ndarray:
    return np.sum(M * M, axis=0)


def normalize_columns(M: np.ndarray) -> np.ndarray:
    """Scale every column to unit norm; zero columns stay zero."""
    norms = np.sqrt(column_norms_sq(M))
    norms = np.where(norms < ZERO_NORM, 1.0, norms)
    return M / norms


def store_c_order(instance) -> None:
    """Store every array field of a frozen dataclass as a C-ordered float array."""
    for f in fields(instance):
        value = getattr(instance, f.name)
        if isinstance(value, np.ndarray):
            object.__setattr__(instance, f.name, np.ascontiguousarray(value, dtype=float))


def random_unit_columns(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Uniform draw in [-1, 1] with columns normalized to unit norm."""
    return normalize_columns(rng.uniform(-1.0, 1.0, size=(rows, cols)))


def _is_singular(G: np.ndarray) -> bool:
    eig = np.linalg.eigvalsh(G)
    top = max(float(eig[-1]), 0.0)
    return top == 0.0 or float(eig[0]) <= top * G.shape[0] * np.finfo(float).eps


def _jitter_scale(G: np.ndarray) -> float:
    scale = float(np.trace(G)) / G.shape[0]
    return scale if scale > 0 else 1.0


def solve_normal(G: np.ndarray, rhs: np.ndarray, settings: Optional[SolverSettings] = None) -> np.ndarray:
    """
    Solve the symmetric positive semi-definite system G X = rhs.

    A singular G is retried with diagonal jitter of jitter * trace(G)/k,
    growing tenfold per attempt.

    Args:
        G: Symmetric normal matrix (k x k)
        rhs: Right-hand side (k x n)
        settings: Solver settings carrying the jitter factor

    Returns:
        The solution X (k x n)
    """
    settings = settings or SolverSettings()
    k = G.shape[0]
    if not _is_singular(G):
        return np.linalg.solve(G, rhs)
    if settings.jitter == 0:
        raise NumericalError(
            f"normal matrix of dimension {k} is singular and jitter is 0", dimension=k
        )

    base = settings.jitter * _jitter_scale(G)
    solution = None
    for attempt in Retrying(
        retry=retry_if_exception_type(NumericalError),
        stop=stop_after_attempt(JITTER_ATTEMPTS),
        before=before_log(logger, logging.DEBUG),
        after=after_log(logger, logging.WARNING),
        reraise=True,
    ):
        with attempt:
            amount = base * JITTER_GROWTH ** (attempt.retry_state.attempt_number - 1)
            jittered = G + amount * np.eye(k)
            if _is_singular(jittered):
                raise NumericalError(
                    f"normal matrix of dimension {k} stays singular with jitter {amount:.3e}",
                    dimension=k,
                )
            logger.warning(f"Added jitter {amount:.3e} to singular normal matrix of dimension {k}")
            solution = np.linalg.solve(jittered, rhs)
    return solution


def ridge_solve(A, B, gamma: float = 0.0, settings: Optional[SolverSettings] = None) -> np.ndarray:
    """
    Ridge-regularized least squares.

    Returns the unique minimizer (gamma I + A^T A)^-1 A^T B. A vector B
    gives a vector result.

    Args:
        A: Design matrix (m x k)
        B: Targets (m x n) or a length-m vector
        gamma: Nonnegative ridge weight
        settings: Solver settings (jitter for singular systems)

    Returns:
        S (k x n), or a length-k vector for vector B
    """
    A = as_matrix(A, "A")
    B_arr = np.asarray(B, dtype=float)
    vector_input = B_arr.ndim == 1
    B_mat = as_matrix(B_arr.reshape(-1, 1) if vector_input else B_arr, "B")
    if A.shape[0] != B_mat.shape[0]:
        raise InputError(f"row mismatch: A has {A.shape[0]} rows, B has {B_mat.shape[0]}")
    if not np.isfinite(gamma) or gamma < 0:
        raise InputError(f"gamma must be finite and nonnegative, got {gamma}")

    G = A.T @ A
    if gamma:
        G = G + gamma * np.eye(A.shape[1])
    S = solve_normal(G, A.T @ B_mat, settings)
    if not np.all(np.isfinite(S)):
        raise NumericalError("ridge solution contains non-finite entries", dimension=A.shape[1])
    return S[:, 0] if vector_input else S


@dataclass(frozen=True)
class DictSolution:
    """Constrained dictionary with its dual certificate"""
    D: np.ndarray
    dual: np.ndarray
    iterations: int
    duality_gap: float


def _kkt_violation(lam: np.ndarray, grad: np.ndarray) -> float:
    active = lam > 0
    worst = 0.0
    if np.any(active):
        worst = float(np.max(np.abs(grad[active])))
    if np.any(~active):
        worst = max(worst, float(np.max(np.maximum(grad[~active], 0.0))))
    return worst


def solve_dictionary(Y, C, settings: Optional[SolverSettings] = None) -> DictSolution:
    """
    Unit-column-norm constrained dictionary least squares via the Lagrange dual.

    D = Y C^T (C C^T + Lambda)^-1, with the nonnegative diagonal Lambda
    maximizing the dual, found by projected Newton ascent from zero.

    Args:
        Y: Targets (m x n)
        C: Codes (k x n)
        settings: Solver settings

    Returns:
        The dictionary (m x k) with its dual variables
    """
    Y = as_matrix(Y, "Y")
    C = as_matrix(C, "C")
    if Y.shape[1] != C.shape[1]:
        raise InputError(f"column mismatch: Y has {Y.shape[1]} columns, C has {C.shape[1]}")
    settings = settings or SolverSettings()
    k = C.shape[0]

    P = Y @ C.T
    CCt = C @ C.T
    ridge = 0.0
    if _is_singular(CCt):
        if settings.jitter == 0:
            raise NumericalError(
                f"code Gram matrix of dimension {k} is singular and jitter is 0", dimension=k
            )
        ridge = settings.jitter * _jitter_scale(CCt)
    yy = float(np.sum(Y * Y))
    roundoff = DUAL_ROUNDOFF * max(yy, 1.0)

    def evaluate(lam: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        Minv = np.linalg.inv(CCt + np.diag(lam + ridge))
        Minv = 0.5 * (Minv + Minv.T)
        D = P @ Minv
        return D, Minv, yy - float(np.sum(D * P)) - float(lam.sum())

    lam = np.zeros(k)
    D, Minv, dual = evaluate(lam)
    converged = False
    iterations = 0
    violation = np.inf
    for iterations in range(1, settings.dual_max_iters + 1):
        grad = column_norms_sq(D) - 1.0
        violation = _kkt_violation(lam, grad)
        if violation <= settings.dual_tol:
            converged = True
            break

        free = np.flatnonzero((lam > 0) | (grad > 0))
        H = -2.0 * (D.T @ D) * Minv
        H_ff = H[np.ix_(free, free)]
        try:
            step = np.linalg.solve(H_ff, -grad[free])
        except np.linalg.LinAlgError:
            step = -np.linalg.pinv(H_ff) @ grad[free]
        if not np.all(np.isfinite(step)) or float(grad[free] @ step) <= 0:
            step = grad[free]
        direction = np.zeros(k)
        direction[free] = step

        t = 1.0
        accepted = False
        while t >= MIN_STEP:
            candidate = np.maximum(lam + t * direction, 0.0)
            cand_D, cand_Minv, cand_dual = evaluate(candidate)
            if cand_dual > dual + roundoff:
                accepted = True
                break
            # near the optimum the dual value is lost to cancellation; fall back on the KKT residual
            if cand_dual >= dual - roundoff:
                cand_violation = _kkt_violation(candidate, column_norms_sq(cand_D) - 1.0)
                if cand_violation < violation:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            break
        lam, D, Minv, dual = candidate, cand_D, cand_Minv, cand_dual

    if not converged:
        violation = _kkt_violation(lam, column_norms_sq(D) - 1.0)
        converged = violation <= SLACKNESS_TOL
        if converged:
            logger.debug(f"Dual solve stalled at KKT violation {violation:.3e}, within slackness tolerance")

    norms = column_norms_sq(D)
    over = norms > 1.0
    if np.any(over):
        D = D.copy()
        D[:, over] = D[:, over] / np.sqrt(norms[over])
    gap = float(np.sum((Y - D @ C) ** 2)) - dual

    if not converged:
        raise NumericalError(
            f"Lagrange dual did not converge after {iterations} iterations "
            f"(KKT violation {violation:.3e}, duality gap {gap:.3e})",
            dimension=k,
            iteration=iterations,
            duality_gap=gap,
        )
    if not np.all(np.isfinite(D)):
        raise NumericalError("dictionary contains non-finite entries", dimension=k)
    logger.debug(f"Dual solve converged in {iterations} iterations, gap {gap:.3e}")
    return DictSolution(D=D, dual=lam, iterations=iterations, duality_gap=gap)


def constrained_dict_solve(Y, C, settings: Optional[SolverSettings] = None) -> np.ndarray:
    """min_D ||Y - D C||_F^2 subject to every column of D having squared norm <= 1."""
    return solve_dictionary(Y, C, settings).D


def cosine_sim(a, b) -> float:
    """
    Cosine similarity, 0 when either vector has norm below 1e-12.

    Args:
        a: First vector
        b: Second vector of equal length

    Returns:
        A real in [-1, 1]
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise InputError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < ZERO_NORM or nb < ZERO_NORM:
        return 0.0
    return float(np.clip(float(a @ b) / (na * nb), -1.0, 1.0))
