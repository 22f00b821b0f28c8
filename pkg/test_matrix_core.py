"""
Tests for the ridge and constrained dictionary solvers.
Oracles are plain gradient methods written here, independent of the solvers.
"""
import logging

import numpy as np
import pytest

from selective_zsc.errors import InputError, NumericalError
from selective_zsc.matrix_core import (
    constrained_dict_solve,
    cosine_sim,
    normalize_columns,
    ridge_solve,
    solve_dictionary,
)
from selective_zsc.models import SolverSettings


def ridge_oracle(A, B, gamma, tol=1e-12, max_steps=200000):
    """Gradient descent on (gamma/2)||S||^2 + (1/2)||B - A S||^2."""
    lipschitz = np.linalg.norm(A, 2) ** 2 + gamma
    S = np.zeros((A.shape[1], B.shape[1]))
    for _ in range(max_steps):
        grad = gamma * S + A.T @ (A @ S - B)
        if np.linalg.norm(grad) < tol:
            break
        S = S - grad / lipschitz
    return S


def dict_objective(Y, D, C):
    return float(np.sum((Y - D @ C) ** 2))


def projected_gradient_oracle(Y, C, steps=20000):
    """Gradient step on ||Y - D C||^2 followed by projection onto the unit ball per column."""
    lipschitz = 2.0 * np.linalg.norm(C, 2) ** 2
    D = np.zeros((Y.shape[0], C.shape[0]))
    for _ in range(steps):
        D = D - 2.0 * (D @ C - Y) @ C.T / lipschitz
        norms = np.sqrt(np.sum(D * D, axis=0))
        D = D / np.maximum(norms, 1.0)
    return D


def test_ridge_identity_returns_targets():
    """Test the identity design returns the targets unchanged."""
    b = np.array([[1.0], [-2.0], [3.5]])
    np.testing.assert_allclose(ridge_solve(np.eye(3), b, 0.0), b, atol=1e-12)


def test_ridge_large_penalty_shrinks_to_zero():
    b = np.array([[1.0], [-2.0], [3.5]])
    np.testing.assert_allclose(ridge_solve(np.eye(3), b, 1e12), 0.0, atol=1e-6)


def test_ridge_vector_target_gives_vector():
    S = ridge_solve(np.eye(3), np.array([1.0, 2.0, 3.0]))
    assert S.shape == (3,)


def test_ridge_matches_gradient_descent_oracle():
    """Test ridge_solve against gradient descent over 20 seeded instances."""
    for seed in range(20):
        r = np.random.default_rng(seed)
        A, B = r.normal(size=(8, 5)), r.normal(size=(8, 2))
        S = ridge_solve(A, B, 0.5)
        np.testing.assert_allclose(S, ridge_oracle(A, B, 0.5), atol=1e-8)
        gradient = 0.5 * S + A.T @ (A @ S - B)
        assert np.max(np.abs(gradient)) < 1e-8 * (1 + np.max(np.abs(B)))


def test_ridge_is_deterministic(rng):
    A, B = rng.normal(size=(8, 5)), rng.normal(size=(8, 2))
    assert np.array_equal(ridge_solve(A, B, 0.3), ridge_solve(A, B, 0.3))


def test_ridge_rejects_row_mismatch():
    with pytest.raises(InputError):
        ridge_solve(np.eye(3), np.ones((4, 1)))


def test_ridge_rejects_negative_gamma():
    with pytest.raises(InputError):
        ridge_solve(np.eye(3), np.ones((3, 1)), -1.0)


def test_ridge_singular_without_jitter_names_dimension():
    """Test a rank-deficient design with jitter disabled raises a numerical error."""
    A = np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(NumericalError) as err:
        ridge_solve(A, np.ones((3, 1)), 0.0, SolverSettings(jitter=0.0))
    assert err.value.dimension == 2
    assert err.value.code == "E_NUMERICAL"


def test_ridge_singular_with_jitter_recovers():
    A = np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]])
    S = ridge_solve(A, np.ones((3, 1)), 0.0, SolverSettings(jitter=1e-8))
    assert np.all(np.isfinite(S))
    np.testing.assert_allclose(A @ S, A @ np.linalg.pinv(A) @ np.ones((3, 1)), atol=1e-5)


def test_jitter_escalation_logs_warning(caplog):
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    with caplog.at_level(logging.WARNING, logger="selective_zsc.matrix_core"):
        ridge_solve(A, np.ones((2, 1)), 0.0, SolverSettings(jitter=1e-8))
    assert any(r.levelno == logging.WARNING and "Added jitter" in r.getMessage() for r in caplog.records)


def test_dict_scalar_case_clips_to_unit_norm():
    """Test the one-variable case (4 - d)^2 with |d| <= 1 gives d = 1."""
    D = constrained_dict_solve(np.array([[4.0]]), np.array([[1.0]]))
    np.testing.assert_allclose(D, [[1.0]], atol=1e-9)


def test_dict_inactive_constraints_match_unconstrained(rng):
    C = rng.normal(size=(4, 12))
    D_true = 0.2 * normalize_columns(rng.normal(size=(10, 4)))
    Y = D_true @ C
    unconstrained = Y @ C.T @ np.linalg.inv(C @ C.T)
    np.testing.assert_allclose(constrained_dict_solve(Y, C), unconstrained, atol=1e-8)


def test_dict_matches_projected_gradient_oracle():
    """Test the dual solution against projected gradient over 20 seeded instances."""
    for seed in range(20):
        r = np.random.default_rng(100 + seed)
        Y, C = r.normal(size=(10, 6)), r.normal(size=(4, 6))
        solution = solve_dictionary(Y, C)
        D = solution.D
        norms = np.sum(D * D, axis=0)
        assert np.all(norms <= 1.0 + 1e-9)
        ours = dict_objective(Y, D, C)
        oracle = dict_objective(Y, projected_gradient_oracle(Y, C), C)
        assert ours <= oracle * (1 + 1e-6) + 1e-12
        active = solution.dual > 1e-8
        np.testing.assert_allclose(norms[active], 1.0, atol=1e-6)


def test_dict_rejects_column_mismatch():
    with pytest.raises(InputError):
        constrained_dict_solve(np.ones((3, 4)), np.ones((2, 5)))


def test_dict_nonconvergence_carries_gap(rng):
    Y, C = 10 * rng.normal(size=(10, 6)), rng.normal(size=(4, 6))
    with pytest.raises(NumericalError) as err:
        solve_dictionary(Y, C, SolverSettings(dual_max_iters=1, dual_tol=1e-14))
    assert err.value.duality_gap is not None


def test_cosine_examples():
    assert cosine_sim([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert cosine_sim([1, 0], [0, 1]) == 0.0
    assert cosine_sim([1, 1], [1, -1]) == 0.0


def test_cosine_zero_vector_is_neutral():
    assert cosine_sim([0.0, 0.0], [1.0, 2.0]) == 0.0


def test_cosine_length_mismatch():
    with pytest.raises(InputError):
        cosine_sim([1, 2], [1, 2, 3])


@pytest.mark.parametrize("seed", range(10))
def test_dict_ill_conditioned_codes_converge(seed):
    """Nearly collinear code rows with one column pushed against its norm bound."""
    r = np.random.default_rng(seed)
    C = r.normal(size=(1, 12)) + 1e-2 * r.normal(size=(3, 12))
    D_true = normalize_columns(r.normal(size=(12, 3))) * np.array([3.0, 0.3, 0.3])
    Y = D_true @ C + 1e-3 * r.normal(size=(12, 12))
    solution = solve_dictionary(Y, C)
    norms = np.sum(solution.D ** 2, axis=0)
    assert np.all(norms <= 1.0 + 1e-9)
    active = solution.dual > 1e-8
    np.testing.assert_allclose(norms[active], 1.0, atol=1e-6)
    oracle = dict_objective(Y, projected_gradient_oracle(Y, C), C)
    assert dict_objective(Y, solution.D, C) <= oracle * (1 + 1e-6) + 1e-12
