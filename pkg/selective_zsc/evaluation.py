"""
Selective classification metrics: coverage, selective risk, risk-coverage
curves and the area under them (AURCC, lower is better).

Samples enter coverage in order of decreasing confidence; samples sharing
a confidence value are accepted together, so every curve is invariant to
the order of the input.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import EmptyCoverageError, InputError
from .models import AurccMethod, Ordering

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RiskCoverageCurve:
    """Points ordered by strictly increasing coverage, with the confidence at which each is reached"""
    coverage: np.ndarray
    risk: np.ndarray
    thresholds: np.ndarray
    aurcc: float

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.coverage.tolist(), self.risk.tolist()))


def _as_bool(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise InputError(f"{name} must be a 1-D sequence")
    return arr.astype(bool)


def coverage_risk(correct: Sequence[bool], accepted: Sequence[bool]) -> Tuple[float, float]:
    """
    Empirical coverage and selective 0/1 risk.

    Args:
        correct: Whether each prediction is right
        accepted: Whether the selector kept each sample

    Returns:
        (coverage, risk)

    Raises:
        EmptyCoverageError: when no sample is accepted
    """
    correct = _as_bool(correct, "correct")
    accepted = _as_bool(accepted, "accepted")
    if correct.shape != accepted.shape or correct.shape[0] < 1:
        raise InputError(f"correct and accepted must be equal nonempty sequences, got {correct.shape[0]} and {accepted.shape[0]}")
    kept = int(accepted.sum())
    if kept == 0:
        raise EmptyCoverageError("no sample accepted; selective risk is undefined at coverage 0")
    wrong = int(np.sum(accepted & ~correct))
    return kept / correct.shape[0], wrong / kept


def _area(coverage: np.ndarray, risk: np.ndarray, method: AurccMethod) -> float:
    widths = np.diff(np.concatenate([[0.0], coverage]))
    if method == AurccMethod.TRAPEZOID:
        heights = np.concatenate([[risk[0]], 0.5 * (risk[1:] + risk[:-1])])
    else:
        heights = risk
    return float(np.sum(widths * heights) / coverage[-1])


def rcc(confidences: Sequence[float], correct: Sequence[bool],
        method: AurccMethod = AurccMethod.STEP) -> RiskCoverageCurve:
    """
    Risk-coverage curve over every distinct confidence value.

    Each point's risk is held over the coverage segment ending at it
    (the first segment down to 0+) unless `method` asks for trapezoids.

    Args:
        confidences: Confidence per sample
        correct: Whether each prediction is right
        method: Integration rule for the area

    Returns:
        RiskCoverageCurve with its AURCC normalized by the coverage span
    """
    conf = np.asarray(confidences, dtype=float)
    correct = _as_bool(correct, "correct")
    if conf.ndim != 1 or conf.shape[0] < 1:
        raise InputError("confidences must be a nonempty 1-D sequence")
    if conf.shape != correct.shape:
        raise InputError(f"{conf.shape[0]} confidences for {correct.shape[0]} correctness flags")
    if not np.all(np.isfinite(conf)):
        raise InputError("confidences contain non-finite values")

    order = np.argsort(-conf, kind="stable")
    sorted_conf = conf[order]
    wrong = (~correct[order]).astype(np.int64)
    ends = np.flatnonzero(np.concatenate([sorted_conf[1:] != sorted_conf[:-1], [True]]))
    accepted = ends + 1
    coverage = accepted / conf.shape[0]
    risk = np.cumsum(wrong)[ends] / accepted
    return RiskCoverageCurve(
        coverage=coverage,
        risk=risk,
        thresholds=sorted_conf[ends],
        aurcc=_area(coverage, risk, AurccMethod(method)),
    )


def aurcc_compare(curve_a: RiskCoverageCurve, curve_b: RiskCoverageCurve, tol: float = 0.0) -> Ordering:
    """Lower AURCC is better."""
    diff = curve_a.aurcc - curve_b.aurcc
    if abs(diff) <= tol:
        return Ordering.TIE
    return Ordering.A_BETTER if diff < 0 else Ordering.B_BETTER


def ideal_curve(correct: Sequence[bool], method: AurccMethod = AurccMethod.STEP) -> RiskCoverageCurve:
    """Curve of the oracle selector that rejects every mistake before any correct prediction."""
    correct = _as_bool(correct, "correct")
    n = correct.shape[0]
    oracle = correct.astype(float) * (n + 1) + np.arange(n, 0, -1)
    return rcc(oracle, correct, method)


def excess_aurcc(confidences: Sequence[float], correct: Sequence[bool]) -> float:
    """AURCC above the oracle selector's for the same predictions."""
    return rcc(confidences, correct).aurcc - ideal_curve(correct).aurcc


def risk_at_coverage(curve: RiskCoverageCurve, coverage: float) -> float:
    """Risk of the first point whose coverage reaches the requested value."""
    reached = np.flatnonzero(curve.coverage >= coverage - 1e-12)
    if reached.size == 0:
        raise InputError(f"curve never reaches coverage {coverage}")
    return float(curve.risk[reached[0]])
