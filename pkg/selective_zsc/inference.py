"""
Test-time encoding, zero-shot prediction and the abstaining classifier.

A test feature vector is encoded jointly over [Q_d | Q_r]; its defined
attributes are recovered through the Q_l back-projection. The prediction
is the unseen class whose attribute column is most cosine-similar, and
the selective classifier abstains unless the combined confidence exceeds
the threshold.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InputError
from .matrix_core import as_matrix, as_vector, cosine_sim, ridge_solve
from .models import ConfidenceReport, Decision, MatchSpace
from .residual_solver import AugmentedModel, encode_augmented

logger = logging.getLogger(__name__)

REJECT = Decision.REJECT


@dataclass(frozen=True)
class AugmentedCode:
    l_hat: np.ndarray
    r_hat: np.ndarray
    d_hat: np.ndarray


def _check_lambda(lam: float) -> float:
    if not (0.0 <= lam <= 1.0):
        raise InputError(f"lambda must lie in [0, 1], got {lam}")
    return lam


def infer_codes(x, model: AugmentedModel, epsilon: Optional[float] = None) -> AugmentedCode:
    """
    Encode one test sample.

    Args:
        x: Feature vector of length K_o
        model: Trained augmented model
        epsilon: Encoder ridge weight, defaults to the model's

    Returns:
        Latent, residual and defined-attribute codes
    """
    eps = model.params.epsilon if epsilon is None else epsilon
    if not eps > 0:
        raise InputError(f"epsilon must be positive, got {eps}")
    x = as_vector(x, "x")
    if x.shape[0] != model.lad.Q_d.shape[0]:
        raise InputError(f"sample has {x.shape[0]} features, model expects {model.lad.Q_d.shape[0]}")
    settings = model.params.solver
    Q_r = model.residual.Q_r if model.residual is not None else None
    l_hat, r_hat = encode_augmented(x, model.lad.Q_d, Q_r, eps, settings)
    d_hat = ridge_solve(model.lad.Q_l, l_hat, eps, settings)
    return AugmentedCode(l_hat=l_hat, r_hat=r_hat, d_hat=d_hat)


def classify(d_hat, unseen_attr, class_ids: Optional[Sequence[int]] = None) -> Tuple[int, float]:
    """
    Nearest unseen class by cosine similarity.

    Args:
        d_hat: Predicted attribute vector
        unseen_attr: One column per unseen class
        class_ids: Id of each column, defaults to 0..C_u-1

    Returns:
        The winning class id and its similarity; ties go to the smallest id
    """
    unseen_attr = np.asarray(unseen_attr, dtype=float)
    if unseen_attr.ndim != 2 or unseen_attr.shape[1] == 0:
        raise InputError("classification needs at least one unseen class")
    ids = list(range(unseen_attr.shape[1])) if class_ids is None else [int(c) for c in class_ids]
    if len(ids) != unseen_attr.shape[1]:
        raise InputError(f"{len(ids)} class ids for {unseen_attr.shape[1]} attribute columns")
    best_id, best_sim = None, None
    for j in sorted(range(len(ids)), key=lambda j: ids[j]):
        sim = cosine_sim(d_hat, unseen_attr[:, j])
        if best_sim is None or sim > best_sim:
            best_id, best_sim = ids[j], sim
    return best_id, best_sim


def similarity_vector(v, prototypes, gamma: float, settings=None) -> np.ndarray:
    """Ridge coding argmin_s (gamma/2)||s||^2 + (1/2)||v - prototypes s||^2."""
    prototypes = as_matrix(prototypes, "prototypes")
    return ridge_solve(prototypes, as_vector(v, "v"), gamma, settings)


def conf_residual(s_d, s_r) -> float:
    """Agreement between the defined and residual similarity vectors."""
    return cosine_sim(s_d, s_r)


def combine_conf(conf_d: float, conf_r: float, lam: float) -> float:
    lam = _check_lambda(lam)
    return (1.0 - lam) * conf_d + lam * conf_r


def combine_external(conf_ext: Union[float, np.ndarray], conf_r: Union[float, np.ndarray], lam: float):
    """
    Mix an external classifier's confidence with the residual confidence.

    conf_r does not depend on which model made the prediction, so it can
    augment any zero-shot classifier's own score.
    """
    lam = _check_lambda(lam)
    return (1.0 - lam) * conf_ext + lam * conf_r


def selective_predict(report: ConfidenceReport, tau: float) -> Union[int, Decision]:
    """Predicted class when conf > tau, REJECT otherwise."""
    return report.predicted_class if report.conf > tau else REJECT


def predict(x, model: AugmentedModel, unseen_attr, unseen_ids: Sequence[int],
            lam: Optional[float] = None) -> ConfidenceReport:
    """
    Full confidence report for one test sample.

    Args:
        x: Feature vector
        model: Trained augmented model
        unseen_attr: Unseen attribute columns (K_d x C_u), sorted by id
        unseen_ids: Class id of each column
        lam: Trade-off, defaults to the model's

    Returns:
        ConfidenceReport
    """
    params = model.params
    lam = _check_lambda(params.lambda_ if lam is None else lam)
    code = infer_codes(x, model)
    unseen_attr = as_matrix(unseen_attr, "unseen_attr")
    if params.match_space == MatchSpace.LATENT:
        query, seen_protos = code.l_hat, model.lad.Q_l @ model.class_attr_seen
        unseen_protos = model.lad.Q_l @ unseen_attr
    else:
        query, seen_protos, unseen_protos = code.d_hat, model.class_attr_seen, unseen_attr
    predicted, conf_d = classify(query, unseen_protos, unseen_ids)
    s_d = similarity_vector(query, seen_protos, params.gamma, params.solver)
    if model.residual is not None:
        s_r = similarity_vector(code.r_hat, model.residual.R_o, params.gamma, params.solver)
        conf_r = conf_residual(s_d, s_r)
    else:
        s_r = np.zeros_like(s_d)
        conf_r = 0.0
    return ConfidenceReport(
        predicted_class=predicted,
        conf_d=conf_d,
        conf_r=conf_r,
        conf=combine_conf(conf_d, conf_r, lam),
        s_d=s_d,
        s_r=s_r,
    )


def predict_batch(X, model: AugmentedModel, unseen_attr, unseen_ids: Sequence[int],
                  lam: Optional[float] = None) -> List[ConfidenceReport]:
    """Reports for every column of X."""
    X = as_matrix(X, "X")
    reports = [predict(X[:, i], model, unseen_attr, unseen_ids, lam) for i in range(X.shape[1])]
    logger.debug(f"Predicted {len(reports)} samples over {len(unseen_ids)} unseen classes")
    return reports


def report_arrays(reports: Sequence[ConfidenceReport]) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Predicted classes, conf_d, conf_r and conf as arrays."""
    predicted = np.array([r.predicted_class for r in reports], dtype=np.int64)
    conf_d = np.array([r.conf_d for r in reports])
    conf_r = np.array([r.conf_r for r in reports])
    conf = np.array([r.conf for r in reports])
    return predicted, conf_d, conf_r, conf
