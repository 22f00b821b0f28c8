"""
Planted-factor synthetic benchmark.

Features are generated as X = Q_d Q_l D + Q_r R + noise * G, with per-sample
defined attributes D scattered around their class columns and residual
codes R scattered around class prototypes. Unseen prototypes are the seen
ones recombined with the ridge coefficients that express each unseen
class's attributes over the seen classes, so the residual code of a
sample agrees with its defined attributes exactly when both point at the
same class.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data_model import Dataset, validate
from .matrix_core import random_unit_columns, ridge_solve
from .models import DatasetRole, SynthConfig

logger = logging.getLogger(__name__)

PROTOTYPE_RIDGE = 0.1


@dataclass(frozen=True)
class PlantedFactors:
    """Ground truth behind a synthetic dataset"""
    Q_d: np.ndarray
    Q_l: np.ndarray
    Q_r: np.ndarray
    D: np.ndarray
    R: np.ndarray
    residual_prototypes: np.ndarray

    def compose(self) -> np.ndarray:
        """Noise-free features Q_d Q_l D + Q_r R."""
        return self.Q_d @ (self.Q_l @ self.D) + self.Q_r @ self.R


@dataclass(frozen=True)
class SynthData:
    dataset: Dataset
    factors: PlantedFactors
    config: SynthConfig

    @property
    def train(self) -> Dataset:
        return self.dataset.train_view()

    @property
    def test(self) -> Dataset:
        return self.dataset.test_view()


def synth_generate(config: Optional[SynthConfig] = None, **overrides) -> SynthData:
    """
    Draw a planted zero-shot benchmark.

    Args:
        config: Shapes and noise levels; keyword overrides replace its fields

    Returns:
        SynthData with a mixed-role dataset (seen ids first, then unseen)
        and the planted factors
    """
    config = config or SynthConfig()
    if overrides:
        config = SynthConfig.model_validate({**config.model_dump(), **overrides})
    rng = np.random.default_rng(config.seed)
    n_classes = config.classes_seen + config.classes_unseen
    seen = np.arange(config.classes_seen)
    unseen = np.arange(config.classes_seen, n_classes)

    Q_d = random_unit_columns(rng, config.k_o, config.k_l)
    Q_l = random_unit_columns(rng, config.k_l, config.k_d)
    Q_r = random_unit_columns(rng, config.k_o, config.k_r)
    class_attr = rng.uniform(0.0, 1.0, size=(config.k_d, n_classes))

    prototypes = np.empty((config.k_r, n_classes))
    prototypes[:, seen] = config.residual_scale * rng.normal(size=(config.k_r, config.classes_seen))
    coding = ridge_solve(class_attr[:, seen], class_attr[:, unseen], PROTOTYPE_RIDGE)
    prototypes[:, unseen] = prototypes[:, seen] @ coding

    labels = np.repeat(np.arange(n_classes), config.samples_per_class)
    n = labels.shape[0]
    D = class_attr[:, labels] + config.attribute_noise * rng.normal(size=(config.k_d, n))
    R = prototypes[:, labels] + config.residual_noise * rng.normal(size=(config.k_r, n))
    factors = PlantedFactors(Q_d=Q_d, Q_l=Q_l, Q_r=Q_r, D=D, R=R, residual_prototypes=prototypes)
    X = factors.compose()
    if config.noise > 0:
        X = X + config.noise * rng.normal(size=X.shape)

    dataset = Dataset(
        X=X,
        labels=labels,
        class_attr=class_attr,
        seen_classes=frozenset(seen.tolist()),
        unseen_classes=frozenset(unseen.tolist()),
        D_samples=D,
        role=DatasetRole.MIXED,
    )
    report = validate(dataset)
    if not report.ok:
        logger.warning(f"Synthetic dataset failed validation: {report.kinds()}")
    logger.info(
        f"Generated synthetic dataset: {n} samples, {config.classes_seen} seen + {config.classes_unseen} unseen classes, "
        f"K_o={config.k_o}, seed={config.seed}"
    )
    return SynthData(dataset=dataset, factors=factors, config=config)
