"""
Pipeline manager for selective zero-shot classification.
Binds training, prediction, evaluation and confidence combination into
one object shared by the command line and the ablation runner.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from .cv_harness import SearchResult, staged_search
from .data_model import Dataset, validate
from .errors import InputError
from .evaluation import RiskCoverageCurve, rcc
from .inference import combine_external, predict_batch, report_arrays
from .models import ConfidenceReport, DatasetRole, HyperParams, SearchPlan
from .residual_solver import AugmentedFit, AugmentedModel, fit_augmented
from .settings import get_settings

logger = logging.getLogger(__name__)


def trace_table(fit: AugmentedFit) -> pd.DataFrame:
    """One row per sweep of either subproblem, initial objectives as sweep 0."""
    rows = [{"sweep": 0, "stage": "lad", "objective": fit.lad_fit.initial_objective, "eq10": np.nan}]
    rows.extend(
        {"sweep": i, "stage": "lad", "objective": value, "eq10": np.nan}
        for i, value in enumerate(fit.lad_fit.trace, start=1)
    )
    if fit.residual_fit is not None:
        res = fit.residual_fit
        rows.append({"sweep": 0, "stage": "residual", "objective": res.initial_objective, "eq10": np.nan})
        rows.extend(
            {"sweep": i, "stage": "residual", "objective": value, "eq10": literal}
            for i, (value, literal) in enumerate(zip(res.trace, res.eq10_trace), start=1)
        )
    return pd.DataFrame(rows, columns=["sweep", "stage", "objective", "eq10"])


class SelectivePipeline:
    """
    Manager for the train / predict / evaluate / combine pipeline
    """

    def __init__(self, params: Optional[HyperParams] = None, model: Optional[AugmentedModel] = None,
                 worker_count: Optional[int] = None):
        """
        Initialize pipeline manager

        Args:
            params: Hyper-parameters used by train
            model: Optional pre-trained model
            worker_count: Thread cap for cross-validation, defaults to SZSC_THREADS
        """
        self.params = params or (model.params if model is not None else HyperParams())
        self.model = model
        self.last_fit: Optional[AugmentedFit] = None
        self.worker_count = worker_count or get_settings().threads

    def _require_model(self) -> AugmentedModel:
        if self.model is None:
            raise InputError("pipeline has no model; train or load one first")
        return self.model

    @staticmethod
    def _check(dataset: Dataset) -> None:
        report = validate(dataset)
        if not report.ok:
            v = report.violations[0]
            raise InputError(f"dataset invalid ({len(report.violations)} violation(s)), first: {v.kind}: {v.message}")

    def train(self, dataset: Dataset, with_residual: bool = True) -> AugmentedFit:
        """
        Fit both subproblems on the seen-class samples.

        Args:
            dataset: Training or mixed dataset
            with_residual: False fits the first criterion only

        Returns:
            The fit, also kept as the pipeline's model
        """
        self._check(dataset)
        fit = fit_augmented(dataset, self.params, with_residual=with_residual)
        self.model, self.last_fit = fit.model, fit
        return fit

    def test_samples(self, dataset: Dataset) -> Dataset:
        """Samples to score: all of a test-role dataset, the unseen-class samples otherwise."""
        self._check(dataset)
        if not dataset.unseen_classes:
            raise InputError("dataset declares no unseen classes")
        return dataset if dataset.role == DatasetRole.TEST else dataset.test_view()

    def predict(self, dataset: Dataset, lam: Optional[float] = None) -> List[ConfidenceReport]:
        """
        Confidence reports for every test sample.

        Args:
            dataset: Dataset carrying the unseen classes and their attributes
            lam: Trade-off, defaults to the model's lambda

        Returns:
            One report per sample, in sample order
        """
        model = self._require_model()
        test = self.test_samples(dataset)
        unseen = test.unseen_order
        return predict_batch(test.X, model, test.attributes_for(unseen), unseen, lam)

    @staticmethod
    def evaluate(reports: Sequence[ConfidenceReport], labels: Sequence[int]) -> RiskCoverageCurve:
        """Risk-coverage curve of the reports' combined confidence against true labels."""
        predicted, _, _, conf = report_arrays(reports)
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != predicted.shape:
            raise InputError(f"{labels.shape[0]} labels for {predicted.shape[0]} predictions")
        return rcc(conf, predicted == labels)

    def combine(self, conf_ext, dataset: Dataset, lam: float) -> pd.DataFrame:
        """
        Mix an external classifier's confidence with this model's residual confidence.

        Args:
            conf_ext: External confidence per test sample, in sample order
            dataset: The dataset the external classifier scored
            lam: Trade-off in [0, 1]

        Returns:
            DataFrame with sample_id, conf_ext, conf_r and the combined conf
        """
        reports = self.predict(dataset, lam=0.0)
        conf_ext = np.asarray(conf_ext, dtype=float)
        _, _, conf_r, _ = report_arrays(reports)
        if conf_ext.shape != conf_r.shape:
            raise InputError(f"{conf_ext.shape[0]} external confidences for {conf_r.shape[0]} test samples")
        test = self.test_samples(dataset)
        return pd.DataFrame({
            "sample_id": test.sample_ids,
            "conf_ext": conf_ext,
            "conf_r": conf_r,
            "conf": combine_external(conf_ext, conf_r, lam),
        })

    def cross_validate(self, dataset: Dataset, plan: SearchPlan) -> SearchResult:
        """Staged search seeded with this pipeline's params; adopts the winner."""
        self._check(dataset)
        result = staged_search(dataset, plan, base=self.params, threads=self.worker_count)
        self.params = result.params
        return result
