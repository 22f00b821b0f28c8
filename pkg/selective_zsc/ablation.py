"""
Ablation runners: the three-criteria comparison, lambda and K_r sweeps,
external-confidence combination with its cross-validated lambda and the
multi-seed residual benefit check.

Every runner fits on the seen-class samples of `train`, scores the
unseen-class samples of `test`, and reports AURCC (lower is better).
"""
import logging
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .cv_harness import build_folds
from .data_model import Dataset
from .errors import InputError
from .evaluation import rcc
from .inference import combine_conf, combine_external, report_arrays
from .models import DEFAULT_LAMBDA_GRID, HyperParams, SearchPlan, SynthConfig
from .pipeline_manager import SelectivePipeline
from .residual_solver import AugmentedModel
from .synth import synth_generate

logger = logging.getLogger(__name__)

# name -> (overrides, with_residual)
CRITERIA_VARIANTS: Dict[str, Tuple[dict, bool]] = {
    "lad": ({}, False),
    "no_eta": ({"eta": 0.0}, True),
    "no_delta": ({"delta": 0.0}, True),
    "full": ({}, True),
}


def best_lambda(conf_d, conf_r, correct, lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID) -> Tuple[float, float]:
    """
    Lambda of the grid with the lowest AURCC; ties keep the earlier grid value.

    Returns:
        (lambda, aurcc)
    """
    best = None
    for lam in lambda_grid:
        aurcc = rcc(combine_conf(conf_d, conf_r, lam), correct).aurcc
        if best is None or aurcc < best[1]:
            best = (lam, aurcc)
    return best


def _scores(pipeline: SelectivePipeline, test: Dataset):
    reports = pipeline.predict(test, lam=0.0)
    predicted, conf_d, conf_r, _ = report_arrays(reports)
    labels = pipeline.test_samples(test).labels
    return predicted == labels, conf_d, conf_r


def _fit(train: Dataset, params: HyperParams, with_residual: bool = True) -> SelectivePipeline:
    pipeline = SelectivePipeline(params, worker_count=1)
    pipeline.train(train, with_residual=with_residual)
    return pipeline


def lambda_sweep(train: Dataset, test: Dataset, params: HyperParams,
                 lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID) -> pd.DataFrame:
    """AURCC per lambda with every other knob fixed."""
    correct, conf_d, conf_r = _scores(_fit(train, params), test)
    rows = [{"lambda": lam, "aurcc": rcc(combine_conf(conf_d, conf_r, lam), correct).aurcc} for lam in lambda_grid]
    return pd.DataFrame(rows, columns=["lambda", "aurcc"])


def criteria_ablation(train: Dataset, test: Dataset, params: HyperParams,
                      lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID) -> pd.DataFrame:
    """
    Compare the first criterion alone, each two-criteria model and the full model.

    K_r is set to K_d for every variant. The first-criterion model has no
    residual confidence, so it is scored at lambda 0.

    Args:
        train: Dataset with the seen-class training samples
        test: Dataset with the unseen-class test samples
        params: Base hyper-parameters
        lambda_grid: Lambdas searched per variant

    Returns:
        One row per variant: variant, delta, eta, k_r, lambda, aurcc
    """
    params = params.with_updates(k_r=train.k_d)
    rows = []
    for variant, (overrides, with_residual) in CRITERIA_VARIANTS.items():
        variant_params = params.with_updates(**overrides)
        correct, conf_d, conf_r = _scores(_fit(train, variant_params, with_residual), test)
        lam, aurcc = best_lambda(conf_d, conf_r, correct, lambda_grid if with_residual else [0.0])
        rows.append({
            "variant": variant,
            "delta": variant_params.delta,
            "eta": variant_params.eta,
            "k_r": variant_params.k_r,
            "lambda": lam,
            "aurcc": aurcc,
        })
        logger.info(f"Criteria ablation {variant}: AURCC {aurcc:.6g} at lambda {lam}")
    return pd.DataFrame(rows)


def kr_sweep(train: Dataset, test: Dataset, params: HyperParams, k_r_grid: Sequence[int],
             lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID) -> pd.DataFrame:
    """Per K_r, AURCC at the best lambda for the eta = 0 and the full model."""
    rows = []
    for k_r in k_r_grid:
        for variant in ("no_eta", "full"):
            overrides, _ = CRITERIA_VARIANTS[variant]
            variant_params = params.with_updates(k_r=k_r, **overrides)
            correct, conf_d, conf_r = _scores(_fit(train, variant_params), test)
            lam, aurcc = best_lambda(conf_d, conf_r, correct, lambda_grid)
            rows.append({"k_r": k_r, "variant": variant, "lambda": lam, "aurcc": aurcc})
    return pd.DataFrame(rows, columns=["k_r", "variant", "lambda", "aurcc"])


def external_combination(test: Dataset, model: AugmentedModel, conf_ext, predicted_ext,
                         lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID) -> pd.DataFrame:
    """
    AURCC of (1 - lambda) conf_ext + lambda conf_r per lambda.

    Args:
        test: Dataset the external classifier scored
        model: Model supplying the residual confidence
        conf_ext: External confidence per test sample
        predicted_ext: External predicted class per test sample
        lambda_grid: Lambdas to score

    Returns:
        One row per lambda: lambda, aurcc
    """
    pipeline = SelectivePipeline(model=model, worker_count=1)
    frame = pipeline.combine(conf_ext, test, 0.0)
    predicted_ext = np.asarray(predicted_ext, dtype=np.int64)
    labels = pipeline.test_samples(test).labels
    if predicted_ext.shape != labels.shape:
        raise InputError(f"{predicted_ext.shape[0]} external predictions for {labels.shape[0]} test samples")
    correct = predicted_ext == labels
    conf_ext, conf_r = frame["conf_ext"].to_numpy(), frame["conf_r"].to_numpy()
    rows = [{"lambda": lam, "aurcc": rcc(combine_external(conf_ext, conf_r, lam), correct).aurcc} for lam in lambda_grid]
    return pd.DataFrame(rows, columns=["lambda", "aurcc"])


def external_lambda_cv(train: Dataset, params: HyperParams,
                       external: Callable[[Dataset], Tuple[np.ndarray, np.ndarray]],
                       lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
                       fold_count: int = 5, seed: int = 0) -> Tuple[float, pd.DataFrame]:
    """
    Choose lambda for the external combination on held-out seen classes.

    Each class-wise fold trains on its remaining classes, asks `external`
    for (predicted_ext, conf_ext) on the held-out samples and scores every
    lambda of the grid. The lowest mean AURCC wins; ties keep the earlier
    grid value.

    Args:
        train: Dataset whose seen classes are split into folds
        params: Hyper-parameters of the model supplying conf_r
        external: External classifier, called once per validation fold
        lambda_grid: Lambdas to score
        fold_count: Number of class-wise folds
        seed: Fold assignment seed

    Returns:
        (lambda, per-fold table with fold, lambda, aurcc)
    """
    splits = build_folds(train, SearchPlan(fold_count=fold_count, seed=seed))
    tables = []
    for split in splits:
        model = _fit(split.train, params).model
        predicted_ext, conf_ext = external(split.valid)
        table = external_combination(split.valid, model, conf_ext, predicted_ext, lambda_grid)
        tables.append(table.assign(fold=split.fold))
    folds = pd.concat(tables, ignore_index=True)[["fold", "lambda", "aurcc"]]
    means = folds.groupby("lambda", sort=False)["aurcc"].mean()
    lam = float(means.idxmin())
    logger.info(f"External combination: lambda {lam} by {len(splits)}-fold CV, mean AURCC {means.min():.6g}")
    return lam, folds


def residual_benefit(seeds: Sequence[int], params: HyperParams, config: Optional[SynthConfig] = None,
                     lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID) -> pd.DataFrame:
    """
    Per seed, AURCC at lambda 0 against the best positive lambda on fresh synthetic data.

    Returns:
        One row per seed: seed, aurcc_lambda0, best_lambda, best_aurcc, improved
    """
    positive = [lam for lam in lambda_grid if lam > 0]
    if not positive:
        raise InputError("lambda grid holds no positive value")
    rows = []
    for seed in seeds:
        data = synth_generate(config, seed=seed)
        correct, conf_d, conf_r = _scores(_fit(data.dataset, params.with_updates(seed=seed)), data.dataset)
        base = rcc(conf_d, correct).aurcc
        lam, aurcc = best_lambda(conf_d, conf_r, correct, positive)
        rows.append({"seed": seed, "aurcc_lambda0": base, "best_lambda": lam, "best_aurcc": aurcc, "improved": aurcc < base})
    return pd.DataFrame(rows)
