"""
Class-wise cross-validation and the staged hyper-parameter search.

Folds hold out whole seen classes, which play the unseen classes of their
fold. The search then tunes the knobs in four stages, each scored by mean
validation AURCC:

    1. (alpha, beta) with the defined-attribute confidence alone
    2. (delta, eta, K_r) with the combined confidence at its best lambda
    3. gamma on the stage-2 fold models
    4. lambda over its grid
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .data_model import Dataset, validate
from .errors import InputError, NumericalError, SZSCError
from .evaluation import rcc
from .inference import combine_conf, predict_batch, report_arrays
from .lad_solver import LadFit
from .models import DatasetRole, HyperParams, SearchPlan
from .residual_solver import AugmentedFit, AugmentedModel, fit_augmented
from .settings import get_settings

logger = logging.getLogger(__name__)

STAGES = ("alpha_beta", "delta_eta_kr", "gamma", "lambda")


def class_folds(seen_classes: Sequence[int], fold_count: int, seed: int) -> Dict[int, int]:
    """
    Assign every seen class to a validation fold.

    Args:
        seen_classes: Seen class ids
        fold_count: Number of folds
        seed: Shuffle seed

    Returns:
        Mapping class id -> fold index; fold sizes differ by at most one
    """
    classes = sorted({int(c) for c in seen_classes})
    if fold_count < 2:
        raise InputError(f"fold_count must be >= 2, got {fold_count}")
    if fold_count > len(classes):
        raise InputError(f"{fold_count} folds requested for {len(classes)} seen classes")
    rng = np.random.default_rng(seed)
    shuffled = rng.permutation(classes)
    return {int(c): position % fold_count for position, c in enumerate(shuffled)}


@dataclass(frozen=True)
class FoldSplit:
    """Training and validation views of one fold"""
    fold: int
    held_out: Tuple[int, ...]
    train: Dataset
    valid: Dataset


def audit_fold(split: FoldSplit) -> None:
    """Fail if any held-out class leaks into the fold's training data."""
    held = set(split.held_out)
    leaked = held & set(split.train.labels.tolist())
    if leaked:
        raise InputError(f"fold {split.fold}: validation classes {sorted(leaked)} appear in training samples")
    if held & split.train.seen_classes:
        raise InputError(f"fold {split.fold}: validation classes are marked seen for training")
    if set(split.valid.labels.tolist()) - held:
        raise InputError(f"fold {split.fold}: validation samples outside the held-out classes")


def build_folds(dataset: Dataset, plan: SearchPlan) -> List[FoldSplit]:
    """
    Split the seen-class samples of a dataset into class-wise folds.

    Args:
        dataset: Full dataset; only its seen classes are used
        plan: Supplies fold_count and seed

    Returns:
        One audited FoldSplit per fold
    """
    pool = dataset.train_view()
    assignment = class_folds(dataset.seen_classes, plan.fold_count, plan.seed)
    splits = []
    for fold in range(plan.fold_count):
        held = tuple(sorted(c for c, f in assignment.items() if f == fold))
        rest = frozenset(c for c, f in assignment.items() if f != fold)
        labels = pool.labels
        train = pool.subset(np.flatnonzero(~np.isin(labels, held)), role=DatasetRole.TRAIN)
        valid = pool.subset(np.flatnonzero(np.isin(labels, held)), role=DatasetRole.TEST)
        split = FoldSplit(
            fold=fold,
            held_out=held,
            train=train.with_split(rest, held),
            valid=valid.with_split(rest, held),
        )
        audit_fold(split)
        splits.append(split)
    logger.info(f"Built {len(splits)} class-wise folds over {len(assignment)} seen classes")
    return splits


@dataclass
class FoldOutcome:
    """Validation scores of one fold for one configuration"""
    predicted: np.ndarray
    correct: np.ndarray
    conf_d: np.ndarray
    conf_r: np.ndarray
    fit: Optional[AugmentedFit] = None


def _fold_aurcc(outcome: FoldOutcome, lam: float) -> float:
    conf = combine_conf(outcome.conf_d, outcome.conf_r, lam)
    return rcc(conf, outcome.correct).aurcc


def _score_fold(split: FoldSplit, model: AugmentedModel) -> Tuple[np.ndarray, ...]:
    valid = split.valid
    reports = predict_batch(valid.X, model, valid.attributes_for(split.held_out), split.held_out, lam=0.0)
    predicted, conf_d, conf_r, _ = report_arrays(reports)
    return predicted, predicted == valid.labels, conf_d, conf_r


def _fit_and_score(split: FoldSplit, params: HyperParams, with_residual: bool,
                   lad_fit: Optional[LadFit] = None) -> FoldOutcome:
    fit = fit_augmented(split.train, params, with_residual=with_residual, lad_fit=lad_fit)
    predicted, correct, conf_d, conf_r = _score_fold(split, fit.model)
    return FoldOutcome(predicted=predicted, correct=correct, conf_d=conf_d, conf_r=conf_r, fit=fit)


def _rescore(split: FoldSplit, outcome: FoldOutcome, params: HyperParams) -> FoldOutcome:
    model = replace(outcome.fit.model, params=params)
    predicted, correct, conf_d, conf_r = _score_fold(split, model)
    return FoldOutcome(predicted=predicted, correct=correct, conf_d=conf_d, conf_r=conf_r, fit=outcome.fit)


Config = Dict[str, float]
Scorer = Callable[[Config, List[FoldOutcome]], Tuple[List[float], Optional[float]]]


@dataclass
class StageResult:
    best_config: Config
    outcomes: List[FoldOutcome]
    rows: List[dict]


def _describe(config: Config) -> str:
    return " ".join(f"{key.rstrip('_')}={value}" for key, value in config.items())


def _run_stage(name: str, configs: List[Config], n_folds: int,
               job: Callable[[int, int], FoldOutcome], scorer: Scorer, threads: int) -> StageResult:
    """
    Evaluate every (configuration, fold) job and reduce in grid order.

    Jobs may finish in any order; the reduction walks configurations in
    grid order and keeps the first with the lowest mean AURCC. A config
    with any failed fold is recorded as infeasible.

    Args:
        name: Stage name for the score table
        configs: Grid points of this stage
        n_folds: Number of folds
        job: (config index, fold index) -> FoldOutcome
        scorer: (config, fold outcomes) -> (fold AURCCs, lambda used or None)
        threads: Worker cap

    Returns:
        The winning config, its fold outcomes and one table row per config
    """
    keys = [(c, f) for c in range(len(configs)) for f in range(n_folds)]

    def run(key):
        try:
            return job(*key)
        except (SZSCError, np.linalg.LinAlgError, FloatingPointError) as e:
            logger.warning(f"Stage {name}: config {_describe(configs[key[0]])} fold {key[1]} failed: {e}")
            return e

    workers = max(1, min(threads, len(keys)))
    if workers == 1:
        results = dict(zip(keys, map(run, keys)))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(zip(keys, pool.map(run, keys)))

    rows = []
    best_index, best_score = None, None
    for c, config in enumerate(configs):
        fold_results = [results[(c, f)] for f in range(n_folds)]
        failures = [r for r in fold_results if isinstance(r, Exception)]
        row = {"stage": name, "config": _describe(config)}
        if failures:
            code = getattr(failures[0], "code", type(failures[0]).__name__)
            row.update({"mean_aurcc": np.nan, "lambda": np.nan, "status": f"infeasible ({code})"})
            row.update({f"fold_{f}": np.nan for f in range(n_folds)})
            rows.append(row)
            continue
        fold_scores, lam = scorer(config, fold_results)
        mean = float(np.mean(fold_scores))
        row.update({"mean_aurcc": mean, "lambda": np.nan if lam is None else lam, "status": "ok"})
        row.update({f"fold_{f}": float(s) for f, s in enumerate(fold_scores)})
        rows.append(row)
        if best_score is None or mean < best_score:
            best_index, best_score = c, mean

    if best_index is None:
        raise NumericalError(f"every configuration of stage {name} failed")
    logger.info(f"Stage {name}: selected {_describe(configs[best_index])} with mean AURCC {best_score:.6g}")
    return StageResult(
        best_config=configs[best_index],
        outcomes=[results[(best_index, f)] for f in range(n_folds)],
        rows=rows,
    )


def _conf_d_scorer(config: Config, outcomes: List[FoldOutcome]) -> Tuple[List[float], None]:
    return [_fold_aurcc(o, 0.0) for o in outcomes], None


def _best_lambda_scorer(lambda_grid: Sequence[float]) -> Scorer:
    def scorer(config: Config, outcomes: List[FoldOutcome]) -> Tuple[List[float], float]:
        best_lam, best_scores = None, None
        for lam in lambda_grid:
            scores = [_fold_aurcc(o, lam) for o in outcomes]
            if best_scores is None or np.mean(scores) < np.mean(best_scores):
                best_lam, best_scores = lam, scores
        return best_scores, best_lam
    return scorer


def _fixed_lambda_scorer(config: Config, outcomes: List[FoldOutcome]) -> Tuple[List[float], float]:
    lam = config["lambda_"]
    return [_fold_aurcc(o, lam) for o in outcomes], lam


def _grid(**axes: Sequence[float]) -> List[Config]:
    names = list(axes)
    return [dict(zip(names, values)) for values in itertools.product(*(axes[n] for n in names))]


@dataclass
class SearchResult:
    """Selected hyper-parameters and the per-stage score table"""
    params: HyperParams
    scores: pd.DataFrame

    def stage(self, name: str) -> pd.DataFrame:
        return self.scores[self.scores["stage"] == name]


def staged_search(dataset: Dataset, plan: SearchPlan, base: Optional[HyperParams] = None,
                  threads: Optional[int] = None) -> SearchResult:
    """
    Staged class-wise cross-validation.

    Args:
        dataset: Dataset whose seen classes are split into folds
        plan: Grids, fold count and fold seed
        base: Values for every knob the plan does not search
        threads: Worker cap, defaults to SZSC_THREADS

    Returns:
        SearchResult whose params minimize the final stage's mean AURCC
    """
    report = validate(dataset)
    if not report.ok:
        raise InputError(f"dataset is invalid: {report.violations[0].message}")
    base = base or HyperParams()
    threads = threads or get_settings().threads
    splits = build_folds(dataset, plan)
    n_folds = len(splits)
    by_lambda = _best_lambda_scorer(plan.lambda_)

    configs1 = _grid(alpha=plan.alpha, beta=plan.beta)

    def lad_job(c, f):
        return _fit_and_score(splits[f], base.with_updates(**configs1[c]), with_residual=False)

    stage1 = _run_stage(STAGES[0], configs1, n_folds, lad_job, _conf_d_scorer, threads)
    params = base.with_updates(**stage1.best_config)
    lad_fits = [o.fit.lad_fit for o in stage1.outcomes]

    # The first-subproblem factors do not depend on stage-2 knobs, so each fold reuses its stage-1 fit.
    configs2 = _grid(delta=plan.delta, eta=plan.eta, k_r=plan.k_r)

    def residual_job(c, f):
        return _fit_and_score(splits[f], params.with_updates(**configs2[c]), with_residual=True, lad_fit=lad_fits[f])

    stage2 = _run_stage(STAGES[1], configs2, n_folds, residual_job, by_lambda, threads)
    params = params.with_updates(**stage2.best_config)
    fold_outcomes = stage2.outcomes

    configs3 = _grid(gamma=plan.gamma)

    def gamma_job(c, f):
        return _rescore(splits[f], fold_outcomes[f], params.with_updates(**configs3[c]))

    stage3 = _run_stage(STAGES[2], configs3, n_folds, gamma_job, by_lambda, threads)
    params = params.with_updates(**stage3.best_config)
    fold_outcomes = stage3.outcomes

    configs4 = _grid(lambda_=plan.lambda_)
    stage4 = _run_stage(STAGES[3], configs4, n_folds, lambda c, f: fold_outcomes[f], _fixed_lambda_scorer, 1)
    params = params.with_updates(**stage4.best_config)

    table = pd.DataFrame(stage1.rows + stage2.rows + stage3.rows + stage4.rows)
    logger.info(f"Staged search over {n_folds} folds selected {_describe(stage4.best_config)}")
    return SearchResult(params=params, scores=table)
