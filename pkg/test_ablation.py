"""
Tests for the ablation runners.
"""
import numpy as np
import pandas as pd
import pytest

from selective_zsc.ablation import (
    CRITERIA_VARIANTS,
    best_lambda,
    criteria_ablation,
    external_combination,
    external_lambda_cv,
    kr_sweep,
    lambda_sweep,
    residual_benefit,
)
from selective_zsc.errors import InputError
from selective_zsc.models import HyperParams, SynthConfig
from selective_zsc.residual_solver import fit_augmented
from selective_zsc.synth import synth_generate


def test_best_lambda_prefers_informative_confidence():
    correct = np.array([True, True, False, False])
    conf_d = np.array([0.1, 0.2, 0.3, 0.4])
    conf_r = np.array([0.9, 0.8, 0.2, 0.1])
    assert best_lambda(conf_d, conf_r, correct, [0.0, 0.5, 1.0]) == (1.0, pytest.approx(5 / 24))


def test_best_lambda_tie_keeps_first():
    conf = np.array([0.9, 0.1])
    lam, _ = best_lambda(conf, conf, np.array([True, False]), [0.3, 0.0, 1.0])
    assert lam == 0.3


def test_lambda_sweep(small_data, fast_params):
    table = lambda_sweep(small_data.train, small_data.test, fast_params, [0.0, 0.5, 1.0])
    assert table["lambda"].tolist() == [0.0, 0.5, 1.0]
    assert table["aurcc"].between(0.0, 1.0).all()


def test_criteria_ablation_variants(small_data, fast_params):
    table = criteria_ablation(small_data.train, small_data.test, fast_params, [0.0, 0.5, 1.0])
    assert table["variant"].tolist() == list(CRITERIA_VARIANTS)
    assert (table["k_r"] == small_data.train.k_d).all()
    lad = table.set_index("variant").loc["lad"]
    assert lad["lambda"] == 0.0
    assert table.set_index("variant").loc["no_eta", "eta"] == 0.0
    assert table.set_index("variant").loc["no_delta", "delta"] == 0.0


def test_kr_sweep(small_data, fast_params):
    table = kr_sweep(small_data.train, small_data.test, fast_params, [1, 2], [0.0, 1.0])
    assert table[["k_r", "variant"]].values.tolist() == [[1, "no_eta"], [1, "full"], [2, "no_eta"], [2, "full"]]


def test_external_combination(small_data, fast_params):
    model = fit_augmented(small_data.train, fast_params).model
    test = small_data.test
    conf_ext = np.linspace(0.0, 1.0, test.n_samples)
    table = external_combination(test, model, conf_ext, test.labels, [0.0, 1.0])
    assert table.loc[0, "aurcc"] == 0.0
    with pytest.raises(InputError):
        external_combination(test, model, conf_ext, test.labels[:-1], [0.0])


@pytest.mark.slow
def test_residual_benefit_over_seeds(small_config, fast_params):
    table = residual_benefit([0, 1, 2], fast_params, small_config, [0.0, 0.5, 1.0])
    assert table["seed"].tolist() == [0, 1, 2]
    assert (table["best_lambda"] > 0).all()
    assert table["improved"].dtype == bool


def test_residual_benefit_needs_positive_lambda(small_config, fast_params):
    with pytest.raises(InputError):
        residual_benefit([0], fast_params, small_config, [0.0])


SEEDS = [0, 1, 2, 3, 4]


@pytest.mark.slow
def test_residual_confidence_helps_on_most_seeds():
    """Some positive lambda beats lambda 0 on at least four of five planted benchmarks."""
    table = residual_benefit(SEEDS, HyperParams(k_r=8), SynthConfig())
    assert table["improved"].sum() >= 4


@pytest.mark.slow
def test_dropping_a_residual_criterion_does_not_help():
    tables = []
    for seed in SEEDS:
        data = synth_generate(SynthConfig(), seed=seed)
        tables.append(criteria_ablation(data.train, data.test, HyperParams(seed=seed)).assign(seed=seed))
    means = pd.concat(tables).groupby("variant")["aurcc"].mean()
    assert means["no_eta"] >= means["full"]
    assert means["no_delta"] >= means["full"]


def noisy_external(seed):
    """External classifier that is wrong on 30% of samples, with a confidence loosely tracking correctness"""
    def external(dataset):
        r = np.random.default_rng([seed, dataset.n_samples])
        flip = r.uniform(size=dataset.n_samples) < 0.3
        predicted = np.where(flip, -1, dataset.labels)
        return predicted, 0.5 * (~flip) + r.normal(scale=0.5, size=dataset.n_samples)
    return external


def test_external_lambda_cv_scores_every_fold(small_data, fast_params):
    lam, folds = external_lambda_cv(small_data.train, fast_params, noisy_external(0), [0.0, 0.5, 1.0], fold_count=2)
    assert lam in (0.0, 0.5, 1.0)
    assert list(folds.columns) == ["fold", "lambda", "aurcc"]
    assert len(folds) == 6
    means = folds.groupby("lambda")["aurcc"].mean()
    assert means[lam] == means.min()


@pytest.mark.slow
def test_external_confidence_gains_from_residual_confidence():
    """Lambda picked on held-out seen classes never hurts the external score on test and helps on most seeds."""
    params = HyperParams(k_r=8)
    deltas = []
    for seed in SEEDS:
        data = synth_generate(SynthConfig(), seed=seed)
        external = noisy_external(seed)
        lam, _ = external_lambda_cv(data.train, params.with_updates(seed=seed), external, seed=seed)
        model = fit_augmented(data.train, params.with_updates(seed=seed)).model
        predicted_ext, conf_ext = external(data.test)
        at_zero, at_chosen = external_combination(data.test, model, conf_ext, predicted_ext, [0.0, lam])["aurcc"]
        deltas.append(at_chosen - at_zero)
    assert max(deltas) <= 1e-6, deltas
    assert sum(d < 0 for d in deltas) >= 3, deltas
