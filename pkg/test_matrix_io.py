"""
Tests for the plain-text formats and model archives.
"""
import json

import numpy as np
import pandas as pd
import pytest

from selective_zsc.errors import ArchiveError, FormatError, InputError
from selective_zsc.evaluation import rcc
from selective_zsc.inference import predict_batch, report_arrays
from selective_zsc.lad_solver import LadModel
from selective_zsc.matrix_io import (
    atomic_path,
    format_predictions,
    load_dataset,
    load_model,
    parse_config,
    parse_matrix,
    read_curve_aurcc,
    read_external,
    read_matrix,
    read_params,
    read_predictions,
    save_dataset,
    save_model,
    write_curve_csv,
    write_matrix,
    write_params,
    write_predictions,
)
from selective_zsc.models import DatasetRole, HyperParams
from selective_zsc.pipeline_manager import trace_table
from selective_zsc.residual_solver import AugmentedModel, ResidualModel, fit_augmented


def leftovers(directory):
    return [p.name for p in directory.rglob(".*")]


@pytest.fixture
def trained(small_data, fast_params):
    return fit_augmented(small_data.train, fast_params)


def test_matrix_round_trip_is_exact(tmp_path, rng):
    M = rng.normal(size=(4, 3)) * 10.0 ** rng.integers(-30, 30, size=(4, 3))
    write_matrix(tmp_path / "m.txt", M)
    assert np.array_equal(read_matrix(tmp_path / "m.txt"), M)
    assert leftovers(tmp_path) == []


def test_empty_matrix_round_trip(tmp_path):
    write_matrix(tmp_path / "e.txt", np.zeros((0, 3)))
    assert read_matrix(tmp_path / "e.txt").shape == (0, 3)


@pytest.mark.parametrize("text", [
    "",
    "2\n1 2\n",
    "2 2\n1 2\n",
    "1 2\n1 2 3\n",
    "1 2\n1 x\n",
    "a b\n",
])
def test_malformed_matrices(text):
    with pytest.raises(FormatError):
        parse_matrix(text)


def test_missing_matrix_file(tmp_path):
    with pytest.raises(FormatError):
        read_matrix(tmp_path / "absent.txt")


def test_config_parsing():
    text = "# header\nalpha 0.5  # trailing\n\nlambda 0.0 0.5 1.0\n"
    assert parse_config(text) == {"alpha": ["0.5"], "lambda": ["0.0", "0.5", "1.0"]}


@pytest.mark.parametrize("text", ["alpha 1\nalpha 2\n", "alpha\n"])
def test_bad_configs(text):
    with pytest.raises(FormatError):
        parse_config(text)


def test_params_round_trip(tmp_path):
    params = HyperParams(alpha=0.1, k_l=None, k_r=3, **{"lambda": 0.3})
    write_params(tmp_path / "p.cfg", params)
    assert read_params(tmp_path / "p.cfg") == params


def test_params_unknown_key(tmp_path):
    (tmp_path / "p.cfg").write_text("alpha 1\nlearning_rate 3\n")
    with pytest.raises(InputError):
        read_params(tmp_path / "p.cfg")


def test_params_out_of_range(tmp_path):
    (tmp_path / "p.cfg").write_text("lambda 2\n")
    with pytest.raises(InputError):
        read_params(tmp_path / "p.cfg")


def test_dataset_round_trip(tmp_path, small_data):
    dataset = small_data.dataset
    save_dataset(dataset, tmp_path / "data")
    loaded = load_dataset(tmp_path / "data")
    assert np.array_equal(loaded.X, dataset.X)
    assert np.array_equal(loaded.labels, dataset.labels)
    assert np.array_equal(loaded.D_samples, dataset.D_samples)
    assert loaded.seen_classes == dataset.seen_classes
    assert loaded.unseen_classes == dataset.unseen_classes
    assert loaded.role == DatasetRole.MIXED
    assert leftovers(tmp_path) == []


def test_dataset_without_unseen_classes(tmp_path, small_data):
    train = small_data.train.with_split(small_data.train.seen_classes, [])
    save_dataset(train, tmp_path / "train")
    loaded = load_dataset(tmp_path / "train")
    assert loaded.unseen_classes == frozenset()
    assert loaded.role == DatasetRole.TRAIN


def test_predictions_round_trip(tmp_path, small_data, trained):
    test = small_data.test
    ids = list(test.unseen_order)
    reports = predict_batch(test.X, trained.model, test.attributes_for(ids), ids)
    write_predictions(tmp_path / "pred.txt", test.sample_ids, reports)
    frame = read_predictions(tmp_path / "pred.txt")
    predicted, conf_d, conf_r, conf = report_arrays(reports)
    assert frame["sample_id"].tolist() == test.sample_ids.tolist()
    assert np.array_equal(frame["predicted_class"].to_numpy(), predicted)
    assert np.array_equal(frame["conf"].to_numpy(), conf)
    assert format_predictions(test.sample_ids, reports).startswith("# sample_id predicted_class")


def test_prediction_file_with_missing_field(tmp_path):
    (tmp_path / "pred.txt").write_text("0 1 0.5 0.5 0.5\n1 2 0.5 0.5\n")
    with pytest.raises(FormatError):
        read_predictions(tmp_path / "pred.txt")


def test_external_file_parsing(tmp_path):
    (tmp_path / "ext.txt").write_text("# sample_id predicted_class conf_ext\n3 7 0.25\n4 8 -0.5\n")
    frame = read_external(tmp_path / "ext.txt")
    assert frame["sample_id"].tolist() == [3, 4]
    assert frame["conf_ext"].tolist() == [0.25, -0.5]


def test_empty_prediction_file(tmp_path):
    (tmp_path / "pred.txt").write_text("# sample_id predicted_class conf_d conf_r conf\n")
    assert read_predictions(tmp_path / "pred.txt").empty


def test_curve_csv(tmp_path, six_samples):
    curve = rcc(*six_samples)
    write_curve_csv(tmp_path / "curve.csv", curve)
    lines = (tmp_path / "curve.csv").read_text().splitlines()
    assert lines[0] == "coverage,risk"
    assert len(lines) == 8
    assert read_curve_aurcc(tmp_path / "curve.csv") == curve.aurcc


def test_archive_round_trip_predicts_identically(tmp_path, small_data, trained):
    save_model(trained.model, tmp_path / "model", trace=trace_table(trained))
    loaded = load_model(tmp_path / "model")
    assert loaded.params == trained.model.params
    assert loaded.seen_class_order == trained.model.seen_class_order
    test = small_data.test
    ids = list(test.unseen_order)
    before = report_arrays(predict_batch(test.X, trained.model, test.attributes_for(ids), ids))
    after = report_arrays(predict_batch(test.X, loaded, test.attributes_for(ids), ids))
    for a, b in zip(before, after):
        assert np.array_equal(a, b)
    assert (tmp_path / "model" / "trace.csv").is_file()
    assert leftovers(tmp_path) == []


def test_first_criterion_archive(tmp_path, small_data, fast_params):
    model = fit_augmented(small_data.train, fast_params, with_residual=False).model
    save_model(model, tmp_path / "model")
    assert load_model(tmp_path / "model").residual is None
    assert not (tmp_path / "model" / "q_r.txt").exists()


def test_archive_version_mismatch(tmp_path, trained):
    save_model(trained.model, tmp_path / "model")
    manifest = tmp_path / "model" / "manifest.json"
    raw = json.loads(manifest.read_text())
    raw["format_version"] = 99
    manifest.write_text(json.dumps(raw))
    with pytest.raises(ArchiveError):
        load_model(tmp_path / "model")


def test_archive_dimension_mismatch(tmp_path, trained):
    save_model(trained.model, tmp_path / "model")
    write_matrix(tmp_path / "model" / "q_d.txt", np.zeros((2, 2)))
    with pytest.raises(ArchiveError):
        load_model(tmp_path / "model")


def test_archive_missing_matrix(tmp_path, trained):
    save_model(trained.model, tmp_path / "model")
    (tmp_path / "model" / "r_o.txt").unlink()
    with pytest.raises(ArchiveError):
        load_model(tmp_path / "model")


def test_archive_without_manifest(tmp_path):
    (tmp_path / "model").mkdir()
    with pytest.raises(ArchiveError):
        load_model(tmp_path / "model")


def test_failed_write_keeps_previous_file(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old\n")
    with pytest.raises(RuntimeError):
        with atomic_path(target) as tmp:
            tmp.write_text("half")
            raise RuntimeError("interrupted")
    assert target.read_text() == "old\n"
    assert leftovers(tmp_path) == []


def test_trace_table_columns(trained):
    table = trace_table(trained)
    assert list(table.columns) == ["sweep", "stage", "objective", "eq10"]
    assert isinstance(table, pd.DataFrame)
    assert table["sweep"].iloc[0] == 0


def test_fortran_ordered_model_reloads_bit_identically(tmp_path, small_data, trained):
    model = trained.model
    lad = LadModel(**{name: np.asfortranarray(getattr(model.lad, name)) for name in ("Q_d", "L", "Q_l", "U")})
    residual = ResidualModel(**{name: np.asfortranarray(getattr(model.residual, name))
                                for name in ("Q_r", "R_s", "V", "W", "R_o")})
    fortran = AugmentedModel(lad=lad, residual=residual, params=model.params,
                             seen_class_order=model.seen_class_order,
                             class_attr_seen=np.asfortranarray(model.class_attr_seen))
    assert fortran.class_attr_seen.flags.c_contiguous and fortran.lad.Q_d.flags.c_contiguous
    save_model(fortran, tmp_path / "model")
    loaded = load_model(tmp_path / "model")
    test = small_data.test
    ids = list(test.unseen_order)
    before = report_arrays(predict_batch(test.X, fortran, test.attributes_for(ids), ids))
    after = report_arrays(predict_batch(test.X, loaded, test.attributes_for(ids), ids))
    for a, b in zip(before, after):
        assert np.array_equal(a, b)
