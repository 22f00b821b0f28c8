"""
Tests for datasets, label encoding, validation and benchmark split metadata.
"""
import numpy as np
import pytest

from selective_zsc.data_model import BENCHMARK_SPLITS, Dataset, benchmark_stub, one_hot, validate
from selective_zsc.errors import InputError
from selective_zsc.models import DatasetRole


def toy_dataset(**changes):
    """Three classes, two seen and one unseen, five samples"""
    fields = dict(
        X=np.arange(10.0).reshape(2, 5),
        labels=[0, 1, 0, 2, 1],
        class_attr=np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]]),
        seen_classes={0, 1},
        unseen_classes={2},
    )
    fields.update(changes)
    return Dataset(**fields)


def test_well_formed_toy_set_is_ok():
    report = validate(toy_dataset())
    assert report.ok
    assert report.violations == []


def test_unknown_label_names_sample():
    report = validate(toy_dataset(labels=[0, 1, 0, 7, 1]))
    assert not report.ok
    violation = report.violations[0]
    assert violation.kind == "unknown_label"
    assert violation.sample == 3


def test_nan_class_attribute_names_class():
    attrs = np.array([[1.0, 0.0, np.nan], [0.0, 1.0, 0.5]])
    report = validate(toy_dataset(class_attr=attrs))
    assert report.kinds() == ["nonfinite_class_attr"]
    assert report.violations[0].class_id == 2


def test_overlapping_splits_are_reported():
    report = validate(toy_dataset(seen_classes={0, 1, 2}, unseen_classes={2}))
    assert "overlap" in report.kinds()


def test_training_split_with_unseen_label():
    report = validate(toy_dataset(role=DatasetRole.TRAIN))
    assert report.kinds() == ["label_not_seen"]
    assert report.violations[0].sample == 3


def test_class_without_attribute_column():
    report = validate(toy_dataset(unseen_classes={2, 5}))
    assert "class_out_of_range" in report.kinds()


def test_shape_mismatch_between_x_and_labels():
    report = validate(toy_dataset(labels=[0, 1, 0, 2]))
    assert "shape" in report.kinds()


def test_nonfinite_feature_coordinates():
    X = np.arange(10.0).reshape(2, 5)
    X[1, 4] = np.inf
    report = validate(toy_dataset(X=X))
    assert report.kinds() == ["nonfinite_feature"]
    assert (report.violations[0].row, report.violations[0].col) == (1, 4)


def test_dataset_is_read_only():
    dataset = toy_dataset()
    with pytest.raises(ValueError):
        dataset.X[0, 0] = 1.0


def test_class_level_attributes_are_broadcast():
    dataset = toy_dataset()
    D = dataset.per_sample_attributes()
    np.testing.assert_array_equal(D[:, 3], dataset.class_attr[:, 2])
    assert D.shape == (2, 5)



def test_attribute_columns_are_c_ordered():
    dataset = toy_dataset(class_attr=np.asfortranarray([[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]]))
    attrs = dataset.attributes_for([1, 0])
    assert attrs.flags.c_contiguous
    np.testing.assert_array_equal(attrs, [[1.0, 0.0], [0.0, 1.0]])


def test_train_and_test_views():
    dataset = toy_dataset()
    train, test = dataset.train_view(), dataset.test_view()
    assert train.labels.tolist() == [0, 1, 0, 1]
    assert train.sample_ids.tolist() == [0, 1, 2, 4]
    assert test.labels.tolist() == [2]
    assert validate(train).ok and validate(test).ok


def test_one_hot_follows_given_order():
    H = one_hot([10, 20, 10], [10, 20]).H
    np.testing.assert_array_equal(H, [[1, 0, 1], [0, 1, 0]])


def test_one_hot_single_sample():
    np.testing.assert_array_equal(one_hot([4], [4]).H, [[1]])


def test_one_hot_unused_first_class():
    np.testing.assert_array_equal(one_hot([2, 2], [1, 2]).H, [[0, 0], [1, 1]])


def test_one_hot_round_trip():
    labels = [3, 1, 1, 5, 3]
    encoded = one_hot(labels, [1, 3, 5])
    assert encoded.decode().tolist() == labels
    np.testing.assert_array_equal(encoded.H.sum(axis=0), 1)


def test_one_hot_unknown_label():
    with pytest.raises(InputError):
        one_hot([1, 9], [1, 2])


@pytest.mark.parametrize("name,seen,unseen", [("apy", 20, 12), ("awa", 40, 10), ("cub", 150, 50)])
def test_benchmark_split_constants(name, seen, unseen):
    """Test the published class splits are encoded and stubs validate."""
    split = BENCHMARK_SPLITS[name]
    assert (split.seen, split.unseen) == (seen, unseen)
    stub = benchmark_stub(name)
    assert len(stub.seen_classes) == seen
    assert len(stub.unseen_classes) == unseen
    assert stub.k_d == split.attributes
    assert validate(stub).ok


def test_benchmark_stub_unknown_name():
    with pytest.raises(InputError):
        benchmark_stub("imagenet")
