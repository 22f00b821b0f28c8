"""
Dataset-side types of a zero-shot problem instance and their validator.

Class ids are nonnegative integers; class id j indexes column j of the
class-level attribute table, and every matrix whose columns index classes
uses the sorted order of ids.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InputError
from .models import DatasetRole, ValidationReport, Violation

logger = logging.getLogger(__name__)


def _frozen(arr: Optional[np.ndarray], dtype=float) -> Optional[np.ndarray]:
    if arr is None:
        return None
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """
    Features, labels and attribute tables of one zero-shot split.

    X holds one feature column per sample (K_o x N); class_attr holds one
    defined-attribute column per class id (K_d x C). D_samples, when given,
    carries per-sample attribute annotations (K_d x N).
    """
    X: np.ndarray
    labels: np.ndarray
    class_attr: np.ndarray
    seen_classes: FrozenSet[int]
    unseen_classes: FrozenSet[int]
    D_samples: Optional[np.ndarray] = None
    role: DatasetRole = DatasetRole.MIXED
    sample_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "X", _frozen(self.X))
        object.__setattr__(self, "labels", _frozen(self.labels, dtype=np.int64))
        object.__setattr__(self, "class_attr", _frozen(self.class_attr))
        object.__setattr__(self, "D_samples", _frozen(self.D_samples))
        object.__setattr__(self, "seen_classes", frozenset(int(c) for c in self.seen_classes))
        object.__setattr__(self, "unseen_classes", frozenset(int(c) for c in self.unseen_classes))
        object.__setattr__(self, "role", DatasetRole(self.role))
        ids = self.sample_ids if self.sample_ids is not None else np.arange(self.labels.shape[0])
        object.__setattr__(self, "sample_ids", _frozen(ids, dtype=np.int64))

    @property
    def n_samples(self) -> int:
        return int(self.labels.shape[0])

    @property
    def k_o(self) -> int:
        return int(self.X.shape[0])

    @property
    def k_d(self) -> int:
        return int(self.class_attr.shape[0])

    @property
    def seen_order(self) -> Tuple[int, ...]:
        return tuple(sorted(self.seen_classes))

    @property
    def unseen_order(self) -> Tuple[int, ...]:
        return tuple(sorted(self.unseen_classes))

    def attributes_for(self, classes: Iterable[int]) -> np.ndarray:
        """Class attribute columns for the given ids, in sorted id order."""
        return np.ascontiguousarray(self.class_attr[:, sorted(int(c) for c in classes)])

    def per_sample_attributes(self) -> np.ndarray:
        """
        Per-sample defined attributes, broadcasting class columns when the
        dataset carries only the class-level table.
        """
        if self.D_samples is not None:
            return np.array(self.D_samples)
        return np.array(self.class_attr[:, self.labels])

    def subset(self, indices: Sequence[int], role: Optional[DatasetRole] = None) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            X=self.X[:, idx],
            labels=self.labels[idx],
            class_attr=self.class_attr,
            seen_classes=self.seen_classes,
            unseen_classes=self.unseen_classes,
            D_samples=None if self.D_samples is None else self.D_samples[:, idx],
            role=role or self.role,
            sample_ids=self.sample_ids[idx],
        )

    def train_view(self) -> "Dataset":
        """Samples of seen classes, marked as a training split."""
        mask = np.isin(self.labels, list(self.seen_classes))
        return self.subset(np.flatnonzero(mask), role=DatasetRole.TRAIN)

    def test_view(self) -> "Dataset":
        """Samples of unseen classes, marked as a test split."""
        mask = np.isin(self.labels, list(self.unseen_classes))
        return self.subset(np.flatnonzero(mask), role=DatasetRole.TEST)

    def with_split(self, seen: Iterable[int], unseen: Iterable[int], role: Optional[DatasetRole] = None) -> "Dataset":
        return Dataset(
            X=self.X,
            labels=self.labels,
            class_attr=self.class_attr,
            seen_classes=frozenset(seen),
            unseen_classes=frozenset(unseen),
            D_samples=self.D_samples,
            role=role or self.role,
            sample_ids=self.sample_ids,
        )


@dataclass(frozen=True)
class OneHotLabels:
    """Label indicator matrix H (C_s x N_s), row r marking seen class classes[r]"""
    H: np.ndarray
    classes: Tuple[int, ...]

    def decode(self) -> np.ndarray:
        return np.asarray(self.classes, dtype=np.int64)[np.argmax(self.H, axis=0)]


def one_hot(labels: Sequence[int], seen_classes: Sequence[int]) -> OneHotLabels:
    """
    Build the label indicator matrix.

    Args:
        labels: Class id per sample
        seen_classes: Ordered seen class ids; row r belongs to seen_classes[r]

    Returns:
        OneHotLabels with exactly one 1 per column
    """
    order = tuple(int(c) for c in seen_classes)
    row_of: Dict[int, int] = {c: r for r, c in enumerate(order)}
    if len(row_of) != len(order):
        raise InputError("seen class ordering contains duplicates")
    labels = [int(y) for y in labels]
    H = np.zeros((len(order), len(labels)))
    for i, y in enumerate(labels):
        if y not in row_of:
            raise InputError(f"label {y} of sample {i} is not a seen class")
        H[row_of[y], i] = 1.0
    return OneHotLabels(H=H, classes=order)


def validate(dataset: Dataset) -> ValidationReport:
    """
    Check every dataset invariant.

    Args:
        dataset: The instance to check

    Returns:
        A report listing all violations with their coordinates
    """
    violations: List[Violation] = []

    def add(kind: str, message: str, **coords):
        violations.append(Violation(kind=kind, message=message, **coords))

    X, labels, attrs = dataset.X, dataset.labels, dataset.class_attr
    if X.ndim != 2 or X.shape[0] < 1:
        add("shape", f"X must be K_o x N with K_o >= 1, got shape {X.shape}")
    if attrs.ndim != 2 or attrs.shape[0] < 1:
        add("shape", f"class_attr must be K_d x C with K_d >= 1, got shape {attrs.shape}")
    if labels.ndim != 1 or labels.shape[0] < 1:
        add("shape", f"labels must be a nonempty sequence, got shape {labels.shape}")
    if violations:
        return ValidationReport(violations=violations)

    n = labels.shape[0]
    if X.shape[1] != n:
        add("shape", f"X has {X.shape[1]} columns but there are {n} labels")
    if dataset.D_samples is not None and dataset.D_samples.shape != (attrs.shape[0], n):
        add("shape", f"D_samples must be {(attrs.shape[0], n)}, got {dataset.D_samples.shape}")

    for c in sorted(dataset.seen_classes & dataset.unseen_classes):
        add("overlap", f"class {c} is both seen and unseen", class_id=c)
    n_classes = attrs.shape[1]
    for c in sorted(dataset.seen_classes | dataset.unseen_classes):
        if c < 0 or c >= n_classes:
            add("class_out_of_range", f"class {c} has no column in class_attr ({n_classes} columns)", class_id=c)

    known = dataset.seen_classes | dataset.unseen_classes
    for i, y in enumerate(labels.tolist()):
        if y not in known:
            add("unknown_label", f"sample {i} carries label {y} outside seen and unseen classes", sample=i, class_id=y)
        elif dataset.role == DatasetRole.TRAIN and y not in dataset.seen_classes:
            add("label_not_seen", f"training sample {i} carries unseen label {y}", sample=i, class_id=y)
        elif dataset.role == DatasetRole.TEST and y not in dataset.unseen_classes:
            add("label_not_unseen", f"test sample {i} carries seen label {y}", sample=i, class_id=y)

    for r, c in zip(*np.nonzero(~np.isfinite(X))):
        add("nonfinite_feature", f"X[{r}, {c}] is not finite", row=int(r), col=int(c), sample=int(c))
    bad_attr = ~np.isfinite(attrs)
    for c in np.flatnonzero(bad_attr.any(axis=0)):
        r = int(np.flatnonzero(bad_attr[:, c])[0])
        add("nonfinite_class_attr", f"class_attr column of class {c} is not finite (row {r})", class_id=int(c), row=r, col=int(c))
    if dataset.D_samples is not None and dataset.D_samples.shape == (attrs.shape[0], n):
        for r, c in zip(*np.nonzero(~np.isfinite(dataset.D_samples))):
            add("nonfinite_sample_attr", f"D_samples[{r}, {c}] is not finite", row=int(r), col=int(c), sample=int(c))

    if violations:
        logger.warning(f"Dataset validation found {len(violations)} violation(s)")
    return ValidationReport(violations=violations)


@dataclass(frozen=True)
class BenchmarkSplit:
    """Class split of a public zero-shot benchmark"""
    name: str
    seen: int
    unseen: int
    attributes: int
    note: str = field(default="")

    @property
    def classes(self) -> int:
        return self.seen + self.unseen


BENCHMARK_SPLITS: Dict[str, BenchmarkSplit] = {
    "apy": BenchmarkSplit("apy", seen=20, unseen=12, attributes=64, note="aPascal classes seen, aYahoo classes unseen"),
    "awa": BenchmarkSplit("awa", seen=40, unseen=10, attributes=85),
    "cub": BenchmarkSplit("cub", seen=150, unseen=50, attributes=312),
}


def benchmark_stub(name: str, k_o: int = 8, samples_per_class: int = 1, seed: int = 0) -> Dataset:
    """
    Tiny random dataset carrying a benchmark's class split.

    Args:
        name: One of the BENCHMARK_SPLITS keys
        k_o: Feature dimension of the stub
        samples_per_class: Samples drawn per class
        seed: Random seed

    Returns:
        A mixed-role Dataset whose first `seen` class ids are seen
    """
    if name not in BENCHMARK_SPLITS:
        raise InputError(f"unknown benchmark '{name}', expected one of {sorted(BENCHMARK_SPLITS)}")
    split = BENCHMARK_SPLITS[name]
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(split.classes), samples_per_class)
    return Dataset(
        X=rng.normal(size=(k_o, labels.shape[0])),
        labels=labels,
        class_attr=rng.uniform(0.0, 1.0, size=(split.attributes, split.classes)),
        seen_classes=frozenset(range(split.seen)),
        unseen_classes=frozenset(range(split.seen, split.classes)),
    )
