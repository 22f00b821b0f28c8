"""
Plain-text file formats: matrices, `key value` configs, dataset
directories, prediction files, curve CSVs and model archives.

Every writer goes through a temporary file (or directory) in the target's
parent and renames it into place, so a failed run never leaves a torn
output behind.
"""
import json
import logging
import os
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from .data_model import Dataset
from .errors import ArchiveError, FormatError
from .evaluation import RiskCoverageCurve
from .lad_solver import LadModel
from .models import ArchiveManifest, ConfidenceReport, DatasetRole, HyperParams
from .residual_solver import AugmentedModel, ResidualModel

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

PREDICTION_COLUMNS = ["sample_id", "predicted_class", "conf_d", "conf_r", "conf"]
EXTERNAL_COLUMNS = ["sample_id", "predicted_class", "conf_ext"]
COMBINED_COLUMNS = ["sample_id", "predicted_class", "conf_ext", "conf_r", "conf"]
ARCHIVE_FORMAT_VERSION = 1
LAD_FILES = ("q_d", "l", "q_l", "u")
RESIDUAL_FILES = ("q_r", "r_s", "v", "w", "r_o")


def fmt(value: float) -> str:
    """Shortest text that reads back to the same double."""
    return format(float(value), ".17g")


# Atomic writes
@contextmanager
def atomic_path(path: PathLike):
    """Yield a temporary sibling path that replaces `path` on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text(path: PathLike, text: str) -> None:
    with atomic_path(path) as tmp:
        tmp.write_text(text)


@contextmanager
def atomic_directory(path: PathLike):
    """Yield a temporary sibling directory that is swapped in for `path` on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=path.parent, prefix=f".{path.name}."))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    backup = None
    if path.exists():
        backup = path.parent / f".{path.name}.old"
        shutil.rmtree(backup, ignore_errors=True)
        os.replace(path, backup)
    os.replace(tmp, path)
    if backup is not None:
        shutil.rmtree(backup, ignore_errors=True)


# Matrices
def format_matrix(matrix) -> str:
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2:
        raise FormatError(f"only 2-D matrices can be written, got {M.ndim}-D")
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    lines.extend(" ".join(fmt(v) for v in row) for row in M)
    return "\n".join(lines) + "\n"


def parse_matrix(text: str, source: str = "<matrix>") -> np.ndarray:
    """
    Parse a MatrixFile body.

    Args:
        text: Header `rows cols` followed by one line per row
        source: Name used in error messages

    Returns:
        The matrix as float64
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise FormatError(f"{source}: empty matrix file")
    header = lines[0].split()
    try:
        rows, cols = int(header[0]), int(header[1])
    except (IndexError, ValueError):
        raise FormatError(f"{source}: header must be 'rows cols', got '{lines[0]}'")
    if len(header) != 2 or rows < 0 or cols < 0:
        raise FormatError(f"{source}: header must be two nonnegative integers, got '{lines[0]}'")
    body = lines[1:]
    if len(body) != rows:
        raise FormatError(f"{source}: header declares {rows} rows, body has {len(body)}")
    M = np.empty((rows, cols))
    for r, line in enumerate(body):
        fields = line.split()
        if len(fields) != cols:
            raise FormatError(f"{source}: row {r} has {len(fields)} values, expected {cols}")
        try:
            M[r] = [float(v) for v in fields]
        except ValueError:
            raise FormatError(f"{source}: row {r} holds a non-numeric value")
    return M


def write_matrix(path: PathLike, matrix) -> None:
    write_text(path, format_matrix(matrix))


def read_matrix(path: PathLike) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"matrix file {path} does not exist")
    return parse_matrix(path.read_text(), str(path))


# Config files
def parse_config(text: str, source: str = "<config>") -> Dict[str, List[str]]:
    """Parse `key value...` lines; `#` starts a comment and keys must be unique."""
    config: Dict[str, List[str]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *values = line.split()
        if not values:
            raise FormatError(f"{source}:{number}: key '{key}' has no value")
        if key in config:
            raise FormatError(f"{source}:{number}: duplicate key '{key}'")
        config[key] = values
    return config


def read_config(path: PathLike) -> Dict[str, List[str]]:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"config file {path} does not exist")
    return parse_config(path.read_text(), str(path))


def read_params(path: PathLike) -> HyperParams:
    return HyperParams.from_config(read_config(path))


def write_params(path: PathLike, params: HyperParams) -> None:
    write_text(path, "\n".join(params.to_config_lines()) + "\n")


# Dataset directories
def read_labels(path: PathLike) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"labels file {path} does not exist")
    labels = []
    for number, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            labels.append(int(line.strip()))
        except ValueError:
            raise FormatError(f"{path}:{number}: '{line.strip()}' is not an integer class id")
    return np.asarray(labels, dtype=np.int64)


def write_labels(path: PathLike, labels: Iterable[int]) -> None:
    write_text(path, "".join(f"{int(y)}\n" for y in labels))


def load_dataset(directory: PathLike) -> Dataset:
    """
    Read a dataset directory.

    Args:
        directory: Holds x.txt, class_attr.txt, labels.txt, dataset.cfg and
            optionally d_samples.txt

    Returns:
        Dataset whose sample ids are the line numbers of labels.txt (from 0)
    """
    directory = Path(directory)
    config = read_config(directory / "dataset.cfg")
    try:
        seen = [int(c) for c in config.get("seen", [])]
        unseen = [int(c) for c in config.get("unseen", [])]
        role = DatasetRole(config.get("role", ["mixed"])[0])
    except ValueError as e:
        raise FormatError(f"{directory / 'dataset.cfg'}: {e}")
    d_path = directory / "d_samples.txt"
    dataset = Dataset(
        X=read_matrix(directory / "x.txt"),
        labels=read_labels(directory / "labels.txt"),
        class_attr=read_matrix(directory / "class_attr.txt"),
        seen_classes=frozenset(seen),
        unseen_classes=frozenset(unseen),
        D_samples=read_matrix(d_path) if d_path.is_file() else None,
        role=role,
    )
    logger.debug(f"Loaded dataset {directory}: {dataset.n_samples} samples, K_o={dataset.k_o}, K_d={dataset.k_d}")
    return dataset


def save_dataset(dataset: Dataset, directory: PathLike) -> None:
    """Write a dataset directory; sample ids become line numbers."""
    with atomic_directory(directory) as tmp:
        write_matrix(tmp / "x.txt", dataset.X)
        write_matrix(tmp / "class_attr.txt", dataset.class_attr)
        if dataset.D_samples is not None:
            write_matrix(tmp / "d_samples.txt", dataset.D_samples)
        write_labels(tmp / "labels.txt", dataset.labels)
        cfg = [f"role {dataset.role.value}"]
        for key, ids in (("seen", dataset.seen_order), ("unseen", dataset.unseen_order)):
            if ids:
                cfg.insert(-1, f"{key} " + " ".join(str(c) for c in ids))
        write_text(tmp / "dataset.cfg", "\n".join(cfg) + "\n")


# Prediction files
def _read_table(path: PathLike, columns: List[str], int_columns: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"file {path} does not exist")
    try:
        frame = pd.read_csv(path, sep=r"\s+", comment="#", header=None, dtype=str, engine="python")
    except pd.errors.EmptyDataError:
        return pd.DataFrame({c: pd.Series(dtype=np.int64 if c in int_columns else float) for c in columns})
    except pd.errors.ParserError as e:
        raise FormatError(f"{path}: {e}")
    if frame.shape[1] != len(columns) or frame.isna().any().any():
        raise FormatError(f"{path}: every line must hold {len(columns)} fields: {' '.join(columns)}")
    frame.columns = columns
    try:
        for column in columns:
            frame[column] = frame[column].astype(np.int64 if column in int_columns else float)
    except ValueError as e:
        raise FormatError(f"{path}: {e}")
    return frame


def format_predictions(sample_ids: Sequence[int], reports: Sequence[ConfidenceReport]) -> str:
    lines = ["# " + " ".join(PREDICTION_COLUMNS)]
    for sid, r in zip(sample_ids, reports):
        lines.append(f"{int(sid)} {r.predicted_class} {fmt(r.conf_d)} {fmt(r.conf_r)} {fmt(r.conf)}")
    return "\n".join(lines) + "\n"


def write_predictions(path: PathLike, sample_ids: Sequence[int], reports: Sequence[ConfidenceReport]) -> None:
    if len(sample_ids) != len(reports):
        raise FormatError(f"{len(sample_ids)} sample ids for {len(reports)} reports")
    write_text(path, format_predictions(sample_ids, reports))


def read_predictions(path: PathLike) -> pd.DataFrame:
    return _read_table(path, PREDICTION_COLUMNS, ("sample_id", "predicted_class"))


def read_external(path: PathLike) -> pd.DataFrame:
    return _read_table(path, EXTERNAL_COLUMNS, ("sample_id", "predicted_class"))


def format_combined(frame: pd.DataFrame) -> str:
    lines = ["# " + " ".join(COMBINED_COLUMNS)]
    for row in frame[COMBINED_COLUMNS].itertuples(index=False):
        lines.append(f"{int(row.sample_id)} {int(row.predicted_class)} {fmt(row.conf_ext)} {fmt(row.conf_r)} {fmt(row.conf)}")
    return "\n".join(lines) + "\n"


def write_combined(path: PathLike, frame: pd.DataFrame) -> None:
    write_text(path, format_combined(frame))


# Curves
def write_curve_csv(path: PathLike, curve: RiskCoverageCurve) -> None:
    lines = ["coverage,risk"]
    lines.extend(f"{fmt(c)},{fmt(r)}" for c, r in curve.points)
    lines.append(f"AURCC,{fmt(curve.aurcc)}")
    write_text(path, "\n".join(lines) + "\n")


def read_curve_aurcc(path: PathLike) -> float:
    """AURCC from the trailing line of a curve CSV."""
    lines = [line for line in Path(path).read_text().splitlines() if line.strip()]
    if not lines or not lines[-1].startswith("AURCC,"):
        raise FormatError(f"{path}: missing trailing AURCC line")
    return float(lines[-1].split(",", 1)[1])


# Model archives
def _archive_matrices(model: AugmentedModel) -> Dict[str, np.ndarray]:
    matrices = {
        "q_d": model.lad.Q_d,
        "l": model.lad.L,
        "q_l": model.lad.Q_l,
        "u": model.lad.U,
        "class_attr_seen": model.class_attr_seen,
    }
    if model.residual is not None:
        res = model.residual
        matrices.update({"q_r": res.Q_r, "r_s": res.R_s, "v": res.V, "w": res.W, "r_o": res.R_o})
    return matrices


def save_model(model: AugmentedModel, directory: PathLike, trace: Optional[pd.DataFrame] = None) -> None:
    """
    Persist a model archive.

    Args:
        model: Model to store
        directory: Archive directory, replaced as a whole
        trace: Optional per-sweep objective table written as trace.csv
    """
    matrices = _archive_matrices(model)
    manifest = ArchiveManifest(
        format_version=ARCHIVE_FORMAT_VERSION,
        params=model.params,
        seen_class_order=list(model.seen_class_order),
        dims={name: tuple(M.shape) for name, M in matrices.items()},
        has_residual=model.residual is not None,
    )
    with atomic_directory(directory) as tmp:
        for name, M in matrices.items():
            write_matrix(tmp / f"{name}.txt", M)
        write_text(tmp / "manifest.json", manifest.model_dump_json(by_alias=True, indent=2) + "\n")
        if trace is not None:
            with atomic_path(tmp / "trace.csv") as path:
                trace.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Saved model archive {directory} ({len(matrices)} matrices)")


def load_model(directory: PathLike) -> AugmentedModel:
    """
    Load a model archive, checking its manifest against every stored matrix.

    Args:
        directory: Archive directory written by save_model

    Returns:
        The stored AugmentedModel
    """
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise ArchiveError(f"{directory} has no manifest.json")
    try:
        raw = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise ArchiveError(f"{manifest_path}: {e}")
    if raw.get("format_version") != ARCHIVE_FORMAT_VERSION:
        raise ArchiveError(f"{manifest_path}: unsupported format version {raw.get('format_version')}")
    try:
        manifest = ArchiveManifest.model_validate(raw)
    except ValidationError as e:
        raise ArchiveError(f"{manifest_path}: {e}")

    required = LAD_FILES + ("class_attr_seen",) + (RESIDUAL_FILES if manifest.has_residual else ())
    matrices = {}
    for name in required:
        if name not in manifest.dims:
            raise ArchiveError(f"manifest lacks dimensions of '{name}'")
        path = directory / f"{name}.txt"
        if not path.is_file():
            raise ArchiveError(f"archive misses {path.name}")
        try:
            M = read_matrix(path)
        except FormatError as e:
            raise ArchiveError(str(e))
        if M.shape != tuple(manifest.dims[name]):
            raise ArchiveError(f"{path.name} is {M.shape}, manifest says {tuple(manifest.dims[name])}")
        matrices[name] = M

    if len(manifest.seen_class_order) != matrices["class_attr_seen"].shape[1]:
        raise ArchiveError("seen class order does not match class_attr_seen")
    residual = None
    if manifest.has_residual:
        residual = ResidualModel(
            Q_r=matrices["q_r"], R_s=matrices["r_s"], V=matrices["v"], W=matrices["w"], R_o=matrices["r_o"]
        )
    return AugmentedModel(
        lad=LadModel(Q_d=matrices["q_d"], L=matrices["l"], Q_l=matrices["q_l"], U=matrices["u"]),
        residual=residual,
        params=manifest.params,
        seen_class_order=tuple(manifest.seen_class_order),
        class_attr_seen=matrices["class_attr_seen"],
    )
