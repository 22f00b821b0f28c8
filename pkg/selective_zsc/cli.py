"""
Command line for selective zero-shot classification.

    szsc train    --data DIR --params FILE --out MODEL_DIR
    szsc predict  --model DIR --data DIR --lambda X --out FILE
    szsc evaluate --pred FILE --labels FILE --out-curve FILE.csv [--svg FILE.svg]
    szsc cv       --data DIR --plan FILE --out FILE
    szsc combine  --pred-ext FILE --model DIR --data DIR --lambda X [--out FILE]
    szsc synth    --out DIR [--seed N] [--config FILE]
    szsc ablation --data DIR --test DIR --params FILE --kind criteria|lambda|kr

Failures print one line `error <CODE>: <message>` on stderr and exit nonzero.
"""
import functools
import logging
import sys
from pathlib import Path
from typing import Optional

import click
import pandas as pd
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import ablation as ablation_runner
from .errors import InputError, SZSCError, exit_code_for
from .evaluation import rcc
from .matrix_io import (
    atomic_path,
    format_combined,
    format_predictions,
    load_dataset,
    load_model,
    read_config,
    read_external,
    read_labels,
    read_params,
    read_predictions,
    save_dataset,
    save_model,
    write_combined,
    write_curve_csv,
    write_matrix,
    write_params,
    write_text,
)
from .models import AurccMethod, HyperParams, SearchPlan, SynthConfig
from .pipeline_manager import SelectivePipeline, trace_table
from .plotting import save_rcc_svg
from .settings import get_settings
from .synth import synth_generate

logger = logging.getLogger(__name__)

console = Console()
err_console = Console(stderr=True)


def setup_logging(level: Optional[str] = None) -> None:
    level = level or get_settings().log_level
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def reports_errors(command):
    """Turn any failure into a single stderr line and an exit status."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except SZSCError as e:
            click.echo(e.one_line(), err=True)
            sys.exit(exit_code_for(e))
        except (OSError, ValueError, ArithmeticError) as e:
            text = " ".join(str(e).split())
            click.echo(f"error E_GENERIC: {type(e).__name__}: {text}", err=True)
            sys.exit(1)
    return wrapper


def to_rich_table(frame: pd.DataFrame, title: str) -> Table:
    table = Table(title=title)
    for column in frame.columns:
        table.add_column(str(column), justify="right" if frame[column].dtype.kind in "fiu" else "left")
    for row in frame.itertuples(index=False):
        table.add_row(*[f"{v:.6g}" if isinstance(v, float) else str(v) for v in row])
    return table


def _write_frame(frame: pd.DataFrame, path: Path) -> None:
    with atomic_path(path) as tmp:
        frame.to_csv(tmp, index=False, float_format="%.17g")


@click.group()
@click.option("--log-level", default=None, help="Overrides SZSC_LOG_LEVEL")
def main(log_level):
    """Selective zero-shot classification with augmented attributes."""
    setup_logging(log_level.upper() if log_level else None)


@main.command()
@click.option("--data", "data_dir", required=True, type=click.Path(path_type=Path), help="Dataset directory")
@click.option("--params", "params_file", type=click.Path(path_type=Path), help="Hyper-parameter file")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path), help="Model archive directory")
@click.option("--lad-only", is_flag=True, help="Fit the first criterion only")
@reports_errors
def train(data_dir, params_file, out_dir, lad_only):
    """Fit both subproblems and write a model archive."""
    params = read_params(params_file) if params_file else HyperParams()
    pipeline = SelectivePipeline(params)
    fit = pipeline.train(load_dataset(data_dir), with_residual=not lad_only)
    save_model(fit.model, out_dir, trace=trace_table(fit))
    click.echo(f"trained {out_dir}: lad {fit.lad_fit.iterations} sweeps"
               + ("" if fit.residual_fit is None else f", residual {fit.residual_fit.iterations} sweeps"))


@main.command()
@click.option("--model", "model_dir", required=True, type=click.Path(path_type=Path))
@click.option("--data", "data_dir", required=True, type=click.Path(path_type=Path))
@click.option("--lambda", "lam", type=float, default=None, help="Defaults to the model's lambda")
@click.option("--out", "out_file", required=True, type=click.Path(path_type=Path))
@reports_errors
def predict(model_dir, data_dir, lam, out_file):
    """Predict every test sample with its confidences."""
    pipeline = SelectivePipeline(model=load_model(model_dir), worker_count=1)
    dataset = load_dataset(data_dir)
    reports = pipeline.predict(dataset, lam)
    write_text(out_file, format_predictions(pipeline.test_samples(dataset).sample_ids, reports))
    click.echo(f"wrote {len(reports)} predictions to {out_file}")


@main.command()
@click.option("--pred", "pred_file", required=True, type=click.Path(path_type=Path))
@click.option("--labels", "labels_file", required=True, type=click.Path(path_type=Path))
@click.option("--out-curve", "curve_file", required=True, type=click.Path(path_type=Path))
@click.option("--svg", "svg_file", type=click.Path(path_type=Path), default=None)
@click.option("--method", type=click.Choice([m.value for m in AurccMethod]), default=AurccMethod.STEP.value)
@reports_errors
def evaluate(pred_file, labels_file, curve_file, svg_file, method):
    """Risk-coverage curve and AURCC of a predictions file."""
    preds = read_predictions(pred_file)
    labels = read_labels(labels_file)
    ids = preds["sample_id"].to_numpy()
    if preds.empty:
        raise InputError(f"{pred_file} holds no predictions")
    if ids.min() < 0 or ids.max() >= labels.shape[0]:
        raise InputError(f"sample ids exceed the {labels.shape[0]} labels of {labels_file}")
    correct = preds["predicted_class"].to_numpy() == labels[ids]
    curve = rcc(preds["conf"].to_numpy(), correct, AurccMethod(method))
    write_curve_csv(curve_file, curve)
    if svg_file is not None:
        save_rcc_svg({Path(pred_file).stem: curve}, svg_file)
    click.echo(f"AURCC {curve.aurcc:.17g}")


@main.command()
@click.option("--data", "data_dir", required=True, type=click.Path(path_type=Path))
@click.option("--plan", "plan_file", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_file", required=True, type=click.Path(path_type=Path))
@click.option("--params", "params_file", type=click.Path(path_type=Path), help="Values of knobs outside the plan")
@click.option("--threads", type=int, default=None, help="Overrides SZSC_THREADS")
@reports_errors
def cv(data_dir, plan_file, out_file, params_file, threads):
    """Staged class-wise cross-validation."""
    plan = SearchPlan.from_config(read_config(plan_file))
    base = read_params(params_file) if params_file else HyperParams()
    pipeline = SelectivePipeline(base, worker_count=threads)
    result = pipeline.cross_validate(load_dataset(data_dir), plan)
    scores_file = out_file.with_name(out_file.name + ".scores.csv")
    write_params(out_file, result.params)
    try:
        _write_frame(result.scores, scores_file)
    except BaseException:
        out_file.unlink(missing_ok=True)
        raise
    console.print(to_rich_table(result.scores[["stage", "config", "mean_aurcc", "lambda", "status"]], "Cross-validation"))


@main.command()
@click.option("--pred-ext", "ext_file", required=True, type=click.Path(path_type=Path))
@click.option("--model", "model_dir", required=True, type=click.Path(path_type=Path))
@click.option("--data", "data_dir", required=True, type=click.Path(path_type=Path))
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--out", "out_file", type=click.Path(path_type=Path), default=None, help="Defaults to stdout")
@reports_errors
def combine(ext_file, model_dir, data_dir, lam, out_file):
    """Mix an external classifier's confidence with the residual confidence."""
    external = read_external(ext_file)
    pipeline = SelectivePipeline(model=load_model(model_dir), worker_count=1)
    dataset = load_dataset(data_dir)
    ids = pipeline.test_samples(dataset).sample_ids
    if sorted(external["sample_id"].tolist()) != sorted(ids.tolist()):
        raise InputError(f"{ext_file} must list each of the {ids.shape[0]} test samples exactly once")
    external = external.set_index("sample_id").loc[ids].reset_index()
    frame = pipeline.combine(external["conf_ext"].to_numpy(), dataset, lam)
    frame["predicted_class"] = external["predicted_class"].to_numpy()
    if out_file is None:
        click.echo(format_combined(frame), nl=False)
        return
    write_combined(out_file, frame)
    click.echo(f"wrote {len(frame)} combined predictions to {out_file}")


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=None)
@click.option("--config", "config_file", type=click.Path(path_type=Path), default=None, help="SynthConfig `key value` file")
@reports_errors
def synth(out_dir, seed, config_file):
    """Write a planted synthetic benchmark as train/ and test/ dataset directories."""
    values = {k: v[0] for k, v in read_config(config_file).items()} if config_file else {}
    if seed is not None:
        values["seed"] = seed
    try:
        config = SynthConfig.model_validate(values)
    except ValueError as e:
        raise InputError(f"invalid synthetic config: {e}")
    data = synth_generate(config)
    save_dataset(data.train, out_dir / "train")
    save_dataset(data.test, out_dir / "test")
    for name in ("Q_d", "Q_l", "Q_r", "D", "R", "residual_prototypes"):
        write_matrix(out_dir / "factors" / f"{name.lower()}.txt", getattr(data.factors, name))
    click.echo(f"wrote synthetic benchmark to {out_dir}: {data.train.n_samples} train, {data.test.n_samples} test samples")


@main.command()
@click.option("--data", "train_dir", required=True, type=click.Path(path_type=Path), help="Training dataset directory")
@click.option("--test", "test_dir", required=True, type=click.Path(path_type=Path), help="Test dataset directory")
@click.option("--params", "params_file", type=click.Path(path_type=Path), default=None)
@click.option("--kind", type=click.Choice(["criteria", "lambda", "kr"]), default="criteria")
@click.option("--k-r-grid", default="2 4 8 16", help="Space-separated K_r values for --kind kr")
@click.option("--out", "out_file", type=click.Path(path_type=Path), default=None, help="CSV of the table")
@reports_errors
def ablation(train_dir, test_dir, params_file, kind, k_r_grid, out_file):
    """Criteria, lambda or K_r ablation table."""
    params = read_params(params_file) if params_file else HyperParams()
    train_set, test_set = load_dataset(train_dir), load_dataset(test_dir)
    if kind == "criteria":
        frame = ablation_runner.criteria_ablation(train_set, test_set, params)
    elif kind == "lambda":
        frame = ablation_runner.lambda_sweep(train_set, test_set, params)
    else:
        try:
            grid = [int(k) for k in k_r_grid.split()]
        except ValueError:
            raise InputError(f"--k-r-grid must hold integers, got '{k_r_grid}'")
        frame = ablation_runner.kr_sweep(train_set, test_set, params, grid)
    if out_file is not None:
        _write_frame(frame, out_file)
    console.print(to_rich_table(frame, f"{kind} ablation"))


if __name__ == "__main__":
    main()
