"""
Static SVG rendering of risk-coverage curves.
"""
import logging
from pathlib import Path
from typing import Mapping, Union

import matplotlib
from matplotlib.figure import Figure

from .evaluation import RiskCoverageCurve
from .matrix_io import atomic_path

logger = logging.getLogger(__name__)

matplotlib.rcParams["svg.hashsalt"] = "selective-zsc"
matplotlib.rcParams["svg.fonttype"] = "none"


def curve_label(name: str, curve: RiskCoverageCurve) -> str:
    return f"{name} [{curve.aurcc:.4f}]"


def save_rcc_svg(curves: Mapping[str, RiskCoverageCurve], path: Union[str, Path], title: str = "") -> None:
    """
    Draw one or more labelled risk-coverage curves into an SVG file.

    Args:
        curves: Legend name -> curve; legend entries carry AURCC in brackets
        path: Output .svg path
        title: Optional axes title
    """
    fig = Figure(figsize=(5.0, 4.0))
    ax = fig.subplots()
    for name, curve in curves.items():
        ax.step(curve.coverage, curve.risk, where="pre", label=curve_label(name, curve))
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(bottom=0.0)
    ax.set_xlabel("Coverage")
    ax.set_ylabel("Risk")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper left")
    fig.tight_layout()
    with atomic_path(path) as tmp:
        fig.savefig(tmp, format="svg", metadata={"Date": None})
    logger.info(f"Wrote risk-coverage figure {path} with {len(curves)} curve(s)")
