import logging
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from modeling.errors import ConfigError
from .utils import read_columns


logger = logging.getLogger(__name__)

# fixed salt and no date stamp keep the SVG output byte-stable
_RC = {"svg.hashsalt": "entangle", "svg.fonttype": "path", "figure.figsize": (6.4, 4.0)}


@dataclass(frozen=True)
class PlotSpec:
    x: str
    ys: Sequence[str]
    title: str = ""
    xlabel: Optional[str] = None
    ylabel: Optional[str] = None
    logy: bool = False


def build_figure(columns: dict, spec: PlotSpec):
    fig, ax = plt.subplots()
    for name in spec.ys:
        ax.plot(columns[spec.x], columns[name], label=name, linewidth=1.2)
    if spec.logy:
        ax.set_yscale("log")
    ax.set_xlabel(spec.xlabel or spec.x)
    ax.set_ylabel(spec.ylabel or ", ".join(spec.ys))
    if spec.title:
        ax.set_title(spec.title)
    if len(spec.ys) > 1:
        ax.legend()
    ax.grid(True, linewidth=0.3)
    return fig


def emit_plot(csv_path: str, spec: PlotSpec, out_path: Optional[str] = None) -> str:
    """Render the named series of a CSV file to `<csv stem>.svg` next to it unless `out_path` is given."""
    try:
        columns = read_columns(csv_path, [spec.x, *spec.ys])
    except KeyError as e:
        raise ConfigError(str(e.args[0]))
    if not columns[spec.x]:
        raise ConfigError(f"{csv_path}: no data rows to plot")
    out_path = out_path or os.path.splitext(csv_path)[0] + ".svg"
    with matplotlib.rc_context(_RC):
        fig = build_figure(columns, spec)
        try:
            fig.savefig(out_path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    logger.info(f"plot saved to {out_path}")
    return out_path
