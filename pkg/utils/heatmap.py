"""
SVG Heatmaps

Renders grid fields as SVG images with a diverging colour map centred at 0
and a colour bar. Output bytes depend only on the input: the SVG hash salt
is fixed and the date metadata is dropped.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import TwoSlopeNorm

logger = logging.getLogger(__name__)

CMAP = "RdBu_r"
SVG_SALT = "monge-ampere-lab"


def _symmetric_norm(values: np.ndarray) -> TwoSlopeNorm:
    finite = values[np.isfinite(values)]
    vmax = float(np.max(np.abs(finite))) if finite.size else 0.0
    if vmax == 0.0:
        vmax = 1.0
    return TwoSlopeNorm(vcenter=0.0, vmin=-vmax, vmax=vmax)


def emit_heatmap(field, path, title: str = None, grid=None) -> Path:
    """
    Write an SVG heatmap of a field

    Args:
        field: ScalarField, or an (n1, n2) array on a grid layout; nodes
            without a value (exterior, masked) are NaN and drawn white
        path: output file
        title: optional axes title
        grid: UniformGrid giving the axes extent of a plain array

    Returns:
        Path: the written file

    Raises:
        ValueError: on an empty field
        OSError: if the file cannot be written
    """
    if hasattr(field, "as_array"):
        grid = field.grid
        values = field.as_array()
    else:
        values = np.asarray(field, dtype=float)
    extent = None
    if grid is not None:
        extent = (grid.origin[0], grid.origin[0] + (grid.n1 - 1) * grid.h,
                  grid.origin[1], grid.origin[1] + (grid.n2 - 1) * grid.h)
    if values.size == 0:
        raise ValueError("cannot draw an empty field")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cmap = matplotlib.colormaps[CMAP].copy()
    cmap.set_bad("white")

    with matplotlib.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 5))
        image = ax.imshow(np.ma.masked_invalid(values).T, origin="lower", cmap=cmap,
                          norm=_symmetric_norm(values), extent=extent, interpolation="nearest")
        fig.colorbar(image, ax=ax, label="value")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        if title:
            ax.set_title(title)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)

    logger.debug("heatmap written to %s", path)
    return path
