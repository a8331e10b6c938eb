"""
Fringe Chart — standalone SVG plots of scans with an optional fitted-cosine overlay.

Data points go in one group (id "fringe-points", one <use> per marker) and
the model curve in another (id "fringe-fit", a single path). Output is
byte-stable: no timestamp, fixed hash salt, text kept as text.
"""

import io

import matplotlib
matplotlib.use('Agg')  # no display
import matplotlib.pyplot as plt
import numpy as np

POINTS_GID = "fringe-points"
FIT_GID = "fringe-fit"
CURVE_SAMPLES = 801

_SVG_RC = {
    "svg.fonttype": "none",
    "svg.hashsalt": "spinsim",
    "path.simplify": False,
}


class ChartError(Exception):
    pass


def render_svg(
    points,
    fit=None,
    x_label: str = "Detuning (Hz)",
    y_label: str = "Population",
    title: str = "",
    log_x: bool = False,
) -> str:
    """
    Render (x, y) points, and the fit's model curve when the fit converged.

    Args:
        points: FringeScan, RabiScan or iterable of (x, y) pairs
        fit:    anything with .model(x) and .converged (FringeFit, CosineFit)

    Returns:
        SVG document as a string
    """
    pairs = list(getattr(points, "points", points))
    if not pairs:
        raise ChartError("cannot render an empty scan")
    x = np.array([p[0] for p in pairs], dtype=float)
    y = np.array([p[1] for p in pairs], dtype=float)

    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(7, 4.2))
        try:
            ax.plot(x, y, linestyle="none", marker="o", markersize=4,
                    color="#1f4e79", gid=POINTS_GID)
            if fit is not None and getattr(fit, "converged", False):
                if log_x:
                    xs = np.geomspace(x.min(), x.max(), CURVE_SAMPLES)
                else:
                    xs = np.linspace(x.min(), x.max(), CURVE_SAMPLES)
                ax.plot(xs, fit.model(xs), color="#c0392b", linewidth=1.4, gid=FIT_GID)
            if log_x:
                ax.set_xscale("log")
            ax.set_xlabel(x_label)
            ax.set_ylabel(y_label)
            if title:
                ax.set_title(title, fontsize=11)
            ax.grid(True, color="#eeeeee", linewidth=0.6)
            fig.tight_layout()

            buf = io.StringIO()
            fig.savefig(buf, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return buf.getvalue()


def write_svg(path, points, fit=None, **labels) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_svg(points, fit, **labels))
