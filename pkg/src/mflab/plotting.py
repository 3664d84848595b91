"""Log-log convergence figures for experiment reports."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_report(report, path) -> Path:
    """Error series with their fitted power laws.

    PNG metadata is stripped so identical reports give identical bytes.
    """
    fig, ax = plt.subplots(figsize=(5.5, 4.0), dpi=100)
    for name, s in report.series.items():
        if name.startswith("seed_"):
            continue
        p = np.asarray(s["parameter"], dtype=float)
        e = np.asarray(s["error"], dtype=float)
        if np.any(e <= 0):
            continue
        line, = ax.loglog(p, e, "o-", label=name)
        f = report.fits.get(name)
        if f is not None:
            ax.loglog(p, f.predict(p), "--", color=line.get_color(), lw=1,
                      label=f"{name} fit, slope {f.slope:.3f}")
    ax.set_xlabel(report.parameter_name)
    ax.set_ylabel("weak error (max over panel)")
    ax.set_title(report.experiment)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="png", metadata={"Software": None})
    plt.close(fig)
    return out
