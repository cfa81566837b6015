"""Matplotlib rendering of information / sum-rate curves to image files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_curve_figure(rows, envelope, path, unit="nats",
                        oracle_curves=None, title=None):
    """Write a (sum-rate, relevance) figure.

    ``rows`` are the swept points, ``envelope`` the concave majorant,
    ``oracle_curves`` an optional mapping name -> list of (r, delta).
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    r = [row["r_sum"] for row in rows]
    d = [row["delta"] for row in rows]
    ax.plot(r, d, "o", ms=4, color="tab:blue", label="swept points")
    if envelope:
        ax.plot([p[0] for p in envelope], [p[1] for p in envelope],
                "-", color="tab:blue", lw=1.2, label="upper envelope")
    for name, pts in (oracle_curves or {}).items():
        if isinstance(pts, (int, float)):
            ax.axhline(pts, ls=":", color="tab:red", lw=1.0, label=name)
        else:
            ax.plot([p[0] for p in pts], [p[1] for p in pts],
                    "--", lw=1.0, label=name)
    ax.set_xlabel(f"sum rate ({unit})")
    ax.set_ylabel(f"relevant information ({unit})")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
