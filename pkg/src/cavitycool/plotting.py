"""Optional figures rendered from a result table (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _groups(rows):
    out = {}
    for r in rows:
        if r.get("status") == "ok":
            out.setdefault((r["spont_emission"], r["detuning"], r["l"]), []).append(r)
    for grp in out.values():
        grp.sort(key=lambda r: r["n_atoms"])
    return out


def render_figures(rows, out_dir, stem: str) -> list:
    """Write PNGs next to the table; returns the written paths."""
    plt = _pyplot()
    out = Path(out_dir)
    paths = []
    groups = _groups(rows)

    fig, (ax_r, ax_n) = plt.subplots(1, 2, figsize=(10, 4))
    for (spont, det, l), grp in sorted(groups.items(), key=lambda kv: str(kv[0])):
        label = f"l={l}{' spont' if spont else ''}"
        ns = np.array([r["n_atoms"] for r in grp])
        for r in grp:
            rates = np.asarray(r["_rates"])
            ax_r.plot(np.full(rates.size, r["n_atoms"]), rates, ".", ms=2, color="0.6")
        line, = ax_r.plot(ns, [r["gamma_min"] for r in grp], "o-", ms=3, label=f"min rate {label}")
        x1 = [(r["n_atoms"], r["gamma_X1"]) for r in grp
              if r.get("gamma_X1") is not None and np.isfinite(r["gamma_X1"])]
        if x1:
            ax_r.plot(*zip(*x1), "--", color=line.get_color(), lw=1)
        ax_n.plot(ns, [r["n_max"] for r in grp], "o-", ms=3, label=f"hottest {label}")
        ax_n.plot(ns, [r["n_mean"] for r in grp], "s:", ms=3, label=f"mean {label}")
    for ax, ylabel in ((ax_r, "decay rate / kappa"), (ax_n, "phonon number")):
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("N")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=7)
    fig.tight_layout()
    path = out / f"{stem}_scaling.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    by_n = {}
    for r in rows:
        if r.get("status") == "ok":
            by_n.setdefault((r["spont_emission"], r["n_atoms"]), []).append(r)
    if any(len({r["l"] for r in grp}) > 1 for grp in by_n.values()):
        fig, ax = plt.subplots(figsize=(5, 4))
        for (spont, n), grp in sorted(by_n.items()):
            grp.sort(key=lambda r: r["l"])
            ax.plot([r["l"] for r in grp], [r["gamma_min"] for r in grp], "o-", ms=3,
                    label=f"N={n}")
        ax.set_yscale("log")
        ax.set_xlabel("l")
        ax.set_ylabel("min decay rate / kappa")
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = out / f"{stem}_optimization.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
