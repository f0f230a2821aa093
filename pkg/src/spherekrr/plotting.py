"""Render sweep reports as matplotlib figures saved next to the delimited output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["render_report_figures"]


def _collect(rows, kind):
    return [r for r in rows if r.kind == kind]


def _sweep_figure(rows, title, path):
    theory = _collect(rows, "theory")
    trials = _collect(rows, "trial")
    means = _collect(rows, "mean")
    ses = {r.delta: r for r in _collect(rows, "se")}

    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    for ax, field_name, label in ((axes[0], "e_test", "test error"),
                                  (axes[1], "e_train", "training error")):
        if theory:
            ax.plot([r.delta for r in theory], [getattr(r, field_name) for r in theory],
                    "-", color="crimson", lw=1.8, label="prediction", zorder=3)
        if trials:
            ax.plot([r.delta for r in trials], [getattr(r, field_name) for r in trials],
                    ".", color="0.65", ms=4, label="trials")
        if means:
            errs = [getattr(ses[r.delta], field_name) if r.delta in ses else 0.0 for r in means]
            ax.errorbar([r.delta for r in means], [getattr(r, field_name) for r in means],
                        yerr=errs, fmt="o", color="navy", ms=4, capsize=3, label="trial mean")
        ax.set_xscale("log")
        values = [getattr(r, field_name) for r in theory + trials if getattr(r, field_name)]
        if values and min(values) > 0 and max(values) / min(values) > 30:
            ax.set_yscale("log")
        ax.set_xlabel(r"sampling ratio $\delta$")
        ax.set_ylabel(label)
        ax.legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _ge_figure(rows, path):
    means_k = _collect(rows, "mean")
    ses_k = {r.delta: r for r in _collect(rows, "se")}
    means_g = _collect(rows, "ge-mean")
    ses_g = {r.delta: r for r in _collect(rows, "ge-se")}

    fig, ax = plt.subplots(figsize=(5.5, 4))
    for means, ses, color, label in ((means_k, ses_k, "navy", "kernel simulation"),
                                     (means_g, ses_g, "darkorange", "gaussian surrogate")):
        if means:
            errs = [ses[r.delta].e_test if r.delta in ses else 0.0 for r in means]
            ax.errorbar([r.delta for r in means], [r.e_test for r in means], yerr=errs,
                        fmt="o-", color=color, ms=4, capsize=3, label=label)
    theory = _collect(rows, "theory")
    if theory:
        ax.plot([r.delta for r in theory], [r.e_test for r in theory],
                "--", color="crimson", lw=1.5, label="prediction")
    ax.set_xscale("log")
    ax.set_xlabel(r"sampling ratio $\delta$")
    ax.set_ylabel("test error")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _mp_figure(rows, path):
    theory = _collect(rows, "mp-theory")
    means = _collect(rows, "mp-mean")
    ses = {r.delta: r for r in _collect(rows, "mp-se")}

    fig, ax = plt.subplots(figsize=(5.5, 4))
    if theory:
        ax.plot([r.delta for r in theory], [r.r_star for r in theory],
                "-", color="crimson", lw=1.8, label="fixed point")
    if means:
        errs = [ses[r.delta].r_star if r.delta in ses else 0.0 for r in means]
        ax.errorbar([r.delta for r in means], [r.r_star for r in means], yerr=errs,
                    fmt="o", color="navy", ms=4, capsize=3, label="Wishart Monte Carlo")
    ax.set_xscale("log")
    ax.set_xlabel(r"sampling ratio $\delta$")
    ax.set_ylabel(r"resolvent trace $R$")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_report_figures(rows, out_path: str, title: str = "") -> list[str]:
    """Write figures for whichever row families are present; returns the paths."""
    base = Path(out_path)
    stem = base.with_suffix("")
    written = []
    kinds = {r.kind for r in rows}
    if kinds & {"theory", "trial", "mean"}:
        written.append(str(_sweep_figure(rows, title, f"{stem}.png")))
    if kinds & {"ge-mean", "ge-trial"}:
        written.append(str(_ge_figure(rows, f"{stem}_ge.png")))
    if kinds & {"mp-theory", "mp-mc"}:
        written.append(str(_mp_figure(rows, f"{stem}_mp.png")))
    return written
