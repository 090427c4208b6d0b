"""Figure rendering for the report path (headless, files only).

Figures accompany the delimited output of the CLI: the level chart
(energies against Omega, one marker family per level), the gap-saturation
chart (gap logarithm against recurrence depth with the width reference as
a dashed horizontal), and the shift-ratio fit.  All values are downcast to
float for plotting; the delimited files remain the precise record.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_LEVEL_MARKERS = ["o", "v", "s", "^", "D", "P", "X", "*"]


def plot_levels(rows, path):
    """Energy levels against Omega; one marker family per level index.

    rows: ResultRow iterables with numeric E strings (error rows skipped).
    """
    by_level = {}
    for row in rows:
        if row.error or not row.E:
            continue
        by_level.setdefault(row.n, []).append((float(row.omega),
                                               float(row.E)))
    fig, ax = plt.subplots(figsize=(7.0, 4.8))
    for idx, n in enumerate(sorted(by_level)):
        pts = sorted(by_level[n])
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                _LEVEL_MARKERS[idx % len(_LEVEL_MARKERS)] + "-",
                ms=5, lw=0.8, label=f"n = {n}")
    ax.set_xlabel(r"$\Omega$")
    ax.set_ylabel(r"$E_n(\Omega)$")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_saturation(curves, path):
    """Gap logarithm against recurrence depth, one trace per Omega, with
    the -2 ln Im reference as a dashed horizontal of matching color.

    curves: iterable of diagnostics.SaturationCurve.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.8))
    for curve in curves:
        xs = [p.depth for p in curve.points if p.gap_log is not None]
        ys = [float(p.gap_log) for p in curve.points if p.gap_log is not None]
        if not xs:
            continue
        label = rf"$\Omega$ = {float(curve.omega_rel):g}"
        line, = ax.plot(xs, ys, "o-", ms=4, lw=0.9, label=label)
        if curve.im_reference is not None:
            ax.axhline(float(curve.im_reference), color=line.get_color(),
                       ls="--", lw=0.8, alpha=0.7)
    ax.set_xlabel("recurrence depth n")
    ax.set_ylabel(r"$-\ln(E_{t0} - \mathrm{Re}\,E_{d0})$")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_shift_ratio(omegas, kappas, fit, path):
    """Level-shift ratio against Omega with its least-squares line."""
    fig, ax = plt.subplots(figsize=(7.0, 4.8))
    xs = [float(o) for o in omegas]
    ax.plot(xs, [float(k) for k in kappas], "o", ms=5, label="measured")
    if fit is not None:
        intercept, slope = (float(fit[0]), float(fit[1]))
        xr = [min(xs), max(xs)]
        ax.plot(xr, [intercept + slope * x for x in xr], "-", lw=1.0,
                label=f"fit: {intercept:.7f} + {slope:.5f} $\\Omega$")
    ax.set_xlabel(r"$\Omega$")
    ax.set_ylabel(r"$(E_{t0} - E_{r0}) / \Omega$")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
