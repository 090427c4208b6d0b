"""Derived quantities: gap logarithms, frame-comparison ratios, spinor
reconstruction, angular sector classification and the WKB action.

Everything here post-processes converged solver output; the only solver
driving is the saturation-curve helper, which re-solves a level at a list
of recurrence depths to expose the stabilization of the gap
-ln(E_t0 - Re E_d0) against the resonance width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

from ._linalg import banded_lu_solve
from .hermite import BasisSpec, apply_derivative, apply_position_power
from .levels import LevelConfig, LevelResult, solve_level, solve_resonance
from .operators import (DIRAC, BlockTridiagonal, ModelParams,
                        build_frame_operator, assemble_blocks)
from .scalars import PrecisionContext


class NonpositiveGapError(ArithmeticError):
    """E_t0 - Re(E_d0) was not positive at working precision; more digits
    are needed before the gap logarithm is meaningful."""


class MissingLevelError(LookupError):
    pass


class NonConvergedVectorError(ArithmeticError):
    """The supplied coefficient vector is not an eigenvector of the stated
    operator to working tolerance."""


class GapResult(NamedTuple):
    value: object          # -ln(E_t0 - Re E_d0)
    im_reference: object   # -2 ln(Im E_d0), None when Im <= 0


def lambda_gap(e_t0, e_d0, ctx: PrecisionContext) -> GapResult:
    """Gap logarithm -ln(E_t0 - Re E_d0) plus its width reference.

    The reference -2 ln Im(E_d0) is the saturation value the gap approaches
    once the basis resolves it (the translated level differs from the
    resonance position at second order in the width).
    """
    m = ctx.mp
    gap = m.mpf(e_t0) - m.re(m.mpmathify(e_d0))
    if gap <= 0:
        raise NonpositiveGapError(
            f"E_t0 - Re(E_d0) = {m.nstr(gap, 5)} <= 0; increase digits "
            f"or basis size")
    im = m.im(m.mpmathify(e_d0))
    ref = -2 * m.log(im) if im > 0 else None
    return GapResult(-m.log(gap), ref)


def _pick_level(results, n: int):
    for r in results:
        if r.n == n:
            return r
    raise MissingLevelError(f"level n = {n} missing from results")


def kappa_delta(levels_t, levels_r, omega_rel, ctx: PrecisionContext):
    """Frame-comparison ratios from matching translated and real solves.

    kappa = (E_t0 - E_r0) / Omega measures the shift induced by the
    imaginary linear term; delta = [(E_t1 - E_t0) - (E_r1 - E_r0)] / Omega
    its effect on the first spacing.
    """
    omega = ctx.mpf(omega_rel)
    t0 = _pick_level(levels_t, 0).energy
    t1 = _pick_level(levels_t, 1).energy
    r0 = _pick_level(levels_r, 0).energy
    r1 = _pick_level(levels_r, 1).energy
    kappa = (t0 - r0) / omega
    delta = ((t1 - t0) - (r1 - r0)) / omega
    return kappa, delta


def fit_line(xs, ys, ctx: PrecisionContext):
    """Unweighted least-squares line; returns (intercept, slope)."""
    m = ctx.mp
    n = len(xs)
    if n < 2 or n != len(ys):
        raise ValueError("need at least two matched points")
    xs = [m.mpf(x) for x in xs]
    ys = [m.mpmathify(y) for y in ys]
    sx = m.mpf(0)
    sy = m.mpf(0)
    sxx = m.mpf(0)
    sxy = m.mpf(0)
    for x, y in zip(xs, ys):
        sx += x
        sy += y
        sxx += x * x
        sxy += x * y
    denom = n * sxx - sx * sx
    slope = (n * sxy - sx * sy) / denom
    intercept = (sy - slope * sx) / n
    return intercept, slope


def lagrange_extrapolate(xs, ys, x0, ctx: PrecisionContext):
    """Value at x0 of the Lagrange polynomial through (xs, ys).

    With five points this is the quartic interpolation used to read the
    Omega -> 0 limit of the gap-to-width ratio.
    """
    m = ctx.mp
    if len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("need matched interpolation points")
    xs = [m.mpf(x) for x in xs]
    ys = [m.mpmathify(y) for y in ys]
    x0 = m.mpf(x0)
    total = m.mpf(0)
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        w = m.mpf(1)
        for j, xj in enumerate(xs):
            if j != i:
                w *= (x0 - xj) / (xi - xj)
        total += yi * w
    return total


@dataclass
class SpinorReconstruction:
    """Metastable spinor pieces recovered from a separated eigenvector.

    psi_plus is normalized; psi_minus follows from the first-order system;
    X1/X2 are the original spinor combinations.  pt_pair_residual is
    || psi_plus - i conj(psi_minus) || after phase alignment, tiny exactly
    for the metastable pair at the self-consistent energy.
    """

    psi_plus: list
    psi_minus: list
    X1_norm: object
    X2_norm: object
    pt_pair_residual: object


def _norm(vec, m):
    s = m.mpf(0)
    for v in vec:
        s += v.real * v.real + v.imag * v.imag
    return m.sqrt(s)


def _band_from_blocks(blocks: BlockTridiagonal, n: int) -> dict:
    band = {}
    for bn in range(n):
        for i in range(4):
            for k in range(4):
                v = blocks.blocks_A[bn][4 * i + k]
                if v != 0:
                    band[(4 * bn + i, 4 * bn + k)] = v
    for bn in range(n - 1):
        for i in range(4):
            for k in range(4):
                v = blocks.blocks_B[bn][4 * i + k]
                if v != 0:
                    band[(4 * bn + i, 4 * (bn + 1) + k)] = v
                v = blocks.blocks_C[bn][4 * i + k]
                if v != 0:
                    band[(4 * (bn + 1) + i, 4 * bn + k)] = v
    return band


def extract_eigenvector(params: ModelParams, lam, n_blocks: int,
                        basis: BasisSpec, ctx: PrecisionContext,
                        seed_index: int = 0):
    """Eigenvector of the truncated operator at a converged eigenvalue.

    One inverse-iteration step at full precision, seeded from the basis
    vector with the largest expected overlap (pass the level index: the
    parity mismatch of a wrong seed would null the target component).  The
    result is normalized with its largest component rotated to the
    positive real axis, a deterministic phase convention.
    """
    m = ctx.mp
    op = build_frame_operator(params, ctx)
    blocks = assemble_blocks(op, basis, n_blocks, ctx)
    band = _band_from_blocks(blocks, n_blocks)
    size = 4 * n_blocks
    lam = m.mpc(lam)
    shifted = dict(band)
    for i in range(size):
        shifted[(i, i)] = shifted.get((i, i), m.mpc(0)) - lam
    seed = [m.mpc(0)] * size
    seed[seed_index] = m.mpc(1)
    vec = banded_lu_solve(size, shifted, seed, ctx)
    nrm = _norm(vec, m)
    vec = [v / nrm for v in vec]
    peak = max(range(size), key=lambda i: abs(vec[i]))
    phase = m.conj(vec[peak]) / abs(vec[peak])
    return [v * phase for v in vec]


def reconstruct_spinor(psi_plus_coeffs, params: ModelParams,
                       basis: BasisSpec, ctx: PrecisionContext
                       ) -> SpinorReconstruction:
    """Recover psi_minus and the spinor components X1, X2 from psi_plus.

    psi_minus = -2 sqrt(Omega) psi_plus' + i (2 Omega (E - x^2) + 1)
    psi_plus, applied in coefficient space; then X1 = (psi_plus +
    i psi_minus)/sqrt(2) and X2 = (psi_plus - i psi_minus)/(i sqrt(2)).
    The input must be a converged eigenvector of the stated operator; the
    PT-pair residual is computed against i conj(psi_minus) with the global
    phase aligned (the pairing fixes phase only at the self-consistent E).
    """
    m = ctx.mp
    u = [m.mpc(v) for v in psi_plus_coeffs]
    nrm = _norm(u, m)
    if nrm == 0:
        raise ValueError("zero input vector")
    u = [v / nrm for v in u]
    # residual check against the truncation the vector came from
    op = build_frame_operator(params, ctx)
    n_blocks = max(2, (len(u) + 3) // 4)
    work_basis = BasisSpec(basis.sigma, 4 * n_blocks)
    blocks = assemble_blocks(op, work_basis, n_blocks, ctx)
    band = _band_from_blocks(blocks, n_blocks)
    size = 4 * n_blocks
    uu = u + [m.mpc(0)] * (size - len(u))
    mu = [m.mpc(0)] * size
    for (i, k), v in band.items():
        if uu[k] != 0:
            mu[i] += v * uu[k]
    ray = sum(m.conj(a) * b for a, b in zip(uu, mu))
    resid = _norm([a - ray * b for a, b in zip(mu, uu)], m)
    tol = m.mpf(10) ** (-(ctx.digits - 15))
    if resid > tol * (1 + abs(ray)):
        raise NonConvergedVectorError(
            f"operator residual {m.nstr(resid, 5)} exceeds {m.nstr(tol, 5)}")
    omega = ctx.mpf(params.omega_rel)
    energy = ctx.mpc(params.energy)
    sq_om = m.sqrt(omega)
    du = apply_derivative(uu, work_basis, ctx)
    x2u = apply_position_power(uu, 2, work_basis, ctx)
    ln = max(len(du), len(x2u))
    du += [m.mpc(0)] * (ln - len(du))
    x2u += [m.mpc(0)] * (ln - len(x2u))
    ue = uu + [m.mpc(0)] * (ln - len(uu))
    i1 = m.mpc(0, 1)
    psi_minus = [-2 * sq_om * du[j]
                 + i1 * (2 * omega * (energy * ue[j] - x2u[j]) + ue[j])
                 for j in range(ln)]
    inv_sqrt2 = 1 / m.sqrt(2)
    x1 = [(ue[j] + i1 * psi_minus[j]) * inv_sqrt2 for j in range(ln)]
    x2 = [-i1 * (ue[j] - i1 * psi_minus[j]) * inv_sqrt2 for j in range(ln)]
    pair = [i1 * m.conj(v) for v in psi_minus]
    beta = sum(m.conj(w) * a for w, a in zip(pair, ue))
    if beta != 0:
        phase = beta / abs(beta)
        aligned = [phase * w for w in pair]
    else:
        aligned = pair
    pt_resid = _norm([a - w for a, w in zip(ue, aligned)], m)
    return SpinorReconstruction(
        psi_plus=ue, psi_minus=psi_minus,
        X1_norm=_norm(x1, m), X2_norm=_norm(x2, m),
        pt_pair_residual=pt_resid)


def spinor_from_level(level: LevelResult, ctx: PrecisionContext,
                      variant: str = DIRAC) -> SpinorReconstruction:
    """Extract the eigenvector behind a converged real-frame level and run
    the spinor reconstruction at its self-consistent energy."""
    if level.frame.kind != "real":
        raise ValueError("spinor reconstruction expects a real-frame level")
    params = ModelParams(omega_rel=level.omega_rel, energy=level.energy,
                         variant=variant, frame=level.frame)
    basis = BasisSpec(level.sigma, 4 * level.basis_blocks)
    vec = extract_eigenvector(params, level.lam, level.basis_blocks, basis,
                              ctx, seed_index=level.n)
    return reconstruct_spinor(vec, params, basis, ctx)


BOUNDARY = None  # sentinel returned by sector_of on Stokes lines


def sector_of(phi: float) -> Optional[int]:
    """Angular sector index j in [-2, 3] with  -pi/6 < phi - j pi/3 < pi/6.

    phi is the argument of ix, normalized here into (-5 pi/6, 7 pi/6];
    returns None on a sector boundary (a Stokes line) within 1e-12.
    """
    phi = float(phi)
    two_pi = 2 * math.pi
    while phi > 7 * math.pi / 6:
        phi -= two_pi
    while phi <= -5 * math.pi / 6:
        phi += two_pi
    j = math.floor(phi / (math.pi / 3) + 0.5)
    j = max(-2, min(3, j))
    dist = abs(phi - j * math.pi / 3)
    if abs(dist - math.pi / 6) < 1e-12:
        return BOUNDARY
    return j


class InsideWellError(ValueError):
    """The requested point lies inside the classically allowed region."""


class ActionResult(NamedTuple):
    integral: object
    asymptotic: object


def action_S(x, omega_rel, energy, ctx: PrecisionContext) -> ActionResult:
    """WKB action from the turning point out to x, with its cubic-plus-
    linear asymptotic form sqrt(Omega) x^3/3 - (1 + 2 E Omega) x /
    (2 sqrt(Omega)).

    Defined for |x| beyond the turning point sqrt((1 + 2 E Omega)/Omega);
    odd in x.  The integral is evaluated by adaptive quadrature (the
    integrand has an integrable square-root vanishing at the turning
    point).
    """
    m = ctx.mp
    omega = ctx.mpf(omega_rel)
    if omega <= 0:
        raise ValueError("omega_rel must be positive")
    e = ctx.mpf(energy)
    a = 1 + 2 * e * omega
    x = ctx.mpf(x)
    xt = m.sqrt(a / omega)
    ax = abs(x)
    if ax <= xt:
        raise InsideWellError(
            f"|x| = {m.nstr(ax, 8)} is inside the turning point "
            f"{m.nstr(xt, 8)}")
    integral = m.quad(lambda y: m.sqrt(omega * y ** 4 - a * y * y), [xt, ax])
    asym = m.sqrt(omega) * ax ** 3 / 3 - a * ax / (2 * m.sqrt(omega))
    if x < 0:
        integral = -integral
        asym = -asym
    return ActionResult(integral, asym)


def real_frame_scan_sizes(omega: float, sigma: float):
    """Basis sizes for the real-frame stabilization scan, capped below the
    point where the truncated basis starts resolving the outer quartic
    region (x-span sqrt(2 M / sigma) against the barrier exit at
    1/sqrt(Omega))."""
    cap = max(14, int(0.8 * sigma / (8 * omega)))
    blocks = sorted({max(10, cap - 18), max(12, cap - 12),
                     max(13, cap - 6), cap})
    return [4 * b for b in blocks]


@dataclass
class SaturationPoint:
    depth: int
    e_t0: object
    e_d0: object
    gap_log: object  # None until the gap is resolved positive


@dataclass
class SaturationCurve:
    """Gap stabilization trace: gap_log(depth) with its width reference."""

    omega_rel: object
    points: list
    im_reference: object  # -2 ln Im(E_d0) at the deepest solve, or None

    @property
    def saturated(self):
        vals = [p.gap_log for p in self.points if p.gap_log is not None]
        return vals[-1] if vals else None


def saturation_curve(omega_rel, depths, ctx: PrecisionContext,
                     cfg: LevelConfig, variant: str = DIRAC
                     ) -> SaturationCurve:
    """Solve the ground level in the translated and dilated frames at each
    recurrence depth and log the gap; warm-started continuation makes the
    repeated solves cheap."""
    m = ctx.mp
    depths = sorted(set(int(d) for d in depths))
    points = []
    seed_t = None
    seed_d = None
    e_d = None
    for depth in depths:
        cfg_n = replace(cfg, blocks=depth, theta_plateau_check=False)
        r_t = solve_level(omega_rel, 0, "translated", ctx, cfg_n,
                          variant=variant, e_seed=seed_t)
        r_d = solve_resonance(omega_rel, 0, cfg_n.theta, ctx, cfg_n,
                              variant=variant, e_seed=seed_d)
        seed_t = r_t.energy
        seed_d = r_d.energy
        e_d = r_d.energy
        gap = r_t.energy - m.re(r_d.energy)
        glog = -m.log(gap) if gap > 0 else None
        points.append(SaturationPoint(depth, r_t.energy, r_d.energy, glog))
    im = m.im(e_d) if e_d is not None else None
    ref = -2 * m.log(im) if im is not None and im > 0 else None
    return SaturationCurve(omega_rel=ctx.mpf(omega_rel), points=points,
                           im_reference=ref)
