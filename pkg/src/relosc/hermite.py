"""Matrix elements of x powers, d/dx and the kinetic operator in the
orthonormal eigenbasis of the reference oscillator p^2 + sigma^2 x^2.

The x^p actions are generated by iterating the single ladder step
x psi_k = (sqrt(k) psi_{k-1} + sqrt(k+1) psi_{k+1}) / sqrt(2 sigma),
never by transcribed closed-form tables: iteration is unambiguous and the
printed higher-power recurrences for the raw Hermite family are checked
against it in the tests instead (one of them circulates with a typo in the
h_{k-2} coefficient).  A Gauss-Hermite quadrature oracle provides an
independent integration route for verification.

Sign convention, fixed once: (d/dx) psi_k = sqrt(sigma/2) *
(sqrt(k) psi_{k-1} - sqrt(k+1) psi_{k+1}).  Only relative signs are
observable in reconstruction tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .scalars import PrecisionContext


@dataclass(frozen=True)
class BasisSpec:
    """Scaled oscillator basis: frequency sigma and truncation size.

    sigma may be a float or a decimal string; strings parse exactly at
    context precision.  size must be a positive multiple of 4, at least 8.
    """

    sigma: float | str
    size: int

    def __post_init__(self):
        if float(self.sigma) <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.size < 8 or self.size % 4 != 0:
            raise ValueError(
                f"size must be a multiple of 4 and >= 8, got {self.size}")


def sigma_value(basis: BasisSpec, ctx: PrecisionContext):
    return ctx.mpf(basis.sigma)


def _check_index(k: int, basis: BasisSpec):
    if not 0 <= k < basis.size:
        raise IndexError(f"basis index {k} out of range [0, {basis.size})")


def _apply_x(col: dict, inv_s2s, sq):
    """One ladder application of x on a coefficient column."""
    out = {}
    for i, v in col.items():
        if i > 0:
            out[i - 1] = out.get(i - 1, 0) + v * sq[i] * inv_s2s
        out[i + 1] = out.get(i + 1, 0) + v * sq[i + 1] * inv_s2s
    return out


def position_power_column(k: int, p: int, basis: BasisSpec,
                          ctx: PrecisionContext) -> dict:
    """Expansion coefficients of x^p psi_k over psi_{k-p} .. psi_{k+p}.

    Returns a map from row index to real coefficient; indices below zero
    are absent.  p must lie in 1..4.
    """
    if p not in (1, 2, 3, 4):
        raise ValueError(f"power must be in 1..4, got {p}")
    _check_index(k, basis)
    m = ctx.mp
    sig = sigma_value(basis, ctx)
    inv_s2s = 1 / m.sqrt(2 * sig)
    sq = [m.sqrt(j) for j in range(k + p + 1)]
    col = {k: m.mpf(1)}
    for _ in range(p):
        col = _apply_x(col, inv_s2s, sq)
    return col


def kinetic_matrix_element(i: int, k: int, basis: BasisSpec,
                           ctx: PrecisionContext):
    """<psi_i| -d^2/dx^2 |psi_k>: sigma(k + 1/2) on the diagonal,
    -(sigma/2) sqrt((m+1)(m+2)) at |i - k| = 2 with m = min(i, k)."""
    _check_index(i, basis)
    _check_index(k, basis)
    m = ctx.mp
    sig = sigma_value(basis, ctx)
    if i == k:
        return sig * (k + m.mpf(1) / 2)
    if abs(i - k) == 2:
        lo = min(i, k)
        return -(sig / 2) * m.sqrt((lo + 1) * (lo + 2))
    return m.mpf(0)


def derivative_column(k: int, basis: BasisSpec, ctx: PrecisionContext) -> dict:
    """Coefficients of (d/dx) psi_k over psi_{k+-1} (real antisymmetric)."""
    _check_index(k, basis)
    m = ctx.mp
    s_half = m.sqrt(sigma_value(basis, ctx) / 2)
    col = {k + 1: -s_half * m.sqrt(k + 1)}
    if k > 0:
        col[k - 1] = s_half * m.sqrt(k)
    return col


def apply_position_power(vec, p: int, basis: BasisSpec, ctx: PrecisionContext):
    """Apply the x^p operator to a coefficient vector, extending it by p."""
    m = ctx.mp
    inv_s2s = 1 / m.sqrt(2 * sigma_value(basis, ctx))
    sq = [m.sqrt(j) for j in range(len(vec) + p + 1)]
    out = list(vec)
    for _ in range(p):
        nxt = [m.mpc(0)] * (len(out) + 1)
        for i, v in enumerate(out):
            if v == 0:
                continue
            if i > 0:
                nxt[i - 1] += v * sq[i] * inv_s2s
            nxt[i + 1] += v * sq[i + 1] * inv_s2s
        out = nxt
    return out


def apply_derivative(vec, basis: BasisSpec, ctx: PrecisionContext):
    """Apply d/dx to a coefficient vector, extending it by one."""
    m = ctx.mp
    s_half = m.sqrt(sigma_value(basis, ctx) / 2)
    sq = [m.sqrt(j) for j in range(len(vec) + 2)]
    out = [m.mpc(0)] * (len(vec) + 1)
    for i, v in enumerate(vec):
        if v == 0:
            continue
        if i > 0:
            out[i - 1] += v * s_half * sq[i]
        out[i + 1] -= v * s_half * sq[i + 1]
    return out


def raw_position_power_column(k: int, p: int) -> dict:
    """Exact x^p action on the raw (physicists') Hermite family h_k, from
    iterating x h_k = (1/2) h_{k+1} + k h_{k-1}.  Fraction-valued; used to
    audit transcribed closed-form tables."""
    col = {k: Fraction(1)}
    for _ in range(p):
        out = {}
        for i, v in col.items():
            out[i + 1] = out.get(i + 1, Fraction(0)) + v / 2
            if i > 0:
                out[i - 1] = out.get(i - 1, Fraction(0)) + v * i
        col = out
    return col


class OscillatorTables:
    """Precomputed kinetic and x^p columns for fast repeated assembly.

    Columns are built once for indices 0..max_index and reused by
    assemble_blocks while an outer iteration re-weights them with operator
    coefficients.  Pure data; safe to share.
    """

    def __init__(self, basis: BasisSpec, max_index: int, ctx: PrecisionContext):
        if max_index < 0:
            raise ValueError("max_index must be non-negative")
        self.basis = basis
        self.max_index = max_index
        self.dps = ctx.mp.dps
        m = ctx.mp
        sig = sigma_value(basis, ctx)
        inv_s2s = 1 / m.sqrt(2 * sig)
        sq = [m.sqrt(j) for j in range(max_index + 6)]
        self.power_cols = [[], [], [], [], []]
        self.kin_cols = []
        half = m.mpf(1) / 2
        for k in range(max_index + 1):
            col = {k: m.mpf(1)}
            self.power_cols[0].append(col)
            for p in range(1, 5):
                col = _apply_x(col, inv_s2s, sq)
                self.power_cols[p].append(col)
            kin = {k: sig * (k + half)}
            kin[k + 2] = -(sig / 2) * sq[k + 1] * sq[k + 2]
            if k >= 2:
                kin[k - 2] = -(sig / 2) * sq[k - 1] * sq[k]
            self.kin_cols.append(kin)


_GH_CACHE: dict = {}


def gauss_hermite_rule(order: int, ctx: PrecisionContext):
    """Gauss-Hermite nodes and weights (weight e^{-u^2}) at context precision.

    Float nodes from numpy seed a Newton polish on the recurrence-evaluated
    Hermite polynomial; weights are 2^{n-1} n! sqrt(pi) / (n H_{n-1}(x))^2.
    Cached per (order, dps).
    """
    if order < 1:
        raise ValueError("order must be positive")
    key = (order, ctx.mp.dps)
    cached = _GH_CACHE.get(key)
    if cached is not None:
        return cached
    m = ctx.mp
    seeds, _ = np.polynomial.hermite.hermgauss(order)
    eps = m.mpf(10) ** (-(m.dps - 2))

    def herm_pair(x):
        # returns (H_order(x), H_{order-1}(x))
        hm1 = m.mpf(1)
        h = 2 * x
        if order == 1:
            return h, hm1
        for j in range(1, order):
            h, hm1 = 2 * x * h - 2 * j * hm1, h
        return h, hm1

    nodes = []
    weights = []
    wpref = (m.mpf(2) ** (order - 1)) * m.factorial(order) * m.sqrt(m.pi) \
        / order ** 2
    for s in seeds:
        x = m.mpf(float(s))
        for _ in range(14):
            h, hm1 = herm_pair(x)
            dx = h / (2 * order * hm1)
            x -= dx
            if abs(dx) <= eps * (1 + abs(x)):
                break
        _, hm1 = herm_pair(x)
        nodes.append(x)
        weights.append(wpref / (hm1 * hm1))
    result = (nodes, weights)
    _GH_CACHE[key] = result
    return result


class QuadratureOrderError(ArithmeticError):
    """Doubling the quadrature order changed the result beyond tolerance."""


def _norm_constants(max_k, sig, m):
    pref = (sig / m.pi) ** (m.mpf(1) / 4)
    out = [pref]
    for k in range(1, max_k + 1):
        out.append(out[-1] / m.sqrt(2 * k))
    return out


def _overlap_value(i, k, op, basis, ctx, order):
    m = ctx.mp
    sig = sigma_value(basis, ctx)
    nodes, weights = gauss_hermite_rule(order, ctx)
    sqrt_sig = m.sqrt(sig)
    nmax = max(i, k)
    norms = _norm_constants(nmax, sig, m)
    coeffs = list(op.c)
    kin = m.mpc(op.kinetic)
    total = m.mpc(0)
    for u, w in zip(nodes, weights):
        # H_0..H_nmax at the node
        H = [m.mpf(1)]
        if nmax >= 1:
            H.append(2 * u)
        for j in range(1, nmax):
            H.append(2 * u * H[-1] - 2 * j * H[-2])
        hi = H[i]
        hk = H[k]
        x = u / sqrt_sig
        val = m.mpc(0)
        xp = m.mpf(1)
        for p in range(5):
            if coeffs[p] != 0:
                val += coeffs[p] * (xp * hk)
            xp *= x
        if kin != 0:
            hkp = 2 * k * H[k - 1] if k >= 1 else m.mpf(0)
            hkpp = 4 * k * (k - 1) * H[k - 2] if k >= 2 else m.mpf(0)
            d2 = sig * (hkpp - 2 * u * hkp + (u * u - 1) * hk)
            val += kin * (-d2)
        total += w * (hi * val)
    return norms[i] * norms[k] * total / sqrt_sig


def quadrature_overlap_oracle(i: int, k: int, op, basis: BasisSpec,
                              ctx: PrecisionContext, order: int | None = None):
    """<psi_i| op |psi_k> by Gauss-Hermite integration; test oracle only.

    op is any object with .kinetic and .c (length-5 coefficient sequence).
    The rule order defaults to 4 (max(i, k) + 5); the result is recomputed
    at twice the order and a mismatch raises QuadratureOrderError.
    """
    _check_index(i, basis)
    _check_index(k, basis)
    if order is None:
        order = 4 * (max(i, k) + 5)
    v1 = _overlap_value(i, k, op, basis, ctx, order)
    v2 = _overlap_value(i, k, op, basis, ctx, 2 * order)
    m = ctx.mp
    tol = m.mpf(10) ** (-(ctx.digits - 5))
    scale = 1 + max(abs(v1), abs(v2))
    if abs(v1 - v2) > tol * scale:
        raise QuadratureOrderError(
            f"order {order} insufficient for (i={i}, k={k}): "
            f"doubling moved the value by {m.nstr(abs(v1 - v2), 3)}")
    return v2
