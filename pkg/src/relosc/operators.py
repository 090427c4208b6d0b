"""Frame-resolved quartic operators and their block-tridiagonal compression.

An operator here is -kinetic * d^2/dx^2 + sum_j c_j x^j with degree <= 4,
covering the separated second-order problem of the 1D Dirac oscillator
(with its purely imaginary linear term), the Klein-Gordon variant (linear
term removed), and their complex-translated and complex-dilated frames.
The spectral parameter lambda = E + Omega E^2 is kept outside the
coefficients; the moment solver searches det P_n(lambda) with E fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi
from typing import Optional

from . import hermite
from ._linalg import SingularMatrixError  # noqa: F401  (re-exported for callers)
from .scalars import PrecisionContext

DIRAC = "dirac_titchmarsh"
KLEIN_GORDON = "klein_gordon"

_VARIANTS = (DIRAC, KLEIN_GORDON)
_BRANCHES = ("plus", "minus")


@dataclass(frozen=True)
class Frame:
    """Coordinate frame tag: real line, x -> x + iy, or x -> x e^{i theta}.

    y == 0 is tolerated as a degenerate identity translation so that limits
    can be exercised in tests; dilations require 0 < |theta| < pi/6 (the
    sector opening).
    """

    kind: str
    value: float | str = 0.0

    @staticmethod
    def real() -> "Frame":
        return Frame("real", 0.0)

    @staticmethod
    def translated(y) -> "Frame":
        return Frame("translated", y)

    @staticmethod
    def dilated(theta) -> "Frame":
        return Frame("dilated", theta)

    def __post_init__(self):
        if self.kind not in ("real", "translated", "dilated"):
            raise ValueError(f"unknown frame kind {self.kind!r}")
        v = float(self.value)
        if self.kind == "translated" and v < 0:
            raise ValueError(f"translation y must be >= 0, got {v}")
        if self.kind == "dilated" and not 0 < abs(v) < pi / 6:
            raise ValueError(
                f"dilation angle must satisfy 0 < |theta| < pi/6, got {v}")


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless model parameters.

    omega_rel is Omega = hbar*omega / (4 m c^2) > 0 (Omega == 0 is accepted
    only for the exact harmonic path, never for the moment solver); energy
    is the dimensionless E, real except in the dilated-frame self-consistent
    search.  branch "minus" labels the adjoint partner operator.
    """

    omega_rel: float | str
    energy: object = 0.0
    variant: str = DIRAC
    branch: str = "plus"
    frame: Frame = field(default_factory=Frame.real)

    def __post_init__(self):
        if float(self.omega_rel) < 0:
            raise ValueError(f"omega_rel must be >= 0, got {self.omega_rel}")
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.branch not in _BRANCHES:
            raise ValueError(f"unknown branch {self.branch!r}")


@dataclass(frozen=True)
class QuarticOperator:
    """kinetic * (-d^2/dx^2) + sum_{j<=4} c[j] x^j at context precision."""

    kinetic: object
    c: tuple
    params: Optional[ModelParams] = None

    def is_pt_symmetric(self, tol=0) -> bool:
        """Real-frame PT check: c_j real for even j, imaginary for odd j."""
        ok = True
        for j, cj in enumerate(self.c):
            part = abs(cj.imag) if j % 2 == 0 else abs(cj.real)
            ok = ok and part <= tol
        return ok


def from_physical(m_mass, omega, c_light, hbar, w_total, ctx: PrecisionContext):
    """Map (m, omega, c, hbar, W) to the dimensionless (Omega, E).

    Omega = hbar*omega / (4 m c^2) and E = 2 (W - m c^2) / (hbar*omega).
    """
    mm = ctx.mp
    m_mass, omega, c_light, hbar = (ctx.mpf(v) for v in
                                    (m_mass, omega, c_light, hbar))
    w_total = ctx.mpf(w_total)
    for name, v in (("m", m_mass), ("omega", omega), ("c_light", c_light),
                    ("hbar", hbar)):
        if v <= 0:
            raise ValueError(f"{name} must be positive, got {mm.nstr(v, 8)}")
    omega_rel = hbar * omega / (4 * m_mass * c_light ** 2)
    energy = 2 * (w_total - m_mass * c_light ** 2) / (hbar * omega)
    return omega_rel, energy


def build_operator(params: ModelParams, ctx: PrecisionContext) -> QuarticOperator:
    """Real-frame operator for the given parameters.

    Dirac separated form: kinetic 1, c1 = -2i sqrt(Omega),
    c2 = 1 + 2 E Omega, c4 = -Omega; the Klein-Gordon variant drops c1.
    branch "minus" conjugates all coefficients (equivalently x -> -x).
    The target frame recorded in params is applied later by apply_frame.
    """
    m = ctx.mp
    omega = ctx.mpf(params.omega_rel)
    if omega <= 0:
        raise ValueError(f"omega_rel must be positive, got {params.omega_rel}")
    energy = ctx.mpc(params.energy)
    zero = m.mpc(0)
    c1 = zero if params.variant == KLEIN_GORDON \
        else m.mpc(0, -2 * m.sqrt(omega))
    c = [zero, c1, m.mpc(1 + 2 * energy * omega), zero, m.mpc(-omega)]
    if params.branch == "minus":
        c = [m.conj(v) for v in c]
    return QuarticOperator(kinetic=m.mpc(1), c=tuple(c), params=params)


def translate_coefficients(c, shift, ctx: PrecisionContext) -> tuple:
    """Coefficients of sum_j c_j (x + shift)^j expanded in powers of x."""
    m = ctx.mp
    out = [m.mpc(0)] * 5
    binom = [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1], [1, 4, 6, 4, 1]]
    for j in range(5):
        if c[j] == 0:
            continue
        zpow = m.mpc(1)
        for r in range(j + 1):
            # coefficient of x^{j-r}: C(j, r) shift^r c_j
            out[j - r] += c[j] * binom[j][r] * zpow
            zpow *= shift
    return tuple(out)


def apply_frame(op: QuarticOperator, ctx: PrecisionContext) -> QuarticOperator:
    """Transform a real-frame operator into the frame named in its params.

    translated(y): substitute x -> x + iy (kinetic unchanged);
    dilated(theta): kinetic -> e^{-2 i theta} kinetic, c_j -> c_j e^{i j theta}.
    """
    if op.params is None:
        raise ValueError("operator carries no params; cannot resolve frame")
    frame = op.params.frame
    m = ctx.mp
    if frame.kind == "real":
        return op
    if frame.kind == "translated":
        y = ctx.mpf(frame.value)
        if y < 0:
            raise ValueError(f"translation y must be >= 0, got {frame.value}")
        if y == 0:
            return op
        return QuarticOperator(
            kinetic=op.kinetic,
            c=translate_coefficients(op.c, m.mpc(0, y), ctx),
            params=op.params)
    theta = ctx.mpf(frame.value)
    if not 0 < abs(theta) < m.pi / 6:
        raise ValueError(
            f"dilation angle must satisfy 0 < |theta| < pi/6, got {frame.value}")
    phase = m.exp(m.mpc(0, theta))
    c = []
    pj = m.mpc(1)
    for j in range(5):
        c.append(op.c[j] * pj)
        pj *= phase
    return QuarticOperator(
        kinetic=op.kinetic * m.exp(m.mpc(0, -2 * theta)),
        c=tuple(c),
        params=op.params)


def build_frame_operator(params: ModelParams, ctx: PrecisionContext) -> QuarticOperator:
    """Convenience: build_operator followed by apply_frame."""
    return apply_frame(build_operator(params, ctx), ctx)


@dataclass
class BlockTridiagonal:
    """First 4n basis states of an operator packed as 4x4 blocks.

    blocks_A[n][4i + k] = H[4n+i, 4n+k], blocks_B[n] couples block n to
    n+1, blocks_C[n] the reverse; for a (complex-)symmetric H they are
    transposes of each other.  blocks_B/blocks_C include the boundary
    block n_blocks-1, which couples to the first truncated block and is
    needed by the moment recurrence prefactor.
    """

    blocks_A: list
    blocks_B: list
    blocks_C: list
    n_blocks: int

    def dense(self, ctx: PrecisionContext):
        """Unpack to a dense 4n x 4n mpmath matrix (small sizes only)."""
        n = 4 * self.n_blocks
        mat = ctx.mp.matrix(n, n)
        for bn in range(self.n_blocks):
            for i in range(4):
                for k in range(4):
                    mat[4 * bn + i, 4 * bn + k] = self.blocks_A[bn][4 * i + k]
        for bn in range(self.n_blocks - 1):
            for i in range(4):
                for k in range(4):
                    mat[4 * bn + i, 4 * (bn + 1) + k] = \
                        self.blocks_B[bn][4 * i + k]
                    mat[4 * (bn + 1) + i, 4 * bn + k] = \
                        self.blocks_C[bn][4 * i + k]
        return mat


def _band_entry(op, tables, col_coeffs, i, k):
    """H_{ik} from precomputed columns: kinetic + weighted x powers."""
    val = None
    kin = tables.kin_cols[k].get(i)
    if kin is not None and op.kinetic != 0:
        val = op.kinetic * kin
    for p in range(5):
        cp = col_coeffs[p]
        if cp is None:
            continue
        w = tables.power_cols[p][k].get(i)
        if w is not None:
            term = cp * w
            val = term if val is None else val + term
    return val


def assemble_blocks(op: QuarticOperator, basis: BasisSpec, n_blocks: int,
                    ctx: PrecisionContext,
                    tables: hermite.OscillatorTables | None = None
                    ) -> BlockTridiagonal:
    """Compress the operator onto the first 4*n_blocks basis states.

    Requires 4*n_blocks <= basis.size.  The boundary blocks B_{n-1}/C_{n-1}
    reach one 4-block past the truncation; their entries come from the same
    closed-form columns (the operator is banded with bandwidth 4, so no
    further coupling exists).
    """
    if 4 * n_blocks > basis.size:
        raise ValueError(
            f"4*n_blocks = {4 * n_blocks} exceeds basis size {basis.size}")
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    max_index = 4 * n_blocks + 3
    if tables is None:
        tables = hermite.OscillatorTables(basis, max_index, ctx)
    elif tables.max_index < max_index or tables.dps != ctx.mp.dps:
        raise ValueError("tables too small for requested n_blocks, or built "
                         "at a different precision")
    zero = ctx.mp.mpc(0)
    col_coeffs = [None if op.c[p] == 0 else op.c[p] for p in range(5)]

    def block(row0, col0):
        # the assembled operator is complex symmetric; computing each
        # unordered pair once keeps H == H^T exact rather than ulp-close
        out = [zero] * 16
        for i in range(4):
            for k in range(4):
                r, c = row0 + i, col0 + k
                if abs(r - c) <= 4:
                    v = _band_entry(op, tables, col_coeffs, min(r, c), max(r, c))
                    if v is not None:
                        out[4 * i + k] = v
        return out

    blocks_a = [block(4 * n, 4 * n) for n in range(n_blocks)]
    blocks_b = [block(4 * n, 4 * (n + 1)) for n in range(n_blocks)]
    blocks_c = [block(4 * (n + 1), 4 * n) for n in range(n_blocks)]
    return BlockTridiagonal(blocks_a, blocks_b, blocks_c, n_blocks)
