"""Eigenvalues of block-tridiagonal truncations via the matrix-moment
determinant recurrence.

P_0 = I, P_1 = B_0^{-1} (lambda I - A_0),
P_n = B_{n-1}^{-1} ((lambda I - A_{n-1}) P_{n-1} - C_{n-2} P_{n-2});
zeros of det P_n(lambda) are the Rayleigh-Ritz eigenvalues of the 4n x 4n
truncation (upper bounds), found by Newton iteration on the scaled
determinant.  The corrected polynomial
P_n(lambda) - P_n(0) P_{n-1}^{-1}(0) P_{n-1}(lambda) yields lower bounds.
A dense multiprecision eigensolver serves as the independent oracle, and a
stabilization scan gives unbounded-below real-frame operators a
well-defined metastable reading.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ._linalg import (SingularMatrixError, mat_det, mat_identity, mat_inv,
                      mat_max_entry, mat_mul, mat_sub, mat_scale, shifted_neg)
from .operators import BlockTridiagonal, QuarticOperator
from .scalars import PrecisionContext


class MomentSolverError(RuntimeError):
    pass


class SingularBError(MomentSolverError):
    """A B block is singular to working precision: the x^4 coefficient
    vanishes (Omega == 0) or the operator was misassembled."""

    def __init__(self, block_index: int):
        self.block_index = block_index
        super().__init__(f"B block {block_index} is singular to working "
                         f"precision; the moment recurrence requires an "
                         f"invertible quartic coupling")


class NoConvergenceError(MomentSolverError):
    def __init__(self, iterations, lam, last_step):
        self.iterations = iterations
        self.lam = lam
        self.last_step = last_step
        super().__init__(
            f"Newton iteration exhausted {iterations} steps near {lam}")


class BasinEscapeError(MomentSolverError):
    def __init__(self, lam, lambda0, radius):
        self.lam = lam
        super().__init__(f"iterate left the disk of radius {radius} around "
                         f"{lambda0} (reached {lam})")


class SingularPZeroError(MomentSolverError):
    """P_{n-1}(0) is not invertible; the lower-bound correction is
    undefined at this truncation."""


class NoPlateauError(MomentSolverError):
    pass


@dataclass
class MomentPolynomialState:
    """Running pair of moment polynomials with the accumulated rescale log.

    True P_index = p_curr * exp(log_scale) entrywise, so
    log |det P_index| = log |det p_curr| + 4 * log_scale.
    """

    p_prev: list
    p_curr: list
    log_scale: object
    index: int


@dataclass
class EigenvalueEstimate:
    """One zero of det P_n with Newton metadata.

    lam: the converged spectral parameter; residual: |det| of the rescaled
    polynomial at convergence; bound: "upper" for plain Rayleigh-Ritz
    zeros, "lower" for the corrected polynomial, "none" otherwise.
    """

    lam: object
    residual: object
    bound: str
    n_blocks: int
    iterations: int


def _b_inverses(blocks: BlockTridiagonal, upto: int, ctx: PrecisionContext):
    m = ctx.mp
    eps = m.mpf(10) ** (-(m.dps - 4))
    invs = []
    for k in range(upto):
        b = blocks.blocks_B[k]
        scale = mat_max_entry(b)
        det = mat_det(b, ctx)
        if scale == 0 or abs(det) < (eps * (1 + scale)) ** 4:
            raise SingularBError(k)
        try:
            invs.append(mat_inv(b, ctx))
        except SingularMatrixError:
            raise SingularBError(k) from None
    return invs


def _advance(state: MomentPolynomialState, a_block, c_block, b_inv, lam,
             threshold, ctx):
    """One recurrence step followed by the overflow-rescale check."""
    t = mat_mul(shifted_neg(a_block, lam), state.p_curr)
    if c_block is not None:
        t = mat_sub(t, mat_mul(c_block, state.p_prev))
    p_next = mat_mul(b_inv, t)
    state.p_prev = state.p_curr
    state.p_curr = p_next
    state.index += 1
    peak = mat_max_entry(p_next)
    if peak > threshold:
        inv = 1 / peak
        state.p_curr = mat_scale(state.p_curr, inv)
        state.p_prev = mat_scale(state.p_prev, inv)
        state.log_scale += ctx.mp.log(peak)
    return state


def moment_recurrence(blocks: BlockTridiagonal, lam, n: int,
                      ctx: PrecisionContext,
                      b_invs=None) -> MomentPolynomialState:
    """Run the three-term block recurrence up to index n."""
    if not 0 <= n <= blocks.n_blocks:
        raise ValueError(f"recurrence depth {n} outside [0, {blocks.n_blocks}]")
    m = ctx.mp
    lam = m.mpc(lam)
    state = MomentPolynomialState(
        p_prev=mat_identity(m), p_curr=mat_identity(m),
        log_scale=m.mpf(0), index=0)
    if n == 0:
        return state
    if b_invs is None:
        b_invs = _b_inverses(blocks, n, ctx)
    threshold = ctx.det_rescale_threshold
    state.p_curr = mat_mul(b_invs[0], shifted_neg(blocks.blocks_A[0], lam))
    state.index = 1
    for j in range(2, n + 1):
        _advance(state, blocks.blocks_A[j - 1], blocks.blocks_C[j - 2],
                 b_invs[j - 1], lam, threshold, ctx)
    return state


def det_p(blocks: BlockTridiagonal, lam, n: int, ctx: PrecisionContext,
          b_invs=None):
    """Scaled determinant of P_n at lam.

    Returns (det of the rescaled P_n, log_scale); the true log-magnitude is
    log |det| + 4 * log_scale.  Raises SingularBError when a quartic
    coupling block underflows working precision.
    """
    state = moment_recurrence(blocks, lam, n, ctx, b_invs=b_invs)
    return mat_det(state.p_curr, ctx), state.log_scale


def _newton_on_scaled_det(f, lambda0, ctx: PrecisionContext, basin_radius,
                          max_iter):
    """Newton iteration on f(lam) -> (scaled det, log_scale).

    The derivative is a central difference with relative step
    10^(-digits/2); exponent bookkeeping cancels the common rescale.
    Returns (lam, scaled residual at convergence, iterations).  A stalled
    step size above tolerance aborts early: the recurrence has run out of
    working digits at this depth (see estimate_digit_loss).
    """
    m = ctx.mp
    lam = m.mpc(lambda0)
    step_rel = m.mpf(10) ** (-(ctx.digits // 2))
    tol = ctx.newton_tol
    radius = m.mpf(basin_radius)
    best = None
    stalled = 0
    for it in range(1, max_iter + 1):
        d0, log0 = f(lam)
        if d0 == 0:
            return lam, abs(d0), it
        h = step_rel * (1 + abs(lam))
        dp, logp = f(lam + h)
        dm, logm = f(lam - h)
        denom = dp * m.exp(4 * (logp - log0)) - dm * m.exp(4 * (logm - log0))
        if denom == 0:
            raise NoConvergenceError(it, lam, None)
        delta = 2 * h * d0 / denom
        lam = lam - delta
        if abs(lam - lambda0) > radius:
            raise BasinEscapeError(lam, lambda0, basin_radius)
        step = abs(delta)
        if step < tol * (1 + abs(lam)):
            d_final, _ = f(lam)
            return lam, abs(d_final), it
        if best is None or step < best:
            best = step
            stalled = 0
        else:
            stalled += 1
            if stalled >= 8:
                raise NoConvergenceError(
                    it, lam,
                    f"step stalled at {m.nstr(best, 3)} above tolerance "
                    f"{m.nstr(tol, 3)}: working precision is likely "
                    f"insufficient for this recurrence depth")
    raise NoConvergenceError(max_iter, lam, abs(delta))


def estimate_digit_loss(blocks: BlockTridiagonal, lam, n: int,
                        ctx: PrecisionContext, drop: int = 15) -> int:
    """Decimal digits the depth-n determinant loses to roundoff.

    The recurrence funnels root information through the sub-dominant
    growth directions of the block cocycle, so det P_n carries fewer
    correct digits than the working precision (empirically about one digit
    per block in the paper regime).  The loss is precision-independent, so
    it can be read off by re-evaluating the same determinant with `drop`
    fewer digits and comparing.  Callers widen guard digits accordingly.
    """
    m = ctx.mp
    d_hi, log_hi = det_p(blocks, lam, n, ctx)
    with m.workdps(max(15, m.dps - drop)):
        d_lo, log_lo = det_p(blocks, lam, n, ctx)
    if d_hi == 0:
        return m.dps
    rel = abs(d_lo * m.exp(4 * (log_lo - log_hi)) - d_hi) / abs(d_hi)
    if rel == 0:
        return 0
    loss = (m.dps - drop) + float(m.log10(rel))
    return max(0, int(loss) + 1)


def find_eigenvalue(blocks: BlockTridiagonal, lambda0, n: int,
                    ctx: PrecisionContext, *, basin_radius=1.0,
                    max_iter: int = 200) -> EigenvalueEstimate:
    """Newton zero of det P_n seeded at lambda0 (a Rayleigh-Ritz upper bound).

    lambda0 must lie in the basin of the target zero; iterates leaving the
    configured disk raise BasinEscapeError, and the iteration budget is
    max_iter (default 200).
    """
    b_invs = _b_inverses(blocks, n, ctx)

    def f(lam):
        return det_p(blocks, lam, n, ctx, b_invs=b_invs)

    lam, residual, iterations = _newton_on_scaled_det(
        f, lambda0, ctx, basin_radius, max_iter)
    return EigenvalueEstimate(lam=lam, residual=residual, bound="upper",
                              n_blocks=n, iterations=iterations)


def lower_bound_eigenvalue(blocks: BlockTridiagonal, lambda0, n: int,
                           ctx: PrecisionContext, *, basin_radius=1.0,
                           max_iter: int = 200) -> EigenvalueEstimate:
    """Newton zero of det(P_n - P_n(0) P_{n-1}^{-1}(0) P_{n-1}) at lambda0.

    Zeros of the corrected polynomial bound the truncation eigenvalues from
    below on positive instances.  Raises SingularPZeroError when the
    correction is undefined at this truncation.
    """
    if n < 2:
        raise ValueError("lower bound needs recurrence depth n >= 2")
    m = ctx.mp
    b_invs = _b_inverses(blocks, n, ctx)
    at_zero = moment_recurrence(blocks, m.mpc(0), n, ctx, b_invs=b_invs)
    try:
        correction = mat_mul(at_zero.p_curr, mat_inv(at_zero.p_prev, ctx))
    except SingularMatrixError:
        raise SingularPZeroError(
            f"P_{n - 1}(0) is singular; lower-bound correction undefined "
            f"at truncation {n}") from None

    def f(lam):
        state = moment_recurrence(blocks, lam, n, ctx, b_invs=b_invs)
        q = mat_sub(state.p_curr, mat_mul(correction, state.p_prev))
        return mat_det(q, ctx), state.log_scale

    lam, residual, iterations = _newton_on_scaled_det(
        f, lambda0, ctx, basin_radius, max_iter)
    return EigenvalueEstimate(lam=lam, residual=residual, bound="lower",
                              n_blocks=n, iterations=iterations)


def dense_eigensolve_oracle(blocks: BlockTridiagonal, n: int,
                            ctx: PrecisionContext):
    """All eigenvalues of the unpacked 4n x 4n matrix by mpmath's general
    complex QR eigensolver.  Small instances only (4n <= 64); returned
    sorted by (Re, Im), which is the documented deterministic order (no
    spectral symmetry is assumed)."""
    if 4 * n > 64:
        raise ValueError(f"dense oracle capped at 4n <= 64, got 4n = {4 * n}")
    if not 1 <= n <= blocks.n_blocks:
        raise ValueError(f"invalid n = {n}")
    m = ctx.mp
    size = 4 * n
    mat = m.matrix(size, size)
    for bn in range(n):
        for i in range(4):
            for k in range(4):
                mat[4 * bn + i, 4 * bn + k] = blocks.blocks_A[bn][4 * i + k]
    for bn in range(n - 1):
        for i in range(4):
            for k in range(4):
                mat[4 * bn + i, 4 * (bn + 1) + k] = \
                    blocks.blocks_B[bn][4 * i + k]
                mat[4 * (bn + 1) + i, 4 * bn + k] = \
                    blocks.blocks_C[bn][4 * i + k]
    eigs = m.eig(mat, left=False, right=False)
    return sorted(eigs, key=lambda z: (z.real, z.imag))


@dataclass
class StabilizationResult:
    """Plateau reading of a truncation scan.

    value: energy at the flattest basis-size increment; flatness: that
    minimal discrete derivative; at_size: basis size where it was read;
    energies: full (size, energy) trace.
    """

    value: object
    flatness: object
    at_size: int
    energies: list


def stabilization_scan(op: QuarticOperator, basis_sizes, target_index: int,
                       ctx: PrecisionContext, cfg=None,
                       plateau_tol="1e-8") -> StabilizationResult:
    """Metastable level of an unbounded-below real-frame operator.

    Solves the self-consistent level at every basis size in the ascending
    list and returns the value where the discrete derivative
    |E(N_{j+1}) - E(N_j)| is smallest.  Raises NoPlateauError when fewer
    than two sizes are given or the flattest increment still exceeds
    plateau_tol (a sign that Omega is too large for a metastable reading).
    """
    from .levels import LevelConfig, solve_level  # deferred: avoids cycle

    if op.params is None or op.params.frame.kind != "real":
        raise ValueError("stabilization scan expects a real-frame operator")
    sizes = list(basis_sizes)
    if sorted(sizes) != sizes or len(set(sizes)) != len(sizes):
        raise ValueError("basis_sizes must be strictly ascending")
    if len(sizes) < 2:
        raise NoPlateauError("cannot difference a single basis size")
    if cfg is None:
        cfg = LevelConfig()
    m = ctx.mp
    energies = []
    seed = None
    for size in sizes:
        cfg_n = replace(cfg, blocks=size // 4)
        res = solve_level(op.params.omega_rel, target_index, "real", ctx,
                          cfg_n, variant=op.params.variant, e_seed=seed)
        seed = res.energy
        energies.append((size, res.energy))
    tol = m.mpf(plateau_tol)
    best = None
    for j in range(len(sizes) - 1):
        d = abs(energies[j + 1][1] - energies[j][1])
        if best is None or d < best[0]:
            best = (d, j + 1)
    flatness, idx = best
    if flatness > tol:
        raise NoPlateauError(
            f"flattest increment {m.nstr(flatness, 5)} exceeds plateau "
            f"tolerance {m.nstr(tol, 5)}")
    return StabilizationResult(value=energies[idx][1], flatness=flatness,
                               at_size=energies[idx][0], energies=energies)
