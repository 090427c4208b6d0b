"""Self-consistent metastable levels E_n and dilated-frame resonances.

A level solves the implicit equation E + Omega E^2 = lambda_n(E), where
lambda_n(E) is the n-th eigenvalue of the frame-resolved operator at fixed
E.  The outer iteration is one fixed-point step through
E = (sqrt(1 + 4 lambda Omega) - 1) / (2 Omega) followed by secant-Newton
acceleration on g(E) = lambda_n(E) - E - Omega E^2, with the inner
eigenvalue search warm-started between iterates.  Real and translated
frames keep E real (their truncated matrices are exactly PT-symmetric, so
the tracked eigenvalue stays on the real axis); the dilated frame searches
complex E and reports the Im(E) >= 0 representative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from . import moments
from .hermite import BasisSpec, OscillatorTables
from .moments import MomentSolverError, NoConvergenceError
from .operators import (DIRAC, KLEIN_GORDON, Frame, ModelParams,
                        QuarticOperator, assemble_blocks,
                        build_frame_operator)
from .scalars import PrecisionContext


class NegativeDiscriminantError(MomentSolverError):
    """1 + 4 lambda Omega left the principal square-root domain; in the
    proven regime lambda_n > 0, so this signals a solver fault."""


class ThetaPlateauFailError(MomentSolverError):
    """Re-solving at a shifted dilation angle moved the resonance beyond
    10x the expected tolerance: basis or precision is insufficient."""


@dataclass(frozen=True)
class LevelConfig:
    """Solver configuration shared by the level and resonance searches.

    sigma and y are the variational basis frequency and imaginary
    translation (useful windows: 1 <= sigma <= 2, 1 <= y <= 5); theta the
    dilation angle; blocks the recurrence depth (basis size 4*blocks).
    """

    sigma: float | str = "1.4"
    y: float | str = "2"
    theta: float | str = "0.30"
    blocks: int = 60
    basin_radius: float | str = 1.0
    max_outer: int = 80
    max_newton_iter: int = 200
    theta_plateau_check: bool = True
    theta_plateau_delta: float = 0.05


@dataclass
class LevelResult:
    """A converged level: E_n, its lambda_n, and the iteration trace.

    trace holds (E iterate, lambda, |g|) triples; y_or_theta records the
    frame parameter actually used.  Every returned result satisfies
    |lam - E - Omega E^2| < newton_tol * (1 + |lam|).
    """

    n: int
    omega_rel: object
    energy: object
    lam: object
    frame: Frame
    trace: list = field(repr=False, default_factory=list)
    basis_blocks: int = 0
    sigma: float | str = 0.0
    y_or_theta: float | str = 0.0


def asymptotic_lambda(omega_rel, energy, n: int, ctx: PrecisionContext):
    """Leading large-E / small-Omega form sqrt(1 + 2 E Omega) (2n + 1)."""
    m = ctx.mp
    omega = ctx.mpf(omega_rel)
    e = m.mpmathify(energy)
    return m.sqrt(1 + 2 * e * omega) * (2 * n + 1)


def _resolve_frame(frame, cfg: LevelConfig) -> Frame:
    if isinstance(frame, Frame):
        return frame
    if frame == "real":
        return Frame.real()
    if frame == "translated":
        return Frame.translated(cfg.y)
    if frame == "dilated":
        return Frame.dilated(cfg.theta)
    raise ValueError(f"unknown frame {frame!r}")


class _LambdaSolver:
    """lambda_n(E) evaluator with a self-calibrated working precision.

    The moment recurrence loses roughly one decimal digit per block to
    roundoff (measured, not assumed: see moments.estimate_digit_loss), so
    the evaluator probes the loss at the seed parameters and widens its
    internal guard digits until the Newton tolerance of the reporting
    context is actually reachable.  Basis tables are built once at the
    working precision and reused across outer iterates.
    """

    _LOSS_GUESS_PER_BLOCK = 1.2

    def __init__(self, omega_rel, n, variant, branch, frame: Frame,
                 ctx: PrecisionContext, cfg: LevelConfig, seed_energy=None):
        self.omega_rel = omega_rel
        self.n = n
        self.variant = variant
        self.branch = branch
        self.frame = frame
        self.report_ctx = ctx
        self.cfg = cfg
        if not 0 <= n < 4 * cfg.blocks - 1:
            raise ValueError(
                f"level index {n} not resolved by {cfg.blocks} blocks")
        seed = seed_energy if seed_energy is not None else 2 * n + 1
        guard = max(ctx.guard_digits,
                    int(self._LOSS_GUESS_PER_BLOCK * cfg.blocks) + 12)
        for _ in range(6):
            work = PrecisionContext(ctx.digits, guard_digits=guard,
                                    rescale_exponent=ctx.rescale_exponent)
            self._build_tables(work)
            blocks = self._blocks(work.mpc(seed), cfg.blocks, work)
            lam0 = asymptotic_lambda(omega_rel, seed, n, work)
            loss = moments.estimate_digit_loss(blocks, lam0, cfg.blocks, work)
            needed = loss + 14
            if needed <= guard:
                if guard - needed > 40:
                    # initial guess overshot; one shrink pass saves time
                    guard = needed + 10
                    work = PrecisionContext(
                        ctx.digits, guard_digits=guard,
                        rescale_exponent=ctx.rescale_exponent)
                    self._build_tables(work)
                self.ctx = work
                return
            guard = needed + max(10, loss // 8)
        raise MomentSolverError(
            f"could not stabilize working precision at depth {cfg.blocks}")

    def _build_tables(self, work: PrecisionContext):
        self.basis = BasisSpec(self.cfg.sigma, 4 * self.cfg.blocks)
        self.tables = OscillatorTables(self.basis, 4 * self.cfg.blocks + 3,
                                       work)

    def _blocks(self, energy, n_blocks, ctx):
        params = ModelParams(omega_rel=self.omega_rel, energy=energy,
                             variant=self.variant, branch=self.branch,
                             frame=self.frame)
        op = build_frame_operator(params, ctx)
        return assemble_blocks(op, self.basis, n_blocks, ctx,
                               tables=self.tables)

    def __call__(self, energy, seed_lam=None, n_blocks=None):
        n_blocks = n_blocks or self.cfg.blocks
        blocks = self._blocks(energy, n_blocks, self.ctx)
        lam0 = seed_lam if seed_lam is not None else \
            asymptotic_lambda(self.omega_rel, energy, self.n, self.ctx)
        est = moments.find_eigenvalue(
            blocks, lam0, n_blocks, self.ctx,
            basin_radius=self.ctx.mpf(self.cfg.basin_radius),
            max_iter=self.cfg.max_newton_iter)
        return est.lam


def lambda_of(params: ModelParams, n: int, ctx: PrecisionContext,
              cfg: LevelConfig, seed_lambda=None):
    """n-th eigenvalue lambda_n(E) of the frame-resolved operator at the
    fixed E recorded in params, seeded from the harmonic asymptotic form
    (or from seed_lambda when continuing)."""
    solver = _LambdaSolver(params.omega_rel, n, params.variant,
                           params.branch, params.frame, ctx, cfg,
                           seed_energy=params.energy)
    return solver(params.energy, seed_lam=seed_lambda)


def _level_map(lam, omega, ctx: PrecisionContext):
    """Principal-branch solution of E + Omega E^2 = lam."""
    m = ctx.mp
    disc = 1 + 4 * m.mpmathify(lam) * omega
    if m.re(disc) <= 0:
        raise NegativeDiscriminantError(
            f"1 + 4 lambda Omega = {m.nstr(disc, 8)} is outside the "
            f"principal branch domain")
    return (m.sqrt(disc) - 1) / (2 * omega)


def _harmonic_level(n: int, frame: Frame, ctx: PrecisionContext,
                    cfg: LevelConfig) -> LevelResult:
    """Exact diagonal path for Omega = 0: the limiting operator
    -d^2/dx^2 + x^2 in its own eigenbasis (sigma must be 1)."""
    if frame.kind != "real":
        raise ValueError("the Omega = 0 path is defined in the real frame")
    if float(cfg.sigma) != 1.0:
        raise ValueError("the Omega = 0 diagonal path requires sigma = 1")
    m = ctx.mp
    blocks_needed = max(2, n // 4 + 1)
    basis = BasisSpec(cfg.sigma, 4 * max(blocks_needed, 2))
    op = QuarticOperator(
        kinetic=m.mpc(1),
        c=(m.mpc(0), m.mpc(0), m.mpc(1), m.mpc(0), m.mpc(0)),
        params=ModelParams(omega_rel=0.0, energy=0.0, frame=frame))
    tri = assemble_blocks(op, basis, blocks_needed, ctx)
    off = m.mpf(0)
    for bi, a in enumerate(tri.blocks_A):
        for i in range(4):
            for k in range(4):
                if i != k:
                    off = max(off, abs(a[4 * i + k]))
        for b in (tri.blocks_B[bi], tri.blocks_C[bi]):
            off = max(off, max(abs(v) for v in b))
    if off > ctx.newton_tol:
        raise MomentSolverError(
            "limiting operator is not diagonal in this basis")
    lam = tri.blocks_A[n // 4][5 * (n % 4)].real
    return LevelResult(n=n, omega_rel=ctx.mpf(0), energy=lam, lam=lam,
                       frame=frame, trace=[(lam, lam, off)],
                       basis_blocks=blocks_needed, sigma=cfg.sigma,
                       y_or_theta=0.0)


def _secant_drive(lam_solver, omega, seed, ctx: PrecisionContext,
                  cfg: LevelConfig, keep_real: bool):
    """Shared outer iteration: fixed-point start, then secant on g(E)."""
    m = ctx.mp
    tol = ctx.newton_tol
    trace = []

    def project(e):
        return m.re(e) if keep_real else e

    def g_of(e, seed_lam):
        lam = lam_solver(e, seed_lam=seed_lam)
        return lam, lam - e - omega * e * e

    e0 = project(m.mpmathify(seed))
    lam0, g0 = g_of(e0, None)
    trace.append((e0, lam0, abs(g0)))
    e1 = project(_level_map(lam0, omega, ctx))
    if e1 == e0:
        return e0, lam0, trace
    for _ in range(cfg.max_outer):
        lam1, g1 = g_of(e1, lam0)
        trace.append((e1, lam1, abs(g1)))
        if abs(g1) < tol * (1 + abs(lam1)):
            return e1, lam1, trace
        denom = g1 - g0
        if denom == 0:
            e2 = project(_level_map(lam1, omega, ctx))
        else:
            e2 = project(e1 - g1 * (e1 - e0) / denom)
        e0, g0, lam0 = e1, g1, lam1
        e1 = e2
    raise NoConvergenceError(cfg.max_outer, e1, abs(g0))


def solve_level(omega_rel, n: int, frame, ctx: PrecisionContext,
                cfg: LevelConfig | None = None, *, variant: str = DIRAC,
                branch: str = "plus", e_seed=None) -> LevelResult:
    """Self-consistent real level E_n(Omega) in the real or translated frame.

    Positive levels exist for every Omega > 0; Omega == 0 routes through
    the exact diagonal harmonic path.  e_seed warm-starts continuation in
    Omega or basis size.
    """
    if cfg is None:
        cfg = LevelConfig()
    frame = _resolve_frame(frame, cfg)
    if frame.kind == "dilated":
        raise ValueError("use solve_resonance for the dilated frame")
    m = ctx.mp
    omega = ctx.mpf(omega_rel)
    if omega == 0:
        return _harmonic_level(n, frame, ctx, cfg)
    if omega < 0:
        raise ValueError(f"omega_rel must be >= 0, got {omega_rel}")
    seed = e_seed if e_seed is not None else m.mpf(2 * n + 1)
    lam_solver = _LambdaSolver(omega_rel, n, variant, branch, frame, ctx,
                               cfg, seed_energy=seed)
    energy, lam, trace = _secant_drive(lam_solver, omega, seed, ctx, cfg,
                                       keep_real=True)
    if abs(m.im(lam)) > 10 * ctx.newton_tol * (1 + abs(lam)):
        raise MomentSolverError(
            f"eigenvalue left the real axis (Im = {m.nstr(m.im(lam), 5)}) "
            f"in a PT-real frame")
    energy = m.re(energy)
    lam = m.re(lam)
    if energy <= 0:
        raise MomentSolverError(
            f"captured a non-positive level E = {m.nstr(energy, 8)}; "
            f"seeding likely left the metastable branch")
    return LevelResult(n=n, omega_rel=omega, energy=energy, lam=lam,
                       frame=frame, trace=trace, basis_blocks=cfg.blocks,
                       sigma=cfg.sigma,
                       y_or_theta=frame.value if frame.kind != "real" else 0.0)


def solve_resonance(omega_rel, n: int, theta, ctx: PrecisionContext,
                    cfg: LevelConfig | None = None, *,
                    variant: str = DIRAC, branch: str = "plus",
                    e_seed=None, _plateau_recheck=True) -> LevelResult:
    """Complex resonance level from the dilated frame, 0 < theta < pi/6.

    The representative with Im(E) >= 0 is reported (solving at -theta gives
    the conjugate).  When cfg.theta_plateau_check is set, the solve is
    repeated at a shifted angle and a displacement beyond 10x the expected
    tolerance raises ThetaPlateauFailError.
    """
    if cfg is None:
        cfg = LevelConfig()
    theta_f = float(theta)
    if not 0 < theta_f:
        raise ValueError(f"theta must be positive, got {theta}")
    frame = Frame.dilated(theta)
    m = ctx.mp
    omega = ctx.mpf(omega_rel)
    if omega <= 0:
        raise ValueError(f"omega_rel must be positive, got {omega_rel}")
    seed = e_seed if e_seed is not None else m.mpf(2 * n + 1)
    lam_solver = _LambdaSolver(omega_rel, n, variant, branch, frame, ctx,
                               cfg, seed_energy=seed)
    energy, lam, trace = _secant_drive(lam_solver, omega, seed, ctx, cfg,
                                       keep_real=False)
    if m.im(energy) < 0:
        energy = m.conj(energy)
        lam = m.conj(lam)
    result = LevelResult(n=n, omega_rel=omega, energy=energy, lam=lam,
                         frame=frame, trace=trace, basis_blocks=cfg.blocks,
                         sigma=cfg.sigma, y_or_theta=theta)
    if cfg.theta_plateau_check and _plateau_recheck:
        delta = cfg.theta_plateau_delta
        theta_alt = theta_f + delta
        if not theta_alt < math.pi / 6 - 1e-9:
            theta_alt = theta_f - delta
        cfg_alt = replace(cfg, theta=theta_alt, theta_plateau_check=False)
        alt = solve_resonance(omega_rel, n, theta_alt, ctx, cfg_alt,
                              variant=variant, branch=branch,
                              e_seed=energy, _plateau_recheck=False)
        expected = ctx.newton_tol * (1 + abs(energy)) + abs(m.im(energy))
        if abs(alt.energy - energy) > 10 * expected:
            raise ThetaPlateauFailError(
                f"resonance moved by {m.nstr(abs(alt.energy - energy), 5)} "
                f"between theta = {theta_f} and {theta_alt}; expected "
                f"within {m.nstr(10 * expected, 5)}")
    return result


def choose_variational_params(omega_rel, n: int, frame_kind: str,
                              ctx: PrecisionContext, cfg: LevelConfig,
                              *, variant: str = DIRAC,
                              sigmas=(1.0, 1.25, 1.5, 1.75, 2.0),
                              ys=(1.0, 2.0, 3.0, 4.0, 5.0),
                              probe_blocks: int | None = None):
    """Coarse grid scan for (sigma, y) minimizing the basis-size
    sensitivity of the level at a reduced probe size.

    Returns (sigma, y, sensitivity); y is meaningful only for the
    translated frame and is echoed back unchanged otherwise.
    """
    n1 = probe_blocks or max(8, cfg.blocks // 3)
    n2 = n1 + max(4, n1 // 4)
    y_candidates = ys if frame_kind == "translated" else (cfg.y,)
    best = None
    for sig in sigmas:
        for y in y_candidates:
            trial = replace(cfg, sigma=sig, y=y, blocks=n2,
                            theta_plateau_check=False)
            try:
                if frame_kind == "dilated":
                    r1 = solve_resonance(omega_rel, n, trial.theta, ctx,
                                         replace(trial, blocks=n1))
                    r2 = solve_resonance(omega_rel, n, trial.theta, ctx,
                                         trial, e_seed=r1.energy)
                else:
                    r1 = solve_level(omega_rel, n, frame_kind, ctx,
                                     replace(trial, blocks=n1),
                                     variant=variant)
                    r2 = solve_level(omega_rel, n, frame_kind, ctx, trial,
                                     variant=variant, e_seed=r1.energy)
            except MomentSolverError:
                continue
            move = abs(r2.energy - r1.energy)
            if best is None or move < best[2]:
                best = (sig, y, move)
    if best is None:
        raise NoConvergenceError(0, None, "no candidate converged")
    return best
