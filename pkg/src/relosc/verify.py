"""Runnable acceptance criteria with machine-readable results.

Each criterion pins its tolerances and solver parameters; the functions
return CriterionResult records and print one PASS/FAIL line apiece.  The
quick tier finishes in about a minute; the full tier adds the
frame-comparison and property checks; three reproduction criteria (3, 6,
7) are long-running and tagged "slow" (the same tags drive the pytest
markers).  Frozen reference strings below are independent 10-to-12 digit
reproduction targets for the lowest dilated-frame level.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

from . import diagnostics, levels, moments
from .levels import LevelConfig
from .operators import (DIRAC, KLEIN_GORDON, BlockTridiagonal, Frame,
                        ModelParams, build_frame_operator)
from .scalars import make_context

REFERENCE_GROUND_RESONANCES = {
    "0.0020": ("1.0005017620", "1.17374083059e-144"),
    "0.0025": ("1.0006277579", "9.42079110945e-116"),
    "0.0030": ("1.0007539782", "1.72376665081e-96"),
    "0.0035": ("1.0008804241", "9.77543924661e-83"),
    "0.0040": ("1.0010070969", "2.00211928567e-72"),
    "0.0045": ("1.0011339978", "2.08165603853e-64"),
    "0.0050": ("1.0012611278", "5.36447802132e-58"),
}

# digits needed to resolve the gap at each Omega in the slow ratio suite
_RATIO_DIGITS = {"0.0030": 215, "0.0035": 190, "0.0040": 170,
                 "0.0045": 150, "0.0050": 135}

_TUNED = dict(sigma="1.3", y="3", theta="0.30")


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    details: dict
    seconds: float

    def line(self) -> str:
        det = ", ".join(f"{k}={v}" for k, v in self.details.items())
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} criterion {self.cid}: {self.name} ({det}) "
                f"[{self.seconds:.1f}s]")


def _criterion_1_harmonic():
    """Harmonic limit: exact diagonal path at Omega = 0 and the full
    pipeline at Omega = 1e-6."""
    ctx = make_context(40)
    m = ctx.mp
    tol_exact = m.mpf(10) ** (-(ctx.digits - 10))
    worst_exact = m.mpf(0)
    cfg = LevelConfig(sigma=1.0, blocks=8)
    for n in range(10):
        r = levels.solve_level(0, n, "real", ctx, cfg)
        worst_exact = max(worst_exact, abs(r.energy - (2 * n + 1)))
    ctx2 = make_context(30)
    m2 = ctx2.mp
    cfg2 = LevelConfig(sigma=1.0, y=1, blocks=16)
    worst_full = m2.mpf(0)
    for n in range(4):
        r = levels.solve_level("0.000001", n, "translated", ctx2, cfg2)
        worst_full = max(worst_full, abs(r.energy - (2 * n + 1)))
    passed = worst_exact <= tol_exact and worst_full <= m2.mpf("1e-4")
    return passed, {
        "diag_err": m.nstr(worst_exact, 3), "diag_tol": m.nstr(tol_exact, 3),
        "pipeline_err": m2.nstr(worst_full, 3), "pipeline_tol": "1e-4"}


def _random_block_instance(rng, n_blocks, ctx, kind):
    """Symmetric block-tridiagonal test instance with invertible B."""
    m = ctx.mp

    def val():
        re = rng.uniform(-1, 1)
        im = rng.uniform(-1, 1) if kind == "complex" else 0.0
        return m.mpc(re, im)

    def sym_block():
        b = [m.mpc(0)] * 16
        for i in range(4):
            for k in range(i, 4):
                v = val()
                b[4 * i + k] = v
                b[4 * k + i] = v
        return b

    def coupling_block():
        b = [val() for _ in range(16)]
        for i in range(4):
            b[5 * i] += 3  # diagonal boost keeps B comfortably invertible
        return b

    blocks_a = [sym_block() for _ in range(n_blocks)]
    blocks_b = [coupling_block() for _ in range(n_blocks)]
    blocks_c = [[b[4 * k + i] for i in range(4) for k in range(4)]
                for b in blocks_b]
    return BlockTridiagonal(blocks_a, blocks_b, blocks_c, n_blocks)


def _shift_positive(blocks, eigs, ctx):
    m = ctx.mp
    shift = abs(min(e.real for e in eigs)) + 1
    for a in blocks.blocks_A:
        for i in range(4):
            a[5 * i] = a[5 * i] + shift
    return [e + shift for e in eigs]


def _criterion_2_oracle():
    """Newton zeros against the dense eigensolver on random instances,
    plus the upper/lower sandwich on a positive subset."""
    ctx = make_context(30)
    m = ctx.mp
    rng = random.Random(20250811)
    tol = m.mpf(10) ** (-(ctx.digits - 12))
    checked = 0
    worst = m.mpf(0)
    for i in range(52):
        n_blocks = 2 + i % 7
        kind = "complex" if i % 2 else "real"
        blocks = _random_block_instance(rng, n_blocks, ctx, kind)
        eigs = moments.dense_eigensolve_oracle(blocks, n_blocks, ctx)
        probe = eigs[:: max(1, len(eigs) // 6)]
        for mu in probe:
            seed = mu + m.mpc("1e-3", "0.7e-3")
            est = moments.find_eigenvalue(blocks, seed, n_blocks, ctx,
                                          basin_radius=5.0)
            dist = min(abs(est.lam - e) for e in eigs)
            worst = max(worst, dist / (1 + abs(mu)))
        checked += 1
    sandwich_ok = True
    sandwich_worst = m.mpf(0)
    for i in range(8):
        blocks = _random_block_instance(rng, 3, ctx, "real")
        eigs = moments.dense_eigensolve_oracle(blocks, 3, ctx)
        eigs = _shift_positive(blocks, eigs, ctx)
        for level in range(3):
            mu = eigs[level].real
            upper = moments.find_eigenvalue(
                blocks, mu + m.mpf("1e-4"), 3, ctx, basin_radius=5.0)
            lower = moments.lower_bound_eigenvalue(
                blocks, mu - m.mpf("1e-3"), 3, ctx, basin_radius=5.0)
            if not (lower.lam.real <= mu + tol
                    and mu <= upper.lam.real + tol):
                sandwich_ok = False
            sandwich_worst = max(sandwich_worst, abs(upper.lam.real - mu))
    passed = worst <= tol and sandwich_ok
    return passed, {
        "instances": str(checked), "worst_match": m.nstr(worst, 3),
        "tol": m.nstr(tol, 3), "sandwich": "ok" if sandwich_ok else "violated",
        "upper_vs_dense": m.nstr(sandwich_worst, 3)}


def _solve_reference_grid(ctx, cfg, frames=("translated", "dilated")):
    """Ground level across the reference Omega grid, warm-started."""
    out = {}
    seed_t = None
    seed_d = None
    for om in sorted(REFERENCE_GROUND_RESONANCES):
        entry = {}
        if "translated" in frames:
            rt = levels.solve_level(om, 0, "translated", ctx, cfg,
                                    e_seed=seed_t)
            seed_t = rt.energy
            entry["t"] = rt
        if "dilated" in frames:
            rd = levels.solve_resonance(om, 0, cfg.theta, ctx, cfg,
                                        e_seed=seed_d or seed_t)
            seed_d = rd.energy
            entry["d"] = rd
        out[om] = entry
    return out


def _criterion_3_reference_levels():
    """Ten-digit reproduction of the reference ground values in both the
    translated and dilated frames."""
    ctx = make_context(45)
    m = ctx.mp
    cfg = LevelConfig(blocks=110, theta_plateau_check=False, **_TUNED)
    tol = m.mpf("1e-9")
    worst = m.mpf(0)
    grid = _solve_reference_grid(ctx, cfg)
    for om, (re_ref, _) in REFERENCE_GROUND_RESONANCES.items():
        ref = m.mpf(re_ref)
        worst = max(worst, abs(grid[om]["t"].energy - ref),
                    abs(m.re(grid[om]["d"].energy) - ref))
    return worst <= tol, {"worst_err": m.nstr(worst, 3), "tol": "1e-9",
                          "digits": "45", "blocks": "110"}


def _criterion_4_slope():
    """Least-squares slope of (E_t0 - 1) against Omega matches the
    second-order perturbation prediction of 1/4."""
    ctx = make_context(30)
    m = ctx.mp
    cfg = LevelConfig(blocks=36, **_TUNED)
    omegas = []
    shifts = []
    seed = None
    for om in sorted(REFERENCE_GROUND_RESONANCES):
        r = levels.solve_level(om, 0, "translated", ctx, cfg, e_seed=seed)
        seed = r.energy
        omegas.append(m.mpf(om))
        shifts.append(r.energy - 1)
    _, slope = diagnostics.fit_line(omegas, shifts, ctx)
    err = abs(slope - m.mpf("0.25"))
    return err <= m.mpf("0.005"), {"slope": m.nstr(slope, 6),
                                   "target": "0.250 +- 0.005"}


def _criterion_5_shift_ratio_fit():
    """Linear fit of (E_t0 - E_r0)/Omega across the grid."""
    ctx = make_context(35)
    m = ctx.mp
    cfg = LevelConfig(blocks=56, **_TUNED)
    omegas = []
    kappas = []
    seed_t = None
    for om in sorted(REFERENCE_GROUND_RESONANCES):
        rt = levels.solve_level(om, 0, "translated", ctx, cfg, e_seed=seed_t)
        seed_t = rt.energy
        params = ModelParams(omega_rel=om, energy=rt.energy,
                             variant=KLEIN_GORDON, frame=Frame.real())
        op = build_frame_operator(params, ctx)
        sizes = diagnostics.real_frame_scan_sizes(float(om), float(cfg.sigma))
        scan = moments.stabilization_scan(op, sizes, 0, ctx, cfg)
        omegas.append(m.mpf(om))
        kappas.append((rt.energy - scan.value) / m.mpf(om))
    intercept, slope = diagnostics.fit_line(omegas, kappas, ctx)
    ok = (abs(intercept - 1) <= m.mpf("5e-4")
          and abs(slope - m.mpf("0.0285")) <= m.mpf("0.005"))
    return ok, {"intercept": m.nstr(intercept, 8),
                "slope": m.nstr(slope, 5),
                "targets": "1.0000 +- 5e-4, 0.0285 +- 0.005"}


def _criterion_6_gap_saturation():
    """Saturation of the gap logarithm against the width reference at
    Omega = 0.005 (digits >= 90, depths up to 300)."""
    ctx = make_context(135)
    m = ctx.mp
    cfg = LevelConfig(blocks=300, theta_plateau_check=False, **_TUNED)
    curve = diagnostics.saturation_curve(
        "0.005", [60, 120, 180, 240, 300], ctx, cfg)
    re_ref, im_ref = REFERENCE_GROUND_RESONANCES["0.0050"]
    lam_ref = -2 * m.log(m.mpf(im_ref))
    lam_sat = curve.saturated
    im_val = m.im(curve.points[-1].e_d0)
    ratio = im_val / m.mpf(im_ref) if im_val > 0 else m.mpf(0)
    ok = (lam_sat is not None
          and abs(lam_sat - lam_ref) <= m.mpf("0.01") * lam_ref
          and m.mpf(1) / 3 <= ratio <= 3)
    return ok, {"lambda_sat": m.nstr(lam_sat, 8) if lam_sat else "none",
                "lambda_ref": m.nstr(lam_ref, 8),
                "im": m.nstr(im_val, 6), "im_ref": im_ref}


def _criterion_7_ratio_limit():
    """Quartic Lagrange extrapolation of the gap-to-width ratio."""
    ctx_fit = make_context(40)
    mf = ctx_fit.mp
    omegas = []
    ratios = []
    seed_t = None
    seed_d = None
    for om, digits in sorted(_RATIO_DIGITS.items()):
        ctx = make_context(digits)
        m = ctx.mp
        cfg = LevelConfig(blocks=300, theta_plateau_check=False, **_TUNED)
        rt = levels.solve_level(om, 0, "translated", ctx, cfg, e_seed=seed_t)
        rd = levels.solve_resonance(om, 0, cfg.theta, ctx, cfg,
                                    e_seed=seed_d or rt.energy)
        seed_t = rt.energy
        seed_d = rd.energy
        gap = diagnostics.lambda_gap(rt.energy, rd.energy, ctx)
        omegas.append(mf.mpf(om))
        ratios.append(mf.mpf(gap.value / gap.im_reference))
    limit = diagnostics.lagrange_extrapolate(omegas, ratios, 0, ctx_fit)
    ok = abs(limit - mf.mpf("0.9999")) <= mf.mpf("0.002")
    return ok, {"limit": mf.nstr(limit, 8), "target": "0.9999 +- 0.002",
                "ratios": "[" + ", ".join(mf.nstr(r, 8) for r in ratios) + "]"}


def _criterion_8_frame_invariance():
    """Isospectrality across translations, dilation-angle independence,
    and branch symmetry."""
    ctx = make_context(35)
    m = ctx.mp
    tol_y = m.mpf(10) ** (-(ctx.digits - 15))
    energies = []
    for y in (1, 2, 3, 5):
        cfg = LevelConfig(sigma="1.3", y=y, blocks=72)
        energies.append(levels.solve_level("0.002", 0, "translated", ctx,
                                           cfg).energy)
    y_spread = max(energies) - min(energies)
    res = []
    for theta in ("0.25", "0.30", "0.35"):
        cfg = LevelConfig(sigma="1.3", theta=theta, blocks=64,
                          theta_plateau_check=False)
        res.append(levels.solve_resonance("0.002", 0, theta, ctx, cfg,
                                          e_seed=energies[0]))
    re_spread = max(m.re(r.energy) for r in res) \
        - min(m.re(r.energy) for r in res)
    im_scale = max(abs(m.im(r.energy)) for r in res)
    theta_tol = 10 * (im_scale + ctx.newton_tol * (1 + abs(res[0].energy)))
    cfg_b = LevelConfig(sigma="1.3", y="2", blocks=40)
    e_plus = levels.solve_level("0.002", 0, "translated", ctx, cfg_b,
                                branch="plus").energy
    e_minus = levels.solve_level("0.002", 0, "translated", ctx, cfg_b,
                                 branch="minus").energy
    branch_diff = abs(e_plus - e_minus)
    ok = (y_spread <= tol_y and re_spread <= theta_tol
          and branch_diff <= 10 * ctx.newton_tol)
    return ok, {"y_spread": m.nstr(y_spread, 3), "y_tol": m.nstr(tol_y, 3),
                "theta_spread": m.nstr(re_spread, 3),
                "theta_tol": m.nstr(theta_tol, 3),
                "branch_diff": m.nstr(branch_diff, 3)}


def _criterion_9_self_consistency():
    """Level-equation residual of emitted results and the large-E
    asymptotic ratio."""
    ctx = make_context(30)
    m = ctx.mp
    cfg = LevelConfig(blocks=32, theta_plateau_check=False, **_TUNED)
    results = [
        levels.solve_level("0.002", 0, "translated", ctx, cfg),
        levels.solve_level("0.004", 1, "translated", ctx, cfg),
        levels.solve_resonance("0.002", 0, cfg.theta, ctx, cfg),
    ]
    worst = m.mpf(0)
    for r in results:
        omega = m.mpf(r.omega_rel)
        resid = abs(m.mpmathify(r.lam) - m.mpmathify(r.energy)
                    - omega * m.mpmathify(r.energy) ** 2)
        worst = max(worst, resid / (1 + abs(r.lam)))
    params = ModelParams(omega_rel="0.002", energy=100, variant=DIRAC,
                         frame=Frame.real())
    lam = levels.lambda_of(params, 0, ctx,
                           LevelConfig(sigma="1.1", blocks=24))
    ratio = m.re(lam) / levels.asymptotic_lambda("0.002", 100, 0, ctx)
    ok = worst < ctx.newton_tol and abs(ratio - 1) <= m.mpf("0.01")
    return ok, {"worst_resid": m.nstr(worst, 3),
                "tol": m.nstr(ctx.newton_tol, 3),
                "asym_ratio": m.nstr(ratio, 8)}


def _criterion_10_spinor():
    """Component hierarchy and pair residual of the reconstructed spinor."""
    ctx = make_context(30)
    m = ctx.mp
    cfg = LevelConfig(sigma="1.3", blocks=30)
    lev = levels.solve_level("0.002", 0, "real", ctx, cfg)
    rec = diagnostics.spinor_from_level(lev, ctx)
    ratio = rec.X1_norm / rec.X2_norm
    tol_resid = m.mpf(10) ** (-(ctx.digits - 15))
    ok = ratio < m.mpf("0.1") and rec.pt_pair_residual < tol_resid
    return ok, {"X1_over_X2": m.nstr(ratio, 4),
                "pt_residual": m.nstr(rec.pt_pair_residual, 3),
                "resid_tol": m.nstr(tol_resid, 3)}


CRITERIA = {
    1: ("harmonic limit", _criterion_1_harmonic, "quick"),
    2: ("oracle equivalence", _criterion_2_oracle, "quick"),
    3: ("reference ground levels", _criterion_3_reference_levels, "slow"),
    4: ("perturbation slope", _criterion_4_slope, "full"),
    5: ("shift-ratio fit", _criterion_5_shift_ratio_fit, "full"),
    6: ("gap saturation", _criterion_6_gap_saturation, "slow"),
    7: ("gap-to-width ratio limit", _criterion_7_ratio_limit, "slow"),
    8: ("frame invariance", _criterion_8_frame_invariance, "full"),
    9: ("self-consistency", _criterion_9_self_consistency, "full"),
    10: ("spinor structure", _criterion_10_spinor, "full"),
}

TIERS = {
    "quick": [1, 2],
    "full": list(CRITERIA),
}


def run_criterion(cid: int) -> CriterionResult:
    name, func, _ = CRITERIA[cid]
    start = time.perf_counter()
    try:
        passed, details = func()
    except Exception as exc:  # a crash is a failed criterion, not a crash
        passed = False
        details = {"error": f"{type(exc).__name__}: {exc}"}
    return CriterionResult(cid=cid, name=name, passed=bool(passed),
                           details=details,
                           seconds=time.perf_counter() - start)


def run_suite(cids, stream=None) -> list:
    results = []
    for cid in cids:
        res = run_criterion(cid)
        results.append(res)
        if stream is not None:
            print(res.line(), file=stream, flush=True)
    return results
