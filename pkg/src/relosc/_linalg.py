"""Internal multiprecision linear algebra kernels.

4x4 complex blocks are stored as flat row-major lists of 16 mpc entries;
the hand-unrolled helpers here keep the moment recurrence inner loop free
of mpmath.matrix overhead.  A small banded LU with partial pivoting backs
the inverse-iteration eigenvector extraction.
"""

from __future__ import annotations


class SingularMatrixError(ArithmeticError):
    """A pivot underflowed working precision during elimination."""


def mat_identity(ctx):
    one = ctx.mpf(1)
    zero = ctx.mpf(0)
    return [one if i % 5 == 0 else zero for i in range(16)]


def mat_mul(a, b):
    out = [None] * 16
    for i in (0, 4, 8, 12):
        a0, a1, a2, a3 = a[i], a[i + 1], a[i + 2], a[i + 3]
        for j in range(4):
            out[i + j] = (a0 * b[j] + a1 * b[4 + j]
                          + a2 * b[8 + j] + a3 * b[12 + j])
    return out


def mat_sub(a, b):
    return [a[k] - b[k] for k in range(16)]


def mat_scale(a, s):
    return [x * s for x in a]


def shifted_neg(a, lam):
    """Return lam*I - a."""
    out = [-x for x in a]
    out[0] += lam
    out[5] += lam
    out[10] += lam
    out[15] += lam
    return out


def mat_max_entry(a):
    """Cheap magnitude proxy: max over entries of max(|Re|, |Im|)."""
    m = None
    for x in a:
        v = abs(x.real)
        w = abs(x.imag)
        if w > v:
            v = w
        if m is None or v > m:
            m = v
    return m


def _lu4(a, ctx):
    """LU factorization with partial pivoting of a flat 4x4 matrix.

    Returns (lu, perm, parity).  Raises SingularMatrixError when the best
    available pivot is zero to working precision.
    """
    lu = list(a)
    perm = [0, 1, 2, 3]
    parity = 1
    for col in range(4):
        piv_row = col
        piv_mag = abs(lu[4 * col + col])
        for r in range(col + 1, 4):
            mag = abs(lu[4 * r + col])
            if mag > piv_mag:
                piv_mag = mag
                piv_row = r
        if piv_mag == 0:
            raise SingularMatrixError(f"zero pivot in column {col}")
        if piv_row != col:
            for j in range(4):
                lu[4 * col + j], lu[4 * piv_row + j] = \
                    lu[4 * piv_row + j], lu[4 * col + j]
            perm[col], perm[piv_row] = perm[piv_row], perm[col]
            parity = -parity
        inv_piv = 1 / lu[4 * col + col]
        for r in range(col + 1, 4):
            f = lu[4 * r + col] * inv_piv
            lu[4 * r + col] = f
            if f != 0:
                for j in range(col + 1, 4):
                    lu[4 * r + j] -= f * lu[4 * col + j]
    return lu, perm, parity


def mat_det(a, ctx):
    """Determinant of a flat 4x4 matrix via pivoted LU."""
    try:
        lu, _, parity = _lu4(a, ctx)
    except SingularMatrixError:
        return ctx.mpc(0)
    d = lu[0] * lu[5] * lu[10] * lu[15]
    return d if parity > 0 else -d


def mat_inv(a, ctx):
    """Inverse of a flat 4x4 matrix via pivoted LU."""
    lu, perm, _ = _lu4(a, ctx)
    inv = [None] * 16
    for col in range(4):
        y = [ctx.mpc(1) if perm[r] == col else ctx.mpc(0) for r in range(4)]
        for r in range(1, 4):
            s = y[r]
            for j in range(r):
                s -= lu[4 * r + j] * y[j]
            y[r] = s
        for r in range(3, -1, -1):
            s = y[r]
            for j in range(r + 1, 4):
                s -= lu[4 * r + j] * y[j]
            y[r] = s / lu[4 * r + r]
        for r in range(4):
            inv[4 * r + col] = y[r]
    return inv


def banded_lu_solve(n, band, rhs, ctx):
    """Solve a banded complex system by LU with partial pivoting.

    band maps (i, j) -> entry for |i - j| <= 4; missing pairs are zero.
    Fill-in during pivoting widens the upper band to 8.  Returns the
    solution list; raises SingularMatrixError on a vanishing pivot.
    """
    kl = 4
    ku = 4
    width = kl + ku + 1
    # LAPACK-style storage with room for pivoting fill: rows of length n
    ab = [[ctx.mpc(0)] * n for _ in range(width + kl)]
    for (i, j), v in band.items():
        ab[kl + ku + i - j][j] = ctx.mpc(v)
    x = [ctx.mpc(v) for v in rhs]
    # factorize with row swaps confined to the band
    for col in range(n):
        piv_row = col
        piv_mag = abs(ab[kl + ku][col])
        for r in range(col + 1, min(col + kl + 1, n)):
            mag = abs(ab[kl + ku + r - col][col])
            if mag > piv_mag:
                piv_mag = mag
                piv_row = r
        if piv_mag == 0:
            raise SingularMatrixError(f"zero pivot at banded column {col}")
        if piv_row != col:
            for j in range(col, min(col + kl + ku + 1, n)):
                r1 = kl + ku + col - j
                r2 = kl + ku + piv_row - j
                ab[r1][j], ab[r2][j] = ab[r2][j], ab[r1][j]
            x[col], x[piv_row] = x[piv_row], x[col]
        piv = ab[kl + ku][col]
        for r in range(col + 1, min(col + kl + 1, n)):
            f = ab[kl + ku + r - col][col] / piv
            if f != 0:
                x[r] -= f * x[col]
                for j in range(col + 1, min(col + kl + ku + 1, n)):
                    ab[kl + ku + r - j][j] -= f * ab[kl + ku + col - j][j]
            ab[kl + ku + r - col][col] = f
    for col in range(n - 1, -1, -1):
        s = x[col]
        for j in range(col + 1, min(col + kl + ku + 1, n)):
            s -= ab[kl + ku + col - j][j] * x[j]
        x[col] = s / ab[kl + ku][col]
    return x
