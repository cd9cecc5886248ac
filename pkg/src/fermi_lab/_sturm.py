"""Sturm-sequence bisection kernels for the discretized Dirichlet operator.

The matrix is tridiag(-w, 2w + v_i, -w) with w = 1/h^2.  count_* return the
number of negative pivots of the LDL^T factorization of T - xI, which equals
the number of eigenvalues below x; bisection on that count localizes the k-th
eigenvalue without ever forming the full factorization.

Two counting kernels are used in sequence.  The plain double kernel is fast
but its count is only reliable down to a few hundred ulps of ||T||, which at
fine grids (w ~ 1e7) is far above the requested tolerances.  The second kernel
carries the pivot in double-double (compensated) arithmetic; its count is
exact for perturbations far below any tolerance used here, so the final
bisection width is a rigorous error bound.  The diagonal entries are composed
as the exact sum 2w + v_i inside the compensated kernel, which keeps constant
shifts of the potential exact shifts of the spectrum.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_EPS = 2.220446049250313e-16
# plain-count floor safety factor; above W1 = _KFLOOR*eps*||T|| the fast count
# is trusted, below it bisection switches to the compensated kernel
_KFLOOR = 512.0
# when the requested tolerance sits this far above the componentwise floor the
# compensated phase is skipped entirely; the result then carries an extra
# error of at most _PLAIN_SLOP*eps*||T|| (see solver_error_bound)
_SKIP_DD = 64.0
_PLAIN_SLOP = 16.0


@njit(cache=True, inline="always")
def _two_sum(a, b):
    s = a + b
    t = s - a
    e = (a - (s - t)) + (b - t)
    return s, e


@njit(cache=True, inline="always")
def _split(a):
    c = 134217729.0 * a  # 2^27 + 1
    hi = c - (c - a)
    return hi, a - hi


@njit(cache=True, inline="always")
def _two_prod(a, b):
    p = a * b
    ahi, alo = _split(a)
    bhi, blo = _split(b)
    e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, e


@njit(cache=True, inline="always")
def _dd_div(nhi, nlo, dhi, dlo):
    # (nhi + nlo) / (dhi + dlo) to relative accuracy O(eps^2)
    q1 = nhi / dhi
    p, pe = _two_prod(q1, dhi)
    rhi, re = _two_sum(nhi, -p)
    r = rhi + (re + nlo - pe - q1 * dlo)
    q2 = r / dhi
    return _two_sum(q1, q2)


@njit(cache=True)
def _count_plain(diag, off2, x):
    n = diag.size
    cnt = 0
    q = diag[0] - x
    if q < 0.0:
        cnt += 1
    for i in range(1, n):
        if q == 0.0:
            q = -1e-300
        q = diag[i] - x - off2 / q
        if q < 0.0:
            cnt += 1
    return cnt


@njit(cache=True)
def _count_dd(w, v, x):
    n = v.size
    e2hi, e2lo = _two_prod(w, w)
    d0 = 2.0 * w  # exact: scaling by 2
    cnt = 0
    chi, clo = _two_sum(d0, v[0])
    s1, e1 = _two_sum(chi, -x)
    qhi, qlo = _two_sum(s1, e1 + clo)
    if qhi < 0.0 or (qhi == 0.0 and qlo < 0.0):
        cnt += 1
    for i in range(1, n):
        if qhi == 0.0 and qlo == 0.0:
            qhi = -1e-300
        thi, tlo = _dd_div(e2hi, e2lo, qhi, qlo)
        chi, clo = _two_sum(d0, v[i])
        s1, e1 = _two_sum(chi, -x)
        s2, e2 = _two_sum(s1, -thi)
        qhi, qlo = _two_sum(s2, e2 + e1 + clo - tlo)
        if qhi < 0.0 or (qhi == 0.0 and qlo < 0.0):
            cnt += 1
    return cnt


@njit(cache=True)
def _solve_one(w, v, diag, off2, k, center, vmin, vmax, tol_abs, rel_tol, glo, ghi):
    norm_est = 4.0 * w + max(abs(vmin), abs(vmax))
    skip_dd = rel_tol <= 0.0 and tol_abs >= _SKIP_DD * _EPS * norm_est

    # bracket around the free discrete eigenvalue shifted by the range of v;
    # exact for the ideal entries, verified and widened on the rounded ones
    slack = 1e-6 + 1e-9 * center
    lo = center + vmin - slack
    hi = center + vmax + slack
    widen = slack
    for _ in range(64):
        if lo <= glo:
            break
        cnt = _count_plain(diag, off2, lo) if skip_dd else _count_dd(w, v, lo)
        if cnt < k:
            break
        widen *= 4.0
        lo = center + vmin - widen
    if lo < glo:
        lo = glo
    widen = slack
    for _ in range(64):
        if hi >= ghi:
            break
        cnt = _count_plain(diag, off2, hi) if skip_dd else _count_dd(w, v, hi)
        if cnt >= k:
            break
        widen *= 4.0
        hi = center + vmax + widen
    if hi > ghi:
        hi = ghi

    # fast phase: plain counts down to the trust floor W1 (or all the way to
    # tol_abs when that is comfortably above the componentwise floor)
    w1 = tol_abs
    floor = _KFLOOR * _EPS * norm_est
    if floor > w1 and not skip_dd:
        w1 = floor
    a, b = lo, hi
    while b - a > w1:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if _count_plain(diag, off2, mid) >= k:
            b = mid
        else:
            a = mid
    mid = 0.5 * (a + b)
    if skip_dd:
        return mid

    # compensated phase: re-bracket (the fast phase can err by ~W1) and
    # bisect with the exact count to the requested tolerance
    r = 4.0 * (b - a)
    a2 = mid - r
    b2 = mid + r
    ok = False
    for _ in range(8):
        if (a2 <= glo or _count_dd(w, v, a2) < k) and (b2 >= ghi or _count_dd(w, v, b2) >= k):
            ok = True
            break
        r *= 4.0
        a2 = mid - r
        b2 = mid + r
    if not ok:
        a2, b2 = lo, hi
    if a2 < lo:
        a2 = lo
    if b2 > hi:
        b2 = hi
    while True:
        width = b2 - a2
        tgt = tol_abs
        m = 0.5 * (a2 + b2)
        if rel_tol > 0.0:
            rt = rel_tol * abs(m)
            if rt < tgt:
                tgt = rt
        if width <= tgt:
            break
        if m <= a2 or m >= b2:
            break
        if _count_dd(w, v, m) >= k:
            b2 = m
        else:
            a2 = m
    return 0.5 * (a2 + b2)


@njit(cache=True, parallel=True)
def solve_batch(w, v, kvec, centers, tol_abs, rel_tol):
    """Lowest eigenvalues of tridiag(-w, 2w + v_i, -w) for the indices kvec."""
    n = v.size
    diag = np.empty(n)
    for i in range(n):
        diag[i] = 2.0 * w + v[i]
    off2 = w * w
    vmin = v[0]
    vmax = v[0]
    for i in range(1, n):
        if v[i] < vmin:
            vmin = v[i]
        if v[i] > vmax:
            vmax = v[i]
    glo = vmin - 1.0
    ghi = 4.0 * w + vmax + 1.0
    out = np.empty(kvec.size)
    for j in prange(kvec.size):
        out[j] = _solve_one(
            w, v, diag, off2, kvec[j], centers[j], vmin, vmax, tol_abs, rel_tol, glo, ghi
        )
    return out
