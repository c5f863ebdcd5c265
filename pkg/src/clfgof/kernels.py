"""Hot numeric kernels with numba and pure-numpy implementations.

Each kernel exists twice: ``*_numba`` (compiled, used by default) and
``*_numpy`` (reference fallback). The public names dispatch on
:data:`clfgof._accel.USE_NUMBA`, which honours ``CLFGOF_DISABLE_NUMBA``.
Both paths must agree exactly on the rank kernels and to rounding on the
coordinate-descent kernel; the test suite checks this.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# Lexicographic (score, uniform) cross-sample counts
# ---------------------------------------------------------------------------


def rank_counts_numpy(s0, u0, s1, u1):
    """Return ``(above, below)`` integer counts.

    ``above[i]`` is the number of ``j`` with ``(s1[j], u1[j]) >lex (s0[i], u0[i])``;
    ``below[j]`` is the number of ``i`` with ``(s0[i], u0[i]) <lex (s1[j], u1[j])``.
    """
    m0 = s0.shape[0]
    m1 = s1.shape[0]
    s = np.concatenate((s0, s1))
    u = np.concatenate((u0, u1))
    order = np.lexsort((u, s))
    ss = s[order]
    us = u[order]
    new_group = np.empty(ss.shape[0], dtype=bool)
    new_group[0] = True
    new_group[1:] = (ss[1:] != ss[:-1]) | (us[1:] != us[:-1])
    dense = np.empty(ss.shape[0], dtype=np.int64)
    dense[order] = np.cumsum(new_group)
    r0 = dense[:m0]
    r1 = dense[m0:]
    r0s = np.sort(r0)
    r1s = np.sort(r1)
    above = m1 - np.searchsorted(r1s, r0, side="right")
    below = np.searchsorted(r0s, r1, side="left")
    return above.astype(np.int64), below.astype(np.int64)


@njit(cache=True, nogil=True)
def _lex_order(s, u):
    # stable sort by u, then stable sort by s  ==  lexicographic (s, u)
    o = np.argsort(u, kind="mergesort")
    o2 = np.argsort(s[o], kind="mergesort")
    return o[o2]


@njit(cache=True, nogil=True)
def rank_counts_numba(s0, u0, s1, u1):
    m0 = s0.shape[0]
    m1 = s1.shape[0]
    o0 = _lex_order(s0, u0)
    o1 = _lex_order(s1, u1)
    above = np.empty(m0, dtype=np.int64)
    below = np.empty(m1, dtype=np.int64)

    # above: sweep sample 0 ascending, count sample-1 keys <=lex current key
    j = 0
    for a in range(m0):
        i = o0[a]
        si = s0[i]
        ui = u0[i]
        while j < m1:
            k = o1[j]
            if s1[k] < si or (s1[k] == si and u1[k] <= ui):
                j += 1
            else:
                break
        above[i] = m1 - j

    # below: sweep sample 1 ascending, count sample-0 keys <lex current key
    i = 0
    for b in range(m1):
        k = o1[b]
        sk = s1[k]
        uk = u1[k]
        while i < m0:
            q = o0[i]
            if s0[q] < sk or (s0[q] == sk and u0[q] < uk):
                i += 1
            else:
                break
        below[k] = i
    return above, below


# ---------------------------------------------------------------------------
# Cyclic coordinate descent for (1/(4n))||Z - X b||^2 + lam ||b||_1
# ---------------------------------------------------------------------------


def cd_lasso_numpy(X, Z, lam, tol, max_sweeps, beta0):
    """Exact soft-threshold coordinate descent, residual form.

    Returns ``(beta, trace, sweeps, converged)`` where ``trace[0]`` is the
    objective at ``beta0`` and ``trace[s]`` the objective after sweep ``s``.
    """
    rows, p = X.shape
    two_n = float(rows)
    beta = beta0.astype(np.float64).copy()
    r = Z - X @ beta
    a = np.einsum("ij,ij->j", X, X) / two_n
    trace = np.empty(max_sweeps + 1)
    trace[0] = r @ r / (2.0 * two_n) + lam * np.abs(beta).sum()
    converged = False
    sweeps = 0
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            if a[j] == 0.0:
                continue
            xj = X[:, j]
            old = beta[j]
            rho = (xj @ r) / two_n + a[j] * old
            if rho > lam:
                new = (rho - lam) / a[j]
            elif rho < -lam:
                new = (rho + lam) / a[j]
            else:
                new = 0.0
            if new != old:
                r -= xj * (new - old)
                beta[j] = new
                delta = abs(new - old)
                if delta > max_delta:
                    max_delta = delta
        sweeps = sweep + 1
        trace[sweeps] = r @ r / (2.0 * two_n) + lam * np.abs(beta).sum()
        if max_delta < tol:
            converged = True
            break
    return beta, trace[: sweeps + 1].copy(), sweeps, converged


@njit(cache=True, nogil=True)
def cd_lasso_numba(X, Z, lam, tol, max_sweeps, beta0):
    rows, p = X.shape
    two_n = float(rows)
    beta = beta0.astype(np.float64).copy()
    r = Z.astype(np.float64).copy()
    for j in range(p):
        if beta[j] != 0.0:
            for i in range(rows):
                r[i] -= X[i, j] * beta[j]
    a = np.zeros(p)
    for j in range(p):
        acc = 0.0
        for i in range(rows):
            acc += X[i, j] * X[i, j]
        a[j] = acc / two_n
    trace = np.empty(max_sweeps + 1)
    rr = 0.0
    for i in range(rows):
        rr += r[i] * r[i]
    l1 = 0.0
    for j in range(p):
        l1 += abs(beta[j])
    trace[0] = rr / (2.0 * two_n) + lam * l1
    converged = False
    sweeps = 0
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            if a[j] == 0.0:
                continue
            old = beta[j]
            acc = 0.0
            for i in range(rows):
                acc += X[i, j] * r[i]
            rho = acc / two_n + a[j] * old
            if rho > lam:
                new = (rho - lam) / a[j]
            elif rho < -lam:
                new = (rho + lam) / a[j]
            else:
                new = 0.0
            if new != old:
                step = new - old
                for i in range(rows):
                    r[i] -= X[i, j] * step
                beta[j] = new
                if abs(step) > max_delta:
                    max_delta = abs(step)
        sweeps = sweep + 1
        rr = 0.0
        for i in range(rows):
            rr += r[i] * r[i]
        l1 = 0.0
        for j in range(p):
            l1 += abs(beta[j])
        trace[sweeps] = rr / (2.0 * two_n) + lam * l1
        if max_delta < tol:
            converged = True
            break
    return beta, trace[: sweeps + 1].copy(), sweeps, converged


def rank_counts(s0, u0, s1, u1):
    s0 = np.ascontiguousarray(s0, dtype=np.float64)
    u0 = np.ascontiguousarray(u0, dtype=np.float64)
    s1 = np.ascontiguousarray(s1, dtype=np.float64)
    u1 = np.ascontiguousarray(u1, dtype=np.float64)
    if USE_NUMBA:
        return rank_counts_numba(s0, u0, s1, u1)
    return rank_counts_numpy(s0, u0, s1, u1)


def cd_lasso(X, Z, lam, tol, max_sweeps, beta0):
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    beta0 = np.ascontiguousarray(beta0, dtype=np.float64)
    if USE_NUMBA:
        # column-major so the inner row loops are contiguous
        Xf = np.asfortranarray(X, dtype=np.float64)
        return cd_lasso_numba(Xf, Z, float(lam), float(tol), int(max_sweeps), beta0)
    X = np.asarray(X, dtype=np.float64)
    return cd_lasso_numpy(X, Z, float(lam), float(tol), int(max_sweeps), beta0)
