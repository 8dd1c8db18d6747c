"""Compiled inner loops for long solver runs.

The generic solver in :mod:`barrierfw.solver` recomputes everything per
iteration and records a full trace; these kernels instead maintain the
barrier argument, the weight/argument ratios, and the objective
incrementally, and fold the per-iteration inequality checks into streaming
accumulators so that multi-million-iteration runs need neither Python-level
work nor O(iterations) memory.  Objectives accumulate through Neumaier
compensation and are resynchronized from scratch on a fixed cadence, which
keeps per-step decrements accurate at the rounding floor of one evaluation.

Check accumulator layout (float64[16]), shared by both solvers:

    0  max over steps of -(F_k - F_{k+1})          monotonicity, want <= 0
    1  min over rows of G_k                         want >= 0
    2  max of D - (G + theta + R_h + 1e-9 (1+G))    want <= 0
    3  count of rows with G > theta + R_h
    4  max of (1/M - 1e-9) - (1/d_{k+1} - 1/d_k)    over G <= theta+R_h steps
    5  length of the extracted small-gap subsequence
    6  first delta of that subsequence
    7  max of d_j - M / (j + M/d_0) over it         want <= ~0
    8  max over j>=1 of min(g_0..g_j) - 2M/j        want < 0
    9  max of d_{j+1} - (d_j - g_j^2 / M)           hypothesis slack, want <= ~0
    10 max of d_j - g_j                             hypothesis slack, want <= ~0
    11 min delta seen (diagnostic)
    12 F at k = 0
    13 delta at k = 0 (nan without a reference)
    14 iterations during which the x*(c - c_min) sum was renormalized (unused)
    15 unused
"""

from __future__ import annotations

import numpy as np
from numba import njit

NEG = -1.0e300

STATUS_MAX_ITER = 0
STATUS_TARGETS = 1


@njit(cache=True, nogil=True, fastmath=False)
def _neg_wlog_sum(w, u):
    # -sum w_j ln u_j with Neumaier compensation
    s = 0.0
    comp = 0.0
    for j in range(u.shape[0]):
        term = -w[j] * np.log(u[j])
        t = s + term
        if abs(s) >= abs(term):
            comp += (s - t) + term
        else:
            comp += (term - t) + s
        s = t
    return s + comp


@njit(cache=True, nogil=True, fastmath=False)
def fw_simplex_weightedlog(
    a_indptr, a_indices, a_data,       # A in CSR, m rows of length-n support
    at_indptr, at_indices, at_data,    # A^T in CSR, n rows over m columns
    w,                                 # barrier weights, length m
    z0,                                # simplex start, length n
    f_ref,                             # certified reference objective, or nan
    theta, r_h,
    eps_gap,                           # track/stop at first G <= eps_gap (<=0 disables)
    eps_delta,                         # track/stop at first delta <= eps_delta (<=0 disables)
    max_iter,
    checks,
):
    """Adaptive-step Frank-Wolfe on min -sum w ln((Az)_j) over the simplex."""
    m = w.shape[0]
    n = z0.shape[0]
    z = z0.copy()
    u = np.zeros(m)
    for j in range(m):
        acc = 0.0
        for t in range(a_indptr[j], a_indptr[j + 1]):
            acc += a_data[t] * z[a_indices[t]]
        u[j] = acc
    r = w / u                          # maintained ratio w_j / u_j
    c = np.zeros(n)

    row_wsum = np.zeros(n)             # sum of w over the support of each A column
    for i in range(n):
        acc = 0.0
        for t in range(at_indptr[i], at_indptr[i + 1]):
            acc += w[at_indices[t]]
        row_wsum[i] = acc

    big_gap = theta + r_h
    mcap = 12.0 * big_gap * big_gap
    have_ref = np.isfinite(f_ref)

    for q in range(16):
        checks[q] = NEG
    checks[1] = 1.0e300
    checks[3] = 0.0
    checks[5] = 0.0
    checks[6] = np.nan
    checks[11] = 1.0e300
    checks[13] = np.nan
    checks[14] = 0.0

    F = _neg_wlog_sum(w, u)
    checks[12] = F
    if have_ref:
        checks[13] = F - f_ref

    first_gap_k = -1
    first_delta_k = -1
    prev_small_d = np.nan
    prev_small_g = np.nan
    min_small_g = 1.0e300
    status = STATUS_MAX_ITER
    k_final = 0
    G = 0.0
    D = 0.0

    for k in range(max_iter + 1):
        # cost vector c_i = <a_i-column, grad f(u)> through the ratio array
        imin = 0
        cmin = 1.0e300
        for i in range(n):
            acc = 0.0
            for t in range(at_indptr[i], at_indptr[i + 1]):
                acc += at_data[t] * r[at_indices[t]]
            ci = -acc
            c[i] = ci
            if ci < cmin:
                cmin = ci
                imin = i

        # G = <c, z> - min c as a sum of nonnegative terms
        G = 0.0
        for i in range(n):
            G += z[i] * (c[i] - cmin)

        # D^2 = sum_j w_j ((A e_i)_j / u_j - 1)^2, split into on/off support
        d2 = theta - row_wsum[imin]
        for t in range(at_indptr[imin], at_indptr[imin + 1]):
            j = at_indices[t]
            ratio = at_data[t] / u[j]
            d2 += w[j] * (ratio - 1.0) * (ratio - 1.0)
        if d2 < 0.0:
            d2 = 0.0
        D = np.sqrt(d2)

        delta = np.nan
        if have_ref:
            delta = F - f_ref
            if delta < checks[11]:
                checks[11] = delta

        if G < checks[1]:
            checks[1] = G
        slack = D - (G + big_gap + 1e-9 * (1.0 + G))
        if slack > checks[2]:
            checks[2] = slack
        if G > big_gap:
            checks[3] += 1.0

        if first_gap_k < 0 and eps_gap > 0.0 and G <= eps_gap:
            first_gap_k = k
        if first_delta_k < 0 and eps_delta > 0.0 and have_ref and delta <= eps_delta:
            first_delta_k = k

        any_target = eps_gap > 0.0 or eps_delta > 0.0
        gap_done = eps_gap <= 0.0 or first_gap_k >= 0
        delta_done = eps_delta <= 0.0 or first_delta_k >= 0
        k_final = k
        if any_target and gap_done and delta_done:
            status = STATUS_TARGETS
            break
        if k == max_iter:
            status = STATUS_MAX_ITER
            break

        # small-gap bookkeeping for the sequence decay estimate
        if have_ref and G <= big_gap:
            j_idx = checks[5]
            if j_idx == 0.0:
                checks[6] = delta
            d0 = checks[6]
            if d0 > 0.0:
                bound = mcap / (j_idx + mcap / d0)
            else:
                bound = 0.0
            if delta - bound > checks[7]:
                checks[7] = delta - bound
            if delta - G > checks[10]:
                checks[10] = delta - G
            if G < min_small_g:
                min_small_g = G
            if j_idx >= 1.0:
                gbound = min_small_g - 2.0 * mcap / j_idx
                if gbound > checks[8]:
                    checks[8] = gbound
            if j_idx >= 1.0:
                hyp = delta - (prev_small_d - prev_small_g * prev_small_g / mcap)
                if hyp > checks[9]:
                    checks[9] = hyp
            prev_small_d = delta
            prev_small_g = G
            checks[5] = j_idx + 1.0

        # adaptive step
        if D <= 0.0:
            alpha = 1.0
        else:
            alpha = G / (D * (G + D))
            if alpha > 1.0:
                alpha = 1.0
        one_minus = 1.0 - alpha

        # objective decrement F_k - F_{k+1} in closed form along the direction:
        # dec = sum_j w_j ln(u'_j / u_j), split into on/off support of the vertex
        dec = (theta - row_wsum[imin]) * np.log(one_minus)
        for t in range(at_indptr[imin], at_indptr[imin + 1]):
            j = at_indices[t]
            dec += w[j] * np.log(one_minus + alpha * at_data[t] / u[j])
        if -dec > checks[0]:
            checks[0] = -dec

        small_gap_step = have_ref and G <= big_gap
        delta_before = F - f_ref if have_ref else np.nan

        F -= dec
        for j in range(m):
            u[j] *= one_minus
            r[j] /= one_minus
        for t in range(at_indptr[imin], at_indptr[imin + 1]):
            j = at_indices[t]
            u[j] += alpha * at_data[t]
            r[j] = w[j] / u[j]
        for i in range(n):
            z[i] *= one_minus
        z[imin] += alpha

        if (k + 1) % 4096 == 0:
            F = _neg_wlog_sum(w, u)
            for j in range(m):
                r[j] = w[j] / u[j]

        if small_gap_step:
            delta_after = F - f_ref
            inc = 1.0 / delta_after - 1.0 / delta_before
            short = (1.0 / mcap - 1e-9) - inc
            if short > checks[4]:
                checks[4] = short

    return status, k_final, F, G, D, first_gap_k, first_delta_k, z


@njit(cache=True, nogil=True, fastmath=False)
def em_simplex_weightedlog(
    a_indptr, a_indices, a_data,
    at_indptr, at_indices, at_data,
    w, z0, iters,
):
    """Multiplicative-update iterations z <- z * (A^T (w/u)) / theta."""
    m = w.shape[0]
    n = z0.shape[0]
    theta = 0.0
    for j in range(m):
        theta += w[j]
    z = z0.copy()
    u = np.zeros(m)
    for _ in range(iters):
        for j in range(m):
            acc = 0.0
            for t in range(a_indptr[j], a_indptr[j + 1]):
                acc += a_data[t] * z[a_indices[t]]
            u[j] = acc
        for j in range(m):
            u[j] = w[j] / u[j]
        total = 0.0
        for i in range(n):
            acc = 0.0
            for t in range(at_indptr[i], at_indptr[i + 1]):
                acc += at_data[t] * u[at_indices[t]]
            z[i] *= acc / theta
            total += z[i]
        for i in range(n):
            z[i] /= total
    return z


@njit(cache=True, nogil=True, fastmath=False)
def _dopt_refactor(C, x, B, qdiag):
    """Dense recomputation of B = (C diag(x) C^T)^{-1} and q_i = a_i^T B a_i."""
    n = C.shape[0]
    m = C.shape[1]
    M = np.zeros((n, n))
    for i in range(m):
        xi = x[i]
        if xi != 0.0:
            for p in range(n):
                cpi = xi * C[p, i]
                for q in range(n):
                    M[p, q] += cpi * C[q, i]
    Bnew = np.linalg.inv(M)
    for p in range(n):
        for q in range(n):
            B[p, q] = 0.5 * (Bnew[p, q] + Bnew[q, p])
    for i in range(m):
        acc = 0.0
        for p in range(n):
            row = 0.0
            for q in range(n):
                row += B[p, q] * C[q, i]
            acc += C[p, i] * row
        qdiag[i] = acc
    sign, logdet = np.linalg.slogdet(M)
    return -logdet if sign > 0.0 else np.nan


@njit(cache=True, nogil=True, fastmath=False)
def dopt_multiplicative(C, x0, iters):
    """Fixed-point iteration x <- x * q(x) / n for the log-det design objective."""
    n = C.shape[0]
    m = C.shape[1]
    x = x0.copy()
    B = np.zeros((n, n))
    qdiag = np.zeros(m)
    for _ in range(iters):
        _dopt_refactor(C, x, B, qdiag)
        total = 0.0
        for i in range(m):
            x[i] *= qdiag[i] / n
            total += x[i]
        for i in range(m):
            x[i] /= total
    return x


@njit(cache=True, nogil=True, fastmath=False)
def dopt_fw_adaptive(
    C,                                  # n-by-m point matrix
    x0,                                 # simplex start, length m
    f_ref, eps_gap, eps_delta, max_iter,
    refactor_every,
    checks,
):
    """Adaptive-step Frank-Wolfe on the log-det design objective.

    Maintains the inverse information matrix and the full diagonal of
    Q = C^T B C through rank-one updates (O(n^2 + mn) per iteration) with a
    dense refactorization on a fixed cadence.  Check accumulators follow the
    module-level layout; R_h is zero on the simplex.
    """
    n = C.shape[0]
    m = C.shape[1]
    x = x0.copy()
    B = np.zeros((n, n))
    qdiag = np.zeros(m)
    F = _dopt_refactor(C, x, B, qdiag)

    theta = float(n)
    big_gap = theta
    mcap = 12.0 * theta * theta
    have_ref = np.isfinite(f_ref)

    for q in range(16):
        checks[q] = NEG
    checks[1] = 1.0e300
    checks[3] = 0.0
    checks[5] = 0.0
    checks[6] = np.nan
    checks[11] = 1.0e300
    checks[13] = np.nan
    checks[14] = 0.0
    checks[12] = F
    if have_ref:
        checks[13] = F - f_ref

    w = np.zeros(n)
    s = np.zeros(m)
    first_gap_k = -1
    first_delta_k = -1
    prev_small_d = np.nan
    prev_small_g = np.nan
    min_small_g = 1.0e300
    status = STATUS_MAX_ITER
    k_final = 0
    G = 0.0
    D = 0.0
    since_refactor = 0

    for k in range(max_iter + 1):
        imax = 0
        qmax = NEG
        mean = 0.0
        for i in range(m):
            qi = qdiag[i]
            if qi > qmax:
                qmax = qi
                imax = i
            mean += x[i] * qi
        G = 0.0
        for i in range(m):
            G += x[i] * (qmax - qdiag[i])
        d2 = theta - 2.0 * qmax + qmax * qmax
        if d2 < 0.0:
            d2 = 0.0
        D = np.sqrt(d2)

        delta = np.nan
        if have_ref:
            delta = F - f_ref
            if delta < checks[11]:
                checks[11] = delta

        if G < checks[1]:
            checks[1] = G
        slack = D - (G + big_gap + 1e-9 * (1.0 + G))
        if slack > checks[2]:
            checks[2] = slack
        if G > big_gap:
            checks[3] += 1.0

        if first_gap_k < 0 and eps_gap > 0.0 and G <= eps_gap:
            first_gap_k = k
        if first_delta_k < 0 and eps_delta > 0.0 and have_ref and delta <= eps_delta:
            first_delta_k = k

        any_target = eps_gap > 0.0 or eps_delta > 0.0
        gap_done = eps_gap <= 0.0 or first_gap_k >= 0
        delta_done = eps_delta <= 0.0 or first_delta_k >= 0
        k_final = k
        if any_target and gap_done and delta_done:
            status = STATUS_TARGETS
            break
        if k == max_iter:
            status = STATUS_MAX_ITER
            break

        if have_ref and G <= big_gap:
            j_idx = checks[5]
            if j_idx == 0.0:
                checks[6] = delta
            d0 = checks[6]
            if d0 > 0.0:
                bound = mcap / (j_idx + mcap / d0)
            else:
                bound = 0.0
            if delta - bound > checks[7]:
                checks[7] = delta - bound
            if delta - G > checks[10]:
                checks[10] = delta - G
            if G < min_small_g:
                min_small_g = G
            if j_idx >= 1.0:
                gbound = min_small_g - 2.0 * mcap / j_idx
                if gbound > checks[8]:
                    checks[8] = gbound
                hyp = delta - (prev_small_d - prev_small_g * prev_small_g / mcap)
                if hyp > checks[9]:
                    checks[9] = hyp
            prev_small_d = delta
            prev_small_g = G
            checks[5] = j_idx + 1.0

        if D <= 0.0:
            alpha = 1.0
        else:
            alpha = G / (D * (G + D))
            if alpha > 1.0:
                alpha = 1.0
        if alpha >= 1.0:
            # a vertex is outside the objective domain for n >= 2
            alpha = 1.0 - 1e-12
        one_minus = 1.0 - alpha
        beta = alpha / one_minus

        small_gap_step = have_ref and G <= big_gap
        delta_before = F - f_ref if have_ref else np.nan

        # -lndet((1-a) M + a aa^T) = -lndet M - n ln(1-a) - ln(1 + beta q)
        dec = theta * np.log(one_minus) + np.log(1.0 + beta * qmax)
        if -dec > checks[0]:
            checks[0] = -dec
        F -= dec

        # rank-one inverse update: w = B a, s = C^T w
        for p in range(n):
            acc = 0.0
            for q in range(n):
                acc += B[p, q] * C[q, imax]
            w[p] = acc
        for i in range(m):
            acc = 0.0
            for p in range(n):
                acc += C[p, i] * w[p]
            s[i] = acc
        denom = 1.0 / beta + qmax
        for i in range(m):
            qdiag[i] = (qdiag[i] - s[i] * s[i] / denom) / one_minus
        coef = (beta / (1.0 + beta * qmax)) / one_minus
        for p in range(n):
            wp = w[p]
            for q in range(n):
                B[p, q] = B[p, q] / one_minus - coef * wp * w[q]
        for i in range(m):
            x[i] *= one_minus
        x[imax] += alpha

        since_refactor += 1
        lost_pd = qdiag[imax] <= 0.0
        if since_refactor >= refactor_every or lost_pd:
            F = _dopt_refactor(C, x, B, qdiag)
            since_refactor = 0

        if small_gap_step:
            delta_after = F - f_ref
            inc = 1.0 / delta_after - 1.0 / delta_before
            short = (1.0 / mcap - 1e-9) - inc
            if short > checks[4]:
                checks[4] = short

    return status, k_final, F, G, D, first_gap_k, first_delta_k, x
