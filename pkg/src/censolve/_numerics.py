"""Compiled inner loops: Gauss-Seidel sweeps, residuals, explicit steps.

Everything here works on plain float64 arrays; the dataclass layer lives in
stationary.py / parabolic.py.  All kernels are deterministic (no parallelism,
no fastmath) so repeated runs are bit-identical.
"""

import numpy as np
from numba import njit

BISECT_WIDTH = 1e-12


@njit(cache=True)
def upwind_power(s, uL, uR, h, m, hasL, hasR):
    """max of positive one-sided slopes at value s, raised to power m."""
    p = 0.0
    if hasL:
        q = (s - uL) / h
        if q > p:
            p = q
    if hasR:
        q = (s - uR) / h
        if q > p:
            p = q
    if p <= 0.0:
        return 0.0
    return p ** m


@njit(cache=True)
def scalar_solve(i, u, w_row, rowsum, lam, b_i, m, h, f_i, n):
    """Root of s -> (lam+rowsum)*s - sum_j w_ij u_j + b_i*H_i(s) - f_i.

    The map is strictly increasing whenever lam + rowsum > 0; the bracket is
    grown geometrically from the current iterate, then bisected to 1e-12.
    Returns NaN if no bracket is found (the scalar equation has no root).
    """
    acc = 0.0
    for j in range(n + 1):
        acc += w_row[j] * u[j]
    hasL = i > 0
    hasR = i < n
    uL = u[i - 1] if hasL else 0.0
    uR = u[i + 1] if hasR else 0.0
    diag = lam + rowsum

    lo = u[i]
    hi = u[i]
    g_lo = diag * lo - acc + b_i * upwind_power(lo, uL, uR, h, m, hasL, hasR) - f_i
    step = 1.0
    k = 0
    if g_lo > 0.0:
        while g_lo > 0.0 and k < 200:
            lo -= step
            step *= 2.0
            g_lo = diag * lo - acc + b_i * upwind_power(lo, uL, uR, h, m, hasL, hasR) - f_i
            k += 1
        if g_lo > 0.0:
            return np.nan
    else:
        bracketed = False
        while k < 200:
            g_hi = diag * hi - acc + b_i * upwind_power(hi, uL, uR, h, m, hasL, hasR) - f_i
            if g_hi >= 0.0:
                bracketed = True
                break
            hi += step
            step *= 2.0
            k += 1
        if not bracketed:
            return np.nan
    while hi - lo > BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        g_mid = diag * mid - acc + b_i * upwind_power(mid, uL, uR, h, m, hasL, hasR) - f_i
        if g_mid < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def gs_iteration(u, w, rowsums, lam, b, m, h, f, dirichlet, phi0, phiN):
    """One ascending plus one descending sweep in place; returns sup |update|."""
    n = u.size - 1
    sup = 0.0
    for sweep in range(2):
        start, stop, stride = (0, n + 1, 1) if sweep == 0 else (n, -1, -1)
        for i in range(start, stop, stride):
            s = scalar_solve(i, u, w[i], rowsums[i], lam, b[i], m, h, f[i], n)
            if np.isnan(s):
                return np.nan
            if dirichlet and (i == 0 or i == n):
                phi_b = phi0 if i == 0 else phiN
                if phi_b < s:
                    s = phi_b
            d = abs(s - u[i])
            if d > sup:
                sup = d
            u[i] = s
    return sup


@njit(cache=True)
def residual_vector(u, w, rowsums, lam, b, m, h, f):
    """Scheme residual lam*u - I_h(u) + b*H(u) - f at every node (own rows).

    The nonlocal part is accumulated in difference form so constant fields
    give exactly zero.
    """
    n = u.size - 1
    r = np.empty(n + 1)
    for i in range(n + 1):
        acc = 0.0
        for j in range(n + 1):
            acc += w[i, j] * (u[j] - u[i])
        hasL = i > 0
        hasR = i < n
        uL = u[i - 1] if hasL else 0.0
        uR = u[i + 1] if hasR else 0.0
        r[i] = (lam * u[i] - acc
                + b[i] * upwind_power(u[i], uL, uR, h, m, hasL, hasR) - f[i])
    return r


@njit(cache=True)
def cfl_denominator(u, rowsums, lam, b, m, h):
    """max_i of lam + W_i + b_i*m*P_i^(m-1)*2/h with P_i the local slope bound.

    For m < 1 the derivative bound blows up as P -> 0; the slope is floored
    at h there so the step size stays usable (sub-cell slopes cannot matter).
    """
    n = u.size - 1
    worst = 0.0
    for i in range(n + 1):
        p = 0.0
        if i > 0:
            q = abs(u[i] - u[i - 1]) / h
            if q > p:
                p = q
        if i < n:
            q = abs(u[i] - u[i + 1]) / h
            if q > p:
                p = q
        term = lam + rowsums[i]
        if m >= 1.0:
            if p > 0.0 or m == 1.0:
                term += b[i] * m * p ** (m - 1.0) * 2.0 / h
        else:
            pe = p if p > h else h
            term += b[i] * m * pe ** (m - 1.0) * 2.0 / h
        if term > worst:
            worst = term
    return worst


@njit(cache=True)
def explicit_update(u, w, rowsums, lam, b, m, h, f, dt):
    """One forward-Euler step of u_t = I_h(u) - lam*u - b*H(u) + f at all nodes.

    Difference-form accumulation keeps constant profiles exact fixed points
    when f balances the zeroth-order term.
    """
    n = u.size - 1
    out = np.empty(n + 1)
    for i in range(n + 1):
        acc = 0.0
        for j in range(n + 1):
            acc += w[i, j] * (u[j] - u[i])
        hasL = i > 0
        hasR = i < n
        uL = u[i - 1] if hasL else 0.0
        uR = u[i + 1] if hasR else 0.0
        ham = b[i] * upwind_power(u[i], uL, uR, h, m, hasL, hasR)
        out[i] = u[i] + dt * (acc - lam * u[i] - ham + f[i])
    return out
