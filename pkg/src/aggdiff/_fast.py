"""Numba-compiled hot loops: particle integrator windows and FV oracle stepping.

Dispatch is by small integer codes so the kernels stay cacheable:
kernel 0=zero 1=two_yukawa(p) 2=gaussian_bump; mobility 0=constant
1=linear_cutoff(sbar) 2=rational; family 0=log 1=power(m). Only closed-form
phi_v combinations are compiled; anything else takes the numpy path in
``scheme``. fastmath stays off: summation order (ascending j per particle) is
part of the determinism contract.
"""

from __future__ import annotations

import numpy as np
from numba import njit

FAULT_NONE = 0
FAULT_FLIP_G = 1
FAULT_NO_MIN_IMAGE = 2

_JIT = dict(cache=True, nogil=True, fastmath=False)


@njit(**_JIT)
def _kprime(code: int, p: float, d: float) -> float:
    if code == 1:
        ad = -abs(d)
        u = np.exp(ad)
        ub = u * u if p == 2.0 else np.exp(p * ad)
        mag = p * p * p * ub - u
        return mag if d > 0.0 else -mag
    elif code == 2:
        return -d * np.exp(-0.5 * d * d)
    return 0.0


@njit(**_JIT)
def _vmob(code: int, sbar: float, s: float) -> float:
    if code == 0:
        return 1.0
    if code == 1:
        r = 1.0 - s / sbar
        return r if r > 0.0 else 0.0
    return 1.0 / (1.0 + s)


@njit(**_JIT)
def _pow(s: float, m: float) -> float:
    # m in {1, 2, 3} covers the acceptance paths; pow() costs far more
    if m == 1.0:
        return s
    if m == 2.0:
        return s * s
    if m == 3.0:
        return s * s * s
    return s**m


@njit(**_JIT)
def _phiv(fam: int, m: float, mob: int, sbar: float, s: float) -> float:
    if fam == 0:
        if mob == 0:
            return s
        if mob == 1:
            if s <= sbar:
                return s - s * s / (2.0 * sbar)
            return 0.5 * sbar
        return np.log1p(s)
    if mob == 0:
        return _pow(s, m)
    if mob == 1:
        if s <= sbar:
            return _pow(s, m) - m * _pow(s, m + 1.0) / ((m + 1.0) * sbar)
        return _pow(sbar, m) / (m + 1.0)
    return 2.0 * (s - np.log1p(s))  # power family + rational mobility (m == 2)


@njit(**_JIT)
def _phiv_prime(fam: int, m: float, mob: int, sbar: float, s: float) -> float:
    w = 1.0 if fam == 0 else m * _pow(s, m - 1.0)
    return w * _vmob(mob, sbar, s)


@njit(**_JIT)
def _velocities(
    x, L, cL, kern, kp, mob, mp, fam, fm, fault, rho, vel
) -> int:
    """Particle ODE right-hand side; returns 1 when a gap is nonpositive."""
    N = x.shape[0]
    for k in range(N - 1):
        g = x[k + 1] - x[k]
        if g <= 0.0:
            return 1
        rho[k] = cL / (N * g)
    gw = x[0] + L - x[N - 1]
    if gw <= 0.0:
        return 1
    rho[N - 1] = cL / (N * gw)

    halfL = 0.5 * L
    base = -halfL
    for k in range(N):
        acc = 0.0
        if kern != 0:
            if fault == FAULT_NO_MIN_IMAGE:
                xk = x[k] - L * np.floor((x[k] - base) / L)
                for j in range(N):
                    xj = x[j] - L * np.floor((x[j] - base) / L)
                    d = xk - xj
                    if d != 0.0:
                        acc += _kprime(kern, kp, d)
            else:
                xk = x[k]
                for j in range(N):
                    d = xk - x[j]
                    if d > halfL:
                        d -= L
                    elif d <= -halfL:
                        d += L
                    if d != 0.0:
                        acc += _kprime(kern, kp, d)
        rk = rho[k]
        rkm = rho[k - 1] if k > 0 else rho[N - 1]
        vk = min(_vmob(mob, mp, rk), _vmob(mob, mp, rkm))
        gk = _phiv(fam, fm, mob, mp, rk) - _phiv(fam, fm, mob, mp, rkm)
        if fault == FAULT_FLIP_G:
            gk = -gk
        vel[k] = -(cL / N) * vk * acc - (N / cL) * gk
    return 0


@njit(**_JIT)
def _advance(
    x,
    t: float,
    t_target: float,
    dt: float,
    dt_max: float,
    safety: float,
    gap_min: float,
    dt_floor: float,
    streak: int,
    L: float,
    cL: float,
    kern: int,
    kp: float,
    mob: int,
    mp: float,
    fam: int,
    fm: float,
    fault: int,
    log,
    log_n: int,
):
    """Advance in place to t_target. Status: 0 done, 1 step too small, 2 log full."""
    N = x.shape[0]
    k1 = np.empty(N)
    k2 = np.empty(N)
    k3 = np.empty(N)
    k4 = np.empty(N)
    xs = np.empty(N)
    xc = np.empty(N)
    rho = np.empty(N)
    while t < t_target:
        if log_n >= log.shape[0]:
            return t, dt, streak, log_n, 2
        landing = t_target - t <= dt
        dt_step = t_target - t if landing else dt
        ok = _velocities(x, L, cL, kern, kp, mob, mp, fam, fm, fault, rho, k1) == 0
        if ok:
            for i in range(N):
                xs[i] = x[i] + 0.5 * dt_step * k1[i]
            ok = _velocities(xs, L, cL, kern, kp, mob, mp, fam, fm, fault, rho, k2) == 0
        if ok:
            for i in range(N):
                xs[i] = x[i] + 0.5 * dt_step * k2[i]
            ok = _velocities(xs, L, cL, kern, kp, mob, mp, fam, fm, fault, rho, k3) == 0
        if ok:
            for i in range(N):
                xs[i] = x[i] + dt_step * k3[i]
            ok = _velocities(xs, L, cL, kern, kp, mob, mp, fam, fm, fault, rho, k4) == 0
        if ok:
            for i in range(N):
                xc[i] = x[i] + (dt_step / 6.0) * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
            for i in range(N - 1):
                if xc[i + 1] - xc[i] <= gap_min:
                    ok = False
                    break
            if ok and xc[0] + L - xc[N - 1] <= gap_min:
                ok = False
        log[log_n, 0] = t
        log[log_n, 1] = dt_step
        log[log_n, 2] = 0.0 if ok else 1.0
        log_n += 1
        if not ok:
            dt = 0.5 * dt
            streak = 0
            if dt < dt_floor:
                return t, dt, streak, log_n, 1
            continue
        for i in range(N):
            x[i] = xc[i]
        t = t_target if landing else t + dt_step
        streak += 1
        if streak >= 20:
            streak = 0
            min_gap = x[0] + L - x[N - 1]
            for i in range(N - 1):
                g = x[i + 1] - x[i]
                if g < min_gap:
                    min_gap = g
            max_pp = 0.0
            for i in range(N - 1):
                rho[i] = cL / (N * (x[i + 1] - x[i]))
            rho[N - 1] = cL / (N * (x[0] + L - x[N - 1]))
            for i in range(N):
                pp = _phiv_prime(fam, fm, mob, mp, rho[i])
                if pp > max_pp:
                    max_pp = pp
            dt_new = 2.0 * dt
            if dt_new > dt_max:
                dt_new = dt_max
            if max_pp > 0.0:
                heur = safety * min_gap * min_gap / max_pp
                if dt_new > heur:
                    dt_new = heur
            dt = dt_new
            if dt < dt_floor:
                return t, dt, streak, log_n, 1
    return t, dt, streak, log_n, 0


# ---------------------------------------------------------------------------
# finite-volume oracle


@njit(**_JIT)
def _fv_rhs(rho, dx, use_kernel, ktab, mob, mp, fam, fm, phiv_buf, u_buf, out):
    M = rho.shape[0]
    for i in range(M):
        phiv_buf[i] = _phiv(fam, fm, mob, mp, rho[i])
    if use_kernel:
        for i in range(M):
            acc = 0.0
            for j in range(M):
                r = i - j
                if r < 0:
                    r += M
                acc += ktab[r] * rho[j]
            u_buf[i] = -dx * acc
    else:
        for i in range(M):
            u_buf[i] = 0.0
    # flux at interface i+1/2 stored in slot i
    for i in range(M):
        ip = i + 1 if i + 1 < M else 0
        u = u_buf[i]
        rup = rho[i] if u >= 0.0 else rho[ip]
        out[i] = rup * _vmob(mob, mp, rup) * u - (phiv_buf[ip] - phiv_buf[i]) / dx
    return 0


@njit(**_JIT)
def _fv_advance(
    rho,
    t: float,
    t_target: float,
    dx: float,
    safety: float,
    use_kernel,
    ktab,
    mob: int,
    mp: float,
    fam: int,
    fm: float,
):
    """Heun stepping with per-step CFL dt. Status 0 ok, 3 negative density."""
    M = rho.shape[0]
    j1 = np.empty(M)
    j2 = np.empty(M)
    r1 = np.empty(M)
    phiv_buf = np.empty(M)
    u_buf = np.empty(M)
    steps = 0
    while t < t_target:
        _fv_rhs(rho, dx, use_kernel, ktab, mob, mp, fam, fm, phiv_buf, u_buf, j1)
        max_u = 0.0
        for i in range(M):
            au = abs(u_buf[i])
            if au > max_u:
                max_u = au
        max_pp = 0.0
        for i in range(M):
            pp = _phiv_prime(fam, fm, mob, mp, rho[i])
            if pp > max_pp:
                max_pp = pp
        dt = 1e30
        if max_u > 0.0:
            dt = dx / max_u
        if max_pp > 0.0:
            d2 = dx * dx / (2.0 * max_pp)
            if d2 < dt:
                dt = d2
        dt = safety * dt
        if dt >= 1e29:
            # no transport and no diffusion anywhere: state is stationary
            t = t_target
            break
        landing = t_target - t <= dt
        if landing:
            dt = t_target - t
        for i in range(M):
            im = i - 1 if i > 0 else M - 1
            r1[i] = rho[i] - (dt / dx) * (j1[i] - j1[im])
        _fv_rhs(r1, dx, use_kernel, ktab, mob, mp, fam, fm, phiv_buf, u_buf, j2)
        neg = False
        for i in range(M):
            im = i - 1 if i > 0 else M - 1
            rho[i] = rho[i] - (0.5 * dt / dx) * ((j1[i] - j1[im]) + (j2[i] - j2[im]))
            if rho[i] < -1e-12:
                neg = True
        steps += 1
        t = t_target if landing else t + dt
        if neg:
            return t, steps, 3
    return t, steps, 0
