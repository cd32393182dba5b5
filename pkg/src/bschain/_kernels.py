"""Hot numerical loops, each with a numba twin and a pure-numpy twin.

The numba versions are loop-oriented and compiled with ``cache=True``/
``nogil=True``; the numpy versions are vectorized. Dispatch follows
:mod:`bschain.accel`. Twins implement identical arithmetic (the test suite
pins their agreement, ``bschain.bench`` compares their speed).

Chain states inside the event loop live in the half spectrum of the real
configuration: ``spec[k] = sum_x eta(x) exp(-2i pi k x / n)`` for
k = 0..n//2. The shear flow is a per-mode phase rotation with angular
speed ``omega[k] = 2 a sin(2 pi k / n)``; a swap at bond b is a rank-two
update using the tables ``pos[k, x] = exp(+2i pi k x / n)`` and
``neg = conj(pos)``. Mode 0 is never touched by swaps, so the total
volume is conserved exactly; the flow multiplies every mode by a unit
phase, so the energy drifts only by rounding.
"""

from __future__ import annotations

import math

import numpy as np

from .accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# event loop (exact event-driven scheme; also reused by the split scheme)
# ---------------------------------------------------------------------------


def _event_loop_np(spec, pos, neg, omega, has_flow, ev_times, bonds, sched, t_start, out):
    n = pos.shape[1]
    half = spec.shape[0]
    even = n % 2 == 0
    kd = half - 1 if even else half  # doubled modes are 1..kd-1
    t = t_start
    js = 0
    je = 0
    n_ev = ev_times.shape[0]
    n_s = sched.shape[0]
    while js < n_s:
        if je < n_ev and ev_times[je] < sched[js]:
            tau = ev_times[je] - t
            if has_flow and tau > 0.0:
                spec *= np.exp((1j * tau) * omega)
            t = ev_times[je]
            b = int(bonds[je])
            bp = b + 1
            if bp == n:
                bp = 0
            core = spec[1:kd]
            ea = spec[0].real + 2.0 * np.real(core @ pos[1:kd, b])
            eb = spec[0].real + 2.0 * np.real(core @ pos[1:kd, bp])
            if even:
                ea += spec[half - 1].real * pos[half - 1, b].real
                eb += spec[half - 1].real * pos[half - 1, bp].real
            delta = (eb - ea) / n
            spec[1:] += delta * (neg[1:, b] - neg[1:, bp])
            je += 1
        else:
            tau = sched[js] - t
            if has_flow and tau > 0.0:
                spec *= np.exp((1j * tau) * omega)
            t = sched[js]
            out[js, :] = spec
            js += 1


def _event_loop_loops(spec, pos, neg, omega, has_flow, ev_times, bonds, sched, t_start, out):
    n = pos.shape[1]
    half = spec.shape[0]
    even = n % 2 == 0
    kd = half - 1 if even else half
    t = t_start
    js = 0
    je = 0
    n_ev = ev_times.shape[0]
    n_s = sched.shape[0]
    while js < n_s:
        if je < n_ev and ev_times[je] < sched[js]:
            tau = ev_times[je] - t
            if has_flow and tau > 0.0:
                for k in range(1, half):
                    th = omega[k] * tau
                    spec[k] = spec[k] * complex(math.cos(th), math.sin(th))
            t = ev_times[je]
            b = int(bonds[je])
            bp = b + 1
            if bp == n:
                bp = 0
            ea = spec[0].real
            eb = spec[0].real
            for k in range(1, kd):
                fr = spec[k].real
                fi = spec[k].imag
                pa = pos[k, b]
                pb = pos[k, bp]
                ea += 2.0 * (fr * pa.real - fi * pa.imag)
                eb += 2.0 * (fr * pb.real - fi * pb.imag)
            if even:
                ke = half - 1
                ea += spec[ke].real * pos[ke, b].real
                eb += spec[ke].real * pos[ke, bp].real
            delta = (eb - ea) / n
            for k in range(1, half):
                spec[k] = spec[k] + delta * (neg[k, b] - neg[k, bp])
            je += 1
        else:
            tau = sched[js] - t
            if has_flow and tau > 0.0:
                for k in range(1, half):
                    th = omega[k] * tau
                    spec[k] = spec[k] * complex(math.cos(th), math.sin(th))
            t = sched[js]
            for k in range(half):
                out[js, k] = spec[k]
            js += 1


_event_loop_nb = njit(_event_loop_loops)


def run_event_loop(spec, pos, neg, omega, has_flow, ev_times, bonds, sched, t_start, out):
    fn = _event_loop_nb if USE_NUMBA else _event_loop_np
    fn(spec, pos, neg, omega, has_flow, ev_times, bonds, sched, t_start, out)


# ---------------------------------------------------------------------------
# first/second moment system on (v, S), S(x, y) = E[eta(x) eta(y)]
# ---------------------------------------------------------------------------


def _rhs_vs_np(v, S, ip, im, n2, al, dv, dS):
    a2 = al * n2
    vp = v[ip]
    vm = v[im]
    dv[:] = n2 * (vp + vm - 2.0 * v) + a2 * (vp - vm)
    Sxp = S[ip, :]
    Sxm = S[im, :]
    Syp = S[:, ip]
    Sym = S[:, im]
    dS[:, :] = n2 * (Sxp + Sxm + Syp + Sym - 4.0 * S) + a2 * ((Sxp + Syp) - (Sxm + Sym))
    n = v.shape[0]
    x = np.arange(n)
    xp = ip
    xm = im
    xpp = ip[ip]
    d1 = (
        n2 * (S[xm, xp] + S[x, xpp] - 2.0 * S[x, xp])
        + a2 * (S[xp, xp] + S[x, xpp] - S[xm, xp] - S[x, x])
    )
    dS[x, xp] = d1
    dS[xp, x] = d1
    dS[x, x] = n2 * (S[xp, xp] + S[xm, xm] - 2.0 * S[x, x]) + 2.0 * a2 * (S[x, xp] - S[xm, x])


def _rhs_vs_loops(v, S, ip, im, n2, al, dv, dS):
    a2 = al * n2
    n = v.shape[0]
    for x in range(n):
        dv[x] = n2 * (v[ip[x]] + v[im[x]] - 2.0 * v[x]) + a2 * (v[ip[x]] - v[im[x]])
    for x in range(n):
        xp = ip[x]
        xm = im[x]
        for y in range(n):
            yp = ip[y]
            ym = im[y]
            dS[x, y] = n2 * (S[xp, y] + S[xm, y] + S[x, yp] + S[x, ym] - 4.0 * S[x, y]) + a2 * (
                (S[xp, y] + S[x, yp]) - (S[xm, y] + S[x, ym])
            )
    for x in range(n):
        xp = ip[x]
        xm = im[x]
        xpp = ip[xp]
        d1 = n2 * (S[xm, xp] + S[x, xpp] - 2.0 * S[x, xp]) + a2 * (
            S[xp, xp] + S[x, xpp] - S[xm, xp] - S[x, x]
        )
        dS[x, xp] = d1
        dS[xp, x] = d1
    for x in range(n):
        xp = ip[x]
        xm = im[x]
        dS[x, x] = n2 * (S[xp, xp] + S[xm, xm] - 2.0 * S[x, x]) + 2.0 * a2 * (S[x, xp] - S[xm, x])


_rhs_vs_nb = njit(_rhs_vs_loops)


def _rk4_vs_np(v, S, ip, im, n2, al, dt, nsteps):
    n = v.shape[0]
    dv1 = np.empty(n)
    dv2 = np.empty(n)
    dv3 = np.empty(n)
    dv4 = np.empty(n)
    dS1 = np.empty((n, n))
    dS2 = np.empty((n, n))
    dS3 = np.empty((n, n))
    dS4 = np.empty((n, n))
    for _ in range(nsteps):
        _rhs_vs_np(v, S, ip, im, n2, al, dv1, dS1)
        _rhs_vs_np(v + (0.5 * dt) * dv1, S + (0.5 * dt) * dS1, ip, im, n2, al, dv2, dS2)
        _rhs_vs_np(v + (0.5 * dt) * dv2, S + (0.5 * dt) * dS2, ip, im, n2, al, dv3, dS3)
        _rhs_vs_np(v + dt * dv3, S + dt * dS3, ip, im, n2, al, dv4, dS4)
        v += (dt / 6.0) * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4)
        S += (dt / 6.0) * (dS1 + 2.0 * dS2 + 2.0 * dS3 + dS4)


def _rk4_vs_loops(v, S, ip, im, n2, al, dt, nsteps):
    n = v.shape[0]
    dv1 = np.empty(n)
    dv2 = np.empty(n)
    dv3 = np.empty(n)
    dv4 = np.empty(n)
    dS1 = np.empty((n, n))
    dS2 = np.empty((n, n))
    dS3 = np.empty((n, n))
    dS4 = np.empty((n, n))
    vt = np.empty(n)
    St = np.empty((n, n))
    for _ in range(nsteps):
        _rhs_vs_nb(v, S, ip, im, n2, al, dv1, dS1)
        for x in range(n):
            vt[x] = v[x] + (0.5 * dt) * dv1[x]
            for y in range(n):
                St[x, y] = S[x, y] + (0.5 * dt) * dS1[x, y]
        _rhs_vs_nb(vt, St, ip, im, n2, al, dv2, dS2)
        for x in range(n):
            vt[x] = v[x] + (0.5 * dt) * dv2[x]
            for y in range(n):
                St[x, y] = S[x, y] + (0.5 * dt) * dS2[x, y]
        _rhs_vs_nb(vt, St, ip, im, n2, al, dv3, dS3)
        for x in range(n):
            vt[x] = v[x] + dt * dv3[x]
            for y in range(n):
                St[x, y] = S[x, y] + dt * dS3[x, y]
        _rhs_vs_nb(vt, St, ip, im, n2, al, dv4, dS4)
        for x in range(n):
            v[x] += (dt / 6.0) * (dv1[x] + 2.0 * dv2[x] + 2.0 * dv3[x] + dv4[x])
            for y in range(n):
                S[x, y] += (dt / 6.0) * (dS1[x, y] + 2.0 * dS2[x, y] + 2.0 * dS3[x, y] + dS4[x, y])


_rk4_vs_nb = njit(_rk4_vs_loops)


def rk4_vs_segment(v, S, ip, im, n2, al, dt, nsteps):
    fn = _rk4_vs_nb if USE_NUMBA else _rk4_vs_np
    fn(v, S, ip, im, n2, al, dt, nsteps)


# ---------------------------------------------------------------------------
# cross-validation system on (v, e, phi): energy profile and off-diagonal
# correlation evolved through the reflected two-dimensional operator
# ---------------------------------------------------------------------------


def _rhs_vep_np(v, e, phi, ip, im, n2, al, dv, de, dphi):
    a2 = al * n2
    n = v.shape[0]
    vp = v[ip]
    vm = v[im]
    dv[:] = n2 * (vp + vm - 2.0 * v) + a2 * (vp - vm)
    x = np.arange(n)
    de[:] = n2 * (e[ip] + e[im] - 2.0 * e) + 2.0 * a2 * (
        phi[x, ip] + v * vp - phi[im, x] - vm * v
    )
    g = a2 * (e[ip] - vp * vp - e + v * v) - (n * (vp - v)) ** 2
    pxp = phi[ip, :]
    pxm = phi[im, :]
    pyp = phi[:, ip]
    pym = phi[:, im]
    dphi[:, :] = n2 * ((1.0 + al) * (pxp + pyp) + (1.0 - al) * (pxm + pym) - 4.0 * phi)
    yp1 = ip
    d1 = n2 * ((1.0 + al) * (phi[x, ip[yp1]] - phi[x, yp1]) + (1.0 - al) * (phi[im, yp1] - phi[x, yp1])) + g
    ym1 = im
    dm1 = (
        n2 * ((1.0 + al) * (phi[ip, ym1] - phi[x, ym1]) + (1.0 - al) * (phi[x, im[ym1]] - phi[x, ym1]))
        + g[im]
    )
    dphi[x, yp1] = d1
    dphi[x, ym1] = dm1
    dphi[x, x] = 0.0


def _rhs_vep_loops(v, e, phi, ip, im, n2, al, dv, de, dphi):
    a2 = al * n2
    n = v.shape[0]
    for x in range(n):
        xp = ip[x]
        xm = im[x]
        dv[x] = n2 * (v[xp] + v[xm] - 2.0 * v[x]) + a2 * (v[xp] - v[xm])
        de[x] = n2 * (e[xp] + e[xm] - 2.0 * e[x]) + 2.0 * a2 * (
            phi[x, xp] + v[x] * v[xp] - phi[xm, x] - v[xm] * v[x]
        )
    for x in range(n):
        xp = ip[x]
        xm = im[x]
        for y in range(n):
            r = y - x
            if r < 0:
                r += n
            if r == 0:
                dphi[x, y] = 0.0
            elif r == 1:
                gx = a2 * (e[xp] - v[xp] * v[xp] - e[x] + v[x] * v[x]) - (n * (v[xp] - v[x])) ** 2
                dphi[x, y] = (
                    n2 * ((1.0 + al) * (phi[x, ip[y]] - phi[x, y]) + (1.0 - al) * (phi[xm, y] - phi[x, y]))
                    + gx
                )
            elif r == n - 1:
                gm = a2 * (e[x] - v[x] * v[x] - e[xm] + v[xm] * v[xm]) - (n * (v[x] - v[xm])) ** 2
                dphi[x, y] = (
                    n2 * ((1.0 + al) * (phi[xp, y] - phi[x, y]) + (1.0 - al) * (phi[x, im[y]] - phi[x, y]))
                    + gm
                )
            else:
                dphi[x, y] = n2 * (
                    (1.0 + al) * (phi[xp, y] + phi[x, ip[y]])
                    + (1.0 - al) * (phi[xm, y] + phi[x, im[y]])
                    - 4.0 * phi[x, y]
                )


_rhs_vep_nb = njit(_rhs_vep_loops)


def _rk4_vep_np(v, e, phi, ip, im, n2, al, dt, nsteps):
    n = v.shape[0]
    bufs = [(np.empty(n), np.empty(n), np.empty((n, n))) for _ in range(4)]
    for _ in range(nsteps):
        (dv1, de1, dp1), (dv2, de2, dp2), (dv3, de3, dp3), (dv4, de4, dp4) = bufs
        _rhs_vep_np(v, e, phi, ip, im, n2, al, dv1, de1, dp1)
        _rhs_vep_np(
            v + (0.5 * dt) * dv1, e + (0.5 * dt) * de1, phi + (0.5 * dt) * dp1, ip, im, n2, al, dv2, de2, dp2
        )
        _rhs_vep_np(
            v + (0.5 * dt) * dv2, e + (0.5 * dt) * de2, phi + (0.5 * dt) * dp2, ip, im, n2, al, dv3, de3, dp3
        )
        _rhs_vep_np(v + dt * dv3, e + dt * de3, phi + dt * dp3, ip, im, n2, al, dv4, de4, dp4)
        v += (dt / 6.0) * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4)
        e += (dt / 6.0) * (de1 + 2.0 * de2 + 2.0 * de3 + de4)
        phi += (dt / 6.0) * (dp1 + 2.0 * dp2 + 2.0 * dp3 + dp4)


def _rk4_vep_loops(v, e, phi, ip, im, n2, al, dt, nsteps):
    n = v.shape[0]
    dv1 = np.empty(n)
    de1 = np.empty(n)
    dp1 = np.empty((n, n))
    dv2 = np.empty(n)
    de2 = np.empty(n)
    dp2 = np.empty((n, n))
    dv3 = np.empty(n)
    de3 = np.empty(n)
    dp3 = np.empty((n, n))
    dv4 = np.empty(n)
    de4 = np.empty(n)
    dp4 = np.empty((n, n))
    vt = np.empty(n)
    et = np.empty(n)
    pt = np.empty((n, n))
    for _ in range(nsteps):
        _rhs_vep_nb(v, e, phi, ip, im, n2, al, dv1, de1, dp1)
        for x in range(n):
            vt[x] = v[x] + (0.5 * dt) * dv1[x]
            et[x] = e[x] + (0.5 * dt) * de1[x]
            for y in range(n):
                pt[x, y] = phi[x, y] + (0.5 * dt) * dp1[x, y]
        _rhs_vep_nb(vt, et, pt, ip, im, n2, al, dv2, de2, dp2)
        for x in range(n):
            vt[x] = v[x] + (0.5 * dt) * dv2[x]
            et[x] = e[x] + (0.5 * dt) * de2[x]
            for y in range(n):
                pt[x, y] = phi[x, y] + (0.5 * dt) * dp2[x, y]
        _rhs_vep_nb(vt, et, pt, ip, im, n2, al, dv3, de3, dp3)
        for x in range(n):
            vt[x] = v[x] + dt * dv3[x]
            et[x] = e[x] + dt * de3[x]
            for y in range(n):
                pt[x, y] = phi[x, y] + dt * dp3[x, y]
        _rhs_vep_nb(vt, et, pt, ip, im, n2, al, dv4, de4, dp4)
        for x in range(n):
            v[x] += (dt / 6.0) * (dv1[x] + 2.0 * dv2[x] + 2.0 * dv3[x] + dv4[x])
            e[x] += (dt / 6.0) * (de1[x] + 2.0 * de2[x] + 2.0 * de3[x] + de4[x])
            for y in range(n):
                phi[x, y] += (dt / 6.0) * (dp1[x, y] + 2.0 * dp2[x, y] + 2.0 * dp3[x, y] + dp4[x, y])


_rk4_vep_nb = njit(_rk4_vep_loops)


def rk4_vep_segment(v, e, phi, ip, im, n2, al, dt, nsteps):
    fn = _rk4_vep_nb if USE_NUMBA else _rk4_vep_np
    fn(v, e, phi, ip, im, n2, al, dt, nsteps)


# ---------------------------------------------------------------------------
# Kolmogorov forward equations for the reflected 2d walk and its projection
# ---------------------------------------------------------------------------


def _rhs_walk2_np(p, ip, im, n2, al, dp):
    # p has shape (n, n-1); column j holds the diagonal offset r = j+1
    up = n2 * (1.0 + al)
    dn = n2 * (1.0 - al)
    out = np.full(p.shape[1], 4.0 * n2)
    out[0] = 2.0 * n2
    out[-1] = 2.0 * n2
    dp[:, :] = -out[None, :] * p
    dp[:, :-1] += up * p[im, 1:]  # from (x-1, r+1), x-move up
    dp[:, 1:] += up * p[:, :-1]  # from (x, r-1), y-move up
    dp[:, 1:] += dn * p[ip, :-1]  # from (x+1, r-1), x-move down
    dp[:, :-1] += dn * p[:, 1:]  # from (x, r+1), y-move down


def _rhs_walk2_loops(p, ip, im, n2, al, dp):
    up = n2 * (1.0 + al)
    dn = n2 * (1.0 - al)
    n = p.shape[0]
    m = p.shape[1]
    for x in range(n):
        xm = im[x]
        xp = ip[x]
        for j in range(m):
            acc = -(4.0 * n2) * p[x, j] if 0 < j < m - 1 else -(2.0 * n2) * p[x, j]
            if j + 1 < m:
                acc += up * p[xm, j + 1]
                acc += dn * p[x, j + 1]
            if j - 1 >= 0:
                acc += up * p[x, j - 1]
                acc += dn * p[xp, j - 1]
            dp[x, j] = acc


_rhs_walk2_nb = njit(_rhs_walk2_loops)


def _rk4_walk2_np(p, ip, im, n2, al, dt, nsteps):
    d1 = np.empty_like(p)
    d2 = np.empty_like(p)
    d3 = np.empty_like(p)
    d4 = np.empty_like(p)
    for _ in range(nsteps):
        _rhs_walk2_np(p, ip, im, n2, al, d1)
        _rhs_walk2_np(p + (0.5 * dt) * d1, ip, im, n2, al, d2)
        _rhs_walk2_np(p + (0.5 * dt) * d2, ip, im, n2, al, d3)
        _rhs_walk2_np(p + dt * d3, ip, im, n2, al, d4)
        p += (dt / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)


def _rk4_walk2_loops(p, ip, im, n2, al, dt, nsteps):
    n = p.shape[0]
    m = p.shape[1]
    d1 = np.empty((n, m))
    d2 = np.empty((n, m))
    d3 = np.empty((n, m))
    d4 = np.empty((n, m))
    pt = np.empty((n, m))
    for _ in range(nsteps):
        _rhs_walk2_nb(p, ip, im, n2, al, d1)
        for x in range(n):
            for j in range(m):
                pt[x, j] = p[x, j] + (0.5 * dt) * d1[x, j]
        _rhs_walk2_nb(pt, ip, im, n2, al, d2)
        for x in range(n):
            for j in range(m):
                pt[x, j] = p[x, j] + (0.5 * dt) * d2[x, j]
        _rhs_walk2_nb(pt, ip, im, n2, al, d3)
        for x in range(n):
            for j in range(m):
                pt[x, j] = p[x, j] + dt * d3[x, j]
        _rhs_walk2_nb(pt, ip, im, n2, al, d4)
        for x in range(n):
            for j in range(m):
                p[x, j] += (dt / 6.0) * (d1[x, j] + 2.0 * d2[x, j] + 2.0 * d3[x, j] + d4[x, j])


_rk4_walk2_nb = njit(_rk4_walk2_loops)


def rk4_walk2_segment(p, ip, im, n2, al, dt, nsteps):
    fn = _rk4_walk2_nb if USE_NUMBA else _rk4_walk2_np
    fn(p, ip, im, n2, al, dt, nsteps)


def _rhs_walk1_np(q, n2, dq):
    two = 2.0 * n2
    dq[1:-1] = two * (q[2:] + q[:-2] - 2.0 * q[1:-1])
    dq[0] = two * (q[1] - q[0])
    dq[-1] = two * (q[-2] - q[-1])


def _rhs_walk1_loops(q, n2, dq):
    two = 2.0 * n2
    m = q.shape[0]
    for j in range(1, m - 1):
        dq[j] = two * (q[j + 1] + q[j - 1] - 2.0 * q[j])
    dq[0] = two * (q[1] - q[0])
    dq[m - 1] = two * (q[m - 2] - q[m - 1])


_rhs_walk1_nb = njit(_rhs_walk1_loops)


def _rk4_walk1_np(q, n2, dt, nsteps, accumulate_boundary):
    d1 = np.empty_like(q)
    d2 = np.empty_like(q)
    d3 = np.empty_like(q)
    d4 = np.empty_like(q)
    integral = 0.0
    for _ in range(nsteps):
        w0 = q[0] + q[-1]
        _rhs_walk1_np(q, n2, d1)
        _rhs_walk1_np(q + (0.5 * dt) * d1, n2, d2)
        _rhs_walk1_np(q + (0.5 * dt) * d2, n2, d3)
        _rhs_walk1_np(q + dt * d3, n2, d4)
        q += (dt / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        if accumulate_boundary:
            integral += 0.5 * dt * (w0 + q[0] + q[-1])
    return integral


def _rk4_walk1_loops(q, n2, dt, nsteps, accumulate_boundary):
    m = q.shape[0]
    d1 = np.empty(m)
    d2 = np.empty(m)
    d3 = np.empty(m)
    d4 = np.empty(m)
    qt = np.empty(m)
    integral = 0.0
    for _ in range(nsteps):
        w0 = q[0] + q[m - 1]
        _rhs_walk1_nb(q, n2, d1)
        for j in range(m):
            qt[j] = q[j] + (0.5 * dt) * d1[j]
        _rhs_walk1_nb(qt, n2, d2)
        for j in range(m):
            qt[j] = q[j] + (0.5 * dt) * d2[j]
        _rhs_walk1_nb(qt, n2, d3)
        for j in range(m):
            qt[j] = q[j] + dt * d3[j]
        _rhs_walk1_nb(qt, n2, d4)
        for j in range(m):
            q[j] += (dt / 6.0) * (d1[j] + 2.0 * d2[j] + 2.0 * d3[j] + d4[j])
        if accumulate_boundary:
            integral += 0.5 * dt * (w0 + q[0] + q[m - 1])
    return integral


_rk4_walk1_nb = njit(_rk4_walk1_loops)


def rk4_walk1_segment(q, n2, dt, nsteps, accumulate_boundary=False):
    fn = _rk4_walk1_nb if USE_NUMBA else _rk4_walk1_np
    return fn(q, n2, dt, nsteps, accumulate_boundary)
