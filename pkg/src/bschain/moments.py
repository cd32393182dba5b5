"""Closed deterministic evolution of first and second moments.

The source of truth is the linear system on (v, S) with
v(x) = E[eta(x)] and S(x, y) = E[eta(x) eta(y)]: the swap part acts as a
two-dimensional Laplacian with special rows next to and on the diagonal,
the shear part as a drift. A second, independently coded right-hand side
evolves (v, e, phi) with the energy profile e = diag(S) and the
off-diagonal correlation phi(x, y) = S(x, y) - v(x) v(y) driven by the
reflected two-dimensional operator plus a source; it exists purely to
cross-validate the stencils.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels, walks
from .chain import ChainParams, resolve_schedule
from .errors import (
    DependencyMissingError,
    IntegratorError,
    InvalidParameterError,
    ProfileError,
    StencilWrapError,
)
from .lattice import grad_centered, grad_forward, index_bwd, index_fwd, laplacian

MAX_HALVINGS = 6


@dataclass
class MomentState:
    """First moment v and full second-moment matrix S at one time."""

    v: np.ndarray
    second: np.ndarray
    t: float

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        self.second = np.asarray(self.second, dtype=float)
        n = self.v.shape[0]
        if self.second.shape != (n, n):
            raise InvalidParameterError("second-moment matrix must be n x n")
        if not np.allclose(self.second, self.second.T, atol=1e-10):
            raise InvalidParameterError("second-moment matrix must be symmetric")

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @property
    def energy(self) -> np.ndarray:
        """Energy profile e(x) = S(x, x)."""
        return np.diag(self.second).copy()

    def correlation(self, x: int, y: int) -> float:
        """Two-point correlation phi(x, y); raises off the domain x != y mod n."""
        n = self.n
        if (x - y) % n == 0:
            raise IndexError(f"correlation is defined off the diagonal only, got ({x}, {y})")
        return float(self.second[x % n, y % n] - self.v[x % n] * self.v[y % n])

    def correlation_matrix(self) -> np.ndarray:
        """phi as a full matrix with zeros placed on the (undefined) diagonal."""
        phi = self.second - np.outer(self.v, self.v)
        np.fill_diagonal(phi, 0.0)
        return phi

    def compressibility(self) -> np.ndarray:
        """chi(x) = e(x) - v(x)^2."""
        return self.energy - self.v**2


@dataclass
class MomentTrajectory:
    times: np.ndarray
    vs: np.ndarray  # (len(times), n)
    seconds: np.ndarray  # (len(times), n, n)

    def state(self, i: int) -> MomentState:
        return MomentState(v=self.vs[i].copy(), second=self.seconds[i].copy(), t=float(self.times[i]))

    @property
    def final(self) -> MomentState:
        return self.state(len(self.times) - 1)

    def energies(self) -> np.ndarray:
        return np.einsum("txx->tx", self.seconds).copy()

    def correlations(self) -> np.ndarray:
        phi = self.seconds - np.einsum("ti,tj->tij", self.vs, self.vs)
        idx = np.arange(self.vs.shape[1])
        phi[:, idx, idx] = 0.0
        return phi


def _require_stencil(params: ChainParams):
    if params.n < 5:
        raise StencilWrapError(f"second-moment stencils need n >= 5, got {params.n}")


def gibbs_moments(params: ChainParams, rho: float, beta: float) -> MomentState:
    """Moments of the product Gaussian invariant state."""
    if beta <= 0:
        raise InvalidParameterError(f"beta must be positive, got {beta}")
    n = params.n
    v = np.full(n, float(rho))
    second = np.full((n, n), rho * rho) + np.eye(n) / beta
    return MomentState(v=v, second=second, t=0.0)


def profile_moments(
    params: ChainParams,
    v0: Callable[[np.ndarray], np.ndarray],
    e0: Callable[[np.ndarray], np.ndarray],
) -> MomentState:
    """Moments of the product measure with mean v0(x/n), variance e0 - v0^2."""
    u = np.arange(params.n) / params.n
    v = np.asarray(v0(u), dtype=float)
    e = np.asarray(e0(u), dtype=float)
    chi = e - v**2
    bad = np.nonzero(chi <= 0)[0]
    if bad.size:
        x = int(bad[0])
        raise ProfileError(f"e0 - v0^2 must be positive; got {chi[x]:g} at site x={x}", site=x)
    second = np.outer(v, v) + np.diag(chi)
    return MomentState(v=v, second=second, t=0.0)


def volume_rhs(v: np.ndarray, params: ChainParams) -> np.ndarray:
    """d v / dt = laplacian(v) + 2 alpha_n n gradc(v)."""
    return laplacian(v) + 2.0 * params.alpha_n * params.n * grad_centered(v)


def second_moment_rhs(state: MomentState, params: ChainParams) -> np.ndarray:
    """d S / dt as a dense matrix (generator acting on the quadratic monomials)."""
    _require_stencil(params)
    n = params.n
    dv = np.empty(n)
    dS = np.empty((n, n))
    _kernels._rhs_vs_np(state.v, state.second, index_fwd(n), index_bwd(n), float(n * n), params.alpha_n, dv, dS)
    return dS


def g_source(state: MomentState, params: ChainParams) -> np.ndarray:
    """Source g(x) driving the near-diagonal correlation equation."""
    return g_from_profiles(state.v, state.energy, params)


def g_from_profiles(v: np.ndarray, e: np.ndarray, params: ChainParams) -> np.ndarray:
    a2 = params.alpha_n * params.n**2
    chi = e - np.asarray(v) ** 2
    return a2 * (np.roll(chi, -1) - chi) - grad_forward(v) ** 2


def reflected_operator(phi: np.ndarray, params: ChainParams) -> np.ndarray:
    """Apply the reflected two-dimensional walk operator to an off-diagonal field.

    phi is an n x n array whose diagonal is ignored (kept at zero). The
    stencil never reads the diagonal for n >= 5.
    """
    _require_stencil(params)
    n = params.n
    al = params.alpha_n
    n2 = float(n * n)
    ip = index_fwd(n)
    im = index_bwd(n)
    out = n2 * (
        (1.0 + al) * (phi[ip, :] + phi[:, ip]) + (1.0 - al) * (phi[im, :] + phi[:, im]) - 4.0 * phi
    )
    x = np.arange(n)
    out[x, ip] = n2 * ((1.0 + al) * (phi[x, ip[ip]] - phi[x, ip]) + (1.0 - al) * (phi[im, ip] - phi[x, ip]))
    out[x, im] = n2 * ((1.0 + al) * (phi[ip, im] - phi[x, im]) + (1.0 - al) * (phi[x, im[im]] - phi[x, im]))
    out[x, x] = 0.0
    return out


def correlation_source(g: np.ndarray) -> np.ndarray:
    """Near-diagonal source matrix: g(x) at (x, x+1) and g(x-1) at (x, x-1)."""
    n = g.shape[0]
    out = np.zeros((n, n))
    x = np.arange(n)
    out[x, index_fwd(n)] = g
    out[x, index_bwd(n)] = np.roll(g, 1)
    return out


def correlation_rhs(phi: np.ndarray, g: np.ndarray, params: ChainParams) -> np.ndarray:
    """d phi / dt = reflected operator applied to phi plus the g source."""
    return reflected_operator(phi, params) + correlation_source(g)


def stability_step(params: ChainParams) -> float:
    """Step ceiling 0.2 / (4 n^2 (1 + alpha_n)) for the moment systems."""
    return 0.2 / (4.0 * params.n**2 * (1.0 + params.alpha_n))


def _integrate(initial: MomentState, params: ChainParams, sched, dt_max: float, formulation: str):
    n = params.n
    ip = index_fwd(n)
    im = index_bwd(n)
    n2 = float(n * n)
    al = params.alpha_n
    vs = np.empty((sched.size, n))
    seconds = np.empty((sched.size, n, n))
    t = initial.t
    if formulation == "second_moment":
        v = initial.v.copy()
        S = initial.second.copy()
        for j, target in enumerate(sched):
            seg = float(target - t)
            if seg > 0:
                nsteps = max(1, int(np.ceil(seg / dt_max)))
                _kernels.rk4_vs_segment(v, S, ip, im, n2, al, seg / nsteps, nsteps)
            t = float(target)
            vs[j] = v
            seconds[j] = S
    elif formulation == "correlation":
        v = initial.v.copy()
        e = initial.energy
        phi = initial.correlation_matrix()
        for j, target in enumerate(sched):
            seg = float(target - t)
            if seg > 0:
                nsteps = max(1, int(np.ceil(seg / dt_max)))
                _kernels.rk4_vep_segment(v, e, phi, ip, im, n2, al, seg / nsteps, nsteps)
            t = float(target)
            vs[j] = v
            S = phi + np.outer(v, v)
            S[np.arange(n), np.arange(n)] = e
            seconds[j] = S
    else:
        raise InvalidParameterError(f"unknown formulation {formulation!r}")
    return MomentTrajectory(times=sched.copy(), vs=vs, seconds=seconds)


def evolve(
    initial: MomentState,
    params: ChainParams,
    horizon: float,
    tol: float = 1e-9,
    schedule: Sequence[float] | None = None,
    formulation: str = "second_moment",
) -> MomentTrajectory:
    """RK4 integration with stability-bounded step and step-halving control.

    The step starts at the stability ceiling and halves until two successive
    trajectories differ by less than tol in the max norm at all schedule
    times; hitting the step floor raises IntegratorError with the achieved
    difference.
    """
    _require_stencil(params)
    sched = resolve_schedule(initial.t, horizon, schedule)
    dt = stability_step(params)
    traj = _integrate(initial, params, sched, dt, formulation)
    for _ in range(MAX_HALVINGS):
        dt *= 0.5
        finer = _integrate(initial, params, sched, dt, formulation)
        diff = max(
            float(np.max(np.abs(finer.vs - traj.vs))),
            float(np.max(np.abs(finer.seconds - traj.seconds))),
        )
        traj = finer
        if diff < tol:
            return traj
    raise IntegratorError(
        f"step halving stalled at dt={dt:g} with successive difference {diff:g} > tol={tol:g}",
        achieved=diff,
    )


def duhamel_reconstruct(
    phi0: np.ndarray,
    g_times: np.ndarray,
    g_values: np.ndarray,
    params: ChainParams,
    t: float,
) -> np.ndarray:
    """Probabilistic reconstruction of phi_t from the reflected walk.

    phi_t(x, y) = E_(x,y)[phi_0(X_t)] plus the time integral of the source
    g evaluated along the near-diagonal occupation of the walk, computed by
    the trapezoid rule on the supplied uniform grid. The walk laws come
    from :func:`bschain.walks.forward_solve_2d`; translation invariance
    along the diagonal reduces the work to one solve per offset r.
    """
    _require_stencil(params)
    n = params.n
    g_times = np.asarray(g_times, dtype=float)
    g_values = np.asarray(g_values, dtype=float)
    if g_times.ndim != 1 or g_values.shape != (g_times.size, n):
        raise DependencyMissingError("g path must provide one field per grid time")
    if g_times[0] != 0.0 or g_times[-1] < t - 1e-12:
        raise DependencyMissingError("g path grid must cover [0, t] starting at 0")
    steps = np.diff(g_times)
    if steps.size == 0 or np.any(np.abs(steps - steps[0]) > 1e-9 * max(steps[0], 1e-30)):
        raise DependencyMissingError("g path grid must be uniform")
    h = float(steps[0])
    m = int(round(t / h))
    if abs(m * h - t) > 1e-9:
        raise DependencyMissingError("t must sit on the g path grid")
    s_grid = g_times[: m + 1]

    phi0 = np.asarray(phi0, dtype=float)
    x_all = np.arange(n)
    phi_t = np.zeros((n, n))
    for r in range(1, n):
        start = walks.delta_2d(n, 0, r)
        laws = walks.forward_solve_2d(start, params, horizon=t, schedule=s_grid)
        p_final = laws.densities[-1]
        # initial-condition term, one circular correlation per offset column
        init_term = np.zeros(n)
        for rp in range(1, n):
            col = p_final[:, rp - 1]
            targets = phi0[x_all, (x_all + rp) % n]
            for x in range(n):
                init_term[x] += col @ np.roll(targets, -x)
        # source term: occupation of the two near-diagonal lines against g(t-s)
        src = np.zeros((s_grid.size, n))
        for j in range(s_grid.size):
            gj = g_values[m - j]
            low = laws.densities[j][:, 0]
            high = laws.densities[j][:, n - 2]
            for x in range(n):
                src[j, x] = low @ np.roll(gj, -x) + high @ np.roll(np.roll(gj, 1), -x)
        integral = np.trapezoid(src, s_grid, axis=0)
        phi_t[x_all, (x_all + r) % n] = init_term + integral
    return phi_t


def write_profile_csv(path, times: np.ndarray, fields: np.ndarray) -> None:
    """CSV export with header t,x,value for a time series of lattice fields."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "value"])
        for t, row in zip(times, fields):
            for x, value in enumerate(row):
                writer.writerow([repr(float(t)), x, repr(float(value))])


def write_correlation_csv(path, times: np.ndarray, phis: np.ndarray) -> None:
    """CSV export with header t,x,y,value for off-diagonal correlation fields."""
    n = phis.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "y", "value"])
        for t, phi in zip(times, phis):
            for x in range(n):
                for y in range(n):
                    if x != y:
                        writer.writerow([repr(float(t)), x, y, repr(float(phi[x, y]))])
