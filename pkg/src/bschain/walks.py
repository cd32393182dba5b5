"""Random walks behind the correlation estimates.

Two walks live here. The reflected two-dimensional walk moves on the
torus squared minus the diagonal, jumping up/right at rate n^2 (1 + a)
and left/down at rate n^2 (1 - a) with a = alpha_n, except on the two
near-diagonal lines where only the two moves that stay off the diagonal
are permitted. Its distance-to-diagonal projection is a symmetric
birth-death chain on {1, ..., n-1} with rate 2 n^2 and reflecting ends.
The simple symmetric rate-n^2 walk on the torus has closed-form
transition probabilities via the discrete Fourier symbol, used for the
gradient and Laplacian decay diagnostics.

States of the 2d walk are stored as (x, r) with r = y - x mod n in
{1, ..., n-1}; the diagonal is not representable and the projection is a
column sum.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .chain import ChainParams, resolve_schedule
from .errors import IntegratorError, InvalidParameterError, NumericalConsistencyError
from .lattice import grad_forward, index_bwd, index_fwd, laplacian, laplacian_symbol

MASS_TOL = 1e-9
FLOOR_TOL = -1e-12


def _validate_density(p: np.ndarray, label: str) -> None:
    if p.min() < FLOOR_TOL:
        raise InvalidParameterError(f"{label} has entries below {FLOOR_TOL:g}: min={p.min():g}")
    total = float(p.sum())
    if abs(total - 1.0) > MASS_TOL:
        raise InvalidParameterError(f"{label} mass {total:.12g} deviates from 1 beyond {MASS_TOL:g}")


@dataclass
class WalkDistribution2D:
    """Law of the reflected walk as an (n, n-1) array over (x, r)."""

    p: np.ndarray
    t: float

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        _validate_density(self.p, "2d walk distribution")

    @property
    def n(self) -> int:
        return self.p.shape[0]


@dataclass
class WalkDistribution1D:
    """Law of the projected walk on {1, ..., n-1}."""

    q: np.ndarray
    t: float

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        _validate_density(self.q, "1d walk distribution")

    @property
    def n(self) -> int:
        return self.q.shape[0] + 1


@dataclass
class WalkTrajectory2D:
    times: np.ndarray
    densities: np.ndarray  # (len(times), n, n-1)

    def at(self, i: int) -> WalkDistribution2D:
        return WalkDistribution2D(p=self.densities[i].copy(), t=float(self.times[i]))


@dataclass
class WalkTrajectory1D:
    times: np.ndarray
    densities: np.ndarray  # (len(times), n-1)

    def at(self, i: int) -> WalkDistribution1D:
        return WalkDistribution1D(q=self.densities[i].copy(), t=float(self.times[i]))


def delta_2d(n: int, x: int, y: int) -> WalkDistribution2D:
    """Point mass at the pair (x, y); x = y mod n is not a state."""
    r = (y - x) % n
    if r == 0:
        raise InvalidParameterError("the diagonal x = y is not part of the state space")
    p = np.zeros((n, n - 1))
    p[x % n, r - 1] = 1.0
    return WalkDistribution2D(p=p, t=0.0)


def delta_1d(n: int, r: int) -> WalkDistribution1D:
    if not 1 <= r <= n - 1:
        raise InvalidParameterError(f"offset r must lie in [1, {n - 1}], got {r}")
    q = np.zeros(n - 1)
    q[r - 1] = 1.0
    return WalkDistribution1D(q=q, t=0.0)


def forward_rhs_2d(dist: WalkDistribution2D, params: ChainParams) -> np.ndarray:
    """Kolmogorov forward derivative of the law of the reflected walk."""
    n = dist.n
    if params.n != n:
        raise InvalidParameterError("distribution and params disagree on n")
    dp = np.empty_like(dist.p)
    _kernels._rhs_walk2_np(
        dist.p, index_fwd(n), index_bwd(n), float(n * n), params.alpha_n, dp
    )
    return dp


def walk_step_ceiling(n: int, alpha_n: float) -> float:
    return 0.2 / (4.0 * n * n * (1.0 + alpha_n))


MAX_HALVINGS = 8


def _sweep_2d(p0, sched, dt_max, ip, im, n2, al):
    p = p0.p.copy()
    n = p.shape[0]
    out = np.empty((sched.size, n, n - 1))
    t = p0.t
    for j, target in enumerate(sched):
        seg = float(target - t)
        if seg > 0:
            nsteps = max(1, int(np.ceil(seg / dt_max)))
            _kernels.rk4_walk2_segment(p, ip, im, n2, al, seg / nsteps, nsteps)
        t = float(target)
        out[j] = p
    return out


def forward_solve_2d(
    p0: WalkDistribution2D,
    params: ChainParams,
    horizon: float,
    schedule: Sequence[float] | None = None,
    tol: float = 1e-9,
) -> WalkTrajectory2D:
    """RK4 forward solution with snapshots at the schedule times.

    The step starts at the stability ceiling and halves until successive
    sweeps agree to tol in the max norm (same control as moments.evolve).
    """
    n = p0.n
    sched = resolve_schedule(p0.t, horizon, schedule)
    dt_max = walk_step_ceiling(n, params.alpha_n)
    ip = index_fwd(n)
    im = index_bwd(n)
    n2 = float(n * n)
    out = _sweep_2d(p0, sched, dt_max, ip, im, n2, params.alpha_n)
    for _ in range(MAX_HALVINGS):
        dt_max *= 0.5
        finer = _sweep_2d(p0, sched, dt_max, ip, im, n2, params.alpha_n)
        diff = float(np.max(np.abs(finer - out)))
        out = finer
        if diff < tol:
            return WalkTrajectory2D(times=sched.copy(), densities=out)
    raise IntegratorError(
        f"walk step halving stalled at dt={dt_max:g} with difference {diff:g} > tol={tol:g}",
        achieved=diff,
    )


def project_to_1d(dist: WalkDistribution2D) -> WalkDistribution1D:
    """Sum over the position coordinate: q(r) = sum_x p(x, r)."""
    return WalkDistribution1D(q=dist.p.sum(axis=0), t=dist.t)


def forward_rhs_1d(dist: WalkDistribution1D, n: int) -> np.ndarray:
    if dist.n != n:
        raise InvalidParameterError("distribution and n disagree")
    dq = np.empty_like(dist.q)
    _kernels._rhs_walk1_np(dist.q, float(n * n), dq)
    return dq


def _sweep_1d(q0, sched, dt_max, n2):
    q = q0.q.copy()
    out = np.empty((sched.size, q.shape[0]))
    t = q0.t
    for j, target in enumerate(sched):
        seg = float(target - t)
        if seg > 0:
            nsteps = max(1, int(np.ceil(seg / dt_max)))
            _kernels.rk4_walk1_segment(q, n2, seg / nsteps, nsteps)
        t = float(target)
        out[j] = q
    return out


def forward_solve_1d(
    q0: WalkDistribution1D,
    n: int,
    horizon: float,
    schedule: Sequence[float] | None = None,
    tol: float = 1e-9,
) -> WalkTrajectory1D:
    sched = resolve_schedule(q0.t, horizon, schedule)
    dt_max = walk_step_ceiling(n, 1.0)
    out = _sweep_1d(q0, sched, dt_max, float(n * n))
    for _ in range(MAX_HALVINGS):
        dt_max *= 0.5
        finer = _sweep_1d(q0, sched, dt_max, float(n * n))
        diff = float(np.max(np.abs(finer - out)))
        out = finer
        if diff < tol:
            return WalkTrajectory1D(times=sched.copy(), densities=out)
    raise IntegratorError(
        f"walk step halving stalled at dt={dt_max:g} with difference {diff:g} > tol={tol:g}",
        achieved=diff,
    )


def local_time(r0: int, n, horizon: float, rel_tol: float = 1e-6) -> float:
    """Expected occupation of the reflecting ends {1, n-1} up to the horizon.

    Trapezoid accumulation on the integrator's own step grid, with step
    halving until the value is stable to rel_tol. The projected walk does
    not feel the asymmetry, so only the torus size matters; ChainParams is
    accepted in place of n for convenience.
    """
    if isinstance(n, ChainParams):
        n = n.n
    if horizon < 0:
        raise InvalidParameterError("horizon must be >= 0")
    dt_max = walk_step_ceiling(n, 1.0)
    prev = None
    for _ in range(8):
        q = delta_1d(n, r0).q.copy()
        nsteps = max(1, int(np.ceil(horizon / dt_max)))
        value = _kernels.rk4_walk1_segment(q, float(n * n), horizon / nsteps, nsteps, True)
        if prev is not None and abs(value - prev) <= rel_tol * max(abs(value), 1e-300):
            return float(value)
        prev = value
        dt_max *= 0.5
    return float(value)


def srw_transition_row(x: int, t: float, n: int) -> np.ndarray:
    """Transition probabilities p_t^x(y) of the symmetric rate-n^2 torus walk.

    Closed Fourier form: (1/n) sum_k exp(-symbol(k) t - 2 pi i k (x - y)/n).
    Raises if the imaginary residue exceeds 1e-10.
    """
    if t < 0:
        raise InvalidParameterError("t must be >= 0")
    if t == 0.0:
        out = np.zeros(n)
        out[x % n] = 1.0
        return out
    k = np.arange(n)
    decay = np.exp(-laplacian_symbol(k, n) * t)
    phases = np.exp(-2j * np.pi * k * x / n)
    row = np.fft.ifft(decay * phases) * n  # sum_k c_k exp(+2 pi i k y / n)
    row /= n
    if np.max(np.abs(row.imag)) > 1e-10:
        raise NumericalConsistencyError(
            f"imaginary residue {np.max(np.abs(row.imag)):g} above 1e-10 in transition row"
        )
    return row.real.copy()


def srw_transition(x: int, y: int, t: float, n: int) -> float:
    return float(srw_transition_row(x, t, n)[y % n])


def srw_derivative_bounds(n: int, t_grid: Sequence[float]) -> dict:
    """Scaled gradient/Laplacian suprema of the symmetric-walk kernel.

    For each t in the grid evaluates n * t^1.5 * max|laplacian p_t| and
    n * t * max|grad p_t|; reports the per-time values and their suprema.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0):
        raise InvalidParameterError("t grid must be positive")
    lap_scaled = np.empty(t_grid.size)
    grad_scaled = np.empty(t_grid.size)
    for i, t in enumerate(t_grid):
        row = srw_transition_row(0, t, n)
        lap_scaled[i] = n * t**1.5 * np.max(np.abs(laplacian(row)))
        grad_scaled[i] = n * t * np.max(np.abs(grad_forward(row)))
    return {
        "t": t_grid,
        "laplacian_scaled": lap_scaled,
        "gradient_scaled": grad_scaled,
        "laplacian_sup": float(lap_scaled.max()),
        "gradient_sup": float(grad_scaled.max()),
    }


def write_bounds_csv(path, rows) -> None:
    """CSV export with header N,t,quantity,value."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "t", "quantity", "value"])
        for n, t, quantity, value in rows:
            writer.writerow([n, repr(float(t)), quantity, repr(float(value))])
