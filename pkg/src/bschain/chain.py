"""Exact stochastic simulation of the harmonic exchange chain.

The dynamics interleaves two mechanisms on the torus of n sites:

* shear flow ``d eta / dt = a * (eta(x+1) - eta(x-1))`` with strength
  ``a = alpha_n * n^2``, integrated exactly as a phase rotation of the
  Fourier modes (the generating circulant is skew-symmetric);
* nearest-neighbor swaps driven by a single Poisson clock of total rate
  ``n^3`` with uniform bond selection (equivalent in law to n independent
  clocks of rate n^2).

Both mechanisms conserve ``sum(eta)`` and ``sum(eta^2)``; the simulation
keeps the state in the half spectrum so volume conservation is exact and
energy drift is pure rounding. Replicas use counter-based Philox streams
keyed by (master seed, replica index), so results do not depend on
execution order or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import BudgetError, InvalidParameterError, ProfileError, SimulationDivergedError

MAX_SWAPS_PER_STEP = 1_000_000_000


@dataclass(frozen=True)
class ChainParams:
    """Chain size and asymmetry scaling: alpha_n = alpha * n**(-kappa)."""

    n: int
    alpha: float
    kappa: float

    def __post_init__(self):
        if self.n < 5:
            raise InvalidParameterError(
                f"n must be >= 5 so the near-diagonal stencil cannot wrap, got {self.n}"
            )
        if self.alpha < 0:
            raise InvalidParameterError(f"alpha must be >= 0, got {self.alpha}")
        if self.kappa < 0:
            raise InvalidParameterError(f"kappa must be >= 0, got {self.kappa}")
        if self.alpha_n >= 1.0:
            raise InvalidParameterError(
                f"alpha_n = alpha * n^-kappa = {self.alpha_n:g} must stay below 1 "
                "(the correlation walk needs nonnegative rates n^2*(1 +- alpha_n))"
            )

    @property
    def alpha_n(self) -> float:
        return self.alpha * float(self.n) ** (-self.kappa)

    @property
    def flow_strength(self) -> float:
        """Coefficient a = alpha_n * n^2 of the shear flow."""
        return self.alpha_n * self.n * self.n

    @property
    def frame_speed(self) -> float:
        """Macroscopic speed 2 * alpha_n * n of the co-moving frame."""
        return 2.0 * self.alpha_n * self.n

    @property
    def total_swap_rate(self) -> float:
        return float(self.n) ** 3


def make_rng(seed: int, replica: int = 0) -> np.random.Generator:
    """Philox stream keyed by (seed, replica); independent across replicas."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(replica)])))


@dataclass
class ChainState:
    """One microscopic configuration with its clock and RNG stream."""

    eta: np.ndarray
    t: float
    rng: np.random.Generator
    seed: int
    replica: int = 0

    def copy(self) -> "ChainState":
        return replace(self, eta=self.eta.copy())

    @property
    def n(self) -> int:
        return self.eta.shape[0]

    def volume(self) -> float:
        return float(self.eta.sum())

    def energy(self) -> float:
        return float(np.dot(self.eta, self.eta))


@dataclass
class TrajectoryRecord:
    """Observables recorded at the requested schedule times."""

    times: np.ndarray
    snapshots: np.ndarray | None  # (len(times), n) configurations, if requested
    volume: np.ndarray
    energy: np.ndarray
    seed: int
    replica: int
    scheme: str


def sample_gibbs(params: ChainParams, rho: float, beta: float, seed: int, replica: int = 0) -> ChainState:
    """Product Gaussian state: eta(x) i.i.d. with mean rho and variance 1/beta."""
    if beta <= 0:
        raise InvalidParameterError(f"beta must be positive, got {beta}")
    rng = make_rng(seed, replica)
    eta = rho + rng.standard_normal(params.n) / np.sqrt(beta)
    return ChainState(eta=eta, t=0.0, rng=rng, seed=seed, replica=replica)


def sample_profile_measure(
    params: ChainParams,
    v0: Callable[[np.ndarray], np.ndarray],
    e0: Callable[[np.ndarray], np.ndarray],
    seed: int,
    replica: int = 0,
) -> ChainState:
    """Independent Gaussians with mean v0(x/n) and variance e0(x/n) - v0(x/n)^2.

    Raises ProfileError naming the first offending site if the variance
    profile is not strictly positive on the grid.
    """
    u = np.arange(params.n) / params.n
    mean = np.asarray(v0(u), dtype=float)
    second = np.asarray(e0(u), dtype=float)
    chi = second - mean**2
    bad = np.nonzero(chi <= 0)[0]
    if bad.size:
        x = int(bad[0])
        raise ProfileError(
            f"variance profile e0 - v0^2 must be positive; got {chi[x]:g} at site x={x}", site=x
        )
    rng = make_rng(seed, replica)
    eta = mean + np.sqrt(chi) * rng.standard_normal(params.n)
    return ChainState(eta=eta, t=0.0, rng=rng, seed=seed, replica=replica)


def _half_spectrum(eta: np.ndarray) -> np.ndarray:
    return np.fft.rfft(eta)


def _tables(n: int):
    k = np.arange(n // 2 + 1)
    x = np.arange(n)
    pos = np.exp((2j * np.pi / n) * np.outer(k, x))
    return pos, np.conj(pos)


def _mode_speeds(params: ChainParams) -> np.ndarray:
    k = np.arange(params.n // 2 + 1)
    return 2.0 * params.flow_strength * np.sin(2.0 * np.pi * k / params.n)


def _energy_from_half(spec: np.ndarray, n: int) -> np.ndarray:
    """Parseval sum for sum_x eta(x)^2 from half spectra (last axis = modes)."""
    even = n % 2 == 0
    kd = spec.shape[-1] - 1 if even else spec.shape[-1]
    total = np.abs(spec[..., 0]) ** 2 + 2.0 * np.sum(np.abs(spec[..., 1:kd]) ** 2, axis=-1)
    if even:
        total = total + np.abs(spec[..., -1]) ** 2
    return total / n


def hamiltonian_flow(state: ChainState, tau: float, params: ChainParams) -> ChainState:
    """Advance the shear flow exactly for a time tau (in place)."""
    if tau < 0:
        raise InvalidParameterError(f"tau must be >= 0, got {tau}")
    spec = _half_spectrum(state.eta)
    spec *= np.exp(1j * _mode_speeds(params) * tau)
    state.eta = np.fft.irfft(spec, n=params.n)
    state.t += tau
    return state


def apply_swap(state: ChainState, x: int) -> ChainState:
    """Exchange eta(x) and eta(x+1 mod n) in place; the clock is untouched."""
    n = state.n
    if not 0 <= x < n:
        raise InvalidParameterError(f"bond index must lie in [0, {n}), got {x}")
    xp = (x + 1) % n
    eta = state.eta
    eta[x], eta[xp] = eta[xp], eta[x]
    return state


def resolve_schedule(t0: float, horizon: float, schedule) -> np.ndarray:
    """Validate observation times against [t0, t0 + horizon], appending the endpoint."""
    if horizon < 0:
        raise InvalidParameterError(f"horizon must be >= 0, got {horizon}")
    if schedule is None:
        sched = np.array([t0 + horizon])
    else:
        sched = np.asarray(schedule, dtype=float)
        if sched.ndim != 1 or sched.size == 0:
            raise InvalidParameterError("schedule must be a non-empty 1-d sequence of times")
        if np.any(np.diff(sched) < 0):
            raise InvalidParameterError("schedule times must be non-decreasing")
        if sched[0] < t0 - 1e-12 or sched[-1] > t0 + horizon + 1e-12:
            raise InvalidParameterError("schedule times must lie within [t0, t0 + horizon]")
    if sched[-1] < t0 + horizon:
        sched = np.append(sched, t0 + horizon)
    return sched


def _run_events(state, params, sched, ev_times, bonds, keep_snapshots, scheme):
    n = params.n
    spec = _half_spectrum(state.eta)
    pos, neg = _tables(n)
    omega = _mode_speeds(params)
    has_flow = params.alpha > 0.0
    out = np.empty((sched.size, omega.size), dtype=np.complex128)
    _kernels.run_event_loop(spec, pos, neg, omega, has_flow, ev_times, bonds, sched, state.t, out)
    snapshots = np.fft.irfft(out, n=n, axis=1)
    if not np.all(np.isfinite(snapshots)):
        raise SimulationDivergedError("non-finite configuration encountered during simulation")
    volume = out[:, 0].real.copy()
    energy = _energy_from_half(out, n)
    state.eta = snapshots[-1].copy()
    state.t = float(sched[-1])
    return TrajectoryRecord(
        times=sched,
        snapshots=snapshots if keep_snapshots else None,
        volume=volume,
        energy=energy,
        seed=state.seed,
        replica=state.replica,
        scheme=scheme,
    )


def simulate(
    params: ChainParams,
    initial: ChainState,
    horizon: float,
    schedule: Sequence[float] | None = None,
    observables: Sequence[str] = ("eta", "conserved"),
) -> TrajectoryRecord:
    """Event-driven exact scheme over [initial.t, initial.t + horizon].

    Swap events come from a Poisson clock of rate n^3 (count then sorted
    uniform times, the order-statistics representation); between events and
    up to every schedule time the flow is applied exactly. Deterministic
    given (seed, replica, params, initial).
    """
    state = initial
    t0 = state.t
    sched = resolve_schedule(t0, horizon, schedule)
    rng = state.rng
    n_events = int(rng.poisson(params.total_swap_rate * horizon)) if horizon > 0 else 0
    ev_times = t0 + horizon * np.sort(rng.random(n_events))
    bonds = rng.integers(0, params.n, size=n_events)
    keep = "eta" in observables
    return _run_events(state, params, sched, ev_times, bonds, keep, "event")


def simulate_split(
    params: ChainParams,
    initial: ChainState,
    horizon: float,
    dt: float,
    schedule: Sequence[float] | None = None,
    observables: Sequence[str] = ("eta", "conserved"),
) -> TrajectoryRecord:
    """Strang-type splitting: per step flow dt/2, a Poisson batch of swaps,
    then flow dt/2. Statistically consistent with :func:`simulate` as dt -> 0.
    """
    if dt <= 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    lam = dt * params.total_swap_rate
    if lam > MAX_SWAPS_PER_STEP:
        raise BudgetError(
            f"dt * n^3 = {lam:.3g} swaps per step exceeds the {MAX_SWAPS_PER_STEP:.0e} ceiling"
        )
    state = initial
    t0 = state.t
    sched = resolve_schedule(t0, horizon, schedule)
    nsteps = max(1, int(np.ceil(horizon / dt)))
    edges = t0 + np.minimum(np.arange(1, nsteps + 1) * dt, horizon)
    starts = np.concatenate(([t0], edges[:-1]))
    mids = 0.5 * (starts + edges)
    rng = state.rng
    counts = rng.poisson((edges - starts) * params.total_swap_rate)
    total = int(counts.sum())
    ev_times = np.repeat(mids, counts)
    bonds = rng.integers(0, params.n, size=total)
    keep = "eta" in observables
    return _run_events(state, params, sched, ev_times, bonds, keep, "split")
