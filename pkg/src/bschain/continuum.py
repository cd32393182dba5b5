"""Spectral solvers on the unit torus for the limiting parabolic system.

The volume field solves d v = lap v + 2 a grad v exactly mode by mode; the
energy field picks up the source 2 a grad(v^2) and the compressibility
chi = e - v^2 the source 2 (grad v)^2, both integrated per mode with an
exponential integrating factor and adaptive Gauss-Legendre quadrature.
Profiles are trigonometric polynomials: coefficient c_k multiplies
exp(2 i pi k u), with conjugate symmetry for real fields.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IntegratorError, InvalidParameterError, ResolutionError

DEFAULT_CUTOFF = 256
TAIL_LIMIT = 1e-10
SOURCE_REL_TOL = 1e-8


@dataclass
class SpectralProfile:
    """Real field on the torus stored as Fourier coefficients |k| <= cutoff."""

    coeffs: np.ndarray
    cutoff: int

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (2 * self.cutoff + 1,):
            raise InvalidParameterError("coefficient vector must have length 2*cutoff + 1")
        sym = self.coeffs[::-1].conj()
        scale = max(float(np.abs(self.coeffs).max()), 1e-300)
        if np.max(np.abs(self.coeffs - sym)) > 1e-9 * scale:
            raise InvalidParameterError("coefficients must be conjugate-symmetric (real field)")

    @classmethod
    def from_harmonics(cls, mean: float, harmonics=(), cutoff: int = DEFAULT_CUTOFF):
        """Build mean + sum_k (a_k cos(2 pi k u) + b_k sin(2 pi k u))."""
        coeffs = np.zeros(2 * cutoff + 1, dtype=np.complex128)
        coeffs[cutoff] = mean
        for k, a, b in harmonics:
            k = int(k)
            if not 1 <= k <= cutoff:
                raise InvalidParameterError(f"harmonic index {k} outside [1, {cutoff}]")
            coeffs[cutoff + k] += 0.5 * (a - 1j * b)
            coeffs[cutoff - k] += 0.5 * (a + 1j * b)
        return cls(coeffs=coeffs, cutoff=cutoff)

    def modes(self) -> np.ndarray:
        return np.arange(-self.cutoff, self.cutoff + 1)

    def value(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        phases = np.exp(2j * np.pi * np.outer(u, self.modes()))
        return (phases @ self.coeffs).real

    def grid_values(self, n: int) -> np.ndarray:
        return self.value(np.arange(n) / n)

    def shifted(self, s: float) -> "SpectralProfile":
        """Profile of u -> f(u + s)."""
        return SpectralProfile(self.coeffs * np.exp(2j * np.pi * self.modes() * s), self.cutoff)

    def derivative(self) -> "SpectralProfile":
        return SpectralProfile(self.coeffs * (2j * np.pi * self.modes()), self.cutoff)

    def mean(self) -> float:
        return float(self.coeffs[self.cutoff].real)

    def l2_norm_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def pairing(self, other: "SpectralProfile") -> float:
        """L2 inner product of two real profiles."""
        if self.cutoff != other.cutoff:
            raise InvalidParameterError("profiles must share a cutoff")
        return float(np.real(np.sum(self.coeffs * np.conj(other.coeffs))))

    def tail_fraction(self) -> float:
        total = float(np.sum(np.abs(self.coeffs) ** 2))
        if total == 0.0:
            return 0.0
        k = np.abs(self.modes())
        tail = float(np.sum(np.abs(self.coeffs[k > self.cutoff / 2]) ** 2))
        return tail / total


def _check_tail(profile: SpectralProfile, label: str) -> None:
    frac = profile.tail_fraction()
    if frac > TAIL_LIMIT:
        raise ResolutionError(
            f"{label}: spectral tail fraction {frac:g} above {TAIL_LIMIT:g}; increase the cutoff"
        )


def _convolve(a: np.ndarray, b: np.ndarray, cutoff: int) -> np.ndarray:
    """Coefficients of the pointwise product, truncated back to the cutoff."""
    full = np.convolve(a, b)
    return full[cutoff : 3 * cutoff + 1]


@dataclass
class VolumeSolution:
    """Closed-form per-mode solution of d v = lap v + 2 a grad v."""

    initial: SpectralProfile
    alpha: float

    def coeffs_at(self, t: float) -> np.ndarray:
        k = self.initial.modes()
        rate = -4.0 * np.pi**2 * k**2 + 4j * np.pi * k * self.alpha
        return self.initial.coeffs * np.exp(rate * t)

    def at(self, t: float) -> SpectralProfile:
        return SpectralProfile(self.coeffs_at(t), self.initial.cutoff)


@dataclass
class ContinuumTrajectory:
    times: np.ndarray
    profiles: list


def _schedule(horizon: float, schedule) -> np.ndarray:
    if horizon < 0:
        raise InvalidParameterError("horizon must be >= 0")
    if schedule is None:
        return np.array([horizon])
    out = np.asarray(schedule, dtype=float)
    if out.ndim != 1 or out.size == 0 or np.any(np.diff(out) < 0) or out[0] < 0:
        raise InvalidParameterError("schedule must be non-decreasing nonnegative times")
    if out[-1] < horizon:
        out = np.append(out, horizon)
    return out


def solve_volume(
    v0: SpectralProfile, alpha: float, horizon: float, schedule: Sequence[float] | None = None
) -> ContinuumTrajectory:
    _check_tail(v0, "volume initial profile")
    sol = VolumeSolution(initial=v0, alpha=alpha)
    times = _schedule(horizon, schedule)
    traj = ContinuumTrajectory(times=times, profiles=[sol.at(t) for t in times])
    traj.solution = sol
    return traj


def _gauss_nodes(a: float, b: float, panels: int, order: int = 10):
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    weights = (half[:, None] * wg[None, :]).ravel()
    return nodes, weights


def _integrate_with_source(e0: SpectralProfile, source_coeffs, horizon, schedule):
    """Per-mode integrating-factor solution with adaptive panel quadrature.

    source_coeffs(t) must return the source coefficient vector at time t.
    """
    times = _schedule(horizon, schedule)
    cutoff = e0.cutoff
    k = np.arange(-cutoff, cutoff + 1)
    lam = 4.0 * np.pi**2 * k**2
    profiles = []
    for t in times:
        homo = e0.coeffs * np.exp(-lam * t)
        if t == 0.0:
            profiles.append(SpectralProfile(homo, cutoff))
            continue
        prev = None
        panels = max(4, int(np.ceil(t / 0.05)))
        for _ in range(10):
            nodes, weights = _gauss_nodes(0.0, t, panels)
            acc = np.zeros_like(homo)
            for s, w in zip(nodes, weights):
                acc += w * np.exp(-lam * (t - s)) * source_coeffs(s)
            if prev is not None:
                scale = max(float(np.max(np.abs(homo + acc))), 1e-300)
                if float(np.max(np.abs(acc - prev))) <= SOURCE_REL_TOL * scale:
                    break
                if panels > 4096:
                    raise IntegratorError(
                        "source quadrature did not converge",
                        achieved=float(np.max(np.abs(acc - prev))) / scale,
                    )
            prev = acc
            panels *= 2
        total = SpectralProfile(homo + acc, cutoff)
        _check_tail(total, "energy-type solution")
        profiles.append(total)
    return ContinuumTrajectory(times=times, profiles=profiles)


def solve_energy(
    e0: SpectralProfile,
    v_path: VolumeSolution,
    alpha: float,
    horizon: float,
    schedule: Sequence[float] | None = None,
) -> ContinuumTrajectory:
    """d e = lap e + 2 a grad(v^2) with the volume path given in closed form."""
    _check_tail(e0, "energy initial profile")
    _check_tail(v_path.initial, "volume profile feeding the energy source")
    cutoff = e0.cutoff
    if v_path.initial.cutoff != cutoff:
        raise InvalidParameterError("energy and volume profiles must share a cutoff")
    k = np.arange(-cutoff, cutoff + 1)

    def source(s: float) -> np.ndarray:
        vc = v_path.coeffs_at(s)
        return 2.0 * alpha * (2j * np.pi * k) * _convolve(vc, vc, cutoff)

    return _integrate_with_source(e0, source, horizon, schedule)


def solve_chi(
    v_path: VolumeSolution,
    chi0: SpectralProfile,
    horizon: float,
    schedule: Sequence[float] | None = None,
) -> ContinuumTrajectory:
    """d chi = lap chi + 2 (grad v)^2; inherits the maximum principle."""
    _check_tail(chi0, "compressibility initial profile")
    cutoff = chi0.cutoff
    if v_path.initial.cutoff != cutoff:
        raise InvalidParameterError("chi and volume profiles must share a cutoff")
    k = np.arange(-cutoff, cutoff + 1)

    def source(s: float) -> np.ndarray:
        dv = (2j * np.pi * k) * v_path.coeffs_at(s)
        return 2.0 * _convolve(dv, dv, cutoff)

    return _integrate_with_source(chi0, source, horizon, schedule)


def write_profile_csv(path, trajectory: ContinuumTrajectory, grid_points: int = 256) -> None:
    """CSV export with header t,u,value on a uniform evaluation grid."""
    u = np.arange(grid_points) / grid_points
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "u", "value"])
        for t, profile in zip(trajectory.times, trajectory.profiles):
            values = profile.value(u)
            for ui, vi in zip(u, values):
                writer.writerow([repr(float(t)), repr(float(ui)), repr(float(vi))])
