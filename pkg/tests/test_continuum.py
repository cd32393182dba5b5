import numpy as np
import pytest

from bschain import continuum
from bschain.continuum import SpectralProfile, VolumeSolution
from bschain.errors import InvalidParameterError, ResolutionError

M = 64


def cos_profile(amplitude=1.0, cutoff=M):
    return SpectralProfile.from_harmonics(0.0, [(1, amplitude, 0.0)], cutoff=cutoff)


def test_profile_roundtrip_and_shift():
    prof = SpectralProfile.from_harmonics(0.7, [(1, 0.5, 0.0), (3, 0.0, 0.2)], cutoff=16)
    u = np.linspace(0.0, 1.0, 33)[:-1]
    direct = 0.7 + 0.5 * np.cos(2 * np.pi * u) + 0.2 * np.sin(6 * np.pi * u)
    assert np.max(np.abs(prof.value(u) - direct)) < 1e-12
    shifted = prof.shifted(0.23)
    assert np.max(np.abs(shifted.value(u) - prof.value(u + 0.23))) < 1e-12
    assert abs(prof.mean() - 0.7) < 1e-15
    assert abs(prof.l2_norm_sq() - (0.49 + 0.125 + 0.02)) < 1e-12


def test_profile_conjugate_symmetry_enforced():
    bad = np.zeros(5, dtype=complex)
    bad[3] = 1.0  # mode +1 without its conjugate partner
    with pytest.raises(InvalidParameterError):
        SpectralProfile(bad, 2)


def test_volume_single_mode_heat():
    traj = continuum.solve_volume(cos_profile(), 0.0, 0.1, schedule=[0.05, 0.1])
    u = np.linspace(0, 1, 17)[:-1]
    for t, prof in zip(traj.times, traj.profiles):
        assert np.max(np.abs(prof.value(u) - np.exp(-4 * np.pi**2 * t) * np.cos(2 * np.pi * u))) < 1e-14


def test_volume_single_mode_traveling():
    alpha = 0.7
    traj = continuum.solve_volume(cos_profile(), alpha, 0.08, schedule=[0.08])
    u = np.linspace(0, 1, 33)[:-1]
    expected = np.exp(-4 * np.pi**2 * 0.08) * np.cos(2 * np.pi * (u + 2 * alpha * 0.08))
    assert np.max(np.abs(traj.profiles[-1].value(u) - expected)) < 1e-13


def test_means_conserved():
    v0 = SpectralProfile.from_harmonics(0.4, [(1, 0.5, 0.0)], cutoff=M)
    e0 = SpectralProfile.from_harmonics(1.1, [(2, 0.3, 0.1)], cutoff=M)
    vtraj = continuum.solve_volume(v0, 0.5, 0.1, schedule=[0.1])
    etraj = continuum.solve_energy(e0, vtraj.solution, 0.5, 0.1, schedule=[0.1])
    assert abs(vtraj.profiles[-1].mean() - 0.4) < 1e-12
    assert abs(etraj.profiles[-1].mean() - 1.1) < 1e-10


def exact_energy_coeffs(e0, v0, alpha, t):
    """Independent closed-form oracle: mode-pair sum with exact time integrals."""
    cut = e0.cutoff
    k = np.arange(-cut, cut + 1)
    lam = 4 * np.pi**2 * k**2
    out = e0.coeffs * np.exp(-lam * t)
    rate = -4 * np.pi**2 * k**2 + 4j * np.pi * k * alpha
    for mi, m in enumerate(k):
        pref = 2 * alpha * (2j * np.pi * m)
        if pref == 0:
            continue
        acc = 0.0 + 0.0j
        for ji, j in enumerate(k):
            li = m - j + cut
            if li < 0 or li > 2 * cut:
                continue
            c = v0.coeffs[ji] * v0.coeffs[li]
            if c == 0:
                continue
            mu = rate[ji] + rate[li]
            d = mu + lam[mi]
            if abs(d) < 1e-13:
                integral = t * np.exp(-lam[mi] * t)
            else:
                integral = (np.exp(mu * t) - np.exp(-lam[mi] * t)) / d
            acc += pref * c * integral
        out[mi] += acc
    return out


def test_energy_pure_heat_cases():
    e0 = SpectralProfile.from_harmonics(1.0, [(1, 0.3, 0.0)], cutoff=M)
    zero_v = VolumeSolution(initial=SpectralProfile.from_harmonics(0.0, [], cutoff=M), alpha=0.9)
    traj = continuum.solve_energy(e0, zero_v, 0.9, 0.05, schedule=[0.05])
    u = np.linspace(0, 1, 33)[:-1]
    expected = 1.0 + 0.3 * np.exp(-4 * np.pi**2 * 0.05) * np.cos(2 * np.pi * u)
    assert np.max(np.abs(traj.profiles[-1].value(u) - expected)) < 1e-12
    # alpha = 0 decouples regardless of the volume path
    vsol = VolumeSolution(initial=cos_profile(0.5), alpha=0.0)
    traj0 = continuum.solve_energy(e0, vsol, 0.0, 0.05, schedule=[0.05])
    assert np.max(np.abs(traj0.profiles[-1].value(u) - expected)) < 1e-12


def test_energy_matches_exact_oracle():
    alpha = 0.5
    v0 = SpectralProfile.from_harmonics(0.0, [(1, 0.5, 0.0), (2, 0.0, 0.25)], cutoff=M)
    e0 = SpectralProfile.from_harmonics(1.0, [(1, 0.25, 0.0)], cutoff=M)
    vsol = VolumeSolution(initial=v0, alpha=alpha)
    traj = continuum.solve_energy(e0, vsol, alpha, 0.05, schedule=[0.02, 0.05])
    for t, prof in zip(traj.times, traj.profiles):
        ref = exact_energy_coeffs(e0, v0, alpha, t)
        assert np.max(np.abs(prof.coeffs - ref)) < 1e-10


@pytest.mark.slow
def test_energy_matches_method_of_lines():
    """Finite-difference RK4 method-of-lines reference on 2048 grid points."""
    alpha = 0.5
    v0 = cos_profile(0.5)
    e0 = SpectralProfile.from_harmonics(1.0, [], cutoff=M)
    vsol = VolumeSolution(initial=v0, alpha=alpha)
    horizon = 0.01
    spectral = continuum.solve_energy(e0, vsol, alpha, horizon, schedule=[horizon]).profiles[-1]
    m = 2048
    u = np.arange(m) / m
    e = e0.value(u)
    dt = 2.5 / (4.0 * m * m)
    nst = int(np.ceil(horizon / dt))
    dt = horizon / nst

    def rhs(e_field, s):
        v2 = vsol.at(s).value(u) ** 2
        lap = m * m * (np.roll(e_field, -1) + np.roll(e_field, 1) - 2 * e_field)
        grad_v2 = 0.5 * m * (np.roll(v2, -1) - np.roll(v2, 1))
        return lap + 2 * alpha * grad_v2

    s = 0.0
    for _ in range(nst):
        k1 = rhs(e, s)
        k2 = rhs(e + 0.5 * dt * k1, s + 0.5 * dt)
        k3 = rhs(e + 0.5 * dt * k2, s + 0.5 * dt)
        k4 = rhs(e + dt * k3, s + dt)
        e += (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        s += dt
    assert np.max(np.abs(spectral.value(u) - e)) < 1e-6


def test_chi_positivity_heat_case_and_identity():
    alpha = 0.5
    v0 = cos_profile(0.5)
    e0 = SpectralProfile.from_harmonics(1.0, [(1, 0.25, 0.0)], cutoff=M)
    chi0 = SpectralProfile(e0.coeffs - np.convolve(v0.coeffs, v0.coeffs)[M : 3 * M + 1], M)
    vsol = VolumeSolution(initial=v0, alpha=alpha)
    sched = [0.01, 0.05, 0.2]
    chi_traj = continuum.solve_chi(vsol, chi0, 0.2, schedule=sched)
    grid = np.linspace(0, 1, 512, endpoint=False)
    for prof in chi_traj.profiles:
        assert prof.value(grid).min() >= -1e-8
    # constant v: chi follows the pure heat flow
    const_v = VolumeSolution(initial=SpectralProfile.from_harmonics(0.3, [], cutoff=M), alpha=alpha)
    heat = continuum.solve_chi(const_v, chi0, 0.05, schedule=[0.05]).profiles[-1]
    k = np.arange(-M, M + 1)
    expected = chi0.coeffs * np.exp(-4 * np.pi**2 * k**2 * 0.05)
    assert np.max(np.abs(heat.coeffs - expected)) < 1e-10
    # chi = e - v^2 between the two solvers
    etraj = continuum.solve_energy(e0, vsol, alpha, 0.05, schedule=[0.02, 0.05])
    ctraj = continuum.solve_chi(vsol, chi0, 0.05, schedule=[0.02, 0.05])
    for t, eprof, cprof in zip(etraj.times, etraj.profiles, ctraj.profiles):
        vt = vsol.coeffs_at(t)
        v2 = np.convolve(vt, vt)[M : 3 * M + 1]
        assert np.max(np.abs(cprof.coeffs - (eprof.coeffs - v2))) < 1e-8


def test_resolution_error_on_tail_mass():
    coeffs = np.zeros(2 * 8 + 1, dtype=complex)
    coeffs[8] = 1.0
    coeffs[8 + 7] = 0.5  # mode 7 of cutoff 8 sits beyond the half-band
    coeffs[8 - 7] = 0.5
    bad = SpectralProfile(coeffs, 8)
    with pytest.raises(ResolutionError):
        continuum.solve_volume(bad, 0.0, 0.1)


def test_profile_csv(tmp_path):
    traj = continuum.solve_volume(cos_profile(), 0.0, 0.01, schedule=[0.01])
    continuum.write_profile_csv(tmp_path / "v.csv", traj, grid_points=8)
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[0] == "t,u,value"
    assert len(lines) == 1 + 8 * len(traj.times)
