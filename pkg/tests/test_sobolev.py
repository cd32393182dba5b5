import math

import numpy as np
import pytest

from bschain import chain, sobolev
from bschain.chain import ChainParams
from bschain.continuum import SpectralProfile
from bschain.errors import InvalidParameterError
from bschain.lattice import basis_eigenvalue

SEED = 55100


def test_kernel_closed_form_n2():
    k = sobolev.green_kernel(2)
    assert abs(k.values[0] - 9.0 / 17.0) < 1e-14
    assert abs(k.values[1] - 8.0 / 17.0) < 1e-14
    # (I - lap) K at 0: 9/17 + 8/17 = 1
    screened = k.values[0] - 4.0 * (2 * k.values[1] - 2 * k.values[0])
    assert abs(screened - 1.0) < 1e-12


@pytest.mark.parametrize("n", list(range(2, 257)))
def test_kernel_identities_all_sizes(n):
    kernel = sobolev.green_kernel(n)  # construction re-checks evenness, delta, gap
    assert kernel.values.sum() == pytest.approx(1.0, abs=1e-10)
    assert sobolev.kernel_difference_identity_gap(kernel) <= 1e-10


def test_norm_trivial_and_constant():
    kernel = sobolev.green_kernel(16)
    assert sobolev.h_minus1_norm_sq(np.zeros(16), kernel) == 0.0
    c = 1.7
    # constant field: only the flat mode survives, giving c^2 (direct sum checked inside)
    assert sobolev.h_minus1_norm_sq(np.full(16, c), kernel) == pytest.approx(c * c, rel=1e-12)


def test_young_inequality_random_fields():
    rng = np.random.default_rng(8)
    for n in (8, 17, 32):
        kernel = sobolev.green_kernel(n)
        f = rng.standard_normal(n)
        g = rng.standard_normal(n)
        pair = abs(float(f @ sobolev.kernel_convolve(kernel, g)) / n)
        nf = sobolev.h_minus1_norm_sq(f, kernel)
        ng = sobolev.h_minus1_norm_sq(g, kernel)
        for a in (0.5, 1.0, 2.0):
            assert pair <= 0.5 * a * nf + 0.5 / a * ng + 1e-12


def test_fourth_moment_functional_values():
    m4, h1 = sobolev.fourth_moment_functional(np.zeros(12))
    assert m4 == 0.0 and h1 == 0.0
    c = 1.3
    m4, h1 = sobolev.fourth_moment_functional(np.full(12, c))
    assert m4 == pytest.approx(c**4, rel=1e-12)
    assert h1 == pytest.approx(c**4, rel=1e-12)


def test_fourth_moment_equilibrium_mean():
    rng = chain.make_rng(SEED)
    reps, n = 100_000, 16
    etas = rng.standard_normal((reps, n))
    m4 = np.sum(etas**4, axis=1) / n
    se = m4.std(ddof=1) / math.sqrt(reps)
    assert abs(m4.mean() - 3.0) < 4 * se


def test_fluctuation_field_basics():
    params = ChainParams(n=16, alpha=0.5, kappa=1.0)
    g1 = SpectralProfile.from_harmonics(0.0, [(1, math.sqrt(2), 0.0)], cutoff=8)
    g2 = SpectralProfile.from_harmonics(0.0, [(2, 0.0, 1.0)], cutoff=8)
    v = np.linspace(-1, 1, 16)
    assert sobolev.fluctuation_field(v.copy(), 0.3, v, g1, params) == 0.0
    rng = np.random.default_rng(2)
    eta = rng.standard_normal(16)
    combo = SpectralProfile(2.0 * g1.coeffs + 3.0 * g2.coeffs, 8)
    lhs = sobolev.fluctuation_field(eta, 0.2, v, combo, params)
    rhs = 2.0 * sobolev.fluctuation_field(eta, 0.2, v, g1, params) + 3.0 * sobolev.fluctuation_field(
        eta, 0.2, v, g2, params
    )
    assert abs(lhs - rhs) < 1e-12


def test_fluctuation_field_equilibrium_variance():
    params = ChainParams(n=64, alpha=0.5, kappa=1.0)
    beta = 2.0
    g1 = SpectralProfile.from_harmonics(0.0, [(1, math.sqrt(2), 0.0)], cutoff=8)
    gvals = g1.grid_values(64)
    rng = chain.make_rng(SEED + 1)
    reps = 100_000
    etas = rng.standard_normal((reps, 64)) / math.sqrt(beta)
    fields = etas @ gvals / math.sqrt(64)
    target = g1.l2_norm_sq() / beta
    assert abs(fields.var() - target) < 0.05 * target


def test_qv_estimator_constant_test_function_and_warning():
    params = ChainParams(n=16, alpha=0.5, kappa=1.0)
    const = SpectralProfile.from_harmonics(2.0, [], cutoff=8)
    times = np.linspace(0.0, 0.1, 21)
    rng = np.random.default_rng(3)
    snaps = rng.standard_normal((21, 16))
    series = sobolev.qv_estimator(times, snaps, const, params)
    assert np.max(np.abs(series.values)) == 0.0
    g1 = SpectralProfile.from_harmonics(0.0, [(1, math.sqrt(2), 0.0)], cutoff=8)
    smooth = np.tile(np.sin(2 * np.pi * np.arange(16) / 16), (21, 1))
    fine = sobolev.qv_estimator(times, smooth, g1, params)
    assert not fine.resolution_warning
    with pytest.raises(InvalidParameterError):
        sobolev.qv_estimator(times, snaps[:, :8], g1, params)


@pytest.mark.slow
def test_qv_estimator_equilibrium_mean():
    params = ChainParams(n=16, alpha=0.5, kappa=1.0)
    beta = 1.0
    g1 = SpectralProfile.from_harmonics(0.0, [(1, math.sqrt(2), 0.0)], cutoff=8)
    sched = np.linspace(0.0, 0.1, 41)
    reps = 2000
    totals = np.zeros(2)
    for r in range(reps):
        st = chain.sample_gibbs(params, 0.0, beta, SEED + 2, replica=r)
        rec = chain.simulate(params, st, 0.1, schedule=sched)
        series = sobolev.qv_estimator(rec.times, rec.snapshots, g1, params)
        totals += [series.values[-1], series.values[len(sched) // 2]]
    mean_end, mean_half = totals / reps
    n = params.n
    discrete_grad_sq = 4.0 * n * n * math.sin(math.pi / n) ** 2  # lattice |grad G|^2 for h_1
    assert abs(mean_end - 2 * 0.1 * discrete_grad_sq / beta) < 0.05 * 2 * 0.1 * discrete_grad_sq
    assert abs(mean_half - 2 * 0.05 * discrete_grad_sq / beta) < 0.05 * 2 * 0.05 * discrete_grad_sq


def test_h_minus_m_norm():
    val, tail = sobolev.h_minus_m_norm_sq({1: 1.0}, 3.0, 10)
    assert val == pytest.approx(basis_eigenvalue(1) ** -3)
    assert tail <= basis_eigenvalue(10) ** -3
    # monotone decreasing in m for fixed pairings
    pairings = {z: 1.0 / (1 + abs(z)) for z in range(-6, 7)}
    v1, _ = sobolev.h_minus_m_norm_sq(pairings, 1.0, 6)
    v2, _ = sobolev.h_minus_m_norm_sq(pairings, 2.0, 6)
    v3, _ = sobolev.h_minus_m_norm_sq(pairings, 3.0, 6)
    assert v1 > v2 > v3


def test_h_minus_m_white_noise_series():
    rng = chain.make_rng(SEED + 3)
    sigma = 0.8
    cutoff = 12
    m = 3.0
    reps = 4000
    vals = np.empty(reps)
    zs = np.arange(-cutoff, cutoff + 1)
    weights = np.array([basis_eigenvalue(int(z)) ** -m for z in zs])
    for r in range(reps):
        pair_vals = sigma * rng.standard_normal(zs.size)
        vals[r] = float(weights @ pair_vals**2)
    expected = sigma**2 * weights.sum()
    se = vals.std(ddof=1) / math.sqrt(reps)
    assert abs(vals.mean() - expected) < 4 * se


@pytest.mark.slow
def test_moving_frame_sign_validated_by_equilibrium_covariance():
    """The co-moving frame keeps the field's two-time covariance on the heat
    decay; the opposite shift and the lattice-speed shift suppress it."""
    n = 64
    params = ChainParams(n=n, alpha=8.0, kappa=1.0)  # strong drift, alpha_n = 1/8
    beta = 1.0
    t_end = 0.02
    reps = 2000
    g = SpectralProfile.from_harmonics(
        0.0, [(1, 1.0, 0.0), (2, 0.5, 0.0), (3, 1.0 / 3.0, 0.0)], cutoff=8
    )
    gvals0 = g.grid_values(n)
    shift = sobolev.frame_shift(params, t_end)
    variants = {
        "comoving": g.shifted(shift).grid_values(n),
        "opposite": g.shifted(-shift).grid_values(n),
        "lattice_speed": g.shifted(shift * n).grid_values(n),
    }
    sums = {k: 0.0 for k in variants}
    sq = {k: 0.0 for k in variants}
    for r in range(reps):
        st = chain.sample_gibbs(params, 0.0, beta, SEED + 4, replica=r)
        rec = chain.simulate(params, st, t_end, schedule=[0.0, t_end])
        f0 = float(rec.snapshots[0] @ gvals0 / math.sqrt(n))
        for key, gv in variants.items():
            ft = float(rec.snapshots[1] @ gv / math.sqrt(n))
            sums[key] += f0 * ft
            sq[key] += (f0 * ft) ** 2
    cov = {k: sums[k] / reps for k in variants}
    se = {k: math.sqrt(max(sq[k] / reps - cov[k] ** 2, 0.0) / reps) for k in variants}
    # heat-semigroup pairing: each a*cos(2 pi k u) harmonic carries L2 mass a^2/2
    modes = [(1, 1.0), (2, 0.5), (3, 1.0 / 3.0)]
    theory = sum(0.5 * a * a * math.exp(-4 * math.pi**2 * k * k * t_end) for k, a in modes) / beta
    assert abs(cov["comoving"] - theory) < 5 * se["comoving"]
    assert cov["comoving"] > abs(cov["opposite"]) + 3 * se["opposite"]
    assert cov["comoving"] > abs(cov["lattice_speed"]) + 3 * se["lattice_speed"]


def test_estimator_csv(tmp_path):
    sobolev.write_estimator_csv(tmp_path / "est.csv", [(0.1, "qv", 1.5, 0.01, 100)])
    lines = (tmp_path / "est.csv").read_text().splitlines()
    assert lines[0] == "t,quantity,mean,stderr,replicas"
    assert lines[1].startswith("0.1,qv,1.5,0.01,100")
