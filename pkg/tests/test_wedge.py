import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from modnuc.errors import ConditioningError, DomainError, NumericalError, TailLossWarning
from modnuc.quadrature import build_grid, discretize_function
from modnuc.wedge import (
    PHI,
    PI,
    TimeZeroProfile,
    WedgePoint,
    build_kernel,
    cauchy_continuation,
    compressed_norm,
    compression,
    compression_convergence,
    contraction_bound,
    damping,
    direct_continuation,
    kernel_value,
    phi_vector,
    pi_vector,
    relative_l2_error,
    sample_profiles,
    sector_decay_report,
    spectrum_report,
    subspace_vector,
    vector_bound_check,
)

BUMP = TimeZeroProfile(-2.0, 0.5)
FINE = build_grid(8.0, 512, 16)       # continuation grid
MEDIUM = build_grid(8.0, 64, 16)      # kernel bounds
COARSE = build_grid(10.0, 16, 16)     # 256-node spectrum grid


def quad_fourier(h, p):
    lo, hi = h.support
    re = quad(h, lo, hi, weight="cos", wvar=p, epsabs=1e-14, limit=200)[0]
    im = quad(h, lo, hi, weight="sin", wvar=p, epsabs=1e-14, limit=200)[0]
    return complex(re, -im)


def quad_laplace(h, c):
    lo, hi = h.support
    return quad(lambda y: h(y) * math.exp(c * y), lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)[0]


# ---------------------------------------------------------------- wedge and profiles


@pytest.mark.parametrize("x", [(0.0, 0.0), (1.0, -1.0), (-2.0, 1.0), (0.5, 0.1)])
def test_points_outside_wedge(x):
    with pytest.raises(DomainError):
        WedgePoint(*x)


@pytest.mark.parametrize("x, expected", [((0.0, -1.0), 0.367879441171442), ((0.5, -2.0), 0.22313016014843)])
def test_contraction_bound(x, expected):
    assert contraction_bound(x, 1.0) == pytest.approx(expected, abs=1e-14)


def test_sector_bounds():
    assert contraction_bound((0.0, -1.0), 1.0, 0) == 1.0
    assert contraction_bound((0.0, -1.0), 1.0, 3) == pytest.approx(0.0497870683678639, abs=1e-15)
    bounds = [contraction_bound((0.3, -0.8), 1.7, n) for n in range(6)]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))


@pytest.mark.parametrize("a, r", [(-1.0, 1.0), (0.5, 0.2), (-2.0, 0.0), (-2.0, -0.5)])
def test_profile_support_checked(a, r):
    with pytest.raises(DomainError):
        TimeZeroProfile(a, r)


def test_profile_vanishes_off_support():
    assert not np.any(BUMP(np.array([-2.5, -1.5, -3.0, 0.0, 1.0])))
    assert BUMP(-2.0) == pytest.approx(math.exp(-1.0))


def test_profile_integral():
    lo, hi = BUMP.support
    assert BUMP.integral() == pytest.approx(quad(BUMP, lo, hi, epsabs=1e-15)[0], abs=1e-14)


@pytest.mark.parametrize("p", [0.0, 0.7, -3.0, 25.0, 400.0])
def test_fourier_against_quad(p):
    assert abs(BUMP.fourier(p)[0] - quad_fourier(BUMP, p)) < 1e-12


@pytest.mark.parametrize("c", [0.0, 1.0, 5.0, 40.0])
def test_laplace_against_quad(c):
    exact = quad_laplace(BUMP, c)
    assert BUMP.laplace(c)[0] == pytest.approx(exact, rel=1e-12, abs=1e-300)


def test_sample_profiles_deterministic_and_valid():
    a, b = sample_profiles(20), sample_profiles(20)
    assert a == b
    assert a[0] == BUMP
    assert len(set(a)) == 20
    assert all(h.support[1] < 0 for h in a)
    assert sample_profiles(5, seed=1) != sample_profiles(5, seed=2)


# ---------------------------------------------------------------- subspace vectors


def test_phi_vector_decay():
    grid = build_grid(8.0, 64, 16)
    v = phi_vector(BUMP, 1.0, grid)
    vals = np.abs(v.values)
    t = grid.nodes
    assert np.all(vals <= BUMP.integral() + 1e-15)
    # log envelope drops faster than linearly in |theta|
    env = np.array([np.max(vals[np.abs(t) >= T]) for T in range(3, 8)])
    steps = -np.diff(np.log(env))
    assert np.all(np.diff(steps) > 0)
    assert env[-1] < 1e-8 * np.max(vals)


def test_pi_over_phi_is_cosh():
    grid = build_grid(4.0, 8, 8)
    phi, pi = phi_vector(BUMP, 1.0, grid), pi_vector(BUMP, 1.0, grid)
    np.testing.assert_array_equal(pi.coeffs, np.cosh(grid.nodes) * phi.coeffs)


def test_linearity():
    grid = build_grid(4.0, 8, 8)
    np.testing.assert_allclose(phi_vector(BUMP.scaled(2.0), 1.0, grid).coeffs,
                               2 * phi_vector(BUMP, 1.0, grid).coeffs, rtol=1e-15)


def test_phi_vector_values_against_quad():
    grid = build_grid(3.0, 2, 4)
    v = phi_vector(BUMP, 1.3, grid)
    for t, val in zip(grid.nodes, v.values):
        assert abs(val - quad_fourier(BUMP, 1.3 * math.sinh(t))) < 1e-12


def test_unknown_kind():
    with pytest.raises(DomainError):
        subspace_vector("psi", BUMP, 1.0, COARSE)


# ---------------------------------------------------------------- continuation


@pytest.fixture(scope="module")
def bump_vectors():
    return phi_vector(BUMP, 1.0, FINE), pi_vector(BUMP, 1.0, FINE)


def test_direct_value_at_zero():
    grid = build_grid(1.0, 1, 3)
    val = direct_continuation(phi_vector(BUMP, 1.0, grid))[1] / grid.sqrt_weights[1]
    assert abs(val.imag) < 1e-15
    assert 0 < val.real <= math.exp(-1.5) * BUMP.integral()
    assert val.real == pytest.approx(quad_laplace(BUMP, 1.0), rel=1e-12)


def test_direct_support_decay():
    v = phi_vector(BUMP, 1.0, build_grid(1.0, 1, 3))
    ratio = BUMP.laplace(math.cosh(3.0))[0] / direct_continuation(v)[1].real * v.grid.sqrt_weights[1]
    assert 0 < ratio < math.exp(-(math.cosh(3.0) - 1) * 1.5)


def test_direct_phi_is_real(bump_vectors):
    assert np.max(np.abs(direct_continuation(bump_vectors[0]).imag)) < 1e-12


def test_direct_pi_is_imaginary_and_odd(bump_vectors):
    d = direct_continuation(bump_vectors[1])
    assert np.max(np.abs(d.real)) == 0.0
    np.testing.assert_allclose(d, -d[::-1], atol=1e-15)


@pytest.mark.parametrize("which", [0, 1], ids=["phi", "pi"])
def test_cauchy_matches_direct(bump_vectors, which):
    v = bump_vectors[which]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        err = relative_l2_error(cauchy_continuation(v), direct_continuation(v))
    assert err < 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("kind", [PHI, PI])
def test_cauchy_matches_direct_for_sampled_profiles(kind):
    for h in sample_profiles(20):
        v = subspace_vector(kind, h, 1.0, FINE)
        assert relative_l2_error(cauchy_continuation(v), direct_continuation(v)) < 1e-6, h


def test_pi_cauchy_vanishes_at_zero(bump_vectors):
    assert abs(cauchy_continuation(bump_vectors[1], at=0.0)[0]) < 1e-15


def test_phi_cauchy_even(bump_vectors):
    v = bump_vectors[0]
    plus, minus = cauchy_continuation(v, at=[0.37, -0.37])
    assert abs(plus - minus) < 1e-14


def test_cauchy_at_off_grid_point(bump_vectors):
    v = bump_vectors[0]
    val = cauchy_continuation(v, at=0.0)[0]
    assert abs(val - quad_laplace(BUMP, 1.0)) < 1e-7 * abs(val)


def test_cauchy_tail_warning():
    v = phi_vector(BUMP, 1.0, build_grid(1.0, 4, 16))
    with pytest.warns(TailLossWarning):
        cauchy_continuation(v)


# ---------------------------------------------------------------- kernels


def test_kernel_point_value():
    val = kernel_value(PHI, (0.0, -1.0), 1.0, 0.0, 0.0)
    assert abs(val - 2 / math.pi ** 2 * math.exp(-1)) < 1e-12
    assert abs(val.imag) < 1e-18


@pytest.mark.parametrize("x", [(0.0, -1.0), (0.5, -2.0), (-0.2, -0.3)])
def test_pi_kernel_vanishes_at_origin(x):
    assert kernel_value(PI, x, 1.0, 0.0, 0.0) == 0


def test_kernels_differ_by_brace_sign():
    x, t, tp = (0.3, -1.0), 0.4, -1.1
    s = kernel_value(PHI, x, 1.0, t, tp) + kernel_value(PI, x, 1.0, t, tp)
    d = damping(x, 1.0, t) / (2j * math.pi)
    assert abs(s - 2 * d / (tp - t - 0.5j * math.pi)) < 1e-15


def test_phi_kernel_even_for_time_zero_points():
    t = np.linspace(-3, 3, 13)
    a = kernel_value(PHI, (0.0, -1.0), 1.0, t[:, None], t[None, :])
    b = kernel_value(PHI, (0.0, -1.0), 1.0, -t[:, None], t[None, :])
    np.testing.assert_allclose(a, b, rtol=1e-14)


def test_kernel_outside_wedge():
    with pytest.raises(DomainError):
        build_kernel(PHI, (1.0, -0.5), 1.0, COARSE)


def test_kernel_identity_on_profiles():
    grid = build_grid(8.0, 128, 16)
    report = vector_bound_check(PHI, (0.0, -1.0), 1.0, [BUMP], grid)
    assert report["identity_residual"] < 1e-6


# ---------------------------------------------------------------- spectra


def test_zero_matrix_spectrum():
    rep = spectrum_report(np.zeros((4, 4)))
    assert not np.any(rep.singular_values)
    assert rep.decay_index == 1


def test_rank_one_spectrum():
    u = np.arange(1.0, 6.0)
    rep = spectrum_report(np.outer(u, u))
    assert rep.singular_values[0] == pytest.approx(u @ u)
    assert np.count_nonzero(rep.singular_values > 1e-12) == 1
    assert rep.decay_index == 2


def test_spectrum_nonfinite():
    with pytest.raises(NumericalError):
        spectrum_report(np.array([[1.0, np.nan], [0.0, 1.0]]))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_spectrum_invariants(seed):
    rng = np.random.default_rng(seed)
    rep = spectrum_report(rng.standard_normal((7, 5)) + 1j * rng.standard_normal((7, 5)))
    s = rep.singular_values
    assert np.all(s >= 0) and np.all(np.diff(s) <= 0)
    assert rep.trace_norm >= rep.operator_norm
    assert rep.to_json()["count"] == 5


def test_trace_norm_refinement():
    a = spectrum_report(build_kernel(PHI, (0.0, -1.0), 1.0, COARSE))
    b = spectrum_report(build_kernel(PHI, (0.0, -1.0), 1.0, build_grid(10.0, 32, 16)))
    assert abs(b.trace_norm - a.trace_norm) / a.trace_norm < 0.01
    assert a.decay_index is not None and b.decay_index is not None


# ---------------------------------------------------------------- bounds


@pytest.mark.parametrize("kind", [PHI, PI])
@pytest.mark.parametrize("x", [(0.0, -1.0), (0.5, -2.0)])
def test_vector_bound(kind, x):
    report = vector_bound_check(kind, x, 1.0, sample_profiles(20), MEDIUM)
    assert report["status"] == "pass"
    assert report["worst_ratio"] <= report["bound"] + 1e-8
    assert len(report["ratios"]) == 20


def test_compression_below_bound():
    n = compressed_norm(PHI, (0.0, -1.0), 1.0, sample_profiles(12), MEDIUM)
    assert n <= contraction_bound((0.0, -1.0), 1.0) + 1e-8


def test_compression_monotone():
    rows = compression_convergence(PHI, (0.0, -1.0), 1.0, sample_profiles(8), MEDIUM)
    norms = [r["norm"] for r in rows]
    assert all(b >= a - 1e-14 for a, b in zip(norms, norms[1:]))


def test_single_profile_compression():
    single = compressed_norm(PHI, (0.0, -1.0), 1.0, [BUMP], MEDIUM)
    ratio = vector_bound_check(PHI, (0.0, -1.0), 1.0, [BUMP], MEDIUM)["worst_ratio"]
    assert single == pytest.approx(ratio, rel=1e-12)


def test_rank_deficient_profiles():
    with pytest.raises(ConditioningError):
        compression(PHI, (0.0, -1.0), 1.0, [BUMP, BUMP.scaled(2.0)], MEDIUM)
    with pytest.raises(ConditioningError):
        compression(PHI, (0.0, -1.0), 1.0, [], MEDIUM)


def test_sector_decay():
    report = sector_decay_report((0.0, -1.0), 1.0, [0, 1, 2, 3, 4], grid=MEDIUM)
    assert report["status"] == "pass"
    rows = report["rows"]
    assert rows[0]["bound"] == 1.0
    assert rows[3]["bound"] == pytest.approx(math.exp(-3))
    c = report["compressed_norm"]
    for row in rows[1:]:
        assert row["tensor_power_norm"] == pytest.approx(c ** row["n"], rel=1e-10)
        assert row["tensor_power_norm"] <= row["bound"]


def test_sector_decay_bounds_only():
    report = sector_decay_report((0.5, -2.0), 1.0, [0, 1, 2])
    assert [r["bound"] for r in report["rows"]] == [1.0, math.exp(-1.5), math.exp(-3.0)]
