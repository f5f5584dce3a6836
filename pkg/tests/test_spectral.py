import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import TWO_PI_CUBED, scalar, vector
from lifespan.spectral import (
    Grid,
    GridError,
    MixedNormSpec,
    SpectralField,
    SpectralVectorField,
    advect,
    advect_exact,
    derivative,
    divergence_residual,
    forward,
    heat_flow,
    hermitian_defect,
    inverse,
    l2_norm,
    lebesgue_norm,
    leray_project,
    mixed_norm,
)


def random_values(grid, seed, vector=False):
    shape = ((3,) if vector else ()) + grid.shape
    return np.random.default_rng(seed).standard_normal(shape)


def band_limited(grid, seed, m_max, vector=True):
    """Random real field whose modes satisfy ``|m_i| <= m_max`` on every axis."""
    f = forward(random_values(grid, seed, vector), grid)
    idx = np.abs(grid.index1d)
    keep = (idx[:, None, None] <= m_max) & (idx[None, :, None] <= m_max) & (idx[None, None, :] <= m_max)
    c = f.coeffs * keep
    c[..., 0, 0, 0] = 0
    return type(f)(grid, c)


# ---------------------------------------------------------------------------
# grid and transforms


@pytest.mark.parametrize("n", [4, 12, 48])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(GridError):
        Grid(n)


def test_grid_rejects_nonpositive_box():
    with pytest.raises(GridError):
        Grid(16, box_len=0.0)


def test_grid_wavenumbers_and_nyquist():
    g = Grid(16, box_len=math.pi)
    assert g.k0 == pytest.approx(2.0)
    assert g.nyquist == pytest.approx(16.0)
    assert set(np.unique(np.abs(g.kvec[0]))) <= {2.0 * m for m in range(9)}


def test_forward_constant(grid16):
    a = forward(np.ones(grid16.shape), grid16)
    assert a.coeffs[0, 0, 0] == pytest.approx(1.0)
    rest = a.coeffs.copy()
    rest[0, 0, 0] = 0
    assert np.max(np.abs(rest)) < 1e-15


def test_forward_cosine_modes(grid16):
    a = scalar(grid16, lambda x1, x2, x3: np.cos(x1))
    assert a.coeffs[1, 0, 0] == pytest.approx(0.5, abs=1e-15)
    assert a.coeffs[-1, 0, 0] == pytest.approx(0.5, abs=1e-15)
    rest = a.coeffs.copy()
    rest[1, 0, 0] = rest[-1, 0, 0] = 0
    assert np.max(np.abs(rest)) < 1e-15


def test_forward_rejects_wrong_shape(grid16):
    with pytest.raises(GridError):
        forward(np.zeros((8, 8, 8)), grid16)


@given(seed=st.integers(0, 2**32 - 1))
def test_round_trip_and_hermitian(seed):
    g = Grid(8)
    v = random_values(g, seed)
    a = forward(v, g)
    assert np.max(np.abs(inverse(a) - v)) <= 1e-12 * np.max(np.abs(v))
    assert hermitian_defect(a.coeffs) < 1e-12


@given(seed=st.integers(0, 2**32 - 1))
def test_parseval(seed):
    g = Grid(8, box_len=3.0)
    v = random_values(g, seed)
    physical = np.sum(v**2) * g.volume / v.size
    assert l2_norm(forward(v, g)) ** 2 == pytest.approx(physical, rel=1e-10)


# ---------------------------------------------------------------------------
# differential operators


def test_derivative_examples(grid16):
    x1, x2, x3 = grid16.coords()
    d1 = derivative(scalar(grid16, lambda a, b, c: np.cos(a)), 0)
    assert np.max(np.abs(inverse(d1) + np.sin(x1))) < 1e-13
    d33 = derivative(scalar(grid16, lambda a, b, c: np.cos(c)), 2, order=2)
    assert np.max(np.abs(inverse(d33) + np.cos(x3))) < 1e-13
    d2 = derivative(scalar(grid16, lambda a, b, c: np.sin(a) * np.cos(2 * c)), 1)
    assert np.max(np.abs(d2.coeffs)) == 0.0


def test_derivative_order_checked(grid16):
    with pytest.raises(ValueError):
        derivative(scalar(grid16, lambda a, b, c: np.cos(a)), 0, order=3)


def test_heat_flow_examples(grid16):
    a = scalar(grid16, lambda x1, x2, x3: np.cos(x1))
    assert np.array_equal(heat_flow(a, 0.0).coeffs, a.coeffs)
    expected = math.exp(-0.5) * inverse(a)
    assert np.max(np.abs(inverse(heat_flow(a, 0.5)) - expected)) < 1e-14
    assert math.exp(-0.5) == pytest.approx(0.60653, abs=1e-5)
    with pytest.raises(ValueError):
        heat_flow(a, -1.0)


@given(seed=st.integers(0, 2**32 - 1), s=st.floats(0.0, 2.0), t=st.floats(0.0, 2.0))
def test_heat_semigroup(seed, s, t):
    g = Grid(8)
    a = forward(random_values(g, seed, vector=True), g)
    lhs = heat_flow(heat_flow(a, s), t).coeffs
    rhs = heat_flow(a, s + t).coeffs
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(a.coeffs))


# ---------------------------------------------------------------------------
# Leray projection


def test_leray_kills_gradients(grid16):
    phi = scalar(grid16, lambda a, b, c: np.sin(a) * np.sin(b) * np.sin(c))
    grad = SpectralVectorField.from_components([derivative(phi, i) for i in range(3)])
    assert np.max(np.abs(leray_project(grad).coeffs)) < 1e-15


def test_leray_keeps_planar_curl(grid16):
    psi = scalar(grid16, lambda a, b, c: np.sin(a) * np.cos(2 * b) + np.cos(a + c))
    v = SpectralVectorField.from_components([-derivative(psi, 1), derivative(psi, 0), SpectralField(grid16, 0 * psi.coeffs)])
    assert np.max(np.abs(leray_project(v).coeffs - v.coeffs)) < 1e-15


def test_leray_symbol_on_parallel_mode(grid16):
    # k = (+-1, 0, 0) and v parallel to k: (delta_ij - k_i k_j / |k|^2) v = 0
    v = vector(grid16, lambda a, b, c: (np.cos(a), 0 * a, 0 * a))
    assert np.max(np.abs(leray_project(v).coeffs)) < 1e-15


@given(seed=st.integers(0, 2**32 - 1))
def test_leray_algebra(seed):
    g = Grid(8)
    v = forward(random_values(g, seed, vector=True), g)
    p = leray_project(v)
    scale = np.max(np.abs(v.coeffs))
    assert np.max(np.abs(leray_project(p).coeffs - p.coeffs)) <= 1e-10 * scale
    assert divergence_residual(p) <= 1e-10
    # the mean passes through unchanged
    assert np.array_equal(p.coeffs[:, 0, 0, 0], v.coeffs[:, 0, 0, 0])


def test_divergence_free_flag_is_checked(grid16):
    v = vector(grid16, lambda a, b, c: (np.sin(a), 0 * a, 0 * a))
    with pytest.raises(ValueError):
        SpectralVectorField(grid16, v.coeffs, divergence_free=True)


# ---------------------------------------------------------------------------
# advection


def test_advect_shear_and_zero(grid16):
    shear = vector(grid16, lambda a, b, c: (np.sin(c) + np.cos(2 * c), 0 * a, 0 * a))
    assert np.max(np.abs(advect(shear).coeffs)) < 1e-15
    zero = SpectralVectorField(grid16, np.zeros((3,) + grid16.shape, dtype=complex))
    assert np.max(np.abs(advect(zero).coeffs)) == 0.0


def test_advect_cross_flow(grid16):
    x1, x2, x3 = grid16.coords()
    u = vector(grid16, lambda a, b, c: (np.cos(b), np.cos(a), 0 * a))
    got = advect(u).values()
    assert np.max(np.abs(got[0] + np.cos(x1) * np.sin(x2))) < 1e-13
    assert np.max(np.abs(got[1] + np.cos(x2) * np.sin(x1))) < 1e-13
    assert np.max(np.abs(got[2])) < 1e-13


def _direct_values(coeffs, kvec, points):
    """Evaluate a Fourier series by explicit summation over its nonzero modes."""
    nz = np.argwhere(np.abs(coeffs) > 0)
    k = np.stack([kvec[i].ravel()[nz[:, i]] for i in range(3)], axis=1)
    phase = np.exp(1j * points @ k.T)
    return (phase @ coeffs[tuple(nz.T)]).real


@pytest.mark.parametrize("seed", [0, 1])
def test_advect_matches_direct_summation(seed):
    # inputs with |m| <= 2 on a 16 grid: every product mode lies under the 2/3 cutoff
    g = Grid(16, box_len=5.0)
    u = band_limited(g, seed, 2)
    rng = np.random.default_rng(seed + 100)
    pts = rng.uniform(0, g.box_len, size=(300, 3))
    uvals = np.stack([_direct_values(u.coeffs[i], g.kvec, pts) for i in range(3)])
    out = np.zeros_like(uvals)
    for j in range(3):
        dj = np.stack([_direct_values(1j * g.kvec[j] * u.coeffs[i], g.kvec, pts) for i in range(3)])
        out += uvals[j] * dj
    adv = advect(u).coeffs
    got = np.stack([_direct_values(adv[i], g.kvec, pts) for i in range(3)])
    assert np.max(np.abs(got - out)) <= 1e-10 * np.max(np.abs(out))


def test_advect_exact_agrees_with_dealiased_for_low_modes():
    g = Grid(16)
    u = band_limited(g, 3, 2)
    exact, shape = advect_exact(u)
    native = advect(u).coeffs
    # embed the exact product into the native index range and compare
    from lifespan.spectral import resize_spectrum

    assert np.max(np.abs(resize_spectrum(exact, g.shape) - native)) < 1e-13 * np.max(np.abs(native))


# ---------------------------------------------------------------------------
# norms


def test_lebesgue_examples(grid16):
    a = scalar(grid16, lambda x1, x2, x3: np.cos(x1))
    assert lebesgue_norm(a, np.inf) == pytest.approx(1.0, abs=1e-3)
    assert lebesgue_norm(a, 2) == pytest.approx(math.sqrt(TWO_PI_CUBED / 2), rel=1e-12)
    assert lebesgue_norm(a, 2) == pytest.approx(11.1366, abs=1e-4)
    one = forward(np.ones(grid16.shape), grid16)
    assert lebesgue_norm(one, 4) == pytest.approx((2 * math.pi) ** 0.75, rel=1e-12)


def test_lebesgue_rejects_other_exponents(grid16):
    a = scalar(grid16, lambda x1, x2, x3: np.cos(x1))
    with pytest.raises(ValueError):
        lebesgue_norm(a, 3)


def test_mixed_norm_examples(grid16):
    a3 = scalar(grid16, lambda x1, x2, x3: np.cos(x3))
    assert mixed_norm(a3, MixedNormSpec(np.inf, 2)) == pytest.approx(2 * math.pi, rel=1e-12)
    a1 = scalar(grid16, lambda x1, x2, x3: np.cos(x1))
    assert mixed_norm(a1, MixedNormSpec(np.inf, 2)) == pytest.approx(math.sqrt((2 * math.pi) ** 2 / 2), rel=1e-12)
    zero = SpectralField(grid16, np.zeros(grid16.shape, dtype=complex))
    assert mixed_norm(zero, MixedNormSpec(2, 4)) == 0.0


def test_mixed_norm_rejects_unsupported_pair():
    with pytest.raises(ValueError):
        MixedNormSpec(4, 2)


def test_anisotropic_inequalities_over_random_fields():
    g = Grid(16)
    worst_v = worst_h = 0.0
    for seed in range(100):
        a = band_limited(g, seed, 5, vector=False)
        # vertical inequality needs zero x3-average, horizontal needs zero plane averages
        cv = a.coeffs.copy()
        cv[:, :, 0] = 0
        av = SpectralField(g, cv)
        ratio_v = mixed_norm(av, MixedNormSpec(np.inf, 2)) / math.sqrt(l2_norm(derivative(av, 2)) * l2_norm(av))
        ch = a.coeffs.copy()
        ch[0, 0, :] = 0
        ah = SpectralField(g, ch)
        grad_h = math.hypot(l2_norm(derivative(ah, 0)), l2_norm(derivative(ah, 1)))
        ratio_h = mixed_norm(ah, MixedNormSpec(2, 4)) / math.sqrt(l2_norm(ah) * grad_h)
        worst_v, worst_h = max(worst_v, ratio_v), max(worst_h, ratio_h)
    print(f"max ratios: vertical {worst_v:.4f}, horizontal {worst_h:.4f}")
    assert worst_v <= 4.0
    assert worst_h <= 4.0
