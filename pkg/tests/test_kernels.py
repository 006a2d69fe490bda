import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netbaseline.kernels import (
    KERNEL_SHAPES,
    KernelSpec,
    QuadratureGrid,
    WeightFunction,
    default_weight,
    fn_weight,
    fn_weight_diagonal,
    k2_constant,
    kernel_at,
    kernel_event_sum,
    smooth_values,
)
from netbaseline.kernels import test_interval_weight as split_weight

GRID = QuadratureGrid(horizon=10.0, size=4001)


def k2_oracle(shape: str, n: int = 200_001) -> float:
    """Squared-overlap constant by a different route: the overlap function
    at every lag at once via FFT autocorrelation, then an outer trapezoid.
    Only valid for continuous kernels."""
    u, du = np.linspace(-1.0, 1.0, n, retstep=True)
    if shape == "triangular":
        profile = np.maximum(1.0 - np.abs(u), 0.0)
    elif shape == "epanechnikov":
        profile = 0.75 * (1.0 - u * u)
    else:
        raise ValueError(shape)
    m = 1 << int(np.ceil(np.log2(2 * n)))
    spectrum = np.fft.rfft(profile, m)
    overlap = np.fft.irfft(spectrum * np.conj(spectrum), m)[:n] * du
    lags = np.arange(n) * du
    return float(np.trapezoid(overlap**2, lags))


class TestK2Constant:
    def test_uniform_exact(self):
        assert k2_constant(KernelSpec("uniform")) == pytest.approx(1 / 6, abs=1e-9)

    @pytest.mark.parametrize("shape", ["triangular", "epanechnikov"])
    def test_continuous_shapes_match_fft_oracle(self, shape):
        val = k2_constant(KernelSpec(shape))
        assert val == pytest.approx(k2_oracle(shape), rel=1e-6)

    def test_closed_forms(self):
        # both constants are simple rationals; the quadrature should land on
        # them to machine precision
        assert k2_constant(KernelSpec("triangular")) == pytest.approx(151 / 630, rel=1e-12)
        assert k2_constant(KernelSpec("epanechnikov")) == pytest.approx(167 / 770, rel=1e-12)

    def test_bandwidth_free(self):
        for shape in KERNEL_SHAPES:
            a = k2_constant(KernelSpec(shape, bandwidth=0.3))
            b = k2_constant(KernelSpec(shape, bandwidth=7.0))
            assert a == b


class TestKernelAt:
    @pytest.mark.parametrize("shape", KERNEL_SHAPES)
    def test_unit_mass_interior(self, shape):
        kern = KernelSpec(shape, bandwidth=1.5)
        s = np.linspace(0.0, 10.0, 20001)
        vals = kernel_at(kern, 5.0, s)
        # the uniform profile has jumps at the support edge, so trapezoid
        # converges only at first order there
        tol = 1e-3 if shape == "uniform" else 1e-7
        assert np.trapezoid(vals, s) == pytest.approx(1.0, abs=tol)

    def test_compact_support(self):
        kern = KernelSpec("epanechnikov", bandwidth=2.0)
        assert kernel_at(kern, 5.0, 7.0 + 1e-9) == 0.0
        assert kernel_at(kern, 5.0, 2.0) == 0.0
        assert kernel_at(kern, 5.0, 5.0) == pytest.approx(0.75 / 2.0)

    @given(
        t=st.floats(-5, 5, allow_nan=False),
        s=st.floats(-5, 5, allow_nan=False),
        h=st.floats(0.1, 3.0, allow_nan=False),
    )
    def test_symmetric_in_arguments(self, t, s, h):
        kern = KernelSpec("triangular", bandwidth=h)
        assert kernel_at(kern, t, s) == kernel_at(kern, s, t)

    def test_rejects_unknown_shape(self):
        with pytest.raises(ValueError, match="unknown kernel shape"):
            KernelSpec("gaussian")

    def test_rejects_nonpositive_bandwidth(self):
        with pytest.raises(ValueError, match="bandwidth"):
            KernelSpec("uniform", bandwidth=0.0)


class TestQuadratureGrid:
    def test_integrate_constant(self):
        assert GRID.integrate(np.full(GRID.size, 3.0)) == pytest.approx(30.0, rel=1e-14)

    def test_integrate_linear_exact(self):
        t = GRID.points
        assert GRID.integrate(2.0 * t) == pytest.approx(100.0, rel=1e-12)

    def test_interp_at_nodes(self):
        y = GRID.points**2
        assert GRID.interp(GRID.points[137], y) == pytest.approx(y[137])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="aligned"):
            GRID.integrate(np.zeros(17))


class TestSmoothing:
    @pytest.mark.parametrize("shape", KERNEL_SHAPES)
    def test_constant_preserved_interior(self, shape):
        kern = KernelSpec(shape, bandwidth=1.0)
        out = smooth_values(np.full(GRID.size, 4.0), kern, GRID)
        interior = (GRID.points >= 1.0) & (GRID.points <= 9.0)
        assert np.max(np.abs(out[interior] - 4.0)) < 1e-12

    def test_constant_halves_at_boundary(self):
        # no boundary correction: mass outside [0, T] is simply lost
        kern = KernelSpec("triangular", bandwidth=1.0)
        out = smooth_values(np.full(GRID.size, 4.0), kern, GRID)
        assert out[0] == pytest.approx(2.0, rel=1e-10)
        assert out[-1] == pytest.approx(2.0, rel=1e-10)

    @pytest.mark.parametrize("shape", KERNEL_SHAPES)
    def test_linear_preserved_interior(self, shape):
        kern = KernelSpec(shape, bandwidth=0.8)
        f = 1.0 + 0.5 * GRID.points
        out = smooth_values(f, kern, GRID)
        interior = (GRID.points >= 1.0) & (GRID.points <= 9.0)
        assert np.max(np.abs(out[interior] - f[interior])) < 1e-10

    def test_mass_preserved_for_interior_bump(self):
        kern = KernelSpec("epanechnikov", bandwidth=1.0)
        f = np.where(np.abs(GRID.points - 5.0) <= 1.5, 1.0, 0.0)
        out = smooth_values(f, kern, GRID)
        assert GRID.integrate(out) == pytest.approx(GRID.integrate(f), rel=1e-6)

    def test_indicator_stays_in_unit_interval(self):
        kern = KernelSpec("triangular", bandwidth=0.7)
        f = np.where(np.abs(GRID.points - 3.0) <= 1.0, 1.0, 0.0)
        out = smooth_values(f, kern, GRID)
        assert out.min() >= -1e-12
        assert out.max() <= 1.0 + 1e-12

    def test_linearity(self):
        kern = KernelSpec("triangular", bandwidth=1.2)
        rng = np.random.default_rng(5)
        f = rng.normal(size=GRID.size)
        g = rng.normal(size=GRID.size)
        lhs = smooth_values(2.0 * f - 3.0 * g, kern, GRID)
        rhs = 2.0 * smooth_values(f, kern, GRID) - 3.0 * smooth_values(g, kern, GRID)
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_bandwidth_beyond_half_horizon_rejected(self):
        with pytest.raises(ValueError, match="bandwidth"):
            smooth_values(np.zeros(GRID.size), KernelSpec("uniform", 6.0), GRID)


class TestWeightFunction:
    def test_plateau_and_support(self):
        w = WeightFunction(inner_left=2.0, inner_right=8.0, ramp=1.0)
        assert w.support == (1.0, 9.0)
        assert w(5.0) == 1.0
        assert w(2.0) == 1.0
        assert w(0.999) == 0.0
        assert w(9.2) == 0.0

    def test_ramp_midpoint(self):
        w = WeightFunction(inner_left=2.0, inner_right=8.0, ramp=1.0)
        assert w(1.5) == pytest.approx(0.5)
        assert w(8.5) == pytest.approx(0.5)

    def test_ramps_monotone(self):
        w = WeightFunction(inner_left=2.0, inner_right=8.0, ramp=1.0)
        up = w(np.linspace(1.0, 2.0, 101))
        assert np.all(np.diff(up) >= 0)

    def test_default_weight_geometry(self):
        w = default_weight(horizon=100.0, bandwidth=5.0)
        assert w.inner_left == 10.0
        assert w.inner_right == 90.0
        assert w.ramp == 10.0

    def test_default_weight_too_short(self):
        with pytest.raises(ValueError, match="too short"):
            default_weight(horizon=10.0, bandwidth=2.0)

    def test_split_weight_stays_inside_interval(self):
        w = split_weight((40.0, 100.0), bandwidth=5.0)
        lo, hi = w.support
        assert lo == 45.0 and hi == 95.0
        assert w.inner_left == 55.0 and w.inner_right == 85.0

    def test_split_weight_needs_six_bandwidths(self):
        with pytest.raises(ValueError, match="need length > 6h"):
            split_weight((0.0, 29.9), bandwidth=5.0)


class TestFnWeight:
    W = WeightFunction(inner_left=2.0, inner_right=8.0, ramp=1.0)

    def test_zero_beyond_two_bandwidths(self):
        kern = KernelSpec("triangular", bandwidth=0.5)
        assert fn_weight(kern, self.W, 4.0, 5.1, GRID) == 0.0

    def test_symmetric(self):
        kern = KernelSpec("triangular", bandwidth=0.5)
        a = fn_weight(kern, self.W, 4.0, 4.3, GRID)
        b = fn_weight(kern, self.W, 4.3, 4.0, GRID)
        assert a == pytest.approx(b, rel=1e-12)
        assert a > 0

    def test_uniform_interior_diagonal_is_half(self):
        # h * int (1/2h)^2 over a window of width 2h inside the plateau
        kern = KernelSpec("uniform", bandwidth=0.5)
        val = fn_weight(kern, self.W, 5.0, 5.0, GRID)
        assert val == pytest.approx(0.5, abs=2e-3)

    def test_triangular_interior_diagonal(self):
        # h * int K_h(t,r)^2 dt = int K(u)^2 du = 2/3 for the triangular shape
        kern = KernelSpec("triangular", bandwidth=0.5)
        val = fn_weight(kern, self.W, 5.0, 5.0, GRID)
        assert val == pytest.approx(2.0 / 3.0, abs=1e-5)

    def test_diagonal_batch_matches_scalar(self):
        kern = KernelSpec("epanechnikov", bandwidth=0.4)
        r = np.array([2.5, 4.0, 5.5, 7.9, 8.6])
        batch = fn_weight_diagonal(kern, self.W, r, GRID)
        singles = np.array([fn_weight(kern, self.W, x, x, GRID) for x in r])
        assert np.allclose(batch, singles, rtol=1e-10, atol=1e-12)

    def test_diagonal_scales_with_weight(self):
        kern = KernelSpec("triangular", bandwidth=0.5)
        # at the ramp midpoint the local weight is about 1/2
        mid = fn_weight(kern, self.W, 1.5, 1.5, GRID)
        plateau = fn_weight(kern, self.W, 5.0, 5.0, GRID)
        assert mid == pytest.approx(plateau / 2.0, rel=2e-2)


class TestKernelEventSum:
    def test_single_event_matches_kernel(self):
        kern = KernelSpec("triangular", bandwidth=1.0)
        s = GRID.points[2000]
        out = kernel_event_sum(kern, GRID, np.array([s]), np.array([3.0]))
        expected = 3.0 * kernel_at(kern, GRID.points, s)
        assert np.allclose(out, expected, atol=1e-12)

    def test_total_mass(self):
        kern = KernelSpec("epanechnikov", bandwidth=0.8)
        times = np.array([2.0, 4.5, 6.25, 7.0])
        weights = np.array([1.0, 0.5, 2.0, 1.5])
        out = kernel_event_sum(kern, GRID, times, weights)
        assert GRID.integrate(out) == pytest.approx(weights.sum(), rel=1e-5)

    def test_empty_events(self):
        kern = KernelSpec("uniform", bandwidth=1.0)
        out = kernel_event_sum(kern, GRID, np.array([]), np.array([]))
        assert out.shape == (GRID.size,)
        assert np.all(out == 0.0)

    @settings(max_examples=25)
    @given(st.integers(1, 30), st.integers(0, 10_000))
    def test_superposition(self, n_events, seed):
        kern = KernelSpec("triangular", bandwidth=0.6)
        rng = np.random.default_rng(seed)
        times = np.sort(rng.uniform(0.5, 9.5, n_events))
        weights = rng.uniform(0.1, 2.0, n_events)
        combined = kernel_event_sum(kern, GRID, times, weights)
        stacked = sum(
            kernel_event_sum(kern, GRID, times[k : k + 1], weights[k : k + 1])
            for k in range(n_events)
        )
        assert np.allclose(combined, stacked, atol=1e-9)
