import dataclasses

import numpy as np
import pytest

import netbaseline as nb
from netbaseline.errors import DegenerateLikelihoodError
from netbaseline.estimators import (
    fit_mle,
    fit_partial,
    log_likelihood,
    nelson_aalen,
    partial_log_likelihood,
    parametric_baseline_curve,
    smoothed_parametric_baseline,
)
from netbaseline.kernels import KernelSpec, QuadratureGrid, kernel_event_sum, smooth_values
from netbaseline.model import LinkSpec, clock_baseline, constant_baseline
from netbaseline.panel import PairKey, PairRecord, build_panel
from netbaseline.paths import PiecewisePath


def random_panel(seed: int):
    config = nb.SimConfig(
        n_vertices=6,
        horizon=24.0,
        theta=(np.log(0.3), 0.4, -0.2),
        beta=(0.5, -0.3),
        baseline=clock_baseline(1),
        edge_on_rate=0.5,
        edge_off_rate=0.3,
        covariate_jump_rate=0.2,
        seed=seed,
    )
    panel, _ = nb.simulate_study(config)
    return panel, config


def two_pair_panel(events_a=(5.0,), cov_a=0.0, cov_b=0.0):
    records = [
        PairRecord(
            key=PairKey(0, 1),
            edge=PiecewisePath.constant(1.0),
            covariates=PiecewisePath.constant([cov_a]),
            events=np.asarray(events_a, dtype=float),
        ),
        PairRecord(
            key=PairKey(0, 2),
            edge=PiecewisePath.constant(1.0),
            covariates=PiecewisePath.constant([cov_b]),
            events=np.array([]),
        ),
    ]
    return build_panel(records, n_vertices=3, directed=False, horizon=10.0)


class TestGradients:
    @pytest.mark.parametrize("seed", range(5))
    def test_full_likelihood_gradient_matches_fd(self, seed):
        panel, config = random_panel(seed)
        if panel.n_events == 0:
            pytest.skip("empty draw")
        rng = np.random.default_rng(seed + 1000)
        theta = rng.normal(scale=0.3, size=3)
        beta = rng.normal(scale=0.3, size=2)
        link = LinkSpec(dimension=2)
        baseline = clock_baseline(1)

        _, grad = log_likelihood(panel, theta, beta, baseline, link, (0.0, 24.0))
        z = np.concatenate([theta, beta])
        step = 1e-6
        for k in range(z.size):
            zp, zm = z.copy(), z.copy()
            zp[k] += step
            zm[k] -= step
            vp, _ = log_likelihood(panel, zp[:3], zp[3:], baseline, link, (0.0, 24.0))
            vm, _ = log_likelihood(panel, zm[:3], zm[3:], baseline, link, (0.0, 24.0))
            fd = (vp - vm) / (2 * step)
            assert grad[k] == pytest.approx(fd, rel=1e-5, abs=1e-5)

    @pytest.mark.parametrize("seed", range(5))
    def test_partial_gradient_matches_fd(self, seed):
        panel, _ = random_panel(seed + 50)
        if panel.n_events == 0:
            pytest.skip("empty draw")
        rng = np.random.default_rng(seed + 2000)
        beta = rng.normal(scale=0.3, size=2)
        link = LinkSpec(dimension=2)

        _, grad = partial_log_likelihood(panel, beta, link, (0.0, 24.0))
        step = 1e-6
        for k in range(2):
            bp, bm = beta.copy(), beta.copy()
            bp[k] += step
            bm[k] -= step
            vp, _ = partial_log_likelihood(panel, bp, link, (0.0, 24.0))
            vm, _ = partial_log_likelihood(panel, bm, link, (0.0, 24.0))
            fd = (vp - vm) / (2 * step)
            assert grad[k] == pytest.approx(fd, rel=1e-5, abs=1e-5)


class TestPartialLikelihood:
    def test_two_pair_single_event(self):
        # both pairs at risk with equal weight: the event term is log(1/2)
        panel = two_pair_panel()
        value, grad = partial_log_likelihood(panel, np.zeros(1), LinkSpec(dimension=1), (0.0, 10.0))
        assert value == pytest.approx(-np.log(2.0))
        assert grad[0] == pytest.approx(0.0)

    def test_two_pair_gradient(self):
        panel = two_pair_panel(cov_a=1.0, cov_b=0.0)
        value, grad = partial_log_likelihood(panel, np.zeros(1), LinkSpec(dimension=1), (0.0, 10.0))
        assert value == pytest.approx(-np.log(2.0))
        assert grad[0] == pytest.approx(0.5)

    def test_covariate_shift_invariance(self):
        # adding a constant to every covariate cancels in each risk ratio
        panel, _ = random_panel(3)
        link = LinkSpec(dimension=2)
        beta = np.array([0.4, -0.1])
        v0, g0 = partial_log_likelihood(panel, beta, link, (0.0, 24.0))

        shift = np.array([2.0, -1.0])
        shifted_pairs = [
            dataclasses.replace(
                rec,
                covariates=PiecewisePath(
                    rec.covariates.breaks, rec.covariates.values + shift
                ),
            )
            for rec in panel.pairs
        ]
        shifted = dataclasses.replace(panel, pairs=tuple(shifted_pairs))
        v1, g1 = partial_log_likelihood(shifted, beta, link, (0.0, 24.0))
        assert v1 == pytest.approx(v0, rel=1e-10)
        assert np.allclose(g0, g1, atol=1e-8)

    def test_concave_in_beta(self):
        panel, _ = random_panel(7)
        link = LinkSpec(dimension=2)
        rng = np.random.default_rng(0)
        for _ in range(5):
            b1 = rng.normal(scale=0.5, size=2)
            b2 = rng.normal(scale=0.5, size=2)
            vm, _ = partial_log_likelihood(panel, (b1 + b2) / 2, link, (0.0, 24.0))
            v1, _ = partial_log_likelihood(panel, b1, link, (0.0, 24.0))
            v2, _ = partial_log_likelihood(panel, b2, link, (0.0, 24.0))
            assert vm >= (v1 + v2) / 2 - 1e-9

    def test_left_limit_at_event_time(self):
        # covariate jumps exactly at the event time; the risk ratio must use
        # the pre-jump value
        records = [
            PairRecord(
                key=PairKey(0, 1),
                edge=PiecewisePath.constant(1.0),
                covariates=PiecewisePath(breaks=[0.0, 5.0], values=[[0.0], [10.0]]),
                events=np.array([5.0]),
            ),
            PairRecord(
                key=PairKey(0, 2),
                edge=PiecewisePath.constant(1.0),
                covariates=PiecewisePath.constant([0.0]),
                events=np.array([]),
            ),
        ]
        panel = build_panel(records, n_vertices=3, directed=False, horizon=10.0)
        value, _ = partial_log_likelihood(panel, np.ones(1), LinkSpec(dimension=1), (0.0, 10.0))
        assert value == pytest.approx(-np.log(2.0))

    def test_no_events_raises(self):
        panel = two_pair_panel(events_a=())
        with pytest.raises(DegenerateLikelihoodError, match="degenerate likelihood"):
            partial_log_likelihood(panel, np.zeros(1), LinkSpec(dimension=1), (0.0, 10.0))


class TestFullLikelihood:
    def test_constant_model_closed_form(self):
        # single always-on pair, psi = 1: log L = N log(a) - a * T at rate a
        panel = two_pair_panel(events_a=(2.0, 4.0, 7.0))
        link = LinkSpec(dimension=1)
        rate = 0.4
        value, _ = log_likelihood(
            panel, [np.log(rate)], np.zeros(1), constant_baseline(), link, (0.0, 10.0)
        )
        # two always-on pairs -> integrated intensity 2 * rate * 10
        expected = 3 * np.log(rate) - 2 * rate * 10.0
        assert value == pytest.approx(expected, rel=1e-10)

    def test_jointly_concave(self):
        panel, _ = random_panel(9)
        link = LinkSpec(dimension=2)
        baseline = clock_baseline(1)
        rng = np.random.default_rng(1)
        for _ in range(4):
            z1 = rng.normal(scale=0.4, size=5)
            z2 = rng.normal(scale=0.4, size=5)
            zm = (z1 + z2) / 2
            vm, _ = log_likelihood(panel, zm[:3], zm[3:], baseline, link, (0.0, 24.0))
            v1, _ = log_likelihood(panel, z1[:3], z1[3:], baseline, link, (0.0, 24.0))
            v2, _ = log_likelihood(panel, z2[:3], z2[3:], baseline, link, (0.0, 24.0))
            assert vm >= (v1 + v2) / 2 - 1e-9

    def test_fit_mle_finds_interior_maximum(self):
        panel, config = random_panel(11)
        fit = fit_mle(panel, clock_baseline(1), LinkSpec(dimension=2), (0.0, 24.0))
        assert fit.converged
        assert fit.gradient_norm < 1e-6
        # the fitted point is a maximum: nearby points score lower
        rng = np.random.default_rng(2)
        z0 = np.concatenate([fit.theta_hat, fit.beta_hat])
        v0 = fit.log_likelihood
        for _ in range(5):
            dz = rng.normal(scale=0.05, size=z0.size)
            v, _ = log_likelihood(
                panel, z0[:3] + dz[:3], z0[3:] + dz[3:], clock_baseline(1),
                LinkSpec(dimension=2), (0.0, 24.0),
            )
            assert v <= v0 + 1e-9

    def test_fit_mle_no_events(self):
        panel = two_pair_panel(events_a=())
        with pytest.raises(DegenerateLikelihoodError, match="no events in the fit interval"):
            fit_mle(panel, constant_baseline(), LinkSpec(dimension=1), (0.0, 10.0))

    def test_fit_partial_no_events(self):
        panel = two_pair_panel(events_a=())
        with pytest.raises(DegenerateLikelihoodError, match="degenerate likelihood"):
            fit_partial(panel, LinkSpec(dimension=1), (0.0, 10.0))


class TestRecovery:
    def test_signs_and_rough_values(self):
        config = nb.SimConfig(
            n_vertices=14,
            horizon=96.0,
            theta=(np.log(0.2),),
            beta=(0.6, -0.4),
            baseline=constant_baseline(),
            edge_on_rate=0.5,
            edge_off_rate=0.2,
            seed=123,
        )
        panel, _ = nb.simulate_study(config)
        link = LinkSpec(dimension=2)
        pfit = fit_partial(panel, link, (0.0, 96.0))
        mfit = fit_mle(panel, constant_baseline(), link, (0.0, 96.0))
        assert pfit.converged and mfit.converged
        assert pfit.beta_tilde[0] > 0 and pfit.beta_tilde[1] < 0
        assert abs(mfit.theta_hat[0] - np.log(0.2)) < 0.35
        assert np.max(np.abs(mfit.beta_hat - np.array([0.6, -0.4]))) < 0.35


class TestBaselineCurves:
    GRID = QuadratureGrid(horizon=10.0, size=2001)

    def test_nelson_aalen_single_pair_unit_risk(self):
        # one always-on pair with no covariates: X = 1, so the estimate is
        # exactly the kernel sum over events
        rec = PairRecord(
            key=PairKey(0, 1),
            edge=PiecewisePath.constant(1.0),
            covariates=PiecewisePath.constant(np.zeros(0)),
            events=np.array([2.0, 5.0, 5.5]),
        )
        panel = build_panel([rec], n_vertices=2, directed=False, horizon=10.0)
        kern = KernelSpec("triangular", bandwidth=0.5)
        curve = nelson_aalen(panel, np.zeros(0), kern, self.GRID, (0.0, 10.0))
        expected = kernel_event_sum(
            kern, self.GRID, np.array([2.0, 5.0, 5.5]), np.ones(3)
        )
        assert np.allclose(curve.values, expected, atol=1e-12)

    def test_nelson_aalen_empty_interval(self):
        panel = two_pair_panel(events_a=(2.0,))
        kern = KernelSpec("triangular", bandwidth=0.5)
        curve = nelson_aalen(panel, np.zeros(1), kern, self.GRID, (5.0, 10.0))
        assert np.all(curve.values == 0.0)

    def test_nelson_aalen_risk_scaling(self):
        # two identical always-on pairs halve each event's contribution
        panel = two_pair_panel(events_a=(3.0,))
        kern = KernelSpec("triangular", bandwidth=0.5)
        curve = nelson_aalen(panel, np.zeros(1), kern, self.GRID, (0.0, 10.0))
        single = kernel_event_sum(kern, self.GRID, np.array([3.0]), np.ones(1))
        assert np.allclose(curve.values, single / 2.0, atol=1e-12)

    def test_smoothed_parametric_matches_manual(self):
        baseline = clock_baseline(1)
        theta = np.array([np.log(0.5), 0.3, -0.2])
        kern = KernelSpec("epanechnikov", bandwidth=0.8)
        smoothed = smoothed_parametric_baseline(theta, baseline, kern, self.GRID)
        raw = parametric_baseline_curve(theta, baseline, self.GRID)
        manual = smooth_values(raw.values, kern, self.GRID)
        assert np.allclose(smoothed.values, manual, atol=1e-12)

    def test_parametric_curve_positive(self):
        raw = parametric_baseline_curve(
            np.array([0.0, 1.0, 1.0]), clock_baseline(1), self.GRID
        )
        assert np.all(raw.values > 0)
