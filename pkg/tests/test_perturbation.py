import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from swarmbeam.beampattern import response, steering_weights
from swarmbeam.errors import InvalidArgumentError
from swarmbeam.geometry import ArrayLayout, equilateral_dual, expand_topology
from swarmbeam.perturbation import (
    PerturbationModel,
    analytic_mean_steer,
    analytic_var_steer,
    draw_trials,
    fluctuation_variance,
    linearized_fluctuation,
    monte_carlo_stats,
    perturbed_response,
    sample_perturbation,
    tail_bound,
    write_stats_csv,
)

SQRT3 = math.sqrt(3.0)

# 30-digit mpmath evaluations of the closed forms
MEAN_STEER_01 = 0.82086871741553994  # exp(-2 pi^2 0.01)
VAR_STEER_N99 = 0.0032946924118037014  # (1 - exp(-4 pi^2 0.01)) / 99
VAR_LIN_N99 = 0.0039877189499350944  # (2 pi)^2 0.01 / 99
TAIL_01_99_01 = 0.57080794922476267  # 2 exp(-0.01 * 99 / (2 (2 pi)^2 0.01))


def small_layout(n=20):
    return expand_topology(equilateral_dual(SQRT3 / 3, (n + 1) // 2, n // 2))


class TestModel:
    def test_sigma_zero(self):
        np.testing.assert_array_equal(sample_perturbation(PerturbationModel.isotropic(0.0), 7, 1), 0.0)

    def test_isotropic_variance(self):
        s = sample_perturbation(PerturbationModel.isotropic(0.1), 100_000, 5)
        assert abs(s[:, 0].var() / 0.01 - 1) < 0.02
        assert abs(s[:, 1].var() / 0.01 - 1) < 0.02

    def test_anisotropic_ratio(self):
        cov = np.tile([[0.01, 0.0], [0.0, 0.04]], (100_000, 1, 1))
        s = sample_perturbation(PerturbationModel.per_element(cov), 100_000, 9)
        assert s[:, 1].var() / s[:, 0].var() == pytest.approx(4.0, rel=0.03)

    def test_singular_psd_accepted(self):
        cov = np.array([[[0.01, 0.01], [0.01, 0.01]]])
        s = sample_perturbation(PerturbationModel.per_element(cov), 1, 0)
        assert s[0, 0] == pytest.approx(s[0, 1], abs=1e-15)

    @pytest.mark.parametrize("cov", [
        [[[0.01, 0.02], [0.02, 0.01]]],
        [[[0.01, 0.0], [0.001, 0.01]]],
        [[[-0.01, 0.0], [0.0, 0.01]]],
    ])
    def test_invalid_covariances(self, cov):
        with pytest.raises(InvalidArgumentError):
            PerturbationModel.per_element(cov)

    def test_invalid_sigma(self):
        for bad in (-0.1, math.inf, math.nan):
            with pytest.raises(InvalidArgumentError):
                PerturbationModel.isotropic(bad)
        with pytest.raises(InvalidArgumentError):
            PerturbationModel()

    def test_size_mismatch(self):
        m = PerturbationModel.per_element(np.tile(np.eye(2) * 0.01, (3, 1, 1)))
        with pytest.raises(InvalidArgumentError):
            sample_perturbation(m, 4, 0)

    def test_deterministic(self):
        m = PerturbationModel.isotropic(0.1)
        np.testing.assert_array_equal(sample_perturbation(m, 9, 42), sample_perturbation(m, 9, 42))
        np.testing.assert_array_equal(draw_trials(m, 9, 5, 42), draw_trials(m, 9, 5, 42))


class TestPerturbedResponse:
    def test_zero_sample(self):
        layout = small_layout()
        w = steering_weights(layout, 0.2)
        th = np.linspace(-1.5, 1.5, 31)
        np.testing.assert_array_equal(perturbed_response(layout, w, np.zeros((20, 2)), th), response(layout, w, th))

    def test_phase_only_form_at_steer(self):
        layout = small_layout(30)
        ts = 0.37
        mags = np.linspace(0.5, 2.0, 30)
        w = steering_weights(layout, ts, mags)
        s = sample_perturbation(PerturbationModel.isotropic(0.1), 30, 3)
        phase_only = (mags * np.exp(2j * np.pi * (s[:, 0] * math.sin(ts) + s[:, 1] * math.cos(ts)))).sum() / mags.sum()
        assert abs(perturbed_response(layout, w, s, ts) - phase_only) < 1e-12

    def test_single_element_unit_modulus(self):
        layout = ArrayLayout([(0.3, -0.2)])
        for seed in range(5):
            s = sample_perturbation(PerturbationModel.isotropic(0.5), 1, seed)
            assert abs(perturbed_response(layout, [1.0], s, 0.9)) == pytest.approx(1.0, abs=1e-15)

    def test_equals_shifted_layout(self):
        layout = small_layout()
        w = steering_weights(layout, -0.4)
        s = sample_perturbation(PerturbationModel.isotropic(0.2), 20, 8)
        shifted = ArrayLayout(layout.positions + s)
        th = np.linspace(-1.5, 1.5, 41)
        np.testing.assert_allclose(perturbed_response(layout, w, s, th), response(shifted, w, th), atol=1e-14)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            perturbed_response(small_layout(), np.ones(20), np.zeros((19, 2)), 0.0)


class TestClosedForms:
    def test_mean_values(self):
        assert analytic_mean_steer(PerturbationModel.isotropic(0.0), np.ones(5), 0.3) == 1.0
        assert analytic_mean_steer(PerturbationModel.isotropic(0.1), np.ones(99), 0.0) == pytest.approx(MEAN_STEER_01, rel=1e-14)

    @given(st.floats(-math.pi, math.pi), st.floats(0, 0.5))
    def test_mean_isotropic_angle_free(self, ts, sigma):
        m = PerturbationModel.isotropic(sigma)
        a = analytic_mean_steer(m, np.ones(4), ts)
        assert a == pytest.approx(analytic_mean_steer(m, np.ones(4), 0.0), rel=1e-14)
        assert 0 < a <= 1

    def test_var_values(self):
        assert analytic_var_steer(PerturbationModel.isotropic(0.0), np.ones(5), 0.3) == 0.0
        assert analytic_var_steer(PerturbationModel.isotropic(0.1), np.ones(99), 0.0) == pytest.approx(VAR_STEER_N99, rel=1e-14)
        assert abs(VAR_STEER_N99 - 3.295e-3) < 1e-6

    def test_anisotropic_projection(self):
        cov = np.tile([[0.01, 0.0], [0.0, 0.04]], (3, 1, 1))
        m = PerturbationModel.per_element(cov)
        assert analytic_mean_steer(m, np.ones(3), math.pi / 2) == pytest.approx(math.exp(-2 * math.pi**2 * 0.01))
        assert analytic_mean_steer(m, np.ones(3), 0.0) == pytest.approx(math.exp(-2 * math.pi**2 * 0.04))

    def test_fluctuation_variance_values(self):
        assert fluctuation_variance(PerturbationModel.isotropic(0.0), np.ones(5), 0.3) == 0.0
        assert fluctuation_variance(PerturbationModel.isotropic(0.1), np.ones(99), 0.5) == pytest.approx(VAR_LIN_N99, rel=1e-14)
        assert abs(VAR_LIN_N99 - 3.988e-3) < 1e-6

    def test_tail_bound(self):
        assert tail_bound(0.1, 99, 0.1) == pytest.approx(TAIL_01_99_01, rel=1e-14)
        assert tail_bound(50.0, 99, 0.1) == 0.0
        with pytest.raises(InvalidArgumentError):
            tail_bound(0.0, 99, 0.1)

    def test_bad_magnitudes(self):
        with pytest.raises(InvalidArgumentError):
            analytic_mean_steer(PerturbationModel.isotropic(0.1), [1.0, 0.0], 0.0)


class TestLinearized:
    def test_zero_sample(self):
        layout = small_layout()
        assert linearized_fluctuation(layout, np.ones(20), np.zeros((20, 2)), 0.4) == 0

    def test_taylor_remainder_is_second_order(self):
        layout = small_layout(40)
        w = steering_weights(layout, 0.0)
        z = sample_perturbation(PerturbationModel.isotropic(1.0), 40, 17)
        th = math.radians(30)
        f0 = response(layout, w, th)

        def err(sigma):
            s = sigma * z
            return abs(perturbed_response(layout, w, s, th) - f0 - linearized_fluctuation(layout, w, s, th))

        assert 3.0 <= err(0.01) / err(0.005) <= 5.0

    def test_zero_mean_and_gaussian(self):
        layout = small_layout(40)
        w = steering_weights(layout, 0.0)
        model = PerturbationModel.isotropic(0.05)
        th = math.radians(30)
        _, _, lin = monte_carlo_stats(layout, w, model, [th], trials=20_000, seed=4, return_samples=True)
        d = lin[:, 0]
        se = math.sqrt(fluctuation_variance(model, np.ones(40), th) / d.size)
        assert abs(d.mean()) < 5 * se
        for part in (d.real, d.imag):
            assert abs(sps.skew(part)) < 0.1
            assert abs(sps.kurtosis(part)) < 0.2


class TestMonteCarlo:
    def test_unperturbed_single_trial(self):
        layout = small_layout()
        w = steering_weights(layout, 0.1)
        th = np.linspace(-1.2, 1.2, 13)
        stats = monte_carlo_stats(layout, w, PerturbationModel.isotropic(0.0), th, trials=1, seed=0)
        nominal = response(layout, w, th)
        for s, f in zip(stats, nominal):
            assert s.mc_mean == f
            assert s.mc_variance == 0.0
            assert s.mean_abs_fluct == 0.0

    def test_law_selection(self):
        layout = small_layout()
        w = steering_weights(layout, 0.0)
        stats = monte_carlo_stats(layout, w, PerturbationModel.isotropic(0.1), [0.0, 0.5], trials=10, seed=0)
        assert [s.law for s in stats] == ["exact", "linearized"]
        assert all(s.trials == 10 for s in stats)

    def test_deterministic(self):
        layout = small_layout()
        w = steering_weights(layout, 0.0)
        run = lambda: monte_carlo_stats(layout, w, PerturbationModel.isotropic(0.1), [0.0, 0.5], trials=50, seed=3)
        a, b = run(), run()
        assert [(s.mc_mean, s.mc_variance) for s in a] == [(s.mc_mean, s.mc_variance) for s in b]

    def test_block_boundary_invariance(self, monkeypatch):
        import swarmbeam.perturbation as pm

        layout = small_layout()
        w = steering_weights(layout, 0.0)
        model = PerturbationModel.isotropic(0.1)
        _, p1, _ = monte_carlo_stats(layout, w, model, [0.3], trials=37, seed=1, return_samples=True)
        monkeypatch.setattr(pm, "_TRIAL_BLOCK", 5)
        _, p2, _ = monte_carlo_stats(layout, w, model, [0.3], trials=37, seed=1, return_samples=True)
        np.testing.assert_array_equal(p1, p2)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.0, 0.3), st.integers(1, 30), st.integers(0, 2**32))
    def test_invariants(self, sigma, trials, seed):
        layout = small_layout(8)
        w = steering_weights(layout, 0.0)
        stats = monte_carlo_stats(layout, w, PerturbationModel.isotropic(sigma), [0.0, 0.7], trials=trials, seed=seed,
                                  tail_t=[0.05, 0.5])
        for s in stats:
            assert s.mc_variance >= 0 and s.trials == trials
            assert abs(s.mc_mean) <= 1 + 1e-12
            if s.tail_bound_at is not None:
                assert all(0 <= b <= 1 for _, b in s.tail_bound_at)

    def test_steer_statistics_moderate_run(self):
        layout = small_layout(99)
        w = steering_weights(layout, 0.0)
        (s,) = monte_carlo_stats(layout, w, PerturbationModel.isotropic(0.1), [0.0], trials=20_000, seed=2)
        assert abs(s.mc_mean) == pytest.approx(MEAN_STEER_01, rel=0.01)
        assert s.mc_variance == pytest.approx(VAR_STEER_N99, rel=0.05)
        assert s.analytic_mean == pytest.approx(MEAN_STEER_01, rel=1e-14)

    def test_stats_csv(self, tmp_path):
        layout = small_layout()
        stats = monte_carlo_stats(layout, np.ones(20), PerturbationModel.isotropic(0.1), [0.0], trials=3)
        path = tmp_path / "s.csv"
        write_stats_csv(stats, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "theta_deg,analytic_mean_abs,analytic_var,mc_mean_abs,mc_var,mean_abs_fluct"
        assert len(lines) == 2

    def test_invalid_trials(self):
        with pytest.raises(InvalidArgumentError):
            monte_carlo_stats(small_layout(), np.ones(20), PerturbationModel.isotropic(0.1), [0.0], trials=0)


