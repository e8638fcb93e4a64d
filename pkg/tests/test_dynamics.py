import numpy as np
import pytest

from conftest import THETA_PHYSICAL, comb_model, resolved_model
from nonmarkov.dynamics import (
    ChannelConfig,
    EnsembleConfig,
    analytic_chi,
    analytic_chi_dot,
    bessel_coherence,
    bessel_f,
    dephasing_map,
    evolve,
    mc_coherence,
)
from nonmarkov.errors import DomainError
from nonmarkov.noise import TWO_PI, SpectralModel, mode_amplitudes
from nonmarkov.quantum import BELL_KET, bell_dephased_state, check_density_matrix, random_density_matrix

# First positive zero of J₀ (Abramowitz & Stegun table 9.5).
J0_FIRST_ZERO = 2.404825557695773

DEFAULT_THETA = TWO_PI * 150.0


def _midsize_model():
    """Thirty-mode comb with Bessel arguments of order one."""
    return SpectralModel.drude_lorentz(0.5, 2.0, 20.0, 0.8, n_modes=30)


class TestAnalyticChi:
    def test_zero_at_origin(self):
        m = _midsize_model()
        assert analytic_chi(m, 0.0) == 0.0
        assert analytic_chi_dot(m, 0.0) == 0.0

    def test_single_mode_closed_form(self):
        lam, gam, theta, w = 0.7, 1.3, 5.0, 0.9
        m = SpectralModel.drude_lorentz(lam, gam, theta, w, n_modes=1)
        t = np.linspace(0, 10, 101)
        ref = lam * gam * w / np.tanh(w / (2 * theta)) / (w * (w**2 + gam**2)) * np.sin(w * t / 2) ** 2
        np.testing.assert_allclose(analytic_chi(m, t), ref, rtol=1e-14, atol=0)
        peak = lam * gam * w / np.tanh(w / (2 * theta)) / (w * (w**2 + gam**2))
        assert analytic_chi(m, np.pi / w) == pytest.approx(peak, rel=1e-15)
        assert ref.max() <= peak

    def test_amplitude_form_agrees(self, rng):
        m = _midsize_model()
        amps = mode_amplitudes(m)
        t = rng.uniform(0, 10, 50)
        via_amps = (2 * amps.c**2 / amps.omega**2) @ np.sin(np.outer(amps.omega, t) / 2) ** 2
        np.testing.assert_allclose(analytic_chi(m, t), via_amps, rtol=1e-12)

    def test_derivative_matches_finite_difference(self, rng):
        m = resolved_model(rng)
        t = rng.uniform(0.1, 5.0, 20)
        h = 1e-6
        fd = (analytic_chi(m, t + h) - analytic_chi(m, t - h)) / (2 * h)
        np.testing.assert_allclose(analytic_chi_dot(m, t), fd, atol=1e-8)

    @pytest.mark.parametrize("theta", [DEFAULT_THETA, THETA_PHYSICAL])
    def test_low_base_frequency_is_monotone(self, theta):
        chi = analytic_chi(comb_model(0.05, theta), 0.01 * np.arange(501))
        assert np.all(np.diff(chi) >= 0)

    def test_negative_time(self):
        with pytest.raises(DomainError):
            analytic_chi(_midsize_model(), -0.1)


class TestBessel:
    def test_unity_at_origin(self):
        assert bessel_f(_midsize_model(), 0.0) == 1.0

    def test_first_zero(self):
        m = SpectralModel.custom([1.0], [J0_FIRST_ZERO / 4])
        assert bessel_f(m, np.pi) == pytest.approx(0.0, abs=1e-15)

    def test_small_amplitude_bound(self, rng):
        m = SpectralModel.drude_lorentz(5e-4, 1.0, 10.0, 0.5, n_modes=40)
        amps = mode_amplitudes(m)
        t = np.linspace(0, 20, 401)
        x = 4 * amps.displacement[None, :] * np.sin(np.outer(t, amps.omega) / 2)
        bound = np.sum(x**4, axis=1) / 16
        diff = np.abs(bessel_f(m, t) - np.exp(-2 * analytic_chi(m, t)))
        assert x.max() < 0.5
        assert np.all(diff <= bound + 1e-15)

    def test_signed_product_in_large_amplitude_regime(self):
        m = SpectralModel.custom([1.0], [J0_FIRST_ZERO / 2])
        assert bessel_coherence(m, np.pi) < 0
        assert bessel_f(m, np.pi) == -bessel_coherence(m, np.pi)


class TestMonteCarlo:
    def test_silent_field_single_realization(self):
        m = SpectralModel.custom([1.0, 2.0], [0.0, 0.0])
        f, err = mc_coherence(m, EnsembleConfig(1, 3, 0.1, 20))
        np.testing.assert_array_equal(f, np.ones(21))
        np.testing.assert_array_equal(err, np.zeros(21))

    def test_unity_at_origin(self):
        f, err = mc_coherence(_midsize_model(), EnsembleConfig(20, 1, 0.05, 10))
        assert f[0] == 1.0
        assert err[0] == 0.0

    def test_empty_ensemble_rejected(self):
        with pytest.raises(DomainError):
            EnsembleConfig(0)

    def test_converges_to_bessel_oracle(self):
        m = _midsize_model()
        previous = np.inf
        for n in (150, 600, 2400):
            ens = EnsembleConfig(n, 5, 0.02, 250)
            f, err = mc_coherence(m, ens)
            exact = bessel_f(m, ens.grid)
            dev = np.abs(f - exact)
            assert np.mean(dev[1:] <= 3 * err[1:]) >= 0.99
            assert dev.max() <= 3 * err.max()
            assert dev.max() < previous * 1.5
            previous = dev.max()

    def test_worker_count_does_not_change_bits(self):
        m = _midsize_model()
        ens = EnsembleConfig(37, 11, 0.02, 100)
        f1, e1 = mc_coherence(m, ens, workers=1)
        f3, e3 = mc_coherence(m, ens, workers=3)
        np.testing.assert_array_equal(f1, f3)
        np.testing.assert_array_equal(e1, e3)


class TestEvolve:
    @pytest.fixture
    def models(self, rng):
        return resolved_model(rng), resolved_model(rng)

    @pytest.mark.parametrize("mode", ["analytic", "bessel", "monte_carlo"])
    @pytest.mark.parametrize("label", ["s", "a", "sa"])
    def test_trajectory_invariants(self, models, mode, label):
        cfg = ChannelConfig.from_label(label, *models, omega_s=1.1, omega_a=0.4)
        traj = evolve(cfg, EnsembleConfig(30, 2, 0.05, 100), mode)
        assert traj.kind == mode
        assert traj.f[0] == 1.0 and traj.chi[0] == 0.0
        assert np.all((traj.f >= 0) & (traj.f <= 1))
        for rho in traj.rho:
            check_density_matrix(rho)
        if mode == "analytic":
            np.testing.assert_array_equal(traj.f, np.exp(-2 * traj.chi))
        else:
            assert traj.chi_dot is None

    def test_noiseless_rotates_pure_bell(self):
        cfg = ChannelConfig.from_label("none", omega_s=TWO_PI * 0.3, omega_a=TWO_PI * 0.2)
        traj = evolve(cfg, EnsembleConfig(5, 0, 0.1, 30), "monte_carlo")
        np.testing.assert_array_equal(traj.f, np.ones(31))
        phase = TWO_PI * 0.5 * traj.t
        for k in (0, 7, 30):
            np.testing.assert_allclose(traj.rho[k], bell_dephased_state(1.0, phase[k]), atol=1e-15)

    def test_analytic_both_channels(self, models):
        ms, ma = models
        cfg = ChannelConfig.from_label("sa", ms, ma)
        t = EnsembleConfig(1, 0, 0.01, 500).grid
        traj = evolve(cfg, EnsembleConfig(1, 0, 0.01, 500))
        np.testing.assert_allclose(traj.f, np.exp(-2 * (analytic_chi(ms, t) + analytic_chi(ma, t))), rtol=1e-14)

    @pytest.mark.parametrize("mode", ["analytic", "bessel"])
    def test_system_ancilla_symmetry(self, models, mode):
        m = models[0]
        ens = EnsembleConfig(1, 0, 0.02, 200)
        s = evolve(ChannelConfig.from_label("s", m, None), ens, mode)
        a = evolve(ChannelConfig.from_label("a", None, m), ens, mode)
        np.testing.assert_array_equal(s.f, a.f)
        np.testing.assert_array_equal(s.rho, a.rho)

    def test_multiplicativity_analytic(self, models):
        ens = EnsembleConfig(1, 0, 0.01, 500)
        s, a, sa = (evolve(ChannelConfig.from_label(lab, *models), ens) for lab in ("s", "a", "sa"))
        np.testing.assert_allclose(sa.f, s.f * a.f, atol=1e-12, rtol=0)

    def test_multiplicativity_monte_carlo(self):
        m = _midsize_model()
        ens = EnsembleConfig(400, 8, 0.02, 250)
        s, a, sa = (evolve(ChannelConfig.from_label(lab, m, m), ens, "monte_carlo") for lab in ("s", "a", "sa"))
        sigma = np.sqrt(sa.f_stderr**2 + (a.f * s.f_stderr) ** 2 + (s.f * a.f_stderr) ** 2)
        within = np.abs(sa.f - s.f * a.f) <= 3 * sigma
        assert np.mean(within[1:]) >= 0.99

    def test_global_phase_irrelevant(self, models):
        ens = EnsembleConfig(25, 4, 0.02, 100)
        for mode in ("analytic", "monte_carlo"):
            still = evolve(ChannelConfig.from_label("sa", *models), ens, mode)
            spun = evolve(ChannelConfig.from_label("sa", *models, omega_s=TWO_PI * 10, omega_a=TWO_PI * 7), ens, mode)
            np.testing.assert_array_equal(still.f, spun.f)
            np.testing.assert_allclose(2 * np.abs(spun.rho[:, 0, 3]), still.f, atol=1e-15)

    def test_unknown_mode(self, models):
        with pytest.raises(DomainError):
            evolve(ChannelConfig.from_label("s", *models), EnsembleConfig(1), "heom")

    def test_channel_validation(self):
        with pytest.raises(DomainError):
            ChannelConfig.from_label("s", None, None)
        with pytest.raises(DomainError):
            ChannelConfig.from_label("both")


class TestDephasingMap:
    def test_bell_coherence(self):
        rho = dephasing_map(np.outer(BELL_KET, BELL_KET.conj()), 0.1, 0.25, 0.4, 1.1)
        np.testing.assert_allclose(rho, bell_dephased_state(np.exp(-0.7), 1.5), atol=1e-15)

    def test_preserves_states(self, rng):
        for _ in range(100):
            rho = random_density_matrix(4, rng)
            out = dephasing_map(rho, *rng.uniform(0, 2, 2), *rng.uniform(-5, 5, 2))
            check_density_matrix(out)
            np.testing.assert_allclose(np.diag(out), np.diag(rho), atol=1e-15)

    def test_rejects_negative_chi(self):
        with pytest.raises(DomainError):
            dephasing_map(np.eye(4) / 4, -0.1)
