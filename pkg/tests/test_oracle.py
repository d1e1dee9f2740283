import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TABLE_M2, TABLE_M2_BIG
from qdcavity import kernels
from qdcavity.errors import (
    GridTooCoarse,
    NonConvergedIntegration,
    TruncationNotConverged,
    WindowTooNarrow,
)
from qdcavity.model import ModelParams
from qdcavity.oracle import (
    LindbladConfig,
    SteadyMethod,
    bloch_full_steady,
    bloch_linear_steady,
    convolve_numeric,
    lindblad_steady,
    rf_steady_ode,
)
from qdcavity.rf import RfParams, rf_population

P2 = ModelParams(**TABLE_M2, gamma_pd=TABLE_M2_BIG)


def closed_pd(p, d, nu):
    return kernels.m2_pd_population(np.array([nu]), d, p.g, p.kappa, p.gamma_g, p.gamma_pd)[0]


class TestBloch:
    def test_linear_solve_at_resonance(self):
        a, b = bloch_linear_steady(ModelParams(1.0, 1.0, 1.0), 0.0, 0.0)
        assert np.isfinite(a) and np.isfinite(b)

    def test_linear_scales_with_drive(self):
        a1, b1 = bloch_linear_steady(P2, -5.0, 3.0, eps=1.0)
        a2, b2 = bloch_linear_steady(P2, -5.0, 3.0, eps=0.01)
        assert a2 == pytest.approx(0.01 * a1, rel=1e-14)
        assert b2 == pytest.approx(0.01 * b1, rel=1e-14)

    def test_full_moments_reduce_to_factorised_without_dephasing(self):
        p = ModelParams(**TABLE_M2)
        n_a, n_b, x = bloch_full_steady(p, -5.0, 3.0)
        a, b = bloch_linear_steady(p, -5.0, 3.0)
        assert n_a == pytest.approx(abs(a) ** 2, rel=1e-12)
        assert n_b == pytest.approx(abs(b) ** 2, rel=1e-12)
        assert x == pytest.approx(b * a.conjugate(), rel=1e-12)


class TestLindblad:
    def test_density_matrix_properties(self):
        n_a, n_b, rho = lindblad_steady(P2, -5.0, 3.0, LindbladConfig(eps=0.2),
                                        return_rho=True)
        assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(rho, rho.conj().T, atol=1e-12)
        assert np.all(np.diag(rho).real >= -1e-12)
        assert np.all(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)) >= -1e-10)

    def test_weak_drive_matches_closed_form(self):
        eps = 1e-3 * P2.kappa
        n_a, _ = lindblad_steady(P2, -5.0, 3.0, LindbladConfig(eps=eps))
        assert n_a == pytest.approx(closed_pd(P2, -5.0, 3.0) * eps ** 2, rel=1e-4)

    def test_deviation_quadratic_in_drive(self):
        devs = []
        eps_rel = np.array([1e-2, 3e-3, 1e-3])
        for e in eps_rel:
            eps = e * P2.kappa
            n_a, _ = lindblad_steady(P2, -5.0, 3.0, LindbladConfig(eps=eps))
            devs.append(abs(n_a / (closed_pd(P2, -5.0, 3.0) * eps ** 2) - 1))
        slope = np.polyfit(np.log(eps_rel), np.log(devs), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.2)

    def test_time_integration_agrees_with_null_space(self):
        eps = 0.05 * P2.kappa
        ref = lindblad_steady(P2, 0.0, 2.0, LindbladConfig(eps=eps, check_truncation=False))
        cfg = LindbladConfig(eps=eps, method=SteadyMethod.TIME_INTEGRATION, rtol=1e-6,
                             check_truncation=False)
        got = lindblad_steady(P2, 0.0, 2.0, cfg)
        assert got == pytest.approx(ref, rel=1e-5)

    def test_time_integration_too_short(self):
        cfg = LindbladConfig(eps=1.0, method="time_integration", t_end=0.05,
                             check_truncation=False)
        with pytest.raises(NonConvergedIntegration):
            lindblad_steady(P2, 0.0, 0.0, cfg)

    def test_truncation_detected(self):
        # strong drive populates many photons; n_max = 2 cannot hold them
        with pytest.raises(TruncationNotConverged):
            lindblad_steady(P2, 0.0, 0.0, LindbladConfig(n_max=2, eps=30.0))

    @pytest.mark.parametrize("kw", [dict(n_max=1), dict(eps=0.0), dict(rtol=0.0),
                                    dict(t_end=-1.0)])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            LindbladConfig(**kw)


class TestConvolution:
    def test_zero_width_is_identity(self):
        x = np.linspace(-3, 3, 7)
        assert np.array_equal(convolve_numeric(np.cos, 0.0, x), np.cos(x))

    def test_lorentzian_self_convolution(self):
        # L(w1) * L(w2) = L(w1 + w2)
        def lor(x, w):
            return (w / 2 / np.pi) / (x * x + w * w / 4)

        x = np.array([-2.0, 0.0, 0.7, 5.0])
        res = convolve_numeric(lambda s: lor(s, 1.3), 0.8, x, full_output=True)
        assert np.allclose(res.values, lor(x, 2.1), rtol=1e-6)
        assert res.tail_error < 1e-7 and res.grid_error < 1e-7

    def test_constant_is_preserved(self):
        vals = convolve_numeric(lambda s: np.full_like(np.asarray(s, float), 3.0), 2.0, [0.0])
        assert vals[0] == pytest.approx(3.0, rel=1e-12)

    def test_narrow_window(self):
        with pytest.raises(WindowTooNarrow):
            convolve_numeric(np.cos, 1.0, [0.0], window=10.0)

    def test_coarse_grid(self):
        with pytest.raises(GridTooCoarse):
            convolve_numeric(np.cos, 1.0, [0.0], n_points=5000)
        with pytest.raises(GridTooCoarse):
            convolve_numeric(np.cos, 0.01, [0.0], window=1000, n_points=20001)

    def test_tail_error_detected(self):
        # a slowly varying even bump has a large tail contribution
        with pytest.raises(WindowTooNarrow):
            convolve_numeric(lambda s: 1.0 / (1.0 + (np.asarray(s) / 3000.0) ** 2), 2.0,
                             [0.0], tol=1e-9)


class TestRfOde:
    @settings(max_examples=15)
    @given(st.floats(0.05, 10), st.floats(0.3, 3), st.floats(0, 3), st.floats(-5, 5))
    def test_matches_closed_form(self, om, gamma, gpd, nu):
        rf = RfParams(gamma=gamma, gamma_pd=gpd)
        assert rf_steady_ode(om, gamma, gpd, nu) == pytest.approx(
            float(rf_population(om, rf, nu)), rel=1e-8)

    def test_saturation(self):
        assert rf_steady_ode(200.0, 1.0, 0.0, 0.0) == pytest.approx(0.5, rel=1e-4)

    def test_small_signal(self):
        om, gamma, gpd = 1e-3, 0.8, 0.8
        n = rf_steady_ode(om, gamma, gpd, 0.0)
        assert n == pytest.approx(om ** 2 / (gamma * (gamma + gpd)), rel=1e-5)

    def test_bad_gamma(self):
        with pytest.raises(ValueError):
            rf_steady_ode(1.0, 0.0, 0.0, 0.0)

    def test_unconverged(self):
        with pytest.raises(NonConvergedIntegration):
            rf_steady_ode(1.0, 0.8, 0.0, 0.0, t_end=0.1)
