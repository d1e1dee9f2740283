"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v`` (the summary
lines are printed even under output capture).
"""
import math
import time

import numpy as np
import pytest

from qdcavity import kernels
from qdcavity.broadening import BroadeningSpec, Mechanism, decompose_m2
from qdcavity.checks import check_identity, check_m1_bloch, check_m2_sw_convolution
from qdcavity.fitting import (
    FitConfig,
    FitParams,
    count_local_maxima,
    fit_global,
    generate_synthetic,
    model_counts,
    subtract_background,
)
from qdcavity.model import (
    ModelParams,
    cooperativity,
    coupling_estimate,
    lifetime_to_linewidth,
    q_to_kappa,
)
from qdcavity.oracle import LindbladConfig, lindblad_steady
from qdcavity.rf import (
    RfParams,
    derive_pure_dephasing,
    fit_spectral_wandering,
    rf_linewidth,
    rf_peak_intensity,
    saturation_relation,
    synthetic_series,
)

M2_RATES = dict(g=11.13, kappa=19.84, gamma_g=1.38)
BIG = 1.26
DELTAS = [-17.0, -11.0, -5.0, 0.0, 5.0, 11.0, 17.0]
GRID = np.linspace(-60.0, 60.0, 401)
DESIGN = [(d, GRID) for d in DELTAS]


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {title} | {detail}")
        assert ok, detail
    return emit


def m2_truth(**kw):
    kw = dict(dict(omega_x=0.3, a_c=2e4, b0=10.0), **kw)
    return FitParams(ModelParams(**M2_RATES, scale=5e5, gamma_sw=BIG), model="M2", **kw)


def perturbed(fp, factor):
    return fp.with_values({k: v * factor for k, v in fp.values().items()})


def test_1_cooperativity(verdict):
    c1 = cooperativity(11.05, 19.48, 2.28)
    c2 = cooperativity(11.13, 19.84, 1.38)
    ok = abs(c1 - 5.50) <= 0.01 and abs(c2 - 9.05) <= 0.005
    verdict(1, "cooperativity", ok, f"C_M1={c1:.4f} C_M2={c2:.4f}")


def test_2_unit_anchors(verdict):
    lw = lifetime_to_linewidth(800.0)
    kap = q_to_kappa(6e4, 940.0)
    g = coupling_estimate(1.2, 2e4)
    ok = 0.80 <= lw <= 0.83 and 21.5 <= kap <= 22.5 and g == 24.0
    verdict(2, "unit conversions", ok, f"linewidth={lw:.4f} kappa={kap:.3f} g={g!r}")


def test_3_bloch_equivalence(verdict):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    errs = check_m1_bloch(rng, 100)
    dt = time.perf_counter() - t0
    worst = max(errs.values())
    ok = worst <= 1e-10 and dt < 10.0
    verdict(3, "closed form vs linear Bloch (100 sets)", ok,
            f"max rel err={worst:.2e} time={dt:.2f}s")


def test_4_convolution_identity(verdict):
    t0 = time.perf_counter()
    ident = check_identity(np.random.default_rng(7), 50)["identity_vs_quadrature"]
    sw = check_m2_sw_convolution(np.random.default_rng(8), 10)["m2sw_vs_convolved_m1"]
    dt = time.perf_counter() - t0
    ok = ident <= 1e-6 and sw <= 1e-6 and dt < 60.0
    verdict(4, "convolution identity and M2-sw", ok,
            f"identity={ident:.2e} m2sw={sw:.2e} time={dt:.1f}s")


def test_5_lindblad_scaling(verdict):
    p = ModelParams(**M2_RATES, gamma_pd=BIG)
    delta, nu = -5.0, 3.0
    ratios = np.array([1e-2, 3e-3, 1e-3])
    t0 = time.perf_counter()
    dev = []
    for r in ratios:
        cfg = LindbladConfig(n_max=6, eps=r * p.kappa)
        n_a, _ = lindblad_steady(p, delta, nu, cfg)
        closed = kernels.m2_pd_population(np.array([nu]), delta, p.g, p.kappa, p.gamma_g,
                                          p.gamma_pd)[0] * cfg.eps ** 2
        dev.append(abs(n_a - closed) / closed)
    slope = np.polyfit(np.log(ratios), np.log(dev), 1)[0]
    dt = time.perf_counter() - t0
    ok = abs(slope - 2.0) <= 0.2 and dt < 300
    verdict(5, "Lindblad weak-excitation scaling", ok,
            f"exponent={slope:.3f} deviations={[f'{d:.1e}' for d in dev]} time={dt:.1f}s")


def test_6_fit_round_trips(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    m1 = FitParams(ModelParams(11.05, 19.48, 2.28, scale=5e5), omega_x=0.3, a_c=2e4, b0=10.0)
    for truth, factor in ((m1, 1.2), (m2_truth(), 0.8), (m2_truth(), 1.2)):
        ds = generate_synthetic(truth, DESIGN)
        res = fit_global(ds, FitConfig(perturbed(truth, factor)))
        for k, v in truth.values().items():
            worst = max(worst, abs(res.params.values()[k] - v) / abs(v))

    truth = m2_truth()
    tv = truth.values()
    z = []
    for seed in range(50):
        ds = generate_synthetic(truth, DESIGN, "poisson", seed=seed)
        res = fit_global(ds, FitConfig(truth, weight_mode="poisson_model"))
        z.append([(res.params.values()[k] - tv[k]) / res.sigma[k] for k in tv])
    z = np.abs(np.array(z))
    within3 = float(np.mean(np.all(z < 3, axis=1)))
    cover = dict(zip(tv, np.mean(z < 1, axis=0)))
    dt = time.perf_counter() - t0
    ok = (worst <= 1e-6 and within3 >= 0.95
          and all(0.55 <= c <= 0.80 for c in cover.values()) and dt < 600)
    cov_txt = " ".join(f"{k}={v:.2f}" for k, v in cover.items())
    verdict(6, "fit round trips", ok,
            f"noiseless max rel err={worst:.1e}; all-3sigma={within3:.2f}; "
            f"1sigma coverage {cov_txt}; time={dt:.1f}s")


def test_7_broadening_signature(verdict):
    truth = m2_truth()
    ds = generate_synthetic(truth, DESIGN, "poisson", seed=11)
    m2 = fit_global(ds, FitConfig(truth, weight_mode="poisson_model"))
    m1_init = FitParams(truth.params.replace(gamma_sw=0.0), omega_x=0.3, a_c=2e4, b0=10.0)
    m1 = fit_global(ds, FitConfig(m1_init, weight_mode="poisson_model"))
    g1 = m1.params.params.gamma_g
    excess = g1 - M2_RATES["gamma_g"]
    ok = (excess > 5 * m1.sigma["gamma_g"] and excess < BIG and m2.chi2 < m1.chi2)
    verdict(7, "M1 absorbs broadening into gamma", ok,
            f"gamma_M1={g1:.3f}+-{m1.sigma['gamma_g']:.3f} vs true {M2_RATES['gamma_g']} "
            f"(excess {excess:.2f}, Gamma={BIG}); chi2/dof M1={m1.reduced_chi2:.2f} "
            f"M2={m2.reduced_chi2:.2f}")


def test_8_polariton_structure(verdict):
    truth = m2_truth(a_c=1e5)
    grid = np.linspace(-60, 60, 1201)
    ds = generate_synthetic(truth, [(0.0, grid)])
    n_raw = count_local_maxima(ds.sweeps[0].counts)
    n_sub = count_local_maxima(subtract_background(ds, truth).sweeps[0].counts)
    dec = decompose_m2(truth.params, BroadeningSpec(Mechanism.SPECTRAL_WANDERING, BIG), 0.0)
    pole_split = dec.omega_plus.re - dec.omega_minus.re
    g, kap, gp = M2_RATES["g"], M2_RATES["kappa"], M2_RATES["gamma_g"] + BIG
    closed = 2 * math.sqrt(g * g - ((kap - gp) / 4) ** 2)
    ok = n_raw == 3 and n_sub == 2 and abs(pole_split - closed) <= 0.1
    verdict(8, "polariton structure", ok,
            f"maxima raw={n_raw} subtracted={n_sub}; splitting closed={closed:.4f} "
            f"poles={pole_split:.4f}")
    assert model_counts(truth, ds.sweeps[0]).max() > 0


def test_9_rf_suite(verdict):
    t0 = time.perf_counter()
    rf = RfParams(0.8, 0.8, 1.5, beta=4e4)
    om = np.geomspace(1e-2, 30, 100)
    ident = np.max(np.abs(rf_peak_intensity(om, rf)
                          - saturation_relation(rf_linewidth(om, rf), rf.i_sat, rf.Gamma0,
                                                rf.gamma_sw)) / rf_peak_intensity(om, rf))

    powers = np.geomspace(0.5, 500, 25)
    sw = []
    for seed in range(20):
        s = synthetic_series(rf, powers, 0.064, 0.005, 0.02, seed=seed)
        sw.append(fit_spectral_wandering(s).gamma_sw)
    sw = np.array(sw)
    hit = float(np.mean(np.abs(sw - 1.5) <= 0.2))

    rf0 = RfParams(0.8, 1.6, 0.0, beta=4e4)
    red = []
    for seed in range(20):
        s = synthetic_series(rf0, powers, 0.064, 0.005, 0.02, seed=seed)
        red.append(fit_spectral_wandering(s, check_consistency=False).reduced_chi2_null)
    red = float(np.mean(red))

    qd1 = derive_pure_dephasing(3.84, 1.4, 0.8)
    qd3 = derive_pure_dephasing(3.10, 1.5, 0.8)
    dt = time.perf_counter() - t0
    ok = (ident <= 1e-10 and abs(np.mean(sw) - 1.5) <= 0.2 and hit >= 0.8
          and abs(red - 1.0) <= 0.2 and round(qd1, 1) == 1.6 and round(qd3, 1) == 0.8
          and dt < 60)
    verdict(9, "RF suite", ok,
            f"identity={ident:.1e}; gamma_sw mean={np.mean(sw):.3f} within 0.2 in "
            f"{hit:.0%}; no-wandering chi2/dof={red:.2f}; gamma_pd QD1={qd1:.2f} "
            f"QD3={qd3:.2f}; time={dt:.1f}s")
