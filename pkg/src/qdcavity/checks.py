"""Randomised agreement checks between the closed forms and the oracles.

Each check draws its own parameter sets from a seeded generator, computes the
worst relative disagreement and compares it with a tolerance.  Used by the
``check`` command and by the test suite.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels_py, kernels
from .broadening import BroadeningSpec, Mechanism, convolved_ratio_identity, spectrum_m2
from .errors import ExceptionalPoint
from .model import (
    ModelParams,
    TuningPoint,
    amplitude_from_poles,
    cavity_amplitude,
    cavity_population_m1,
    decompose_m1,
    exciton_population_m1,
    rabi_poles,
)
from .oracle import (
    LindbladConfig,
    bloch_full_steady,
    bloch_linear_steady,
    convolve_numeric,
    lindblad_steady,
    rf_steady_ode,
)
from .rf import RfParams, rf_population

DEFAULT_TOLERANCES = {
    "m1_vs_linear_bloch": 1e-10,
    "exciton_vs_linear_bloch": 1e-10,
    "rational_vs_pole_residue": 1e-12,
    "decomposition_vs_population": 1e-9,
    "m2pd_vs_moment_equations": 1e-10,
    "m2sw_vs_convolved_m1": 1e-6,
    "identity_vs_quadrature": 1e-6,
    "rf_vs_bloch_ode": 1e-8,
    "m2pd_vs_lindblad": 1e-3,
}


# Both integrands tend to a constant far away, so the window is wide.
QUAD = dict(window=4e4, n_points=4_000_001, tol=5e-7)


@dataclass
class CheckResult:
    name: str
    n_cases: int
    max_error: float
    tolerance: float
    seconds: float

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)


def _rel(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def random_params(rng, broadening=False):
    """A rate set away from the exceptional point, spanning weak and strong coupling."""
    while True:
        p = ModelParams(
            g=rng.uniform(0.5, 30.0), kappa=rng.uniform(1.0, 40.0),
            gamma_g=rng.uniform(0.2, 10.0),
            gamma_pd=rng.uniform(0.1, 3.0) if broadening else 0.0,
        )
        delta = rng.uniform(-30.0, 30.0)
        try:
            rabi_poles(p, delta)
            rabi_poles(p.replace(gamma_g=p.gamma_g + 3.0), delta)
        except ExceptionalPoint:
            continue
        return p, delta


def _probes(rng, n=5):
    return np.sort(rng.uniform(-60.0, 60.0, n))


def check_m1_bloch(rng, n_sets):
    err_a = err_b = 0.0
    for _ in range(n_sets):
        p, d = random_params(rng)
        nu = _probes(rng)
        tp = TuningPoint(d, nu)
        ref = [bloch_linear_steady(p, d, x) for x in nu]
        err_a = max(err_a, _rel(cavity_population_m1(p, tp), [abs(r[0]) ** 2 for r in ref]))
        err_b = max(err_b, _rel(exciton_population_m1(p, tp), [abs(r[1]) ** 2 for r in ref]))
    return {"m1_vs_linear_bloch": err_a, "exciton_vs_linear_bloch": err_b}


def check_pole_residue(rng, n_sets):
    err_amp = err_dec = 0.0
    for _ in range(n_sets):
        p, d = random_params(rng)
        nu = _probes(rng, 20)
        err_amp = max(err_amp, _rel(amplitude_from_poles(p, d, nu), cavity_amplitude(p, d, nu)))
        pop = cavity_population_m1(p, TuningPoint(d, nu))
        err_dec = max(err_dec, _rel(decompose_m1(p, d).evaluate(nu), pop))
    return {"rational_vs_pole_residue": err_amp, "decomposition_vs_population": err_dec}


def check_m2_pd_moments(rng, n_sets):
    err = 0.0
    for _ in range(n_sets):
        p, d = random_params(rng, broadening=True)
        nu = _probes(rng)
        spec = BroadeningSpec(Mechanism.PURE_DEPHASING, p.gamma_pd)
        closed = spectrum_m2(p.replace(gamma_pd=0.0), spec, TuningPoint(d, nu))
        ref = [bloch_full_steady(p, d, x)[0] for x in nu]
        err = max(err, _rel(closed, ref))
    return {"m2pd_vs_moment_equations": err}


def check_m2_sw_convolution(rng, n_sets):
    err = 0.0
    for _ in range(n_sets):
        p, d = random_params(rng)
        gsw = rng.uniform(0.2, 3.0)
        nu = _probes(rng, 2)
        closed = spectrum_m2(p, BroadeningSpec(Mechanism.SPECTRAL_WANDERING, gsw),
                             TuningPoint(d, nu))
        for x, c in zip(nu, closed):
            # shifting the exciton by y moves both frame offsets by y; the numpy
            # kernel broadcasts over the detuning as well
            f = lambda y, x=x: _kernels_py.m1_population(x + y, d + y, p.g, p.kappa, p.gamma_g)  # noqa: E731
            ref = convolve_numeric(f, gsw, [0.0], **QUAD)[0]
            err = max(err, _rel(c, ref))
    return {"m2sw_vs_convolved_m1": err}


def random_identity_triple(rng):
    a = complex(rng.uniform(-10, 10), -rng.uniform(0.1, 10))
    b = complex(rng.uniform(-10, 10), -rng.uniform(0.1, 10))
    return a, b, rng.uniform(0.1, 5.0)


def check_identity(rng, n_sets):
    err = 0.0
    for _ in range(n_sets):
        a, b, gsw = random_identity_triple(rng)
        w = rng.uniform(-15, 15, 3)
        rhs = convolved_ratio_identity(a, b, gsw)(w)
        ref = convolve_numeric(lambda s: np.abs((s - a) / (s - b)) ** 2, gsw, w, **QUAD)
        err = max(err, _rel(rhs, ref))
    return {"identity_vs_quadrature": err}


def check_rf(rng, n_sets):
    err = 0.0
    for _ in range(n_sets):
        rf = RfParams(gamma=rng.uniform(0.3, 3.0), gamma_pd=rng.uniform(0.0, 3.0))
        om = rng.uniform(0.05, 10.0)
        nu = rng.uniform(-5.0, 5.0)
        err = max(err, _rel(rf_population(om, rf, nu),
                            rf_steady_ode(om, rf.gamma, rf.gamma_pd, nu)))
    return {"rf_vs_bloch_ode": err}


def check_lindblad(rng, n_sets, eps_rel=1e-3):
    err = 0.0
    for _ in range(n_sets):
        p, d = random_params(rng, broadening=True)
        nu = rng.uniform(-30.0, 30.0)
        cfg = LindbladConfig(n_max=6, eps=eps_rel * p.kappa)
        n_a, _ = lindblad_steady(p, d, nu, cfg)
        closed = kernels.m2_pd_population(np.array([nu]), d, p.g, p.kappa, p.gamma_g,
                                          p.gamma_pd)[0] * cfg.eps ** 2
        err = max(err, _rel(n_a, closed))
    return {"m2pd_vs_lindblad": err}


SUITE = (
    (check_m1_bloch, 1.0),
    (check_pole_residue, 1.0),
    (check_m2_pd_moments, 1.0),
    (check_m2_sw_convolution, 0.25),
    (check_identity, 0.5),
    (check_rf, 0.5),
    (check_lindblad, 0.25),
)


def run_suite(seed: int = 0, n_sets: int = 20, tol_factor: float = 1.0) -> list[CheckResult]:
    """Run every oracle comparison; ``tol_factor`` scales all default tolerances."""
    out = []
    for k, (fn, share) in enumerate(SUITE):
        rng = np.random.default_rng([seed, k])
        n = max(1, int(round(share * n_sets)))
        t0 = time.perf_counter()
        errs = fn(rng, n)
        dt = time.perf_counter() - t0
        for name, e in errs.items():
            out.append(CheckResult(name, n, e, DEFAULT_TOLERANCES[name] * tol_factor, dt))
    return out
