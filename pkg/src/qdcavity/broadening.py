"""Emitter broadening (model M2): pure dephasing and spectral wandering.

Both mechanisms give the same structure,

    <a^+ a> = <a^+ a>' + C / (|nu - omega'_+|^2 |nu - omega'_-|^2),

where primed quantities are the M1 results with gamma_g renormalised by the
broadening rate.  For pure dephasing C is independent of the probe; for
Lorentzian spectral wandering it depends on ``nu - delta``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, ExceptionalPoint
from .model import (
    ComplexPole,
    ModelParams,
    PoleDecomposition,
    TuningPoint,
    cavity_population_m1,
    decompose_m1,
    rabi_poles,
)


class Mechanism(str, enum.Enum):
    SPECTRAL_WANDERING = "sw"
    PURE_DEPHASING = "pd"

    @classmethod
    def parse(cls, value) -> "Mechanism":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        aliases = {
            "sw": cls.SPECTRAL_WANDERING, "spectralwandering": cls.SPECTRAL_WANDERING,
            "pd": cls.PURE_DEPHASING, "puredephasing": cls.PURE_DEPHASING,
        }
        try:
            return aliases[key]
        except KeyError:
            raise DomainError(f"unknown broadening mechanism {value!r}") from None


@dataclass(frozen=True)
class BroadeningSpec:
    mechanism: Mechanism
    gamma_big: float

    def __post_init__(self):
        object.__setattr__(self, "mechanism", Mechanism.parse(self.mechanism))
        if not (math.isfinite(self.gamma_big) and self.gamma_big >= 0):
            raise DomainError(f"broadening FWHM must be >= 0, got {self.gamma_big}")

    def apply(self, p: ModelParams) -> ModelParams:
        """Copy of ``p`` with this broadening stored in the matching rate field."""
        if self.mechanism is Mechanism.PURE_DEPHASING:
            return p.replace(gamma_pd=self.gamma_big, gamma_sw=0.0)
        return p.replace(gamma_sw=self.gamma_big, gamma_pd=0.0)


@dataclass(frozen=True)
class CorrectionTerm:
    amplitude: float
    u_plus: complex
    u_minus: complex


def renormalize(p: ModelParams, spec: BroadeningSpec) -> ModelParams:
    return p.replace(gamma_g=p.gamma_g + spec.gamma_big)


def _check_rates(p: ModelParams):
    if not p.gamma_g > 0 or not p.kappa > 0:
        raise DomainError("gamma_g and kappa must be > 0")


def correction_pd(p: ModelParams, delta: float) -> float:
    """Pure-dephasing correction amplitude (unit drive), uses ``p.gamma_pd``."""
    _check_rates(p)
    if p.gamma_pd == 0:
        return 0.0
    return float(kernels.pd_amplitude(delta, p.g, p.kappa, p.gamma_g, p.gamma_pd))


def correction_sw(p: ModelParams, nu_r, delta: float):
    """Spectral-wandering correction amplitude at probe offset(s) ``nu_r``."""
    _check_rates(p)
    nu = np.asarray(nu_r, dtype=float)
    if p.gamma_sw == 0:
        return np.zeros_like(nu) if nu.ndim else 0.0
    out = kernels.sw_amplitude(nu, delta, p.g, p.kappa, p.gamma_g, p.gamma_sw)
    return float(out) if nu.ndim == 0 else np.asarray(out)


def convolved_ratio_identity(a: complex, b: complex, gamma_sw: float):
    """Closed form of ``|(w - a)/(w - b)|^2`` convolved over ``w`` with a
    unit-area Lorentzian of FWHM ``gamma_sw``.

    Both ``a`` and ``b`` must lie in the lower half plane.  Returns a
    vectorised callable of ``w``.  The convolution shifts both zeros down by
    ``gamma_sw/2`` and adds a Lorentzian centred at ``Re b'``::

        |(w - a')/(w - b')|^2 + (pi gamma_sw / 2) |a - b|^2 / (Im b Im b') L_b'(w)
    """
    a = complex(a)
    b = complex(b)
    if not (a.imag < 0 and b.imag < 0):
        raise DomainError("identity requires Im a < 0 and Im b < 0")
    if gamma_sw < 0:
        raise DomainError("gamma_sw must be >= 0")
    shift = 0.5j * gamma_sw
    ap, bp = a - shift, b - shift
    weight = 0.5 * math.pi * gamma_sw * abs(a - b) ** 2 / (b.imag * bp.imag)

    def rhs(w):
        w = np.asarray(w, dtype=float)
        ratio = np.abs((w - ap) / (w - bp)) ** 2
        lor = (-bp.imag / math.pi) / ((w - bp.real) ** 2 + bp.imag ** 2)
        return ratio + weight * lor

    return rhs


def correction_amplitudes(c_amplitude: float, omega_p_plus, omega_p_minus):
    """Recast amplitudes (U+, U-) of ``C/(|nu - w+|^2 |nu - w-|^2)``.

    The correction equals ``Re U+ L(nu-w+) + Im U+ D(nu-w+) + Re U- L(nu-w-) + Im U- D(nu-w-)``.
    """
    wp = omega_p_plus.z if isinstance(omega_p_plus, ComplexPole) else complex(omega_p_plus)
    wm = omega_p_minus.z if isinstance(omega_p_minus, ComplexPole) else complex(omega_p_minus)
    gap = wp - wm
    if abs(gap) <= 1e-12 * max(abs(wp), abs(wm), 1.0):
        raise ExceptionalPoint("primed poles coincide")
    if c_amplitude == 0:
        return 0j, 0j
    u_plus = (math.pi / wp.imag) * c_amplitude / (gap * (wp - wm.conjugate()))
    u_minus = (math.pi / wm.imag) * c_amplitude / (-gap * (wm - wp.conjugate()))
    # Im U+ = -Im U- holds analytically; enforce it bitwise.
    im = 0.5 * (u_plus.imag - u_minus.imag)
    return complex(u_plus.real, im), complex(u_minus.real, -im)


def spectrum_m2(p: ModelParams, spec: BroadeningSpec, tuning: TuningPoint) -> np.ndarray:
    """Exact M2 cavity population (unit drive) on the tuning grid."""
    if spec.gamma_big == 0:
        return cavity_population_m1(p, tuning)
    rabi_poles(renormalize(p, spec), tuning.delta)
    nu, d = tuning.probe_offsets, tuning.delta
    if spec.mechanism is Mechanism.PURE_DEPHASING:
        return kernels.m2_pd_population(nu, d, p.g, p.kappa, p.gamma_g, spec.gamma_big)
    return kernels.m2_sw_population(nu, d, p.g, p.kappa, p.gamma_g, spec.gamma_big)


def correction_term(p: ModelParams, spec: BroadeningSpec, delta: float) -> CorrectionTerm:
    """Constant-amplitude correction used for the M2 area decomposition.

    Spectral wandering uses the mean of its amplitude at the two primed peaks.
    """
    primed = renormalize(p, spec)
    wp, wm = rabi_poles(primed, delta)
    q = spec.apply(p)
    if spec.mechanism is Mechanism.PURE_DEPHASING:
        c = correction_pd(q, delta)
    else:
        c = float(np.mean(correction_sw(q, np.array([wp.re, wm.re]), delta)))
    u_plus, u_minus = correction_amplitudes(c, wp, wm)
    return CorrectionTerm(c, u_plus, u_minus)


def decompose_m2(p: ModelParams, spec: BroadeningSpec, delta: float) -> PoleDecomposition:
    """Lorentzian/dispersive areas of the M2 spectrum.

    Exact for pure dephasing; for spectral wandering the correction amplitude
    is treated as constant, so use :func:`spectrum_m2` for fitting.
    """
    base = decompose_m1(renormalize(p, spec), delta)
    if spec.gamma_big == 0:
        return base
    corr = correction_term(p, spec, delta)
    return PoleDecomposition(
        omega_plus=base.omega_plus, omega_minus=base.omega_minus,
        v_plus=base.v_plus, v_minus=base.v_minus, w=base.w,
        a_l_plus=base.a_l_plus + corr.u_plus.real,
        a_l_minus=base.a_l_minus + corr.u_minus.real,
        a_d=base.a_d + corr.u_plus.imag,
        u_plus=corr.u_plus, u_minus=corr.u_minus,
    )
