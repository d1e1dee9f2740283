"""Weak-excitation steady state of the coherently driven Jaynes-Cummings system.

Conventions
-----------
* All rates and frequencies are in micro-electronvolts with hbar = 1.
* Frequencies are measured from the bare exciton: ``delta = omega_C - omega_X``
  and ``nu = omega_R - omega_X``.
* The drive amplitude is normalised to 1; the physical magnitude enters only
  through ``ModelParams.scale`` (collection efficiency x kappa x integration
  time x |drive|^2).

The cavity amplitude has two simple poles in the upper half plane,

    omega_pm = delta/2 + i(kappa + gamma_g)/4 +- sqrt(g^2 + (delta/2 + i(kappa - gamma_g)/4)^2),

and |<a^+>|^2 splits into two Lorentzians and two dispersive terms whose
areas are closed-form functions of the rates.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DomainError, ExceptionalPoint

HBAR_UEV_PS = 658.2119569
HC_UEV_NM = 1.23984198e9

EP_RTOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Dynamical rate set (all in ueV).

    ``gamma_pd`` and ``gamma_sw`` are only read by the broadening module; the
    M1 functions here ignore them.
    """

    g: float
    kappa: float
    gamma_g: float
    gamma_pd: float = 0.0
    gamma_sw: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        for name in ("g", "kappa", "gamma_g", "gamma_pd", "gamma_sw", "scale"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if self.g < 0:
            raise DomainError(f"g must be >= 0, got {self.g}")
        if self.kappa <= 0:
            raise DomainError(f"kappa must be > 0, got {self.kappa}")
        if self.gamma_g <= 0:
            raise DomainError(f"gamma_g must be > 0, got {self.gamma_g}")
        if self.gamma_pd < 0 or self.gamma_sw < 0:
            raise DomainError("broadening rates must be >= 0")
        if self.scale < 0:
            raise DomainError(f"scale must be >= 0, got {self.scale}")

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class TuningPoint:
    """One detuning sweep: cavity detuning and the probe grid (both vs omega_X)."""

    delta: float
    probe_offsets: np.ndarray = field(repr=False)

    def __post_init__(self):
        nu = np.asarray(self.probe_offsets, dtype=float).reshape(-1)
        if not math.isfinite(self.delta) or not np.all(np.isfinite(nu)):
            raise DomainError("detuning and probe offsets must be finite")
        if nu.size > 1 and np.any(np.diff(nu) <= 0):
            raise DomainError("probe offsets must be strictly increasing")
        object.__setattr__(self, "probe_offsets", nu)


class ComplexPole(NamedTuple):
    re: float
    im: float

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    @property
    def fwhm(self) -> float:
        return 2.0 * abs(self.im)

    @classmethod
    def from_complex(cls, z) -> "ComplexPole":
        z = complex(z)
        return cls(z.real, z.imag)


@dataclass(frozen=True)
class PoleDecomposition:
    """Lorentzian + dispersive decomposition of a two-pole spectrum.

    The reconstructed spectrum is::

        a_l_plus  L(nu - omega_plus)  + a_d D(nu - omega_plus)
      + a_l_minus L(nu - omega_minus) - a_d D(nu - omega_minus)

    ``u_plus``/``u_minus`` are the broadening recast amplitudes; both are zero
    for a plain M1 decomposition.
    """

    omega_plus: ComplexPole
    omega_minus: ComplexPole
    v_plus: float
    v_minus: float
    w: complex
    a_l_plus: float
    a_l_minus: float
    a_d: float
    u_plus: complex = 0j
    u_minus: complex = 0j

    def constituents(self, nu) -> dict:
        nu = np.asarray(nu, dtype=float)
        return {
            "L_plus": self.a_l_plus * lorentzian(nu, self.omega_plus),
            "L_minus": self.a_l_minus * lorentzian(nu, self.omega_minus),
            "D_plus": self.a_d * dispersive(nu, self.omega_plus),
            "D_minus": -self.a_d * dispersive(nu, self.omega_minus),
        }

    def evaluate(self, nu) -> np.ndarray:
        parts = self.constituents(nu)
        return parts["L_plus"] + parts["L_minus"] + parts["D_plus"] + parts["D_minus"]


def lorentzian(nu, pole) -> np.ndarray:
    """Unit-area Lorentzian at ``Re pole`` with FWHM ``2 |Im pole|``."""
    re, im = pole
    x = np.asarray(nu, dtype=float) - re
    return (im / np.pi) / (x * x + im * im)


def dispersive(nu, pole) -> np.ndarray:
    re, im = pole
    x = np.asarray(nu, dtype=float) - re
    return (x / np.pi) / (x * x + im * im)


def _mixing(p: ModelParams, delta: float) -> tuple[complex, complex]:
    """Return (q, sqrt(g^2 + q^2)) with q = delta/2 + i(kappa - gamma_g)/4."""
    q = complex(0.5 * delta, 0.25 * (p.kappa - p.gamma_g))
    radicand = p.g * p.g + q * q
    ref = max(p.g * p.g, (0.25 * (p.kappa - p.gamma_g)) ** 2)
    if abs(radicand) <= EP_RTOL * ref:
        raise ExceptionalPoint(
            f"poles coincide (|g^2 + q^2| = {abs(radicand):.3e}) at g={p.g}, "
            f"kappa={p.kappa}, gamma_g={p.gamma_g}, delta={delta}")
    return q, cmath.sqrt(radicand)


def rabi_poles(p: ModelParams, delta: float) -> tuple[ComplexPole, ComplexPole]:
    """Complex Rabi frequencies (omega_plus, omega_minus) relative to omega_X.

    The principal square root is used and ``omega_plus`` takes its + branch.
    Raises :class:`ExceptionalPoint` when the radicand vanishes.
    """
    _, root = _mixing(p, delta)
    centre = complex(0.5 * delta, 0.25 * (p.kappa + p.gamma_g))
    return ComplexPole.from_complex(centre + root), ComplexPole.from_complex(centre - root)


def projected_rates(p: ModelParams, delta: float):
    """Residues of <a^+> and <b^+> at the two poles, for unit drive.

    Returns ``(eps_a_plus, eps_a_minus, eps_b_plus, eps_b_minus)``.
    """
    q, root = _mixing(p, delta)
    ratio = q / root
    eps_a_plus = 0.5 * (1.0 + ratio)
    eps_a_minus = 0.5 * (1.0 - ratio)
    half_b = 0.5 * p.g / root
    return eps_a_plus, eps_a_minus, -half_b, half_b


def _denominator(p: ModelParams, delta: float, nu):
    nu = np.asarray(nu, dtype=float)
    x = -nu + 0.5j * p.gamma_g
    c = delta - nu + 0.5j * p.kappa
    return x, p.g * p.g - x * c


def cavity_amplitude(p: ModelParams, delta: float, nu_r):
    """Steady-state <a^+> (unit drive), direct rational form."""
    x, den = _denominator(p, delta, nu_r)
    return x / den


def exciton_amplitude(p: ModelParams, delta: float, nu_r):
    """Steady-state <b^+> (unit drive) in the same sign convention as the residues."""
    _, den = _denominator(p, delta, nu_r)
    return p.g / den


def amplitude_from_poles(p: ModelParams, delta: float, nu_r, which: str = "a"):
    """Pole-residue sum for <a^+> (``which='a'``) or <b^+> (``which='b'``)."""
    wp, wm = rabi_poles(p, delta)
    ea_p, ea_m, eb_p, eb_m = projected_rates(p, delta)
    rp, rm = (ea_p, ea_m) if which == "a" else (eb_p, eb_m)
    nu = np.asarray(nu_r, dtype=float)
    return rp / (nu - wp.z) + rm / (nu - wm.z)


def _decompose(residue_plus: complex, residue_minus: complex,
               wp: ComplexPole, wm: ComplexPole) -> PoleDecomposition:
    v_plus = math.pi * abs(residue_plus) ** 2 / wp.im
    v_minus = math.pi * abs(residue_minus) ** 2 / wm.im
    w = 2j * math.pi * residue_plus * residue_minus.conjugate() / (wp.z - wm.z.conjugate())
    return PoleDecomposition(
        omega_plus=wp, omega_minus=wm,
        v_plus=v_plus, v_minus=v_minus, w=complex(w),
        a_l_plus=v_plus + w.real, a_l_minus=v_minus + w.real, a_d=w.imag,
    )


def decompose_m1(p: ModelParams, delta: float) -> PoleDecomposition:
    """Lorentzian/dispersive decomposition of the M1 cavity population."""
    wp, wm = rabi_poles(p, delta)
    ea_p, ea_m, _, _ = projected_rates(p, delta)
    return _decompose(ea_p, ea_m, wp, wm)


def decompose_exciton_m1(p: ModelParams, delta: float) -> PoleDecomposition:
    wp, wm = rabi_poles(p, delta)
    _, _, eb_p, eb_m = projected_rates(p, delta)
    return _decompose(eb_p, eb_m, wp, wm)


def cavity_population_m1(p: ModelParams, tuning: TuningPoint) -> np.ndarray:
    """<a^+ a>(nu) on the tuning grid (unit drive)."""
    rabi_poles(p, tuning.delta)
    return kernels.m1_population(tuning.probe_offsets, tuning.delta,
                                 p.g, p.kappa, p.gamma_g)


def exciton_population_m1(p: ModelParams, tuning: TuningPoint) -> np.ndarray:
    rabi_poles(p, tuning.delta)
    return kernels.m1_exciton_population(tuning.probe_offsets, tuning.delta,
                                         p.g, p.kappa, p.gamma_g)


def counts(population, p: ModelParams) -> np.ndarray:
    """Expected detected counts for a unit-drive population."""
    return p.scale * np.asarray(population, dtype=float)


def cooperativity(g: float, kappa: float, gamma: float) -> float:
    """C = 2 g^2 / (kappa gamma)."""
    if not kappa > 0 or not gamma > 0:
        raise DomainError(f"kappa and gamma must be > 0 (got {kappa}, {gamma})")
    return 2.0 * g * g / (kappa * gamma)


def lifetime_to_linewidth(tau_ps: float) -> float:
    """Transform-limited linewidth hbar/tau in ueV for a lifetime in ps."""
    if not tau_ps > 0:
        raise DomainError(f"lifetime must be > 0, got {tau_ps}")
    return HBAR_UEV_PS / tau_ps


def q_to_kappa(q_factor: float, lambda_nm: float) -> float:
    """Cavity loss rate (ueV) from quality factor and wavelength (nm)."""
    if not q_factor > 0 or not lambda_nm > 0:
        raise DomainError("Q-factor and wavelength must be > 0")
    return HC_UEV_NM / lambda_nm / q_factor


def coupling_estimate(mu12_e_nm: float, e_vac_v_per_m: float) -> float:
    """g = mu12 * E_vac in ueV, with mu12 in e*nm and E_vac in V/m.

    e * nm * V/m = 1e-9 eV = 1e-3 ueV.
    """
    if mu12_e_nm < 0 or e_vac_v_per_m < 0:
        raise DomainError("dipole moment and field must be >= 0")
    return mu12_e_nm * e_vac_v_per_m / 1000.0
