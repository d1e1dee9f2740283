"""Pure-numpy spectrum kernels.

Reference implementation of the hot loops in ``_kernels.pyx``.  All frequencies
are relative to the exciton (omega_X = 0) and the drive amplitude is 1.

The cavity population is evaluated from the rational form

    <a^+ a> = |nu - i gamma/2|^2 / |(nu - i gamma/2)(nu - delta - i kappa/2) - g^2|^2

which is finite everywhere on the real axis, so no pole bookkeeping is needed
here.  The pole-resolved forms live in :mod:`qdcavity.model`.
"""
import numpy as np


def _denominator_sq(nu, delta, g, kappa, gamma):
    re = nu * (nu - delta) - 0.25 * gamma * kappa - g * g
    im = -0.5 * kappa * nu - 0.5 * gamma * (nu - delta)
    return re * re + im * im


def m1_population(nu, delta, g, kappa, gamma):
    nu = np.asarray(nu, dtype=float)
    return (nu * nu + 0.25 * gamma * gamma) / _denominator_sq(nu, delta, g, kappa, gamma)


def m1_exciton_population(nu, delta, g, kappa, gamma):
    nu = np.asarray(nu, dtype=float)
    return (g * g) / _denominator_sq(nu, delta, g, kappa, gamma)


def pd_amplitude(delta, g, kappa, gamma, gamma_pd):
    gp = gamma + gamma_pd
    bracket = (4.0 * g * g * (kappa + gamma) * (kappa + gp) / (kappa * gamma)
               + (kappa + gp) ** 2 + 4.0 * delta * delta)
    return 4.0 * g ** 4 * (gamma_pd / gamma) * (kappa + gp) / kappa / bracket


def sw_amplitude(nu, delta, g, kappa, gamma, gamma_sw):
    nu = np.asarray(nu, dtype=float)
    c = nu - delta
    bracket = 4.0 * g * g * kappa / gamma + kappa * kappa + 4.0 * c * c
    return 4.0 * g ** 4 * (gamma_sw / gamma) / bracket


def m2_pd_population(nu, delta, g, kappa, gamma, gamma_pd):
    nu = np.asarray(nu, dtype=float)
    gp = gamma + gamma_pd
    d2 = _denominator_sq(nu, delta, g, kappa, gp)
    corr = pd_amplitude(delta, g, kappa, gamma, gamma_pd)
    return (nu * nu + 0.25 * gp * gp + corr) / d2


def m2_sw_population(nu, delta, g, kappa, gamma, gamma_sw):
    nu = np.asarray(nu, dtype=float)
    gp = gamma + gamma_sw
    d2 = _denominator_sq(nu, delta, g, kappa, gp)
    corr = sw_amplitude(nu, delta, g, kappa, gamma, gamma_sw)
    return (nu * nu + 0.25 * gp * gp + corr) / d2
