# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled spectrum kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _den_sq(double nu, double delta, double g, double kappa,
                           double gamma) noexcept nogil:
    cdef double re = nu * (nu - delta) - 0.25 * gamma * kappa - g * g
    cdef double im = -0.5 * kappa * nu - 0.5 * gamma * (nu - delta)
    return re * re + im * im


def _as_grid(nu):
    return np.ascontiguousarray(np.asarray(nu, dtype=np.float64))


def m1_population(nu, double delta, double g, double kappa, double gamma):
    arr = _as_grid(nu)
    out = np.empty_like(arr)
    cdef const double[::1] x = arr.reshape(-1)
    cdef double[::1] y = out.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double q = 0.25 * gamma * gamma
    with nogil:
        for i in range(n):
            y[i] = (x[i] * x[i] + q) / _den_sq(x[i], delta, g, kappa, gamma)
    return out


def m1_exciton_population(nu, double delta, double g, double kappa, double gamma):
    arr = _as_grid(nu)
    out = np.empty_like(arr)
    cdef const double[::1] x = arr.reshape(-1)
    cdef double[::1] y = out.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double g2 = g * g
    with nogil:
        for i in range(n):
            y[i] = g2 / _den_sq(x[i], delta, g, kappa, gamma)
    return out


def pd_amplitude(double delta, double g, double kappa, double gamma, double gamma_pd):
    cdef double gp = gamma + gamma_pd
    cdef double bracket = (4.0 * g * g * (kappa + gamma) * (kappa + gp) / (kappa * gamma)
                           + (kappa + gp) * (kappa + gp) + 4.0 * delta * delta)
    return 4.0 * g * g * g * g * (gamma_pd / gamma) * (kappa + gp) / kappa / bracket


def sw_amplitude(nu, double delta, double g, double kappa, double gamma, double gamma_sw):
    arr = _as_grid(nu)
    out = np.empty_like(arr)
    cdef const double[::1] x = arr.reshape(-1)
    cdef double[::1] y = out.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double num = 4.0 * g * g * g * g * (gamma_sw / gamma)
    cdef double base = 4.0 * g * g * kappa / gamma + kappa * kappa
    cdef double c
    with nogil:
        for i in range(n):
            c = x[i] - delta
            y[i] = num / (base + 4.0 * c * c)
    if np.ndim(nu) == 0:
        return float(out)
    return out


def m2_pd_population(nu, double delta, double g, double kappa, double gamma,
                     double gamma_pd):
    arr = _as_grid(nu)
    out = np.empty_like(arr)
    cdef const double[::1] x = arr.reshape(-1)
    cdef double[::1] y = out.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double gp = gamma + gamma_pd
    cdef double q = 0.25 * gp * gp + pd_amplitude(delta, g, kappa, gamma, gamma_pd)
    with nogil:
        for i in range(n):
            y[i] = (x[i] * x[i] + q) / _den_sq(x[i], delta, g, kappa, gp)
    return out


def m2_sw_population(nu, double delta, double g, double kappa, double gamma,
                     double gamma_sw):
    arr = _as_grid(nu)
    out = np.empty_like(arr)
    cdef const double[::1] x = arr.reshape(-1)
    cdef double[::1] y = out.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double gp = gamma + gamma_sw
    cdef double q = 0.25 * gp * gp
    cdef double num = 4.0 * g * g * g * g * (gamma_sw / gamma)
    cdef double base = 4.0 * g * g * kappa / gamma + kappa * kappa
    cdef double c
    with nogil:
        for i in range(n):
            c = x[i] - delta
            y[i] = (x[i] * x[i] + q + num / (base + 4.0 * c * c)) / _den_sq(
                x[i], delta, g, kappa, gp)
    return out
