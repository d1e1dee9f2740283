"""Brute-force reference solvers used to check the closed forms.

None of these routines call into :mod:`qdcavity.kernels` or reuse the pole
algebra; each solves the underlying equations directly.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    GridTooCoarse,
    NonConvergedIntegration,
    SingularSystem,
    TruncationNotConverged,
    WindowTooNarrow,
)
from .model import ModelParams


def bloch_linear_steady(p: ModelParams, delta: float, nu_r: float, eps: float = 1.0):
    """Steady state of the linearised Bloch equations for <a^+> and <b^+>.

    Solves::

        0 = [i(delta - nu) - kappa/2] A + i g B + i eps
        0 = [-i nu - (gamma_g + gamma_pd)/2] B + i g A

    Note the sign of <b^+> from this system is opposite to
    :func:`qdcavity.model.exciton_amplitude`; only |<b^+>| is convention free.
    """
    gamma_bar = p.gamma_g + p.gamma_pd
    m = np.array([
        [1j * (delta - nu_r) - 0.5 * p.kappa, 1j * p.g],
        [1j * p.g, -1j * nu_r - 0.5 * gamma_bar],
    ], dtype=complex)
    rhs = np.array([-1j * eps, 0.0], dtype=complex)
    if p.kappa == 0 and gamma_bar == 0:
        raise SingularSystem("undamped system has no steady state")
    try:
        a_dag, b_dag = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    return complex(a_dag), complex(b_dag)


def bloch_full_steady(p: ModelParams, delta: float, nu_r: float, eps: float = 1.0):
    """Second-order moments (<a^+a>, <b^+b>, <b^+a>) in the weak-drive limit.

    Built from the Heisenberg equations of the driven Jaynes-Cummings model
    with cavity loss, radiative decay and pure dephasing, keeping terms up to
    second order in the drive.  The first moments enter as sources.
    """
    a_dag, b_dag = bloch_linear_steady(p, delta, nu_r, eps)
    a, b = a_dag.conjugate(), b_dag.conjugate()
    g, kappa = p.g, p.kappa
    gamma_bar = p.gamma_g + p.gamma_pd
    dxc = -delta  # omega_X - omega_C
    # unknowns: n_a, n_b, x = <b^+ a>, y = <a^+ b>
    m = np.array([
        [-kappa, 0, 1j * g, -1j * g],
        [0, -p.gamma_g, -1j * g, 1j * g],
        [1j * g, -1j * g, 1j * dxc - 0.5 * (kappa + gamma_bar), 0],
        [-1j * g, 1j * g, 0, -1j * dxc - 0.5 * (kappa + gamma_bar)],
    ], dtype=complex)
    rhs = np.array([
        1j * eps * a_dag - 1j * eps * a,
        0.0,
        1j * eps * b_dag,
        -1j * eps * b,
    ], dtype=complex)
    n_a, n_b, x, _ = np.linalg.solve(m, rhs)
    return float(n_a.real), float(n_b.real), complex(x)


class SteadyMethod(str, enum.Enum):
    NULL_SPACE = "null_space"
    TIME_INTEGRATION = "time_integration"


@dataclass(frozen=True)
class LindbladConfig:
    n_max: int = 6
    eps: float = 0.2
    method: SteadyMethod = SteadyMethod.NULL_SPACE
    t_end: float | None = None
    rtol: float = 1e-6
    check_truncation: bool = True

    def __post_init__(self):
        object.__setattr__(self, "method", SteadyMethod(self.method))
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")
        if not self.eps > 0:
            raise ValueError("eps must be > 0")
        if not self.rtol > 0 or (self.t_end is not None and not self.t_end > 0):
            raise ValueError("solver tolerances must be > 0")


def _liouvillian(p: ModelParams, delta: float, nu_r: float, eps: float, n_max: int):
    nc = n_max + 1
    a1 = np.diag(np.sqrt(np.arange(1, nc)), 1)
    sm1 = np.array([[0.0, 1.0], [0.0, 0.0]])  # basis (|g>, |e>)
    a = np.kron(a1, np.eye(2))
    sm = np.kron(np.eye(nc), sm1)
    ad, sp = a.conj().T, sm.conj().T
    ident = np.eye(2 * nc)
    h = ((delta - nu_r) * ad @ a + (-nu_r) * sp @ sm
         + p.g * (ad @ sm + sp @ a) + eps * (ad + a))

    # column-stacking: vec(A X B) = (B^T kron A) vec(X)
    def left(op):
        return np.kron(ident, op)

    def right(op):
        return np.kron(op.T, ident)

    def dissipator(c, rate):
        cdc = c.conj().T @ c
        return rate * (np.kron(c.conj(), c) - 0.5 * left(cdc) - 0.5 * right(cdc))

    liou = -1j * (left(h) - right(h))
    liou += dissipator(a, p.kappa)
    liou += dissipator(sm, p.gamma_g)
    if p.gamma_pd:
        bz = ident - 2.0 * sp @ sm
        liou += 0.25 * p.gamma_pd * (np.kron(bz.conj(), bz) - np.eye(liou.shape[0]))
    return liou, a, sm


def _steady_null_space(liou, dim):
    m = liou.copy()
    m[0, :] = np.eye(dim).reshape(-1, order="F")  # trace row replaces (0, 0) row
    rhs = np.zeros(dim * dim, dtype=complex)
    rhs[0] = 1.0
    vec = np.linalg.solve(m, rhs)
    return vec.reshape(dim, dim, order="F")


def _steady_time(liou, dim, t_end):
    """Integrate from the vacuum; return the states at 0.9 t_end and t_end."""
    rho0 = np.zeros((dim, dim), dtype=complex)
    rho0[0, 0] = 1.0
    sol = solve_ivp(lambda t, y: liou @ y, (0.0, t_end), rho0.reshape(-1, order="F"),
                    method="DOP853", t_eval=[0.9 * t_end, t_end], rtol=1e-12, atol=1e-16)
    if not sol.success:
        raise NonConvergedIntegration(sol.message)
    return [sol.y[:, k].reshape(dim, dim, order="F") for k in range(2)]


def _populations(rho, a, sm):
    n_a = np.trace(rho @ a.conj().T @ a).real
    n_b = np.trace(rho @ sm.conj().T @ sm).real
    return float(n_a), float(n_b)


def _lindblad_once(p, delta, nu_r, cfg: LindbladConfig, n_max: int):
    liou, a, sm = _liouvillian(p, delta, nu_r, cfg.eps, n_max)
    dim = 2 * (n_max + 1)
    if cfg.method is SteadyMethod.NULL_SPACE:
        rho = _steady_null_space(liou, dim)
        return (rho, *_populations(rho, a, sm))
    t_end = cfg.t_end if cfg.t_end is not None else 80.0 / min(p.kappa, p.gamma_g)
    early, rho = _steady_time(liou, dim, t_end)
    n_a, n_b = _populations(rho, a, sm)
    e_a, e_b = _populations(early, a, sm)
    if abs(n_a - e_a) > cfg.rtol * abs(n_a) or abs(n_b - e_b) > cfg.rtol * abs(n_b):
        raise NonConvergedIntegration(f"populations still drifting at t_end={t_end}")
    return rho, n_a, n_b


def lindblad_steady(p: ModelParams, delta: float, nu_r: float,
                    cfg: LindbladConfig = LindbladConfig(), return_rho: bool = False):
    """Populations (<a^+a>, <b^+b>) of the full master-equation steady state.

    The cavity is truncated at ``cfg.n_max`` photons; when
    ``cfg.check_truncation`` is set the result is recomputed at twice the
    cutoff and :class:`TruncationNotConverged` is raised if the populations
    move by more than ``cfg.rtol`` (relative).
    """
    rho, n_a, n_b = _lindblad_once(p, delta, nu_r, cfg, cfg.n_max)
    if cfg.check_truncation:
        _, n_a2, n_b2 = _lindblad_once(p, delta, nu_r, cfg, 2 * cfg.n_max)
        for lo, hi in ((n_a, n_a2), (n_b, n_b2)):
            if abs(hi - lo) > cfg.rtol * max(abs(hi), 1e-300):
                raise TruncationNotConverged(
                    f"populations changed by {abs(hi - lo) / abs(hi):.2e} on doubling n_max")
    if return_rho:
        return n_a, n_b, rho
    return n_a, n_b


@dataclass(frozen=True)
class ConvolutionResult:
    values: np.ndarray
    tail_error: float
    grid_error: float


def _lorentz_tail_mass(edge, gamma_sw):
    """Kernel mass beyond ``edge`` on one side."""
    return 0.5 - math.atan(2.0 * edge / gamma_sw) / math.pi


def convolve_numeric(f, gamma_sw: float, center_grid, window: float = 2000.0,
                     n_points: int = 200_001, tol: float = 1e-7,
                     full_output: bool = False):
    """Numerically convolve ``f`` with a unit-area Lorentzian of FWHM ``gamma_sw``.

    Computes ``(f * L)(x) = int L(s) f(x - s) ds`` for each ``x`` in
    ``center_grid`` by trapezoid quadrature over ``|s| <= window/2``.  The
    kernel mass outside the window is added with ``f`` frozen at the window
    edge.  The tail error estimate is that mass times the change of ``f``
    between the edge and twice the edge; the grid error is the difference to
    the half-resolution rule.  Either exceeding ``tol`` (relative to the
    result) raises.
    """
    x = np.atleast_1d(np.asarray(center_grid, dtype=float))
    if gamma_sw == 0:
        vals = np.asarray(f(x), dtype=float)
        return ConvolutionResult(vals, 0.0, 0.0) if full_output else vals
    if gamma_sw < 0:
        raise ValueError("gamma_sw must be >= 0")
    if n_points < 10_000:
        raise GridTooCoarse("at least 1e4 quadrature points are required")
    if window < 50 * gamma_sw:
        raise WindowTooNarrow(f"window {window} < 50 * gamma_sw")
    if n_points % 2 == 0:
        n_points += 1
    half = 0.5 * window
    s = np.linspace(-half, half, n_points)
    h = s[1] - s[0]
    if h > gamma_sw / 4:
        raise GridTooCoarse(f"step {h:.3g} too coarse for kernel FWHM {gamma_sw}")
    kernel = (0.5 * gamma_sw / math.pi) / (s * s + 0.25 * gamma_sw ** 2)
    mass = _lorentz_tail_mass(half, gamma_sw)
    mass_far = _lorentz_tail_mass(window, gamma_sw)

    out = np.empty_like(x)
    tail_err = np.empty_like(x)
    grid_err = np.empty_like(x)
    for i, xc in enumerate(x):
        fv = np.asarray(f(xc - s), dtype=float) * kernel
        fine = h * (fv.sum() - 0.5 * (fv[0] + fv[-1]))
        coarse_v = fv[::2]
        coarse = 2 * h * (coarse_v.sum() - 0.5 * (coarse_v[0] + coarse_v[-1]))
        edges = np.asarray(f(np.array([xc + half, xc - half, xc + window, xc - window])),
                           dtype=float)
        tail = mass * (edges[0] + edges[1])
        out[i] = fine + tail
        # each side's tail is taken as constant at its edge; a leading 1/s
        # drift enters the two sides with opposite signs and cancels
        tail_err[i] = (mass - mass_far) * abs((edges[0] - edges[2]) + (edges[1] - edges[3]))
        grid_err[i] = abs(fine - coarse)
    scale = np.maximum(np.abs(out), 1e-300)
    worst_tail = float(np.max(tail_err / scale))
    worst_grid = float(np.max(grid_err / scale))
    if worst_tail > tol:
        raise WindowTooNarrow(f"tail error estimate {worst_tail:.2e} exceeds {tol:.1e}")
    if worst_grid > tol:
        raise GridTooCoarse(f"grid error estimate {worst_grid:.2e} exceeds {tol:.1e}")
    if full_output:
        return ConvolutionResult(out, worst_tail, worst_grid)
    return out


def rf_steady_ode(omega_rabi: float, gamma: float, gamma_pd: float, nu_r: float,
                  t_end: float | None = None, tol: float = 1e-11) -> float:
    """Exciton population of a resonantly driven two-level emitter, by
    integrating its Bloch equations to steady state from the ground state.

    ``nu_r`` is the laser detuning omega_R - omega_X.
    """
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    gamma_bar = gamma + gamma_pd
    half = 0.5 * omega_rabi

    def rhs(t, y):
        n, sr, si = y  # population, Re <b^+>, Im <b^+>
        s = complex(sr, si)
        dn = -gamma * n - 1j * half * s + 1j * half * s.conjugate()
        ds = (-1j * nu_r - 0.5 * gamma_bar) * s + 1j * half - 1j * omega_rabi * n
        return [dn.real, ds.real, ds.imag]

    slow = min(gamma, 0.5 * gamma_bar)
    t_end = t_end if t_end is not None else 40.0 / slow
    sol = solve_ivp(rhs, (0.0, t_end), [0.0, 0.0, 0.0], method="DOP853",
                    rtol=tol, atol=tol * 1e-2)
    if not sol.success:
        raise NonConvergedIntegration(sol.message)
    y_end = sol.y[:, -1]
    drift = np.max(np.abs(rhs(t_end, y_end)))
    if drift > 1e-9 * max(gamma, omega_rabi):
        raise NonConvergedIntegration(f"derivative {drift:.2e} at t_end={t_end}")
    return float(y_end[0])
