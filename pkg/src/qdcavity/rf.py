"""Resonance-fluorescence saturation of the bare emitter.

Two-level emitter with radiative rate ``gamma``, pure dephasing ``gamma_pd``
and Lorentzian spectral wandering ``gamma_sw`` (all FWHM in ueV).  Power
series of (power, peak intensity, linewidth) are analysed in two ways:

* intensity vs power with a phenomenological three-level saturation law,
  giving the saturation power and the high-power roll-off;
* intensity vs linewidth, where the Rabi frequency and the instrument factor
  drop out and the deviation from an affine I(Gamma^-2) relation measures the
  spectral wandering.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InconsistentFit, InsufficientData
from .lm import levenberg_marquardt

TRANSFORM_LIMIT_UEV = 0.8


@dataclass(frozen=True)
class RfParams:
    gamma: float
    gamma_pd: float = 0.0
    gamma_sw: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be > 0, got {self.gamma}")
        if self.gamma_pd < 0 or self.gamma_sw < 0 or self.beta < 0:
            raise DomainError("rates and beta must be >= 0")

    @property
    def gamma_bar(self) -> float:
        return self.gamma + self.gamma_pd

    @property
    def Gamma0(self) -> float:  # noqa: N802
        return self.gamma + self.gamma_pd + self.gamma_sw

    @property
    def i_sat(self) -> float:
        return 0.5 * self.beta


@dataclass(frozen=True)
class ThreeLevelParams:
    beta3: float
    xi0: float
    xi1: float = 0.0
    xi2: float = 0.0
    eps3: float = 0.0
    eta1: float = 0.0

    def __post_init__(self):
        if not self.xi0 > 0:
            raise DomainError("xi0 must be > 0")


@dataclass
class RfPowerSeries:
    power: np.ndarray
    intensity: np.ndarray
    linewidth: np.ndarray
    flag: np.ndarray = None
    qd_label: str = ""
    intensity_sigma: np.ndarray = None
    linewidth_sigma: np.ndarray = None

    def __post_init__(self):
        self.power = np.asarray(self.power, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        self.linewidth = np.asarray(self.linewidth, dtype=float)
        n = self.power.size
        if self.flag is None:
            self.flag = np.zeros(n, dtype=bool)
        self.flag = np.asarray(self.flag, dtype=bool)
        if not (self.intensity.size == self.linewidth.size == self.flag.size == n):
            raise DomainError("series columns differ in length")
        if np.any(self.power <= 0) or np.any(self.linewidth <= 0):
            raise DomainError("powers and linewidths must be > 0")
        for name in ("intensity_sigma", "linewidth_sigma"):
            v = getattr(self, name)
            if v is not None:
                v = np.broadcast_to(np.asarray(v, dtype=float), (n,)).copy()
                setattr(self, name, v)

    @property
    def used(self) -> np.ndarray:
        return ~self.flag

    def sigma_i(self) -> np.ndarray:
        if self.intensity_sigma is not None:
            return self.intensity_sigma
        return np.sqrt(np.maximum(self.intensity, 1.0))


def rf_population(omega_rabi, rf: RfParams, nu_r=0.0):
    """Steady-state upper-level population (Lorentzian in the laser detuning)."""
    om2 = np.asarray(omega_rabi, dtype=float) ** 2
    gb = rf.gamma_bar
    drive = om2 * gb / rf.gamma
    return drive / (4.0 * np.asarray(nu_r, dtype=float) ** 2 + gb * gb + 2.0 * drive)


def rf_linewidth(omega_rabi, rf: RfParams):
    """Observed FWHM: power-broadened homogeneous width plus wandering."""
    om2 = np.asarray(omega_rabi, dtype=float) ** 2
    gb = rf.gamma_bar
    return np.sqrt(gb * gb + 2.0 * om2 * gb / rf.gamma) + rf.gamma_sw


def rf_peak_intensity(omega_rabi, rf: RfParams):
    om2 = np.asarray(omega_rabi, dtype=float) ** 2
    width = rf_linewidth(omega_rabi, rf)
    return rf.beta * om2 / (rf.gamma_bar * rf.gamma + 2.0 * om2) * (width - rf.gamma_sw) / width


def _saturation(gamma_obs, i_sat, gamma0, gamma_sw):
    # Homogeneous part of the width; the wandering convolution lowers the
    # peak by (Gamma - gamma_sw) / Gamma.
    hom = gamma_obs - gamma_sw
    return i_sat * (1.0 - ((gamma0 - gamma_sw) / hom) ** 2) * hom / gamma_obs


def _saturation_slope(gamma_obs, i_sat, gamma0, gamma_sw):
    """dI/dGamma of :func:`_saturation`."""
    hom = gamma_obs - gamma_sw
    a2 = (gamma0 - gamma_sw) ** 2
    # I = i_sat (hom - a2/hom) / Gamma
    num = hom - a2 / hom
    dnum = 1.0 + a2 / hom ** 2
    return i_sat * (dnum * gamma_obs - num) / gamma_obs ** 2


def saturation_relation(gamma_obs, i_sat, gamma0, gamma_sw):
    """Peak intensity as a function of the observed linewidth.

    ``I = I_sat (1 - [(Gamma0 - gamma_sw)/(Gamma - gamma_sw)]^2) (Gamma - gamma_sw)/Gamma``,
    which is the power dependence with the Rabi frequency eliminated.  With
    ``gamma_sw = 0`` it is affine in ``Gamma^-2``.
    """
    gamma_obs = np.asarray(gamma_obs, dtype=float)
    if not (gamma0 > gamma_sw >= 0):
        raise DomainError("need Gamma0 > gamma_sw >= 0")
    if np.any(gamma_obs < gamma0):
        raise DomainError("linewidth below the zero-power linewidth")
    return _saturation(gamma_obs, i_sat, gamma0, gamma_sw)


def three_level_intensity(power, tl: ThreeLevelParams):
    p = np.asarray(power, dtype=float)
    if np.any(p < 0):
        raise DomainError("power must be >= 0")
    num = tl.beta3 * (1.0 + tl.eps3 * tl.eta1) * p
    return num / (tl.xi0 + (2.0 + tl.eps3 * tl.xi1) * p + tl.eps3 * tl.xi2 * p * p)


def extrapolate_two_level(power, xi0, beta3):
    if not xi0 > 0:
        raise DomainError("xi0 must be > 0")
    p = np.asarray(power, dtype=float)
    return beta3 * p / (xi0 + 2.0 * p)


@dataclass
class ThreeLevelFit:
    xi0: float
    sigma_xi0: float
    inv_eps_xi2: float
    sigma_inv_eps_xi2: float
    beta3: float
    sigma_beta3: float
    chi2: float
    dof: int
    unbounded: bool = False

    @property
    def peak_power(self) -> float:
        return math.sqrt(self.xi0 * self.inv_eps_xi2)


def _covariance(jac, cost, dof):
    a = jac.T @ jac
    try:
        inv = np.linalg.inv(a)
    except np.linalg.LinAlgError:
        return np.full(a.shape, np.inf)
    return inv * (cost / dof)


def fit_three_level(series: RfPowerSeries, use_flags: bool = True) -> ThreeLevelFit:
    """Fit ``beta P / (xi0 + 2P + k P^2)`` to intensity vs power (k = eps xi2).

    ``inv_eps_xi2 = 1/k`` is in the power unit of the series (nW).  When the
    roll-off term is not resolved ``k`` sits on its lower bound of zero and the
    result is flagged ``unbounded``.
    """
    mask = series.used if use_flags else np.ones(series.power.size, bool)
    p, i = series.power[mask], series.intensity[mask]
    s = series.sigma_i()[mask]
    if p.size < 5:
        raise InsufficientData("three-level fit needs >= 5 unflagged points")
    k_peak = np.argmax(i)
    beta0 = 2.0 * i.max() * 1.2
    xi0_0 = max(p[np.argmin(np.abs(i - 0.5 * i.max()))], 1e-6)
    k0 = 1.0 / max(p[k_peak] ** 2 / xi0_0, 1e-6) if 0 < k_peak < p.size - 1 else 1e-6

    def resid(x):
        xi0, k, beta = x
        return (beta * p / (xi0 + 2.0 * p + k * p * p) - i) / s

    best = None
    for scale in (1.0, 0.3, 3.0):
        x0 = [xi0_0 * scale, k0, beta0]
        res = levenberg_marquardt(resid, x0, [1e-12, 0.0, 0.0], [np.inf, np.inf, np.inf],
                                  max_iter=500)
        if best is None or res.cost < best.cost:
            best = res
    dof = p.size - 3
    cov = _covariance(best.jacobian, best.cost, max(dof, 1))
    xi0, k, beta = best.x
    sig = np.sqrt(np.maximum(np.diag(cov), 0.0))
    unbounded = k <= 1e-9 / p.max() ** 2
    inv = math.inf if unbounded else 1.0 / k
    sig_inv = math.inf if unbounded else sig[1] / (k * k)
    return ThreeLevelFit(xi0, sig[0], inv, sig_inv, beta, sig[2], best.cost, dof, unbounded)


@dataclass
class SpectralWanderingFit:
    gamma_sw: float
    sigma_gamma_sw: float
    i_sat: float
    sigma_i_sat: float
    Gamma0: float  # noqa: N815
    sigma_Gamma0: float  # noqa: N815
    chi2: float
    dof: int
    chi2_null: float
    dof_null: int
    i_sat_null: float
    Gamma0_null: float  # noqa: N815
    covariance: np.ndarray = field(repr=False, default=None)

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof

    @property
    def reduced_chi2_null(self) -> float:
        return self.chi2_null / self.dof_null


def _fit_saturation(gam, inten, sig_i, sig_g, free_sw: bool):
    g_min = gam.min()
    i_top = inten.max()

    def sigma_eff(x):
        if sig_g is None:
            return sig_i
        slope = _saturation_slope(gam, *x)
        return np.sqrt(sig_i ** 2 + (slope * sig_g) ** 2)

    def make_resid(weights):
        if free_sw:
            return lambda x: (_saturation(gam, x[0], x[1], x[2]) - inten) / weights
        return lambda x: (_saturation(gam, x[0], x[1], 0.0) - inten) / weights

    upper_sw = g_min * (1 - 1e-6)
    best = None
    starts = (0.0, 0.2, 0.4, 0.6) if free_sw else (0.0,)
    for frac in starts:
        x0 = [1.1 * i_top, 0.95 * g_min, frac * g_min]
        weights = sig_i
        for _ in range(3):  # re-weight with the linewidth errors propagated
            if free_sw:
                res = levenberg_marquardt(make_resid(weights), x0, [0.0, 1e-9, 0.0],
                                          [np.inf, np.inf, upper_sw], max_iter=500)
                x_full = res.x
            else:
                res = levenberg_marquardt(make_resid(weights), x0[:2], [0.0, 1e-9],
                                          [np.inf, np.inf], max_iter=500)
                x_full = np.array([res.x[0], res.x[1], 0.0])
            new_w = sigma_eff(x_full)
            if np.allclose(new_w, weights, rtol=1e-6):
                break
            weights = new_w
            x0 = list(x_full) if free_sw else list(x_full[:2]) + [0.0]
        if best is None or res.cost < best[0].cost:
            best = (res, x_full)
    return best


def fit_spectral_wandering(series: RfPowerSeries, use_flags: bool = True,
                           check_consistency: bool = True) -> SpectralWanderingFit:
    """Weighted fit of intensity vs linewidth with free and with zero wandering.

    Intensity errors default to Poisson; per-point linewidth errors, when the
    series carries them, are propagated into an effective variance.  Raises
    :class:`InconsistentFit` when the 2-sigma interval of ``gamma_sw`` covers
    the whole admissible range ``[0, Gamma0]`` or the estimate runs into
    ``Gamma0`` (no homogeneous width left).
    """
    mask = series.used if use_flags else np.ones(series.power.size, bool)
    gam = series.linewidth[mask]
    inten = series.intensity[mask]
    if gam.size < 5:
        raise InsufficientData("spectral-wandering fit needs >= 5 unflagged points")
    if gam.max() < 2.0 * gam.min():
        raise InsufficientData("linewidths must span at least a factor of two")
    sig_i = series.sigma_i()[mask]
    sig_g = None if series.linewidth_sigma is None else series.linewidth_sigma[mask]

    res, x = _fit_saturation(gam, inten, sig_i, sig_g, free_sw=True)
    dof = gam.size - 3
    cov = _covariance(res.jacobian, res.cost, dof)
    sig = np.sqrt(np.abs(np.diag(cov)))
    null, x0 = _fit_saturation(gam, inten, sig_i, sig_g, free_sw=False)
    fit = SpectralWanderingFit(
        gamma_sw=float(x[2]), sigma_gamma_sw=float(sig[2]),
        i_sat=float(x[0]), sigma_i_sat=float(sig[0]),
        Gamma0=float(x[1]), sigma_Gamma0=float(sig[1]),
        chi2=res.cost, dof=dof, chi2_null=null.cost, dof_null=gam.size - 2,
        i_sat_null=float(x0[0]), Gamma0_null=float(x0[1]), covariance=cov,
    )
    if check_consistency:
        s = fit.sigma_gamma_sw
        spans = fit.gamma_sw - 2 * s <= 0 and fit.gamma_sw + 2 * s >= fit.Gamma0
        # gamma_sw running into Gamma0 leaves no homogeneous width at all.
        pinned = fit.gamma_sw >= (1.0 - 1e-3) * fit.Gamma0
        if not math.isfinite(s) or spans or pinned:
            raise InconsistentFit(
                f"gamma_sw = {fit.gamma_sw:.3g} +- {s:.3g} does not constrain the "
                f"wandering within [0, Gamma0={fit.Gamma0:.3g}]")
    return fit


def derive_pure_dephasing(gamma0: float, gamma_sw: float, gamma: float = TRANSFORM_LIMIT_UEV):
    """gamma_pd = Gamma0 - gamma_sw - gamma."""
    out = gamma0 - gamma_sw - gamma
    if out < -1e-12 * max(abs(gamma0), 1.0):
        raise DomainError(f"Gamma0={gamma0} is below gamma_sw + gamma = {gamma_sw + gamma}")
    return max(out, 0.0)


def flag_low_intensity(series: RfPowerSeries, threshold: float = 3.0) -> np.ndarray:
    """Flag low-power points that disagree with the three-level law.

    Walking up from the lowest power, each point is compared with a
    three-level fit made without it; it is flagged when its studentised
    residual exceeds ``threshold``.  The walk stops at the first consistent
    point or at the intensity maximum.  Existing flags are kept.
    """
    flags = series.flag.copy()
    sig = series.sigma_i()
    p_peak = series.power[~flags][np.argmax(series.intensity[~flags])]
    for idx in np.argsort(series.power):
        if flags[idx]:
            continue
        if series.power[idx] >= p_peak or (~flags).sum() <= 6:
            break
        trial = flags.copy()
        trial[idx] = True
        work = RfPowerSeries(series.power, series.intensity, series.linewidth, trial,
                             series.qd_label, series.intensity_sigma, series.linewidth_sigma)
        fit = fit_three_level(work)
        tl = ThreeLevelParams(beta3=fit.beta3, xi0=fit.xi0,
                              xi2=0.0 if fit.unbounded else 1.0 / fit.inv_eps_xi2, eps3=1.0)
        z = np.abs(series.intensity - three_level_intensity(series.power, tl)) / sig
        # robust noise scale from the points kept in the fit
        scale = max(1.4826 * float(np.median(z[~trial])), 1.0)
        if z[idx] / scale <= threshold:
            break
        flags[idx] = True
    return flags


def synthetic_series(rf: RfParams, power, omega2_per_power: float,
                     intensity_rel_noise: float = 0.0, linewidth_sigma: float = 0.0,
                     seed=None, label: str = "synthetic") -> RfPowerSeries:
    """Two-level power series with Gaussian noise; Omega^2 = c * P."""
    rng = np.random.default_rng(seed)
    p = np.asarray(power, dtype=float)
    om = np.sqrt(omega2_per_power * p)
    i_true = rf_peak_intensity(om, rf)
    g_true = rf_linewidth(om, rf)
    sig_i = np.maximum(intensity_rel_noise * i_true, 1e-12)
    sig_g = np.full(p.size, linewidth_sigma)
    i_obs = i_true + (rng.normal(0.0, 1.0, p.size) * sig_i if intensity_rel_noise else 0.0)
    g_obs = g_true + (rng.normal(0.0, 1.0, p.size) * sig_g if linewidth_sigma else 0.0)
    return RfPowerSeries(p, i_obs, g_obs, None, label,
                         intensity_sigma=sig_i if intensity_rel_noise else None,
                         linewidth_sigma=sig_g if linewidth_sigma else None)
