"""Global chi^2 fits of multi-detuning spectra.

One rate set (g, kappa, gamma_g[, broadening], scale) is shared by every
detuning sweep.  Nuisance parameters are a single exciton-frequency offset
``omega_x`` and a bare-cavity background: a unit-area Lorentzian of FWHM kappa
at the bare cavity frequency with amplitude ``a_c`` plus a flat offset ``b0``.

Data frequencies (``Sweep.nu``) are probe frequencies in the laboratory frame;
the model evaluates at ``nu - omega_x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import qmc

from . import kernels
from .broadening import BroadeningSpec, Mechanism, decompose_m2
from .errors import DomainError, EmptyDataset, NotConverged, SingularJacobian
from .lm import levenberg_marquardt
from .model import ModelParams, PoleDecomposition, cooperativity, decompose_m1, rabi_poles

MODELS = ("M1", "M2")
WEIGHT_MODES = ("poisson", "poisson_model", "uniform")


@dataclass
class Sweep:
    delta: float
    nu: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=float).reshape(-1)
        self.counts = np.asarray(self.counts, dtype=float).reshape(-1)
        if self.nu.shape != self.counts.shape:
            raise DomainError("probe grid and counts differ in length")
        if self.nu.size > 1 and np.any(np.diff(self.nu) <= 0):
            raise DomainError("probe grid must be strictly increasing")
        if np.any(self.counts < 0):
            raise DomainError("counts must be non-negative")


@dataclass
class SpectrumDataset:
    sweeps: list
    meta: dict = field(default_factory=dict)

    @property
    def n_points(self) -> int:
        return sum(s.nu.size for s in self.sweeps)

    @property
    def deltas(self) -> list:
        return [s.delta for s in self.sweeps]


@dataclass(frozen=True)
class FitParams:
    """Model rates plus the nuisance parameters of the measured spectra.

    For M2 the broadening FWHM lives in ``params.gamma_sw`` or
    ``params.gamma_pd`` according to ``mechanism``.  ``a_c`` is a float, or a
    tuple with one amplitude per sweep.
    """

    params: ModelParams
    omega_x: float = 0.0
    a_c: float | tuple = 0.0
    b0: float = 0.0
    model: str = "M1"
    mechanism: Mechanism = Mechanism.SPECTRAL_WANDERING

    def __post_init__(self):
        if self.model not in MODELS:
            raise DomainError(f"model must be one of {MODELS}, got {self.model!r}")
        object.__setattr__(self, "mechanism", Mechanism.parse(self.mechanism))
        if not isinstance(self.a_c, (int, float)):
            object.__setattr__(self, "a_c", tuple(float(v) for v in self.a_c))

    @property
    def gamma_big(self) -> float:
        if self.model == "M1":
            return 0.0
        if self.mechanism is Mechanism.PURE_DEPHASING:
            return self.params.gamma_pd
        return self.params.gamma_sw

    @property
    def broadening(self) -> BroadeningSpec:
        return BroadeningSpec(self.mechanism, self.gamma_big)

    def background_amplitude(self, index: int) -> float:
        if isinstance(self.a_c, tuple):
            return self.a_c[index]
        return self.a_c

    def values(self) -> dict:
        p = self.params
        out = {"g": p.g, "kappa": p.kappa, "gamma_g": p.gamma_g}
        if self.model == "M2":
            out["gamma_big"] = self.gamma_big
        out["scale"] = p.scale
        out["omega_x"] = self.omega_x
        if isinstance(self.a_c, tuple):
            for i, v in enumerate(self.a_c):
                out[f"a_c_{i}"] = v
        else:
            out["a_c"] = self.a_c
        out["b0"] = self.b0
        return out

    def with_values(self, values: dict) -> "FitParams":
        cur = self.values()
        cur.update(values)
        rates = dict(g=cur["g"], kappa=cur["kappa"], gamma_g=cur["gamma_g"],
                     scale=cur["scale"], gamma_pd=0.0, gamma_sw=0.0)
        if self.model == "M2":
            key = "gamma_pd" if self.mechanism is Mechanism.PURE_DEPHASING else "gamma_sw"
            rates[key] = cur["gamma_big"]
        if isinstance(self.a_c, tuple):
            a_c = tuple(cur[f"a_c_{i}"] for i in range(len(self.a_c)))
        else:
            a_c = cur["a_c"]
        return replace(self, params=ModelParams(**rates), omega_x=cur["omega_x"],
                       a_c=a_c, b0=cur["b0"])


def background_counts(fp: FitParams, sweep: Sweep, index: int = 0) -> np.ndarray:
    x = sweep.nu - fp.omega_x - sweep.delta
    half = 0.5 * fp.params.kappa
    lor = (half / math.pi) / (x * x + half * half)
    return fp.background_amplitude(index) * lor + fp.b0


def signal_counts(fp: FitParams, sweep: Sweep) -> np.ndarray:
    p = fp.params
    nu = sweep.nu - fp.omega_x
    gb = fp.gamma_big
    if fp.model == "M1" or gb == 0:
        rabi_poles(p, sweep.delta)
        pop = kernels.m1_population(nu, sweep.delta, p.g, p.kappa, p.gamma_g)
    else:
        rabi_poles(p.replace(gamma_g=p.gamma_g + gb), sweep.delta)
        if fp.mechanism is Mechanism.PURE_DEPHASING:
            pop = kernels.m2_pd_population(nu, sweep.delta, p.g, p.kappa, p.gamma_g, gb)
        else:
            pop = kernels.m2_sw_population(nu, sweep.delta, p.g, p.kappa, p.gamma_g, gb)
    return p.scale * pop


def model_counts(fp: FitParams, sweep: Sweep, index: int = 0) -> np.ndarray:
    """Expected counts: model signal plus bare-cavity background."""
    return signal_counts(fp, sweep) + background_counts(fp, sweep, index)


def model_curves(fp: FitParams, sweep: Sweep, index: int = 0) -> dict:
    """Model counts with the background and the four pole constituents, in counts.

    For spectral wandering the constituents use the constant-amplitude
    correction of :func:`decompose_m2` and only approximately sum to the signal.
    """
    nu = sweep.nu - fp.omega_x
    if fp.model == "M2":
        dec = decompose_m2(fp.params, fp.broadening, sweep.delta)
    else:
        dec = decompose_m1(fp.params, sweep.delta)
    out = {"model_counts": model_counts(fp, sweep, index),
           "background_counts": background_counts(fp, sweep, index)}
    for k, v in dec.constituents(nu).items():
        out[k] = fp.params.scale * v
    return out


def _sigma(counts, weight_mode, model=None):
    if weight_mode == "poisson":
        return np.sqrt(np.maximum(counts, 1.0))
    if weight_mode == "poisson_model":
        # variance from the model instead of the data (Pearson chi^2)
        return np.sqrt(np.maximum(counts if model is None else model, 1.0))
    if weight_mode == "uniform":
        return np.ones_like(counts)
    raise DomainError(f"weight_mode must be one of {WEIGHT_MODES}")


def weighted_residuals(fp: FitParams, dataset: SpectrumDataset, weight_mode="poisson"):
    parts = []
    for i, sw in enumerate(dataset.sweeps):
        m = model_counts(fp, sw, i)
        parts.append((sw.counts - m) / _sigma(sw.counts, weight_mode, m))
    return np.concatenate(parts)


def chi2(fp: FitParams, dataset: SpectrumDataset, weight_mode="poisson", n_free=None):
    """Return (chi^2, dof).  ``n_free`` defaults to every model parameter.

    Weights: ``poisson`` uses sigma^2 = max(counts, 1), ``poisson_model``
    sigma^2 = max(model, 1), ``uniform`` sigma = 1.
    """
    if not dataset.sweeps or dataset.n_points == 0:
        raise EmptyDataset("dataset has no points")
    r = weighted_residuals(fp, dataset, weight_mode)
    if n_free is None:
        n_free = len(fp.values())
    return float(r @ r), dataset.n_points - n_free


DEFAULT_BOUNDS = {
    "g": (0.0, np.inf),
    "kappa": (1e-9, np.inf),
    "gamma_g": (1e-9, np.inf),
    "gamma_big": (0.0, np.inf),
    "scale": (0.0, np.inf),
    "omega_x": (-np.inf, np.inf),
    "a_c": (0.0, np.inf),
    "b0": (-np.inf, np.inf),
}


@dataclass
class FitConfig:
    init: FitParams
    bounds: dict = field(default_factory=dict)
    fixed: frozenset = frozenset()
    weight_mode: str = "poisson"
    multistart: int = 1
    spread: float = 0.2
    seed: int = 0
    max_iter: int = 200
    ftol: float = 1e-13
    xtol: float = 1e-13
    rel_step: float = 1e-6

    def __post_init__(self):
        self.fixed = frozenset(self.fixed)
        if self.weight_mode not in WEIGHT_MODES:
            raise DomainError(f"weight_mode must be one of {WEIGHT_MODES}")
        if self.multistart < 1:
            raise DomainError("multistart must be >= 1")
        names = set(self.init.values())
        unknown = (set(self.bounds) | self.fixed) - names - {"a_c"}
        if unknown:
            raise DomainError(f"unknown parameter names: {sorted(unknown)}")
        for name, value in self.init.values().items():
            lo, hi = self.bound(name)
            if not lo <= value <= hi:
                raise DomainError(f"initial {name}={value} outside bounds [{lo}, {hi}]")

    @property
    def model(self) -> str:
        return self.init.model

    def bound(self, name: str):
        base = "a_c" if name.startswith("a_c_") else name
        return self.bounds.get(name, self.bounds.get(base, DEFAULT_BOUNDS[base]))

    def is_fixed(self, name: str) -> bool:
        return name in self.fixed or (name.startswith("a_c_") and "a_c" in self.fixed)

    def free_names(self) -> list:
        return [n for n in self.init.values() if not self.is_fixed(n)]


@dataclass
class FitResult:
    params: FitParams
    free_names: list
    sigma: dict
    covariance: np.ndarray
    chi2: float
    dof: int
    cooperativity: tuple
    decompositions: list
    n_iter: int
    history: list
    message: str = ""
    starts: list = field(default_factory=list)
    deltas: list = field(default_factory=list)

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof

    def cov_of(self, a: str, b: str) -> float:
        if a not in self.free_names or b not in self.free_names:
            return 0.0
        return float(self.covariance[self.free_names.index(a), self.free_names.index(b)])


def _start_points(cfg: FitConfig, names, lower, upper):
    x0 = np.array([cfg.init.values()[n] for n in names])
    starts = [x0]
    if cfg.multistart > 1:
        sampler = qmc.LatinHypercube(d=len(names), seed=cfg.seed)
        u = sampler.random(cfg.multistart - 1)
        width = cfg.spread * np.maximum(np.abs(x0), 1.0)
        for row in u:
            starts.append(np.clip(x0 + (2 * row - 1) * width, lower, upper))
    return starts


def cooperativity_sigma(g, kappa, gamma, cov) -> float:
    """First-order sigma of 2 g^2/(kappa gamma) for a 3x3 covariance of (g, kappa, gamma)."""
    c = cooperativity(g, kappa, gamma)
    grad = np.array([2 * c / g if g else 0.0, -c / kappa, -c / gamma])
    var = float(grad @ np.asarray(cov, dtype=float) @ grad)
    return math.sqrt(max(var, 0.0))


def cooperativity_with_uncertainty(result: FitResult):
    """C and its 1-sigma from the fitted (g, kappa, gamma_g) covariance.

    Uses the bare emitter rate gamma_g, also for M2 fits.
    """
    p = result.params.params
    names = ("g", "kappa", "gamma_g")
    cov = np.array([[result.cov_of(a, b) for b in names] for a in names])
    return cooperativity(p.g, p.kappa, p.gamma_g), cooperativity_sigma(p.g, p.kappa, p.gamma_g, cov)


def decompositions(fp: FitParams, deltas) -> list:
    out = []
    for d in deltas:
        if fp.model == "M2":
            out.append(decompose_m2(fp.params, fp.broadening, d))
        else:
            out.append(decompose_m1(fp.params, d))
    return out


def fit_global(dataset: SpectrumDataset, config: FitConfig) -> FitResult:
    """Fit one parameter set to all sweeps; best of ``config.multistart`` starts."""
    if not dataset.sweeps or dataset.n_points == 0:
        raise EmptyDataset("dataset has no points")
    init = config.init
    if isinstance(init.a_c, tuple) and len(init.a_c) != len(dataset.sweeps):
        raise DomainError("per-sweep background needs one amplitude per sweep")
    names = config.free_names()
    if not names:
        raise DomainError("no free parameters")
    dof = dataset.n_points - len(names)
    if dof <= 0:
        raise DomainError(f"not enough points for {len(names)} free parameters")
    lower = np.array([config.bound(n)[0] for n in names])
    upper = np.array([config.bound(n)[1] for n in names])
    reweight = config.weight_mode == "poisson_model"
    sigmas = [_sigma(sw.counts, "poisson" if reweight else config.weight_mode)
              for sw in dataset.sweeps]

    def residuals(x):
        fp = init.with_values(dict(zip(names, x)))
        return np.concatenate([
            (model_counts(fp, sw, i) - sw.counts) / s
            for i, (sw, s) in enumerate(zip(dataset.sweeps, sigmas))
        ])

    def solve(x0):
        return levenberg_marquardt(residuals, x0, lower, upper, rel_step=config.rel_step,
                                   max_iter=config.max_iter, ftol=config.ftol,
                                   xtol=config.xtol)

    best = None
    runs = []
    for x0 in _start_points(config, names, lower, upper):
        res = solve(x0)
        runs.append(res.cost)
        if best is None or res.cost < best.cost:
            best = res
    if reweight:
        # iterate: weights from the current model, refit, until the
        # parameters settle
        for _ in range(20):
            fp = init.with_values(dict(zip(names, best.x)))
            sigmas[:] = [_sigma(sw.counts, "poisson_model", model_counts(fp, sw, i))
                         for i, sw in enumerate(dataset.sweeps)]
            prev = best.x
            best = solve(prev)
            if np.all(np.abs(best.x - prev) <= 1e-9 * np.maximum(np.abs(prev), 1.0)):
                break
        else:
            raise NotConverged("model-variance weights did not settle")

    jac = best.jacobian
    norms = np.linalg.norm(jac, axis=0)
    if np.any(norms == 0):
        dead = [n for n, v in zip(names, norms) if v == 0]
        raise SingularJacobian(f"model insensitive to {dead}")
    sv = np.linalg.svd(jac / norms, compute_uv=False)
    if sv[-1] < 1e-10 * sv[0]:
        raise SingularJacobian(f"parameters are degenerate (condition {sv[0] / sv[-1]:.2e})")
    scaled = np.linalg.inv((jac / norms).T @ (jac / norms))
    cov = scaled / np.outer(norms, norms) * (best.cost / dof)
    cov = 0.5 * (cov + cov.T)

    fp = init.with_values(dict(zip(names, best.x)))
    sig = {n: math.sqrt(max(cov[i, i], 0.0)) for i, n in enumerate(names)}
    for n in fp.values():
        sig.setdefault(n, 0.0)
    result = FitResult(
        params=fp, free_names=list(names), sigma=sig, covariance=cov,
        chi2=best.cost, dof=dof, cooperativity=(math.nan, math.nan),
        decompositions=decompositions(fp, dataset.deltas), n_iter=best.n_iter,
        history=best.history, message=best.message, starts=runs,
        deltas=list(dataset.deltas),
    )
    result.cooperativity = cooperativity_with_uncertainty(result)
    return result


def generate_synthetic(fp: FitParams, design, noise: str = "none", seed=None,
                       meta=None) -> SpectrumDataset:
    """Synthetic dataset on ``design = [(delta, grid), ...]``.

    ``noise`` is ``"none"`` (exact expected counts) or ``"poisson"``.
    """
    rng = np.random.default_rng(seed)
    sweeps = []
    for i, (delta, grid) in enumerate(design):
        template = Sweep(float(delta), np.asarray(grid, dtype=float), np.zeros(len(grid)))
        mu = model_counts(fp, template, i)
        if noise == "none":
            c = mu
        elif noise == "poisson":
            c = rng.poisson(mu).astype(float)
        else:
            raise DomainError(f"noise must be 'none' or 'poisson', got {noise!r}")
        sweeps.append(Sweep(float(delta), template.nu, c))
    return SpectrumDataset(sweeps, dict(meta or {}, noise=noise, seed=seed))


def subtract_background(dataset: SpectrumDataset, background: FitParams,
                        clamp: bool = False) -> SpectrumDataset:
    """Remove the fitted bare-cavity Lorentzian and offset from every sweep."""
    sweeps = []
    for i, sw in enumerate(dataset.sweeps):
        c = sw.counts - background_counts(background, sw, i)
        if clamp:
            c = np.maximum(c, 0.0)
        out = Sweep.__new__(Sweep)
        out.delta, out.nu, out.counts = sw.delta, sw.nu.copy(), c
        sweeps.append(out)
    return SpectrumDataset(sweeps, dict(dataset.meta, background_subtracted=True))


def count_local_maxima(y) -> int:
    y = np.asarray(y, dtype=float)
    inner = (y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])
    return int(np.count_nonzero(inner))


def pole_decomposition_table(decs: list[PoleDecomposition], deltas) -> list:
    rows = []
    for d, dec in zip(deltas, decs):
        rows.append({
            "detuning_ueV": d,
            "omega_plus": [dec.omega_plus.re, dec.omega_plus.im],
            "omega_minus": [dec.omega_minus.re, dec.omega_minus.im],
            "A_L_plus": dec.a_l_plus, "A_L_minus": dec.a_l_minus, "A_D": dec.a_d,
            "V_plus": dec.v_plus, "V_minus": dec.v_minus,
            "W": [dec.w.real, dec.w.imag],
            "U_plus": [dec.u_plus.real, dec.u_plus.imag],
            "U_minus": [dec.u_minus.real, dec.u_minus.imag],
        })
    return rows
