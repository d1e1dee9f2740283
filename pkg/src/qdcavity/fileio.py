"""Text file formats: spectra and RF series as CSV, configs and reports as JSON.

All writers go through :func:`atomic_write`, so a failure never leaves a
partially written file behind.
"""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .broadening import Mechanism
from .errors import DomainError, EmptyDataset, ParseError
from .fitting import FitConfig, FitParams, FitResult, SpectrumDataset, Sweep, pole_decomposition_table
from .model import ModelParams

SPECTRUM_HEADER = ("detuning_ueV", "omega_R_ueV", "counts")
RF_HEADER = ("power_nW", "intensity_counts", "linewidth_ueV")
RF_OPTIONAL = ("flag", "intensity_sigma", "linewidth_sigma")
CURVE_HEADER = ("omega_R_ueV", "model_counts", "background_counts",
                "L_plus", "L_minus", "D_plus", "D_minus")


def fmt(x: float) -> str:
    """15 significant digits, enough for a lossless round trip of our data."""
    return format(float(x), ".15g")


@contextmanager
def atomic_write(path, mode="w"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, encoding="utf-8", newline="\n") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _data_rows(path):
    """Yield (line_number, fields) for non-comment, non-blank lines."""
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, next(csv.reader([stripped]))


def _parse_float(text, lineno, path, column):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"column {column!r}: not a number: {text!r}", lineno, path) from None
    if not math.isfinite(v):
        raise ParseError(f"column {column!r}: non-finite value {text!r}", lineno, path)
    return v


def load_dataset(path) -> SpectrumDataset:
    """Read a spectrum CSV; rows are grouped into one sweep per detuning.

    Sweeps keep the order in which detunings first appear; points inside a
    sweep are sorted by probe frequency (stable).
    """
    rows = _data_rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise EmptyDataset(f"{path}: no header and no data") from None
    header = tuple(h.strip() for h in header)
    if header != SPECTRUM_HEADER:
        raise ParseError(f"expected header {','.join(SPECTRUM_HEADER)}", lineno, path)
    groups: dict[float, list] = {}
    for lineno, fields in rows:
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", lineno, path)
        d, nu, c = (_parse_float(f, lineno, path, h) for f, h in zip(fields, header))
        if c < 0:
            raise ParseError("counts must be >= 0", lineno, path)
        groups.setdefault(d, []).append((nu, c, lineno))
    if not groups:
        raise EmptyDataset(f"{path}: header but no data rows")
    sweeps = []
    for d, pts in groups.items():
        pts.sort(key=lambda t: t[0])
        nu = np.array([t[0] for t in pts])
        dup = np.flatnonzero(np.diff(nu) == 0)
        if dup.size:
            raise ParseError(f"duplicate probe frequency {nu[dup[0]]} at detuning {d}",
                             pts[dup[0] + 1][2], path)
        sweeps.append(Sweep(d, nu, np.array([t[1] for t in pts])))
    return SpectrumDataset(sweeps, {"source": str(path)})


def save_dataset(ds: SpectrumDataset, path) -> None:
    with atomic_write(path) as fh:
        fh.write(",".join(SPECTRUM_HEADER) + "\n")
        for sw in ds.sweeps:
            for nu, c in zip(sw.nu, sw.counts):
                fh.write(f"{fmt(sw.delta)},{fmt(nu)},{fmt(c)}\n")


def load_rf_series(path, qd_label: str | None = None):
    """Read an RF power series CSV.

    Required columns are ``power_nW,intensity_counts,linewidth_ueV``; the
    optional ``flag`` (0/1), ``intensity_sigma`` and ``linewidth_sigma`` may
    follow in any order.
    """
    from .rf import RfPowerSeries

    rows = _data_rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise EmptyDataset(f"{path}: no header and no data") from None
    header = [h.strip() for h in header]
    if tuple(header[:3]) != RF_HEADER:
        raise ParseError(f"expected header starting {','.join(RF_HEADER)}", lineno, path)
    extra = header[3:]
    for name in extra:
        if name not in RF_OPTIONAL:
            raise ParseError(f"unknown column {name!r}", lineno, path)
    cols = {h: [] for h in header}
    for lineno, fields in rows:
        if len(fields) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(fields)}", lineno, path)
        for h, f in zip(header, fields):
            cols[h].append(_parse_float(f, lineno, path, h))
    if not cols[header[0]]:
        raise EmptyDataset(f"{path}: header but no data rows")
    label = qd_label if qd_label is not None else Path(path).stem
    try:
        return RfPowerSeries(
            cols["power_nW"], cols["intensity_counts"], cols["linewidth_ueV"],
            np.array(cols["flag"]) != 0 if "flag" in cols else None, label,
            intensity_sigma=cols.get("intensity_sigma"),
            linewidth_sigma=cols.get("linewidth_sigma"),
        )
    except DomainError as exc:
        raise ParseError(str(exc), path=path) from exc


def save_rf_series(series, path) -> None:
    header = list(RF_HEADER) + ["flag"]
    if series.intensity_sigma is not None:
        header.append("intensity_sigma")
    if series.linewidth_sigma is not None:
        header.append("linewidth_sigma")
    with atomic_write(path) as fh:
        fh.write(",".join(header) + "\n")
        for i in range(series.power.size):
            row = [fmt(series.power[i]), fmt(series.intensity[i]), fmt(series.linewidth[i]),
                   str(int(series.flag[i]))]
            if series.intensity_sigma is not None:
                row.append(fmt(series.intensity_sigma[i]))
            if series.linewidth_sigma is not None:
                row.append(fmt(series.linewidth_sigma[i]))
            fh.write(",".join(row) + "\n")


def format_uncertainty(value: float, sigma: float) -> str:
    """Parenthetic notation with one significant digit of uncertainty.

    >>> format_uncertainty(11.051, 0.021)
    '11.05(2)'
    """
    if not math.isfinite(value):
        return str(value)
    if sigma is None or sigma == 0 or not math.isfinite(sigma):
        return fmt(value) if sigma == 0 or sigma is None else f"{fmt(value)}(inf)"
    sigma = abs(sigma)
    decimals = -math.floor(math.log10(sigma))
    digit = round(sigma * 10.0 ** decimals)
    if digit >= 10:  # e.g. 0.096 rounds up to 0.1
        decimals -= 1
        digit = round(sigma * 10.0 ** decimals)
    if decimals > 0:
        return f"{value:.{decimals}f}({digit})"
    step = 10 ** (-decimals)
    return f"{round(value / step) * step:.0f}({digit * step})"


# -- configs -----------------------------------------------------------------

def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, path) from exc


def write_json(obj, path) -> None:
    with atomic_write(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=False, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def fit_params_from_config(cfg: dict) -> FitParams:
    """Build :class:`FitParams` from the ``model``/``params`` part of a config.

    ``params`` holds g, kappa, gamma_g, scale and (for M2) gamma_big; the
    nuisance values omega_x, a_c (number or list) and b0 sit alongside.
    """
    try:
        model = cfg.get("model", "M1")
        mech = Mechanism.parse(cfg.get("mechanism", "sw"))
        p = dict(cfg["params"])
        gamma_big = float(p.pop("gamma_big", 0.0))
        rates = dict(g=p.pop("g"), kappa=p.pop("kappa"), gamma_g=p.pop("gamma_g"),
                     scale=p.pop("scale", 1.0))
        if p:
            raise DomainError(f"unknown rate names {sorted(p)}")
        if model == "M2":
            rates["gamma_pd" if mech is Mechanism.PURE_DEPHASING else "gamma_sw"] = gamma_big
        a_c = cfg.get("a_c", 0.0)
        a_c = tuple(a_c) if isinstance(a_c, list) else float(a_c)
        return FitParams(ModelParams(**{k: float(v) for k, v in rates.items()}),
                         omega_x=float(cfg.get("omega_x", 0.0)), a_c=a_c,
                         b0=float(cfg.get("b0", 0.0)), model=model, mechanism=mech)
    except KeyError as exc:
        raise DomainError(f"config is missing {exc.args[0]!r}") from None


def design_from_config(cfg: dict):
    """``design`` is ``{"detunings": [...], "probe": {"start", "stop", "num"}}``
    or ``{"sweeps": [{"detuning": d, "omega_R": [...]}, ...]}``."""
    try:
        design = cfg["design"]
    except KeyError:
        raise DomainError("config is missing 'design'") from None
    if "sweeps" in design:
        return [(float(s["detuning"]), np.asarray(s["omega_R"], dtype=float))
                for s in design["sweeps"]]
    probe = design["probe"]
    grid = np.linspace(float(probe["start"]), float(probe["stop"]), int(probe["num"]))
    return [(float(d), grid) for d in design["detunings"]]


def fit_config_from_config(cfg: dict, n_sweeps: int | None = None) -> FitConfig:
    init = fit_params_from_config(cfg)
    opts = dict(cfg.get("fit", {}))
    if opts.pop("per_sweep_background", False) and not isinstance(init.a_c, tuple):
        if n_sweeps is None:
            raise DomainError("per-sweep background needs the number of sweeps")
        init = FitParams(init.params, init.omega_x, (init.a_c,) * n_sweeps, init.b0,
                         init.model, init.mechanism)
    bounds = {k: (-math.inf if v[0] is None else float(v[0]),
                  math.inf if v[1] is None else float(v[1]))
              for k, v in opts.pop("bounds", {}).items()}
    known = {"fixed", "weight_mode", "multistart", "spread", "seed", "max_iter",
             "ftol", "xtol", "rel_step"}
    unknown = set(opts) - known
    if unknown:
        raise DomainError(f"unknown fit options {sorted(unknown)}")
    return FitConfig(init=init, bounds=bounds, fixed=frozenset(opts.pop("fixed", ())), **opts)


# -- reports -----------------------------------------------------------------

def value_entry(value, sigma):
    return {"value": float(value), "sigma": float(sigma),
            "text": format_uncertainty(float(value), float(sigma))}


def fit_report(result: FitResult) -> dict:
    """JSON-ready summary of a global fit."""
    fp = result.params
    values = fp.values()
    c, c_sig = result.cooperativity
    names = result.free_names
    return {
        "model": fp.model,
        "mechanism": fp.mechanism.value if fp.model == "M2" else None,
        "parameters": {n: dict(value_entry(v, result.sigma.get(n, 0.0)), free=n in names)
                       for n, v in values.items()},
        "covariance": {"names": names, "matrix": result.covariance.tolist()},
        "chi2": result.chi2,
        "dof": result.dof,
        "reduced_chi2": result.reduced_chi2,
        "cooperativity": dict(
            value_entry(c, c_sig),
            note="2 g^2 / (kappa gamma_g) with the bare gamma_g; sigma propagated "
                 "from the fit covariance; values quoted without correlations can "
                 "only be compared under a zero-correlation assumption"),
        "iterations": result.n_iter,
        "converged": result.message,
        "multistart_costs": list(result.starts),
        "constituents": pole_decomposition_table(result.decompositions, result.deltas),
    }


def emit_report(result: FitResult, path) -> dict:
    report = fit_report(result)
    write_json(report, path)
    return report
