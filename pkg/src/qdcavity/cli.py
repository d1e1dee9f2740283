"""Command-line entry points: simulate, gen, fit, check and rf-fit.

Failures print a one-line JSON object ``{"error": ..., "type": ...}`` to
stderr and exit with status 1 (2 for usage errors, as usual for click).
"""
from __future__ import annotations

import functools
import json
import math
import sys

import click
import numpy as np

from . import fileio, kernels
from .errors import InconsistentFit, QDCavityError
from .fitting import Sweep, fit_global, generate_synthetic, model_curves, weighted_residuals
from .rf import (
    TRANSFORM_LIMIT_UEV,
    derive_pure_dephasing,
    fit_spectral_wandering,
    fit_three_level,
    flag_low_intensity,
)


def _fail(exc: Exception, code: int = 1):
    payload = {"error": str(exc), "type": type(exc).__name__}
    line = getattr(exc, "line", None)
    if line is not None:
        payload["line"] = line
    click.echo(json.dumps(payload), err=True)
    sys.exit(code)


def reports_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (QDCavityError, OSError, KeyError, TypeError, ValueError) as exc:
            _fail(exc)
    return wrapper


@click.group()
@click.version_option(package_name="qdcavity")
def main():
    """Lineshape modelling and fitting for an emitter coupled to a cavity mode."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="JSON with model parameters and the probe design.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Output CSV.")
@reports_errors
def simulate(config_path, out):
    """Write model curves and their pole constituents for every detuning."""
    cfg = fileio.read_json(config_path)
    fp = fileio.fit_params_from_config(cfg)
    design = fileio.design_from_config(cfg)
    if isinstance(fp.a_c, tuple) and len(fp.a_c) != len(design):
        raise ValueError("a_c list length differs from the number of detunings")
    with fileio.atomic_write(out) as fh:
        fh.write(",".join(fileio.CURVE_HEADER) + "\n")
        for i, (delta, grid) in enumerate(design):
            sweep = Sweep(delta, grid, np.zeros(len(grid)))
            curves = model_curves(fp, sweep, i)
            fh.write(f"# detuning_ueV={fileio.fmt(delta)}\n")
            cols = [sweep.nu] + [curves[k] for k in fileio.CURVE_HEADER[1:]]
            for row in zip(*cols):
                fh.write(",".join(fileio.fmt(v) for v in row) + "\n")
    click.echo(f"wrote {len(design)} sweeps to {out}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="JSON with model parameters and the probe design.")
@click.option("--seed", type=int, default=None, help="Seed for the Poisson noise.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Output CSV.")
@reports_errors
def gen(config_path, seed, out):
    """Generate a synthetic dataset (noise from the config, default poisson)."""
    cfg = fileio.read_json(config_path)
    fp = fileio.fit_params_from_config(cfg)
    ds = generate_synthetic(fp, fileio.design_from_config(cfg),
                            noise=cfg.get("noise", "poisson"), seed=seed)
    fileio.save_dataset(ds, out)
    click.echo(f"wrote {ds.n_points} points in {len(ds.sweeps)} sweeps to {out}")


@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Spectrum CSV (detuning_ueV,omega_R_ueV,counts).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="JSON with the model, initial values and fit options.")
@click.option("--report", type=click.Path(dir_okay=False), required=True,
              help="Report JSON; residuals go next to it as <report>.residuals.csv.")
@reports_errors
def fit(data, config_path, report):
    """Global fit of one parameter set to every detuning sweep."""
    ds = fileio.load_dataset(data)
    cfg = fileio.read_json(config_path)
    fc = fileio.fit_config_from_config(cfg, n_sweeps=len(ds.sweeps))
    result = fit_global(ds, fc)
    resid = weighted_residuals(result.params, ds, fc.weight_mode)
    res_path = f"{report}.residuals.csv" if not report.endswith(".json") \
        else report[:-5] + ".residuals.csv"
    with fileio.atomic_write(res_path) as fh:
        fh.write("detuning_ueV,omega_R_ueV,counts,model_counts,weighted_residual\n")
        k = 0
        for i, sw in enumerate(ds.sweeps):
            model = model_curves(result.params, sw, i)["model_counts"]
            for nu, c, m in zip(sw.nu, sw.counts, model):
                fh.write(",".join(fileio.fmt(v) for v in (sw.delta, nu, c, m, resid[k])) + "\n")
                k += 1
    rep = fileio.emit_report(result, report)
    click.echo(f"chi2/dof = {result.reduced_chi2:.4g}  C = {rep['cooperativity']['text']}")
    for name, entry in rep["parameters"].items():
        click.echo(f"  {name:>10s} = {entry['text']}")


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tol", type=float, default=1.0, show_default=True,
              help="Multiplier applied to every default tolerance.")
@click.option("--n-sets", type=int, default=20, show_default=True,
              help="Random parameter sets per comparison.")
@click.option("--json", "as_json", is_flag=True, help="Print the table as JSON.")
@reports_errors
def check(seed, tol, n_sets, as_json):
    """Compare the closed forms with the brute-force oracles."""
    from .checks import run_suite

    if not tol > 0:
        raise ValueError("--tol must be > 0")
    results = run_suite(seed=seed, n_sets=n_sets, tol_factor=tol)
    if as_json:
        click.echo(json.dumps([dict(name=r.name, cases=r.n_cases, max_error=r.max_error,
                                    tolerance=r.tolerance, passed=r.passed)
                               for r in results], indent=2))
    else:
        click.echo(f"backend: {kernels.BACKEND}")
        click.echo(f"{'check':<30s} {'cases':>5s} {'max rel err':>12s} {'tolerance':>10s}  result")
        for r in results:
            click.echo(f"{r.name:<30s} {r.n_cases:>5d} {r.max_error:>12.3e} "
                       f"{r.tolerance:>10.1e}  {'PASS' if r.passed else 'FAIL'}")
    if not all(r.passed for r in results):
        sys.exit(1)


def rf_report(series, gamma=TRANSFORM_LIMIT_UEV, auto_flag=False) -> dict:
    """Bare-emitter summary: three-level saturation and spectral wandering."""
    if auto_flag:
        series.flag = flag_low_intensity(series)
    out = {"qd": series.qd_label, "n_points": int(series.power.size),
           "n_flagged": int(series.flag.sum())}
    tl = fit_three_level(series)
    out["xi0_nW"] = fileio.value_entry(tl.xi0, tl.sigma_xi0)
    if tl.unbounded:
        out["inv_eps_xi2_nW"] = {"value": None, "text": "unbounded"}
        out["peak_power_nW"] = None
    else:
        out["inv_eps_xi2_nW"] = fileio.value_entry(tl.inv_eps_xi2, tl.sigma_inv_eps_xi2)
        out["peak_power_nW"] = tl.peak_power
    out["three_level_reduced_chi2"] = tl.chi2 / max(tl.dof, 1)
    try:
        sw = fit_spectral_wandering(series)
    except InconsistentFit as exc:
        out.update(gamma_sw_ueV=None, gamma_pd_ueV=None, Gamma0_ueV=None, i_sat=None,
                   note=f"no consistent determination: {exc}")
        return out
    out["Gamma0_ueV"] = fileio.value_entry(sw.Gamma0, sw.sigma_Gamma0)
    out["gamma_sw_ueV"] = fileio.value_entry(sw.gamma_sw, sw.sigma_gamma_sw)
    out["i_sat"] = fileio.value_entry(sw.i_sat, sw.sigma_i_sat)
    gpd = derive_pure_dephasing(sw.Gamma0, sw.gamma_sw, gamma)
    gpd_sig = math.hypot(sw.sigma_Gamma0, sw.sigma_gamma_sw)
    out["gamma_pd_ueV"] = fileio.value_entry(gpd, gpd_sig)
    out["gamma_ueV"] = gamma
    out["reduced_chi2"] = sw.reduced_chi2
    out["reduced_chi2_no_wandering"] = sw.reduced_chi2_null
    return out


@main.command("rf-fit")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True,
              help="CSV power_nW,intensity_counts,linewidth_ueV[,flag,...].")
@click.option("--report", type=click.Path(dir_okay=False), required=True, help="Report JSON.")
@click.option("--gamma", type=float, default=TRANSFORM_LIMIT_UEV, show_default=True,
              help="Radiative (transform-limited) linewidth in ueV.")
@click.option("--auto-flag", is_flag=True,
              help="Flag low-power points that disagree with the saturation law.")
@click.option("--label", default=None, help="Emitter label (default: file name).")
@reports_errors
def rf_fit(data, report, gamma, auto_flag, label):
    """Saturation and spectral-wandering analysis of an RF power series."""
    series = fileio.load_rf_series(data, label)
    rep = rf_report(series, gamma, auto_flag)
    fileio.write_json(rep, report)
    sw = rep["gamma_sw_ueV"]
    click.echo(f"{rep['qd']}: gamma_sw = {sw['text'] if sw else 'n/a'}")


if __name__ == "__main__":
    main()
