"""Compare the compiled and numpy spectrum kernels, alone and inside a fit.

    python3 benchmarks/bench_kernels.py [--repeat N] [--json out.json]
"""
import argparse
import json
import time

import numpy as np

from qdcavity import kernels
from qdcavity.fitting import FitConfig, FitParams, fit_global, generate_synthetic
from qdcavity.model import ModelParams

G, KAPPA, GAMMA, BIG = 11.13, 19.84, 1.38, 1.26


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(nu):
    return {
        "m1_population": lambda: kernels.m1_population(nu, -5.0, G, KAPPA, GAMMA),
        "m2_pd_population": lambda: kernels.m2_pd_population(nu, -5.0, G, KAPPA, GAMMA, BIG),
        "m2_sw_population": lambda: kernels.m2_sw_population(nu, -5.0, G, KAPPA, GAMMA, BIG),
    }


def fit_case():
    truth = FitParams(ModelParams(G, KAPPA, GAMMA, gamma_sw=BIG, scale=5e5), omega_x=0.3,
                      a_c=2e4, b0=10.0, model="M2")
    grid = np.linspace(-60, 60, 401)
    design = [(d, grid) for d in (-17, -11, -5, 0, 5, 11, 17)]
    data = generate_synthetic(truth, design, noise="poisson", seed=0)
    vals = truth.values()
    start = truth.with_values({k: v * 1.05 for k, v in vals.items() if k != "omega_x"})
    cfg = FitConfig(start)
    return lambda: fit_global(data, cfg)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--points", type=int, default=2807)
    ap.add_argument("--json", default=None)
    args = ap.parse_args()

    nu = np.linspace(-60, 60, args.points)
    rows = []
    for backend in kernels.available_backends():
        kernels.use_backend(backend)
        for name, fn in kernel_cases(nu).items():
            # enough inner calls that one timing is well above clock resolution
            t = best_of(lambda fn=fn: [fn() for _ in range(200)], args.repeat) / 200
            rows.append({"backend": backend, "case": name, "seconds": t})
        rows.append({"backend": backend, "case": "global M2 fit (7x401)",
                     "seconds": best_of(fit_case(), max(1, args.repeat // 2))})

    print(f"{'case':<26s} " + " ".join(f"{b:>12s}" for b in kernels.available_backends())
          + "   speedup")
    for case in dict.fromkeys(r["case"] for r in rows):
        t = {r["backend"]: r["seconds"] for r in rows if r["case"] == case}
        line = f"{case:<26s} " + " ".join(f"{t[b] * 1e3:>10.3f}ms" for b in t)
        if "cython" in t:
            line += f"   {t['python'] / t['cython']:6.1f}x"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
