"""Small bounded Levenberg-Marquardt solver with a finite-difference Jacobian.

Only steps that lower the cost are accepted, so the recorded cost history is
non-increasing by construction.  Bounds are enforced by clipping trial points.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ExceptionalPoint, NotConverged


@dataclass
class LMResult:
    x: np.ndarray
    residuals: np.ndarray
    jacobian: np.ndarray
    cost: float
    n_iter: int
    n_eval: int
    history: list = field(default_factory=list)
    message: str = ""


def fd_jacobian(fun, x, f0, lower, upper, rel_step=1e-6):
    """Forward differences; the step flips sign at an upper bound."""
    jac = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = rel_step * max(abs(x[i]), 1.0)
        if x[i] + h > upper[i]:
            h = -h
        xp = x.copy()
        xp[i] += h
        jac[:, i] = (fun(xp) - f0) / h
    return jac


def _bounded_step(m, grad, x, lower, upper):
    """Damped Gauss-Newton step with parameters on a bound frozen when the
    step would push them outward."""
    free = np.ones(x.size, dtype=bool)
    step = np.zeros(x.size)
    for _ in range(x.size + 1):
        step[:] = 0.0
        idx = np.flatnonzero(free)
        if idx.size == 0:
            return step
        step[idx] = np.linalg.solve(m[np.ix_(idx, idx)], -grad[idx])
        blocked = free & (((x <= lower) & (step < 0)) | ((x >= upper) & (step > 0)))
        if not blocked.any():
            return step
        free &= ~blocked
    return step


def _safe_eval(fun, x):
    try:
        r = np.asarray(fun(x), dtype=float)
    except (ExceptionalPoint, DomainError, FloatingPointError, ZeroDivisionError):
        return None
    if not np.all(np.isfinite(r)):
        return None
    return r


def levenberg_marquardt(fun, x0, lower=None, upper=None, *, rel_step=1e-6,
                        max_iter=200, ftol=1e-13, xtol=1e-13, lam0=1e-3):
    """Minimise ``sum(fun(x)**2)`` subject to ``lower <= x <= upper``.

    Raises :class:`NotConverged` when ``max_iter`` accepted iterations pass
    without meeting a convergence test.
    """
    x = np.array(x0, dtype=float)
    n = x.size
    lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    x = np.clip(x, lower, upper)
    r = _safe_eval(fun, x)
    if r is None:
        raise DomainError("model cannot be evaluated at the initial point")
    cost = float(r @ r)
    history = [cost]
    n_eval = 1
    lam = lam0
    message = ""
    for it in range(1, max_iter + 1):
        jac = fd_jacobian(fun, x, r, lower, upper, rel_step)
        n_eval += n
        a = jac.T @ jac
        grad = jac.T @ r
        diag = np.maximum(np.diag(a), 1e-300)
        accepted = False
        while lam < 1e20:
            try:
                step = _bounded_step(a + lam * np.diag(diag), grad, x, lower, upper)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = np.clip(x + step, lower, upper)
            r_new = _safe_eval(fun, x_new)
            n_eval += 1
            if r_new is not None:
                cost_new = float(r_new @ r_new)
                if cost_new < cost:
                    accepted = True
                    break
            lam *= 4.0
        if not accepted:
            message = "no further decrease possible"
            return LMResult(x, r, jac, cost, it, n_eval, history, message)
        dx = x_new - x
        reduction = cost - cost_new
        x, r, cost = x_new, r_new, cost_new
        history.append(cost)
        lam = max(lam / 3.0, 1e-15)
        if cost == 0.0:
            message = "zero residual"
            break
        if reduction <= ftol * cost:
            message = "relative cost reduction below ftol"
            break
        if np.all(np.abs(dx) <= xtol * np.maximum(np.abs(x), 1.0)):
            message = "step below xtol"
            break
    else:
        raise NotConverged(f"no convergence after {max_iter} iterations (cost {cost:.6g})")
    jac = fd_jacobian(fun, x, r, lower, upper, rel_step)
    return LMResult(x, r, jac, cost, it, n_eval + n, history, message)
