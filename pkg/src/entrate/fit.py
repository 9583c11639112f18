"""Exponential extrapolation of an entropy curve: f(x) = a*exp(-b*x) + c.

The asymptote c is the entropy-rate estimate. The decay rate is optimized
as beta = ln(b), which keeps b > 0 without constraints; a and c are free,
so c may come out negative on pathological (undersampled) curves — it is
reported unclamped and flagged, never fixed up.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from entrate.diagnose import CoverageReport, undersampled
from entrate.entropy import EntropyCurve

FLAT_CURVE = "FLAT_CURVE"
NEGATIVE_RATE = "NEGATIVE_RATE"
UNDERSAMPLED = "UNDERSAMPLED"
NO_CONVERGENCE = "NO_CONVERGENCE"

MAX_ITERATIONS = 200
GRADIENT_TOL = 1e-8
SSE_IMPROVEMENT_TOL = 1e-12
FLAT_SPREAD = 1e-9

# deterministic fallback starts, tried only if the primary start stalls
_FALLBACK_BETAS = (np.log(0.05), np.log(0.2), 0.0, np.log(3.0), np.log(8.0))


class TooFewPoints(ValueError):
    pass


@dataclass
class ExpFit:
    a: float
    b: float
    c: float
    sse: float
    converged: bool
    iterations: int
    flags: list[str] = field(default_factory=list)
    points: list[tuple[float, float]] = field(default_factory=list)

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return self.a * np.exp(-self.b * x) + self.c

    def as_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "sse": self.sse,
            "converged": self.converged,
            "iterations": self.iterations,
            "flags": list(self.flags),
            "points": [[float(x), float(y)] for x, y in self.points],
        }

    def to_json(self, **extra) -> str:
        d = self.as_dict()
        d.update(extra)
        return json.dumps(d, sort_keys=True, indent=2)


def _model(theta, x):
    a, beta, c = theta
    return a * np.exp(-np.exp(beta) * x) + c


def _sse(theta, x, y):
    r = y - _model(theta, x)
    return float(r @ r)


def _grad(theta, x, y):
    """Gradient of the SSE with respect to (a, beta, c)."""
    a, beta, c = theta
    b = np.exp(beta)
    e = np.exp(-b * x)
    r = y - (a * e + c)
    # residual Jacobian columns: dr/da = -e, dr/dbeta = a*x*b*e, dr/dc = -1
    return 2.0 * np.array([-(r @ e), a * b * (r @ (x * e)), -r.sum()])


def _initial_guess(x, y):
    """Documented deterministic start for monotone decaying curves."""
    order = np.argsort(x)
    xs, ys = x[order], y[order]
    c0 = ys[-1] - max(ys[-2] - ys[-1], 0.0) if xs.size >= 2 else ys[-1]
    a0 = ys[0] - c0
    if abs(a0) < 1e-6:
        a0 = 1e-6 if a0 >= 0 else -1e-6
    b0 = 1.0
    d1, d2 = ys[0] - c0, ys[1] - c0
    if d2 != 0 and d1 / d2 > 0:
        span = max(xs[1] - xs[0], 1e-12)
        b0 = float(np.clip(np.log(d1 / d2) / span, 1e-3, 10.0))
    return np.array([a0, np.log(b0), c0])


def _levenberg_gauss_newton(theta0, x, y):
    """Damped Gauss-Newton from one start; returns (theta, sse, iters, converged)."""
    theta = theta0.astype(np.float64).copy()
    sse = _sse(theta, x, y)
    lam = 1e-3
    iters = 0
    for iters in range(1, MAX_ITERATIONS + 1):
        a, beta, c = theta
        b = np.exp(beta)
        e = np.exp(-b * x)
        r = y - (a * e + c)
        jac = np.column_stack([-e, a * b * x * e, -np.ones_like(x)])
        g = 2.0 * (jac.T @ r)
        if np.linalg.norm(g) <= GRADIENT_TOL:
            return theta, sse, iters, True
        jtj = jac.T @ jac
        improved = False
        for _ in range(25):
            damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12))
            try:
                step = np.linalg.solve(damped, -(jac.T @ r))
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = theta + step
            cand_sse = _sse(cand, x, y)
            if np.isfinite(cand_sse) and cand_sse < sse:
                improvement = sse - cand_sse
                theta, sse = cand, cand_sse
                lam = max(lam / 3.0, 1e-14)
                improved = True
                if improvement < SSE_IMPROVEMENT_TOL:
                    converged = np.linalg.norm(_grad(theta, x, y)) <= GRADIENT_TOL
                    return theta, sse, iters, converged
                break
            lam *= 10.0
        if not improved:
            break
    converged = np.linalg.norm(_grad(theta, x, y)) <= GRADIENT_TOL
    return theta, sse, iters, converged


def fit_exponential(points) -> ExpFit:
    """Least-squares fit of a*exp(-b*x) + c to (x, y) points.

    Deterministic: a documented initial guess, plus a fixed ladder of
    fallback starts tried only when the primary start fails to converge;
    the lowest-SSE result wins. Never raises on non-convergence — the best
    parameters so far are returned with converged=False.
    """
    pts = [(float(px), float(py)) for px, py in points]
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if np.unique(xs).size < 3:
        raise TooFewPoints("need at least 3 points with distinct x")

    if ys.max() - ys.min() < FLAT_SPREAD:
        # b is unidentifiable on a flat curve; report the mean as the rate
        c = float(ys.mean())
        sse = float(((ys - c) ** 2).sum())
        return ExpFit(a=0.0, b=1.0, c=c, sse=sse, converged=True,
                      iterations=0, flags=[FLAT_CURVE], points=pts)

    # accept-only updates from the documented start keep SSE monotone, so
    # the returned SSE never exceeds the SSE at the initial guess
    theta0 = _initial_guess(xs, ys)
    best = _levenberg_gauss_newton(theta0, xs, ys)
    if not best[3] or best[1] > 1e-12 * max(1.0, float(ys @ ys)):
        a0, _, c0 = theta0
        for beta in _FALLBACK_BETAS:
            cand = _levenberg_gauss_newton(np.array([a0, beta, c0]), xs, ys)
            if cand[1] < best[1]:
                best = cand
    theta, sse, iters, converged = best
    flags = [] if converged else [NO_CONVERGENCE]
    return ExpFit(
        a=float(theta[0]),
        b=float(np.exp(theta[1])),
        c=float(theta[2]),
        sse=float(sse),
        converged=bool(converged),
        iterations=int(iters),
        flags=flags,
        points=pts,
    )


def estimate_rate(curve: EntropyCurve, diagnostics: CoverageReport | None = None,
                  **thresholds) -> ExpFit:
    """Fit the entropy curve and attach rate-level diagnostic flags.

    NEGATIVE_RATE marks c < 0; UNDERSAMPLED marks coverage trouble at any
    fitted order. c itself is never clamped.
    """
    fit = fit_exponential(curve.points)
    if fit.c < 0:
        fit.flags.append(NEGATIVE_RATE)
    if diagnostics is not None:
        if any(undersampled(diagnostics, n, **thresholds) for n, _ in curve.points):
            fit.flags.append(UNDERSAMPLED)
    return fit
