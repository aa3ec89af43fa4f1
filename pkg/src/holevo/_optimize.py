"""Conditional-gradient maximization over small polytopes, and 1-D searches.

The feasible set is the convex hull of an explicit vertex list (the simplex
vertices, plus cost-constraint edge points when a budget applies). Iterates
are stored as weights over vertices so away steps are available; this keeps
convergence linear when the optimum sits on a face.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import Infeasible, NoBracket

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10,
               max_iter: int = 500):
    """Maximize a unimodal ``f`` on [a, b]. Returns (argmax, max).

    The endpoints are evaluated too, so monotone objectives return the
    correct boundary point exactly.
    """
    fa, fb = f(a), f(b)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    lo, hi = a, b
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INVPHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INVPHI * (hi - lo)
            fd = f(d)
    best = max((fa, a), (fb, b), (fc, c), (fd, d), key=lambda t: (_nan_low(t[0]), -t[1]))
    return best[1], best[0]


def _nan_low(x):
    return -math.inf if x != x else x


def grid_then_golden(f: Callable[[float], float], a: float, b: float, points: int = 21,
                     tol: float = 1e-10):
    """Coarse grid to locate the best cell, then golden section inside it."""
    xs = np.linspace(a, b, points)
    vals = [f(float(x)) for x in xs]
    k = int(np.nanargmax(vals))
    lo = float(xs[max(k - 1, 0)])
    hi = float(xs[min(k + 1, points - 1)])
    x, fx = golden_max(f, lo, hi, tol=tol)
    if vals[k] > fx:
        return float(xs[k]), vals[k]
    return x, fx


def expand_then_golden(f: Callable[[float], float], start: float, step: float = 1.0,
                       grow: float = 2.0, limit: float = 1e6, tol: float = 1e-8):
    """Maximize a unimodal ``f`` on [start, inf) with geometric bracket growth.

    Returns (argmax, max). If ``f`` is still increasing at ``limit`` the
    supremum is reported as ``(inf, inf)`` when the growth is linear, else the
    value at ``limit``.
    """
    xs = [start, start + step]
    fs = [f(xs[0]), f(xs[1])]
    if fs[1] <= fs[0]:
        return golden_max(f, xs[0], xs[1], tol=tol)
    while True:
        step *= grow
        x_new = xs[-1] + step
        if x_new > limit:
            # increasing all the way to the cap: check slope
            slope = (fs[-1] - fs[-2]) / (xs[-1] - xs[-2])
            if slope > 1e-9:
                return math.inf, math.inf
            return xs[-1], fs[-1]
        xs.append(x_new)
        fs.append(f(x_new))
        if fs[-1] <= fs[-2]:
            return golden_max(f, xs[-3], xs[-1], tol=tol * max(1.0, xs[-3]))


def bisect_decreasing(f: Callable[[float], float], target: float, lo: float, hi: float,
                      rtol: float = 1e-15, max_expand: int = 200):
    """Root of ``f(x) = target`` for strictly decreasing ``f`` on (0, inf).

    The bracket [lo, hi] is expanded geometrically until it contains the root.
    Bisection runs in log-space.
    """
    flo, fhi = f(lo), f(hi)
    n = 0
    while flo < target:
        lo /= 10.0
        flo = f(lo)
        n += 1
        if n > max_expand:
            raise NoBracket(f"could not bracket root below {lo:.3e}")
    n = 0
    while fhi > target:
        hi *= 10.0
        fhi = f(hi)
        n += 1
        if n > max_expand:
            raise NoBracket(f"could not bracket root above {hi:.3e}")
    a, b = math.log(lo), math.log(hi)
    for _ in range(400):
        m = 0.5 * (a + b)
        if f(math.exp(m)) > target:
            a = m
        else:
            b = m
        if b - a <= rtol:
            break
    return math.exp(0.5 * (a + b))


# --------------------------------------------------------------------------
# feasible polytopes


def simplex_vertices(k: int) -> np.ndarray:
    return np.eye(k)


def budget_vertices(cost, budget: float, tol: float = 0.0) -> np.ndarray:
    """Vertices of {pi in simplex : cost . pi <= budget}."""
    cost = np.asarray(cost, dtype=float)
    k = cost.shape[0]
    verts = [np.eye(k)[i] for i in range(k) if cost[i] <= budget + tol]
    if not verts:
        raise Infeasible(f"budget {budget} below the cheapest letter cost {cost.min()}")
    for i in range(k):
        if cost[i] >= budget:
            continue
        for j in range(k):
            if cost[j] <= budget:
                continue
            v = np.zeros(k)
            v[i] = (cost[j] - budget) / (cost[j] - cost[i])
            v[j] = 1.0 - v[i]
            verts.append(v)
    return np.array(verts)


def budget_face_vertices(cost, budget: float, tol: float = 1e-12) -> np.ndarray:
    """Vertices of {pi in simplex : cost . pi = budget}."""
    cost = np.asarray(cost, dtype=float)
    k = cost.shape[0]
    verts = [np.eye(k)[i] for i in range(k) if abs(cost[i] - budget) <= tol]
    for i in range(k):
        for j in range(k):
            if cost[i] < budget - tol and cost[j] > budget + tol:
                v = np.zeros(k)
                v[i] = (cost[j] - budget) / (cost[j] - cost[i])
                v[j] = 1.0 - v[i]
                verts.append(v)
    if not verts:
        raise Infeasible(f"no prior has mean cost exactly {budget}")
    return np.array(verts)


@dataclass
class FWState:
    x: np.ndarray
    value: float
    gap: float
    iterations: int
    converged: bool


def frank_wolfe(
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    vertices: np.ndarray,
    start_weights: Optional[np.ndarray] = None,
    tol: float = 1e-7,
    max_iter: int = 10000,
    gap_fn: Optional[Callable[[np.ndarray, np.ndarray, float], float]] = None,
    line_tol: float = 1e-12,
) -> FWState:
    """Maximize a concave ``objective`` over conv(vertices) with away steps.

    ``gap_fn(x, grad, value)`` may supply a certified optimality gap; by
    default the Frank-Wolfe gap ``max_v <grad, v - x>`` is used.
    """
    nv = vertices.shape[0]
    if start_weights is None:
        start_weights = np.full(nv, 1.0 / nv)
    w = np.asarray(start_weights, dtype=float).copy()
    x = w @ vertices
    fx = objective(x)
    gap = math.inf
    for it in range(max_iter + 1):
        g = gradient(x)
        scores = vertices @ g
        gx = float(g @ x) if np.all(np.isfinite(g)) else math.inf
        fw_gap = float(np.max(scores) - gx) if np.isfinite(gx) else math.inf
        gap = gap_fn(x, g, fx) if gap_fn is not None else fw_gap
        if gap <= tol:
            return FWState(x, fx, max(gap, 0.0), it, True)
        if it == max_iter:
            break
        t = int(np.argmax(scores))
        active = np.flatnonzero(w > 0)
        a = int(active[np.argmin(scores[active])])
        away_gap = float(gx - scores[a]) if np.isfinite(gx) else -math.inf
        if fw_gap >= away_gap or np.isnan(away_gap):
            d = vertices[t] - x
            gmax, toward = 1.0, True
        else:
            d = x - vertices[a]
            gmax = w[a] / (1.0 - w[a]) if w[a] < 1.0 else math.inf
            toward = False
        if not np.isfinite(gmax):
            gmax = 1.0
        step, fnew = golden_max(lambda s: objective(x + s * d), 0.0, gmax, tol=line_tol)
        if fnew < fx or step <= 0.0:
            # no ascent along the chosen direction; try the plain FW direction
            if not toward:
                d = vertices[t] - x
                step, fnew = golden_max(lambda s: objective(x + s * d), 0.0, 1.0, tol=line_tol)
                toward = True
            if fnew < fx or step <= 0.0:
                return FWState(x, fx, max(gap, 0.0), it, gap <= tol)
        if toward:
            w *= 1.0 - step
            w[t] += step
        else:
            w *= 1.0 + step
            w[a] -= step
        w[w < 1e-15] = 0.0
        w /= w.sum()
        x = w @ vertices
        fx = objective(x)
    return FWState(x, fx, max(gap, 0.0), max_iter, False)
