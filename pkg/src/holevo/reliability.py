"""Random-coding and expurgated exponents for pure-state c-q channels.

Exponent values are clamped at zero: a negative supremum only means the
bound is vacuous at that rate.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _optimize
from ._config import get_config
from .exceptions import DomainError, Infeasible, MixedStates, NoCost
from .info import ChannelCq, _check_prior

__all__ = [
    "ExponentCurve",
    "mu",
    "mu_prime",
    "mu_ex",
    "mu_ex_prime",
    "mu_constrained",
    "mu_ex_constrained",
    "exponents",
]


def _weighted_eigs(ch: ChannelCq, weights: np.ndarray) -> np.ndarray:
    acc = np.zeros((ch.dim, ch.dim), dtype=complex)
    for w, s in zip(weights, ch.states):
        if w:
            acc = acc + w * s.matrix
    acc = (acc + acc.conj().T) / 2
    return np.clip(np.linalg.eigvalsh(acc), 0.0, None)


def _pos(w):
    return w[w > 0]


def mu(ch: ChannelCq, prior, s: float) -> float:
    """-log Tr S_bar^{1+s} for the prior-averaged state."""
    if s < 0:
        raise DomainError(f"s must be nonnegative, got {s}")
    w = _pos(_weighted_eigs(ch, _check_prior(prior, ch.alphabet_size)))
    return -math.log(float(np.sum(w ** (1.0 + s))))


def mu_prime(ch: ChannelCq, prior, s: float) -> float:
    """Analytic derivative of :func:`mu` in s."""
    if s < 0:
        raise DomainError(f"s must be nonnegative, got {s}")
    w = _pos(_weighted_eigs(ch, _check_prior(prior, ch.alphabet_size)))
    ws = w ** (1.0 + s)
    return -float(np.sum(ws * np.log(w)) / np.sum(ws))


def _abs_overlaps(ch: ChannelCq) -> np.ndarray:
    if not ch.is_pure:
        raise MixedStates("expurgated exponent needs pure states")
    v = ch.vectors
    return np.clip(np.abs(v.conj() @ v.T), 0.0, 1.0)


def _overlap_power(absov: np.ndarray, s: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        out = np.where(absov > 0, absov ** (2.0 / s), 0.0)
    return out


def mu_ex(ch: ChannelCq, prior, s: float) -> float:
    """-s log sum_ik pi_i pi_k |<psi_i|psi_k>|^{2/s}, for s >= 1."""
    if s < 1:
        raise DomainError(f"s must be >= 1, got {s}")
    p = _check_prior(prior, ch.alphabet_size)
    q = float(p @ _overlap_power(_abs_overlaps(ch), s) @ p)
    return -s * math.log(q)


def mu_ex_prime(ch: ChannelCq, prior, s: float) -> float:
    """Analytic derivative of :func:`mu_ex` in s."""
    if s < 1:
        raise DomainError(f"s must be >= 1, got {s}")
    p = _check_prior(prior, ch.alphabet_size)
    absov = _abs_overlaps(ch)
    k = _overlap_power(absov, s)
    with np.errstate(divide="ignore"):
        logs = np.where(absov > 0, np.log(np.where(absov > 0, absov, 1.0)), 0.0)
    q = float(p @ k @ p)
    dq = float(p @ (k * logs) @ p) * (-2.0 / s ** 2)
    return -math.log(q) - s * dq / q


def _cost_weights(ch: ChannelCq, p: float, budget: float) -> np.ndarray:
    if ch.cost is None:
        raise NoCost("constrained exponents need letter costs")
    return np.exp(p * (ch.cost - budget))


def mu_constrained(ch: ChannelCq, prior, s: float, p: float, budget: float) -> float:
    """-log Tr {sum_i pi_i e^{p[f(i)-E]} S_i}^{1+s}."""
    if not 0.0 <= s <= 1.0 or p < 0:
        raise DomainError(f"need 0 <= s <= 1 and p >= 0, got s={s}, p={p}")
    prior = _check_prior(prior, ch.alphabet_size)
    if p == 0:
        return mu(ch, prior, s)
    w = _pos(_weighted_eigs(ch, prior * _cost_weights(ch, p, budget)))
    return -math.log(float(np.sum(w ** (1.0 + s))))


def mu_ex_constrained(ch: ChannelCq, prior, s: float, p: float, budget: float) -> float:
    """-s log sum_ik pi_i pi_k e^{p[f(i)+f(k)-2E]} |<psi_i|psi_k>|^{2/s}."""
    if s < 1 or p < 0:
        raise DomainError(f"need s >= 1 and p >= 0, got s={s}, p={p}")
    prior = _check_prior(prior, ch.alphabet_size)
    if p == 0:
        return mu_ex(ch, prior, s)
    c = prior * _cost_weights(ch, p, budget)
    q = float(c @ _overlap_power(_abs_overlaps(ch), s) @ c)
    return -s * math.log(q)


# --------------------------------------------------------------------------
# exponent curves


@dataclass
class ExponentCurve:
    rates: np.ndarray
    Er: np.ndarray
    Eex: np.ndarray
    E: np.ndarray
    regime: list
    s_opt: np.ndarray
    p_opt: np.ndarray
    knots: dict = field(default_factory=dict)

    def rows(self):
        for i in range(len(self.rates)):
            yield (self.rates[i], self.Er[i], self.Eex[i], self.E[i], self.regime[i],
                   self.s_opt[i], self.p_opt[i])

    def to_csv(self, scale: float = 1.0) -> str:
        """CSV text with columns R, Er, Eex, E, regime, s_opt, p_opt.

        ``scale`` multiplies every information quantity (R and exponents),
        e.g. ``1/log(2)`` for bits.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["R", "Er", "Eex", "E", "regime", "s_opt", "p_opt"])
        for R, er, eex, e, reg, s, p in self.rows():
            writer.writerow([_fmt(R * scale), _fmt(er * scale), _fmt(eex * scale),
                             _fmt(e * scale), reg, _fmt(s), _fmt(p)])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return "%.17g" % x


def _label(er, s_r, eex, s_ex, tol=1e-6):
    if s_r >= 1.0 - tol and s_ex <= 1.0 + tol and er > 0:
        return "linear"
    if eex > er:
        return "expurgated"
    return "random_coding"


class _Memo:
    def __init__(self, func: Callable[[float], tuple]):
        self.func = func
        self.cache = {}

    def __call__(self, s: float):
        s = float(s)
        hit = self.cache.get(s)
        if hit is None:
            hit = self.cache[s] = self.func(s)
        return hit


def _inner_prior_opt(ch, verts, objective, gradient):
    cfg = get_config()
    k = verts.shape[0]
    state = _optimize.frank_wolfe(objective, gradient, verts, np.full(k, 1.0 / k),
                                  tol=cfg.opt_tol * 1e-2, max_iter=cfg.max_iter)
    x = np.clip(state.x, 0.0, None)
    return x / x.sum()


def exponents(
    ch: ChannelCq,
    rates: Sequence[float],
    budget: Optional[float] = None,
    prior=None,
    p_max: Optional[float] = None,
) -> ExponentCurve:
    """Lower bounds on the reliability function of a pure-state channel.

    For each rate R computes
    ``Er = sup_{0<=s<=1} [sup_{p,pi} mu - sR]`` and
    ``Eex = sup_{s>=1} [sup_{p,pi} mu_ex - sR]``, with the inner supremum over
    the prior by conditional gradient (skipped when ``prior`` is given) and
    over p on ``[0, p_max]`` by golden section (only with a ``budget``).

    With a binding budget the prior ranges over the face where its mean cost
    equals the budget; away from that face the tilt e^{p[f-E]} would grow
    without bound. A budget at or above every letter cost is dropped.
    """
    if not ch.is_pure:
        raise MixedStates("exponents are only available for pure-state channels")
    rates = np.asarray(rates, dtype=float).reshape(-1)
    if np.any(rates <= 0):
        raise DomainError("rates must be positive")
    k = ch.alphabet_size
    pinned = None if prior is None else _check_prior(prior, k)
    cost = None
    if budget is not None:
        if ch.cost is None:
            raise NoCost("a budget requires letter costs")
        cost = np.asarray(ch.cost)
        if budget < cost.min():
            raise Infeasible(f"budget {budget} below the cheapest letter cost {cost.min()}")
        if budget >= cost.max():
            # every word meets the budget: no conditioning, no tilt
            budget, cost = None, None
    if cost is not None:
        # the tilted bound needs priors whose mean cost sits on the budget
        verts = _optimize.budget_face_vertices(cost, budget)
        if pinned is not None and abs(float(pinned @ cost) - budget) > get_config().tol_prob:
            raise DomainError(f"pinned prior has mean cost {float(pinned @ cost)}, "
                              f"the constrained bound needs exactly {budget}")
        if p_max is None:
            p_max = 50.0 / budget if budget > 0 else 50.0
    else:
        verts = _optimize.simplex_vertices(k)
    mats = [s.matrix for s in ch.states]
    absov = _abs_overlaps(ch)

    def weights(p):
        if cost is None or p == 0:
            return np.ones(k)
        return np.exp(p * (cost - budget))

    # random-coding branch: maximize mu over prior (and p)
    def mu_at(s, p):
        c = weights(p)

        def F(x):
            w = _pos(_weighted_eigs(ch, x * c))
            return float(np.sum(w ** (1.0 + s)))

        if pinned is not None:
            return -math.log(F(pinned)), pinned

        def grad(x):
            a = sum(xi * ci * m for xi, ci, m in zip(x, c, mats))
            a = (a + a.conj().T) / 2
            w, v = np.linalg.eigh(a)
            w = np.clip(w, 0.0, None)
            a_s = (v * w ** s) @ v.conj().T
            return -(1.0 + s) * c * np.array([float(np.real(np.sum(a_s * m.T))) for m in mats])

        x = _inner_prior_opt(ch, verts, lambda x: -F(x), grad)
        return -math.log(F(x)), x

    def mu_ex_at(s, p):
        c = weights(p)
        K = _overlap_power(absov, s) * np.outer(c, c)

        if pinned is not None:
            return -s * math.log(float(pinned @ K @ pinned)), pinned
        x = _inner_prior_opt(ch, verts, lambda x: -float(x @ K @ x), lambda x: -2.0 * (K @ x))
        return -s * math.log(float(x @ K @ x)), x

    def best_over_p(func, s):
        if budget is None:
            val, _ = func(s, 0.0)
            return val, 0.0
        p, val = _optimize.grid_then_golden(lambda p: func(s, p)[0], 0.0, p_max, points=21,
                                            tol=1e-8 * max(1.0, p_max))
        return val, p

    m_r = _Memo(lambda s: best_over_p(mu_at, s))
    m_ex = _Memo(lambda s: best_over_p(mu_ex_at, s))

    n = rates.shape[0]
    Er = np.zeros(n)
    Eex = np.zeros(n)
    E = np.zeros(n)
    s_opt = np.zeros(n)
    p_opt = np.zeros(n)
    regime = []
    for i, R in enumerate(rates):
        s_r, er = _optimize.grid_then_golden(lambda s: m_r(s)[0] - s * R, 0.0, 1.0, points=21,
                                             tol=1e-10)
        s_ex, eex = _optimize.expand_then_golden(lambda s: m_ex(s)[0] - s * R, 1.0,
                                                 tol=1e-10)
        er = max(er, 0.0)
        eex = max(eex, 0.0)
        Er[i], Eex[i] = er, eex
        label = _label(er, s_r, eex, s_ex)
        regime.append(label)
        if eex > er:
            E[i], s_opt[i] = eex, s_ex
            p_opt[i] = m_ex(s_ex)[1] if math.isfinite(s_ex) else math.nan
        else:
            E[i], s_opt[i] = er, s_r
            p_opt[i] = m_r(s_r)[1]
    return ExponentCurve(rates, Er, Eex, E, regime, s_opt, p_opt)
