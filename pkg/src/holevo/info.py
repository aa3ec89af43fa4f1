"""Information quantities and capacity optimization for c-q channels."""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _optimize
from ._config import get_config
from .exceptions import (
    DimMismatch,
    DomainError,
    Infeasible,
    MixedStates,
    NoConvergence,
    NoCost,
)
from .qstate import (
    DecisionRule,
    DensityMatrix,
    Ensemble,
    PureState,
    _as_density,
    _frozen,
    _mixture,
    entropy,
    relative_entropy,
)

__all__ = [
    "ChannelCq",
    "CapacityResult",
    "binary_pure_channel",
    "holevo_chi",
    "accessible_info",
    "optimize_chi",
    "cutoff_rate",
    "binary_channel",
    "BinaryChannelQuantities",
    "fano_bound",
]


@dataclass(frozen=True, eq=False)
class ChannelCq:
    """Classical-quantum channel: letter i -> state S_i, optional cost f(i)."""

    states: tuple
    cost: Optional[np.ndarray] = None

    def __post_init__(self):
        states = tuple(_as_density(s) for s in self.states)
        if not states:
            raise DimMismatch("channel needs at least one letter")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise DimMismatch(f"states have differing dimensions {sorted(dims)}")
        object.__setattr__(self, "states", states)
        if self.cost is not None:
            cost = np.asarray(self.cost, dtype=float).reshape(-1)
            if cost.shape[0] != len(states):
                raise DimMismatch(f"{cost.shape[0]} costs for {len(states)} letters")
            if np.any(cost < 0):
                raise DomainError("letter costs must be nonnegative")
            object.__setattr__(self, "cost", _frozen(cost))

    @classmethod
    def from_vectors(cls, vectors, cost=None) -> "ChannelCq":
        """Pure-state channel from state vectors (normalized on input)."""
        states = [PureState.normalized(v).density() for v in vectors]
        ch = cls(tuple(states), cost)
        vecs = np.array([PureState.normalized(v).amplitudes for v in vectors])
        object.__setattr__(ch, "_vectors", _frozen(vecs))
        return ch

    @property
    def alphabet_size(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def is_pure(self) -> bool:
        return all(s.is_pure for s in self.states)

    @property
    def vectors(self) -> np.ndarray:
        """State vectors, one row per letter (pure channels only)."""
        vecs = self.__dict__.get("_vectors")
        if vecs is None:
            if not self.is_pure:
                raise MixedStates("channel has mixed output states")
            vecs = _frozen(np.array([s.vector() for s in self.states]))
            object.__setattr__(self, "_vectors", vecs)
        return vecs

    def overlaps(self) -> np.ndarray:
        """Matrix of Tr S_i S_j (squared overlaps for pure states)."""
        mats = [s.matrix for s in self.states]
        k = len(mats)
        out = np.empty((k, k))
        for i in range(k):
            for j in range(i, k):
                out[i, j] = out[j, i] = float(np.real(np.sum(mats[i] * mats[j].T)))
        return out

    def average(self, prior) -> DensityMatrix:
        return _mixture(_check_prior(prior, self.alphabet_size), self.states)

    def ensemble(self, prior) -> Ensemble:
        return Ensemble(_check_prior(prior, self.alphabet_size), self.states, self.cost)


def _check_prior(prior, k: int) -> np.ndarray:
    p = np.asarray(prior, dtype=float).reshape(-1)
    if p.shape[0] != k:
        raise DimMismatch(f"prior has {p.shape[0]} entries for {k} letters")
    tol = get_config().tol_prob
    if np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
        raise DomainError(f"prior is not a probability vector: {p}")
    return np.clip(p, 0.0, None)


def binary_pure_channel(epsilon: float) -> ChannelCq:
    """Two pure qubit states with overlap ``epsilon`` (real, nonnegative)."""
    if not 0.0 <= epsilon <= 1.0:
        raise DomainError(f"overlap must lie in [0, 1], got {epsilon}")
    return ChannelCq.from_vectors(
        [[1.0, 0.0], [epsilon, math.sqrt(max(1.0 - epsilon**2, 0.0))]]
    )


# --------------------------------------------------------------------------
# entropy-bound quantities


def holevo_chi(ens: Ensemble) -> float:
    """Entropy bound H(sum pi_i S_i) - sum pi_i H(S_i), in nats.

    With ``debug`` enabled the value is cross-checked against the
    divergence form sum pi_i H(S_i; S_bar).
    """
    avg = _mixture(ens.probs, ens.states)
    mean_h = sum(p * entropy(s) for p, s in zip(ens.probs, ens.states) if p > 0)
    chi = max(entropy(avg) - mean_h, 0.0)
    if get_config().debug:
        alt = sum(p * relative_entropy(s, avg) for p, s in zip(ens.probs, ens.states) if p > 0)
        if abs(alt - chi) > 1e-8:
            raise AssertionError(f"holevo_chi cross-check failed: {chi} vs {alt}")
    return chi


def transition_matrix(ens: Ensemble, rule: DecisionRule) -> np.ndarray:
    """P(j|i) = Tr S_i X_j, with the inconclusive outcome as the last column."""
    if rule.dim != ens.dim:
        raise DimMismatch(f"rule acts on dimension {rule.dim}, states on {ens.dim}")
    elements = list(rule.elements) + [rule.inconclusive]
    P = np.array(
        [[float(np.real(np.sum(s.matrix * x.T))) for x in elements] for s in ens.states]
    )
    return np.clip(P, 0.0, None)


def mutual_information(prior, transition) -> float:
    """Classical I(X;Y) in nats for input law ``prior`` and rows P(y|x)."""
    prior = np.asarray(prior, dtype=float)
    P = np.asarray(transition, dtype=float)
    q = prior @ P
    total = 0.0
    for i, pi in enumerate(prior):
        if pi <= 0:
            continue
        row = P[i]
        m = row > 0
        total += pi * float(np.sum(row[m] * np.log(row[m] / q[m])))
    return max(total, 0.0)


def accessible_info(ens: Ensemble, rule: DecisionRule) -> float:
    """Mutual information between input letters and measurement outcomes."""
    return mutual_information(ens.probs, transition_matrix(ens, rule))


# --------------------------------------------------------------------------
# capacity


@dataclass
class CapacityResult:
    value: float
    optimizer: np.ndarray
    iterations: int
    gap: float
    converged: bool = True

    def __repr__(self):
        return (f"CapacityResult(value={self.value:.10g}, optimizer={np.round(self.optimizer, 8)}, "
                f"iterations={self.iterations}, gap={self.gap:.2e})")


def _chi_of(ch: ChannelCq, entropies: np.ndarray, prior: np.ndarray) -> float:
    avg = _mixture(prior, ch.states)
    return entropy(avg) - float(prior @ entropies)


def _divergences(ch: ChannelCq, prior: np.ndarray) -> np.ndarray:
    avg = _mixture(prior, ch.states)
    return np.array([relative_entropy(s, avg) for s in ch.states])


def optimize_chi(ch: ChannelCq, budget: Optional[float] = None,
                 start: Optional[Sequence[float]] = None) -> CapacityResult:
    """Maximize the entropy bound over input distributions.

    Without a budget the stopping rule is the certified gap
    ``max_i H(S_i; S_bar) - chi``; with ``budget`` the feasible set is
    ``sum_i pi_i f(i) <= budget`` and the Frank-Wolfe gap is used.

    Raises:
        Infeasible: no letter fits the budget.
        NoConvergence: ``max_iter`` reached; ``err.result`` has the best iterate.
    """
    cfg = get_config()
    k = ch.alphabet_size
    entropies = np.array([entropy(s) for s in ch.states])

    def objective(p):
        return _chi_of(ch, entropies, np.clip(p, 0.0, None))

    def gradient(p):
        return _divergences(ch, np.clip(p, 0.0, None))

    if budget is None:
        verts = _optimize.simplex_vertices(k)
        w0 = np.full(k, 1.0 / k) if start is None else np.asarray(start, dtype=float)

        def gap_fn(x, g, fx):
            return float(np.max(g)) - fx

        state = _optimize.frank_wolfe(objective, gradient, verts, w0, tol=cfg.opt_tol,
                                      max_iter=cfg.max_iter, gap_fn=gap_fn)
    else:
        if ch.cost is None:
            raise NoCost("a budget requires letter costs")
        verts = _optimize.budget_vertices(ch.cost, budget)
        w0 = _feasible_start(verts, ch.cost, budget)
        state = _optimize.frank_wolfe(objective, gradient, verts, w0, tol=cfg.opt_tol,
                                      max_iter=cfg.max_iter)
    prior = np.clip(state.x, 0.0, None)
    prior = prior / prior.sum()
    result = CapacityResult(max(state.value, 0.0), prior, state.iterations, state.gap,
                            state.converged)
    if not state.converged:
        raise NoConvergence(f"optimize_chi stopped after {state.iterations} iterations "
                            f"with gap {state.gap:.3e}", result)
    return result


def _feasible_start(verts, cost, budget):
    # uniform over vertices is always feasible (each vertex is)
    return np.full(verts.shape[0], 1.0 / verts.shape[0])


def cutoff_rate(ch: ChannelCq):
    """Quantum cutoff rate -log min_pi sum_ij pi_i pi_j Tr S_i S_j.

    Returns ``(value, prior)``.
    """
    cfg = get_config()
    gram = ch.overlaps()
    k = ch.alphabet_size

    def objective(p):
        return -float(p @ gram @ p)

    def gradient(p):
        return -2.0 * (gram @ p)

    state = _optimize.frank_wolfe(objective, gradient, _optimize.simplex_vertices(k),
                                  np.full(k, 1.0 / k), tol=cfg.opt_tol * 1e-2,
                                  max_iter=cfg.max_iter)
    prior = np.clip(state.x, 0.0, None)
    prior /= prior.sum()
    value = -math.log(float(prior @ gram @ prior))
    if not state.converged:
        raise NoConvergence(f"cutoff_rate stopped with gap {state.gap:.3e}",
                            (value, prior))
    return value, prior


# --------------------------------------------------------------------------
# closed forms


@dataclass(frozen=True)
class BinaryChannelQuantities:
    C: float
    C1: float
    Ctilde: float
    mu_prime_1: float
    mutilde_prime_1: float


def _xlogx(x: float) -> float:
    return x * math.log(x) if x > 0 else 0.0


def binary_channel(epsilon: float) -> BinaryChannelQuantities:
    """Closed forms for two pure states with overlap ``epsilon`` (nats).

    ``C`` is the capacity, ``C1`` the one-shot product-measurement capacity,
    ``Ctilde`` the cutoff rate, and the two derivatives locate the knots of
    the linear part of the reliability bound.
    """
    eps = float(epsilon)
    if not 0.0 <= eps <= 1.0 or math.isnan(eps):
        raise DomainError(f"overlap must lie in [0, 1], got {epsilon}")
    a = (1.0 - eps) / 2.0
    b = (1.0 + eps) / 2.0
    C = -(_xlogx(a) + _xlogx(b))
    r = math.sqrt(max(1.0 - eps * eps, 0.0))
    C1 = 0.5 * (_xlogx(1.0 + r) + _xlogx(1.0 - r))
    e2 = eps * eps
    Ctilde = -math.log((1.0 + e2) / 2.0)
    mutilde_p1 = Ctilde + (_xlogx(e2) / (1.0 + e2))
    mu_p1 = -((1.0 - eps) ** 2 * _log0(a) + (1.0 + eps) ** 2 * math.log(b)) / (2.0 * (1.0 + e2))
    # adding 0.0 turns a signed zero at the endpoints into +0.0
    return BinaryChannelQuantities(C + 0.0, C1 + 0.0, Ctilde + 0.0, mu_p1 + 0.0, mutilde_p1 + 0.0)


def _log0(x: float) -> float:
    return math.log(x) if x > 0 else 0.0


def fano_bound(M: float, capacity: float) -> float:
    """Converse lower bound on the error probability of any size-M code.

    Uses ``log M (1 - p) <= C_n + 1``; ``M`` may be real-valued.
    """
    if M < 1:
        raise DomainError(f"code size must be >= 1, got {M}")
    if M == 1:
        return 0.0
    value = 1.0 - (capacity + 1.0) / math.log(M)
    return min(max(value, 0.0), 1.0)
