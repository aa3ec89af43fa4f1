"""Codebooks, square-root-measurement decoders, typical projectors, bounds,
and random-coding experiments.
"""

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np

from . import _optimize
from ._config import get_config
from .exceptions import (
    DimMismatch,
    DimOverflow,
    DomainError,
    Infeasible,
    MixedStates,
    NotCommuting,
    TooFewElements,
)
from .info import ChannelCq, _check_prior
from .qstate import (
    DecisionRule,
    DensityMatrix,
    _floor,
    _frozen,
    _hermitize,
    entropy,
    matrix_function,
    spectrum,
)

__all__ = [
    "Codebook",
    "TypicalProjector",
    "SRMBounds",
    "ExperimentResult",
    "gram",
    "srm",
    "srm_error",
    "average_error",
    "srm_bounds",
    "typical_projector",
    "conditional_typical_projector",
    "mixed_srm",
    "basic_bound_terms",
    "theorem2_bound",
    "theorem2_infimum",
    "exhaustive_expected_error",
    "random_coding_experiment",
    "quasiclassical_gallager_bound",
    "quasiclassical_gallager_infimum",
]


# --------------------------------------------------------------------------
# codebooks


@dataclass(frozen=True, eq=False)
class Codebook:
    """M words of length n over a channel's alphabet."""

    channel: ChannelCq
    words: np.ndarray

    def __post_init__(self):
        words = np.atleast_2d(np.asarray(self.words, dtype=int))
        if words.shape[0] < 1 or words.shape[1] < 1:
            raise DomainError("codebook needs at least one word of length >= 1")
        k = self.channel.alphabet_size
        if words.min() < 0 or words.max() >= k:
            raise DomainError(f"word letters must lie in [0, {k})")
        d = self.channel.dim ** words.shape[1]
        if d > get_config().max_dim:
            raise DimOverflow(f"word space dimension {d} exceeds max_dim={get_config().max_dim}")
        object.__setattr__(self, "words", _frozen(words))

    @property
    def M(self) -> int:
        return self.words.shape[0]

    @property
    def n(self) -> int:
        return self.words.shape[1]

    @property
    def dim(self) -> int:
        return self.channel.dim ** self.n

    @property
    def is_pure(self) -> bool:
        return self.channel.is_pure

    @cached_property
    def word_vectors(self) -> np.ndarray:
        """Rows are the product vectors psi_w (pure channels only)."""
        vecs = self.channel.vectors
        out = np.empty((self.M, self.dim), dtype=complex)
        for k, w in enumerate(self.words):
            v = vecs[w[0]]
            for letter in w[1:]:
                v = np.kron(v, vecs[letter])
            out[k] = v
        out.flags.writeable = False
        return out

    def word_spectrum(self, k: int):
        """Eigenvalues and eigenvectors of the k-th word state, from letter spectra."""
        w, v = self.channel.states[self.words[k, 0]].eigh
        for letter in self.words[k, 1:]:
            lw, lv = self.channel.states[letter].eigh
            w = np.kron(w, lw)
            v = np.kron(v, lv)
        return w, v

    def word_state(self, k: int) -> np.ndarray:
        mats = [self.channel.states[i].matrix for i in self.words[k]]
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out


def _require_pure(cb: Codebook):
    if not cb.is_pure:
        raise MixedStates("operation requires a pure-state channel")


def gram(cb: Codebook) -> np.ndarray:
    """Gram matrix of inner products <psi_wi|psi_wj>, unit diagonal."""
    _require_pure(cb)
    v = cb.channel.vectors
    letter_gram = v.conj() @ v.T
    out = np.ones((cb.M, cb.M), dtype=complex)
    for pos in range(cb.n):
        col = cb.words[:, pos]
        out *= letter_gram[np.ix_(col, col)]
    np.fill_diagonal(out, 1.0)
    return out


def _psd_power(a: np.ndarray, power: float, rel_floor: float) -> np.ndarray:
    return matrix_function(a, lambda w: w ** power, rel_floor)


def srm(cb: Codebook) -> DecisionRule:
    """Square-root measurement X_k = |G^{-1/2} psi_k><G^{-1/2} psi_k|.

    The generalized inverse vanishes on the null space of the Gram operator,
    so linearly dependent codewords are handled.
    """
    _require_pure(cb)
    g = gram(cb)
    g_inv_sqrt = _psd_power(g, -0.5, get_config().pinv_floor)
    # G^{-1/2} Psi = Psi Gamma^{-1/2} on the code span
    hat = g_inv_sqrt.T @ cb.word_vectors
    return DecisionRule(tuple(np.outer(h, h.conj()) for h in hat))


def srm_error(cb: Codebook) -> float:
    """Average SRM error 1 - (1/M) sum_k |(Gamma^{1/2})_kk|^2, from the Gram matrix."""
    g = gram(cb)
    root = _psd_power(g, 0.5, get_config().pinv_floor)
    diag = np.abs(np.diag(root)) ** 2
    return float(min(max(1.0 - math.fsum(diag) / cb.M, 0.0), 1.0))


def average_error(cb: Codebook, rule: DecisionRule) -> float:
    """Average error (1/M) sum_k [1 - Tr S_wk X_k] of a code."""
    if rule.dim != cb.dim:
        raise DimMismatch(f"rule acts on dimension {rule.dim}, codewords on {cb.dim}")
    if len(rule) < cb.M:
        raise TooFewElements(f"rule has {len(rule)} elements for {cb.M} codewords")
    if cb.is_pure:
        vecs = cb.word_vectors
        hits = [float(np.real(vecs[k].conj() @ rule.elements[k] @ vecs[k])) for k in range(cb.M)]
    else:
        hits = [float(np.real(np.sum(cb.word_state(k) * rule.elements[k].T)))
                for k in range(cb.M)]
    return float(min(max(1.0 - math.fsum(hits) / cb.M, 0.0), 1.0))


@dataclass(frozen=True)
class SRMBounds:
    tight: float
    coarse: float


def srm_bounds(cb: Codebook) -> SRMBounds:
    """Upper bounds on the SRM error: (2/M) Sp(E - Gamma^{1/2}) and
    (1/M) sum_{r != s} |Gamma_rs|^2."""
    g = gram(cb)
    M = cb.M
    root = _psd_power(g, 0.5, get_config().pinv_floor)
    tight = 2.0 / M * (M - float(np.real(np.trace(root))))
    off = np.abs(g) ** 2
    np.fill_diagonal(off, 0.0)
    coarse = float(off.sum()) / M
    return SRMBounds(max(tight, 0.0), coarse)


# --------------------------------------------------------------------------
# typical subspaces


@dataclass(frozen=True, eq=False)
class TypicalProjector:
    """Spectral projector onto eigenvalues strictly inside (lower, upper).

    ``capture`` is Tr S P for the projected state S, ``norm`` is ||S P||
    (zero when P = 0).
    """

    projector: np.ndarray = field(repr=False)
    lower: float
    upper: float
    capture: float
    norm: float
    rank: int

    @property
    def tail(self) -> float:
        return max(1.0 - self.capture, 0.0)


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def _window(values: np.ndarray, lower: float, upper: float) -> np.ndarray:
    return (values > lower) & (values < upper)


def _spectral_projector(w: np.ndarray, v: np.ndarray, lower: float, upper: float,
                        floor: float) -> TypicalProjector:
    w = np.where(w > floor, w, 0.0)
    mask = _window(w, lower, upper) & (w > 0)
    sel = v[:, mask]
    P = sel @ sel.conj().T
    P = _frozen(P)
    captured = math.fsum(w[mask])
    norm = float(w[mask].max()) if mask.any() else 0.0
    return TypicalProjector(P, lower, upper, captured, norm, int(mask.sum()))


def typical_projector(avg: DensityMatrix, n: int, delta: float) -> TypicalProjector:
    """Projector onto the typical subspace of ``avg`` tensored n times.

    Keeps product eigenvectors with exp(-n[H+delta]) < lambda_J < exp(-n[H-delta]).
    """
    if n < 1 or delta <= 0:
        raise DomainError("need n >= 1 and delta > 0")
    cfg = get_config()
    if avg.dim ** n > cfg.max_dim:
        raise DimOverflow(f"dimension {avg.dim}**{n} exceeds max_dim={cfg.max_dim}")
    h = entropy(avg)
    lw, lv = avg.eigh
    lw = np.where(lw > _floor(lw, cfg.eig_floor), lw, 0.0)
    w, v = lw, lv
    for _ in range(n - 1):
        w = np.kron(w, lw)
        v = np.kron(v, lv)
    lower = _exp(-n * (h + delta))
    upper = _exp(-n * (h - delta))
    return _spectral_projector(w, v, lower, upper, 0.0)


def conditional_typical_projector(word_state, n: int, mean_entropy: float, delta: float,
                                  spectrum_=None) -> TypicalProjector:
    """Spectral projector of a word state onto eigenvalues in
    (exp(-n[Hbar+delta]), exp(-n[Hbar-delta])).

    ``mean_entropy`` is the prior-averaged letter entropy. The operator
    inequality P_w <= S_w exp(n[Hbar+delta]) is checked.
    """
    if delta <= 0:
        raise DomainError("delta must be positive")
    cfg = get_config()
    if spectrum_ is None:
        mat = word_state.matrix if isinstance(word_state, DensityMatrix) else np.asarray(word_state)
        if mat.shape[0] > cfg.max_dim:
            raise DimOverflow(f"dimension {mat.shape[0]} exceeds max_dim={cfg.max_dim}")
        w, v = spectrum(_hermitize(np.asarray(mat, dtype=complex)))
        w = np.clip(w, 0.0, None)
    else:
        w, v = spectrum_
    floor = _floor(w, cfg.eig_floor)
    lower = _exp(-n * (mean_entropy + delta))
    upper = _exp(-n * (mean_entropy - delta))
    proj = _spectral_projector(w, v, lower, upper, floor)
    scale = _exp(n * (mean_entropy + delta))
    if math.isfinite(scale):
        kept = _window(np.where(w > floor, w, 0.0), lower, upper) & (w > floor)
        if np.any(w[kept] * scale - 1.0 < -1e-9):
            raise AssertionError("conditional typical projector violates P_w <= S_w e^{n(H+delta)}")
    return proj


def _as_projector(p) -> np.ndarray:
    return p.projector if isinstance(p, TypicalProjector) else np.asarray(p, dtype=complex)


def mixed_srm(cb: Codebook, P, Pw: Sequence) -> DecisionRule:
    """Decoder A^{-1/2} P P_wk P A^{-1/2} with A = sum_l P P_wl P.

    The inverse square root is generalized (zero on the null space of A), so
    the elements sum to the range projector of A, which lies below P.
    """
    if len(Pw) != cb.M:
        raise DimMismatch(f"{len(Pw)} word projectors for {cb.M} codewords")
    P = _as_projector(P)
    if P.shape != (cb.dim, cb.dim):
        raise DimMismatch(f"projector of shape {P.shape} for word dimension {cb.dim}")
    sandwiches = [P @ _as_projector(q) @ P for q in Pw]
    total = _hermitize(sum(sandwiches))
    root_inv = _psd_power(total, -0.5, get_config().pinv_floor)
    return DecisionRule(tuple(_hermitize(root_inv @ s @ root_inv) for s in sandwiches))


def basic_bound_terms(cb: Codebook, P, Pw: Sequence):
    """The three averaged terms of the basic mixed-state error bound:
    4 Tr S_w(I-P), 4 Tr S_w(I-P_w), and sum_{w' != w} Tr P S_w P P_w'.
    """
    P = _as_projector(P)
    projs = [_as_projector(q) for q in Pw]
    t1 = t2 = t3 = 0.0
    eye = np.eye(cb.dim)
    for k in range(cb.M):
        s = cb.word_state(k)
        t1 += 4.0 * float(np.real(np.sum(s * (eye - P).T)))
        t2 += 4.0 * float(np.real(np.sum(s * (eye - projs[k]).T)))
        psp = P @ s @ P
        for l in range(cb.M):
            if l != k:
                t3 += float(np.real(np.sum(psp * projs[l].T)))
    return t1 / cb.M, t2 / cb.M, t3 / cb.M


# --------------------------------------------------------------------------
# analytic random-coding bounds


def _trace_power(eigs: np.ndarray, power: float) -> float:
    eigs = eigs[eigs > 0]
    return float(np.sum(eigs ** power))


def theorem2_bound(ch: ChannelCq, prior, n: int, M: int, s: float) -> float:
    """Random-coding bound 2 (M-1)^s (Tr S_bar^{1+s})^n."""
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [0, 1], got {s}")
    avg = ch.average(prior)
    return 2.0 * float(M - 1) ** s * _trace_power(avg.eigenvalues, 1.0 + s) ** n


def theorem2_infimum(ch: ChannelCq, prior, n: int, M: int, points: int = 101):
    """Minimize the random-coding bound over a uniform s-grid on [0, 1],
    refined by golden section around the best grid point. Returns (s, value).
    """
    if M == 1:
        return 1.0, 0.0
    eigs = ch.average(prior).eigenvalues

    def log_bound(s):
        return math.log(2.0) + s * math.log(M - 1) + n * math.log(_trace_power(eigs, 1.0 + s))

    s, neg = _optimize.grid_then_golden(lambda x: -log_bound(x), 0.0, 1.0, points=points,
                                        tol=1e-10)
    return s, math.exp(-neg)


def quasiclassical_gallager_bound(ch: ChannelCq, prior, n: int, M: int, s: float) -> float:
    """(M-1)^s (Tr [sum_i pi_i S_i^{1/(1+s)}]^{1+s})^n for commuting states."""
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [0, 1], got {s}")
    _check_commuting(ch)
    prior = _check_prior(prior, ch.alphabet_size)
    cfg = get_config()
    acc = np.zeros((ch.dim, ch.dim), dtype=complex)
    for p, st in zip(prior, ch.states):
        if p > 0:
            acc += p * matrix_function(st.matrix, lambda w: w ** (1.0 / (1.0 + s)), cfg.eig_floor)
    w = np.clip(np.linalg.eigvalsh(_hermitize(acc)), 0.0, None)
    return float(M - 1) ** s * _trace_power(w, 1.0 + s) ** n


def quasiclassical_gallager_infimum(ch: ChannelCq, prior, n: int, M: int, points: int = 101):
    """Grid minimum of :func:`quasiclassical_gallager_bound` over s. Returns (s, value)."""
    grid = np.linspace(0.0, 1.0, points)
    vals = [quasiclassical_gallager_bound(ch, prior, n, M, float(s)) for s in grid]
    k = int(np.argmin(vals))
    return float(grid[k]), float(vals[k])


def _check_commuting(ch: ChannelCq, tol: float = 1e-9):
    mats = [s.matrix for s in ch.states]
    for a, b in itertools.combinations(mats, 2):
        c = np.linalg.norm(a @ b - b @ a, 2)
        if c > tol:
            raise NotCommuting(f"states do not commute (commutator norm {c:.3e})")


# --------------------------------------------------------------------------
# random coding experiments


@dataclass
class ExperimentResult:
    n: int
    M: int
    trials: int
    seed: int
    decoder: str
    errors: np.ndarray = field(repr=False)
    mean_error: float
    std_error: float
    bound_s_opt: float
    bound_value: float
    gs10_terms: Optional[tuple] = None
    rejections: int = 0

    def to_record(self) -> dict:
        rec = {
            "n": self.n,
            "M": self.M,
            "trials": self.trials,
            "seed": self.seed,
            "decoder": self.decoder,
            "mean_error": self.mean_error,
            "stderr": self.std_error,
            "bound_s_opt": self.bound_s_opt,
            "bound_value": self.bound_value,
        }
        if self.gs10_terms is not None:
            rec["gs10_terms"] = list(self.gs10_terms)
        return rec


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial, keyed by (seed, trial index)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


_BATCH = 1024
_MAX_REJECTIONS = 10 ** 6


def sample_words(rng: np.random.Generator, prior: np.ndarray, n: int, M: int,
                 cost=None, budget=None):
    """Draw M i.i.d. words; with ``cost``/``budget`` reject words whose total
    cost exceeds n * budget. Returns (words, rejections)."""
    k = prior.shape[0]
    if cost is None:
        return rng.choice(k, size=(M, n), p=prior), 0
    cost = np.asarray(cost, dtype=float)
    words = np.empty((M, n), dtype=int)
    rejected = 0
    for m in range(M):
        drawn = 0
        while True:
            batch = rng.choice(k, size=(_BATCH, n), p=prior)
            ok = np.flatnonzero(cost[batch].sum(axis=1) <= n * budget + 1e-12)
            if ok.size:
                words[m] = batch[ok[0]]
                rejected += int(ok[0])
                break
            drawn += _BATCH
            rejected += _BATCH
            if drawn >= _MAX_REJECTIONS:
                raise Infeasible(f"no admissible word after {drawn} draws")
    return words, rejected


def _trial(ch, prior, n, M, seed, trial, decoder, delta, cost, budget, P, mean_h):
    rng = trial_rng(seed, trial)
    words, rejected = sample_words(rng, prior, n, M, cost, budget)
    cb = Codebook(ch, words)
    terms = None
    if decoder == "pure_srm":
        err = srm_error(cb)
        if P is not None:
            Pw = [conditional_typical_projector(None, n, mean_h, delta, cb.word_spectrum(k))
                  for k in range(M)]
            terms = basic_bound_terms(cb, P, Pw)
    else:
        Pw = [conditional_typical_projector(None, n, mean_h, delta, cb.word_spectrum(k))
              for k in range(M)]
        err = average_error(cb, mixed_srm(cb, P, Pw))
        terms = basic_bound_terms(cb, P, Pw)
    return err, terms, rejected


def random_coding_experiment(
    ch: ChannelCq,
    prior,
    n: int,
    M: int,
    trials: int,
    seed: int,
    decoder: str = "pure_srm",
    delta: Optional[float] = None,
    budget: Optional[float] = None,
    mode: str = "plain",
    n_jobs: Optional[int] = None,
) -> ExperimentResult:
    """Monte Carlo average error of random codes, with analytic comparisons.

    Each trial draws its own codebook from a generator keyed by
    ``(seed, trial)``, so results do not depend on ``n_jobs``.

    Args:
        decoder: ``"pure_srm"`` (Gram-matrix SRM) or ``"mixed_srm"``
            (typical-projector decoder, requires ``delta``).
        delta: typicality width; when given, the three basic-bound terms are
            averaged and reported as ``gs10_terms``.
        budget, mode: letter-cost budget; ``"plain"`` only checks the prior,
            ``"conditioned"`` also rejects words over ``n * budget``.
    """
    prior = _check_prior(prior, ch.alphabet_size)
    if decoder not in ("pure_srm", "mixed_srm"):
        raise DomainError(f"unknown decoder {decoder!r}")
    if decoder == "pure_srm" and not ch.is_pure:
        raise MixedStates("pure_srm decoder needs a pure-state channel")
    if decoder == "mixed_srm" and delta is None:
        raise DomainError("mixed_srm decoder needs delta")
    if n < 1 or M < 1 or trials < 1:
        raise DomainError("n, M and trials must be positive")
    if ch.dim ** n > get_config().max_dim:
        raise DimOverflow(f"dimension {ch.dim}**{n} exceeds max_dim={get_config().max_dim}")
    if mode not in ("plain", "conditioned"):
        raise DomainError(f"unknown constraint mode {mode!r}")
    cost = None
    if budget is not None:
        if ch.cost is None:
            raise DomainError("budget given but channel has no letter costs")
        if float(prior @ ch.cost) > budget + get_config().tol_prob:
            raise Infeasible(f"prior has mean cost {float(prior @ ch.cost)} above budget {budget}")
        if mode == "conditioned":
            cost = ch.cost
    P = None
    mean_h = 0.0
    if delta is not None:
        P = typical_projector(ch.average(prior), n, delta).projector
        mean_h = float(sum(p * entropy(s) for p, s in zip(prior, ch.states)))

    args = (ch, prior, n, M, seed)
    tail = (decoder, delta, cost, budget, P, mean_h)
    if n_jobs is None or n_jobs == 1:
        out = [_trial(*args, t, *tail) for t in range(trials)]
    else:
        from joblib import Parallel, delayed
        out = Parallel(n_jobs=n_jobs)(delayed(_trial)(*args, t, *tail) for t in range(trials))

    errors = np.array([o[0] for o in out])
    mean = math.fsum(errors) / trials
    if trials > 1:
        var = math.fsum((errors - mean) ** 2) / (trials - 1)
        stderr = math.sqrt(var / trials)
    else:
        stderr = 0.0
    terms = None
    if out[0][1] is not None:
        terms = tuple(math.fsum(o[1][i] for o in out) / trials for i in range(3))
    s_opt, bound = theorem2_infimum(ch, prior, n, M)
    return ExperimentResult(n, M, trials, seed, decoder, errors, mean, stderr, s_opt, bound,
                            terms, sum(o[2] for o in out))


def exhaustive_expected_error(ch: ChannelCq, prior, n: int, M: int) -> float:
    """Exact expected SRM error over i.i.d. random codebooks, by enumerating
    every ordered M-tuple of words."""
    prior = _check_prior(prior, ch.alphabet_size)
    k = ch.alphabet_size
    words = list(itertools.product(range(k), repeat=n))
    wprob = [math.prod(prior[i] for i in w) for w in words]
    terms = []
    for combo in itertools.product(range(len(words)), repeat=M):
        weight = math.prod(wprob[c] for c in combo)
        if weight == 0:
            continue
        cb = Codebook(ch, np.array([words[c] for c in combo]))
        terms.append(weight * average_error(cb, srm(cb)))
    return math.fsum(terms)
