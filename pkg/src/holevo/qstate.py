"""Finite-dimensional operator core: states, entropies, tensor products.

All logarithms are natural (nats). The Hermitian eigendecomposition is the
only spectral primitive; every matrix function below is defined through it,
with eigenvalues at or below ``eig_floor * lambda_max`` treated as zero.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from ._config import get_config
from .exceptions import (
    BadNorm,
    BadProbabilities,
    BadTrace,
    DimMismatch,
    DimOverflow,
    NotHermitian,
    NotPSD,
)

__all__ = [
    "DensityMatrix",
    "PureState",
    "Ensemble",
    "DecisionRule",
    "make_density",
    "entropy",
    "relative_entropy",
    "tensor",
    "average_state",
    "spectrum",
    "matrix_function",
    "pinv_sqrt",
    "sqrtm_psd",
    "support_projector",
    "shannon_entropy",
]


# --------------------------------------------------------------------------
# spectral utilities


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


def _hermitize(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def spectrum(a: np.ndarray):
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix."""
    w, v = np.linalg.eigh(a)
    return w, v


def _floor(w: np.ndarray, rel: float) -> float:
    if w.size == 0:
        return 0.0
    return rel * max(float(np.max(np.abs(w))), 0.0)


def matrix_function(
    a: np.ndarray,
    func: Callable[[np.ndarray], np.ndarray],
    rel_floor: Optional[float] = None,
) -> np.ndarray:
    """Apply ``func`` to the positive part of the spectrum of Hermitian ``a``.

    Eigenvalues at or below ``rel_floor * lambda_max`` are mapped to zero,
    so e.g. ``func=np.log`` yields the log on the support only.
    """
    if rel_floor is None:
        rel_floor = get_config().eig_floor
    w, v = spectrum(_hermitize(np.asarray(a, dtype=complex)))
    keep = w > _floor(w, rel_floor)
    fw = np.zeros_like(w)
    fw[keep] = func(w[keep])
    return (v * fw) @ v.conj().T


def pinv_sqrt(a: np.ndarray, rel_floor: Optional[float] = None) -> np.ndarray:
    """Generalized inverse square root, zero on the (numerical) null space."""
    if rel_floor is None:
        rel_floor = get_config().pinv_floor
    return matrix_function(a, lambda w: 1.0 / np.sqrt(w), rel_floor)


def sqrtm_psd(a: np.ndarray) -> np.ndarray:
    w, v = spectrum(_hermitize(np.asarray(a, dtype=complex)))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def support_projector(a: np.ndarray, rel_floor: Optional[float] = None) -> np.ndarray:
    return matrix_function(a, np.ones_like, rel_floor)


def shannon_entropy(p) -> float:
    """Shannon entropy in nats with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density operator. Build with :func:`make_density`."""

    matrix: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def eigh(self):
        w, v = spectrum(self.matrix)
        w = np.clip(w, 0.0, None)
        w.flags.writeable = False
        v.flags.writeable = False
        return w, v

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigh[0]

    @cached_property
    def rank(self) -> int:
        w = self.eigenvalues
        return int(np.count_nonzero(w > _floor(w, get_config().eig_floor)))

    @property
    def is_pure(self) -> bool:
        return self.rank == 1

    def vector(self) -> np.ndarray:
        """Leading eigenvector (the state vector when the state is pure)."""
        w, v = self.eigh
        return v[:, np.argmax(w)].copy()

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim}, rank={self.rank})"


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > get_config().tol_norm:
            raise BadNorm(f"state vector norm is {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density(self) -> DensityMatrix:
        psi = self.amplitudes
        return make_density(np.outer(psi, psi.conj()))

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        a = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(a / np.linalg.norm(a))


def _as_density(state) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.density()
    return make_density(state)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Finite list of (probability, state, optional cost) letters."""

    probs: np.ndarray
    states: tuple
    costs: Optional[np.ndarray] = None

    def __post_init__(self):
        tol = get_config().tol_prob
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        states = tuple(_as_density(s) for s in self.states)
        if len(states) == 0:
            raise BadProbabilities("ensemble must contain at least one letter")
        if probs.shape[0] != len(states):
            raise DimMismatch(f"{probs.shape[0]} probabilities for {len(states)} states")
        if np.any(probs < -tol) or np.any(probs > 1 + tol):
            raise BadProbabilities(f"probabilities outside [0, 1]: {probs}")
        if abs(probs.sum() - 1.0) > tol:
            raise BadProbabilities(f"probabilities sum to {probs.sum()!r}")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise DimMismatch(f"states have differing dimensions {sorted(dims)}")
        costs = self.costs
        if costs is not None:
            costs = np.asarray(costs, dtype=float).reshape(-1)
            if costs.shape[0] != len(states):
                raise DimMismatch("cost length does not match number of letters")
            if np.any(costs < 0):
                raise BadProbabilities("costs must be nonnegative")
            costs = _frozen(costs)
        object.__setattr__(self, "probs", _frozen(np.clip(probs, 0.0, 1.0)))
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "costs", costs)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True, eq=False)
class DecisionRule:
    """POVM elements X_1..X_k with sum <= I; X_0 = I - sum is implicit."""

    elements: tuple

    def __post_init__(self):
        cfg = get_config()
        elems = [np.asarray(x, dtype=complex) for x in self.elements]
        if not elems:
            raise DimMismatch("decision rule needs at least one element")
        d = elems[0].shape[0]
        for x in elems:
            if x.shape != (d, d):
                raise DimMismatch(f"element of shape {x.shape}, expected {(d, d)}")
            herm = np.max(np.abs(x - x.conj().T)) if d else 0.0
            if herm > cfg.tol_herm:
                raise NotHermitian(f"decision element deviates from Hermitian by {herm:.3e}")
            lo = np.linalg.eigvalsh(_hermitize(x))[0]
            if lo < -cfg.tol_psd:
                raise NotPSD(f"decision element has eigenvalue {lo:.3e}")
        total = _hermitize(sum(elems))
        lo = np.linalg.eigvalsh(np.eye(d) - total)[0]
        if lo < -cfg.tol_povm:
            raise NotPSD(f"sum of decision elements exceeds identity by {-lo:.3e}")
        object.__setattr__(self, "elements", tuple(_frozen(_hermitize(x)) for x in elems))

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self):
        return len(self.elements)

    @property
    def inconclusive(self) -> np.ndarray:
        """The evasion element X_0 = I - sum_j X_j."""
        return np.eye(self.dim) - sum(self.elements)


# --------------------------------------------------------------------------
# operations


def make_density(entries) -> DensityMatrix:
    """Validate a square array as a density matrix.

    Small negative eigenvalues (within ``tol_psd``) are clipped to zero and
    the result renormalized; otherwise the entries are kept exactly.

    Raises:
        NotHermitian, NotPSD, BadTrace: naming the violated invariant.
    """
    cfg = get_config()
    a = np.array(entries, dtype=complex, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimMismatch(f"density matrix must be square and nonempty, got shape {a.shape}")
    herm = float(np.max(np.abs(a - a.conj().T)))
    if herm > cfg.tol_herm:
        raise NotHermitian(f"matrix deviates from Hermitian by {herm:.3e} > {cfg.tol_herm:.1e}")
    a = _hermitize(a)
    tr = float(np.real(np.trace(a)))
    if abs(tr - 1.0) > cfg.tol_trace:
        raise BadTrace(f"trace is {tr!r}, deviates from 1 by {abs(tr - 1.0):.3e}")
    w, v = spectrum(a)
    if w[0] < -cfg.tol_psd:
        raise NotPSD(f"minimum eigenvalue {w[0]:.3e} < -{cfg.tol_psd:.1e}")
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        a = (v * w) @ v.conj().T
        drift = abs(w.sum() - 1.0)
        if drift < cfg.tol_trace:
            a = a / w.sum()
    return DensityMatrix(_frozen(a))


def entropy(state: DensityMatrix) -> float:
    """Von Neumann entropy -Tr S log S in nats."""
    w = state.eigenvalues
    w = w[w > _floor(w, get_config().eig_floor)]
    return max(float(-np.sum(w * np.log(w))), 0.0)


def relative_entropy(s: DensityMatrix, t: DensityMatrix) -> float:
    """Quantum relative entropy Tr S (log S - log T); ``inf`` off support."""
    if s.dim != t.dim:
        raise DimMismatch(f"dimensions {s.dim} and {t.dim} differ")
    cfg = get_config()
    p, u = s.eigh
    q, v = t.eigh
    ps = p > _floor(p, cfg.eig_floor)
    qs = q > _floor(q, cfg.eig_floor)
    p, u = p[ps], u[:, ps]
    q, v = q[qs], v[:, qs]
    overlap = np.abs(v.conj().T @ u) ** 2  # [j, i] = |<v_j|u_i>|^2
    outside = 1.0 - overlap.sum(axis=0)
    if np.any(outside > cfg.tol_support):
        return float("inf")
    value = float(np.sum(p * np.log(p)) - p @ (overlap.T @ np.log(q)))
    return max(value, 0.0)


def tensor(s: DensityMatrix, t: DensityMatrix) -> DensityMatrix:
    """Kronecker product of two states."""
    d = s.dim * t.dim
    if d > get_config().max_dim:
        raise DimOverflow(f"product dimension {d} exceeds max_dim={get_config().max_dim}")
    return DensityMatrix(_frozen(np.kron(s.matrix, t.matrix)))


def tensor_power(s: DensityMatrix, n: int) -> DensityMatrix:
    if s.dim ** n > get_config().max_dim:
        raise DimOverflow(f"dimension {s.dim}**{n} exceeds max_dim={get_config().max_dim}")
    out = s.matrix
    for _ in range(n - 1):
        out = np.kron(out, s.matrix)
    return DensityMatrix(_frozen(out))


def average_state(ens: Ensemble) -> DensityMatrix:
    """The mixture sum_i pi_i S_i."""
    return _mixture(ens.probs, ens.states)


def _mixture(weights: Sequence[float], states: Sequence[DensityMatrix]) -> DensityMatrix:
    acc = np.zeros_like(states[0].matrix)
    for w, s in zip(weights, states):
        if w:
            acc = acc + w * s.matrix
    acc = _hermitize(acc)
    tr = np.real(np.trace(acc))
    return DensityMatrix(_frozen(acc / tr))
