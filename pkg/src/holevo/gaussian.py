"""Gaussian bosonic channels: thermal entropies, water-filling capacities,
broadband closed forms, pure-state reliability, and Fock-truncated builders.

Energies are in units of hbar*omega*quanta with ``hbar`` explicit (default 1).
Mode capacities are in nats per use; waveform capacities in nats per second.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate, optimize

from . import _optimize
from ._config import get_config
from .exceptions import DimOverflow, DomainError, NoBracket, QuadratureFailure
from .qstate import DensityMatrix, _frozen
from .reliability import ExponentCurve

__all__ = [
    "ModeSpec",
    "GaussianSpec",
    "WaterFillingResult",
    "PhotonDistribution",
    "BroadbandResult",
    "g",
    "planck",
    "single_mode_capacity",
    "photon_distribution",
    "thermal_state",
    "shifted_thermal_state",
    "fock_dim_for",
    "coherent_overlap",
    "coherent_vector",
    "multimode_capacity",
    "waveform_capacity",
    "parse_spectrum",
    "broadband",
    "gaussian_mu",
    "gaussian_mu_ex",
    "gaussian_mu_ds",
    "gaussian_p_opt",
    "q_factor",
    "gaussian_reliability",
]


# --------------------------------------------------------------------------
# thermal entropy


def g(N):
    """Entropy (N+1) log(N+1) - N log N of a thermal state with mean N quanta."""
    arr = np.asarray(N, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"mean quanta must be nonnegative, got {N}")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(arr > 0, np.log1p(arr) + arr * np.log1p(1.0 / np.where(arr > 0, arr, 1.0)),
                       0.0)
    return float(out) if np.ndim(out) == 0 else out


def planck(theta: float, energy):
    """Mean quanta 1/(exp(theta*energy) - 1) of a mode with energy hbar*omega."""
    x = theta * np.asarray(energy, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        return 1.0 / np.expm1(x)


def _g_planck(x):
    """g(planck) written in x = theta*hbar*omega, stable for large x."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        return x / np.expm1(x) - np.log(-np.expm1(-x))


def single_mode_capacity(N: float, E: float) -> float:
    """Capacity g(N+E) - g(N) of one Gaussian mode (nats per use)."""
    if N < 0 or E < 0:
        raise DomainError(f"N and E must be nonnegative, got N={N}, E={E}")
    return max(g(N + E) - g(N), 0.0)


@dataclass(frozen=True)
class PhotonDistribution:
    """Truncated input law pi_m of the photon channel; ``tail`` is the
    probability mass beyond the last stored entry."""

    probs: np.ndarray
    tail: float

    @property
    def mean(self) -> float:
        return float(np.arange(self.probs.shape[0]) @ self.probs)

    def pmf(self, m: int) -> float:
        return float(self.probs[m]) if m < self.probs.shape[0] else 0.0


def photon_distribution(N: float, E: float, tail_tol: float = 1e-15) -> PhotonDistribution:
    """Optimal photon-number input law for noise N and mean signal E.

    pi_m = N/(N+E) [m = 0] + E/(N+E) * geometric law with mean N+E.
    Degenerate budgets (N + E = 0) return the point mass at 0.
    """
    if N < 0 or E < 0:
        raise DomainError(f"N and E must be nonnegative, got N={N}, E={E}")
    if N + E == 0 or E == 0:
        return PhotonDistribution(_frozen(np.array([1.0])), 0.0)
    total = N + E
    ratio = total / (total + 1.0)
    # tail of the geometric part beyond m_max is ratio**(m_max+1)
    m_max = max(int(math.ceil(math.log(tail_tol) / math.log(ratio))), 1)
    m = np.arange(m_max + 1)
    probs = (E / total) * (1.0 / (total + 1.0)) * ratio ** m
    probs[0] += N / total
    tail = (E / total) * ratio ** (m_max + 1)
    return PhotonDistribution(_frozen(probs), float(tail))


# --------------------------------------------------------------------------
# Fock-space builders


def fock_dim_for(N: float, tol: float = 1e-9) -> int:
    """Smallest d with thermal tail (N/(N+1))**d <= tol, capped by max_dim."""
    if N <= 0:
        return 1
    d = int(math.ceil(math.log(tol) / math.log(N / (N + 1.0))))
    cap = get_config().max_dim
    if d > cap:
        raise DimOverflow(f"Fock dimension {d} for N={N} exceeds max_dim={cap}")
    return max(d, 1)


def thermal_tail(N: float, fock_dim: int) -> float:
    """Probability mass of a thermal state outside the first ``fock_dim`` levels."""
    if N <= 0:
        return 0.0
    return (N / (N + 1.0)) ** fock_dim


def _thermal_diag(N: float, fock_dim: int) -> np.ndarray:
    if N == 0:
        d = np.zeros(fock_dim)
        d[0] = 1.0
        return d
    return (1.0 / (N + 1.0)) * (N / (N + 1.0)) ** np.arange(fock_dim)


def thermal_state(N: float, fock_dim: int) -> DensityMatrix:
    """Thermal state truncated to ``fock_dim`` levels and renormalized."""
    if N < 0:
        raise DomainError(f"N must be nonnegative, got {N}")
    if fock_dim < 1:
        raise DomainError("fock_dim must be >= 1")
    if fock_dim > get_config().max_dim:
        raise DimOverflow(f"fock_dim {fock_dim} exceeds max_dim={get_config().max_dim}")
    d = _thermal_diag(N, fock_dim)
    return DensityMatrix(_frozen(np.diag(d / d.sum()).astype(complex)))


def shifted_thermal_state(N: float, shift: int, fock_dim: int) -> DensityMatrix:
    """Thermal state moved up by ``shift`` quanta (|n> -> |n+shift>), truncated."""
    if shift >= fock_dim:
        raise DomainError(f"shift {shift} does not fit in {fock_dim} levels")
    d = np.zeros(fock_dim)
    d[shift:] = _thermal_diag(N, fock_dim - shift)
    return DensityMatrix(_frozen(np.diag(d / d.sum()).astype(complex)))


def coherent_overlap(z: complex, w: complex) -> float:
    """Squared overlap |<z|w>|^2 = exp(-|z - w|^2) of coherent states."""
    return math.exp(-abs(complex(z) - complex(w)) ** 2)


def coherent_vector(z: complex, fock_dim: int) -> np.ndarray:
    """Fock amplitudes exp(-|z|^2/2) z^n / sqrt(n!) for n < fock_dim (unnormalized
    after truncation)."""
    z = complex(z)
    out = np.empty(fock_dim, dtype=complex)
    out[0] = math.exp(-abs(z) ** 2 / 2.0)
    for n in range(1, fock_dim):
        out[n] = out[n - 1] * z / math.sqrt(n)
    return out


# --------------------------------------------------------------------------
# water-filling


@dataclass(frozen=True)
class ModeSpec:
    omega: float
    N: float

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError(f"mode frequency must be positive, got {self.omega}")
        if not self.N >= 0:
            raise DomainError(f"mode noise must be nonnegative, got {self.N}")


@dataclass(frozen=True)
class GaussianSpec:
    """Either a finite list of modes or a noise spectrum on a band."""

    E: float
    modes: Optional[tuple] = None
    spectrum: Optional[Callable] = None
    band: Optional[tuple] = None
    hbar: float = 1.0

    def __post_init__(self):
        if self.E < 0:
            raise DomainError(f"energy budget must be nonnegative, got {self.E}")
        if self.hbar <= 0:
            raise DomainError("hbar must be positive")
        if (self.modes is None) == (self.spectrum is None):
            raise DomainError("give exactly one of modes or spectrum")
        if self.modes is not None:
            object.__setattr__(self, "modes", tuple(
                m if isinstance(m, ModeSpec) else ModeSpec(*m) for m in self.modes))
        if self.spectrum is not None:
            if self.band is None or not 0 < self.band[0] < self.band[1]:
                raise DomainError(f"band must satisfy 0 < low < high, got {self.band}")


@dataclass
class WaterFillingResult:
    theta: float
    allocations: np.ndarray
    capacity: float
    frequencies: np.ndarray = field(default=None, repr=False)
    budget_residual: float = 0.0
    error_estimate: float = 0.0


def multimode_capacity(spec: GaussianSpec) -> WaterFillingResult:
    """Capacity of parallel Gaussian modes under a total energy budget.

    Solves sum_j hbar w_j (N_j(theta) - N_j)_+ = E for the inverse
    temperature theta by bisection; allocations are m_j = (N_j(theta) - N_j)_+.
    """
    if spec.modes is None:
        raise DomainError("multimode_capacity needs a mode list")
    omega = np.array([m.omega for m in spec.modes])
    noise = np.array([m.N for m in spec.modes])
    energy = spec.hbar * omega
    E = spec.E
    if E == 0:
        return WaterFillingResult(math.inf, np.zeros_like(omega), 0.0, omega)

    def spent(theta):
        return float(np.sum(energy * np.clip(planck(theta, energy) - noise, 0.0, None)))

    scale = float(np.mean(energy))
    theta = _optimize.bisect_decreasing(spent, E, 1e-12 / scale, 1e6 / scale)
    alloc = np.clip(planck(theta, energy) - noise, 0.0, None)
    residual = abs(float(energy @ alloc) - E)
    if residual > 1e-8 * E:
        raise NoBracket(f"water level not resolved: budget residual {residual:.3e}")
    level = planck(theta, energy)
    cap = float(np.sum(np.clip(_g_planck(theta * energy) - g(noise), 0.0, None) * (level > noise)))
    return WaterFillingResult(theta, alloc, cap, omega, residual)


def _kinks(diff: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, points: int = 512):
    xs = np.geomspace(lo, hi, points)
    vals = diff(xs)
    roots = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if fa == 0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(optimize.brentq(lambda x: float(diff(np.array([x]))[0]), a, b,
                                         xtol=1e-14, rtol=1e-14))
    return roots


def _integrate(f, lo, hi, breaks, epsabs):
    edges = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    # geometric sub-splitting keeps each panel well resolved on wide bands
    fine = set(edges)
    for a, b in zip(edges[:-1], edges[1:]):
        if b / a > 10:
            fine.update(np.geomspace(a, b, int(math.ceil(math.log10(b / a))) + 1)[1:-1])
    edges = sorted(fine)
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(f, a, b, epsabs=epsabs / len(edges), epsrel=1e-13, limit=200)
        total += val
        err += e
    return total, err


def _as_spectrum(spectrum):
    if isinstance(spectrum, str):
        return parse_spectrum(spectrum)
    return spectrum


def waveform_capacity(spec: GaussianSpec) -> WaterFillingResult:
    """Capacity (nats/second) of the Gaussian waveform channel on a band.

    theta solves (1/2pi) int hbar w (N_theta(w) - N(w))_+ dw = E and the
    capacity is (1/2pi) int (g(N_theta(w)) - g(N(w)))_+ dw. Integrals are
    split at the points where N_theta crosses N.
    """
    if spec.spectrum is None:
        raise DomainError("waveform_capacity needs a noise spectrum")
    noise_fn = _as_spectrum(spec.spectrum)
    lo, hi = spec.band
    hbar, E = spec.hbar, spec.E
    tol = 1e-10 * max(1.0, E)

    def noise(w):
        return np.asarray(noise_fn(np.asarray(w, dtype=float)), dtype=float) * np.ones_like(w)

    if E == 0:
        return WaterFillingResult(math.inf, np.zeros(0), 0.0, np.zeros(0))

    def excess(theta, w):
        return planck(theta, hbar * w) - noise(w)

    def spent(theta):
        breaks = _kinks(lambda w: excess(theta, w), lo, hi)
        f = lambda w: hbar * w * max(float(excess(theta, np.array([w]))[0]), 0.0)
        val, _ = _integrate(f, lo, hi, breaks, tol)
        return val / (2.0 * math.pi)

    scale = hbar * math.sqrt(lo * hi)
    theta = _optimize.bisect_decreasing(spent, E, 1e-12 / scale, 1e6 / scale, rtol=1e-13)
    breaks = _kinks(lambda w: excess(theta, w), lo, hi)

    def cap_integrand(w):
        if float(excess(theta, np.array([w]))[0]) <= 0:
            return 0.0
        return float(_g_planck(theta * hbar * w)) - float(g(float(noise(np.array([w]))[0])))

    cap, err = _integrate(cap_integrand, lo, hi, breaks, tol)
    cap /= 2.0 * math.pi
    err /= 2.0 * math.pi
    if err > 1e3 * tol:
        raise QuadratureFailure(f"capacity integral error estimate {err:.3e}", err)
    residual = abs(spent(theta) - E)
    nodes = np.geomspace(lo, hi, 257)
    alloc = np.clip(excess(theta, nodes), 0.0, None)
    return WaterFillingResult(theta, alloc, max(cap, 0.0), nodes, residual, err)


def parse_spectrum(text: str, hbar: float = 1.0) -> Callable:
    """Named spectra: ``flat:N0`` (constant) or ``planck:thetaP`` (equilibrium
    noise 1/(exp(thetaP*hbar*w) - 1))."""
    kind, _, arg = text.partition(":")
    try:
        value = float(arg)
    except ValueError:
        raise DomainError(f"bad spectrum parameter in {text!r}")
    if kind == "flat":
        if value < 0:
            raise DomainError("flat noise level must be nonnegative")
        return lambda w: np.full(np.shape(w), value)
    if kind == "planck":
        if value <= 0:
            raise DomainError("planck temperature parameter must be positive")
        return lambda w: planck(value, hbar * np.asarray(w, dtype=float))
    raise DomainError(f"unknown spectrum kind {kind!r} (expected flat or planck)")


def tabulated_spectrum(omegas: Sequence[float], values: Sequence[float]) -> Callable:
    """Piecewise-linear noise spectrum through tabulated (omega, N) points."""
    omegas = np.asarray(omegas, dtype=float)
    values = np.asarray(values, dtype=float)
    order = np.argsort(omegas)
    omegas, values = omegas[order], values[order]
    if np.any(values < 0):
        raise DomainError("tabulated noise must be nonnegative")

    def spectrum(w):
        w = np.asarray(w, dtype=float)
        if np.any(w < omegas[0] - 1e-12) or np.any(w > omegas[-1] + 1e-12):
            raise DomainError("frequency outside the tabulated range")
        return np.interp(w, omegas, values)

    spectrum.table_range = (float(omegas[0]), float(omegas[-1]))
    return spectrum


@dataclass(frozen=True)
class BroadbandResult:
    theta_P: float
    sP: float
    C: float


def broadband(P: float, E: float, hbar: float = 1.0) -> BroadbandResult:
    """Infinite-band capacity with equilibrium noise of power P.

    C = sqrt(pi (P+E) / 3 hbar) - sqrt(pi P / 3 hbar) nats per second.
    """
    if P < 0 or E <= 0 or hbar <= 0:
        raise DomainError(f"need P >= 0, E > 0, hbar > 0; got P={P}, E={E}, hbar={hbar}")
    theta_p = math.inf if P == 0 else math.sqrt(math.pi / (12.0 * hbar * P))
    sP = math.sqrt(math.pi * P / (3.0 * hbar))
    C = math.sqrt(math.pi * (P + E) / (3.0 * hbar)) - sP
    return BroadbandResult(theta_p, sP, C)


# --------------------------------------------------------------------------
# reliability of the pure-state Gaussian channel


def _check_p(E, p):
    if E <= 0:
        raise DomainError(f"E must be positive, got {E}")
    if p < 0 or p * E >= 1.0:
        raise DomainError(f"need 0 <= p < 1/E, got p={p}, E={E}")


def gaussian_mu(E: float, s: float, p: float) -> float:
    """(1+s) p E + log[(1 + E - pE)^{1+s} - E^{1+s}]."""
    _check_p(E, p)
    if s < 0:
        raise DomainError(f"s must be nonnegative, got {s}")
    a = 1.0 + E - p * E
    return (1.0 + s) * p * E + math.log(a ** (1.0 + s) - E ** (1.0 + s))


def gaussian_mu_ds(E: float, s: float, p: float) -> float:
    """Analytic derivative of :func:`gaussian_mu` in s."""
    _check_p(E, p)
    a = 1.0 + E - p * E
    num = a ** (1.0 + s) * math.log(a) - E ** (1.0 + s) * math.log(E)
    return p * E + num / (a ** (1.0 + s) - E ** (1.0 + s))


def gaussian_mu_ex(E: float, s: float, p: float) -> float:
    """s {2pE + log[1 + p^2 E^2 - 2pE + 2E(1 - pE)/s]}."""
    _check_p(E, p)
    if s <= 0:
        raise DomainError(f"s must be positive, got {s}")
    return s * (2.0 * p * E + math.log(1.0 + p * p * E * E - 2.0 * p * E + 2.0 * E * (1.0 - p * E) / s))


def q_factor(E: float) -> float:
    """(1 + sqrt(4E^2 + 1)) / 2."""
    return (1.0 + math.sqrt(4.0 * E * E + 1.0)) / 2.0


def gaussian_p_opt(E: float, s: float) -> float:
    """Maximizer in p of :func:`gaussian_mu`: root of (1+E-pE)^s (1-p) = E^s."""
    if E <= 0 or not 0.0 <= s <= 1.0:
        raise DomainError(f"need E > 0 and 0 <= s <= 1, got E={E}, s={s}")
    if s == 0:
        return 0.0
    if s == 1:
        return 1.0 + 1.0 / E - q_factor(E) / E

    def h(p):
        return s * math.log(1.0 + E - p * E) + math.log(1.0 - p) - s * math.log(E)

    hi = min(1.0, 1.0 / E)
    hi_eval = hi * (1.0 - 1e-15)
    if h(hi_eval) > 0:
        return hi_eval
    return optimize.brentq(h, 0.0, hi_eval, xtol=1e-15, rtol=1e-15)


def gaussian_expurgated_p(E: float, s: float) -> float:
    """Stationary p of :func:`gaussian_mu_ex`: s^{-1} + E^{-1} - E^{-1} q(E/s)."""
    return 1.0 / s + 1.0 / E - q_factor(E / s) / E


def gaussian_knots(E: float) -> dict:
    """Rates bounding the linear portion and related constants."""
    q = q_factor(E)
    p1 = 1.0 + 1.0 / E - q / E
    mu1 = 2.0 * (E + 1.0 - q) + math.log(q)
    upper = E + 1.0 - q + (q * q * math.log(q) - E * E * math.log(E)) / (q * q - E * E)
    capacity = (E + 1.0) * math.log(E + 1.0) - E * math.log(E)
    return {"q": q, "p1": p1, "mu1": mu1, "lower": math.log(q), "upper": upper,
            "capacity": capacity}


def gaussian_reliability(E: float, rates: Sequence[float]) -> ExponentCurve:
    """Exponent bounds for the pure-state Gaussian channel with the Gaussian prior.

    Below log q(E) the expurgated closed form 2E(1 - sqrt(1 - e^{-R})) holds;
    up to the derivative of mu at s=1 the bound is linear; above it the
    random-coding exponent is found numerically.
    """
    if E <= 0:
        raise DomainError(f"E must be positive, got {E}")
    kn = gaussian_knots(E)
    rates = np.asarray(rates, dtype=float).reshape(-1)
    if np.any(rates <= 0) or np.any(rates >= kn["capacity"]):
        raise DomainError(f"rates must lie in (0, {kn['capacity']})")

    def mu_star(s):
        return gaussian_mu(E, s, gaussian_p_opt(E, s))

    n = rates.shape[0]
    Er, Eex, Eall = np.zeros(n), np.zeros(n), np.zeros(n)
    s_opt, p_opt = np.zeros(n), np.zeros(n)
    regime = []
    for i, R in enumerate(rates):
        s_r, er = _optimize.grid_then_golden(lambda s: mu_star(s) - s * R, 0.0, 1.0,
                                             points=21, tol=1e-12)
        if R < kn["lower"]:
            s_ex = E / math.sqrt(math.exp(2 * R) - math.exp(R))
            eex = 2.0 * E * (1.0 - math.sqrt(1.0 - math.exp(-R)))
            p_ex = gaussian_expurgated_p(E, s_ex)
        else:
            s_ex, p_ex = 1.0, kn["p1"]
            eex = kn["mu1"] - R
        if R <= kn["upper"]:
            # s = 1 is optimal for the random-coding branch here
            er_lin = kn["mu1"] - R
            if er_lin >= er:
                s_r, er = 1.0, er_lin
        Er[i], Eex[i] = max(er, 0.0), max(eex, 0.0)
        if R < kn["lower"]:
            regime.append("expurgated")
            Eall[i], s_opt[i], p_opt[i] = Eex[i], s_ex, p_ex
        elif R <= kn["upper"]:
            regime.append("linear")
            Eall[i], s_opt[i], p_opt[i] = max(Er[i], Eex[i]), 1.0, kn["p1"]
        else:
            regime.append("random_coding")
            Eall[i], s_opt[i], p_opt[i] = Er[i], s_r, gaussian_p_opt(E, s_r)
    return ExponentCurve(rates, Er, Eex, Eall, regime, s_opt, p_opt, knots=kn)
