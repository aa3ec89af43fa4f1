import math

import numpy as np
import pytest

from holevo.exceptions import DomainError, MixedStates, NoCost
from holevo.info import ChannelCq, binary_channel, binary_pure_channel, holevo_chi
from holevo.qstate import make_density
from holevo.reliability import (exponents, mu, mu_constrained, mu_ex, mu_ex_constrained,
                                mu_ex_prime, mu_prime)

from conftest import random_vector

HALF = [0.5, 0.5]


def binary_oracle(eps, R):
    """Piecewise closed-form lower bound for the binary channel at pi = 1/2."""
    q = binary_channel(eps)
    if R >= q.mu_prime_1:
        return _golden(lambda s: -math.log(((1 - eps) / 2) ** (1 + s) + ((1 + eps) / 2) ** (1 + s))
                       - s * R, 0.0, 1.0)
    if R >= q.mutilde_prime_1:
        return q.Ctilde - R
    return _expand(lambda s: -s * math.log(0.5 + 0.5 * eps ** (2 / s)) - s * R)


def _golden(f, a, b, tol=1e-13):
    from scipy.optimize import minimize_scalar
    r = minimize_scalar(lambda s: -f(s), bounds=(a, b), method="bounded",
                        options={"xatol": tol})
    return max(-r.fun, f(a), f(b))


def _expand(f):
    hi = 2.0
    while f(2 * hi) > f(hi):
        hi *= 2
    return _golden(f, 1.0, 2 * hi)


def test_mu_examples():
    ch = binary_pure_channel(0.4)
    assert mu(ch, HALF, 0.0) == pytest.approx(0.0, abs=1e-15)
    for s in (0.2, 0.7):
        lam = np.array([0.3, 0.7])
        assert mu(ch, HALF, s) == pytest.approx(-math.log(np.sum(lam ** (1 + s))), abs=1e-14)
    avg = ch.average(HALF).matrix
    assert mu(ch, HALF, 1.0) == pytest.approx(-math.log(np.trace(avg @ avg).real), abs=1e-14)
    with pytest.raises(DomainError):
        mu(ch, HALF, -0.1)


def test_mu_ex_examples():
    eps = 0.4
    ch = binary_pure_channel(eps)
    assert mu_ex(ch, HALF, 1.0) == pytest.approx(mu(ch, HALF, 1.0), abs=1e-12)
    for s in (1.0, 2.5):
        assert mu_ex(ch, HALF, s) == pytest.approx(-s * math.log(0.5 + 0.5 * eps ** (2 / s)),
                                                   abs=1e-14)
    orth = ChannelCq.from_vectors(np.eye(3))
    p = np.array([0.2, 0.3, 0.5])
    assert mu_ex(orth, p, 3.0) == pytest.approx(-3 * math.log(np.sum(p ** 2)), abs=1e-14)
    with pytest.raises(DomainError):
        mu_ex(ch, HALF, 0.5)
    with pytest.raises(MixedStates):
        mu_ex(ChannelCq((make_density(np.eye(2) / 2),)), [1.0], 1.0)


def test_analytic_derivatives_match_finite_differences():
    rng = np.random.default_rng(6)
    ch = ChannelCq.from_vectors([random_vector(rng, 3) for _ in range(3)])
    p = np.array([0.2, 0.5, 0.3])
    h = 1e-6
    for s in (0.1, 0.5, 0.9):
        fd = (mu(ch, p, s + h) - mu(ch, p, s - h)) / (2 * h)
        assert mu_prime(ch, p, s) == pytest.approx(fd, abs=1e-7)
    for s in (1.5, 4.0):
        fd = (mu_ex(ch, p, s + h) - mu_ex(ch, p, s - h)) / (2 * h)
        assert mu_ex_prime(ch, p, s) == pytest.approx(fd, abs=1e-7)


@pytest.mark.parametrize("seed", range(8))
def test_mu_properties(seed):
    rng = np.random.default_rng(seed)
    k, d = int(rng.integers(2, 5)), int(rng.integers(2, 4))
    ch = ChannelCq.from_vectors([random_vector(rng, d) for _ in range(k)])
    p = rng.dirichlet(np.ones(k))
    h = 1e-5
    fd = (mu(ch, p, h) - mu(ch, p, 0.0)) / h
    chi = holevo_chi(ch.ensemble(p))
    assert fd == pytest.approx(chi, rel=1e-4)
    grid = np.linspace(0, 1, 21)
    vals = np.array([mu(ch, p, s) for s in grid])
    assert np.all(vals[:-2] - 2 * vals[1:-1] + vals[2:] <= 1e-6)
    assert mu_ex(ch, p, 1.0) == pytest.approx(mu(ch, p, 1.0), abs=1e-10)


def test_constrained_forms():
    rng = np.random.default_rng(1)
    vecs = [random_vector(rng, 2) for _ in range(2)]
    ch = ChannelCq.from_vectors(vecs, cost=[0.5, 2.0])
    p = np.array([0.6, 0.4])
    assert mu_constrained(ch, p, 0.4, 0.0, 1.0) == mu(ch, p, 0.4)
    assert mu_ex_constrained(ch, p, 2.0, 0.0, 1.0) == mu_ex(ch, p, 2.0)
    flat = ChannelCq.from_vectors(vecs, cost=[1.0, 1.0])
    for pp in (0.3, 2.0):
        assert mu_constrained(flat, p, 0.4, pp, 1.0) == pytest.approx(mu(flat, p, 0.4), abs=1e-14)
        assert mu_ex_constrained(flat, p, 2.0, pp, 1.0) == pytest.approx(mu_ex(flat, p, 2.0),
                                                                        abs=1e-14)
    # two-letter oracle at s = 1: -log Tr A^2 with A the tilted mixture
    pp, E = 0.7, 1.0
    w = p * np.exp(pp * (np.array([0.5, 2.0]) - E))
    A = sum(wi * np.outer(v, v.conj()) for wi, v in zip(w, vecs))
    assert mu_constrained(ch, p, 1.0, pp, E) == pytest.approx(
        -math.log(np.trace(A @ A).real), abs=1e-13)
    with pytest.raises(NoCost):
        mu_constrained(binary_pure_channel(0.3), p, 0.5, 0.2, 1.0)


def test_binary_exponents_match_piecewise_oracle():
    eps = 0.5
    q = binary_channel(eps)
    rates = np.linspace(0.01, q.C - 0.01, 50)
    curve = exponents(binary_pure_channel(eps), rates, prior=HALF)
    for R, e, reg in zip(rates, curve.E, curve.regime):
        assert e == pytest.approx(binary_oracle(eps, R), abs=1e-5)
        if q.mutilde_prime_1 < R < q.mu_prime_1:
            assert reg == "linear"
            assert e == pytest.approx(q.Ctilde - R, abs=1e-9)
    assert np.all(np.diff(curve.Er) <= 1e-8)
    assert np.all(np.diff(curve.Eex) <= 1e-8)
    assert np.all(curve.Er >= 0) and np.all(curve.Eex >= 0)


def test_exponents_near_capacity_and_optimized_prior():
    eps = 0.5
    C = binary_channel(eps).C
    curve = exponents(binary_pure_channel(eps), [C - 1e-3])
    assert curve.Er[0] < 1e-5
    assert curve.regime[0] == "random_coding"


def test_exponents_orthogonal_channel():
    orth = ChannelCq.from_vectors(np.eye(2))
    rates = [0.1, 0.4, 0.6]
    curve = exponents(orth, rates, prior=HALF)
    # overlaps vanish, so the expurgated objective grows linearly without bound
    assert np.all(np.isinf(curve.Eex))
    for R, er in zip(rates, curve.Er):
        oracle = _golden(lambda s: s * math.log(2) - s * R, 0.0, 1.0)
        assert er == pytest.approx(oracle, abs=1e-9)


def test_exponents_with_budget():
    ch = ChannelCq(binary_pure_channel(0.5).states, cost=[0.0, 1.0])
    loose = exponents(ch, [0.1, 0.3], budget=1.0)
    free = exponents(binary_pure_channel(0.5), [0.1, 0.3])
    np.testing.assert_allclose(loose.E, free.E, atol=1e-9)
    # a binding budget pins the prior to the face with mean cost 0.2
    face = [0.8, 0.2]
    tight = exponents(ch, [0.1, 0.3], budget=0.2)
    untilted = exponents(binary_pure_channel(0.5), [0.1, 0.3], prior=face)
    assert np.all(tight.E >= untilted.E - 1e-9)
    assert np.all(tight.E <= free.E + 1e-9)
    assert np.all(tight.p_opt >= 0) and np.all(np.isfinite(tight.E))
    pinned = exponents(ch, [0.1, 0.3], budget=0.2, prior=face)
    np.testing.assert_allclose(pinned.E, tight.E, atol=1e-7)
    with pytest.raises(DomainError):
        exponents(ch, [0.1], budget=0.2, prior=HALF)


def test_exponents_rejects_bad_input():
    with pytest.raises(MixedStates):
        exponents(ChannelCq((make_density(np.eye(2) / 2),)), [0.1])
    with pytest.raises(DomainError):
        exponents(binary_pure_channel(0.5), [0.0])


def test_curve_csv():
    curve = exponents(binary_pure_channel(0.5), [0.1, 0.3], prior=HALF)
    text = curve.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "R,Er,Eex,E,regime,s_opt,p_opt"
    assert float(lines[1].split(",")[3]) == curve.E[0]
    bits = curve.to_csv(1 / math.log(2)).strip().split("\n")
    assert float(bits[2].split(",")[0]) == pytest.approx(0.3 / math.log(2), rel=1e-15)
