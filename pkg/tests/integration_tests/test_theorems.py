import itertools
import time

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bench.synthetic import random_dictionaries
from metrics.frame import kron_mutual_coherence, mutual_coherence, ric_bruteforce
from recovery.omp import kron_omp
from recovery.operator import KronOperator
from sensing.design import DesignConfig, approach2_gradient, approach2_objective, design_separable, gaussian_sensing
from tensor.ops import kron_factors, multi_mode_product, unvec, vec


def _reference_omp(a, y, k):
    """Textbook OMP on an explicit matrix."""
    support = []
    coef = np.zeros(0)
    residual = y.copy()
    for _ in range(k):
        corr = np.abs(a.T @ residual)
        corr[support] = -1
        support.append(int(np.argmax(corr)))
        coef = np.linalg.lstsq(a[:, support], y, rcond=None)[0]
        residual = y - a[:, support] @ coef
    x = np.zeros(a.shape[1])
    x[support] = coef
    return x


@pytest.mark.parametrize("nhat,m,n", [(64, 10, 32), (256, 40, 128)])
def test_separable_minimum(nhat, m, n):
    rng = np.random.default_rng(nhat)
    psis = random_dictionaries((n, n), (nhat, nhat), rng)

    start = time.perf_counter()
    result = design_separable(psis, (m, m))
    elapsed = time.perf_counter() - start

    assert result.objective_trace[0] == pytest.approx(nhat * nhat - m * m, rel=1e-5)
    for phi, psi in zip(result.raw_phis, psis):
        a = phi @ psi
        assert np.linalg.norm(a @ a.T - np.eye(m)) < 1e-9
    assert elapsed < 5


def test_kronecker_coherence_and_ric():
    rng = np.random.default_rng(2)

    for _ in range(100):
        a1, a2 = random_dictionaries((6, 6), (10, 10), rng)
        product = kron_factors([a1, a2])

        assert mutual_coherence(product) == pytest.approx(max(mutual_coherence(a1), mutual_coherence(a2)), abs=1e-12)
        assert kron_mutual_coherence([a1, a2]) == pytest.approx(mutual_coherence(product), abs=1e-12)

        bound = (1 + ric_bruteforce(a1, 2)) * (1 + ric_bruteforce(a2, 2)) - 1
        assert ric_bruteforce(product, 2) <= bound + 1e-12


def test_gradient_finite_differences():
    rng = np.random.default_rng(3)
    h = 1e-6
    settings = list(itertools.product((0.0, 1.0, 3.0), (0.0, 0.2, 0.8, 1.0)))

    for instance in range(50):
        order = 3 if instance == 0 else 2
        ns = rng.integers(3, 6, size=order)
        nhats = ns + rng.integers(0, 3, size=order)
        ms = [int(rng.integers(1, n)) for n in ns]
        psis = random_dictionaries(ns, nhats, rng)
        phis = gaussian_sensing(ms, ns, rng)
        alpha, beta = settings[instance % len(settings)]
        cfg = DesignConfig(alpha=alpha, beta=beta)

        for mode in range(1, order + 1):
            expected = np.zeros_like(phis[mode - 1])
            for idx in np.ndindex(expected.shape):
                plus = [p.copy() for p in phis]
                minus = [p.copy() for p in phis]
                plus[mode - 1][idx] += h
                minus[mode - 1][idx] -= h
                expected[idx] = (approach2_objective(plus, psis, cfg) - approach2_objective(minus, psis, cfg)) / (2 * h)

            got = approach2_gradient(phis, psis, cfg, mode)
            assert np.max(np.abs(got - expected)) / np.max(np.abs(expected)) < 1e-5, (instance, mode, alpha, beta)


def test_kron_omp_matches_explicit_omp():
    rng = np.random.default_rng(4)

    for instance in range(200):
        order = 3 if instance % 10 == 0 else 2
        nhats = rng.integers(4, 11 if order == 3 else 33, size=order)
        ms = [int(rng.integers(3, 9)) for _ in range(order)]
        factors = [rng.standard_normal((m, nhat)) for m, nhat in zip(ms, nhats)]
        assert int(np.prod(nhats)) <= 1024

        explicit = kron_factors(factors)
        k = int(rng.integers(1, 5))
        truth = np.zeros(explicit.shape[1])
        truth[rng.choice(truth.size, k, replace=False)] = rng.standard_normal(k)
        y = explicit @ truth
        if instance % 2:
            y = y + 0.05 * rng.standard_normal(y.size)

        got = kron_omp(KronOperator(factors), unvec(y, ms), k)
        expected = _reference_omp(explicit, y, k)

        assert set(got.linear_indices.tolist()) == set(np.flatnonzero(expected).tolist()), instance
        assert_allclose(vec(got.to_dense()), expected, atol=1e-10)


@pytest.mark.parametrize("shape,ms", [((5, 4), (3, 2)), ((4, 3, 5), (2, 3, 2))])
def test_mode_product_model(shape, ms):
    rng = np.random.default_rng(5)

    for _ in range(20):
        x = rng.standard_normal(shape)
        phis = [rng.standard_normal((m, n)) for m, n in zip(ms, shape)]

        assert_allclose(vec(multi_mode_product(x, phis)), kron_factors(phis) @ vec(x), atol=1e-10)
