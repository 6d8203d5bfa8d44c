import numpy as np
import pytest

from metrics.frame import frame_objective, frame_objective_explicit, frame_report, kron_mutual_coherence, \
    mutual_coherence, ric_bruteforce
from tensor.ops import kron_factors
from util.errors import InvalidArgument, ResourceLimit


@pytest.fixture()
def rng():
    return np.random.default_rng(17)


def test_mutual_coherence():
    a = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])

    assert mutual_coherence(a) == pytest.approx(1 / np.sqrt(2))
    assert mutual_coherence(a, normalize=False) == pytest.approx(1.0)


def test_mutual_coherence_zero_column():
    with pytest.raises(InvalidArgument):
        mutual_coherence(np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_kron_mutual_coherence(rng):
    a1, a2 = rng.standard_normal((4, 6)), rng.standard_normal((3, 5))

    expected = mutual_coherence(kron_factors([a1, a2]))

    assert kron_mutual_coherence([a1, a2]) == pytest.approx(expected, abs=1e-12)
    assert kron_mutual_coherence([a1, a2]) == pytest.approx(max(mutual_coherence(a1), mutual_coherence(a2)),
                                                            abs=1e-12)


def test_kron_mutual_coherence_raw(rng):
    factors = [rng.standard_normal((3, 4)), rng.standard_normal((2, 3)), rng.standard_normal((2, 2))]

    expected = mutual_coherence(kron_factors(factors), normalize=False)

    assert kron_mutual_coherence(factors, normalize=False) == pytest.approx(expected, rel=1e-12)


def test_kron_coherence_product_on_fully_distinct_pairs(rng):
    a1, a2 = rng.standard_normal((4, 6)), rng.standard_normal((3, 5))
    n1 = a1 / np.linalg.norm(a1, axis=0)
    n2 = a2 / np.linalg.norm(a2, axis=0)
    g1 = np.abs(n1.T @ n1)
    g2 = np.abs(n2.T @ n2)
    np.fill_diagonal(g1, 0)
    np.fill_diagonal(g2, 0)

    # Entries of the product Gram that are off-diagonal in both modes
    assert np.max(np.kron(g2, g1)) == pytest.approx(mutual_coherence(a1) * mutual_coherence(a2), abs=1e-12)


class TestRic:

    def test_orthonormal(self):
        assert ric_bruteforce(np.eye(4), 2) == pytest.approx(0, abs=1e-12)

    def test_known_value(self):
        a = np.array([[1.0, 0.6], [0.0, 0.8]])

        # Gram eigenvalues 1 +- 0.6
        assert ric_bruteforce(a, 2) == pytest.approx(0.6)

    def test_kronecker_bound(self, rng):
        a1 = rng.standard_normal((3, 5))
        a2 = rng.standard_normal((3, 5))
        a1 /= np.linalg.norm(a1, axis=0)
        a2 /= np.linalg.norm(a2, axis=0)

        delta = ric_bruteforce(kron_factors([a1, a2]), 2)

        assert delta <= (1 + ric_bruteforce(a1, 2)) * (1 + ric_bruteforce(a2, 2)) - 1 + 1e-12

    def test_cap(self, rng):
        with pytest.raises(ResourceLimit):
            ric_bruteforce(rng.standard_normal((5, 30)), 5, cap=1000)

    def test_invalid_k(self):
        with pytest.raises(InvalidArgument):
            ric_bruteforce(np.eye(3), 4)


def test_frame_objective(rng):
    psis = [rng.standard_normal((4, 6)), rng.standard_normal((3, 5))]
    phis = [rng.standard_normal((2, 4)), rng.standard_normal((2, 3))]

    assert frame_objective(psis, phis) == pytest.approx(frame_objective_explicit(psis, phis), rel=1e-10)


def test_frame_objective_mismatch(rng):
    with pytest.raises(InvalidArgument):
        frame_objective([rng.standard_normal((4, 6))], [rng.standard_normal((2, 3))])


def test_frame_report():
    phi = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    psi = np.eye(3)

    report = frame_report(phi, psi, normalize=False)

    assert report.mutual_coherence == 0
    assert report.parseval_deviation == pytest.approx(0)
    assert report.sensing_energy == pytest.approx(2)
    # A^T A = diag(1, 1, 0)
    assert report.gram_identity_deviation == pytest.approx(1)
