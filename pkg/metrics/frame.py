"""
Frame-quality measures for equivalent sensing matrices A = Phi Psi and their Kronecker products.

Kronecker quantities are evaluated factor-wise using Gram(A_n kron ... kron A_1) = G_n kron ... kron G_1 together with
trace and Frobenius-norm multiplicativity, so the big matrices are only formed by the *_explicit reference versions.
"""

import itertools
from collections import namedtuple
from typing import Sequence

import numpy as np
from scipy.special import comb

from tensor.ops import kron_factors
from util.detail import LOGGER
from util.errors import InvalidArgument, ResourceLimit, require

RIC_ENUMERATION_CAP = 200000
_RIC_BATCH = 4096

FrameReport = namedtuple('FrameReport', (
    'mutual_coherence',
    'gram_identity_deviation',  # ||I - A^T A||_F^2
    'sensing_energy',  # ||Phi||_F^2
    'parseval_deviation',  # ||A A^T - I||_F^2
))


def _matrix(a, name='matrix') -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    require(a.ndim == 2, f"{name} must be 2-D, got shape {a.shape}")
    return a


def _normalized_columns(a: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0):
        raise InvalidArgument(f"Zero column(s) {np.flatnonzero(norms == 0).tolist()} cannot be normalized")
    return a / norms


def mutual_coherence(a, normalize: bool = True) -> float:
    """
    Largest absolute inner product between distinct columns.

    :param a: Matrix with at least two columns
    :param normalize: Normalize columns to unit norm first. With False the raw inner products are used.
    """
    a = _matrix(a)
    require(a.shape[1] >= 2, "Mutual coherence needs at least two columns")
    if normalize:
        a = _normalized_columns(a)
    gram = np.abs(a.T @ a)
    np.fill_diagonal(gram, 0)
    return float(gram.max())


def kron_mutual_coherence(factors: Sequence[np.ndarray], normalize: bool = True) -> float:
    """
    Mutual coherence of A_n kron ... kron A_1 computed from the factors.

    A Gram entry of the product is the product of one Gram entry per factor, and distinct column pairs differ in at
    least one mode, so the result is the largest product that takes an off-diagonal entry on a non-empty set of modes
    and a diagonal entry everywhere else. With unit-norm columns this is max_i mu(A_i).
    """
    factors = [_matrix(f, 'factor') for f in factors]
    require(len(factors) >= 1, "Need at least one factor")
    require(int(np.prod([f.shape[1] for f in factors])) >= 2, "Mutual coherence needs at least two columns")

    off, diag = [], []
    for f in factors:
        if normalize:
            f = _normalized_columns(f)
        gram = np.abs(f.T @ f)
        diag.append(float(np.max(np.diag(gram))))
        np.fill_diagonal(gram, 0)
        off.append(float(gram.max()) if f.shape[1] >= 2 else 0.0)

    best = 0.0
    for choice in itertools.product((False, True), repeat=len(factors)):
        if not any(choice):
            continue
        best = max(best, float(np.prod([o if c else d for o, d, c in zip(off, diag, choice)])))
    return best


def ric_bruteforce(a, k: int, cap: int = RIC_ENUMERATION_CAP) -> float:
    """
    Exact restricted isometry constant of order k by enumerating every k-column submatrix B:
    max over B of max(lambda_max(B^T B) - 1, 1 - lambda_min(B^T B)).

    :raises ResourceLimit: if binomial(cols, k) exceeds cap
    """
    a = _matrix(a)
    n = a.shape[1]
    require(1 <= k <= n, f"k={k} must be between 1 and the column count {n}")

    count = comb(n, k, exact=True)
    if count > cap:
        raise ResourceLimit(f"RIC enumeration needs {count} subsets, cap is {cap}")

    gram = a.T @ a
    delta = 0.0
    subsets = itertools.combinations(range(n), k)
    while True:
        batch = np.array(list(itertools.islice(subsets, _RIC_BATCH)), dtype=np.intp)
        if batch.size == 0:
            break
        sub = gram[batch[:, :, None], batch[:, None, :]]
        eig = np.linalg.eigvalsh(sub)
        delta = max(delta, float(np.max(np.maximum(eig[:, -1] - 1, 1 - eig[:, 0]))))

    LOGGER.debug(f"RIC of order {k} over {count} subsets: {delta}")
    return delta


def _equivalent(psis: Sequence[np.ndarray], phis: Sequence[np.ndarray]):
    if len(psis) != len(phis) or len(psis) == 0:
        raise InvalidArgument(f"Got {len(psis)} dictionaries and {len(phis)} sensing matrices")
    equivalents = []
    for i, (psi, phi) in enumerate(zip(psis, phis), start=1):
        psi = _matrix(psi, f"Psi_{i}")
        phi = _matrix(phi, f"Phi_{i}")
        if phi.shape[1] != psi.shape[0]:
            raise InvalidArgument(f"Mode {i}: Phi {phi.shape} incompatible with Psi {psi.shape}")
        equivalents.append(phi @ psi)
    return equivalents


def frame_objective(psis: Sequence[np.ndarray], phis: Sequence[np.ndarray]) -> float:
    """
    ||I - kron_i(Psi_i^T Phi_i^T Phi_i Psi_i)||_F^2 evaluated factor-wise:
    prod N^_i - 2 prod ||A_i||_F^2 + prod ||A_i A_i^T||_F^2.
    """
    a_list = _equivalent(psis, phis)
    nhat = np.prod([a.shape[1] for a in a_list])
    traces = np.prod([np.sum(a ** 2) for a in a_list])
    gram_sq = np.prod([np.sum((a @ a.T) ** 2) for a in a_list])
    return float(nhat - 2 * traces + gram_sq)


def frame_objective_explicit(psis: Sequence[np.ndarray], phis: Sequence[np.ndarray]) -> float:
    a = kron_factors(_equivalent(psis, phis))
    return float(np.sum((np.eye(a.shape[1]) - a.T @ a) ** 2))


def frame_report(phi, psi, normalize: bool = True) -> FrameReport:
    phi = _matrix(phi, 'Phi')
    psi = _matrix(psi, 'Psi')
    if phi.shape[1] != psi.shape[0]:
        raise InvalidArgument(f"Phi {phi.shape} incompatible with Psi {psi.shape}")
    a = phi @ psi
    return FrameReport(
        mutual_coherence=mutual_coherence(a, normalize=normalize),
        gram_identity_deviation=float(np.sum((np.eye(a.shape[1]) - a.T @ a) ** 2)),
        sensing_energy=float(np.sum(phi ** 2)),
        parseval_deviation=float(np.sum((a @ a.T - np.eye(a.shape[0])) ** 2)),
    )
