"""
Vectorized coupled KSVD (cKSVD) baseline.

Works on vectorized signals with a single dictionary Psi (N x N^) and sensing matrix Phi (M x N). The coupled data is
Z = [gamma X; Y] and the coupled dictionary D = [gamma I; Phi] Psi. Each atom takes the leading singular triple of the
residual restricted to the samples that use it; the dictionary column is recovered with the coupling pseudo-inverse
and the codes are rescaled by the norm that the normalization removes.
"""

from typing import Optional

import numpy as np

from metrics.quality import are
from recovery.omp import sparse_code_stack
from recovery.operator import KronOperator
from tensor.decomposition import leading_triple
from util.detail import LOGGER
from util.errors import require
from util.event_stats import Event
from .coupling import coupling_pinv, coupling_stack
from .ctksvd import LearnConfig, LearnResult, normalize_columns

CKSVD_ITERATION_EVENT = Event('cksvd_iteration')


def learn_cksvd(x, phi, psi0, cfg: LearnConfig, y: Optional[np.ndarray] = None) -> LearnResult:
    """
    :param x: Vectorized training signals, N x T
    :param phi: Sensing matrix, M x N (M may be 0)
    :param psi0: Initial dictionary, N x N^
    :param cfg: Learning parameters, coupled is ignored
    :param y: Measurements Phi X + E, generated with cfg.noise_var when omitted
    """
    x = np.asarray(x, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    psi = normalize_columns(psi0)
    require(x.ndim == 2, f"Vectorized training data must be N x T, got {x.shape}")
    require(phi.ndim == 2 and phi.shape[1] == x.shape[0], f"Sensing matrix {phi.shape} does not fit N={x.shape[0]}")
    require(psi.shape[0] == x.shape[0], f"Dictionary {psi.shape} does not fit N={x.shape[0]}")
    require(cfg.sparsity_k <= psi.shape[1], f"Sparsity {cfg.sparsity_k} exceeds {psi.shape[1]} atoms")

    if y is None:
        y = phi @ x
        if cfg.noise_var > 0:
            y = y + np.sqrt(cfg.noise_var) * np.random.default_rng(cfg.seed).standard_normal(y.shape)
    y = np.asarray(y, dtype=np.float64)
    require(y.shape == (phi.shape[0], x.shape[1]), f"Measurements {y.shape} do not match Phi X")

    z = np.vstack([cfg.gamma * x, y])
    stack = coupling_stack(phi, cfg.gamma)
    pinv = coupling_pinv(phi, cfg.gamma)
    d = stack @ psi

    are_trace = []
    failures = 0
    replaced = 0
    codes = None
    for iteration in range(1, cfg.outer_iters + 1):
        coding = sparse_code_stack(KronOperator([d]), z, cfg.sparsity_k, cfg.omp_tol)
        codes = coding.codes
        failures += coding.failures
        are_trace.append(are(z, codes, [d]))

        exclude = set()
        for p in range(psi.shape[1]):
            used = np.flatnonzero(codes[p])
            if used.size == 0:
                residual = z - d @ codes
                norms = np.linalg.norm(residual, axis=0)
                norms[list(exclude)] = -1
                worst = int(np.argmax(norms))
                if norms[worst] <= 0:
                    continue
                candidate = pinv @ residual[:, worst]
                if not np.any(candidate):
                    continue
                psi[:, p] = candidate / np.linalg.norm(candidate)
                d[:, p] = stack @ psi[:, p]
                exclude.add(worst)
                replaced += 1
                continue

            residual = z[:, used] - d @ codes[:, used] + np.outer(d[:, p], codes[p, used])
            u, value, v = leading_triple(residual)
            psi_hat = pinv @ u
            norm = np.linalg.norm(psi_hat)
            if norm == 0:
                continue
            psi[:, p] = psi_hat / norm
            d[:, p] = stack @ psi[:, p]
            codes[p, used] = norm * value * v

        CKSVD_ITERATION_EVENT.increment()
        LOGGER.debug(f"cKSVD iteration {iteration}: ARE {are_trace[-1]}")

    LOGGER.info(f"cKSVD finished {cfg.outer_iters} iterations, ARE {are_trace[0]} -> {are_trace[-1]}")
    return LearnResult([psi], are_trace, codes, [d], failures, replaced, [psi.shape[1]] * cfg.outer_iters)
