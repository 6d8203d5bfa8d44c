"""
Per-mode eigen-space Gram shrinkage baseline.

With Psi Psi^T = V L V^T and Gamma = Phi V, each sweep replaces one row g_j of Gamma at a time by the best rank-1
fit of the error E_j = L - sum_{k != j} L g_k g_k^T L, i.e. L g_j = sqrt(xi) u for the top eigenpair (xi, u) of E_j.
This drives L Gamma^T Gamma L towards L, so G_A moves towards the identity on the range of Psi.
"""

from typing import List

import numpy as np

from util.detail import LOGGER
from util.event_stats import Event
from ..design import DesignConfig, DesignResult, normalize_sensing
from ..sensing_method import SensingMethod

STUB_SWEEP_EVENT = Event('sapiro_sweep')

MAX_SWEEPS = 50
_EIG_REL_TOL = 1e-10


def _shrinkage_error(lam: np.ndarray, gamma: np.ndarray) -> float:
    b = gamma * lam  # Gamma L
    return float(np.sum((np.diag(lam) - b.T @ b) ** 2))


def _sweep(lam: np.ndarray, gamma: np.ndarray) -> None:
    inv_lam = np.where(lam > _EIG_REL_TOL * lam.max(), 1 / np.where(lam > 0, lam, 1), 0)
    b = gamma * lam
    base = np.diag(lam) - b.T @ b
    for j in range(gamma.shape[0]):
        error = base + np.outer(b[j], b[j])
        xi, u = np.linalg.eigh(error)
        if xi[-1] <= 0:
            continue
        new_row = np.sqrt(xi[-1]) * u[:, -1] * inv_lam
        new_b = new_row * lam
        base = error - np.outer(new_b, new_b)
        gamma[j] = new_row
        b[j] = new_b


class SeparableSapiroSensing(SensingMethod):

    @property
    def name(self) -> str:
        return 'separable-sapiro-stub'

    @property
    def is_optimizer(self) -> bool:
        return True

    def design(self, psis: List[np.ndarray], phis0: List[np.ndarray], cfg: DesignConfig) -> DesignResult:
        sweeps = min(cfg.max_iters, MAX_SWEEPS)
        trace = []
        decompositions = []
        for psi, phi in zip(psis, phis0):
            lam, v = np.linalg.eigh(np.asarray(psi) @ np.asarray(psi).T)
            decompositions.append((np.clip(lam, 0, None), v, np.asarray(phi, dtype=np.float64) @ v))

        for _ in range(sweeps):
            for lam, _, gamma in decompositions:
                _sweep(lam, gamma)
            STUB_SWEEP_EVENT.increment()
            trace.append(sum(_shrinkage_error(lam, gamma) for lam, _, gamma in decompositions))

        raw = [gamma @ v.T for _, v, gamma in decompositions]
        LOGGER.debug(f"Shrinkage design after {sweeps} sweeps: error {trace[-1] if trace else None}")
        return DesignResult(
            phis=[normalize_sensing(phi) for phi in raw],
            objective_trace=trace,
            iterations_used=sweeps,
            raw_phis=raw,
            increases=0,
            method=self.name,
        )
