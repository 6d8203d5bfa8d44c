from typing import List

import numpy as np

from ..design import DesignConfig, DesignResult, normalize_sensing
from ..sensing_method import SensingMethod


class GaussianSensing(SensingMethod):
    """Random Gaussian baseline: phis0 are only normalized."""

    @property
    def name(self) -> str:
        return 'gaussian'

    @property
    def is_optimizer(self) -> bool:
        return False

    def design(self, psis: List[np.ndarray], phis0: List[np.ndarray], cfg: DesignConfig) -> DesignResult:
        raw = [np.array(phi, dtype=np.float64) for phi in phis0]
        return DesignResult(
            phis=[normalize_sensing(phi) for phi in raw],
            objective_trace=[],
            iterations_used=0,
            raw_phis=raw,
            increases=0,
            method=self.name,
        )
