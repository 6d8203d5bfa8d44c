from typing import List

import numpy as np

from ..design import DesignConfig, DesignResult, design_gradient, design_separable
from ..sensing_method import SensingMethod


class Approach2Sensing(SensingMethod):
    """Gradient design, started at the separable design unless cfg.init is 'given'."""

    @property
    def name(self) -> str:
        return 'approach2'

    @property
    def is_optimizer(self) -> bool:
        return True

    def design(self, psis: List[np.ndarray], phis0: List[np.ndarray], cfg: DesignConfig) -> DesignResult:
        if cfg.init == 'separable':
            phis0 = design_separable(psis, [np.shape(phi)[0] for phi in phis0], cfg).raw_phis
        return design_gradient(psis, phis0, cfg)
