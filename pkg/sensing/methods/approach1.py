from typing import List

import numpy as np

from ..design import DesignConfig, DesignResult, design_separable
from ..sensing_method import SensingMethod


class Approach1Sensing(SensingMethod):
    """Closed-form separable design, phis0 supply M_i and, with cfg.init 'given', the member of the family."""

    @property
    def name(self) -> str:
        return 'approach1'

    @property
    def is_optimizer(self) -> bool:
        return True

    def design(self, psis: List[np.ndarray], phis0: List[np.ndarray], cfg: DesignConfig) -> DesignResult:
        anchors = phis0 if cfg.init == 'given' else None
        return design_separable(psis, [np.shape(phi)[0] for phi in phis0], cfg, anchors)
