from abc import ABC, abstractmethod
from typing import List

import numpy as np

from .design import DesignConfig, DesignResult


class SensingMethod(ABC):
    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @property
    @abstractmethod
    def is_optimizer(self) -> bool:
        """
        :return: False if the method never runs an optimizer (phis0 pass through)
        """
        pass

    @abstractmethod
    def design(self, psis: List[np.ndarray], phis0: List[np.ndarray], cfg: DesignConfig) -> DesignResult:
        """
        :param psis: Per-mode dictionaries
        :param phis0: Per-mode starting (or baseline) sensing matrices, which also fix M_i
        :param cfg: Design parameters
        """
        pass
