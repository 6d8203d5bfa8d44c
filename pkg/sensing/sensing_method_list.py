from typing import List

from util.errors import InvalidArgument
from .sensing_method import SensingMethod

from .methods.gaussian import GaussianSensing
from .methods.approach1 import Approach1Sensing
from .methods.approach2 import Approach2Sensing
from .methods.separable_sapiro import SeparableSapiroSensing

SENSING_METHODS: List[SensingMethod] = [
    GaussianSensing(),
    Approach1Sensing(),
    Approach2Sensing(),
    SeparableSapiroSensing(),
]


def get_sensing_method(name: str) -> SensingMethod:
    for method in SENSING_METHODS:
        if method.name == name:
            return method
    raise InvalidArgument(f"Unknown design method {name!r}, choose from {[m.name for m in SENSING_METHODS]}")
