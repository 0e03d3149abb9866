"""Particle-coverage box selection for selective person detection."""

from .belief import DetectorModel, FilterParams, MotionModel, Observation, ParticleBelief
from .coverage import GainTable, pcf
from .select import Selection, SelectorParams, exhaust_max, greedy_max, partimax, stochastic_greedy_max
from .tiling import TileCoding, TileCodingConfig, build

__all__ = [
    "DetectorModel", "FilterParams", "GainTable", "MotionModel", "Observation", "ParticleBelief",
    "Selection", "SelectorParams", "TileCoding", "TileCodingConfig", "build", "exhaust_max",
    "greedy_max", "partimax", "pcf", "stochastic_greedy_max",
]
