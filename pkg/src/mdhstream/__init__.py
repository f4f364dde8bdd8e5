"""Streaming divisive clustering with minimum density hyperplanes."""

from .exceptions import ConfigError, DegenerateCurveError, DimensionError, InputError, MDHError
from .optimizer import Hyperplane, LearnConfig, mdh_step
from .oracle import GaussianMixture
from .selection import cut_to_k, prune_sequence, select_k
from .tree import TreeModel, new_tree

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DegenerateCurveError", "DimensionError", "InputError", "MDHError",
    "GaussianMixture", "Hyperplane", "LearnConfig", "TreeModel",
    "cut_to_k", "mdh_step", "new_tree", "prune_sequence", "select_k",
]
