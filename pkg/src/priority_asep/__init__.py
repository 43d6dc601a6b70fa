"""Exact identities and kinetic Monte Carlo for the multi-species priority exclusion process."""

from .generator import DimensionCapError, RateParams, build_H
from .measures import canonical_measure, canonical_partition, grand_partition, reversible_measure
from .model import Config, CoordConfig, Counts, Lattice, parse_config
from .qcalc import QContext, parse_scalar
from .shocks import ShockConfig, shock_predictions, shock_rates, stationary_gap_law
from .sparse import SparseOperator

__all__ = [
    "Config",
    "CoordConfig",
    "Counts",
    "DimensionCapError",
    "Lattice",
    "QContext",
    "RateParams",
    "ShockConfig",
    "SparseOperator",
    "build_H",
    "canonical_measure",
    "canonical_partition",
    "grand_partition",
    "parse_config",
    "parse_scalar",
    "reversible_measure",
    "shock_predictions",
    "shock_rates",
    "stationary_gap_law",
]
