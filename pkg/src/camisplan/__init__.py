"""Anisotropic path planning for ground vehicles on sloped terrain."""
from .camis import (
    NO_SLIP, PRESET_SLIP, TRACK_SLIP, WHEEL_SLIP,
    CamisModel, CostEllipse, DirectionalCosts, PhysicalParams, RollWeight, SlipModel,
    SlipSingularityError, ellipse_from_anchors,
)
from .solver import PlanResult, plan
from .terrain import HexIndex, HexTerrain, load_elevation, process_dem

__version__ = "0.1.0"
