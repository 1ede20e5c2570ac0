"""Entanglement harvesting by static Unruh-DeWitt detectors near a weak-field star."""

from gravent.flat import DetectorConfig, FlatResult
from gravent.metric import Geometry, StarConfig
from gravent.negativity import (
    EntanglementResult,
    compute_flat,
    compute_perturbed,
    negativity_of,
    sweep_r1,
)
from gravent.quad import QuadResult, QuadSpec

__all__ = [
    "DetectorConfig",
    "FlatResult",
    "Geometry",
    "StarConfig",
    "EntanglementResult",
    "compute_flat",
    "compute_perturbed",
    "negativity_of",
    "sweep_r1",
    "QuadResult",
    "QuadSpec",
]

__version__ = "0.1.0"
