"""Simulation and certification of measurement-collapse randomness generation."""

from .quantum import (
    DensityMatrix,
    Distribution,
    Measurement,
    MeasurementKind,
)

__all__ = ["DensityMatrix", "Distribution", "Measurement", "MeasurementKind"]
__version__ = "0.1.0"
