"""Quasi-integrable deformations of the KdV equation: solvers, gauge charges and anomaly checks."""

from .grid import ComplexField, GridField

__all__ = ["GridField", "ComplexField"]
__version__ = "0.1.0"
