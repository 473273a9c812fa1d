"""Numerical laboratory for splicing maps on cylinders and the nonlinear part of filled sections."""

from __future__ import annotations

__version__ = "0.1.0"
