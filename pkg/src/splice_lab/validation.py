"""Input checks shared by the estimators and the harness."""

from __future__ import annotations

import numbers

import numpy as np

from .grid import Field, GridAlignmentError, steps


def check_field(u, name: str = "field", n: int | None = None) -> Field:
    """Return ``u`` if it is a finite Field (of complex dimension ``n`` when given)."""
    if not isinstance(u, Field):
        raise TypeError(f"{name} must be a Field, got {type(u).__name__}")
    if n is not None and u.dim != n:
        raise ValueError(f"{name} has complex dimension {u.dim}, expected {n}")
    if not np.all(np.isfinite(u.values)):
        raise ValueError(f"{name} contains non-finite values")
    return u


def check_pair(X, n: int | None = None) -> tuple[Field, Field]:
    """Accept ``(u_minus, u_plus)`` on lattice-compatible windows ending/starting at t = 0."""
    try:
        u_minus, u_plus = X
    except (TypeError, ValueError) as exc:
        raise TypeError("expected a pair (u_minus, u_plus)") from exc
    check_field(u_minus, "u_minus", n)
    check_field(u_plus, "u_plus", n)
    if u_minus.dim != u_plus.dim:
        raise ValueError("u_minus and u_plus have different target dimensions")
    gm, gp = u_minus.grid, u_plus.grid
    if not gm.compatible(gp):
        raise GridAlignmentError("u_minus and u_plus grids do not share a lattice")
    if gm.t_max > 0.0 or gp.t_min < 0.0:
        raise ValueError("u_minus must live on t <= 0 and u_plus on t >= 0")
    return u_minus, u_plus


def check_aligned(value: float, h: float, what: str = "value") -> int:
    """Number of steps of size h in ``value``; raises GridAlignmentError if not integral."""
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{what} must be a finite real number, got {value!r}")
    if not h > 0:
        raise ValueError(f"step must be positive, got {h!r}")
    return steps(float(value), float(h), what)


def check_positive(value, what: str = "value") -> float:
    if not isinstance(value, numbers.Real) or not value > 0:
        raise ValueError(f"{what} must be positive, got {value!r}")
    return float(value)
