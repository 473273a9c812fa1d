"""Discretized cylinders and sampled E-valued fields.

A field on a cylinder ``[t_min, t_max] x S^1`` is stored as an array of shape
``(nt, ns, 2n)``: ``n`` complex components split into (re, im) pairs.  All
translations are exact index shifts, so every shift amount must be a multiple
of the grid step.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable

import numpy as np

TWO_PI = 2.0 * math.pi
ALIGN_TOL = 1e-9

MAGIC = b"CYLF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIdd")


class GridAlignmentError(ValueError):
    """A shift, rotation or window is not a whole number of grid steps."""


def steps(amount: float, h: float, what: str = "shift") -> int:
    """Return ``amount / h`` as an int, raising if it is not integral."""
    q = amount / h
    k = int(round(q))
    if abs(q - k) > ALIGN_TOL * max(1.0, abs(q)):
        raise GridAlignmentError(f"{what} {amount!r} is not a multiple of the step {h!r}")
    return k


@dataclass(frozen=True)
class CylinderGrid:
    """Uniform grid on ``[t_min, t_max] x S^1`` (circumference 2*pi)."""

    t_min: float
    t_max: float
    nt: int
    ns: int

    def __post_init__(self):
        if self.nt < 2:
            raise ValueError(f"nt must be >= 2, got {self.nt}")
        if self.ns < 16 or self.ns % 2:
            raise ValueError(f"ns must be an even integer >= 16, got {self.ns}")
        if not self.t_min < self.t_max:
            raise ValueError(f"need t_min < t_max, got [{self.t_min}, {self.t_max}]")

    @property
    def h_t(self) -> float:
        return (self.t_max - self.t_min) / (self.nt - 1)

    @property
    def h_s(self) -> float:
        return TWO_PI / self.ns

    @property
    def t(self) -> np.ndarray:
        return self.t_min + self.h_t * np.arange(self.nt)

    @property
    def s(self) -> np.ndarray:
        return self.h_s * np.arange(self.ns)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.t, self.s, indexing="ij")

    def index_of(self, t: float) -> int:
        return steps(t - self.t_min, self.h_t, "window endpoint")

    def compatible(self, other: "CylinderGrid") -> bool:
        """Same steps, and node lattices that line up under integer shifts."""
        if self.ns != other.ns or not math.isclose(self.h_t, other.h_t, rel_tol=1e-12):
            return False
        try:
            steps(other.t_min - self.t_min, self.h_t)
        except GridAlignmentError:
            return False
        return True

    def window(self, t_min: float, t_max: float) -> "CylinderGrid":
        """Grid with the same steps spanning ``[t_min, t_max]`` (snapped to the lattice)."""
        h = self.h_t
        i0 = math.floor((t_min - self.t_min) / h + ALIGN_TOL)
        i1 = math.ceil((t_max - self.t_min) / h - ALIGN_TOL)
        return CylinderGrid(self.t_min + i0 * h, self.t_min + i1 * h, i1 - i0 + 1, self.ns)


def make_grid(t_min: float, t_max: float, nt: int, ns: int) -> CylinderGrid:
    return CylinderGrid(float(t_min), float(t_max), int(nt), int(ns))


def grid_with_step(t_min: float, t_max: float, h_t: float, ns: int) -> CylinderGrid:
    """Grid on ``[t_min, t_max]`` with the given t-step; the length must be a multiple of it."""
    n = steps(t_max - t_min, h_t, "window length")
    return CylinderGrid(float(t_min), float(t_min + n * h_t), n + 1, int(ns))


@dataclass(frozen=True, eq=False)
class Field:
    """Sampled map ``grid -> C^n`` stored as ``2n`` real components per node."""

    grid: CylinderGrid
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype != np.longdouble:  # extended precision is kept for roundoff-sensitive checks
            v = v.astype(float)
        if v.ndim != 3 or v.shape[:2] != (self.grid.nt, self.grid.ns) or v.shape[2] % 2:
            raise ValueError(
                f"values must have shape ({self.grid.nt}, {self.grid.ns}, 2n), got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[2] // 2

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def __add__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "Field":
        return Field(self.grid, c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    def sup(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=-1))) if self.values.size else 0.0

    def end_sup(self, side: str, fraction: float = 0.1) -> float:
        """Sup of ``|u|`` over the outermost ``fraction`` of t-samples on one end."""
        m = max(1, int(math.ceil(fraction * self.grid.nt)))
        rows = self.values[-m:] if side == "right" else self.values[:m]
        return float(np.max(np.linalg.norm(rows, axis=-1)))


def _check_same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


def zeros(grid: CylinderGrid, n: int = 1) -> Field:
    return Field(grid, np.zeros((grid.nt, grid.ns, 2 * n)))


def complex_to_real(z: np.ndarray) -> np.ndarray:
    """``(..., n)`` complex array -> ``(..., 2n)`` interleaved (re, im)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def real_to_complex(x: np.ndarray) -> np.ndarray:
    return x[..., 0::2] + 1j * x[..., 1::2]


def sample(f: Callable[[np.ndarray, np.ndarray], np.ndarray], grid: CylinderGrid,
           complex_valued: bool | None = None) -> Field:
    """Evaluate ``f(t, s)`` on every node.

    ``f`` receives broadcast ``(nt, ns)`` arrays and returns either a real
    array of shape ``(nt, ns, 2n)`` or a complex array of shape ``(nt, ns, n)``
    (or ``(nt, ns)`` for n = 1).
    """
    T, S = grid.mesh()
    out = np.asarray(f(T, S))
    if out.ndim == 2:
        out = out[..., None]
        if complex_valued is None:
            complex_valued = True
    if complex_valued or (complex_valued is None and np.iscomplexobj(out)):
        out = complex_to_real(out)
    out = np.broadcast_to(out, (grid.nt, grid.ns, out.shape[-1])).astype(float)
    if not np.all(np.isfinite(out)):
        raise ValueError("sampled function returned non-finite values")
    return Field(grid, out)


def resample(u: Field | np.ndarray, src: CylinderGrid, dst: CylinderGrid,
             shift: float = 0.0) -> np.ndarray:
    """Values ``u(t + shift)`` on ``dst``, zero where ``t + shift`` leaves ``src``.

    Works for any trailing value shape; used with matrix fields too.
    """
    vals = u.values if isinstance(u, Field) else u
    if src.ns != dst.ns or not math.isclose(src.h_t, dst.h_t, rel_tol=1e-12):
        raise GridAlignmentError("grids have different steps")
    k0 = steps(dst.t_min + shift - src.t_min, src.h_t)
    out = np.zeros((dst.nt,) + vals.shape[1:], dtype=np.result_type(vals.dtype, float))
    lo = max(0, -k0)
    hi = min(dst.nt, src.nt - k0)
    if hi > lo:
        out[lo:hi] = vals[lo + k0:hi + k0]
    return out


def shift_t(u: Field, d: float, grid: CylinderGrid | None = None) -> Field:
    """``(tau_d u)(t, s) = u(t + d, s)``, zero-extended off u's window.

    The output lives on ``grid`` (default: u's own grid).
    """
    dst = u.grid if grid is None else grid
    steps(d, u.grid.h_t, "t-shift")
    return Field(dst, resample(u, u.grid, dst, d))


def translate(u: Field, d: float) -> Field:
    """``u(t + d)`` on the natural window ``[t_min - d, t_max - d]`` (nothing lost)."""
    steps(d, u.grid.h_t, "t-shift")
    g = u.grid
    return Field(CylinderGrid(g.t_min - d, g.t_max - d, g.nt, g.ns), u.values)


def rotate_s(u: Field, theta: float) -> Field:
    """``u(t, s + theta)`` with periodic wrap."""
    k = steps(theta, u.grid.h_s, "rotation")
    return Field(u.grid, np.roll(u.values, -k, axis=1))


def _roll_s(vals: np.ndarray, theta: float, h_s: float) -> np.ndarray:
    return np.roll(vals, -steps(theta, h_s, "rotation"), axis=1)


# 4th-order stencils
_C4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def ds_values(vals: np.ndarray, h_s: float) -> np.ndarray:
    """Periodic 4th-order central difference along axis 1."""
    r = lambda k: np.roll(vals, -k, axis=1)  # noqa: E731  r(k)[j] = vals[j + k]
    return (r(-2) - 8.0 * r(-1) + 8.0 * r(1) - r(2)) / (12.0 * h_s)


def dt_values(vals: np.ndarray, h_t: float) -> np.ndarray:
    """4th-order difference along axis 0, one-sided 5-point stencils at both ends."""
    nt = vals.shape[0]
    if nt < 5:
        raise ValueError(f"d_t needs nt >= 5, got {nt}")
    out = np.empty_like(vals)
    out[2:-2] = (vals[:-4] - 8.0 * vals[1:-3] + 8.0 * vals[3:-1] - vals[4:]) / 12.0
    out[0] = np.tensordot(_EDGE0, vals[:5], axes=1)
    out[1] = np.tensordot(_EDGE1, vals[:5], axes=1)
    out[-1] = -np.tensordot(_EDGE0, vals[-1:-6:-1], axes=1)
    out[-2] = -np.tensordot(_EDGE1, vals[-1:-6:-1], axes=1)
    return out / h_t


def d_s(u: Field) -> Field:
    return Field(u.grid, ds_values(u.values, u.grid.h_s))


def d_t(u: Field) -> Field:
    return Field(u.grid, dt_values(u.values, u.grid.h_t))


def derivative_values(vals: np.ndarray, grid: CylinderGrid, i: int, j: int) -> np.ndarray:
    """``d_t^i d_s^j`` applied t-first."""
    out = vals
    for _ in range(i):
        out = dt_values(out, grid.h_t)
    for _ in range(j):
        out = ds_values(out, grid.h_s)
    return out


def restrict(u: Field, a: float, b: float) -> Field:
    g = u.grid
    if not a < b:
        raise ValueError(f"empty window [{a}, {b}]")
    i0, i1 = g.index_of(a), g.index_of(b)
    if i0 < 0 or i1 > g.nt - 1:
        raise ValueError(f"window [{a}, {b}] outside [{g.t_min}, {g.t_max}]")
    return Field(CylinderGrid(g.t_min + i0 * g.h_t, g.t_min + i1 * g.h_t, i1 - i0 + 1, g.ns),
                 u.values[i0:i1 + 1])


def check_decay(u: Field, side: str, tol: float, fraction: float = 0.1) -> bool:
    return u.end_sup(side, fraction) <= tol


# binary format: "CYLF", version, nt, ns, 2n (u32), t_min, t_max (f64), row-major f64 values

def field_to_bytes(u: Field) -> bytes:
    g = u.grid
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, g.nt, g.ns, u.values.shape[2], g.t_min, g.t_max)
    return head + np.ascontiguousarray(u.values, dtype="<f8").tobytes()


def field_from_bytes(buf: bytes) -> Field:
    if len(buf) < _HEADER.size:
        raise ValueError("truncated field header")
    magic, version, nt, ns, m, t_min, t_max = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported field format version {version}")
    body = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size)
    if body.size != nt * ns * m:
        raise ValueError(f"expected {nt * ns * m} values, found {body.size}")
    return Field(CylinderGrid(t_min, t_max, nt, ns), body.reshape(nt, ns, m).astype(float))


def save_field(u: Field, path: str | Path) -> None:
    Path(path).write_bytes(field_to_bytes(u))


def load_field(path: str | Path) -> Field:
    return field_from_bytes(Path(path).read_bytes())
