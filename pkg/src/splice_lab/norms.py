"""Weighted Sobolev norms, windowed C^m norms and operator-norm probes.

The weighted norm is

    ||u||_{k,p,delta} = ( sum_{i+j<=k} int int |d_t^i d_s^j u|^p e^{p delta |t|} dt ds )^(1/p)

with the trapezoid rule in t and the (spectrally accurate) rectangle rule in s.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grid import CylinderGrid, Field, complex_to_real, dt_values, ds_values
from .jstruct import MatrixField
from .parallel import thread_map

MAX_ORDER = 4


@dataclass(frozen=True)
class WeightedNormParams:
    """Exponent data of ``L^p_{k,delta}``; the weight is ``e^{delta |t|}``."""

    k: int = 3
    p: float = 3.0
    delta: float = 0.5

    def __post_init__(self):
        if not (isinstance(self.k, (int, np.integer)) and self.k >= 0):
            raise ValueError(f"k must be a non-negative integer, got {self.k}")
        if self.k > MAX_ORDER:
            raise ValueError(f"k = {self.k} exceeds the stencil limit {MAX_ORDER}")
        if not self.p >= 1.0:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")

    @property
    def embeds_in_c1(self) -> bool:
        """``k - 2/p > 1``: the setting of the nonlinear estimates."""
        return self.k - 2.0 / self.p > 1.0

    @property
    def embeds_in_c2(self) -> bool:
        """``k - 2/p > 2``: needed for the parameter-derivative extension."""
        return self.k - 2.0 / self.p > 2.0

    def lowered(self, by: int = 1) -> "WeightedNormParams":
        return WeightedNormParams(max(self.k - by, 0), self.p, self.delta)

    def weight(self, t) -> np.ndarray:
        return np.exp(self.delta * np.abs(np.asarray(t, dtype=float)))


def _as_values(u: Field | MatrixField) -> tuple[CylinderGrid, np.ndarray]:
    if isinstance(u, MatrixField):
        u = u.as_field()
    return u.grid, u.values


def derivative_stack(vals: np.ndarray, grid: CylinderGrid, k: int):
    """Yield ``(i, j, d_t^i d_s^j vals)`` for all ``i + j <= k`` (t-derivatives first)."""
    if k > 0 and grid.nt < 5:
        raise ValueError(f"window too small for derivative stencils (nt = {grid.nt})")
    dt = vals
    for i in range(k + 1):
        if i:
            dt = dt_values(dt, grid.h_t)
        cur = dt
        for j in range(k - i + 1):
            if j:
                cur = ds_values(cur, grid.h_s)
            yield i, j, cur


def weighted_norm(u: Field | MatrixField, params: WeightedNormParams) -> float:
    grid, vals = _as_values(u)
    if grid.nt < 2:
        raise ValueError("window too small for quadrature")
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    if scale == 0.0:
        return 0.0
    p = params.p
    w = params.weight(grid.t)[:, None]
    tw = np.full(grid.nt, grid.h_t)
    tw[0] = tw[-1] = 0.5 * grid.h_t
    total = 0.0
    power = int(p) if float(p).is_integer() else p  # integer powers avoid the slow pow path
    for _, _, d in derivative_stack(vals / scale, grid, params.k):
        mag = np.sqrt(np.einsum("tsc,tsc->ts", d, d)) * w
        total += float(tw @ np.sum(mag ** power, axis=1)) * grid.h_s
    out = scale * total ** (1.0 / p)
    if not np.isfinite(out):
        raise FloatingPointError("weighted norm is not finite (decay too slow for delta?)")
    return out


def pair_norm(u_minus: Field, u_plus: Field, params: WeightedNormParams) -> float:
    """l^p combination of the component norms."""
    a, b = weighted_norm(u_minus, params), weighted_norm(u_plus, params)
    return float((a ** params.p + b ** params.p) ** (1.0 / params.p))


def cm_window_norm(u: Field | MatrixField, m: int, a: float, b: float) -> float:
    """Max over nodes with ``a <= t <= b`` of every derivative of order ``<= m``."""
    grid, vals = _as_values(u)
    tol = 1e-9 * max(1.0, abs(a), abs(b))
    if not a <= b:
        raise ValueError(f"empty window [{a}, {b}]")
    if a < grid.t_min - tol or b > grid.t_max + tol:
        raise ValueError(f"window [{a}, {b}] not inside [{grid.t_min}, {grid.t_max}]")
    t = grid.t
    mask = (t >= a - tol) & (t <= b + tol)
    if not mask.any():
        raise ValueError(f"window [{a}, {b}] contains no grid nodes")
    best = 0.0
    for _, _, d in derivative_stack(vals, grid, m):
        best = max(best, float(np.max(np.linalg.norm(d[mask], axis=-1))))
    return best


# ---------------------------------------------------------------- probes


def probe_field(grid: CylinderGrid, n: int, rng: np.random.Generator,
                center: tuple[float, float] | None = None, width: float | None = None,
                max_mode: int = 3) -> Field:
    """Gaussian-windowed sum of low Fourier modes in s with random complex coefficients."""
    lo, hi = center if center is not None else (grid.t_min, grid.t_max)
    t0 = rng.uniform(lo, hi)
    sigma = width if width is not None else rng.uniform(1.0, 4.0)
    modes = np.arange(-max_mode, max_mode + 1)
    coef = rng.standard_normal((modes.size, n)) + 1j * rng.standard_normal((modes.size, n))
    T, S = grid.mesh()
    env = np.exp(-0.5 * ((T - t0) / sigma) ** 2)
    z = np.einsum("ts,mts,mn->tsn", env, np.exp(1j * modes[:, None, None] * S[None]), coef)
    return Field(grid, complex_to_real(z))


@dataclass(frozen=True)
class ProbeResult:
    value: float
    n_probes: int
    best_index: int
    values: tuple[float, ...]

    def __float__(self) -> float:
        return self.value


def operator_norm_probe(A: Callable[[Field, Field], Field | tuple[Field, Field]],
                        params: WeightedNormParams, n_probes: int, seed: int,
                        grids: tuple[CylinderGrid, CylinderGrid], n: int = 1,
                        out_params: WeightedNormParams | None = None,
                        focus: Sequence[tuple[float, float] | None] | None = None,
                        threads: int | None = None) -> ProbeResult:
    """Lower bound for ``sup ||A xi||_{k-1} / ||xi||_k`` over random probe pairs.

    ``A`` takes the probe pair ``(xi_-, xi_+)`` and returns a field or a pair.
    ``focus`` optionally gives ``(minus_interval, plus_interval)`` where half of
    the probes are concentrated; the rest are spread over the whole windows.
    Each probe draws from its own child of ``SeedSequence(seed)``, so results
    do not depend on the thread count.
    """
    out_params = out_params or params.lowered()
    children = np.random.SeedSequence(seed).spawn(n_probes)
    gm, gp = grids

    def one(idx: int) -> float:
        rng = np.random.default_rng(children[idx])
        fm = fp = None
        if focus is not None and idx % 2 == 0:
            fm, fp = focus
        xm = probe_field(gm, n, rng, fm)
        xp = probe_field(gp, n, rng, fp)
        norm = pair_norm(xm, xp, params)
        xm, xp = xm * (1.0 / norm), xp * (1.0 / norm)
        out = A(xm, xp)
        if isinstance(out, tuple):
            return pair_norm(out[0], out[1], out_params)
        return weighted_norm(out, out_params)

    vals = thread_map(one, range(n_probes), threads)
    best = int(np.argmax(vals)) if vals else 0
    return ProbeResult(float(max(vals, default=0.0)), n_probes, best, tuple(vals))
