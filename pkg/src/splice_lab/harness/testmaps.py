"""Seeded generators for exponentially decaying test pairs ``(u_-, u_+)``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..cutoffs import GluingData, length_center
from ..grid import CylinderGrid, Field, complex_to_real, grid_with_step
from ..norms import WeightedNormParams, pair_norm

ENVELOPES = ("exp", "exp_poly")
DEFAULT_MODES = ((1, 1.0), (2, 0.5), (-1, 0.5))


@dataclass(frozen=True)
class TestMapSpec:
    """Admissible map class: ``sum_m a_m env(|t|) e^{i m s} v_m`` with ``env`` decaying at rate delta'."""

    __test__ = False  # not a pytest class

    delta_prime: float = 0.8
    modes: tuple[tuple[int, float], ...] = DEFAULT_MODES
    envelope: str = "exp"
    n: int = 1

    def __post_init__(self):
        if not self.modes:
            raise ValueError("mode list is empty")
        if self.envelope not in ENVELOPES:
            raise ValueError(f"envelope must be one of {ENVELOPES}, got {self.envelope!r}")
        if not self.delta_prime > 0:
            raise ValueError("delta_prime must be positive")

    def env(self, t: np.ndarray) -> np.ndarray:
        a = np.abs(t)
        base = np.exp(-self.delta_prime * a)
        return base * (1.0 + a) if self.envelope == "exp_poly" else base


@dataclass(frozen=True, eq=False)
class TestPair:
    __test__ = False

    u_minus: Field
    u_plus: Field
    amplitudes_minus: np.ndarray = field(repr=False)
    amplitudes_plus: np.ndarray = field(repr=False)
    seed: int = 0

    def __iter__(self):
        return iter((self.u_minus, self.u_plus))


def _component(spec: TestMapSpec, grid: CylinderGrid, rng: np.random.Generator):
    T, S = grid.mesh()
    env = spec.env(T)
    z = np.zeros(T.shape + (spec.n,), dtype=complex)
    amps = []
    for m, a in spec.modes:
        c = a * (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2.0)
        v = rng.standard_normal(spec.n) + 1j * rng.standard_normal(spec.n)
        v /= np.linalg.norm(v)
        z += (c * env * np.exp(1j * m * S))[..., None] * v
        amps.append(c)
    return complex_to_real(z), np.array(amps)


def generate_test_pair(spec: TestMapSpec, grids: tuple[CylinderGrid, CylinderGrid], seed: int,
                       params: WeightedNormParams | None = None,
                       normalize: bool = True) -> TestPair:
    """Seeded pair with ``||u||_{k,p,delta} = 1`` (when ``normalize``).

    ``params.delta`` must be below ``spec.delta_prime`` so the weighted norm is
    finite on the infinite cylinder.
    """
    params = params or WeightedNormParams()
    if not spec.delta_prime > params.delta:
        raise ValueError(f"need delta' > delta, got {spec.delta_prime} <= {params.delta}")
    gm, gp = grids
    rng = np.random.default_rng(seed)
    vm, am = _component(spec, gm, rng)
    vp, ap = _component(spec, gp, rng)
    um, up = Field(gm, vm), Field(gp, vp)
    if normalize:
        c = 1.0 / pair_norm(um, up, params)
        um, up, am, ap = um * c, up * c, am * c, ap * c
    return TestPair(um, up, am, ap, seed)


def map_grids(R_max: float, h_t: float, ns: int, m: int = 1, variant: str = "desk",
              margin: float = 1.0) -> tuple[CylinderGrid, CylinderGrid]:
    """Windows ``[-L, 0]`` and ``[0, L]`` with ``L >= 2R + d + l + 8`` for every R up to R_max."""
    l, d = length_center(R_max, m, variant)
    L = math.ceil((2.0 * R_max + d + l + 8.0 + margin) / h_t) * h_t
    return grid_with_step(-L, 0.0, h_t, ns), grid_with_step(0.0, L, h_t, ns)


def grids_for(g: GluingData, margin: float = 1.0) -> tuple[CylinderGrid, CylinderGrid]:
    return map_grids(g.R, g.h_t, g.ns, g.m, g.variant, margin)


def pair_seeds(seed: int, count: int) -> list[int]:
    """Independent integer seeds derived from one master seed."""
    return [int(x) for x in np.random.SeedSequence(seed).generate_state(count)]
