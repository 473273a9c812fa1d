"""Measured sides of the window lemma (I)-(IV), the operator-norm proposition and
the D_R / D_theta composite bounds, one R at a time.

Each measurement is reported with the bound shape it is compared against; the
implied constant is ``measured / bound_shape``.  Whether the constants are
"stable" across an R-sweep is decided by :func:`stable_upper`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .cutoffs import GluingData
from .derivatives import (F1_distance, dR_N_analytic, dTheta_N_analytic, dW_E_analytic)
from .gluing import transfer_argument, transfer_increment
from .grid import Field
from .jstruct import AlmostComplexStructure, MatrixField
from .norms import (WeightedNormParams, cm_window_norm, operator_norm_probe, pair_norm,
                    probe_field, weighted_norm)

QUANTITIES = (
    "lemma_I_window_embedding",
    "lemma_II_extended_map",
    "lemma_III_extended_variation",
    "lemma_IV_structure_gap",
    "DR_part_I",
    "DR_part_II",
    "Dtheta_part_III",
    "prop_rho_DW_E",
)


@dataclass(frozen=True)
class EstimateRow:
    R: float
    r: float
    quantity_name: str
    measured: float
    bound_shape: float
    implied_constant: float

    def as_dict(self) -> dict:
        return asdict(self)


def _row(g: GluingData, name: str, measured: float, shape: float) -> EstimateRow:
    return EstimateRow(g.R, g.r, name, float(measured), float(shape),
                       float(measured / shape) if shape > 0 else math.inf)


def stable_upper(constants: Sequence[float], factor: float = 2.0) -> bool:
    """Upper-bound reading of "one constant across the sweep".

    The constant calibrated at the first (smallest) R must cover every later R
    up to ``factor``: ``max_R C(R) <= factor * C(R_first)``.  All-zero series
    (constant J) pass trivially.
    """
    c = [float(x) for x in constants]
    if not c or max(c) == 0.0:
        return True
    return max(c) <= factor * c[0]


def spread(constants: Sequence[float]) -> float:
    """``max / min`` of the positive constants (two-sided variation, reported only)."""
    c = [x for x in constants if x > 0]
    return max(c) / min(c) if c else 1.0


def measure_estimates(u_minus: Field, u_plus: Field, g: GluingData, J: AlmostComplexStructure,
                      params: WeightedNormParams, n_probes: int = 16, seed: int = 0,
                      n_op_probes: int = 64, threads: int | None = None) -> list[EstimateRow]:
    k1 = params.k - 1
    low = params.lowered()
    lo, hi = g.window_plus
    e = math.exp(-params.delta * g.R / 2.0)
    nu = pair_norm(u_minus, u_plus, params)
    num, nup = weighted_norm(u_minus, params), weighted_norm(u_plus, params)
    Jc = J.c_norm(k1)
    DJc = J.dj_norm(k1)
    grids = (u_minus.grid, u_plus.grid)
    focus = (g.window_minus, g.window_plus)
    n = u_plus.dim

    rows: list[EstimateRow] = []
    rng_children = np.random.SeedSequence(seed).spawn(n_probes)
    best_I = best_III = 0.0
    for child in rng_children:
        rng = np.random.default_rng(child)
        xm = probe_field(u_minus.grid, n, rng, focus[0])
        xp = probe_field(u_plus.grid, n, rng, focus[1])
        best_I = max(best_I, cm_window_norm(xp, k1, lo, hi) / weighted_norm(xp, params))
        W_xi = transfer_argument(xm, xp, g, "plus")
        best_III = max(best_III, cm_window_norm(W_xi, k1, lo, hi) / pair_norm(xm, xp, params))
    rows.append(_row(g, "lemma_I_window_embedding", best_I,
                     math.exp(-params.delta * (g.R - g.d - g.l - 3.0))))

    W = transfer_argument(u_minus, u_plus, g, "plus")
    rows.append(_row(g, "lemma_II_extended_map", cm_window_norm(W, k1, lo, hi) / nu, e))
    rows.append(_row(g, "lemma_III_extended_variation", best_III, e))

    dW = transfer_increment(u_minus, u_plus, g, "plus")
    gap = MatrixField(u_plus.grid, J.delta_difference(u_plus.values, dW.values))
    rows.append(_row(g, "lemma_IV_structure_gap", cm_window_norm(gap, k1, lo, hi),
                     Jc * e * nu * (1.0 + e * nu)))

    far = dR_N_analytic(u_minus, u_plus, g, J, part="far")[1]
    near = dR_N_analytic(u_minus, u_plus, g, J, part="near")[1]
    dth = dTheta_N_analytic(u_minus, u_plus, g, J)[1]
    rows.append(_row(g, "DR_part_I", weighted_norm(far, low), DJc * nu * e * nup * num))
    rows.append(_row(g, "DR_part_II", weighted_norm(near, low), DJc * nu * e * nup ** 2))
    rows.append(_row(g, "Dtheta_part_III", weighted_norm(dth, low), DJc * nu * e * num * nup))

    rho = g.rho()(u_plus.grid.t)[:, None, None]

    def rho_dWE(xm: Field, xp: Field) -> Field:
        E_plus = dW_E_analytic(u_minus, u_plus, g, J, xm, xp)[1]
        return Field(E_plus.grid, rho * E_plus.values)

    probe = operator_norm_probe(rho_dWE, params, n_op_probes, seed + 1, grids, n,
                                focus=focus, threads=threads)
    rows.append(_row(g, "prop_rho_DW_E", probe.value, e * nu * (1.0 + nu)))
    return rows


def F1_continuity(g: GluingData, params: WeightedNormParams, grids, step_counts=(4, 2, 1),
                  n_probes: int = 16, seed: int = 0, n: int = 1) -> list[tuple[float, float]]:
    """``(dR, ||F1(., R + dR) - F1(., R)||)`` for grid-aligned steps, largest first."""
    h = grids[1].h_t
    out = []
    for c in step_counts:
        out.append((c * h, F1_distance(g.with_R(g.R + c * h), g, params, grids, n_probes,
                                       seed, n)))
    return out
