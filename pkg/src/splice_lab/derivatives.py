"""Derivatives of N^R in the map, in R and in theta, with finite-difference oracles.

Every derivative is taken through the per-component structure argument

    W_+(t) = P(t - R) u_-(t - 2R, s - 2 theta) + Q(t - R) u_+(t, s)
    W_-(t) = P'(t + R) u_-(t, s) + Q'(t + R) u_+(t + 2R, s + 2 theta)

so that ``N_+ = J(W_+) d_s u_+`` and ``N_- = J(W_-) d_s u_-``.  The R-derivative
includes the chain-rule terms from ``l(R)`` and ``d(R)`` (``d = 3l``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cutoffs import (CutoffFamily, GluingData, gluing_profile, inverse_profile,
                      profile_derivative, snap_R)
from .gluing import check_pair, transfer_argument, transfer_coefficients, transfer_increment
from .grid import Field, _roll_s, ds_values, dt_values, resample
from .jstruct import (AlmostComplexStructure, apply_delta_difference, apply_dJ,
                      apply_dJ_difference, apply_J)
from .nonlinear import N_infinity, N_matrix_form, N_split, NonlinearResult, error_pair
from .norms import WeightedNormParams, operator_norm_probe, pair_norm

Pair = tuple[Field, Field]
Evaluator = Callable[[Field, Field, GluingData, AlmostComplexStructure], NonlinearResult]


def _pair(res: NonlinearResult) -> Pair:
    return res.N_minus, res.N_plus


def _sub(a: Pair, b: Pair) -> Pair:
    return a[0] - b[0], a[1] - b[1]


def _scale(a: Pair, c: float) -> Pair:
    return a[0] * c, a[1] * c


# ------------------------------------------------------- transfer partials


def transfer_partials(fam: CutoffFamily, t, side: str) -> dict[str, tuple[np.ndarray, ...]]:
    """``{"P": (P, P_t, P_l, P_d), "Q": (...)}`` for one side's structure argument."""
    bm, bp = fam.beta_minus(t), fam.beta_plus(t)
    dbm, dbp = fam.beta_minus_partials(t), fam.beta_plus_partials(t)
    if side == "plus":
        g, dg = fam.gamma_plus(t), fam.gamma_plus_partials(t)
        P = (g * bp,) + tuple(dg[i] * bp + g * dbp[i] for i in range(3))
        Q = (g * bm + 1.0 - g,) + tuple(dg[i] * bm + g * dbm[i] - dg[i] for i in range(3))
    elif side == "minus":
        g, dg = fam.gamma_minus(t), fam.gamma_minus_partials(t)
        P = (g * bp + 1.0 - g,) + tuple(dg[i] * bp + g * dbp[i] - dg[i] for i in range(3))
        Q = (g * bm,) + tuple(dg[i] * bm + g * dbm[i] for i in range(3))
    else:
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    return {"P": P, "Q": Q}


def _far(u: Field, grid, shift_t: float, shift_s: float) -> np.ndarray:
    return _roll_s(resample(u, u.grid, grid, shift_t), shift_s, grid.h_s)


def transfer_R_derivative(u_minus: Field, u_plus: Field, g: GluingData, side: str,
                          split: bool = False):
    """``d/dR`` of the structure argument at fixed (t, s) in natural coordinates.

    With ``split=True`` returns ``(far_part, near_part)``: the terms carrying the
    translated opposite map and the terms carrying the component's own map.
    """
    check_pair(u_minus, u_plus, g)
    fam = g.cutoffs
    lp = g.dl_dR
    dp = 3.0 * lp
    if side == "plus":
        grid = u_plus.grid
        c = transfer_partials(fam, grid.t - g.R, "plus")
        P, Pt, Pl, Pd = c["P"]
        _, Qt, Ql, Qd = c["Q"]
        far = _far(u_minus, grid, -2.0 * g.R, -2.0 * g.theta)
        dfar = _far(Field(u_minus.grid, dt_values(u_minus.values, u_minus.grid.h_t)),
                    grid, -2.0 * g.R, -2.0 * g.theta)
        cf = -Pt + Pl * lp + Pd * dp
        cn = -Qt + Ql * lp + Qd * dp
        far_part = cf[:, None, None] * far - 2.0 * P[:, None, None] * dfar
        near_part = cn[:, None, None] * u_plus.values
    elif side == "minus":
        grid = u_minus.grid
        c = transfer_partials(fam, grid.t + g.R, "minus")
        _, Pt, Pl, Pd = c["P"]
        Q, Qt, Ql, Qd = c["Q"]
        far = _far(u_plus, grid, 2.0 * g.R, 2.0 * g.theta)
        dfar = _far(Field(u_plus.grid, dt_values(u_plus.values, u_plus.grid.h_t)),
                    grid, 2.0 * g.R, 2.0 * g.theta)
        cn = Pt + Pl * lp + Pd * dp
        cf = Qt + Ql * lp + Qd * dp
        far_part = cf[:, None, None] * far + 2.0 * Q[:, None, None] * dfar
        near_part = cn[:, None, None] * u_minus.values
    else:
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    if split:
        return Field(grid, far_part), Field(grid, near_part)
    return Field(grid, far_part + near_part)


def transfer_theta_derivative(u_minus: Field, u_plus: Field, g: GluingData, side: str) -> Field:
    check_pair(u_minus, u_plus, g)
    fam = g.cutoffs
    if side == "plus":
        grid = u_plus.grid
        P, _ = transfer_coefficients(fam, grid.t - g.R, "plus")
        dsu = Field(u_minus.grid, ds_values(u_minus.values, grid.h_s))
        return Field(grid, -2.0 * P[:, None, None] * _far(dsu, grid, -2.0 * g.R, -2.0 * g.theta))
    if side == "minus":
        grid = u_minus.grid
        _, Q = transfer_coefficients(fam, grid.t + g.R, "minus")
        dsu = Field(u_plus.grid, ds_values(u_plus.values, grid.h_s))
        return Field(grid, 2.0 * Q[:, None, None] * _far(dsu, grid, 2.0 * g.R, 2.0 * g.theta))
    raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")


# ------------------------------------------------------- analytic derivatives


def _sides(u_minus: Field, u_plus: Field):
    return (("minus", u_minus), ("plus", u_plus))


def dW_N_analytic(u_minus: Field, u_plus: Field, g: GluingData, J: AlmostComplexStructure,
                  xi_minus: Field, xi_plus: Field) -> Pair:
    """``DJ_W(D_W W(xi)) d_s u + J(W) d_s xi`` on each component."""
    out = []
    for (side, u), xi in zip(_sides(u_minus, u_plus), (xi_minus, xi_plus)):
        hs = u.grid.h_s
        W = transfer_argument(u_minus, u_plus, g, side).values
        dW = transfer_argument(xi_minus, xi_plus, g, side).values
        out.append(Field(u.grid, apply_dJ(J, W, dW, ds_values(u.values, hs))
                         + apply_J(J, W, ds_values(xi.values, hs))))
    return out[0], out[1]


def dW_N_infinity(u_minus: Field, u_plus: Field, J: AlmostComplexStructure,
                  xi_minus: Field, xi_plus: Field) -> Pair:
    out = []
    for u, xi in ((u_minus, xi_minus), (u_plus, xi_plus)):
        hs = u.grid.h_s
        out.append(Field(u.grid, apply_dJ(J, u.values, xi.values, ds_values(u.values, hs))
                         + apply_J(J, u.values, ds_values(xi.values, hs))))
    return out[0], out[1]


def dW_E_analytic(u_minus: Field, u_plus: Field, g: GluingData, J: AlmostComplexStructure,
                  xi_minus: Field, xi_plus: Field) -> Pair:
    """``{DJ_W(D_W W(xi)) - DJ_u(xi)} d_s u + {J(W) - J(u)} d_s xi`` on each component.

    Evaluated as ``DJ_W(D_W W(xi) - xi) + (DJ_W - DJ_u)(xi)`` with the increments
    formed directly, so nothing cancels.
    """
    out = []
    for (side, u), xi in zip(_sides(u_minus, u_plus), (xi_minus, xi_plus)):
        hs = u.grid.h_s
        dW = transfer_increment(u_minus, u_plus, g, side).values
        dxi = transfer_increment(xi_minus, xi_plus, g, side).values
        W = u.values + dW
        dsu, dsxi = ds_values(u.values, hs), ds_values(xi.values, hs)
        first = (apply_dJ(J, W, dxi, dsu)
                 + apply_dJ_difference(J, u.values, dW, xi.values, dsu))
        second = apply_delta_difference(J, u.values, dW, dsxi)
        out.append(Field(u.grid, first + second))
    return out[0], out[1]


def dR_N_analytic(u_minus: Field, u_plus: Field, g: GluingData, J: AlmostComplexStructure,
                  part: str = "all") -> Pair:
    """``DJ_W(d_R W) d_s u`` per component.

    ``part`` selects the terms of ``d_R W`` that are kept: ``"far"`` (the
    translated opposite map), ``"near"`` (the component's own map) or ``"all"``.
    """
    out = []
    for side, u in _sides(u_minus, u_plus):
        W = transfer_argument(u_minus, u_plus, g, side).values
        far, near = transfer_R_derivative(u_minus, u_plus, g, side, split=True)
        dW = {"all": far.values + near.values, "far": far.values, "near": near.values}[part]
        out.append(Field(u.grid, apply_dJ(J, W, dW, ds_values(u.values, u.grid.h_s))))
    return out[0], out[1]


def dTheta_N_analytic(u_minus: Field, u_plus: Field, g: GluingData,
                      J: AlmostComplexStructure) -> Pair:
    out = []
    for side, u in _sides(u_minus, u_plus):
        W = transfer_argument(u_minus, u_plus, g, side).values
        dW = transfer_theta_derivative(u_minus, u_plus, g, side).values
        out.append(Field(u.grid, apply_dJ(J, W, dW, ds_values(u.values, u.grid.h_s))))
    return out[0], out[1]


# ------------------------------------------------------- finite differences


def fd_W(u_minus: Field, u_plus: Field, g: GluingData, J: AlmostComplexStructure,
         xi_minus: Field, xi_plus: Field, h: float,
         evaluator: Evaluator = N_split) -> Pair:
    """Central difference of N along ``(xi_-, xi_+)``.

    The default evaluator is ``N^inf + E``, which stays accurate in the weighted
    norm; :func:`~splice_lab.nonlinear.N_matrix_form` can be passed to compare.
    """
    up = _pair(evaluator(u_minus + xi_minus * h, u_plus + xi_plus * h, g, J))
    um = _pair(evaluator(u_minus - xi_minus * h, u_plus - xi_plus * h, g, J))
    return _scale(_sub(up, um), 1.0 / (2.0 * h))


def fd_R(u_minus: Field, u_plus: Field, g: GluingData, J: AlmostComplexStructure,
         n_steps: int = 1, evaluator: Evaluator = error_pair) -> Pair:
    """Central difference in R over grid-aligned steps ``n_steps * h_t``.

    The default evaluator is the error term ``N^R - N^inf`` (``N^inf`` does not
    depend on R).  The parameter derivatives sit many orders of magnitude below
    |N| itself, under the rounding floor of any evaluation of N, so only the
    cancellation-free error term can resolve them.
    """
    dR = n_steps * u_plus.grid.h_t
    up = _pair(evaluator(u_minus, u_plus, g.with_R(g.R + dR), J))
    um = _pair(evaluator(u_minus, u_plus, g.with_R(g.R - dR), J))
    return _scale(_sub(up, um), 1.0 / (2.0 * dR))


def fd_theta(u_minus: Field, u_plus: Field, g: GluingData, J: AlmostComplexStructure,
             n_steps: int = 1, evaluator: Evaluator = error_pair) -> Pair:
    dth = n_steps * u_plus.grid.h_s
    up = _pair(evaluator(u_minus, u_plus, g.with_theta(g.theta + dth), J))
    um = _pair(evaluator(u_minus, u_plus, g.with_theta(g.theta - dth), J))
    return _scale(_sub(up, um), 1.0 / (2.0 * dth))


@dataclass(frozen=True, eq=False)
class DerivativeReport:
    """Analytic derivative against central differences at two step sizes.

    ``refinement_ratio`` is discrepancy(coarse step) / discrepancy(fine step);
    a second-order difference gives about 4 when the step halves.
    """

    analytic: Pair
    finite_difference: Pair
    h: float
    discrepancy: float
    refinement_ratio: float
    discrepancies: tuple[float, float] = (0.0, 0.0)
    steps: tuple[float, float] = (0.0, 0.0)
    scale: float = 0.0

    @property
    def step_ratio(self) -> float:
        return self.steps[0] / self.steps[1]


def _report(analytic: Pair, fds: Sequence[Pair], hs: Sequence[float],
            params: WeightedNormParams) -> DerivativeReport:
    out_params = params.lowered()
    disc = [pair_norm(*_sub(analytic, fd), out_params) for fd in fds]
    ratio = disc[0] / disc[1] if disc[1] > 0 else float("inf")
    return DerivativeReport(analytic, fds[1], hs[1], disc[1], ratio, (disc[0], disc[1]),
                            (hs[0], hs[1]), pair_norm(*analytic, out_params))


def check_dW(u_minus: Field, u_plus: Field, g: GluingData, J: AlmostComplexStructure,
             xi_minus: Field, xi_plus: Field, params: WeightedNormParams,
             h: float = 0.2) -> DerivativeReport:
    """Analytic D_W N against central differences with steps h and h/2."""
    an = dW_N_analytic(u_minus, u_plus, g, J, xi_minus, xi_plus)
    hs = (h, h / 2.0)
    fds = [fd_W(u_minus, u_plus, g, J, xi_minus, xi_plus, s) for s in hs]
    return _report(an, fds, hs, params)


def check_dR(u_minus: Field, u_plus: Field, g: GluingData, J: AlmostComplexStructure,
             params: WeightedNormParams, n_steps: tuple[int, int] = (2, 1)) -> DerivativeReport:
    """Analytic D_R N against central differences over ``n * h_t`` for the two step counts."""
    an = dR_N_analytic(u_minus, u_plus, g, J)
    fds = [fd_R(u_minus, u_plus, g, J, n) for n in n_steps]
    return _report(an, fds, [n * u_plus.grid.h_t for n in n_steps], params)


def check_dTheta(u_minus: Field, u_plus: Field, g: GluingData, J: AlmostComplexStructure,
                 params: WeightedNormParams,
                 n_steps: tuple[int, int] = (2, 1)) -> DerivativeReport:
    an = dTheta_N_analytic(u_minus, u_plus, g, J)
    fds = [fd_theta(u_minus, u_plus, g, J, n) for n in n_steps]
    return _report(an, fds, [n * u_plus.grid.h_s for n in n_steps], params)


# ------------------------------------------------------- F_1 and the limit R -> infinity


def F1_apply(g: GluingData, xi_minus: Field, xi_plus: Field) -> Field:
    """``rho * D_W W_+(xi)`` on the plus grid."""
    dW = transfer_argument(xi_minus, xi_plus, g, "plus")
    rho = g.rho()(dW.grid.t)
    return Field(dW.grid, rho[:, None, None] * dW.values)


def F1_distance(g1: GluingData, g2: GluingData, params: WeightedNormParams,
                grids, n_probes: int = 16, seed: int = 0, n: int = 1) -> float:
    """Probed operator norm of ``F_1(., R1) - F_1(., R2)``."""
    lo = min(g1.window_plus[0], g2.window_plus[0]) - 1.0
    hi = max(g1.window_plus[1], g2.window_plus[1]) + 1.0
    R = min(g1.R, g2.R)
    focus = ((lo - 2.0 * R, hi - 2.0 * R), (lo, hi))
    res = operator_norm_probe(lambda a, b: F1_apply(g1, a, b) - F1_apply(g2, a, b),
                              params, n_probes, seed, grids, n, focus=focus)
    return res.value


def fit_slope(R: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of ``ln(value)`` against R (values must be positive)."""
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0):
        raise ValueError("slope fit needs positive values")
    return float(np.polyfit(np.asarray(R, dtype=float), np.log(v), 1)[0])


@dataclass
class C1Report:
    R: list[float]
    r: list[float]
    dR_norm: list[float]
    dtheta_norm: list[float]
    dr_norm: list[float]
    N_gap: list[float]
    slopes: dict[str, float] = field(default_factory=dict)
    r_chart_monotone: bool = False
    N_gap_matrix: list[float] = field(default_factory=list)
    all_zero: bool = False

    def passes(self, threshold: float = -0.20) -> bool:
        if self.all_zero:
            return True
        return (all(s <= threshold for s in self.slopes.values()) and self.r_chart_monotone)


def r_sequence_for(R_list: Sequence[float], r0: float = 1.0, profile: str = "offset") -> list[float]:
    return [inverse_profile(R, r0, profile) for R in R_list]


def c1_at_infinity_check(u_minus: Field, u_plus: Field, J: AlmostComplexStructure,
                         r_sequence: Sequence[float], r0: float = 1.0,
                         params: WeightedNormParams | None = None, variant: str = "desk",
                         m: int = 1, theta: float = 0.0, profile: str = "offset") -> C1Report:
    """Norms of D_R N, D_theta N and N^R - N^inf along a sequence r -> 0.

    ``N^R - N^inf`` is the error term in product form; the same difference taken
    through the matrix form is kept in ``N_gap_matrix`` (it flattens at the
    weighted rounding floor of the a-line mixing).

    Each r maps to R through the gluing profile, snapped to the t-lattice; the
    r-chart derivative is ``D_R N * dR/dr``.
    """
    from .cutoffs import make_gluing

    if len(r_sequence) < 4:
        raise ValueError("need at least 4 points for a decay fit")
    if any(b >= a for a, b in zip(r_sequence, r_sequence[1:])):
        raise ValueError("r_sequence must be strictly decreasing")
    params = params or WeightedNormParams()
    out_params = params.lowered()
    h_t = u_plus.grid.h_t
    inf = N_infinity(u_minus, u_plus, J)
    rep = C1Report([], [], [], [], [], [])
    for r in r_sequence:
        R = snap_R(gluing_profile(r, r0, profile), h_t, variant)
        g = make_gluing(R, theta, u_plus.grid, m=m, variant=variant, r0=r0, profile=profile,
                        check_R0=False)
        dR = pair_norm(*dR_N_analytic(u_minus, u_plus, g, J), out_params)
        dth = pair_norm(*dTheta_N_analytic(u_minus, u_plus, g, J), out_params)
        E = error_pair(u_minus, u_plus, g, J)
        gap = pair_norm(E.N_minus, E.N_plus, out_params)
        N = N_matrix_form(u_minus, u_plus, g, J)
        rep.N_gap_matrix.append(pair_norm(N.N_minus - inf.N_minus, N.N_plus - inf.N_plus,
                                          out_params))
        rep.R.append(R)
        rep.r.append(g.r)
        rep.dR_norm.append(dR)
        rep.dtheta_norm.append(dth)
        rep.dr_norm.append(dR * abs(profile_derivative(g.r)))
        rep.N_gap.append(gap)
    series = {"dR": rep.dR_norm, "dtheta": rep.dtheta_norm, "N_gap": rep.N_gap}
    if all(max(v) == 0.0 for v in series.values()):
        rep.all_zero = True
        rep.r_chart_monotone = True
        return rep
    rep.slopes = {k: fit_slope(rep.R, v) for k, v in series.items()}
    rep.slopes["dr"] = fit_slope(rep.R, rep.dr_norm)
    rep.r_chart_monotone = all(b < a for a, b in zip(rep.dr_norm, rep.dr_norm[1:]))
    return rep
