"""The nonlinear part N^R of the filled section and its error term.

Two independent evaluators are provided.  ``N_matrix_form`` literally
multiplies out the conjugated product on the common a-line; ``N_piecewise``
evaluates the region formulas in each component's own coordinate and checks
that overlapping regions agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cutoffs import GluingData
from .gluing import (a_line, check_pair, transfer_argument, transfer_increment,
                     translated_minus, translated_plus, vhat_coefficients)
from .grid import CylinderGrid, Field, _roll_s, ds_values, dt_values, resample
from .jstruct import AlmostComplexStructure, apply_delta_difference, apply_J

OVERLAP_TOL = 1e-10


class RegionMismatchError(RuntimeError):
    """Two region formulas disagree on their common strip."""


@dataclass(frozen=True, eq=False)
class NonlinearResult:
    N_minus: Field
    N_plus: Field
    gluing: GluingData | None
    form: str
    overlap_discrepancy: float = 0.0
    derivative_order_loss: int = 1


@dataclass(frozen=True, eq=False)
class ErrorTerm:
    E_plus: Field
    E_minus: Field
    support_window_plus: tuple[float, float]
    support_window_minus: tuple[float, float]
    form_discrepancy: float = 0.0

    def outside_support(self) -> float:
        """Largest |E| at nodes outside the declared windows (both components)."""
        out = 0.0
        for E, (a, b) in ((self.E_plus, self.support_window_plus),
                          (self.E_minus, self.support_window_minus)):
            t = E.grid.t
            mask = (t < a) | (t > b)
            if mask.any():
                out = max(out, float(np.max(np.abs(E.values[mask]))))
        return out


def _glue_line(u_minus: Field, u_plus: Field, g: GluingData):
    line = a_line(u_minus.grid, u_plus.grid, g.R)
    tm = translated_minus(u_minus, g, line)
    tp = translated_plus(u_plus, g, line)
    fam = g.cutoffs
    bm = fam.beta_minus(line.t)[:, None, None]
    bp = fam.beta_plus(line.t)[:, None, None]
    return line, tm, tp, bm, bp


def _to_minus(vals: np.ndarray, line: CylinderGrid, grid: CylinderGrid, g: GluingData):
    """a-line values read in t_- coordinates: ``F(t + R, s + theta)``."""
    return _roll_s(resample(vals, line, grid, g.R), g.theta, grid.h_s)


def _to_plus(vals: np.ndarray, line: CylinderGrid, grid: CylinderGrid, g: GluingData):
    """a-line values read in t_+ coordinates: ``F(t - R, s - theta)``."""
    return _roll_s(resample(vals, line, grid, -g.R), -g.theta, grid.h_s)


def N_matrix_form(u_minus: Field, u_plus: Field, g: GluingData,
                  J: AlmostComplexStructure) -> NonlinearResult:
    """``diag(tau_a, tau_-a) T^-1 diag(J(v_hat), J(v_+)) T (d_s tau_-a u_-, d_s tau_a u_+)``."""
    check_pair(u_minus, u_plus, g)
    line, tm, tp, bm, bp = _glue_line(u_minus, u_plus, g)
    hs = line.h_s
    Am, Ap = ds_values(tm, hs), ds_values(tp, hs)
    Bm = bm * Am - bp * Ap
    Bp = bp * Am + bm * Ap
    cm, cp = vhat_coefficients(g.cutoffs, line.t)
    vhat = cm[:, None, None] * tm + cp[:, None, None] * tp
    vplus = bp * tm + bm * tp
    Cm = apply_J(J, vhat, Bm)
    Cp = apply_J(J, vplus, Bp)
    D = bm ** 2 + bp ** 2
    Fm = (bm * Cm + bp * Cp) / D
    Fp = (-bp * Cm + bm * Cp) / D
    Nm = Field(u_minus.grid, _to_minus(Fm, line, u_minus.grid, g))
    Np = Field(u_plus.grid, _to_plus(Fp, line, u_plus.grid, g))
    return NonlinearResult(Nm, Np, g, "matrix")


def _assemble(regions, t: np.ndarray, tol: float, label: str):
    """Combine region formulas; every node must be covered, overlaps must agree."""
    out = None
    covered = np.zeros(t.shape, dtype=bool)
    worst = 0.0
    for mask, vals in regions:
        if out is None:
            out = np.zeros_like(vals)
        both = covered & mask
        if both.any():
            diff = float(np.max(np.abs(out[both] - vals[both])))
            worst = max(worst, diff)
            if diff > tol:
                raise RegionMismatchError(f"{label}: overlapping region formulas differ by {diff:.3e}")
        fresh = mask & ~covered
        out[fresh] = vals[fresh]
        covered |= mask
    if not covered.all():
        raise RegionMismatchError(f"{label}: {int((~covered).sum())} t-nodes covered by no region")
    return out, worst


def N_piecewise(u_minus: Field, u_plus: Field, g: GluingData, J: AlmostComplexStructure,
                tol: float = OVERLAP_TOL) -> NonlinearResult:
    """Region-by-region evaluation in the natural coordinates t_+ and t_-.

    N_+ : J(u_+) d_s u_+                      t > R+d+l+2
          J(v_hat(t-R)) d_s u_+               R+d+l-1 < t < R+d+l+3
          J(v_+(t-R)) d_s u_+                 R-d-l-1 < t < R+d+l
          J(u_+) d_s u_+                      t < R-d-l
    N_- is the mirror image with v_hat on the far-left strip.
    """
    check_pair(u_minus, u_plus, g)
    line, tm, tp, bm, bp = _glue_line(u_minus, u_plus, g)
    cm, cp = vhat_coefficients(g.cutoffs, line.t)
    vhat = cm[:, None, None] * tm + cp[:, None, None] * tp
    vplus = bp * tm + bm * tp
    R, w = g.R, g.d + g.l

    gp = u_plus.grid
    t = gp.t
    dsu = ds_values(u_plus.values, gp.h_s)
    inf_p = apply_J(J, u_plus.values, dsu)
    plus_regions = [
        (t > R + w + 2, inf_p),
        ((t > R + w - 1) & (t < R + w + 3), apply_J(J, _to_plus(vhat, line, gp, g), dsu)),
        ((t > R - w - 1) & (t < R + w), apply_J(J, _to_plus(vplus, line, gp, g), dsu)),
        (t < R - w, inf_p),
    ]
    Np, wp = _assemble(plus_regions, t, tol, "N_plus")

    gm = u_minus.grid
    t = gm.t
    dsu = ds_values(u_minus.values, gm.h_s)
    inf_m = apply_J(J, u_minus.values, dsu)
    minus_regions = [
        (t < -R - w - 2, inf_m),
        ((t > -R - w - 3) & (t < -R - w + 1), apply_J(J, _to_minus(vhat, line, gm, g), dsu)),
        ((t > -R - w) & (t < -R + w + 1), apply_J(J, _to_minus(vplus, line, gm, g), dsu)),
        (t > -R + w, inf_m),
    ]
    Nm, wm = _assemble(minus_regions, t, tol, "N_minus")
    return NonlinearResult(Field(gm, Nm), Field(gp, Np), g, "piecewise", max(wp, wm))


def N_infinity(u_minus: Field, u_plus: Field, J: AlmostComplexStructure) -> NonlinearResult:
    """Unglued limit ``(J(u_-) d_s u_-, J(u_+) d_s u_+)``."""
    out = []
    for u in (u_minus, u_plus):
        out.append(Field(u.grid, apply_J(J, u.values, ds_values(u.values, u.grid.h_s))))
    return NonlinearResult(out[0], out[1], None, "infinity")


def N_closed_form(u_minus: Field, u_plus: Field, g: GluingData,
                  J: AlmostComplexStructure) -> NonlinearResult:
    """``(J(W_-) d_s u_-, J(W_+) d_s u_+)`` with the per-component transfer arguments."""
    out = []
    for u, side in ((u_minus, "minus"), (u_plus, "plus")):
        W = transfer_argument(u_minus, u_plus, g, side)
        out.append(Field(u.grid, apply_J(J, W.values, ds_values(u.values, u.grid.h_s))))
    return NonlinearResult(out[0], out[1], g, "closed")


def error_pair(u_minus: Field, u_plus: Field, g: GluingData,
               J: AlmostComplexStructure) -> NonlinearResult:
    """``(J(u + dW) - J(u)) d_s u`` per component, with ``dW = W - u`` formed directly.

    Keeps full relative accuracy however small E is, which the parameter
    finite differences rely on.
    """
    out = []
    for u, side in ((u_minus, "minus"), (u_plus, "plus")):
        dW = transfer_increment(u_minus, u_plus, g, side)
        dsu = ds_values(u.values, u.grid.h_s)
        out.append(Field(u.grid, apply_delta_difference(J, u.values, dW.values, dsu)))
    return NonlinearResult(out[0], out[1], g, "error")


def N_split(u_minus: Field, u_plus: Field, g: GluingData,
            J: AlmostComplexStructure) -> NonlinearResult:
    """``N^inf + E`` with E from :func:`error_pair`.

    Every value keeps its rounding relative to the local size of u, whereas the
    matrix form mixes the two components on the a-line; in the weighted norm the
    latter's rounding is amplified by up to ``e^{2 delta (d+l)}``.
    """
    inf = N_infinity(u_minus, u_plus, J)
    E = error_pair(u_minus, u_plus, g, J)
    return NonlinearResult(inf.N_minus + E.N_minus, inf.N_plus + E.N_plus, g, "split")


def error_term(u_minus: Field, u_plus: Field, g: GluingData, J: AlmostComplexStructure,
               tol: float = OVERLAP_TOL) -> ErrorTerm:
    """``E = N^R - N^inf`` computed two ways; the product form is returned.

    The subtraction form differences the piecewise evaluation and the limit
    map.  The product form ``(J(W) - J(u)) d_s u`` never subtracts nearly equal
    numbers, so it stays accurate at the e^-50 scales the decay fits reach.
    """
    pw = N_piecewise(u_minus, u_plus, g, J)
    inf = N_infinity(u_minus, u_plus, J)
    prod = error_pair(u_minus, u_plus, g, J)
    worst = 0.0
    for E, Nr, Ni in ((prod.N_minus, pw.N_minus, inf.N_minus),
                      (prod.N_plus, pw.N_plus, inf.N_plus)):
        worst = max(worst, float(np.max(np.abs(E.values - (Nr.values - Ni.values)))))
    if worst > tol:
        raise RegionMismatchError(f"error-term forms differ by {worst:.3e}")
    return ErrorTerm(prod.N_plus, prod.N_minus, g.window_plus, g.window_minus, worst)


def phi_pair(v_minus: Field, v_plus: Field, v_hat: Field,
             J: AlmostComplexStructure) -> tuple[Field, Field]:
    """The two Cauchy-Riemann type operators on the glued cylinders (connection term zero).

    ``Phi_+ = d_t v_+ + J(v_+) d_s v_+``,
    ``Phi_- = d_t v_- + J(v_hat o Gamma) d_s v_-``.
    """
    gp = v_plus.grid
    phi_p = dt_values(v_plus.values, gp.h_t) + apply_J(J, v_plus.values,
                                                       ds_values(v_plus.values, gp.h_s))
    gm = v_minus.grid
    vh = resample(v_hat, v_hat.grid, gm)
    phi_m = dt_values(v_minus.values, gm.h_t) + apply_J(J, vh, ds_values(v_minus.values, gm.h_s))
    return Field(gm, phi_m), Field(gp, phi_p)


def linear_part_at_zero(v: Field, J: AlmostComplexStructure) -> Field:
    """Linearization of ``v -> d_t v + J(v) d_s v`` at v = 0 (J(0) = J0)."""
    g = v.grid
    return Field(g, dt_values(v.values, g.h_t)
                 + np.einsum("ij,...j->...i", J.J0, ds_values(v.values, g.h_s)))


def commutator_check(w: Field, g: GluingData, J: AlmostComplexStructure,
                     w_other: Field | None = None) -> float:
    """Max node norm of ``[diag(J(w), J(w')), T_beta (x) I]`` over the ramp (-d-l, d+l).

    ``w`` is on an a-coordinate grid.  With ``w_other=None`` both diagonal
    blocks use ``w``, which is the situation the transfer map creates.
    """
    w2 = w if w_other is None else w_other
    if w2.grid != w.grid:
        raise ValueError("w and w_other must share a grid")
    t = w.grid.t
    mask = (t > -g.d - g.l) & (t < g.d + g.l)
    if not mask.any():
        return 0.0
    A = J.eval(w.values[mask])
    B = J.eval(w2.values[mask])
    fam = g.cutoffs
    bm = np.broadcast_to(fam.beta_minus(t[mask])[:, None], A.shape[:2])
    bp = np.broadcast_to(fam.beta_plus(t[mask])[:, None], A.shape[:2])
    m = A.shape[-1]
    I = np.eye(m)
    Z = np.zeros_like(A)
    big_J = np.block([[A, Z], [Z, B]]) if A.ndim == 2 else _block2(A, Z, Z, B)
    T = _block2(bm[..., None, None] * I, -bp[..., None, None] * I,
                bp[..., None, None] * I, bm[..., None, None] * I)
    comm = big_J @ T - T @ big_J
    return float(np.max(np.linalg.norm(comm, ord=2, axis=(-2, -1))))


def _block2(a, b, c, d):
    return np.concatenate([np.concatenate([a, b], -1), np.concatenate([c, d], -1)], -2)
