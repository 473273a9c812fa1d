"""Total gluing of map pairs, its inverse, the extended gluing and the transfer map.

Coordinates: ``u_minus`` lives on ``C_-`` with ``t_- <= 0`` and ``u_plus`` on
``C_+`` with ``t_+ >= 0``.  In the a-dependent coordinate ``t`` we have
``t_- = t - R`` and ``t_+ = t + R`` (and ``s_-+ = s -+ theta``), so

    (tau_{-a} u_-)(t, s) = u_-(t - R, s - theta)
    (tau_a u_+)(t, s)    = u_+(t + R, s + theta)

Everything glued is evaluated on one common "a-line" grid wide enough to hold
both translated maps; values off a map's window are zero-extended.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cutoffs import CutoffFamily, GluingData, alpha_minus, alpha_plus
from .grid import (CylinderGrid, Field, GridAlignmentError, _roll_s, field_from_bytes,
                   field_to_bytes, resample, steps)


def check_pair(u_minus: Field, u_plus: Field, g: GluingData | None = None) -> None:
    gm, gp = u_minus.grid, u_plus.grid
    if not gm.compatible(gp):
        raise GridAlignmentError(f"u_minus grid {gm} and u_plus grid {gp} do not share a lattice")
    if u_minus.dim != u_plus.dim:
        raise ValueError("u_minus and u_plus have different target dimensions")
    if g is not None:
        if g.ns != gm.ns:
            raise ValueError(f"gluing data built for ns = {g.ns}, fields have ns = {gm.ns}")
        steps(g.R, gm.h_t, "R")
        steps(g.theta, gm.h_s, "theta")


def a_line(gm: CylinderGrid, gp: CylinderGrid, R: float) -> CylinderGrid:
    """Symmetric a-coordinate window covering both translated maps.

    Map windows must sit on the lattice through t = 0 (t_min a multiple of h_t).
    """
    h = gm.h_t
    steps(gm.t_min, h, "u_minus window start")
    steps(gp.t_min, h, "u_plus window start")
    A = max(-gm.t_min - R, gp.t_max - R, R)
    k = int(np.ceil(A / h - 1e-9))
    return CylinderGrid(-k * h, k * h, 2 * k + 1, gm.ns)


def translated_minus(u_minus: Field, g: GluingData, grid: CylinderGrid) -> np.ndarray:
    """``tau_{-a} u_-`` sampled on ``grid``."""
    return _roll_s(resample(u_minus, u_minus.grid, grid, -g.R), -g.theta, grid.h_s)


def translated_plus(u_plus: Field, g: GluingData, grid: CylinderGrid) -> np.ndarray:
    """``tau_a u_+`` sampled on ``grid``."""
    return _roll_s(resample(u_plus, u_plus.grid, grid, g.R), g.theta, grid.h_s)


def vhat_coefficients(fam: CutoffFamily, t) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of ``tau_{-a} u_-`` and ``tau_a u_+`` in the extended gluing."""
    gm, gp = fam.gamma_minus(t), fam.gamma_plus(t)
    bm, bp = fam.beta_minus(t), fam.beta_plus(t)
    return gm * gp * bp + (1.0 - gm), gm * gp * bm + (1.0 - gp)


def transfer_coefficients(fam: CutoffFamily, t, side: str) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of the structure argument seen by one component.

    The + component sees ``gamma_+ v_+ + (1 - gamma_+) tau_a u_+`` and the -
    component ``gamma_- v_+ + (1 - gamma_-) tau_{-a} u_-``.  Both agree with the
    extended gluing wherever the other gamma equals 1, and with the ordinary
    gluing on the far side, which is what the matrix form of N produces.
    """
    bm, bp = fam.beta_minus(t), fam.beta_plus(t)
    if side == "plus":
        gp = fam.gamma_plus(t)
        return gp * bp, gp * bm + (1.0 - gp)
    if side == "minus":
        gm = fam.gamma_minus(t)
        return gm * bp + (1.0 - gm), gm * bm
    raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")


@dataclass(frozen=True, eq=False)
class GluedPair:
    v_minus: Field
    v_plus: Field
    gluing: GluingData


@dataclass(frozen=True, eq=False)
class ExtendedGluing:
    v_hat_plus: Field
    gluing: GluingData


def total_glue(u_minus: Field, u_plus: Field, g: GluingData) -> GluedPair:
    """``(v_-, v_+) = T_beta (tau_{-a} u_-, tau_a u_+)``; v_+ restricted to [-R, R]."""
    check_pair(u_minus, u_plus, g)
    line = a_line(u_minus.grid, u_plus.grid, g.R)
    tm, tp = translated_minus(u_minus, g, line), translated_plus(u_plus, g, line)
    fam = g.cutoffs
    bm = fam.beta_minus(line.t)[:, None, None]
    bp = fam.beta_plus(line.t)[:, None, None]
    v_minus = Field(line, bm * tm - bp * tp)
    v_plus_line = bp * tm + bm * tp
    finite = line.window(-g.R, g.R)
    v_plus = Field(finite, resample(v_plus_line, line, finite))
    return GluedPair(v_minus, v_plus, g)


def total_unglue(pair: GluedPair,
                 grids: tuple[CylinderGrid, CylinderGrid] | None = None) -> tuple[Field, Field]:
    """Inverse gluing ``diag(tau_a, tau_{-a}) (1/D) [[b-, b+], [-b+, b-]] (eta_-, eta_+)``."""
    g = pair.gluing
    eta_m, eta_p = pair.v_minus, pair.v_plus
    if not eta_m.grid.compatible(eta_p.grid):
        raise GridAlignmentError("eta_- and eta_+ windows are not on a common lattice")
    line = eta_m.grid
    em = eta_m.values
    ep = resample(eta_p, eta_p.grid, line)
    fam = g.cutoffs
    bm = fam.beta_minus(line.t)[:, None, None]
    bp = fam.beta_plus(line.t)[:, None, None]
    D = bm ** 2 + bp ** 2
    first = (bm * em + bp * ep) / D
    second = (-bp * em + bm * ep) / D
    if grids is None:
        gm = CylinderGrid(line.t_min - g.R, 0.0, steps(g.R - line.t_min, line.h_t) + 1, line.ns)
        gp = CylinderGrid(0.0, line.t_max + g.R, steps(line.t_max + g.R, line.h_t) + 1, line.ns)
    else:
        gm, gp = grids
    u_minus = _roll_s(resample(first, line, gm, g.R), g.theta, line.h_s)
    u_plus = _roll_s(resample(second, line, gp, -g.R), -g.theta, line.h_s)
    return Field(gm, u_minus), Field(gp, u_plus)


def extended_glue(u_minus: Field, u_plus: Field, g: GluingData,
                  expanded: bool = True) -> ExtendedGluing:
    """Extended gluing on the bi-infinite cylinder (truncated to the a-line).

    ``expanded=False`` evaluates the defining gamma/oplus form instead of the
    two-coefficient expansion; both agree to rounding.
    """
    check_pair(u_minus, u_plus, g)
    line = a_line(u_minus.grid, u_plus.grid, g.R)
    tm, tp = translated_minus(u_minus, g, line), translated_plus(u_plus, g, line)
    fam = g.cutoffs
    t = line.t
    if expanded:
        cm, cp = vhat_coefficients(fam, t)
        vals = cm[:, None, None] * tm + cp[:, None, None] * tp
    else:
        gm = fam.gamma_minus(t)[:, None, None]
        gp = fam.gamma_plus(t)[:, None, None]
        oplus = fam.beta_plus(t)[:, None, None] * tm + fam.beta_minus(t)[:, None, None] * tp
        vals = gm * gp * oplus + (1.0 - gm) * tm + (1.0 - gp) * tp
    return ExtendedGluing(Field(line, vals), g)


def transfer_pullback(ext: ExtendedGluing) -> Field:
    """The transfer map is the coordinate identity: same samples, read on S^a_-."""
    return ext.v_hat_plus


def pullback_to_plus(ext: ExtendedGluing, grid: CylinderGrid) -> Field:
    """``v_hat o Gamma o tau_{-a}`` on a t_+ grid: values ``v_hat(t - R, s - theta)``."""
    g = ext.gluing
    v = ext.v_hat_plus
    return Field(grid, _roll_s(resample(v, v.grid, grid, -g.R), -g.theta, grid.h_s))


def transfer_argument(u_minus: Field, u_plus: Field, g: GluingData, side: str) -> Field:
    """Structure argument of one component, in that component's natural coordinates.

    plus:  ``P(t-R) u_-(t-2R, s-2theta) + Q(t-R) u_+(t, s)`` on u_+'s grid
    minus: ``P(t+R) u_-(t, s) + Q(t+R) u_+(t+2R, s+2theta)`` on u_-'s grid
    with ``(P, Q)`` from :func:`transfer_coefficients`.
    """
    check_pair(u_minus, u_plus, g)
    fam = g.cutoffs
    if side == "plus":
        grid = u_plus.grid
        P, Q = transfer_coefficients(fam, grid.t - g.R, "plus")
        far = _roll_s(resample(u_minus, u_minus.grid, grid, -2.0 * g.R), -2.0 * g.theta, grid.h_s)
        return Field(grid, P[:, None, None] * far + Q[:, None, None] * u_plus.values)
    grid = u_minus.grid
    P, Q = transfer_coefficients(fam, grid.t + g.R, "minus")
    far = _roll_s(resample(u_plus, u_plus.grid, grid, 2.0 * g.R), 2.0 * g.theta, grid.h_s)
    return Field(grid, P[:, None, None] * u_minus.values + Q[:, None, None] * far)


def transfer_increment(u_minus: Field, u_plus: Field, g: GluingData, side: str) -> Field:
    """``W - u`` for one component, computed without cancellation.

    plus:  ``P u_-(t-2R, s-2theta) - gamma_+ alpha_+((t-R-d)/l) u_+``
    minus: ``-gamma_- alpha_-((t+R+d)/l) u_- + Q' u_+(t+2R, s+2theta)``
    """
    check_pair(u_minus, u_plus, g)
    fam = g.cutoffs
    if side == "plus":
        grid = u_plus.grid
        a = grid.t - g.R
        P, _ = transfer_coefficients(fam, a, "plus")
        q1 = -fam.gamma_plus(a) * alpha_plus((a - fam.d) / fam.l)
        far = _roll_s(resample(u_minus, u_minus.grid, grid, -2.0 * g.R), -2.0 * g.theta, grid.h_s)
        return Field(grid, P[:, None, None] * far + q1[:, None, None] * u_plus.values)
    if side == "minus":
        grid = u_minus.grid
        a = grid.t + g.R
        _, Q = transfer_coefficients(fam, a, "minus")
        p1 = -fam.gamma_minus(a) * alpha_minus((a + fam.d) / fam.l)
        far = _roll_s(resample(u_plus, u_plus.grid, grid, 2.0 * g.R), 2.0 * g.theta, grid.h_s)
        return Field(grid, p1[:, None, None] * u_minus.values + Q[:, None, None] * far)
    raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")


def _sibling(stem: Path, suffix: str) -> Path:
    return stem.parent / (stem.name + suffix)


def save_glued(pair: GluedPair, stem: str | Path) -> None:
    """Writes ``<stem>.minus.cylf``, ``<stem>.plus.cylf`` and ``<stem>.json``."""
    stem = Path(stem)
    _sibling(stem, ".minus.cylf").write_bytes(field_to_bytes(pair.v_minus))
    _sibling(stem, ".plus.cylf").write_bytes(field_to_bytes(pair.v_plus))
    _sibling(stem, ".json").write_text(json.dumps({"kind": "glued_pair",
                                                     "gluing": pair.gluing.as_dict()}, indent=2))


def load_glued(stem: str | Path) -> GluedPair:
    stem = Path(stem)
    meta = json.loads(_sibling(stem, ".json").read_text())
    g = GluingData(**meta["gluing"])
    return GluedPair(field_from_bytes(_sibling(stem, ".minus.cylf").read_bytes()),
                     field_from_bytes(_sibling(stem, ".plus.cylf").read_bytes()), g)


def save_extended(ext: ExtendedGluing, stem: str | Path) -> None:
    stem = Path(stem)
    _sibling(stem, ".vhat.cylf").write_bytes(field_to_bytes(ext.v_hat_plus))
    _sibling(stem, ".json").write_text(json.dumps({"kind": "extended_gluing",
                                                     "gluing": ext.gluing.as_dict()}, indent=2))


def load_extended(stem: str | Path) -> ExtendedGluing:
    stem = Path(stem)
    meta = json.loads(_sibling(stem, ".json").read_text())
    return ExtendedGluing(field_from_bytes(_sibling(stem, ".vhat.cylf").read_bytes()),
                          GluingData(**meta["gluing"]))
