from __future__ import annotations

import math

import numpy as np
import pytest

from splice_lab.cutoffs import make_gluing
from splice_lab.derivatives import (F1_apply, c1_at_infinity_check, check_dR, check_dTheta,
                                    check_dW, dR_N_analytic, dTheta_N_analytic, dW_E_analytic,
                                    dW_N_analytic, dW_N_infinity, fd_W, r_sequence_for,
                                    transfer_R_derivative)
from splice_lab.gluing import transfer_argument
from splice_lab.grid import ds_values, zeros
from splice_lab.harness.testmaps import TestMapSpec, generate_test_pair, map_grids
from splice_lab.jstruct import conjugated_J, standard_J
from splice_lab.nonlinear import N_matrix_form, error_pair
from splice_lab.norms import WeightedNormParams, pair_norm, probe_field

J = conjugated_J(1, 0.3)
PARAMS = WeightedNormParams()


def _unit_probe(grids, rng, focus=None):
    fm, fp = focus if focus else ((-8.0, 0.0), (0.0, 8.0))
    xm, xp = probe_field(grids[0], 1, rng, fm), probe_field(grids[1], 1, rng, fp)
    c = 1.0 / pair_norm(xm, xp, PARAMS)
    return xm * c, xp * c


def test_standard_structure_derivative_is_J0_ds(small_pair, small_grids, rotated_gluing):
    J0 = standard_J(1)
    xm, xp = _unit_probe(small_grids, np.random.default_rng(0))
    dm, dp = dW_N_analytic(*small_pair, rotated_gluing, J0, xm, xp)
    for xi, d in ((xm, dm), (xp, dp)):
        ref = np.einsum("ij,...j->...i", J0.J0, ds_values(xi.values, xi.grid.h_s))
        assert np.max(np.abs(d.values - ref)) <= 1e-15


def test_zero_direction_gives_zero(small_pair, small_grids, small_gluing):
    z = (zeros(small_grids[0]), zeros(small_grids[1]))
    for out in (dW_N_analytic(*small_pair, small_gluing, J, *z),
                dW_E_analytic(*small_pair, small_gluing, J, *z)):
        assert not out[0].values.any() and not out[1].values.any()


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_dW_refinement(small_grids, small_gluing, seed):
    um, up = generate_test_pair(TestMapSpec(), small_grids, seed)
    xm, xp = _unit_probe(small_grids, np.random.default_rng(seed))
    rep = check_dW(um, up, small_gluing, J, xm, xp, PARAMS, h=0.2)
    assert rep.refinement_ratio >= 3.5
    assert rep.step_ratio == 2.0


def test_dW_E_is_difference_of_derivatives(small_pair, small_grids, rotated_gluing):
    g = rotated_gluing
    xm, xp = _unit_probe(small_grids, np.random.default_rng(5), (g.window_minus, g.window_plus))
    full = dW_N_analytic(*small_pair, g, J, xm, xp)
    inf = dW_N_infinity(*small_pair, J, xm, xp)
    E = dW_E_analytic(*small_pair, g, J, xm, xp)
    for f, i, e in zip(full, inf, E):
        assert np.max(np.abs(f.values - i.values - e.values)) <= 1e-15


def test_dW_E_matches_difference_quotient(small_pair, small_grids, rotated_gluing):
    g = rotated_gluing
    xm, xp = _unit_probe(small_grids, np.random.default_rng(6), (g.window_minus, g.window_plus))
    an = dW_E_analytic(*small_pair, g, J, xm, xp)
    fd = fd_W(*small_pair, g, J, xm, xp, 0.2, evaluator=error_pair)
    low = PARAMS.lowered()
    rel = pair_norm(an[0] - fd[0], an[1] - fd[1], low) / pair_norm(*an, low)
    assert rel <= 1e-6


def test_matrix_form_oracle_agrees_at_moderate_step(small_pair, small_grids, small_gluing):
    xm, xp = _unit_probe(small_grids, np.random.default_rng(7))
    an = dW_N_analytic(*small_pair, small_gluing, J, xm, xp)
    fd = fd_W(*small_pair, small_gluing, J, xm, xp, 0.05, evaluator=N_matrix_form)
    assert np.max(np.abs(an[1].values - fd[1].values)) <= 1e-4 * an[1].sup()


def test_rho_localizes_dW_E(small_pair, small_grids, small_gluing):
    g = small_gluing
    xm, xp = _unit_probe(small_grids, np.random.default_rng(8), (g.window_minus, g.window_plus))
    E_plus = dW_E_analytic(*small_pair, g, J, xm, xp)[1]
    t = E_plus.grid.t
    loc = g.rho()(t)[:, None, None] * E_plus.values
    outside = (t < g.R - g.d - g.l - 4) | (t > g.R + g.d + g.l + 4)
    assert not loc[outside].any()
    assert np.abs(loc).max() > 0


def test_parameter_derivatives_vanish_for_standard_structure(small_pair, rotated_gluing):
    for out in (dR_N_analytic(*small_pair, rotated_gluing, standard_J(1)),
                dTheta_N_analytic(*small_pair, rotated_gluing, standard_J(1))):
        assert not out[0].values.any() and not out[1].values.any()


@pytest.fixture(scope="module")
def fine_setups():
    out = {}
    for h in (1 / 16, 1 / 32):
        grids = map_grids(36.0, h, 32)
        um, up = generate_test_pair(TestMapSpec(), grids, 3)
        out[h] = (um, up, make_gluing(36.0, 3 * 2 * math.pi / 32, h, 32))
    return out


def test_dR_first_order_and_converging(fine_setups):
    rel = {}
    for h, (um, up, g) in fine_setups.items():
        rep = check_dR(um, up, g, J, PARAMS)
        rel[h] = rep.discrepancy / rep.scale
    rep = check_dR(*fine_setups[1 / 32][:2], fine_setups[1 / 32][2], J, PARAMS)
    assert rep.refinement_ratio >= 2.0
    assert rel[1 / 32] < rel[1 / 16] and rel[1 / 32] <= 0.5


def test_transfer_R_derivative_converges(fine_setups):
    """Far plus near parts reproduce the centred R-quotient of the transfer argument."""
    err = {}
    for h, (um, up, g) in fine_setups.items():
        far, near = transfer_R_derivative(um, up, g, "plus", split=True)
        step = 4 * h
        Wp = transfer_argument(um, up, g.with_R(g.R + step), "plus").values
        Wm = transfer_argument(um, up, g.with_R(g.R - step), "plus").values
        an = far.values + near.values
        err[h] = np.max(np.abs(an - (Wp - Wm) / (2 * step))) / np.max(np.abs(an))
    assert err[1 / 32] < err[1 / 16]
    assert err[1 / 32] <= 0.5


def test_dTheta_second_order(fine_setups):
    um, up, g = fine_setups[1 / 32]
    rep = check_dTheta(um, up, g, J, PARAMS)
    assert rep.refinement_ratio >= 3.5
    assert rep.discrepancy / rep.scale <= 0.1


def test_F1_is_rho_localized(small_grids, small_gluing):
    g = small_gluing
    xm, xp = _unit_probe(small_grids, np.random.default_rng(9), (g.window_minus, g.window_plus))
    out = F1_apply(g, xm, xp)
    t = out.grid.t
    assert not out.values[(t < g.R - g.d - g.l - 4) | (t > g.R + g.d + g.l + 4)].any()


def test_c1_check_standard_structure_is_all_zero(small_pair):
    rep = c1_at_infinity_check(*small_pair, standard_J(1), r_sequence_for([36, 37, 38, 39]))
    assert rep.all_zero and rep.passes()
    assert max(rep.dR_norm + rep.dtheta_norm + rep.N_gap) == 0.0


def test_c1_check_rejects_short_or_increasing_sequences(small_pair):
    with pytest.raises(ValueError):
        c1_at_infinity_check(*small_pair, J, [0.3, 0.2, 0.1])
    with pytest.raises(ValueError):
        c1_at_infinity_check(*small_pair, J, [0.1, 0.2, 0.3, 0.4])
