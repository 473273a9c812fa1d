from __future__ import annotations

import numpy as np
import pytest

from splice_lab.cutoffs import make_gluing
from splice_lab.gluing import a_line
from splice_lab.grid import Field, ds_values, make_grid, sample, zeros
from splice_lab.harness.testmaps import TestMapSpec, generate_test_pair, map_grids, pair_seeds
from splice_lab.jstruct import conjugated_J, standard_J
from splice_lab.nonlinear import (N_closed_form, N_infinity, N_matrix_form, N_piecewise, N_split,
                                  commutator_check, error_pair, error_term, linear_part_at_zero,
                                  phi_pair)
from splice_lab.norms import probe_field

STRUCTURES = {"standard": standard_J(1), "conjugated": conjugated_J(1, 0.3)}


def _max(a: Field, b: Field) -> float:
    return float(np.max(np.abs(a.values - b.values)))


def test_zero_pair(small_grids, small_gluing):
    zm, zp = zeros(small_grids[0]), zeros(small_grids[1])
    for J in STRUCTURES.values():
        N = N_matrix_form(zm, zp, small_gluing, J)
        assert not N.N_minus.values.any() and not N.N_plus.values.any()
        E = error_pair(zm, zp, small_gluing, J)
        assert not E.N_plus.values.any()


def test_s_independent_pair(small_grids, small_gluing):
    fm = sample(lambda t, s: 0.7 * np.exp(0.8 * t) + 0 * s + 0j, small_grids[0])
    fp = sample(lambda t, s: 0.7j * np.exp(-0.8 * t) + 0 * s, small_grids[1])
    N = N_matrix_form(fm, fp, small_gluing, STRUCTURES["conjugated"])
    assert max(N.N_minus.sup(), N.N_plus.sup()) <= 1e-13


def test_standard_structure_gives_J0_ds(small_pair, rotated_gluing):
    J = standard_J(1)
    um, up = small_pair
    N = N_matrix_form(um, up, rotated_gluing, J)
    for u, Nu in ((um, N.N_minus), (up, N.N_plus)):
        ref = np.einsum("ij,...j->...i", J.J0, ds_values(u.values, u.grid.h_s))
        assert np.max(np.abs(Nu.values - ref)) <= 1e-15


def test_limit_map_closed_form():
    g = make_grid(0.0, 6.0, 25, 32)
    u = sample(lambda t, s: np.stack([np.exp(-t) * np.cos(s), np.exp(-t) * np.sin(s)], -1), g,
               complex_valued=False)
    um = zeros(make_grid(-6.0, 0.0, 25, 32))
    N = N_infinity(um, u, standard_J(1))
    T, S = g.mesh()
    exact = np.stack([-np.exp(-T) * np.cos(S), -np.exp(-T) * np.sin(S)], -1)
    # 4th-order s-stencil: truncation about h_s^4 / 30 on a unit mode
    assert np.max(np.abs(N.N_plus.values - exact)) <= g.h_s ** 4 / 10


@pytest.mark.parametrize("kind", ["standard", "conjugated"])
@pytest.mark.parametrize("R", [36.0, 49.0])
def test_piecewise_matches_matrix_form(small_grids, kind, R):
    J = STRUCTURES[kind]
    for i, seed in enumerate(pair_seeds(5, 4)):
        um, up = generate_test_pair(TestMapSpec(), small_grids, seed)
        g = make_gluing(R, (i % 2) * 3 * 2 * np.pi / 16, 0.5, 16)
        mat = N_matrix_form(um, up, g, J)
        pw = N_piecewise(um, up, g, J)
        assert _max(mat.N_minus, pw.N_minus) <= 1e-10
        assert _max(mat.N_plus, pw.N_plus) <= 1e-10
        assert pw.overlap_discrepancy <= 1e-10
        assert _max(N_closed_form(um, up, g, J).N_plus, pw.N_plus) <= 1e-10


def test_error_term_forms_and_support(small_pair, rotated_gluing):
    J = STRUCTURES["conjugated"]
    E = error_term(*small_pair, rotated_gluing, J)
    assert E.form_discrepancy <= 1e-10
    assert E.outside_support() <= 1e-12
    assert E.E_plus.sup() > 0.0
    split = N_split(*small_pair, rotated_gluing, J)
    inf = N_infinity(*small_pair, J)
    assert _max(split.N_plus - inf.N_plus, E.E_plus) <= 1e-15


def test_error_term_vanishes_for_standard_structure(small_pair, small_gluing):
    E = error_term(*small_pair, small_gluing, standard_J(1))
    assert not E.E_plus.values.any() and not E.E_minus.values.any()


def test_holomorphic_map_has_zero_operator(small_gluing):
    g = make_grid(0.0, 8.0, 257, 32)
    v = sample(lambda t, s: np.exp(-(t + 1j * s)), g)
    hat = sample(lambda t, s: 0 * t + 0j, make_grid(-8.0, 8.0, 513, 32))
    vm = zeros(make_grid(-8.0, 0.0, 257, 32))
    _, phi_p = phi_pair(vm, v, hat, standard_J(1))
    assert np.max(np.abs(phi_p.values[2:-2])) <= g.h_s ** 4 / 10


def test_operator_minus_linear_part_is_nonlinearity():
    J = conjugated_J(1, 0.3)
    g = make_grid(0.0, 8.0, 129, 32)
    v = sample(lambda t, s: 0.8 * np.exp(-(t + 1j * s)), g)
    vm = zeros(make_grid(-8.0, 0.0, 129, 32))
    hat = zeros(make_grid(-8.0, 8.0, 257, 32))
    _, phi_p = phi_pair(vm, v, hat, J)
    rest = phi_p.values - linear_part_at_zero(v, J).values
    expected = np.einsum("...ij,...j->...i", J.delta(v.values), ds_values(v.values, g.h_s))
    assert np.max(np.abs(rest - expected)) <= 1e-14
    assert np.max(np.abs(expected)) > 1e-3


def test_commutator(small_pair, small_grids, small_gluing):
    g = small_gluing
    line = a_line(*small_grids, g.R)
    rng = np.random.default_rng(9)
    ramp = (-g.d - g.l, g.d + g.l)
    w1 = probe_field(line, 1, rng, ramp)
    w2 = probe_field(line, 1, rng, ramp)
    w1, w2 = w1 * (1 / w1.sup()), w2 * (1 / w2.sup())
    assert commutator_check(w1, g, standard_J(1)) == 0.0
    assert commutator_check(w1, g, STRUCTURES["conjugated"]) <= 1e-12
    assert commutator_check(w1, g, STRUCTURES["conjugated"], w2) >= 1e-3
