from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splice_lab import cutoffs as co
from splice_lab.grid import GridAlignmentError

# Oracles evaluated independently (plain math, not the package):
PAPER_L_1E6 = 190868.33197722232        # 1000 (ln 1e6)^2
PAPER_A_1E6 = 0.4922607484181588        # 4 ((ln R)^2 / (2 sqrt R) + 2 ln R / sqrt R)
PROFILE_R_AT_02 = 145.69487727411754    # e^5 - e


def test_alpha_symmetry_and_partition():
    assert co.alpha_minus(0.0) == 0.5
    x = np.random.default_rng(0).uniform(-3.0, 3.0, 1000)
    assert np.max(np.abs(co.alpha_minus(x) + co.alpha_plus(x) - 1.0)) < 1e-15


def test_alpha_plateaus_and_monotone():
    x = np.linspace(-3.0, 3.0, 2001)
    a = co.alpha_minus(x)
    assert np.all(a[x <= -1.0] == 1.0) and np.all(a[x >= 1.0] == 0.0)
    assert np.all(np.diff(a) <= 0.0)


def test_alpha_derivative_matches_difference():
    x = np.linspace(-0.99, 0.99, 101)
    h = 1e-6
    fd = (co.alpha_minus(x + h) - co.alpha_minus(x - h)) / (2 * h)
    assert np.max(np.abs(fd - co.alpha_minus_prime(x))) < 1e-6


@pytest.mark.parametrize("l, d", [(2.0, 6.0), (6.0, 18.0), (10.0, 40.0)])
def test_gamma_product_plateau(l, d):
    fam = co.make_beta(l, d)
    t = np.linspace(-d - l - 1.0, d + l + 1.0, 999)
    assert np.all(fam.gamma_minus(t) * fam.gamma_plus(t) == 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(2.0, 20.0), st.floats(0.0, 3.0), st.floats(-100.0, 100.0))
def test_determinant_between_one_and_two(l, extra, t):
    fam = co.make_beta(l, 3.0 * l + extra)
    D = float(fam.determinant(t))
    assert 1.0 - 1e-12 <= D <= 2.0 + 1e-12


def test_splicing_matrix_regions_and_inverse():
    fam = co.make_beta(6.0, 18.0)
    t = np.linspace(-40.0, 40.0, 801)
    T = co.splicing_matrix(fam, t)
    lab = T.region(6.0, 18.0)
    for k, M in ((1, co.M1), (2, co.M2), (3, co.M3)):
        assert np.array_equal(T.entries[lab == k], np.broadcast_to(M, T.entries[lab == k].shape))
    prod = T.entries @ T.inverse
    assert np.max(np.abs(prod - np.eye(2))) < 1e-15


def test_family_rejects_overlapping_ramps():
    with pytest.raises(ValueError):
        co.make_beta(6.0, 10.0)


def test_desk_lengths_at_100():
    l, d = co.length_center(100.0, 1, "desk")
    assert (l, d) == (10.0, 30.0)
    assert 100.0 - d - l - 3.0 == 57.0
    assert co.length_center_derivative(100.0, 1, "desk") == pytest.approx(0.2, rel=1e-15)


def test_paper_lengths():
    l, d = co.length_center(1e6, 1, "paper")
    assert l == pytest.approx(PAPER_L_1E6, rel=1e-12)
    assert d == 3.0 * l and 1e6 - d - l - 3.0 > 0
    assert co.length_center_derivative(1e6, 1, "paper") == pytest.approx(PAPER_A_1E6, rel=1e-12)
    with pytest.raises(ValueError):
        co.length_center(100.0, 1, "paper")


@pytest.mark.parametrize("variant", ["desk", "paper"])
def test_length_derivative_matches_difference(variant):
    R, h = 2.0e6, 1.0
    l1, _ = co.length_center(R + h, 1, variant)
    l0, _ = co.length_center(R - h, 1, variant)
    assert co.length_derivative(R, 1, variant) == pytest.approx((l1 - l0) / (2 * h), rel=1e-8)


def test_profile():
    assert co.gluing_profile(0.2, 1.0) == pytest.approx(PROFILE_R_AT_02, rel=1e-14)
    assert co.gluing_profile(1.0 - 1e-9, 1.0) < 1e-7
    r = np.random.default_rng(1).uniform(0.05, 0.95, 20)
    for x in r:
        assert co.inverse_profile(co.gluing_profile(x)) == pytest.approx(x, abs=1e-12)
    r0, h = 0.3, 1e-7
    fd = (co.gluing_profile(r0 + h) - co.gluing_profile(r0 - h)) / (2 * h)
    assert co.profile_derivative(r0) == pytest.approx(fd, rel=1e-6)


def test_rho_plateau_and_support():
    l, d = co.length_center(100.0)
    rho = co.make_rho(100.0, d, l)
    assert float(rho(100.0)) == 1.0 and float(rho(0.0)) == 0.0
    t = np.linspace(0.0, 200.0, 4001)
    r = rho(t)
    assert np.all(r[(t >= 100 - d - l - 3) & (t <= 100 + d + l + 3)] == 1.0)
    assert np.all(r[(t <= 100 - d - l - 4) | (t >= 100 + d + l + 4)] == 0.0)
    field = np.where((t > 60) & (t < 140), np.sin(t), 0.0)
    assert np.array_equal(r * field, field)


def test_make_gluing_alignment_and_snapping():
    g = co.make_gluing(36.0, 0.0, 0.25, 32)
    assert (g.shift_R, g.shift_2R, g.l, g.d) == (144, 288, 6.0, 18.0)
    with pytest.raises(GridAlignmentError):
        co.make_gluing(36.1, 0.0, 0.25, 32)
    with pytest.raises(GridAlignmentError):
        co.make_gluing(36.0, 0.1, 0.25, 32)
    assert co.snap_R(1e6, 256.0, "paper") == 1000192.0
    with pytest.raises(ValueError):
        co.make_gluing(9.0, 0.0, 0.25, 32)


def test_cutoff_csv_columns():
    text = co.cutoff_csv(co.make_beta(2.0, 6.0), np.linspace(-10, 10, 5), co.make_rho(50, 6, 2))
    lines = text.strip().splitlines()
    assert lines[0] == "t,beta_minus,beta_plus,gamma_minus,gamma_plus,rho"
    assert len(lines) == 6 and all(len(x.split(",")) == 6 for x in lines)
    assert math.isclose(float(lines[3].split(",")[1]), 1.0)
