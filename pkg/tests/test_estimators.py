from __future__ import annotations

import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from splice_lab.estimators import DecayRegressor, NonlinearPart, TotalGluing
from splice_lab.gluing import GluedPair
from splice_lab.grid import GridAlignmentError, grid_with_step, zeros
from splice_lab.nonlinear import error_pair
from splice_lab.jstruct import conjugated_J
from splice_lab.validation import check_aligned, check_pair


def test_params_roundtrip_through_clone():
    est = TotalGluing(R=49.0, theta=0.5, variant="desk")
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    assert NonlinearPart(form="split").set_params(epsilon=0.1).epsilon == 0.1


def test_transform_then_inverse_is_identity(small_pair):
    est = TotalGluing(R=36.0).fit(small_pair)
    glued = est.transform(small_pair)
    assert isinstance(glued, GluedPair)
    um, up = est.inverse_transform(glued)
    assert np.max(np.abs(um.values - small_pair[0].values)) <= 1e-12
    assert np.max(np.abs(up.values - small_pair[1].values)) <= 1e-12


def test_R_is_snapped_unless_disabled(small_pair):
    assert TotalGluing(R=36.1).fit(small_pair).gluing_.R == 36.0
    with pytest.raises(GridAlignmentError):
        TotalGluing(R=36.1, snap=False).fit(small_pair)


def test_unfitted_use_raises(small_pair):
    with pytest.raises(NotFittedError):
        TotalGluing().transform(small_pair)
    with pytest.raises(NotFittedError):
        DecayRegressor().predict([1.0])


def test_inverse_rejects_non_glued(small_pair):
    est = TotalGluing().fit(small_pair)
    with pytest.raises(TypeError):
        est.inverse_transform(small_pair)


def test_nonlinear_error_form_matches_function(small_pair, small_gluing):
    est = NonlinearPart(R=36.0, form="error").fit(small_pair)
    Nm, Np = est.transform(small_pair)
    ref = error_pair(*small_pair, small_gluing, conjugated_J(1, 0.3, 2.0, 7))
    assert np.array_equal(Np.values, ref.N_plus.values)
    assert np.array_equal(Nm.values, ref.N_minus.values)


@pytest.mark.parametrize("kwargs", [{"form": "cubic"}, {"J": "random"}])
def test_nonlinear_rejects_bad_options(small_pair, kwargs):
    with pytest.raises(ValueError):
        NonlinearPart(**kwargs).fit(small_pair)


def test_standard_structure_has_zero_error_form(small_pair):
    Nm, Np = NonlinearPart(J="standard", form="error").fit(small_pair).transform(small_pair)
    assert not Nm.values.any() and not Np.values.any()


def test_decay_regressor():
    R = np.array([36.0, 49.0, 64.0, 81.0, 100.0])
    y = 2.0 * np.exp(-0.3 * R)
    reg = DecayRegressor().fit(R, y)
    assert reg.slope_ == pytest.approx(-0.3, abs=1e-12)
    assert reg.intercept_ == pytest.approx(math.log(2.0), abs=1e-10)
    assert np.allclose(reg.predict(R), y, rtol=1e-10)
    assert reg.score(R, y) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        DecayRegressor().fit(R[:3], y[:3])
    with pytest.raises(ValueError):
        DecayRegressor().fit(R, y[:4])


def test_check_pair_rejects_bad_input(small_grids):
    gm, gp = small_grids
    with pytest.raises(TypeError):
        check_pair(zeros(gm))
    with pytest.raises(ValueError):
        check_pair((zeros(gp), zeros(gp)))
    with pytest.raises(ValueError):
        check_pair((zeros(gm, 1), zeros(gp, 2)))
    shifted = grid_with_step(0.1, 10.1, gp.h_t, gp.ns)
    with pytest.raises((GridAlignmentError, ValueError)):
        check_pair((zeros(gm), zeros(shifted)))


@pytest.mark.parametrize("value,h,steps", [(36.0, 0.25, 144), (0.0, 0.5, 0), (-3.0, 0.5, -6)])
def test_check_aligned(value, h, steps):
    assert check_aligned(value, h) == steps


@pytest.mark.parametrize("value,h,exc", [(36.1, 0.25, GridAlignmentError),
                                         (math.nan, 0.25, ValueError),
                                         (1.0, 0.0, ValueError)])
def test_check_aligned_rejects(value, h, exc):
    with pytest.raises(exc):
        check_aligned(value, h)
