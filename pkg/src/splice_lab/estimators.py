"""scikit-learn style wrappers: gluing as a transformer, N^R as a transformer and the
exponential decay fit as a regressor.

"Samples" here are whole field pairs, so ``fit`` only validates and derives
the gluing data; it learns nothing from the values.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cutoffs import make_gluing, snap_R
from .gluing import GluedPair, total_glue, total_unglue
from .harness.fitting import fit_decay
from .jstruct import conjugated_J, standard_J
from .nonlinear import N_matrix_form, N_piecewise, N_split, error_pair
from .validation import check_aligned, check_pair

FORMS = {"matrix": N_matrix_form, "piecewise": N_piecewise, "split": N_split,
         "error": error_pair}


class _GluingMixin:
    def _gluing(self, X):
        u_minus, u_plus = check_pair(X)
        grid = u_plus.grid
        R = snap_R(self.R, grid.h_t, self.variant) if self.snap else self.R
        check_aligned(R, grid.h_t, "R")
        return u_minus, u_plus, make_gluing(R, self.theta, grid, m=self.m,
                                            variant=self.variant)


class TotalGluing(_GluingMixin, TransformerMixin, BaseEstimator):
    """``(u_-, u_+) -> (v_-, v_+)`` and back.

    Parameters mirror the gluing parameter: ``R`` (snapped to the t-lattice
    when ``snap``), ``theta`` (must be a multiple of the s-step), the length
    variant and exponent ``m``.
    """

    def __init__(self, R: float = 36.0, theta: float = 0.0, m: int = 1, variant: str = "desk",
                 snap: bool = True):
        self.R = R
        self.theta = theta
        self.m = m
        self.variant = variant
        self.snap = snap

    def fit(self, X, y=None):
        u_minus, u_plus, g = self._gluing(X)
        self.gluing_ = g
        self.grids_ = (u_minus.grid, u_plus.grid)
        return self

    def transform(self, X) -> GluedPair:
        check_is_fitted(self, "gluing_")
        u_minus, u_plus = check_pair(X)
        return total_glue(u_minus, u_plus, self.gluing_)

    def inverse_transform(self, G: GluedPair):
        check_is_fitted(self, "gluing_")
        if not isinstance(G, GluedPair):
            raise TypeError("inverse_transform expects a GluedPair")
        return total_unglue(G, self.grids_)


class NonlinearPart(_GluingMixin, TransformerMixin, BaseEstimator):
    """``(u_-, u_+) -> (N_-, N_+)`` for the configured structure and evaluation form."""

    def __init__(self, R: float = 36.0, theta: float = 0.0, m: int = 1, variant: str = "desk",
                 snap: bool = True, J: str = "conjugated", epsilon: float = 0.3,
                 radius: float = 2.0, J_seed: int = 7, form: str = "matrix"):
        self.R = R
        self.theta = theta
        self.m = m
        self.variant = variant
        self.snap = snap
        self.J = J
        self.epsilon = epsilon
        self.radius = radius
        self.J_seed = J_seed
        self.form = form

    def fit(self, X, y=None):
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {sorted(FORMS)}, got {self.form!r}")
        if self.J not in ("standard", "conjugated"):
            raise ValueError(f"J must be 'standard' or 'conjugated', got {self.J!r}")
        u_minus, _, g = self._gluing(X)
        n = u_minus.dim
        self.gluing_ = g
        self.structure_ = (standard_J(n) if self.J == "standard"
                           else conjugated_J(n, self.epsilon, self.radius, self.J_seed))
        return self

    def transform(self, X):
        check_is_fitted(self, "gluing_")
        u_minus, u_plus = check_pair(X)
        res = FORMS[self.form](u_minus, u_plus, self.gluing_, self.structure_)
        return res.N_minus, res.N_plus


class DecayRegressor(RegressorMixin, BaseEstimator):
    """Fit ``value ~ C e^{slope R}``; ``predict`` returns values, ``score`` is R^2 in log space."""

    def fit(self, X, y):
        R = np.asarray(X, dtype=float).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1)
        if R.shape != y.shape:
            raise ValueError("X and y lengths differ")
        self.slope_, self.intercept_, self.residual_ = fit_decay(list(zip(R, y)))
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        R = np.asarray(X, dtype=float).reshape(-1)
        return np.exp(self.intercept_ + self.slope_ * R)

    def score(self, X, y, sample_weight=None):
        from sklearn.metrics import r2_score

        return r2_score(np.log(np.asarray(y, dtype=float)), np.log(self.predict(X)),
                        sample_weight=sample_weight)
