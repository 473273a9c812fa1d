"""Fast built-in checks (the exact-identity tier), run by ``splice-lab selftest``."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .. import cutoffs as co
from ..gluing import total_glue, total_unglue
from ..grid import (TWO_PI, Field, make_grid, restrict, rotate_s, sample, shift_t, zeros)
from ..jstruct import conjugated_J, standard_J
from ..nonlinear import N_matrix_form, commutator_check, error_pair
from ..norms import WeightedNormParams, operator_norm_probe, weighted_norm
from .fitting import fit_decay
from .testmaps import TestMapSpec, generate_test_pair, map_grids

CHECKS: list[tuple[str, Callable[[], bool]]] = []


def check(fn: Callable[[], bool]) -> Callable[[], bool]:
    CHECKS.append((fn.__name__, fn))
    return fn


def _small_pair(seed: int = 1):
    grids = map_grids(36.0, 0.5, 16)
    pair = generate_test_pair(TestMapSpec(), grids, seed)
    g = co.make_gluing(36.0, 0.0, 0.5, 16)
    return pair.u_minus, pair.u_plus, g


@check
def grid_arithmetic() -> bool:
    g = make_grid(0.0, 10.0, 11, 16)
    return g.h_t == 1.0 and math.isclose(g.h_s, math.pi / 8)


@check
def shift_and_rotation_identities() -> bool:
    g = make_grid(-5.0, 5.0, 41, 16)
    u = sample(lambda t, s: np.exp(-0.8 * np.abs(t)) * np.exp(1j * s), g)
    same = np.array_equal(shift_t(u, 0.0).values, u.values)
    wrap = np.array_equal(rotate_s(u, TWO_PI).values, u.values)
    return same and wrap and restrict(u, -5.0, 5.0).values.shape == u.values.shape


@check
def cutoff_identities() -> bool:
    x = np.random.default_rng(0).uniform(-3, 3, 1000)
    return (co.alpha_minus(0.0) == 0.5
            and np.max(np.abs(co.alpha_minus(x) + co.alpha_plus(x) - 1.0)) < 1e-15)


@check
def desk_lengths() -> bool:
    l, d = co.length_center(100.0, 1, "desk")
    return math.isclose(l, 10.0) and math.isclose(d, 30.0) and math.isclose(
        co.length_center_derivative(100.0, 1, "desk"), 0.2)


@check
def profile_roundtrip() -> bool:
    r = np.random.default_rng(1).uniform(0.05, 0.9, 20)
    return all(abs(co.inverse_profile(co.gluing_profile(x)) - x) < 1e-12 for x in r)


@check
def rho_plateau() -> bool:
    l, d = co.length_center(100.0)
    rho = co.make_rho(100.0, d, l)
    return float(rho(100.0)) == 1.0 and float(rho(0.0)) == 0.0


@check
def structure_squares() -> bool:
    J = conjugated_J(1, 0.3)
    x = np.random.default_rng(2).uniform(-2, 2, (1000, 2))
    M = J.eval(x)
    J0 = standard_J(1).J0
    return (np.max(np.abs(M @ M + np.eye(2))) < 1e-12 and np.array_equal(J0 @ J0, -np.eye(2)))


@check
def zero_pair_glues_and_vanishes() -> bool:
    um, up, g = _small_pair()
    zm, zp = zeros(um.grid), zeros(up.grid)
    G = total_glue(zm, zp, g)
    N = N_matrix_form(zm, zp, g, conjugated_J())
    return (not G.v_minus.values.any() and not G.v_plus.values.any()
            and not N.N_minus.values.any() and not N.N_plus.values.any())


@check
def roundtrip() -> bool:
    um, up, g = _small_pair()
    bm, bp = total_unglue(total_glue(um, up, g), (um.grid, up.grid))
    return max(np.max(np.abs(bm.values - um.values)), np.max(np.abs(bp.values - up.values))) < 1e-10


@check
def s_independent_pair_has_zero_N() -> bool:
    um, up, g = _small_pair()
    fm = sample(lambda t, s: np.exp(0.8 * t) + 0 * s + 0j, um.grid)
    fp = sample(lambda t, s: np.exp(-0.8 * t) + 0 * s + 0j, up.grid)
    N = N_matrix_form(fm, fp, g, conjugated_J())
    return max(N.N_minus.sup(), N.N_plus.sup()) < 1e-12


@check
def standard_J_error_term_vanishes() -> bool:
    um, up, g = _small_pair()
    E = error_pair(um, up, g, standard_J())
    return not E.N_minus.values.any() and not E.N_plus.values.any()


@check
def commutator_identities() -> bool:
    g = co.make_gluing(36.0, 0.0, 0.5, 16)
    w = sample(lambda t, s: 0.5 * np.exp(-0.05 * t * t) * np.exp(1j * s),
               make_grid(-40.0, 40.0, 161, 16))
    return (commutator_check(w, g, standard_J()) == 0.0
            and commutator_check(w, g, conjugated_J()) <= 1e-12)


@check
def norm_zero_and_monotone_in_delta() -> bool:
    um, _, _ = _small_pair()
    lo = weighted_norm(um, WeightedNormParams(2, 3.0, 0.2))
    hi = weighted_norm(um, WeightedNormParams(2, 3.0, 0.5))
    return weighted_norm(zeros(um.grid), WeightedNormParams()) == 0.0 and lo <= hi


@check
def probe_of_zero_operator() -> bool:
    grids = map_grids(36.0, 0.5, 16)
    res = operator_norm_probe(lambda a, b: zeros(b.grid), WeightedNormParams(), 4, 0, grids)
    return res.value == 0.0


@check
def generator_determinism_and_normalization() -> bool:
    grids = map_grids(36.0, 0.5, 16)
    a = generate_test_pair(TestMapSpec(), grids, 5)
    b = generate_test_pair(TestMapSpec(), grids, 5)
    p = WeightedNormParams()
    total = (weighted_norm(a.u_minus, p) ** 3 + weighted_norm(a.u_plus, p) ** 3) ** (1 / 3)
    return np.array_equal(a.u_plus.values, b.u_plus.values) and abs(total - 1.0) < 1e-9


@check
def decay_fit() -> bool:
    R = np.array([36.0, 49.0, 64.0, 81.0, 100.0])
    slope, _, _ = fit_decay(list(zip(R, np.exp(-R / 2))))
    flat, _, _ = fit_decay(list(zip(R, np.full(5, 3.0))))
    return abs(slope + 0.5) < 1e-12 and abs(flat) < 1e-12


def run_selftest(verbose: bool = True) -> bool:
    ok = True
    for name, fn in CHECKS:
        try:
            passed = bool(fn())
            note = ""
        except Exception as exc:  # a crash is a failed check, reported by name
            passed, note = False, f" ({type(exc).__name__}: {exc})"
        ok = ok and passed
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'} {name}{note}")
    return ok
