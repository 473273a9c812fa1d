"""Cut-off functions, the splicing matrix and the R-dependent length data.

Conventions (a-dependent coordinate ``t`` on the glued cylinders):

* ``beta_minus(t) = alpha_minus((t - d) / l)``, ``beta_plus(t) = alpha_plus((t + d) / l)``
* ``gamma_plus(t) = gamma_hat_plus(t - d - l)``, ``gamma_minus(t) = gamma_hat_plus(-t - d - l)``
* ``rho`` is the plateau cut-off around ``t_plus = R`` used for localized derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import CylinderGrid, GridAlignmentError, steps

L0 = 2.0
D0 = 6.0
R0 = {"desk": 25.0, "paper": 1.0e6}
VARIANTS = ("desk", "paper")
PROFILES = ("offset", "plain")


def _f(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _fprime(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos]) / x[pos] ** 2
    return out


def alpha_minus(t):
    """Smooth step: 1 for t <= -1, 0 for t >= 1, non-increasing, alpha_minus(0) = 1/2."""
    a, b = _f(1.0 - np.asarray(t, dtype=float)), _f(1.0 + np.asarray(t, dtype=float))
    return a / (a + b)


def alpha_minus_prime(t):
    t = np.asarray(t, dtype=float)
    a, b = _f(1.0 - t), _f(1.0 + t)
    da, db = -_fprime(1.0 - t), _fprime(1.0 + t)
    return (da * b - a * db) / (a + b) ** 2


def alpha_plus(t):
    """``1 - alpha_minus``, evaluated directly so tiny values keep full relative accuracy."""
    a, b = _f(1.0 - np.asarray(t, dtype=float)), _f(1.0 + np.asarray(t, dtype=float))
    return b / (a + b)


def alpha_plus_prime(t):
    return -alpha_minus_prime(t)


def base_cutoff_alpha() -> tuple[Callable, Callable]:
    return alpha_minus, alpha_plus


def gamma_hat_plus(t):
    """1 for t <= 1, 0 for t >= 2."""
    return alpha_minus(2.0 * np.asarray(t, dtype=float) - 3.0)


def gamma_hat_plus_prime(t):
    return 2.0 * alpha_minus_prime(2.0 * np.asarray(t, dtype=float) - 3.0)


def gamma_hat_minus(t):
    return gamma_hat_plus(-np.asarray(t, dtype=float))


@dataclass(frozen=True)
class CutoffFamily:
    """The beta/gamma cut-offs for one (l, d) pair, as callables of t.

    Each ``*_partials`` method returns ``(d/dt, d/dl, d/dd)`` of the named
    function; these feed the parameter derivative of the glued maps.
    """

    l: float
    d: float

    def __post_init__(self):
        if self.l < L0:
            raise ValueError(f"length parameter l = {self.l} below l0 = {L0}")
        if self.d < 3.0 * self.l * (1.0 - 1e-12):
            raise ValueError(f"need d >= 3l for disjoint ramps, got l = {self.l}, d = {self.d}")

    def beta_minus(self, t):
        return alpha_minus((np.asarray(t, dtype=float) - self.d) / self.l)

    def beta_plus(self, t):
        return alpha_plus((np.asarray(t, dtype=float) + self.d) / self.l)

    def gamma_plus(self, t):
        return gamma_hat_plus(np.asarray(t, dtype=float) - self.d - self.l)

    def gamma_minus(self, t):
        return gamma_hat_plus(-np.asarray(t, dtype=float) - self.d - self.l)

    def beta_minus_partials(self, t):
        x = (np.asarray(t, dtype=float) - self.d) / self.l
        g = alpha_minus_prime(x) / self.l
        return g, -g * x, -g

    def beta_plus_partials(self, t):
        x = (np.asarray(t, dtype=float) + self.d) / self.l
        g = alpha_plus_prime(x) / self.l
        return g, -g * x, g

    def gamma_plus_partials(self, t):
        g = gamma_hat_plus_prime(np.asarray(t, dtype=float) - self.d - self.l)
        return g, -g, -g

    def gamma_minus_partials(self, t):
        g = gamma_hat_plus_prime(-np.asarray(t, dtype=float) - self.d - self.l)
        return -g, -g, -g

    def determinant(self, t):
        return self.beta_minus(t) ** 2 + self.beta_plus(t) ** 2

    def table(self, t) -> dict[str, np.ndarray]:
        t = np.asarray(t, dtype=float)
        return {
            "t": t,
            "beta_minus": self.beta_minus(t),
            "beta_plus": self.beta_plus(t),
            "gamma_minus": self.gamma_minus(t),
            "gamma_plus": self.gamma_plus(t),
        }


def make_beta(l: float, d: float) -> CutoffFamily:
    return CutoffFamily(float(l), float(d))


make_gamma = make_beta


@dataclass(frozen=True)
class SplicingMatrix:
    """Pointwise ``T_beta(t) = [[b-, -b+], [b+, b-]]`` with determinant ``b-^2 + b+^2``."""

    t: np.ndarray
    beta_minus: np.ndarray
    beta_plus: np.ndarray

    @property
    def entries(self) -> np.ndarray:
        bm, bp = self.beta_minus, self.beta_plus
        return np.stack([np.stack([bm, -bp], -1), np.stack([bp, bm], -1)], -2)

    @property
    def det(self) -> np.ndarray:
        return self.beta_minus ** 2 + self.beta_plus ** 2

    @property
    def inverse(self) -> np.ndarray:
        bm, bp, D = self.beta_minus, self.beta_plus, self.det
        inv = np.stack([np.stack([bm, bp], -1), np.stack([-bp, bm], -1)], -2)
        return inv / D[..., None, None]

    def region(self, l: float, d: float) -> np.ndarray:
        """Label nodes 1, 2, 3 for the constant blocks M1, M2, M3; 0 on the ramps."""
        t = self.t
        lab = np.zeros(t.shape, dtype=int)
        lab[t < -d - l] = 1
        lab[(t > -d + l) & (t < d - l)] = 2
        lab[t > d + l] = 3
        return lab


M1 = np.eye(2)
M2 = np.array([[1.0, -1.0], [1.0, 1.0]])
M3 = np.array([[0.0, -1.0], [1.0, 0.0]])


def splicing_matrix(family: CutoffFamily, t) -> SplicingMatrix:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return SplicingMatrix(t, family.beta_minus(t), family.beta_plus(t))


def make_rho(R: float, d: float, l: float) -> Callable:
    """Plateau cut-off: 1 on [R-d-l-3, R+d+l+3], 0 outside [R-d-l-4, R+d+l+4]."""
    lo, hi = R - d - l - 3.0, R + d + l + 3.0

    def rho(t):
        t = np.asarray(t, dtype=float)
        return alpha_plus(2.0 * (t - lo) + 1.0) * alpha_minus(2.0 * (t - hi) - 1.0)

    return rho


def _exponent(m: int) -> float:
    if m < 1:
        raise ValueError(f"length-function order m must be >= 1, got {m}")
    return m / (m + 1.0)


def length_center(R: float, m: int = 1, variant: str = "desk") -> tuple[float, float]:
    """``l = R^(m/(m+1)) * ln(R)^2`` (paper) or ``R^(m/(m+1))`` (desk); ``d = 3l``."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown length variant {variant!r}")
    if R <= 1.0:
        raise ValueError(f"R must exceed 1, got {R}")
    q = _exponent(m)
    l = R ** q * (math.log(R) ** 2 if variant == "paper" else 1.0)
    d = 3.0 * l
    if R - d - l - 3.0 <= 0.0:
        raise ValueError(f"R = {R} too small: R - d - l - 3 = {R - d - l - 3.0:.4g} <= 0")
    return l, d


def length_derivative(R: float, m: int = 1, variant: str = "desk") -> float:
    """dl/dR for the chosen variant."""
    q = _exponent(m)
    if variant == "desk":
        return q * R ** (q - 1.0)
    if variant == "paper":
        L = math.log(R)
        return q * R ** (q - 1.0) * L * L + 2.0 * R ** (q - 1.0) * L
    raise ValueError(f"unknown length variant {variant!r}")


def length_center_derivative(R: float, m: int = 1, variant: str = "desk") -> float:
    """``a = d/dR (l + d) = 4 dl/dR``."""
    length_center(R, m, variant)
    return 4.0 * length_derivative(R, m, variant)


def gluing_profile(r: float, r0: float = 1.0, profile: str = "offset") -> float:
    """``R = exp(1/r) - exp(1/r0)`` (offset) or ``exp(1/r)`` (plain)."""
    if profile == "offset":
        if not 0.0 < r < r0:
            raise ValueError(f"r must lie in (0, r0) = (0, {r0}), got {r}")
        return math.exp(1.0 / r) - math.exp(1.0 / r0)
    if profile == "plain":
        if r <= 0.0:
            raise ValueError(f"r must be positive, got {r}")
        return math.exp(1.0 / r)
    raise ValueError(f"unknown profile {profile!r}")


def inverse_profile(R: float, r0: float = 1.0, profile: str = "offset") -> float:
    if profile == "offset":
        if R <= 0.0:
            raise ValueError(f"R must be positive, got {R}")
        return 1.0 / math.log(R + math.exp(1.0 / r0))
    if profile == "plain":
        if R <= 1.0:
            raise ValueError(f"R must exceed 1 for the plain profile, got {R}")
        return 1.0 / math.log(R)
    raise ValueError(f"unknown profile {profile!r}")


def profile_derivative(r: float) -> float:
    """dR/dr, identical for both profiles."""
    return -math.exp(1.0 / r) / (r * r)


@dataclass(frozen=True)
class GluingData:
    """Gluing parameter ``a = (R, theta)`` and everything derived from it.

    R and theta are exact multiples of the grid steps, so the translations
    ``tau_{+-a}`` are pure index shifts.  l and d enter only through the
    analytic cut-offs and need no alignment.
    """

    R: float
    theta: float
    r: float
    l: float
    d: float
    m: int
    variant: str
    shift_R: int
    shift_theta: int
    shift_2R: int
    h_t: float
    ns: int
    r0: float = 1.0
    profile: str = "offset"

    @property
    def cutoffs(self) -> CutoffFamily:
        return CutoffFamily(self.l, self.d)

    @property
    def a(self) -> float:
        """d/dR of (l + d)."""
        return 4.0 * length_derivative(self.R, self.m, self.variant)

    @property
    def dl_dR(self) -> float:
        return length_derivative(self.R, self.m, self.variant)

    @property
    def window_plus(self) -> tuple[float, float]:
        """Localization window in t_plus coordinates."""
        w = self.d + self.l + 3.0
        return self.R - w, self.R + w

    @property
    def window_minus(self) -> tuple[float, float]:
        w = self.d + self.l + 3.0
        return -self.R - w, -self.R + w

    def rho(self) -> Callable:
        return make_rho(self.R, self.d, self.l)

    def with_R(self, R: float) -> "GluingData":
        return make_gluing(R, self.theta, self.h_t, self.ns, self.m, self.variant,
                           self.r0, self.profile, check_R0=False)

    def with_theta(self, theta: float) -> "GluingData":
        return make_gluing(self.R, theta, self.h_t, self.ns, self.m, self.variant,
                           self.r0, self.profile, check_R0=False)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def snap(value: float, h: float) -> float:
    return round(value / h) * h


def make_gluing(R: float, theta: float = 0.0, h_t: float | CylinderGrid = 0.25, ns: int = 32,
                m: int = 1, variant: str = "desk", r0: float = 1.0, profile: str = "offset",
                check_R0: bool = True) -> GluingData:
    """Validate and derive gluing data; R and theta must already be grid-aligned."""
    if isinstance(h_t, CylinderGrid):
        ns = h_t.ns
        h_t = h_t.h_t
    h_s = 2.0 * math.pi / ns
    try:
        kR = steps(R, h_t, "R")
        kth = steps(theta, h_s, "theta")
    except GridAlignmentError:
        raise
    if check_R0 and R < R0[variant] * (1.0 - 1e-12):
        raise ValueError(f"R = {R} below R0 = {R0[variant]} for the {variant} variant")
    l, d = length_center(R, m, variant)
    r = inverse_profile(R, r0, profile)
    return GluingData(R=float(R), theta=float(theta), r=r, l=l, d=d, m=int(m), variant=variant,
                      shift_R=kR, shift_theta=kth, shift_2R=2 * kR, h_t=float(h_t), ns=int(ns),
                      r0=float(r0), profile=profile)


def snap_R(R: float, h_t: float, variant: str = "desk") -> float:
    """Nearest grid-aligned R, bumped up one step if that falls below R0."""
    Rs = snap(R, h_t)
    if Rs < R0[variant]:
        Rs += h_t * math.ceil((R0[variant] - Rs) / h_t)
    return Rs


def cutoff_csv(family: CutoffFamily, t, rho: Callable | None = None) -> str:
    """CSV text with columns t, beta_minus, beta_plus, gamma_minus, gamma_plus, rho."""
    tab = family.table(t)
    rv = rho(tab["t"]) if rho is not None else np.full_like(tab["t"], np.nan)
    lines = ["t,beta_minus,beta_plus,gamma_minus,gamma_plus,rho"]
    for row in zip(tab["t"], tab["beta_minus"], tab["beta_plus"], tab["gamma_minus"],
                   tab["gamma_plus"], rv):
        lines.append(",".join(f"{x:.17g}" for x in row))
    return "\n".join(lines) + "\n"
