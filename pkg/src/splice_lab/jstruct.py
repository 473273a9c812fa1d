"""Almost complex structures on E = C^n and their derivatives along maps.

The non-constant structure is a conjugate ``J(x) = Q(x) J0 Q(x)^-1`` of the
standard one with ``Q = I + eps * B(x)``, so ``J^2 = -I`` holds exactly up to
rounding.  ``delta(x) = J(x) - J0`` is evaluated in the commutator form
``eps [B, J0] Q^-1`` which keeps full relative accuracy for tiny ``x``; that
matters because the error terms being measured sit at e^-50 scales.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CylinderGrid, Field


def standard_block(n: int) -> np.ndarray:
    """J0 = blockdiag([[0, -1], [1, 0]]) acting on interleaved (re, im) pairs."""
    J0 = np.zeros((2 * n, 2 * n))
    for i in range(n):
        J0[2 * i + 1, 2 * i] = 1.0
        J0[2 * i, 2 * i + 1] = -1.0
    return J0


@dataclass(frozen=True, eq=False)
class MatrixField:
    """Node-wise ``2n x 2n`` matrices on a grid."""

    grid: CylinderGrid
    values: np.ndarray

    def apply(self, u: Field) -> Field:
        if u.grid != self.grid:
            raise ValueError("grid mismatch")
        return Field(self.grid, np.einsum("tsij,tsj->tsi", self.values, u.values))

    def as_field(self) -> Field:
        """Flatten the matrices so field norms apply entry-wise."""
        v = self.values
        return Field(self.grid, v.reshape(v.shape[0], v.shape[1], -1))

    def __sub__(self, other: "MatrixField") -> "MatrixField":
        return MatrixField(self.grid, self.values - other.values)


class AlmostComplexStructure:
    """Base class: subclasses provide ``delta`` (J - J0) and ``deriv``."""

    n: int
    name = "structure"

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"complex dimension must be >= 1, got {n}")
        self.n = n
        self.J0 = standard_block(n)
        self._cm_bounds: dict[int, float] | None = None

    @property
    def is_constant(self) -> bool:
        return False

    def delta(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def deriv(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """DJ_x(xi) for arrays ``(..., 2n)`` -> ``(..., 2n, 2n)``."""
        raise NotImplementedError

    def eval(self, x: np.ndarray) -> np.ndarray:
        return self.J0 + self.delta(x)

    def delta_difference(self, x: np.ndarray, dx: np.ndarray) -> np.ndarray:
        """``J(x + dx) - J(x)``; subclasses override with a cancellation-free form."""
        x = np.asarray(x, dtype=float)
        return self.delta(x + dx) - self.delta(x)

    def deriv_difference(self, x: np.ndarray, dx: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """``DJ_{x+dx}(xi) - DJ_x(xi)``."""
        x = np.asarray(x, dtype=float)
        return self.deriv(x + dx, xi) - self.deriv(x, xi)

    def cm_bounds(self, order: int = 3) -> dict[int, float]:
        if self._cm_bounds is None or max(self._cm_bounds) < order:
            self._cm_bounds = measure_cm_bounds(self, order)
        return self._cm_bounds

    def c_norm(self, k: int) -> float:
        """Measured ``||J||_{C^k}``: max of the sup-bounds of orders 0..k."""
        b = self.cm_bounds(max(k, 1))
        return max(b[j] for j in range(k + 1))

    def dj_norm(self, k: int) -> float:
        """Measured ``||DJ||_{C^k}``."""
        b = self.cm_bounds(k + 1)
        return max(b[j] for j in range(1, k + 2))


class StandardStructure(AlmostComplexStructure):
    name = "standard"

    @property
    def is_constant(self) -> bool:
        return True

    def delta(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (2 * self.n, 2 * self.n))

    def deriv(self, x, xi):
        return self.delta(x)

    def delta_difference(self, x, dx):
        return self.delta(x)

    def deriv_difference(self, x, dx, xi):
        return self.delta(x)


class ConjugatedStructure(AlmostComplexStructure):
    """``J = Q J0 Q^-1`` with ``Q(x) = I + eps * psi(|x|^2 / radius^2) * M(x) / radius``.

    ``psi(s) = exp(1 - 1/(1-s))`` on ``s < 1`` (compact support) and
    ``M(x) = sum_i x_i M_i`` with ``sum ||M_i||_2^2 <= 1``; hence ``||eps B|| <= eps``.
    """

    name = "conjugated"

    def __init__(self, n: int, epsilon: float = 0.3, radius: float = 2.0, seed: int = 7):
        super().__init__(n)
        if not abs(epsilon) < 0.5:
            raise ValueError(f"bump amplitude must satisfy |eps| < 0.5, got {epsilon}")
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.epsilon = float(epsilon)
        self.radius = float(radius)
        self.seed = seed
        rng = np.random.default_rng(seed)
        m = 2 * n
        mats = rng.standard_normal((m, m, m))
        norms = np.linalg.norm(mats, ord=2, axis=(1, 2))
        self.M = mats / np.sqrt(np.sum(norms ** 2))

    @property
    def is_constant(self) -> bool:
        return self.epsilon == 0.0

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        s = np.sum(x * x, axis=-1) / self.radius ** 2
        inside = s < 1.0
        psi = np.zeros_like(s)
        dpsi = np.zeros_like(s)
        si = s[inside]
        psi[inside] = np.exp(1.0 - 1.0 / (1.0 - si))
        dpsi[inside] = -psi[inside] / (1.0 - si) ** 2
        Mx = np.einsum("...i,ijk->...jk", x, self.M) / self.radius
        B = psi[..., None, None] * Mx
        Q = np.eye(2 * self.n) + self.epsilon * B
        return x, s, psi, dpsi, Mx, B, np.linalg.inv(Q)

    def delta(self, x):
        _, _, _, _, _, B, Qinv = self._parts(x)
        comm = B @ self.J0 - self.J0 @ B
        return self.epsilon * comm @ Qinv

    def eval(self, x):
        return self.J0 + self.delta(x)

    def deriv(self, x, xi):
        x, s, psi, dpsi, Mx, B, Qinv = self._parts(x)
        xi = np.asarray(xi, dtype=float)
        ds = 2.0 * np.sum(x * xi, axis=-1) / self.radius ** 2
        Mxi = np.einsum("...i,ijk->...jk", xi, self.M) / self.radius
        dB = (dpsi * ds)[..., None, None] * Mx + psi[..., None, None] * Mxi
        comm = B @ self.J0 - self.J0 @ B
        J = self.J0 + self.epsilon * comm @ Qinv
        K = self.epsilon * dB @ Qinv
        return K @ J - J @ K

    # Increments below avoid subtracting nearly equal matrices: every term is
    # proportional to dx, so |J(x + dx) - J(x)| keeps full relative accuracy
    # even when |dx| is far below machine epsilon times |x|.

    def _increment_parts(self, x, dx):
        x, s0, psi0, dpsi0, Mx0, B0, Qinv0 = self._parts(x)
        dx = np.asarray(dx, dtype=float)
        x1 = x + dx
        _, s1, psi1, dpsi1, Mx1, B1, Qinv1 = self._parts(x1)
        r2 = self.radius ** 2
        ds = (2.0 * np.sum(x * dx, axis=-1) + np.sum(dx * dx, axis=-1)) / r2
        both = (s0 < 1.0) & (s1 < 1.0)
        s0, s1, ds = np.asarray(s0), np.asarray(s1), np.asarray(ds)  # single points too
        dpsi_v = np.array(psi1 - psi0, dtype=float)
        ddpsi = np.array(dpsi1 - dpsi0, dtype=float)
        if both.any():
            a0, a1 = 1.0 - s0[both], 1.0 - s1[both]
            p0 = psi0[both]
            dp = p0 * np.expm1(-ds[both] / (a0 * a1))
            dpsi_v[both] = dp
            ddpsi[both] = -dp / a1 ** 2 - p0 * ds[both] * (a0 + a1) / (a0 ** 2 * a1 ** 2)
        Mdx = np.einsum("...i,ijk->...jk", dx, self.M) / self.radius
        dB = dpsi_v[..., None, None] * Mx1 + psi0[..., None, None] * Mdx
        dQinv = -self.epsilon * Qinv1 @ dB @ Qinv0
        C0 = B0 @ self.J0 - self.J0 @ B0
        dC = dB @ self.J0 - self.J0 @ dB
        d_delta = self.epsilon * (dC @ Qinv1 + C0 @ dQinv)
        return dict(x=x, x1=x1, psi0=psi0, dpsi0=dpsi0, dpsi1=dpsi1, ddpsi=ddpsi, dpsi_v=dpsi_v,
                    Mx0=Mx0, Mx1=Mx1, Mdx=Mdx, Qinv0=Qinv0, Qinv1=Qinv1, dQinv=dQinv,
                    C0=C0, d_delta=d_delta, dx=dx)

    def delta_difference(self, x, dx):
        return self._increment_parts(x, dx)["d_delta"]

    def deriv_difference(self, x, dx, xi):
        q = self._increment_parts(x, dx)
        xi = np.asarray(xi, dtype=float)
        r2 = self.radius ** 2
        sig0 = 2.0 * np.sum(q["x"] * xi, axis=-1) / r2
        sig1 = 2.0 * np.sum(q["x1"] * xi, axis=-1) / r2
        dsig = 2.0 * np.sum(q["dx"] * xi, axis=-1) / r2
        Mxi = np.einsum("...i,ijk->...jk", xi, self.M) / self.radius
        w0 = q["dpsi0"] * sig0
        dw = q["ddpsi"] * sig1 + q["dpsi0"] * dsig
        dB0 = w0[..., None, None] * q["Mx0"] + q["psi0"][..., None, None] * Mxi
        ddB = (dw[..., None, None] * q["Mx1"] + w0[..., None, None] * q["Mdx"]
               + q["dpsi_v"][..., None, None] * Mxi)
        K0 = self.epsilon * dB0 @ q["Qinv0"]
        dK = self.epsilon * (ddB @ q["Qinv1"] + dB0 @ q["dQinv"])
        Ja = self.J0 + self.epsilon * q["C0"] @ q["Qinv0"]
        dJ = q["d_delta"]
        Jb = Ja + dJ
        return dK @ Jb + K0 @ dJ - dJ @ (K0 + dK) - Ja @ dK


def standard_J(n: int = 1) -> StandardStructure:
    return StandardStructure(n)


def conjugated_J(n: int = 1, epsilon: float = 0.3, radius: float = 2.0,
                 seed: int = 7) -> AlmostComplexStructure:
    if epsilon == 0.0:
        return standard_J(n)
    return ConjugatedStructure(n, epsilon, radius, seed)


def measure_cm_bounds(J: AlmostComplexStructure, order: int = 3, box: float = 2.0,
                      n_samples: int = 4000, seed: int = 0) -> dict[int, float]:
    """Sup-bounds of ``D^j J`` (j <= order) sampled on the box ``[-box, box]^{2n}``.

    Order 0 and 1 use the exact J and DJ; higher orders use central differences
    of DJ along the sampled unit direction.
    """
    rng = np.random.default_rng(seed)
    m = 2 * J.n
    x = rng.uniform(-box, box, (n_samples, m))
    xi = rng.standard_normal((n_samples, m))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    out = {0: float(np.max(np.linalg.norm(J.eval(x), ord=2, axis=(1, 2))))}
    if J.is_constant:
        out.update({j: 0.0 for j in range(1, order + 1)})
        return out
    spec = lambda A: float(np.max(np.linalg.norm(A, ord=2, axis=(1, 2))))  # noqa: E731
    out[1] = spec(J.deriv(x, xi))
    h = 1e-3
    if order >= 2:
        out[2] = spec((J.deriv(x + h * xi, xi) - J.deriv(x - h * xi, xi)) / (2 * h))
    if order >= 3:
        out[3] = spec((J.deriv(x + h * xi, xi) - 2 * J.deriv(x, xi)
                       + J.deriv(x - h * xi, xi)) / h ** 2)
    for j in range(4, order + 1):
        out[j] = out[3]
    return out


def eval_J_along(J: AlmostComplexStructure, u: Field) -> MatrixField:
    return MatrixField(u.grid, J.eval(u.values))


def delta_J_along(J: AlmostComplexStructure, u: Field) -> MatrixField:
    return MatrixField(u.grid, J.delta(u.values))


def dJ_along(J: AlmostComplexStructure, u: Field, xi: Field) -> MatrixField:
    if u.grid != xi.grid:
        raise ValueError("u and xi live on different grids")
    return MatrixField(u.grid, J.deriv(u.values, xi.values))


def apply_J(J: AlmostComplexStructure, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Node-wise ``J(x) w`` for raw arrays, skipping the matrix build when J is constant."""
    Jw = np.einsum("ij,...j->...i", J.J0, w)
    if J.is_constant:
        return Jw
    return Jw + np.einsum("...ij,...j->...i", J.delta(x), w)


def apply_delta(J: AlmostComplexStructure, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    if J.is_constant:
        return np.zeros_like(w)
    return np.einsum("...ij,...j->...i", J.delta(x), w)


def apply_delta_difference(J: AlmostComplexStructure, x: np.ndarray, dx: np.ndarray,
                           w: np.ndarray) -> np.ndarray:
    """Node-wise ``(J(x + dx) - J(x)) w``."""
    if J.is_constant:
        return np.zeros_like(w)
    return np.einsum("...ij,...j->...i", J.delta_difference(x, dx), w)


def apply_dJ_difference(J: AlmostComplexStructure, x: np.ndarray, dx: np.ndarray,
                        xi: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Node-wise ``(DJ_{x+dx}(xi) - DJ_x(xi)) w``."""
    if J.is_constant:
        return np.zeros_like(w)
    return np.einsum("...ij,...j->...i", J.deriv_difference(x, dx, xi), w)


def apply_dJ(J: AlmostComplexStructure, x: np.ndarray, xi: np.ndarray,
             w: np.ndarray) -> np.ndarray:
    """Node-wise ``DJ_x(xi) w``."""
    if J.is_constant:
        return np.zeros_like(w)
    return np.einsum("...ij,...j->...i", J.deriv(x, xi), w)
