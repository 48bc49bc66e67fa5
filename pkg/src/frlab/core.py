"""Flux reconstruction building blocks for 1D linear advection.

Solution points, Lagrange operators, VCJH correction functions and the three
cell matrices C_{-1}, C_0, C_{+1} that couple an element to its neighbours.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from numpy.polynomial import legendre


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SolutionBasis:
    p: int
    xi: np.ndarray

    def __post_init__(self):
        xi = _frozen(self.xi)
        if xi.shape != (self.p + 1,):
            raise ValueError(f"expected {self.p + 1} solution points, got {xi.shape}")
        if np.any(np.diff(xi) <= 0):
            raise ValueError("solution points must be strictly increasing")
        object.__setattr__(self, "xi", xi)

    @property
    def weights(self):
        """Barycentric weights of the nodal Lagrange basis."""
        return _barycentric_weights(self.xi)

    def lagrange(self, x):
        """Evaluate every l_j at the points x; returns shape (len(x), p+1)."""
        return lagrange_matrix(self.xi, x)


def gauss_points(p: int) -> SolutionBasis:
    """Gauss-Legendre solution points (roots of P_{p+1})."""
    if p < 0:
        raise ValueError("polynomial order must be >= 0")
    xi, _ = legendre.leggauss(p + 1)
    return SolutionBasis(p, np.sort(xi))


def gauss_weights(p: int) -> np.ndarray:
    return legendre.leggauss(p + 1)[1]


def _barycentric_weights(x):
    x = np.asarray(x, dtype=float)
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, 1.0)
    return 1.0 / d.prod(axis=1)


def lagrange_matrix(nodes, x):
    """L[i, j] = l_j(x_i) for the Lagrange basis on `nodes`."""
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = len(nodes)
    out = np.ones((len(x), n))
    for j in range(n):
        for m in range(n):
            if m != j:
                out[:, j] *= (x - nodes[m]) / (nodes[j] - nodes[m])
    return out


def diff_matrix(basis: SolutionBasis) -> np.ndarray:
    """D[i, j] = l_j'(xi_i)."""
    x = basis.xi
    w = _barycentric_weights(x)
    n = len(x)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (w[j] / w[i]) / (x[i] - x[j])
        # negative-sum trick keeps D @ 1 == 0 to rounding
        D[i, i] = -D[i].sum()
    return _frozen(D)


def interface_interp(basis: SolutionBasis):
    """Interpolation vectors (ll, lr) to the left and right element faces."""
    L = basis.lagrange([-1.0, 1.0])
    return _frozen(L[0]), _frozen(L[1])


# --- VCJH correction functions ------------------------------------------------


def _ap_pfact(p: int) -> float:
    """a_p * p!, where a_p is the leading coefficient of the Legendre P_p."""
    a_p = factorial(2 * p) / (2**p * factorial(p) ** 2)
    return a_p * factorial(p)


def iota_lower_bound(p: int) -> float:
    return -2.0 / ((2 * p + 1) * _ap_pfact(p) ** 2)


def iota_huynh(p: int) -> float:
    if p < 1:
        raise ValueError("Huynh correction requires p >= 1")
    return 2.0 * (p + 1) / ((2 * p + 1) * p * _ap_pfact(p) ** 2)


def eta(p: int, iota: float) -> float:
    return iota * (2 * p + 1) * _ap_pfact(p) ** 2 / 2.0


VARIANTS = ("DG", "Huynh", "IotaPlus", "Custom")


@dataclass(frozen=True)
class CorrectionScheme:
    iota: float
    named_variant: str = "Custom"

    def __post_init__(self):
        if self.named_variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.named_variant!r}; expected one of {VARIANTS}")

    @classmethod
    def dg(cls):
        return cls(0.0, "DG")

    @classmethod
    def huynh(cls, p):
        return cls(iota_huynh(p), "Huynh")

    @classmethod
    def custom(cls, iota):
        return cls(float(iota), "Custom")


def _check_iota(p, iota):
    lb = iota_lower_bound(p)
    if not iota > lb:
        raise ValueError(
            f"iota={iota:g} is not above the VCJH stability bound {lb:.6g} for p={p}"
        )


def vcjh_left_coeffs(p: int, iota: float) -> np.ndarray:
    """Legendre-series coefficients of the left correction function h_l."""
    _check_iota(p, iota)
    c = np.zeros(p + 2)
    if p == 0:
        # every member of the family collapses to the DG/Radau function here
        c[0], c[1] = 0.5, -0.5
        return c
    e = eta(p, iota)
    c[p] = 1.0
    c[p - 1] = -e / (1.0 + e)
    c[p + 1] = -1.0 / (1.0 + e)
    return c * ((-1) ** p / 2.0)


def correction_polys(p: int, iota: float):
    """(h_l, h_r) as numpy Legendre series; h_r(x) = h_l(-x)."""
    cl = vcjh_left_coeffs(p, iota)
    cr = cl * (-1.0) ** np.arange(len(cl))
    return legendre.Legendre(cl), legendre.Legendre(cr)


def vcjh_correction_derivs(basis: SolutionBasis, scheme: CorrectionScheme):
    """dh_l/dxi and dh_r/dxi sampled at the solution points."""
    hl, hr = correction_polys(basis.p, scheme.iota)
    return _frozen(hl.deriv()(basis.xi)), _frozen(hr.deriv()(basis.xi))


# --- assembled operators ------------------------------------------------------


@dataclass(frozen=True)
class FrOperators:
    D: np.ndarray
    ll: np.ndarray
    lr: np.ndarray
    hl: np.ndarray
    hr: np.ndarray
    alpha: float
    Cm: np.ndarray
    C0: np.ndarray
    Cp: np.ndarray
    basis: SolutionBasis | None = None
    scheme: CorrectionScheme | None = None
    filter_tag: str = "none"
    prefilter: np.ndarray | None = None  # S for FullScheme filtering, applied after the stencil
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def p(self):
        return len(self.ll) - 1

    @property
    def n(self):
        return len(self.ll)


def cell_matrices(D, ll, lr, hl, hr, alpha):
    Cp = (1.0 - alpha) * np.outer(hr, ll)
    Cm = alpha * np.outer(hl, lr)
    C0 = D - alpha * np.outer(hl, ll) - (1.0 - alpha) * np.outer(hr, lr)
    return Cm, C0, Cp


def assemble_operators(basis: SolutionBasis, scheme: CorrectionScheme, alpha: float = 1.0) -> FrOperators:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    D = diff_matrix(basis)
    ll, lr = interface_interp(basis)
    hl, hr = vcjh_correction_derivs(basis, scheme)
    Cm, C0, Cp = cell_matrices(D, ll, lr, hl, hr, alpha)
    return FrOperators(
        D, ll, lr, hl, hr, float(alpha), _frozen(Cm), _frozen(C0), _frozen(Cp),
        basis=basis, scheme=scheme,
    )


def fr_operators(p: int, iota: float | str = "huynh", alpha: float = 1.0) -> FrOperators:
    """Convenience wrapper on Gauss points; iota may be a number, 'dg' or 'huynh'."""
    basis = gauss_points(p)
    if isinstance(iota, str):
        key = iota.lower()
        if key == "dg":
            scheme = CorrectionScheme.dg()
        elif key == "huynh":
            scheme = CorrectionScheme.huynh(p)
        else:
            raise ValueError(f"unknown scheme name {iota!r}")
    else:
        scheme = CorrectionScheme.custom(iota)
    return assemble_operators(basis, scheme, alpha)


# --- mesh ---------------------------------------------------------------------


@dataclass(frozen=True)
class MeshSpec:
    deltas: np.ndarray
    expansion: float | None = None

    def __post_init__(self):
        d = _frozen(np.atleast_1d(self.deltas))
        if np.any(d <= 0):
            raise ValueError("element widths must be positive")
        object.__setattr__(self, "deltas", d)

    @property
    def jacobians(self):
        return self.deltas / 2.0

    @property
    def n_elements(self):
        return len(self.deltas)

    @property
    def is_uniform(self):
        return bool(np.allclose(self.deltas, self.deltas[0], rtol=1e-12, atol=0))

    @property
    def edges(self):
        return np.concatenate([[0.0], np.cumsum(self.deltas)])

    @classmethod
    def uniform(cls, n_elements=1, length=None, delta=1.0):
        if length is not None:
            delta = length / n_elements
        return cls(np.full(n_elements, float(delta)))

    @classmethod
    def geometric(cls, n_elements, length, gamma):
        """Widths growing by the factor gamma from one element to the next."""
        w = gamma ** np.arange(n_elements, dtype=float)
        return cls(length * w / w.sum(), expansion=float(gamma))

    def nodes(self, basis: SolutionBasis, x0=0.0):
        """Physical solution-point coordinates, shape (n_elements, p+1)."""
        left = x0 + self.edges[:-1]
        return left[:, None] + (basis.xi[None, :] + 1.0) * self.jacobians[:, None]
