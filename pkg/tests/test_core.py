import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from frlab.core import (
    CorrectionScheme, MeshSpec, SolutionBasis, assemble_operators, cell_matrices, correction_polys,
    diff_matrix, eta, fr_operators, gauss_points, gauss_weights, interface_interp, iota_huynh,
    iota_lower_bound, vcjh_correction_derivs,
)

orders = st.integers(min_value=0, max_value=10)


def legendre_value(n, x):
    p0, p1 = 1.0, x
    if n == 0:
        return p0
    for m in range(1, n):
        p0, p1 = p1, ((2 * m + 1) * x * p1 - m * p0) / (m + 1)
    return p1


def bisection_roots(n):
    """Roots of P_n by sign changes on a fine grid, refined by bisection."""
    grid = np.linspace(-1, 1, 20001)
    vals = [legendre_value(n, x) for x in grid]
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            for _ in range(80):
                m = 0.5 * (a + b)
                fm = legendre_value(n, m)
                if fa * fm <= 0:
                    b = m
                else:
                    a, fa = m, fm
            roots.append(0.5 * (a + b))
    return np.array(roots)


def endpoint_basis():
    return SolutionBasis(1, np.array([-1.0, 1.0]))


# --- solution points ---------------------------------------------------------


def test_gauss_points_low_orders():
    assert np.allclose(gauss_points(0).xi, [0.0], atol=1e-15)
    assert np.allclose(gauss_points(1).xi, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)


def test_gauss_points_p4_against_bisection():
    xi = gauss_points(4).xi
    assert np.allclose(xi, -xi[::-1], atol=1e-15)
    assert max(abs(legendre_value(5, x)) for x in xi) < 1e-12
    assert np.allclose(xi, bisection_roots(5), atol=1e-12)


def test_gauss_points_rejects_negative_order():
    with pytest.raises(ValueError):
        gauss_points(-1)


def test_basis_rejects_unordered_points():
    with pytest.raises(ValueError):
        SolutionBasis(1, np.array([0.5, -0.5]))


@given(orders)
def test_points_interior_and_cardinal(p):
    b = gauss_points(p)
    assert np.all(np.abs(b.xi) < 1) and np.all(np.diff(b.xi) > 0)
    assert np.abs(b.lagrange(b.xi) - np.eye(p + 1)).max() <= 1e-12


# --- differentiation and interpolation --------------------------------------


def test_diff_matrix_linear_endpoints():
    assert np.array_equal(diff_matrix(endpoint_basis()), [[-0.5, 0.5], [-0.5, 0.5]])


@given(orders, st.data())
def test_diff_matrix_exact_on_monomials(p, data):
    m = data.draw(st.integers(min_value=0, max_value=p))
    xi = gauss_points(p).xi
    D = diff_matrix(gauss_points(p))
    dv = m * xi ** (m - 1) if m else np.zeros_like(xi)
    assert np.abs(D @ xi**m - dv).max() <= 1e-11


@given(st.integers(min_value=1, max_value=10))
def test_diff_matrix_constant_and_identity(p):
    D = diff_matrix(gauss_points(p))
    assert np.abs(D @ np.ones(p + 1)).max() <= 1e-12
    assert np.abs(D @ gauss_points(p).xi - 1).max() <= 1e-11


def test_interface_interp_endpoints():
    ll, lr = interface_interp(endpoint_basis())
    assert np.array_equal(ll, [1, 0]) and np.array_equal(lr, [0, 1])


@given(orders, st.data())
def test_interface_interp_exact(p, data):
    m = data.draw(st.integers(min_value=0, max_value=p))
    b = gauss_points(p)
    ll, lr = interface_interp(b)
    assert abs(ll @ b.xi**m - (-1.0) ** m) <= 1e-11
    assert abs(lr @ b.xi**m - 1.0) <= 1e-11
    assert abs(ll.sum() - 1) <= 1e-12 and abs(lr.sum() - 1) <= 1e-12


def test_interface_interp_symmetry_p4():
    ll, lr = interface_interp(gauss_points(4))
    assert np.allclose(ll, lr[::-1], atol=1e-14)


# --- correction functions ----------------------------------------------------


def test_huynh_and_bound_values():
    assert iota_huynh(4) == pytest.approx(2.5195263290501e-5, rel=1e-12)
    assert eta(4, iota_huynh(4)) == pytest.approx(5 / 4, rel=1e-13)  # eta = (p+1)/p
    assert iota_lower_bound(1) == pytest.approx(-2 / 3)


def test_dg_p1_endpoint_derivatives():
    hl, hr = vcjh_correction_derivs(endpoint_basis(), CorrectionScheme.dg())
    assert np.allclose(hl, [-2.0, 1.0], atol=1e-14)
    assert np.allclose(hr, [-1.0, 2.0], atol=1e-14)


@pytest.mark.parametrize("p", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("which", ["dg", "huynh"])
def test_correction_derivatives_match_symbolic(p, which):
    x = sp.symbols("x")
    iota = 0 if which == "dg" else sp.Rational(2 * (p + 1), 1) / (
        (2 * p + 1) * p * (sp.factorial(2 * p) / (2**p * sp.factorial(p) ** 2) * sp.factorial(p)) ** 2
    )
    ap = sp.factorial(2 * p) / (2**p * sp.factorial(p) ** 2)
    e = iota * (2 * p + 1) * (ap * sp.factorial(p)) ** 2 / 2
    L = lambda n: sp.legendre(n, x)  # noqa: E731
    h = (-1) ** p * sp.Rational(1, 2) * (L(p) - (e * L(p - 1) + L(p + 1)) / (1 + e))
    dh = sp.lambdify(x, sp.diff(h, x))
    b = gauss_points(p)
    scheme = CorrectionScheme.dg() if which == "dg" else CorrectionScheme.huynh(p)
    hl, hr = vcjh_correction_derivs(b, scheme)
    assert np.allclose(hl, [float(dh(v)) for v in b.xi], atol=1e-12)
    assert np.allclose(hr, [-float(dh(-v)) for v in b.xi], atol=1e-12)


@given(st.integers(min_value=0, max_value=10), st.floats(min_value=-0.9, max_value=20.0))
def test_correction_boundary_values(p, frac):
    iota = abs(iota_lower_bound(p)) * frac
    hl, hr = correction_polys(p, iota)
    assert abs(hl(-1.0) - 1) <= 1e-12 and abs(hl(1.0)) <= 1e-12
    assert abs(hr(1.0) - 1) <= 1e-12 and abs(hr(-1.0)) <= 1e-12


@given(orders, st.floats(min_value=-0.9, max_value=20.0))
def test_hr_is_reversed_negative_hl(p, frac):
    iota = abs(iota_lower_bound(p)) * frac
    hl, hr = vcjh_correction_derivs(gauss_points(p), CorrectionScheme.custom(iota))
    assert np.allclose(hr, -hl[::-1], atol=1e-11 * max(1, np.abs(hl).max()))


@pytest.mark.parametrize("p", range(0, 9))
def test_dg_lifting_equals_inverse_mass(p):
    # with Gauss points the DG mass matrix is diag(w), so the DG lift is -ll / w
    b = gauss_points(p)
    hl, _ = vcjh_correction_derivs(b, CorrectionScheme.dg())
    ll, _ = interface_interp(b)
    assert np.allclose(hl, -ll / gauss_weights(p)[np.argsort(np.argsort(b.xi))], atol=1e-10)


def test_iota_below_bound_rejected_with_bound_in_message():
    lb = iota_lower_bound(3)
    with pytest.raises(ValueError, match=f"{lb:.6g}"):
        fr_operators(3, lb * 1.01)


def test_unknown_variant_rejected():
    with pytest.raises(ValueError):
        CorrectionScheme(0.0, "Spline")


# --- assembled operators -----------------------------------------------------


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
@pytest.mark.parametrize("p", [1, 3, 4, 6])
@pytest.mark.parametrize("scale", [-0.25, 0.0, 1.0, 4.0])
def test_cell_matrix_definitions_and_constant_preservation(alpha, p, scale):
    iota = scale * iota_huynh(p)
    ops = fr_operators(p, iota, alpha)
    hl, hr, ll, lr, D = ops.hl, ops.hr, ops.ll, ops.lr, ops.D
    assert np.abs(ops.Cp - (1 - alpha) * np.outer(hr, ll)).max() <= 1e-14
    assert np.abs(ops.Cm - alpha * np.outer(hl, lr)).max() <= 1e-14
    c0 = D - alpha * np.outer(hl, ll) - (1 - alpha) * np.outer(hr, lr)
    assert np.abs(ops.C0 - c0).max() <= 1e-14
    assert np.abs((ops.Cm + ops.C0 + ops.Cp) @ np.ones(p + 1)).max() <= 1e-12


def test_full_upwind_has_no_downstream_coupling():
    assert not fr_operators(4, "huynh", 1.0).Cp.any()


def test_alpha_out_of_range_rejected():
    with pytest.raises(ValueError):
        assemble_operators(gauss_points(2), CorrectionScheme.dg(), 1.5)


@pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0])
@pytest.mark.parametrize("p", [2, 4, 5])
def test_reflection_symmetry(alpha, p):
    # reversing points maps D -> -D, ll <-> lr, hl -> -hr: the scheme for alpha
    # is the mirror image of the scheme for 1 - alpha
    ops = fr_operators(p, "huynh", alpha)
    mirror = fr_operators(p, "huynh", 1 - alpha)
    P = np.eye(p + 1)[::-1]
    assert np.allclose(P @ ops.D @ P, -ops.D, atol=1e-11)
    assert np.allclose(P @ ops.ll, ops.lr, atol=1e-14)
    assert np.allclose(P @ ops.hl, -ops.hr, atol=1e-11)
    Cm, C0, Cp = cell_matrices(P @ ops.D @ P, P @ ops.ll, P @ ops.lr, P @ ops.hl, P @ ops.hr, alpha)
    for a, b in ((Cm, ops.Cm), (C0, ops.C0), (Cp, ops.Cp)):
        assert np.allclose(a, P @ b @ P, atol=1e-11)
    assert np.allclose(P @ ops.C0 @ P, -mirror.C0, atol=1e-11)
    assert np.allclose(P @ ops.Cp @ P, -mirror.Cm, atol=1e-11)
    assert np.allclose(P @ ops.Cm @ P, -mirror.Cp, atol=1e-11)


def test_operators_are_immutable():
    ops = fr_operators(3)
    with pytest.raises(ValueError):
        ops.C0[0, 0] = 1.0


# --- mesh -------------------------------------------------------------------


def test_mesh_jacobians():
    m = MeshSpec.uniform(4, length=2.0)
    assert np.array_equal(m.deltas, 2 * m.jacobians) and m.is_uniform
    g = MeshSpec.geometric(5, 1.0, 1.2)
    assert np.allclose(g.deltas[1:] / g.deltas[:-1], 1.2) and abs(g.deltas.sum() - 1) < 1e-14
    assert not g.is_uniform


def test_mesh_rejects_nonpositive_width():
    with pytest.raises(ValueError):
        MeshSpec(np.array([1.0, 0.0]))
