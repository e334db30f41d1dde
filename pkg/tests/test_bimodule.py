import itertools
import random
from fractions import Fraction

import pytest

from oracles import brute_fibers, ledrappier_rows, shift_rows
from r2d.bimodule import (BimoduleHandle, TensorSum, alpha, alpha_matrix, check_commuting_expectations,
                          compactness_growth_diagnostic, convolution_check, expectation, expectation_matrix,
                          find_noncommuting_weights, flip_unitary_check, frame_check, frame_compute,
                          inner_product, kernel_operator_apply, operator_identity_report, phi_check,
                          positivity_check, right_action, right_compatibility_check, scalar_flip_check,
                          tensor_inner, theta_apply, theta_kernel, transfer, transfer_matrix)
from r2d.errors import R2DError
from r2d.functions import CylinderFunction, LaurentFunction
from r2d.models import FiberMeasureSystem


def _random_cylinder(model, depth, rng):
    return CylinderFunction(model, depth, {x: Fraction(rng.randint(-4, 4), rng.randint(1, 3))
                                           for x in model.patterns(depth)})


# ---------------------------------------------------------------- operators against brute force

@pytest.mark.parametrize("direction", [1, 2])
def test_transfer_matches_brute_fiber_sum(led, direction):
    rng = random.Random(direction)
    e = (1, 0) if direction == 1 else (0, 1)
    f = _random_cylinder(led, (3, 3), rng)
    low = (3 - e[0], 3 - e[1])
    fib = brute_fibers(ledrappier_rows((3, 3)), e)
    g = transfer(f, direction)
    for t in led.patterns(low):
        ys = fib[t.rows]
        expect = sum(f.values[y] for y in led.patterns((3, 3)) if y.rows in ys) / len(ys)
        assert g.values[t] == expect


@pytest.mark.parametrize("direction", [1, 2])
def test_expectation_averages_over_rn_class(led, direction):
    e = (1, 0) if direction == 1 else (0, 1)
    P = expectation_matrix(led, None, direction, (3, 3))
    for x in P.codomain:
        for y in P.domain:
            same = shift_rows(x.rows, e) == shift_rows(y.rows, e)
            assert P.entry(x, y) == (Fraction(1, 2) if same else 0)


def test_alpha_is_composition(led):
    rng = random.Random(3)
    f = _random_cylinder(led, (2, 3), rng)
    g = alpha(f, 1)
    assert g.depth == (3, 3)
    for y in led.patterns((3, 3)):
        assert g.values[y] == f.values[y.restrict((2, 3), (1, 0))]
    A = alpha_matrix(led, 1, (3, 3))
    assert len(A.domain) == len(led.patterns((2, 3)))


def test_transfer_after_alpha_is_identity_exhaustively(led):
    for x in led.patterns((2, 2)):
        f = CylinderFunction.delta(led, (2, 2), x)
        for d in (1, 2):
            assert transfer(alpha(f, d), d) == f


@pytest.mark.parametrize("model,depth", [("led", (3, 3)), ("circle", 6), ("kg23", (2, 2))])
def test_operator_identity_report(model, depth, request):
    rep = operator_identity_report(request.getfixturevalue(model), None, depth)
    assert rep["ok"], rep


def test_transfer_matrix_is_positive_and_lowers_depth(led):
    L = transfer_matrix(led, None, 2, (3, 3))
    assert L.is_positive()
    assert {p.shape for p in L.codomain} == {(3, 2)}


def test_circle_transfer_on_monomials(circle):
    z = lambda k: LaurentFunction.monomial(circle, k)  # noqa: E731
    # L_p(z^k) = z^(k/p) when p | k and 0 otherwise
    assert transfer(z(4), 1) == z(2)
    assert transfer(z(3), 1) == LaurentFunction(circle, {})
    assert transfer(z(6), 2) == z(2)
    assert expectation(z(1), 1) == LaurentFunction(circle, {})


# ---------------------------------------------------------------- commuting expectations

def test_counting_expectations_commute(led, full):
    assert check_commuting_expectations(led)["commute"]
    assert check_commuting_expectations(full, None, (2, 2))["commute"]


def test_noncommuting_product_weights_found():
    w1, w2, rep = find_noncommuting_weights()
    assert w1 != w2 and not rep["commute"]
    assert rep["witness"] is not None


def test_flip_refuses_noncommuting(full):
    w1, w2, _ = find_noncommuting_weights()
    skew = full.with_measure(FiberMeasureSystem.product(w1, w2))
    with pytest.raises(R2DError) as exc:
        flip_unitary_check(skew, None, (1, 1))
    assert exc.value.code == "noncommuting-expectations"


# ---------------------------------------------------------------- inner products and actions

def test_inner_product_sesquilinear_and_right_compatible(led, circle):
    for model, depth in ((led, (2, 2)), (circle, 3)):
        for d in (1, 2):
            assert right_compatibility_check(model, None, d, depth)
            assert positivity_check(model, None, d, depth)


def test_handle_zero_shape_is_algebra(led):
    h = BimoduleHandle(led, (0, 0))
    f = CylinderFunction.constant(led, (1, 1), 3)
    assert h.inner(f, f) == CylinderFunction.constant(led, (1, 1), 9)
    assert BimoduleHandle(led, (1, 0)).inner(f.refine((2, 1)), f.refine((2, 1))).depth == (1, 1)


# ---------------------------------------------------------------- frames

@pytest.mark.parametrize("direction", [1, 2])
def test_ledrappier_frame(led, direction):
    rep = frame_check(led, None, direction, (3, 3))
    assert rep == {"frame_size": 2, "reconstructs": True, "basis_size": 32}


def test_circle_frame(circle):
    assert frame_check(circle, None, 1, 4)["reconstructs"]
    assert len(frame_compute(circle, None, 2, 4)) == 3


def test_full_shift_has_no_frame(full):
    with pytest.raises(R2DError) as exc:
        frame_compute(full, None, 1, (2, 2))
    assert exc.value.code == "not-locally-injective"


# ---------------------------------------------------------------- Phi and flip

@pytest.mark.parametrize("order", [(1, 2), (2, 1)])
def test_phi_ledrappier(led, order):
    rep = phi_check(led, None, (2, 2), order)
    assert rep["inner_products_preserved"] and rep["phi_phi_inv_identity"] and rep["phi_inv_phi_identity"]


def test_phi_preserves_inner_products_on_sums(led):
    # pruning only drops pairs with disjoint supports; check a dense sum directly
    rng = random.Random(11)
    s = TensorSum([(Fraction(rng.randint(1, 3)), _random_cylinder(led, (2, 2), rng), _random_cylinder(led, (1, 2), rng))
                   for _ in range(2)])
    lhs = tensor_inner(s, s)
    phi = sum((c * x1 * alpha(x2, 1) for c, x1, x2 in s.terms[1:]), s.terms[0][0] * s.terms[0][1] * alpha(s.terms[0][2], 1))
    rhs = transfer(transfer(phi.conjugate() * phi, 1), 2)
    assert lhs == rhs


def test_flip_ledrappier_and_circle(led, circle):
    for model, depth in ((led, (2, 2)), (circle, 2)):
        rep = flip_unitary_check(model, None, depth)
        assert rep["preserved"] and rep["unit_to_unit"]


def test_scalar_flip():
    assert scalar_flip_check(2, 3) == {"preserved": True, "dimension": 6}


# ---------------------------------------------------------------- Theta kernels

def test_theta_kernel_operator_agrees_with_definition(led):
    rng = random.Random(5)
    for _ in range(5):
        xi, eta, zeta = (_random_cylinder(led, (2, 2), rng) for _ in range(3))
        k = theta_kernel(xi, eta, (1, 0))
        assert kernel_operator_apply(k, zeta) == theta_apply(xi, eta, zeta, (1, 0))


def test_theta_on_circle(circle):
    z = lambda k: LaurentFunction.monomial(circle, k)  # noqa: E731
    k = theta_kernel(z(1), z(0), (1, 0))
    for j in range(-3, 4):
        assert kernel_operator_apply(k, z(j)) == theta_apply(z(1), z(0), z(j), (1, 0))


@pytest.mark.parametrize("model,depth,kernels", [("led", (2, 2), 16), ("circle", 2, 25)])
def test_three_path_convolution(model, depth, kernels, request):
    rep = convolution_check(request.getfixturevalue(model), (1, 0), depth)
    assert rep["agree"] and rep["kernels"] == kernels and rep["products_checked"] == kernels ** 2


# ---------------------------------------------------------------- compactness growth

def test_compactness_growth(led, full):
    assert [r["minimal"] for r in compactness_growth_diagnostic(full)] == [2, 4, 8, 16]
    assert [r["minimal"] for r in compactness_growth_diagnostic(led)] == [2, 2, 2, 2]


def test_full_shift_class_sizes_by_brute_force(full):
    # an R_1 class at shape (2, d) is fixed by column 1, leaving 2^d choices of column 0
    for d in range(1, 5):
        groups = {}
        for cells in itertools.product("01", repeat=2 * d):
            rows = tuple(cells[2 * j:2 * j + 2] for j in range(d))
            groups.setdefault(shift_rows(rows, (1, 0)), []).append(rows)
        assert {len(c) for c in groups.values()} == {2 ** d}


def test_right_action_depth(led):
    xi = CylinderFunction.constant(led, (2, 2), 2)
    a = CylinderFunction.constant(led, (1, 2), 3)
    assert right_action(xi, a, 1) == CylinderFunction.constant(led, (2, 2), 6)
    assert inner_product(xi, xi, 1) == CylinderFunction.constant(led, (1, 2), 4)
