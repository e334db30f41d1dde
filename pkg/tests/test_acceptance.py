"""Acceptance criteria 1-10. Every comparison is exact; each test prints one PASS/FAIL line."""
import itertools
from fractions import Fraction

import pytest

from conftest import reducible_graph
from oracles import brute_grids, brute_patterns, ledrappier_rows, prime_factors, shift_rows
from r2d.bimodule import (compactness_growth_diagnostic, convolution_check, flip_unitary_check, frame_check,
                          frame_compute, operator_identity_report, phi_check)
from r2d.groupoid import rn_algebra_description
from r2d.ktheory import (bratteli_build, bratteli_from_kgraph, cuntz_tensor_core_check, diagonal_chain,
                         dimension_group_report, simplicity_report)
from r2d.models import build_model, enumerate_patterns, ledrappier_spec, paths_of_shape, single_vertex_graph
from r2d.shifts import check_local_injectivity, check_open_surjective, fiber_decomposition, revalidate_witness


@pytest.fixture
def announce(capsys):
    """Run a criterion body and print exactly one PASS/FAIL line for it."""

    def run(number, title, body):
        try:
            body()
        except BaseException:
            with capsys.disabled():
                print(f"\nFAIL criterion {number}: {title}")
            raise
        with capsys.disabled():
            print(f"\nPASS criterion {number}: {title}")

    return run


def test_criterion_01_ledrappier_counts(announce):
    def body():
        spec = ledrappier_spec()
        for m, n in itertools.product(range(1, 5), repeat=2):
            got = sorted(p.rows for p in enumerate_patterns(spec, (m, n)))
            assert len(got) == 2 ** (m + n - 1)
            assert got == sorted(ledrappier_rows((m, n)))
            assert got == sorted(brute_patterns((0, 1), spec.window, spec.allowed, (m, n)))
        # x(1,0) + x(0,0) + x(0,1) even, listed as (x(0,0), x(1,0), x(0,1))
        assert spec.window == ((0, 0), (1, 0), (0, 1))
        assert set(spec.allowed) == {(0, 0, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1)}

    announce(1, "Ledrappier counts 2^(m+n-1), 1<=m,n<=4, and the 4 window patterns", body)


def test_criterion_02_ledrappier_local_homeomorphism(announce, led):
    def body():
        for direction in (1, 2):
            v = check_local_injectivity(led, direction, ((0, 0),), (4, 4))
            assert v.status == "VerifiedAtDepth" and v.witness is None
            e = (1, 0) if direction == 1 else (0, 1)
            for d in range(1, 4):
                assert check_open_surjective(led, direction, (d + 1, d + 1))["nu"] == [2]
                for target in led.patterns((d, d)):
                    assert len(fiber_decomposition(led, direction, target)) == 2
                # independent: brute preimage counts
                big = ledrappier_rows((d + e[0], d + e[1]))
                counts = {}
                for rows in big:
                    counts[shift_rows(rows, e)] = counts.get(shift_rows(rows, e), 0) + 1
                assert set(counts.values()) == {2}
            # independent: agreeing at (0,0) with equal image forces equality at depth (4,4)
            pats = ledrappier_rows((4, 4))
            seen = {}
            for rows in pats:
                key = (rows[0][0], shift_rows(rows, e))
                assert key not in seen
                seen[key] = rows

    announce(2, "Ledrappier sigma_1, sigma_2 injective on window {(0,0)} at depth (4,4), nu = 2", body)


def test_criterion_03_full_shift_refutation(announce, full):
    def body():
        cells = [(i, j) for j in range(4) for i in range(4)]
        for mask in range(1, 1 << 16):
            window = tuple(c for k, c in enumerate(cells) if mask >> k & 1)
            for direction in (1, 2):
                v = check_local_injectivity(full, direction, window, (4, 4))
                assert v.status == "RefutedWithWitness"
                assert revalidate_witness(full, v)
        # independent re-check of one witness per direction on the full box
        for direction in (1, 2):
            e = (1, 0) if direction == 1 else (0, 1)
            v = check_local_injectivity(full, direction, tuple(cells), (4, 4))
            y, z = (w.rows for w in v.witness)
            assert y != z and shift_rows(y, e) == shift_rows(z, e)
            assert all(y[j][i] == z[j][i] for i, j in cells)

    announce(3, "full shift refuted for all 65535 windows in the (4,4) box, both directions", body)


def test_criterion_04_operator_identities(announce, led, circle):
    def body():
        for model, depth in ((led, (3, 3)), (circle, 6)):
            rep = operator_identity_report(model, None, depth)
            for d in ("direction_1", "direction_2"):
                r = rep[d]
                assert r["P_idempotent"] and r["P_unital"] and r["L_unital"] and r["bimodule_identity"]
            assert rep["commuting"] and rep["ok"]

    announce(4, "P^2=P, P(1)=1, L(1)=1, L(alpha(f)g)=f L(g), P1P2=P2P1 on Ledrappier and circle (2,3)", body)


def test_criterion_05_frames(announce, led):
    def body():
        for direction in (1, 2):
            assert len(frame_compute(led, None, direction, (3, 3))) == 2
            assert frame_check(led, None, direction, (3, 3))["reconstructs"]
        circle2 = build_model((2, 3))
        frame = frame_compute(circle2, None, 1, 6)
        assert [sorted(u.indicator.coeffs) for u in frame] == [[0], [1]]
        assert all(u.weight_squared == 1 for u in frame)
        assert frame_check(circle2, None, 1, 6)["reconstructs"]

    announce(5, "Parseval frame reconstruction: Ledrappier 2-element frames, circle p=2 frame {1, z}", body)


def test_criterion_06_phi_and_flip(announce, led, circle):
    def body():
        for model, depth in ((led, (2, 2)), (circle, 3)):
            for order in ((1, 2), (2, 1)):
                rep = phi_check(model, None, depth, order)
                assert rep["inner_products_preserved"]
                assert rep["phi_phi_inv_identity"] and rep["phi_inv_phi_identity"]
            flip = flip_unitary_check(model, None, depth)
            assert flip["preserved"] and flip["unit_to_unit"]

    announce(6, "Phi preserves inner products, Phi^-1(xi)=xi(x)1 two-sided inverse, flip preserves inner products",
             body)


def test_criterion_07_convolution(announce, led, circle):
    def body():
        rep = convolution_check(led, (1, 0), (2, 2))
        assert rep["agree"] and rep["kernels"] == 16 and rep["products_checked"] == 256
        rep = convolution_check(circle, (1, 0), 2)
        assert rep["agree"] and rep["kernels"] == 25 and rep["products_checked"] == 625

    announce(7, "kernel convolution = block product = Theta composition rule (Ledrappier, circle p=2)", body)


def test_criterion_08_ktheory(announce, led, circle):
    def body():
        for a, b in itertools.product(range(4), repeat=2):
            assert rn_algebra_description(circle, (a, b)).block_sizes == [2 ** a * 3 ** b]
        rep = dimension_group_report(bratteli_build(circle, diagonal_chain(4)))
        assert rep.supernatural == {"2": "inf", "3": "inf"} and rep.k0 == "Z[1/6]"
        rep = dimension_group_report(bratteli_build(led, diagonal_chain(3)))
        assert rep.supernatural == {"2": "inf"}
        assert set(rep.supernatural) == {str(p) for p in prime_factors(4)}
        g = single_vertex_graph(2, 3)
        d = bratteli_from_kgraph(g, diagonal_chain(4))
        assert [lv[0] for lv in d.levels] == [6 ** m for m in range(4)]
        for m in range(1, 4):
            assert paths_of_shape(g, (m, m), "v") == 6 ** m
        assert brute_grids(g, (1, 1)) == {"v": 6} and brute_grids(g, (2, 2)) == {"v": 36}
        cuntz = cuntz_tensor_core_check(2, 3, 3)
        assert cuntz["sizes"] == [6, 36, 216] and cuntz["flip_preserved"]

    announce(8, "circle blocks 2^a 3^b and 2^inf 3^inf, Ledrappier 2^inf, (2,3)-graph core sizes 6^m", body)


def test_criterion_09_simplicity(announce, circle):
    def body():
        assert simplicity_report(circle, 2).verdict == "evidence-for-simple"
        assert simplicity_report(build_model(reducible_graph()), 2).verdict == "obstruction-found"

    announce(9, "simplicity: circle (2,3) evidence-for-simple, reducible 2-vertex graph obstruction-found", body)


def test_criterion_10_compactness_growth(announce, full, led):
    def body():
        half = {"0": Fraction(1, 2), "1": Fraction(1, 2)}
        assert full.measure.modes == ("product", "product")
        assert [dict(w) for w in full.measure.weights] == [half, half]
        assert [r["minimal"] for r in compactness_growth_diagnostic(full)] == [2, 4, 8, 16]
        assert [r["minimal"] for r in compactness_growth_diagnostic(led)] == [2, 2, 2, 2]

    announce(10, "minimal Theta-count 2,4,8,16 on the Bernoulli(1/2) full shift, constant 2 on Ledrappier", body)
