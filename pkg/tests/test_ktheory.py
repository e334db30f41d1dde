import itertools

import pytest
from hypothesis import given, settings, strategies as st

from conftest import reducible_graph
from oracles import ledrappier_rows, mat_mul, prime_factors, shift_rows
from r2d.errors import R2DError
from r2d.ktheory import (BratteliDiagram, bratteli_build, bratteli_from_kgraph, cuntz_tensor_core_check,
                         diagonal_chain, dimension_group_report, primitivity_power, simplicity_report,
                         supernatural_of, telescope)
from r2d.models import single_vertex_graph


def _transpose(m):
    return [list(r) for r in zip(*m)]


def test_ledrappier_diagonal_chain(led):
    d = bratteli_build(led, diagonal_chain(3))
    assert d.levels == [[1], [4], [16]]
    assert d.edges == [[[4]], [[4]]]
    rep = dimension_group_report(d)
    assert rep.stationary and rep.supernatural == {"2": "inf"} and rep.k0 == "Z[1/2]"


def test_ledrappier_class_sizes_brute_force():
    # R_(t,t) classes at depth (3,3): patterns sharing sigma^(t,t)
    for t in range(3):
        groups = {}
        for rows in ledrappier_rows((3, 3)):
            groups.setdefault(shift_rows(rows, (t, t)), []).append(rows)
        assert {len(c) for c in groups.values()} == {4 ** t}


@pytest.mark.parametrize("a,b", [(a, b) for a in range(4) for b in range(4)])
def test_circle_block_sizes(circle, a, b):
    d = bratteli_build(circle, [(0, 0), (a, b)])
    assert d.levels[1] == [2 ** a * 3 ** b]


def test_circle_supernatural(circle):
    d = bratteli_build(circle, diagonal_chain(4))
    assert d.levels == [[1], [6], [36], [216]]
    rep = dimension_group_report(d)
    assert set(rep.supernatural) == {str(p) for p in prime_factors(6)}
    assert rep.k0 == "Z[1/6]"
    assert dimension_group_report(telescope(d, 2)).supernatural == rep.supernatural


def test_telescope_multiplies_edges(circle):
    d = bratteli_build(circle, diagonal_chain(5))
    t = telescope(d, 2)
    assert t.levels == [[1], [36], [1296]]
    assert t.edges == [[[36]], [[36]]]
    with pytest.raises(R2DError):
        telescope(d, 0)


def test_kgraph_sft_and_graph_diagrams_agree(kg23):
    g = single_vertex_graph(2, 3)
    chain = diagonal_chain(3)
    via_graph = bratteli_from_kgraph(g, chain)
    via_sft = bratteli_build(kg23, chain)
    assert via_graph.levels == via_sft.levels == [[1], [6], [36]]
    assert via_graph.edges == via_sft.edges


def test_kgraph_edges_are_transposed_vertex_matrix_products():
    g = reducible_graph()
    d = bratteli_from_kgraph(g, [(0, 0), (1, 0), (1, 1), (2, 2)])
    m1, m2 = g.vertex_matrix(1), g.vertex_matrix(2)
    expect = [_transpose(m1), _transpose(m2), mat_mul(_transpose(m1), _transpose(m2))]
    assert d.edges == expect
    rep = dimension_group_report(bratteli_from_kgraph(g, diagonal_chain(3)))
    assert rep.stationary_matrix == [[1, 0], [0, 1]]
    assert rep.primitive is False and rep.k0 == "Z^2"


def test_chain_must_increase(led):
    with pytest.raises(R2DError) as exc:
        bratteli_build(led, [(1, 0), (0, 1)])
    assert exc.value.code == "non-comparable-n-m"


def test_inconsistent_diagram_detected():
    d = BratteliDiagram([[1], [3]], [[[2]]])
    assert d.consistency() == 0
    with pytest.raises(R2DError) as exc:
        d.check()
    assert exc.value.code == "inconsistent-diagram"


def test_dot_output(led):
    dot = bratteli_build(led, diagonal_chain(3)).to_dot()
    assert dot.startswith("digraph bratteli {")
    assert '"0_0" -> "1_0" [label="4"];' in dot
    assert dot.count("rank=same") == 3


def _brute_primitivity(m, bound):
    acc = m
    for k in range(1, bound + 1):
        if all(x > 0 for r in acc for x in r):
            return k
        acc = mat_mul(acc, m)
    return None


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=4, max_size=4))
def test_primitivity_power_matches_brute_force(entries):
    m = [entries[:2], entries[2:]]
    assert primitivity_power(m, 8) == _brute_primitivity(m, 8)


@pytest.mark.parametrize("m", [2, 6, 12, 30, 49])
def test_supernatural(m):
    assert set(supernatural_of(m)) == {str(p) for p in prime_factors(m)}


def test_non_stationary_report(led):
    d = bratteli_build(led, [(0, 0), (1, 0), (2, 2)])
    rep = dimension_group_report(d)
    assert not rep.stationary and rep.k0 == "observed growth 16 over 2 steps"


# ---------------------------------------------------------------- simplicity

def test_simplicity_circle(circle):
    assert simplicity_report(circle, 2).verdict == "evidence-for-simple"


def test_simplicity_reducible(reducible):
    rep = simplicity_report(reducible, 2)
    assert rep.verdict == "obstruction-found"
    w = next(m for m in rep.minimality if m["status"] == "obstruction")["witness"]
    assert w["reached"] < w["total"]


def test_reducible_reach_brute_force(reducible):
    # paths never leave their vertex, so grids at vertex a and b are never related
    pats = reducible.patterns((1, 1))
    assert len(pats) == 2


def test_simplicity_kgraph(kg23):
    assert simplicity_report(kg23, 1).verdict == "evidence-for-simple"


def test_simplicity_ledrappier_inconclusive(led):
    assert simplicity_report(led, 2).verdict == "inconclusive"


# ---------------------------------------------------------------- scalar product systems

@pytest.mark.parametrize("n1,n2", [(2, 3), (3, 2), (2, 2)])
def test_cuntz_core(n1, n2):
    rep = cuntz_tensor_core_check(n1, n2, 3)
    assert rep["sizes"] == [(n1 * n2) ** m for m in range(1, 4)]
    assert rep["flip_preserved"] and rep["consistent"] and not rep["degenerate"]


def test_cuntz_core_matches_kgraph(kg23):
    sizes = cuntz_tensor_core_check(2, 3, 3)["sizes"]
    d = bratteli_from_kgraph(single_vertex_graph(2, 3), diagonal_chain(4))
    assert [lv[0] for lv in d.levels[1:]] == sizes
    assert sum(1 for _ in itertools.product(range(2), range(3))) == sizes[0]
