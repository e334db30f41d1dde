"""Bratteli diagrams of the AF cores, their dimension-group fingerprints and simplicity evidence."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from .errors import R2DError
from .groupoid import rn_algebra_description, rn_inclusion_multiplicity
from .linalg import int_identity, int_matmul, int_matpow, int_transpose
from .models import ModelHandle, Rank2Graph, paths_of_shape, validate_rank2_graph
from .shifts import arc_count, orbit_reach, periodicity_diagnostic

PRIMITIVITY_BOUND = 32


def _leq(a, b):
    return a[0] <= b[0] and a[1] <= b[1]


def diagonal_chain(length, start=0):
    return [(t, t) for t in range(start, start + length)]


def _check_chain(chain):
    chain = [tuple(c) for c in chain]
    for a, b in zip(chain, chain[1:]):
        if not _leq(a, b):
            raise R2DError("non-comparable-n-m", f"chain is not increasing at {a} -> {b}")
    return chain


@dataclass
class BratteliDiagram:
    """``levels[t]`` lists block sizes; ``edges[t]`` has rows indexed by level t and
    columns by level t + 1, so sizes[t + 1] = edges[t]^T sizes[t]."""

    levels: list
    edges: list
    labels: list = field(default_factory=list)

    def consistency(self):
        """First level at which the unital size relation fails, or None."""
        for t, e in enumerate(self.edges):
            lo, hi = self.levels[t], self.levels[t + 1]
            if len(e) != len(lo) or any(len(r) != len(hi) for r in e):
                return t
            pushed = [sum(e[i][j] * lo[i] for i in range(len(lo))) for j in range(len(hi))]
            if pushed != list(hi):
                return t
        return None

    def check(self):
        t = self.consistency()
        if t is not None:
            raise R2DError("inconsistent-diagram", f"sizes do not propagate across level {t}")
        return self

    def to_json(self):
        return {"levels": [list(lv) for lv in self.levels], "edges": [[list(r) for r in e] for e in self.edges],
                "labels": [list(x) for x in self.labels]}

    def to_dot(self, name="bratteli"):
        """Graphviz text: one ``rank=same`` subgraph per level, edges labelled by multiplicity."""
        lines = [f"digraph {name} {{", "  rankdir=TB;"]
        for t, lv in enumerate(self.levels):
            nodes = " ".join(f'"{t}_{k}" [label="{size}"];' for k, size in enumerate(lv))
            lines.append(f"  {{ rank=same; {nodes} }}")
        for t, e in enumerate(self.edges):
            for i, row in enumerate(e):
                for j, mult in enumerate(row):
                    if mult:
                        lines.append(f'  "{t}_{i}" -> "{t + 1}_{j}" [label="{mult}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def bratteli_build(model: ModelHandle, chain, depth=None) -> BratteliDiagram:
    """Diagram of C*(R_n(0)) -> C*(R_n(1)) -> ... with blocks collapsed by size."""
    chain = _check_chain(chain)
    if depth is None and not model.is_circle:
        top = chain[-1]
        depth = (top[0] + 1, top[1] + 1)
    levels, edges = [], []
    for n in chain:
        desc = rn_algebra_description(model, n, depth)
        levels.append(sorted(set(desc.block_sizes)))
    for a, b in zip(chain, chain[1:]):
        inc = rn_inclusion_multiplicity(model, a, b, depth)
        edges.append(int_transpose(inc["matrix"]))
    return BratteliDiagram(levels, edges, [list(n) for n in chain]).check()


def bratteli_from_kgraph(g: Rank2Graph, chain) -> BratteliDiagram:
    """Vertex-indexed diagram; the step n -> n + (a, b) has edges (M1^T)^a (M2^T)^b and
    level sizes count paths of each shape by range vertex."""
    validate_rank2_graph(g).raise_for_errors()
    chain = _check_chain(chain)
    m1, m2 = g.vertex_matrix(1), g.vertex_matrix(2)
    t1, t2 = int_transpose(m1), int_transpose(m2)
    levels = [[paths_of_shape(g, n, v) for v in g.vertices] for n in chain]
    edges = []
    for a, b in zip(chain, chain[1:]):
        da, db = b[0] - a[0], b[1] - a[1]
        edges.append(int_matmul(int_matpow(t1, da), int_matpow(t2, db)))
    return BratteliDiagram(levels, edges, [list(n) for n in chain]).check()


def telescope(d: BratteliDiagram, step=2) -> BratteliDiagram:
    """Keep every ``step``-th level, multiplying the intermediate edge matrices."""
    if step < 1:
        raise R2DError("validation-error", "telescoping step must be positive")
    keep = list(range(0, len(d.levels), step))
    edges = []
    for a, b in zip(keep, keep[1:]):
        acc = int_identity(len(d.levels[a]))
        for t in range(a, b):
            acc = int_matmul(acc, d.edges[t])
        edges.append(acc)
    labels = [d.labels[k] for k in keep] if d.labels else []
    return BratteliDiagram([d.levels[k] for k in keep], edges, labels).check()


# ---------------------------------------------------------------- dimension group

@dataclass
class DimensionGroupReport:
    stationary: bool
    stationary_matrix: list | None
    supernatural: dict | None
    perron: dict | None
    primitive: bool | None
    primitivity_power: int | None
    k0: str

    def to_json(self):
        return {"stationary": self.stationary, "stationary_matrix": self.stationary_matrix,
                "supernatural": self.supernatural, "perron": self.perron, "primitive": self.primitive,
                "primitivity_power": self.primitivity_power, "k0": self.k0}


def primitivity_power(mat, bound=PRIMITIVITY_BOUND):
    """Smallest k <= bound with mat^k strictly positive, or None."""
    acc = [list(r) for r in mat]
    for k in range(1, bound + 1):
        if all(x > 0 for r in acc for x in r):
            return k
        acc = int_matmul(acc, mat)
    return None


def supernatural_of(m: int) -> dict:
    """m^infinity as a prime -> "inf" map."""
    return {str(p): "inf" for p in sorted(sympy.factorint(m))}


def dimension_group_report(d: BratteliDiagram) -> DimensionGroupReport:
    d.check()
    mats = d.edges
    stationary = bool(mats) and all(m == mats[0] for m in mats)
    single = all(len(lv) == 1 for lv in d.levels)
    if not stationary:
        k0 = "non-stationary"
        if single and mats:
            mult = 1
            for m in mats:
                mult *= m[0][0]
            k0 = f"observed growth {mult} over {len(mats)} steps"
        return DimensionGroupReport(False, None, None, None, None, None, k0)
    a = mats[0]
    n = len(a)
    x = sympy.Symbol("x")
    poly = sympy.Matrix(a).charpoly(x)
    perron = {"charpoly": [int(c) for c in poly.all_coeffs()], "charpoly_text": str(poly.as_expr())}
    power = primitivity_power(a)
    if single:
        m = a[0][0]
        if m == 1:
            return DimensionGroupReport(True, a, None, perron, True, 1, "Z")
        radical = 1
        for prime in sympy.factorint(m):
            radical *= prime
        return DimensionGroupReport(True, a, supernatural_of(m), perron, True, 1, f"Z[1/{radical}]")
    det = sympy.Matrix(a).det()
    k0 = f"Z^{n}" if det in (1, -1) else "stationary inductive limit"
    return DimensionGroupReport(True, a, None, perron, power is not None, power, k0)


# ---------------------------------------------------------------- simplicity

@dataclass
class SimplicityReport:
    minimality: list
    essential_freeness: list
    verdict: str

    def to_json(self):
        return {"minimality": self.minimality, "essential_freeness": self.essential_freeness,
                "verdict": self.verdict}


PERIOD_PAIRS = (((1, 0), (0, 0)), ((0, 1), (0, 0)), ((1, 0), (0, 1)))


def _minimality(model, depth):
    """Grow kBound along the diagonal for every seed. A seed whose reach is a
    proper subset that stays unchanged from kBound (depth, depth) to
    (depth + 1, depth + 1) is reported as an obstruction."""
    if model.is_circle:
        total = arc_count(model, depth)
        seeds = [Fraction(j, total) for j in range(total)]
        universe = set(range(total))
        dd, bound = depth, depth
    else:
        dd = (depth, depth)
        universe = set(model.patterns(dd))
        seeds = sorted(universe, key=lambda p: p.sort_key())
        total, bound = len(universe), depth
    witness, status = None, "positive"
    for seed in seeds:
        history = []
        for k in range(bound + 2):
            history.append(set(orbit_reach(model, seed, (k, k), dd)))
            if history[-1] == universe:
                break
        if history[-1] == universe:
            continue
        entry = {"seed": seed.to_json() if hasattr(seed, "to_json") else str(seed),
                 "reached": len(history[-1]), "total": total, "k_bound": [bound + 1, bound + 1]}
        if history[-1] == history[-2]:
            witness, status = entry, "obstruction"
            break
        if witness is None:
            witness, status = entry, "inconclusive"
    out = {"depth": dd if isinstance(dd, int) else list(dd), "status": status, "seeds": len(seeds)}
    if witness:
        out["witness"] = witness
    return out


def simplicity_report(model: ModelHandle, depth_budget=2) -> SimplicityReport:
    """Depth-stamped minimality and essential-freeness evidence, never a theorem."""
    minimality, freeness = [], []
    for t in range(1, depth_budget + 1):
        minimality.append(_minimality(model, t))
        for p, q in PERIOD_PAIRS:
            rep = periodicity_diagnostic(model, p, q, t if model.is_circle else (t, t))
            freeness.append({"depth": t, "p": list(p), "q": list(q),
                             "evidence_positive": rep["evidence_positive"],
                             "count": rep.get("count", len(rep.get("periodic_points") or []))})
    if any(m["status"] == "obstruction" for m in minimality):
        verdict = "obstruction-found"
    elif all(m["status"] == "positive" for m in minimality) and all(f["evidence_positive"] for f in freeness):
        verdict = "evidence-for-simple"
    else:
        verdict = "inconclusive"
    return SimplicityReport(minimality, freeness, verdict)


def cuntz_tensor_core_check(n1: int, n2: int, levels: int = 3) -> dict:
    """Trivial-flip product system over the scalars with E_i = C^{n_i}.

    The level-(m, m) algebra is K(E_(m,m)) with E_(m,m) spanned by words of m
    letters from each alphabet; the flip keeps inner products, checked on the
    Gram matrix of E_1 (x) E_2 against E_2 (x) E_1."""
    from .bimodule import scalar_flip_check
    if n1 < 1 or n2 < 1:
        raise R2DError("validation-error", "alphabet sizes must be positive")
    sizes = []
    for m in range(1, levels + 1):
        words = (n1 ** m) * (n2 ** m)
        sizes.append(words)
    flip = scalar_flip_check(n1, n2)
    consistent = all(b == a * n1 * n2 for a, b in zip(sizes, sizes[1:]))
    return {"n1": n1, "n2": n2, "sizes": sizes, "flip_preserved": flip["preserved"],
            "consistent": consistent, "degenerate": n1 == 1 or n2 == 1}
