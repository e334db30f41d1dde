"""Dynamical models: 2D subshifts of finite type, rank-2 graphs, circle coverings, full shifts.

Coordinates follow the first quadrant: a pattern of shape ``(m, n)`` has ``m``
columns (horizontal index ``i``, moved by the first shift) and ``n`` rows
(vertical index ``j``, moved by the second shift). Entries are stored row-major,
``rows[j][i] = x(i, j)``, and every enumeration is ordered lexicographically on
the row-major symbol sequence.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import R2DError, ValidationError
from .linalg import int_matmul

DEFAULT_CANDIDATE_BOUND = 2 ** 24


def candidate_bound() -> int:
    return int(os.environ.get("R2D_CANDIDATE_BOUND", DEFAULT_CANDIDATE_BOUND))


def _cell_key(c):
    return (c[1], c[0])


# ---------------------------------------------------------------- patterns

@dataclass(frozen=True)
class RectPattern:
    shape: tuple
    rows: tuple

    def __post_init__(self):
        m, n = self.shape
        if len(self.rows) != n or any(len(r) != m for r in self.rows):
            raise ValueError(f"rows do not match shape {self.shape}")

    @classmethod
    def from_rows(cls, rows):
        rows = tuple(tuple(r) for r in rows)
        m = len(rows[0]) if rows else 0
        return cls((m, len(rows)), rows)

    @classmethod
    def empty(cls, shape):
        m, n = shape
        if m and n:
            raise ValueError("only degenerate shapes have an empty pattern")
        return cls((m, n), tuple(() for _ in range(n)))

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[j][i]

    def cells(self):
        return tuple(s for r in self.rows for s in r)

    def sort_key(self):
        return (self.shape, self.cells())

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def restrict(self, shape, offset=(0, 0)):
        """Sub-rectangle ``[offset, offset+shape)``."""
        a, b = offset
        m, n = shape
        if a + m > self.shape[0] or b + n > self.shape[1] or min(a, b, m, n) < 0:
            raise R2DError("shape-underflow", f"cannot cut {shape} at {offset} from {self.shape}")
        return RectPattern((m, n), tuple(tuple(self.rows[j][a:a + m]) for j in range(b, b + n)))

    def transpose(self):
        m, n = self.shape
        return RectPattern((n, m), tuple(tuple(self.rows[j][i] for j in range(n)) for i in range(m)))

    def to_json(self):
        return {"shape": list(self.shape), "rows": [list(r) for r in self.rows]}

    def __repr__(self):
        return f"RectPattern({self.shape}, {self.rows})"


# ---------------------------------------------------------------- SFT specs

def _normalize_window(window, allowed):
    window = [tuple(c) for c in window]
    if not window:
        return (), frozenset()
    mi = min(c[0] for c in window)
    mj = min(c[1] for c in window)
    shifted = [(c[0] - mi, c[1] - mj) for c in window]
    order = sorted(range(len(shifted)), key=lambda k: _cell_key(shifted[k]))
    new_window = tuple(shifted[k] for k in order)
    new_allowed = frozenset(tuple(a[k] for k in order) for a in allowed)
    return new_window, new_allowed


@dataclass(frozen=True)
class SftSpec:
    """Alphabet ``V``, window ``F`` (anchored at the origin) and admissible assignments ``P``.

    ``extra`` holds further (window, allowed) constraint blocks; they are used to
    encode rank-2 graphs, whose edge-matching rules are not captured by one
    window under free boundary conditions.
    """

    alphabet: tuple
    window: tuple
    allowed: frozenset
    extra: tuple = ()

    @classmethod
    def make(cls, alphabet, window, allowed, extra=()):
        allowed = [tuple(a[c] for c in window) if isinstance(a, dict) else tuple(a) for a in allowed]
        w, a = _normalize_window(window, allowed)
        blocks = tuple(_normalize_window(ew, [tuple(x) for x in ea]) for ew, ea in extra)
        return cls(tuple(sorted(set(alphabet))), w, a, blocks)

    @property
    def constraints(self):
        return ((self.window, self.allowed),) + tuple(self.extra)

    @property
    def bounding_box(self):
        cells = [c for w, _ in self.constraints for c in w]
        if not cells:
            return (1, 1)
        return (max(c[0] for c in cells) + 1, max(c[1] for c in cells) + 1)

    def is_unconstrained(self):
        k = len(self.alphabet)
        return all(len(a) == k ** len(w) for w, a in self.constraints)

    def transpose(self):
        def flip(w, a):
            return _normalize_window([(c[1], c[0]) for c in w], a)

        return SftSpec(self.alphabet, *flip(self.window, self.allowed),
                       tuple(flip(w, a) for w, a in self.extra))

    def admissible(self, pattern: RectPattern) -> bool:
        """Translate-of-F predicate: every fully contained translate is allowed."""
        m, n = pattern.shape
        for w, allowed in self.constraints:
            bw = max(c[0] for c in w) + 1
            bh = max(c[1] for c in w) + 1
            for b in range(n - bh + 1):
                for a in range(m - bw + 1):
                    if tuple(pattern.rows[b + c[1]][a + c[0]] for c in w) not in allowed:
                        return False
        return all(s in self.alphabet for s in pattern.cells()) or not pattern.cells()


@dataclass
class ValidationReport:
    ok: bool = True
    errors: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def error(self, code, message):
        self.ok = False
        self.errors.append((code, message))

    def codes(self):
        return [c for c, _ in self.errors]

    def raise_for_errors(self):
        if not self.ok:
            raise ValidationError(self)
        return self

    def to_json(self):
        return {"ok": self.ok, "errors": [{"code": c, "message": m} for c, m in self.errors],
                "details": self.details}


def _translate_plan(spec: SftSpec, shape):
    """For each row-major cell index, the translates whose last cell is that cell."""
    m, n = shape
    plan = [[] for _ in range(m * n)]
    for w, allowed in spec.constraints:
        bw = max(c[0] for c in w) + 1
        bh = max(c[1] for c in w) + 1
        for b in range(n - bh + 1):
            for a in range(m - bw + 1):
                idx = tuple((b + c[1]) * m + (a + c[0]) for c in w)
                plan[max(idx)].append((idx, allowed))
    return plan


@lru_cache(maxsize=512)
def _enumerate(spec: SftSpec, shape):
    m, n = shape
    if m == 0 or n == 0:
        return (RectPattern.empty(shape),)
    size = m * n
    plan = _translate_plan(spec, shape)
    symbols = spec.alphabet
    cells = [None] * size
    out = []

    def fill(k):
        if k == size:
            out.append(RectPattern(shape, tuple(tuple(cells[j * m:(j + 1) * m]) for j in range(n))))
            return
        for s in symbols:
            cells[k] = s
            if all(tuple(cells[t] for t in idx) in allowed for idx, allowed in plan[k]):
                fill(k + 1)
        cells[k] = None

    fill(0)
    return tuple(out)


def enumerate_patterns(spec: SftSpec, shape) -> tuple:
    """All admissible patterns of ``shape``, in row-major lexicographic order.

    Cells are filled in row-major order and every translate is checked as soon as
    its last cell is placed, so each row extends only compatible prefixes.
    """
    m, n = shape
    if m < 0 or n < 0:
        raise R2DError("shape-underflow", f"negative shape {shape}")
    if spec.is_unconstrained() and len(spec.alphabet) ** (m * n) > candidate_bound():
        raise R2DError("shape-overflow",
                       f"{len(spec.alphabet)}^{m * n} unconstrained candidates exceed bound {candidate_bound()}")
    return _enumerate(spec, (m, n))


def enumerate_patterns_bruteforce(spec: SftSpec, shape) -> list:
    """Reference filter over all |V|^(mn) assignments (test oracle)."""
    m, n = shape
    out = []
    for cells in itertools.product(spec.alphabet, repeat=m * n):
        p = RectPattern(shape, tuple(tuple(cells[j * m:(j + 1) * m]) for j in range(n)))
        if spec.admissible(p):
            out.append(p)
    return out


def validate_sft(spec: SftSpec, depth=(3, 3)) -> ValidationReport:
    rep = ValidationReport()
    if not spec.alphabet:
        rep.error("empty-alphabet", "alphabet is empty")
    if not spec.window:
        rep.error("empty-window", "window is empty")
    bad = sorted({repr(s) for _, a in spec.constraints for pat in a for s in pat if s not in spec.alphabet})
    if bad:
        rep.error("symbol-out-of-alphabet", f"symbols {', '.join(bad)} not in alphabet")
    if not spec.allowed:
        rep.error("empty-language", "no admissible window assignments")
    if not rep.ok:
        return rep
    box = spec.bounding_box
    if depth[0] < box[0] or depth[1] < box[1]:
        rep.error("depth-too-small", f"depth {tuple(depth)} smaller than window box {box}")
        return rep
    pats = enumerate_patterns(spec, tuple(depth))
    rep.details["depth"] = list(depth)
    rep.details["pattern_count"] = len(pats)
    if not pats:
        rep.error("empty-language", f"no admissible patterns at depth {tuple(depth)}; X(F,P) may be empty")
        return rep
    d1, d2 = depth
    ext = {}
    for name, bigger in (("horizontal", (d1 + 1, d2)), ("vertical", (d1, d2 + 1))):
        reached = {p.restrict(tuple(depth)) for p in enumerate_patterns(spec, bigger)}
        ext[name] = len(reached) == len(pats)
    rep.details["extendable"] = ext
    rep.details["nonempty"] = True
    return rep


# ---------------------------------------------------------------- rank-2 graphs

@dataclass(frozen=True)
class Rank2Graph:
    """Two edge sets over common vertices plus the factorization bijection rho.

    Edges are ``(name, source, range)`` triples. ``rho`` maps ``(e, f)`` with
    ``s(e) = r(f)`` (horizontal then vertical) to ``(f', e')`` with
    ``s(f') = r(e')``. In a grid square, ``(e, f)`` is (bottom, right) and
    ``(f', e')`` is (left, top).
    """

    vertices: tuple
    h_edges: tuple
    v_edges: tuple
    rho: tuple

    @classmethod
    def make(cls, vertices, h_edges, v_edges, rho):
        def edges(d):
            items = d.items() if isinstance(d, dict) else [(e[0], (e[1], e[2])) for e in d]
            return tuple(sorted((name, src, rng) for name, (src, rng) in items))

        rho_items = rho.items() if isinstance(rho, dict) else rho
        return cls(tuple(vertices), edges(h_edges), edges(v_edges),
                   tuple(sorted((tuple(k), tuple(v)) for k, v in rho_items)))

    @property
    def h(self):
        return {e: (s, r) for e, s, r in self.h_edges}

    @property
    def v(self):
        return {e: (s, r) for e, s, r in self.v_edges}

    @property
    def rho_map(self):
        return dict(self.rho)

    @property
    def rho_inverse(self):
        return {v: k for k, v in self.rho}

    def source(self, e):
        return (self.h.get(e) or self.v[e])[0]

    def range(self, e):
        return (self.h.get(e) or self.v[e])[1]

    def composable_hv(self):
        h, v = self.h, self.v
        return sorted((e, f) for e in h for f in v if h[e][0] == v[f][1])

    def composable_vh(self):
        h, v = self.h, self.v
        return sorted((f, e) for f in v for e in h if v[f][0] == h[e][1])

    def vertex_matrix(self, which):
        """``M[r][s]`` = number of edges with range ``r`` and source ``s``."""
        idx = {x: k for k, x in enumerate(self.vertices)}
        edges = self.h_edges if which == 1 else self.v_edges
        mat = [[0] * len(self.vertices) for _ in self.vertices]
        for _, s, r in edges:
            mat[idx[r]][idx[s]] += 1
        return mat


def validate_rank2_graph(g: Rank2Graph) -> ValidationReport:
    rep = ValidationReport()
    verts = set(g.vertices)
    for name, s, r in g.h_edges + g.v_edges:
        if s not in verts or r not in verts:
            rep.error("endpoint-mismatch", f"edge {name} has endpoint outside the vertex set")
    if set(g.h) & set(g.v):
        rep.error("endpoint-mismatch", "horizontal and vertical edge names overlap")
    if not rep.ok:
        return rep
    m1, m2 = g.vertex_matrix(1), g.vertex_matrix(2)
    commute = int_matmul(m1, m2) == int_matmul(m2, m1)
    rep.details["vertex_matrices"] = {"M1": m1, "M2": m2}
    rep.details["commuting"] = commute
    if not commute:
        rep.error("noncommuting-vertex-matrices",
                  "M1 M2 != M2 M1, so no bijection between composable pairs can exist")
    rho = g.rho_map
    hv, vh = set(g.composable_hv()), set(g.composable_vh())
    if set(rho) != hv:
        rep.error("rho-not-bijective", "rho domain differs from the composable pairs G1*G2")
    images = list(rho.values())
    if len(set(images)) != len(images) or set(images) != vh:
        rep.error("rho-not-bijective", "rho is not a bijection onto G2*G1")
    h, v = g.h, g.v
    for (e, f), (f2, e2) in rho.items():
        if e not in h or f not in v or f2 not in v or e2 not in h:
            rep.error("endpoint-mismatch", f"rho({e},{f}) uses unknown edges")
            continue
        if not (v[f2][1] == h[e][1] and h[e2][0] == v[f][0] and v[f2][0] == h[e2][1]):
            rep.error("endpoint-mismatch", f"rho({e},{f}) = ({f2},{e2}) breaks endpoint compatibility")
    return rep


@dataclass(frozen=True)
class GridRectangle:
    """``h[j][i]`` is the horizontal edge from lattice point (i,j) to (i+1,j);
    ``v[j][i]`` the vertical edge from (i,j) to (i,j+1)."""

    shape: tuple
    h: tuple
    v: tuple

    def bottom(self):
        return self.h[0] if self.h else ()

    def top(self):
        return self.h[-1] if self.h else ()

    def right(self):
        return tuple(row[-1] for row in self.v)

    def left(self):
        return tuple(row[0] for row in self.v)

    def to_json(self):
        return {"shape": list(self.shape), "h": [list(r) for r in self.h], "v": [list(r) for r in self.v]}


def _check_path(g, path, edges, what):
    for a, b in zip(path, path[1:]):
        if a not in edges or b not in edges or edges[a][0] != edges[b][1]:
            raise R2DError("incomposable-sides", f"{what} side {path} is not a composable path")
    for a in path:
        if a not in edges:
            raise R2DError("incomposable-sides", f"unknown edge {a} in {what} side")


def complete_grid(g: Rank2Graph, h_side, v_side, *, corner_vertex=None) -> GridRectangle:
    """Unique grid with bottom row ``h_side`` and right column ``v_side``.

    Squares are filled row by row, right to left, each by one application of rho.
    """
    h_side, v_side = tuple(h_side), tuple(v_side)
    h, v = g.h, g.v
    _check_path(g, h_side, h, "horizontal")
    _check_path(g, v_side, v, "vertical")
    if h_side and v_side and h[h_side[-1]][0] != v[v_side[0]][1]:
        raise R2DError("incomposable-sides", "s(e_m) != r(f_1)")
    m, n = len(h_side), len(v_side)
    rho = g.rho_map
    hrows = [list(h_side)] + [[None] * m for _ in range(n)]
    vrows = [[None] * m + [v_side[j]] for j in range(n)]
    for j in range(n):
        for i in range(m - 1, -1, -1):
            key = (hrows[j][i], vrows[j][i + 1])
            if key not in rho:
                raise R2DError("completion-conflict", f"no square for {key}")
            vrows[j][i], hrows[j + 1][i] = rho[key]
            if i + 1 < m and h[hrows[j + 1][i]][0] != h[hrows[j + 1][i + 1]][1]:
                raise R2DError("completion-conflict", f"top row breaks at column {i}")
    return GridRectangle((m, n), tuple(map(tuple, hrows)), tuple(map(tuple, vrows)))


def complete_grid_from_top(g: Rank2Graph, left_side, top_side) -> GridRectangle:
    """Unique grid with left column ``left_side`` and top row ``top_side`` (uses rho inverse)."""
    left_side, top_side = tuple(left_side), tuple(top_side)
    h, v = g.h, g.v
    _check_path(g, top_side, h, "horizontal")
    _check_path(g, left_side, v, "vertical")
    if left_side and top_side and v[left_side[-1]][0] != h[top_side[0]][1]:
        raise R2DError("incomposable-sides", "s(f'_n) != r(e'_1)")
    m, n = len(top_side), len(left_side)
    inv = g.rho_inverse
    hrows = [[None] * m for _ in range(n)] + [list(top_side)]
    vrows = [[left_side[j]] + [None] * m for j in range(n)]
    for j in range(n - 1, -1, -1):
        for i in range(m):
            key = (vrows[j][i], hrows[j + 1][i])
            if key not in inv:
                raise R2DError("completion-conflict", f"no square for {key}")
            hrows[j][i], vrows[j][i + 1] = inv[key]
    return GridRectangle((m, n), tuple(map(tuple, hrows)), tuple(map(tuple, vrows)))


def _paths(edges, length, start_range):
    """Composable paths of ``length`` whose first edge has range ``start_range``."""
    out = [((), start_range)]
    for _ in range(length):
        out = [(p + (e,), s) for p, cur in out for e, (s, r) in sorted(edges.items()) if r == cur]
    return [p for p, _ in out]


def paths_of_shape(g: Rank2Graph, shape, range_vertex, listing=False):
    """Count (and optionally complete) the grids of ``shape`` based at ``range_vertex``."""
    if range_vertex not in g.vertices:
        raise R2DError("unknown-vertex", f"{range_vertex!r} is not a vertex")
    m, n = shape
    h, v = g.h, g.v
    pairs = []
    for hp in _paths(h, m, range_vertex):
        corner = h[hp[-1]][0] if hp else range_vertex
        for vp in _paths(v, n, corner):
            pairs.append((hp, vp))
    if not listing:
        return len(pairs)
    return len(pairs), [complete_grid(g, hp, vp) for hp, vp in pairs]


def kgraph_sft(g: Rank2Graph) -> SftSpec:
    """Square-alphabet SFT whose points are the infinite grids of ``g``.

    The symbol at cell (i,j) is the (bottom, right) pair of the unit square there.
    """
    rho = g.rho_map
    squares = g.composable_hv()
    hor = [(a, b) for a in squares for b in squares if a[1] == rho[b][0]]
    ver = [(a, c) for a in squares for c in squares if rho[a][1] == c[0]]
    return SftSpec.make(squares, [(0, 0), (1, 0)], hor, extra=[([(0, 0), (0, 1)], ver)])


def grid_to_pattern(grid: GridRectangle) -> RectPattern:
    m, n = grid.shape
    return RectPattern((m, n), tuple(tuple((grid.h[j][i], grid.v[j][i + 1]) for i in range(m))
                                     for j in range(n)))


def pattern_to_grid(g: Rank2Graph, p: RectPattern) -> GridRectangle:
    m, n = p.shape
    return complete_grid(g, tuple(p[i, 0][0] for i in range(m)), tuple(p[m - 1, j][1] for j in range(n)))


# ---------------------------------------------------------------- measures and handles

@dataclass(frozen=True)
class FiberMeasureSystem:
    """Per-direction fiber weights: ``"counting"`` (1/nu on each fiber) or
    ``"product"`` (per-symbol weights multiplied over the new column/row)."""

    modes: tuple = ("counting", "counting")
    weights: tuple = ((), ())

    @classmethod
    def counting(cls):
        return cls()

    @classmethod
    def product(cls, w1, w2=None):
        def norm(w):
            w = tuple(sorted((s, Fraction(x)) for s, x in dict(w).items()))
            if any(x <= 0 for _, x in w):
                raise R2DError("validation-error", "product weights must be positive")
            if sum(x for _, x in w) != 1:
                raise R2DError("validation-error", "product weights must sum to 1")
            return w

        return cls(("product", "product"), (norm(w1), norm(w2 if w2 is not None else w1)))

    def mode(self, direction):
        return self.modes[direction - 1]

    def symbol_weights(self, direction):
        return dict(self.weights[direction - 1])

    def to_json(self):
        from .scalars import to_json
        return {"modes": list(self.modes),
                "weights": [{str(s): to_json(x) for s, x in w} for w in self.weights]}


@dataclass(frozen=True)
class ModelHandle:
    kind: str
    payload: object
    sft: SftSpec | None = None
    degrees: tuple | None = None
    measure: FiberMeasureSystem = FiberMeasureSystem()
    name: str = ""

    @property
    def is_circle(self):
        return self.kind == "circle"

    def patterns(self, shape):
        if self.is_circle:
            raise R2DError("unsupported", "circle models have no pattern basis")
        return enumerate_patterns(self.sft, tuple(shape))

    def degree(self, direction):
        return self.degrees[direction - 1]

    def with_measure(self, measure):
        return ModelHandle(self.kind, self.payload, self.sft, self.degrees, measure, self.name)


def build_model(spec, *, kind=None, measure=None, name="", depth=(3, 3)) -> ModelHandle:
    """Validate ``spec`` and wrap it in a uniform handle.

    ``spec`` is an :class:`SftSpec`, a :class:`Rank2Graph`, a pair of circle
    degrees, or (with ``kind="fullshift"``) an alphabet or symbol-weight mapping.
    """
    if isinstance(spec, SftSpec):
        box = spec.bounding_box
        validate_sft(spec, (max(depth[0], box[0]), max(depth[1], box[1]))).raise_for_errors()
        return ModelHandle("sft", spec, spec, None, measure or FiberMeasureSystem.counting(), name)
    if isinstance(spec, Rank2Graph):
        validate_rank2_graph(spec).raise_for_errors()
        return ModelHandle("kgraph", spec, kgraph_sft(spec), None,
                           measure or FiberMeasureSystem.counting(), name)
    if kind == "fullshift":
        weights = dict(spec) if isinstance(spec, dict) else {s: Fraction(1, len(spec)) for s in spec}
        alphabet = sorted(weights)
        sft = SftSpec.make(alphabet, [(0, 0)], [(s,) for s in alphabet])
        validate_sft(sft, (1, 1)).raise_for_errors()
        return ModelHandle("fullshift", tuple(alphabet), sft, None,
                           measure or FiberMeasureSystem.product(weights), name)
    if kind in (None, "circle") and isinstance(spec, (tuple, list)) and len(spec) == 2:
        p1, p2 = spec
        rep = ValidationReport()
        if not all(isinstance(p, int) and abs(p) >= 2 for p in (p1, p2)):
            rep.error("validation-error", f"circle degrees {tuple(spec)} must be integers with |p| >= 2")
        rep.raise_for_errors()
        return ModelHandle("circle", (p1, p2), None, (p1, p2), FiberMeasureSystem.counting(), name)
    raise R2DError("validation-error", f"cannot build a model from {spec!r}")


# ---------------------------------------------------------------- bundled examples

def ledrappier_spec() -> SftSpec:
    """x(i+1,j) + x(i,j) + x(i,j+1) = 0 mod 2 on the three-cell L window."""
    window = [(0, 0), (1, 0), (0, 1)]
    allowed = [dict(zip(window, a)) for a in itertools.product((0, 1), repeat=3) if sum(a) % 2 == 0]
    return SftSpec.make((0, 1), window, allowed)


def single_vertex_graph(n1, n2, flip=True) -> Rank2Graph:
    hs = {f"e{k}": ("v", "v") for k in range(n1)}
    vs = {f"f{k}": ("v", "v") for k in range(n2)}
    rho = {(e, f): (f, e) for e in hs for f in vs}
    return Rank2Graph.make(("v",), hs, vs, rho)
