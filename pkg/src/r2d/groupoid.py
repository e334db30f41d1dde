"""Finite-depth shadows of the relations R_n and the groupoid Gamma(sigma_1, sigma_2).

Depth-``D`` patterns ``x, y`` are R_n-related when ``sigma^n x = sigma^n y`` as
depth ``D - n`` patterns. Elements of Gamma are triples ``(x, p - q, y)`` with
``sigma^p x = sigma^q y`` on the overlap that survives both shifts.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import R2DError
from .functions import LaurentFunction, OperatorMatrix
from .linalg import SparseMatrix
from .models import ModelHandle, RectPattern
from .scalars import simplify
from .shifts import fiber_weights, shift_pattern


def _leq(a, b):
    return a[0] <= b[0] and a[1] <= b[1]


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


# ---------------------------------------------------------------- groupoid elements

@dataclass(frozen=True)
class GroupoidElementApprox:
    p: tuple
    q: tuple
    x: RectPattern
    y: RectPattern

    @property
    def degree(self):
        return (self.p[0] - self.q[0], self.p[1] - self.q[1])

    def to_json(self):
        return {"p": list(self.p), "q": list(self.q), "degree": list(self.degree),
                "x": self.x.to_json(), "y": self.y.to_json()}


def _overlap_ok(p, q, x, y):
    a, b = x.shape[0] - max(p[0], q[0]), x.shape[1] - max(p[1], q[1])
    if a <= 0 or b <= 0:
        return True
    return shift_pattern(x, p).restrict((a, b)) == shift_pattern(y, q).restrict((a, b))


def make_element(p, q, x, y, *, strict=True) -> GroupoidElementApprox:
    p, q = tuple(p), tuple(q)
    if x.shape != y.shape:
        raise R2DError("incompatible-pair", f"x and y have shapes {x.shape} and {y.shape}")
    if strict and not _leq((max(p[0], q[0]), max(p[1], q[1])), x.shape):
        raise R2DError("incompatible-pair", f"depth {x.shape} below max(p, q)")
    if not _overlap_ok(p, q, x, y):
        raise R2DError("incompatible-pair", "sigma^p x and sigma^q y differ on the overlap")
    return GroupoidElementApprox(p, q, x, y)


def compose_elements(g: GroupoidElementApprox, h: GroupoidElementApprox) -> GroupoidElementApprox:
    """(x, k, y)(y, l, z) = (x, k + l, z).

    The overlap check is not repeated: at finite depth the agreement of the
    composite is only known on a smaller box than the one ``(p, q)`` names.
    """
    if g.y != h.x:
        raise R2DError("non-composable", "source of the first element is not the range of the second")
    p = (g.p[0] + h.p[0], g.p[1] + h.p[1])
    q = (g.q[0] + h.q[0], g.q[1] + h.q[1])
    return GroupoidElementApprox(p, q, g.x, h.y)


def invert_element(g: GroupoidElementApprox) -> GroupoidElementApprox:
    return GroupoidElementApprox(g.q, g.p, g.y, g.x)


def unit_element(x: RectPattern) -> GroupoidElementApprox:
    return GroupoidElementApprox((0, 0), (0, 0), x, x)


def same_arrow(g, h):
    """Elements are equal as arrows when their range, source and degree agree."""
    return g.x == h.x and g.y == h.y and g.degree == h.degree


def gamma_convolve(f: dict, g: dict) -> dict:
    """Convolution of finitely supported functions on arrows (counting measure),
    keyed by ``(x, degree, y)``."""
    out = defaultdict(lambda: Fraction(0))
    for (x1, d1, y1), a in f.items():
        for (x2, d2, y2), b in g.items():
            if y1 == x2:
                key = (x1, (d1[0] + d2[0], d1[1] + d2[1]), y2)
                out[key] += a * b
    return {k: v for k, v in out.items() if v != 0}


def gauge_action(z, f: dict) -> dict:
    """``(z . f)(x, n, y) = z^n f(x, n, y)`` for a pair ``z`` of exact unit scalars."""
    return {k: simplify(v * (z[0] ** k[1][0]) * (z[1] ** k[1][1])) for k, v in f.items()}


# ---------------------------------------------------------------- R_n classes

def _check_depth(n, depth):
    if not _leq((n[0] + 1, n[1] + 1), depth):
        raise R2DError("depth-too-small", f"depth {tuple(depth)} must be at least n + 1 = {n[0] + 1, n[1] + 1}")


@lru_cache(maxsize=256)
def _classes(model: ModelHandle, n, depth):
    groups = defaultdict(list)
    for x in model.patterns(depth):
        groups[shift_pattern(x, n)].append(x)
    return tuple(sorted((tuple(c) for c in groups.values()), key=lambda c: c[0].sort_key()))


def rn_classes(model: ModelHandle, n, depth):
    """Partition of the depth patterns by their sigma^n image, ordered by least member."""
    n, depth = tuple(n), tuple(depth)
    _check_depth(n, depth)
    return [list(c) for c in _classes(model, n, depth)]


@lru_cache(maxsize=256)
def rn_weights(model: ModelHandle, n, depth, measure=None) -> dict:
    """Weight of each depth pattern inside its R_n class, as the product of the
    one-step fiber weights along sigma_1^n1 followed by sigma_2^n2."""
    n, depth = tuple(n), tuple(depth)
    out = {}
    for y in model.patterns(depth):
        w = Fraction(1)
        cur, d = y, depth
        for direction, steps in ((1, n[0]), (2, n[1])):
            e = (1, 0) if direction == 1 else (0, 1)
            for _ in range(steps):
                w *= fiber_weights(model, direction, d, measure)[cur]
                cur = shift_pattern(cur, e)
                d = _sub(d, e)
        out[y] = w
    return out


def circle_block_size(model: ModelHandle, n) -> int:
    return abs(model.degrees[0] ** n[0] * model.degrees[1] ** n[1])


@dataclass
class RnAlgebraDescription:
    n: tuple
    depth: tuple
    base: str
    block_sizes: list
    classes: list = field(default_factory=list)
    discrete: bool = True

    @property
    def blocks(self):
        """``{block size: multiplicity}`` of the multimatrix algebra."""
        return dict(sorted(Counter(self.block_sizes).items()))

    def to_json(self):
        return {
            "n": list(self.n), "depth": list(self.depth) if self.depth else None,
            "base": self.base, "discrete": self.discrete,
            "blocks": {str(k): v for k, v in self.blocks.items()},
            "summary": self.summary(),
        }

    def summary(self):
        if self.base == "circle":
            return f"C(T) (x) M_{self.block_sizes[0]}"
        if not self.discrete:
            return "non-discrete classes (measure-weighted cylinder blocks)"
        return " + ".join(f"{c}xM_{k}" if c > 1 else f"M_{k}" for k, c in self.blocks.items())


def rn_algebra_description(model: ModelHandle, n, depth=None) -> RnAlgebraDescription:
    n = tuple(n)
    if model.is_circle:
        return RnAlgebraDescription(n, depth, "circle", [circle_block_size(model, n)])
    depth = tuple(depth) if depth is not None else (n[0] + 1, n[1] + 1)
    classes = rn_classes(model, n, depth)
    return RnAlgebraDescription(n, depth, "finite", [len(c) for c in classes], classes,
                                discrete=model.kind != "fullshift")


def rn_inclusion_multiplicity(model: ModelHandle, n, m, depth=None, collapse=True) -> dict:
    """Multiplicity matrix of C*(R_n) -> C*(R_m), rows indexed by R_m blocks.

    With ``collapse`` (default) blocks are identified by size, so entry (B, A)
    counts the size-A classes inside any size-B class; this requires every
    size-B class to have the same profile. Without it, rows and columns are
    individual classes and entries are 0/1.
    """
    n, m = tuple(n), tuple(m)
    if not _leq(n, m):
        raise R2DError("non-comparable-n-m", f"{n} is not <= {m}")
    if model.is_circle:
        a, b = circle_block_size(model, n), circle_block_size(model, m)
        return {"rows": [b], "cols": [a], "matrix": [[b // a]]}
    depth = tuple(depth) if depth is not None else (m[0] + 1, m[1] + 1)
    small, big = rn_classes(model, n, depth), rn_classes(model, m, depth)
    owner = {x: k for k, c in enumerate(big) for x in c}
    if not collapse:
        mat = [[0] * len(small) for _ in big]
        for a, c in enumerate(small):
            mat[owner[c[0]]][a] = 1
        return {"rows": [len(c) for c in big], "cols": [len(c) for c in small], "matrix": mat}
    profiles = defaultdict(Counter)
    for c in small:
        profiles[owner[c[0]]][len(c)] += 1
    row_sizes = sorted({len(c) for c in big})
    col_sizes = sorted({len(c) for c in small})
    by_size = {}
    for k, c in enumerate(big):
        prof = profiles[k]
        if by_size.setdefault(len(c), prof) != prof:
            raise R2DError("non-uniform-inclusion",
                           f"classes of size {len(c)} contain different block profiles; use collapse=False")
    mat = [[by_size[r].get(s, 0) for s in col_sizes] for r in row_sizes]
    return {"rows": row_sizes, "cols": col_sizes, "matrix": mat}


# ---------------------------------------------------------------- kernels on R_n

@dataclass
class KernelFunction:
    """Kernel on R_n pairs of depth patterns; ``values[(x, y)]`` with sigma^n x = sigma^n y."""

    model: ModelHandle
    n: tuple
    depth: tuple
    values: dict
    measure: object = None

    def __post_init__(self):
        self.n, self.depth = tuple(self.n), tuple(self.depth)
        self.values = {k: v for k, v in self.values.items() if v != 0}
        for x, y in self.values:
            if shift_pattern(x, self.n) != shift_pattern(y, self.n):
                raise R2DError("support-violation", f"kernel value off R_n at {(x, y)}")

    def __eq__(self, other):
        if not isinstance(other, KernelFunction):
            return NotImplemented
        keys = set(self.values) | set(other.values)
        return (self.n, self.depth) == (other.n, other.depth) and all(
            simplify(self.values.get(k, 0) - other.values.get(k, 0)) == 0 for k in keys)

    __hash__ = None

    def weights(self):
        return rn_weights(self.model, self.n, self.depth, self.measure)

    def pairs(self):
        return [(x, y) for c in _classes(self.model, self.n, self.depth) for x in c for y in c]


def kernel_to_block_matrix(k: KernelFunction) -> OperatorMatrix:
    """Right-weighted matrix ``B[x, y] = k(x, y) w_n(y)``: block diagonal over the
    R_n classes, and kernel convolution becomes plain matrix multiplication."""
    basis = k.model.patterns(k.depth)
    index = {x: i for i, x in enumerate(basis)}
    w = k.weights()
    rows = [{} for _ in basis]
    for (x, y), v in k.values.items():
        rows[index[x]][index[y]] = v * w[y]
    return OperatorMatrix(basis, basis, SparseMatrix(len(basis), len(basis), rows), "thetaKernel")


def block_matrix_to_kernel(b: OperatorMatrix, model, n, depth, measure=None) -> KernelFunction:
    w = rn_weights(model, tuple(n), tuple(depth), measure)
    vals = {}
    for i, row in enumerate(b.matrix.rows):
        for j, v in row.items():
            y = b.domain[j]
            vals[(b.codomain[i], y)] = v / w[y]
    return KernelFunction(model, n, depth, vals, measure)


@dataclass
class CircleKernel:
    """Kernel on R_n for a circle model: ``comps[j](x) = k(x, x w^j)``, ``w = exp(2 pi i/N)``.

    Only ``N`` dividing 4 keeps every value Gaussian rational.
    """

    model: ModelHandle
    n: tuple
    comps: tuple

    def __post_init__(self):
        self.n = tuple(self.n)
        order = circle_block_size(self.model, self.n)
        if 4 % order:
            raise R2DError("unsupported", f"R_n classes of size {order} need non-Gaussian roots of unity")
        if len(self.comps) != order:
            raise R2DError("shape-mismatch", f"expected {order} components")
        self.comps = tuple(self.comps)

    @property
    def order(self):
        return len(self.comps)

    def __eq__(self, other):
        return isinstance(other, CircleKernel) and self.n == other.n and all(
            a == b for a, b in zip(self.comps, other.comps))

    __hash__ = None


def circle_kernel_to_block_matrix(k: CircleKernel):
    """``M(x)[i][j] = k(x w^i, x w^j)``: the C(T) (x) M_N picture."""
    order = k.order
    return [[k.comps[(j - i) % order].rotate(order, i) for j in range(order)] for i in range(order)]


def circle_block_product(a, b):
    order = len(a)
    out = []
    for i in range(order):
        row = []
        for j in range(order):
            acc = LaurentFunction(a[0][0].model, {})
            for l in range(order):
                acc = acc + a[i][l] * b[l][j]
            row.append(acc * Fraction(1, order))
        out.append(row)
    return out


def circle_block_matrix_to_kernel(mat, model, n) -> CircleKernel:
    return CircleKernel(model, n, tuple(mat[0]))
