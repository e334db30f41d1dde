"""Exact function spaces: cylinder functions on depth patterns and Laurent polynomials.

A :class:`CylinderFunction` is a total map from the admissible patterns of one
depth to exact scalars. Functions at different depths are compared or combined
after refinement to the componentwise-larger depth, ``f'(x) = f(x|depth)``.
A :class:`LaurentFunction` is a finite exponent-to-coefficient map on the
circle, with ``conj(z) = z^-1``.
"""
from __future__ import annotations

from fractions import Fraction

from .errors import R2DError
from .scalars import root_of_unity, simplify


def _max_depth(a, b):
    return (max(a[0], b[0]), max(a[1], b[1]))


class CylinderFunction:
    __slots__ = ("model", "depth", "values")

    def __init__(self, model, depth, values):
        self.model = model
        self.depth = tuple(depth)
        basis = model.patterns(self.depth)
        if isinstance(values, dict):
            self.values = {x: values.get(x, Fraction(0)) for x in basis}
        else:
            self.values = {x: values(x) for x in basis}

    @classmethod
    def constant(cls, model, depth, c=1):
        return cls(model, depth, lambda x: Fraction(c))

    @classmethod
    def delta(cls, model, depth, pattern):
        return cls(model, depth, {pattern: Fraction(1)})

    @classmethod
    def indicator(cls, model, depth, cells):
        """Indicator of the cylinder ``{x : x(c) = cells[c]}``."""
        return cls(model, depth, lambda x: Fraction(int(all(x[c] == s for c, s in cells.items()))))

    def basis(self):
        return self.model.patterns(self.depth)

    def refine(self, depth):
        depth = tuple(depth)
        if depth == self.depth:
            return self
        if depth[0] < self.depth[0] or depth[1] < self.depth[1]:
            raise R2DError("depth-mismatch", f"cannot refine {self.depth} to {depth}")
        return CylinderFunction(self.model, depth, lambda x: self.values[x.restrict(self.depth)])

    def _common(self, other):
        if other.model != self.model:
            raise R2DError("depth-mismatch", "functions live on different models")
        d = _max_depth(self.depth, other.depth)
        return self.refine(d), other.refine(d), d

    def _combine(self, other, op):
        if not isinstance(other, CylinderFunction):
            return CylinderFunction(self.model, self.depth, {x: op(v, other) for x, v in self.values.items()})
        a, b, d = self._common(other)
        return CylinderFunction(self.model, d, {x: op(a.values[x], b.values[x]) for x in a.values})

    def __add__(self, other):
        return self._combine(other, lambda u, v: u + v)

    def __sub__(self, other):
        return self._combine(other, lambda u, v: u - v)

    def __mul__(self, other):
        return self._combine(other, lambda u, v: u * v)

    def __rmul__(self, c):
        return self._combine(c, lambda u, v: v * u)

    def __neg__(self):
        return self * -1

    def conjugate(self):
        return CylinderFunction(self.model, self.depth, {x: v.conjugate() for x, v in self.values.items()})

    def __eq__(self, other):
        if not isinstance(other, CylinderFunction):
            return NotImplemented
        a, b, _ = self._common(other)
        return all(simplify(a.values[x] - b.values[x]) == 0 for x in a.values)

    __hash__ = None

    def is_nonnegative(self):
        from .scalars import is_nonnegative
        return all(is_nonnegative(v) for v in self.values.values())

    def support(self):
        return [x for x, v in self.values.items() if v != 0]

    def to_json(self):
        from .scalars import to_json
        return {"depth": list(self.depth),
                "values": [[list(map(list, x.rows)), to_json(v)] for x, v in self.values.items() if v != 0]}

    def __repr__(self):
        nz = {x.rows: v for x, v in self.values.items() if v != 0}
        return f"CylinderFunction(depth={self.depth}, {nz})"


class LaurentFunction:
    __slots__ = ("model", "coeffs")

    def __init__(self, model, coeffs):
        self.model = model
        self.coeffs = {int(k): v for k, v in dict(coeffs).items() if v != 0}

    @classmethod
    def monomial(cls, model, k, c=1):
        return cls(model, {k: Fraction(c)})

    @classmethod
    def constant(cls, model, c=1):
        return cls(model, {0: Fraction(c)})

    def degree_span(self):
        return max((abs(k) for k in self.coeffs), default=0)

    def __add__(self, other):
        if not isinstance(other, LaurentFunction):
            other = LaurentFunction.constant(self.model, other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return LaurentFunction(self.model, out)

    def __sub__(self, other):
        return self + other * -1

    def __mul__(self, other):
        if not isinstance(other, LaurentFunction):
            return LaurentFunction(self.model, {k: v * other for k, v in self.coeffs.items()})
        out = {}
        for a, u in self.coeffs.items():
            for b, v in other.coeffs.items():
                out[a + b] = out.get(a + b, 0) + u * v
        return LaurentFunction(self.model, out)

    def __rmul__(self, c):
        return self * c

    def __neg__(self):
        return self * -1

    def conjugate(self):
        return LaurentFunction(self.model, {-k: v.conjugate() for k, v in self.coeffs.items()})

    def rotate(self, order, power):
        """``x -> x * w^power`` with ``w = exp(2 pi i / order)``."""
        return LaurentFunction(self.model, {k: simplify(v * root_of_unity(order, power * k))
                                            for k, v in self.coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, LaurentFunction):
            return NotImplemented
        return {k: simplify(v) for k, v in (self - other).coeffs.items() if simplify(v) != 0} == {}

    __hash__ = None

    def to_json(self):
        from .scalars import to_json
        return {"coeffs": {str(k): to_json(v) for k, v in sorted(self.coeffs.items())}}

    def __repr__(self):
        return f"LaurentFunction({dict(sorted(self.coeffs.items()))})"


def constant_like(f, c=1):
    if isinstance(f, LaurentFunction):
        return LaurentFunction.constant(f.model, c)
    return CylinderFunction.constant(f.model, (0, 0), c)


class OperatorMatrix:
    """Exact matrix between two ordered bases (patterns or Laurent exponents).

    ``tag`` is one of expectation, transfer, endomorphism, leftAction, thetaKernel.
    """

    __slots__ = ("domain", "codomain", "matrix", "tag")

    def __init__(self, domain, codomain, matrix, tag=""):
        if matrix.shape != (len(codomain), len(domain)):
            raise ValueError(f"matrix shape {matrix.shape} does not match bases")
        self.domain = tuple(domain)
        self.codomain = tuple(codomain)
        self.matrix = matrix
        self.tag = tag

    @classmethod
    def from_columns(cls, domain, codomain, column, tag=""):
        """Build from ``column(b) -> {codomain_key: value}`` for each domain key ``b``."""
        from .linalg import SparseMatrix
        index = {c: i for i, c in enumerate(codomain)}
        rows = [{} for _ in codomain]
        for j, b in enumerate(domain):
            for c, v in column(b).items():
                if v != 0:
                    if c not in index:
                        raise R2DError("depth-mismatch", f"image leaves the codomain basis: {c!r}")
                    rows[index[c]][j] = v
        return cls(domain, codomain, SparseMatrix(len(codomain), len(domain), rows), tag)

    def __matmul__(self, other):
        if self.domain != other.codomain:
            raise R2DError("depth-mismatch", "bases do not chain")
        return OperatorMatrix(other.domain, self.codomain, self.matrix @ other.matrix, self.tag)

    def __eq__(self, other):
        return (isinstance(other, OperatorMatrix) and self.domain == other.domain
                and self.codomain == other.codomain and self.matrix == other.matrix)

    __hash__ = None

    def entry(self, row_key, col_key):
        return self.matrix[self.codomain.index(row_key), self.domain.index(col_key)]

    def is_idempotent(self):
        return self.domain == self.codomain and self.matrix @ self.matrix == self.matrix

    def is_positive(self):
        return all(simplify(v) >= 0 for r in self.matrix.rows for v in r.values()
                   if not hasattr(simplify(v), "im"))

    def is_unital(self):
        return all(sum(r.values(), Fraction(0)) == 1 for r in self.matrix.rows)

    def max_deviation(self, other):
        dev = self.matrix.max_deviation(other.matrix)
        if dev is None:
            return None
        mag, (i, j) = dev
        return {"magnitude": str(mag), "row": self.codomain[i], "col": self.domain[j]}

    def __repr__(self):
        return f"OperatorMatrix({self.tag}, {len(self.codomain)}x{len(self.domain)}, nnz={self.matrix.nnz()})"
