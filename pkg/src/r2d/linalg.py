"""Small exact sparse-matrix kernel (rows as dicts) plus integer-matrix helpers."""
from __future__ import annotations

from fractions import Fraction


class SparseMatrix:
    """Exact matrix stored row-wise as ``{col: value}`` dicts with no explicit zeros."""

    __slots__ = ("nrows", "ncols", "rows")

    def __init__(self, nrows, ncols, rows=None):
        self.nrows = nrows
        self.ncols = ncols
        if rows is None:
            rows = [{} for _ in range(nrows)]
        self.rows = [{c: v for c, v in r.items() if v != 0} for r in rows]

    @classmethod
    def identity(cls, n):
        return cls(n, n, [{i: Fraction(1)} for i in range(n)])

    @classmethod
    def from_dense(cls, dense):
        ncols = len(dense[0]) if dense else 0
        return cls(len(dense), ncols, [{j: v for j, v in enumerate(row)} for row in dense])

    @classmethod
    def diagonal(cls, values):
        return cls(len(values), len(values), [{i: v} for i, v in enumerate(values)])

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i].get(j, 0)

    def to_dense(self):
        return [[r.get(j, 0) for j in range(self.ncols)] for r in self.rows]

    def __matmul__(self, other):
        if isinstance(other, SparseMatrix):
            if self.ncols != other.nrows:
                raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
            out = []
            for row in self.rows:
                acc = {}
                for k, a in row.items():
                    for j, b in other.rows[k].items():
                        acc[j] = acc.get(j, 0) + a * b
                out.append(acc)
            return SparseMatrix(self.nrows, other.ncols, out)
        # vector
        if len(other) != self.ncols:
            raise ValueError("vector length mismatch")
        return [sum((v * other[j] for j, v in row.items()), Fraction(0)) for row in self.rows]

    def __add__(self, other):
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        out = []
        for r1, r2 in zip(self.rows, other.rows):
            acc = dict(r1)
            for j, v in r2.items():
                acc[j] = acc.get(j, 0) + v
            out.append(acc)
        return SparseMatrix(self.nrows, self.ncols, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return SparseMatrix(self.nrows, self.ncols, [{j: c * v for j, v in r.items()} for r in self.rows])

    def transpose(self):
        out = [{} for _ in range(self.ncols)]
        for i, row in enumerate(self.rows):
            for j, v in row.items():
                out[j][i] = v
        return SparseMatrix(self.ncols, self.nrows, out)

    def __eq__(self, other):
        return isinstance(other, SparseMatrix) and self.shape == other.shape and self.rows == other.rows

    def max_deviation(self, other):
        """Largest |entry| of ``self - other`` with its position (or None when equal)."""
        diff = self - other
        worst = None
        for i, row in enumerate(diff.rows):
            for j, v in row.items():
                mag = abs(v) if not hasattr(v, "im") else abs(v.re) + abs(v.im)
                if worst is None or mag > worst[0]:
                    worst = (mag, (i, j))
        return worst

    def is_identity(self):
        return self.nrows == self.ncols and all(r == {i: 1} for i, r in enumerate(self.rows))

    def nnz(self):
        return sum(len(r) for r in self.rows)

    def rank(self):
        return rank(self.to_dense())

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz()})"


def rank(dense) -> int:
    """Exact rank by fraction-free-ish Gaussian elimination over the rationals."""
    m = [[Fraction(x) if not hasattr(x, "im") else x for x in row] for row in dense]
    if not m:
        return 0
    nrows, ncols = len(m), len(m[0])
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        pv = m[r][c]
        for i in range(r + 1, nrows):
            if m[i][c] != 0:
                f = m[i][c] / pv
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        r += 1
        if r == nrows:
            break
    return r


# ---------------------------------------------------------------- integer matrices

def int_matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def int_identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def int_matpow(a, k):
    out = int_identity(len(a))
    base = [list(r) for r in a]
    while k:
        if k & 1:
            out = int_matmul(out, base)
        base = int_matmul(base, base)
        k >>= 1
    return out


def int_transpose(a):
    return [list(r) for r in zip(*a)] if a else []
