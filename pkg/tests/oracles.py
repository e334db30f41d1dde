"""Brute-force reference computations that share no code with the library."""
import itertools
from fractions import Fraction


def all_grids(shape, alphabet):
    m, n = shape
    for vals in itertools.product(alphabet, repeat=m * n):
        yield tuple(tuple(vals[j * m:(j + 1) * m]) for j in range(n))


def brute_patterns(alphabet, window, allowed, shape):
    """Row tuples of every shape-(m, n) assignment whose in-box window translates are allowed."""
    m, n = shape
    w = max(c[0] for c in window) + 1
    h = max(c[1] for c in window) + 1
    allowed = {tuple(a) for a in allowed}
    out = []
    for rows in all_grids(shape, alphabet):
        ok = all(tuple(rows[b + c[1]][a + c[0]] for c in window) in allowed
                 for a in range(m - w + 1) for b in range(n - h + 1))
        if ok:
            out.append(rows)
    return out


def ledrappier_rows(shape):
    """Ledrappier patterns straight from the parity rule (exhaustive up to 16 cells)."""
    m, n = shape
    if m * n > 16:
        return ledrappier_rows_generated(shape)
    out = []
    for rows in all_grids(shape, (0, 1)):
        if all((rows[j][i] + rows[j][i + 1] + rows[j + 1][i]) % 2 == 0
               for i in range(m - 1) for j in range(n - 1)):
            out.append(rows)
    return out


def ledrappier_rows_generated(shape):
    """Row j + 1 is forced by row j except its last cell: x(i, j+1) = x(i, j) + x(i+1, j)."""
    m, n = shape
    out = []
    for bottom in itertools.product((0, 1), repeat=m):
        for lasts in itertools.product((0, 1), repeat=n - 1):
            rows = [tuple(bottom)]
            for j in range(n - 1):
                prev = rows[-1]
                rows.append(tuple((prev[i] + prev[i + 1]) % 2 for i in range(m - 1)) + (lasts[j],))
            out.append(tuple(rows))
    return sorted(out)


def shift_rows(rows, k):
    return tuple(tuple(r[k[0]:]) for r in rows[k[1]:])


def brute_fibers(patterns_big, k):
    """image rows -> list of preimage rows."""
    fib = {}
    for rows in patterns_big:
        fib.setdefault(shift_rows(rows, k), []).append(rows)
    return fib


def brute_grids(g, shape):
    """Count rank-2 grids of ``shape`` by range vertex via exhaustive labelling.

    Labels: h[j][i] for the edge from (i, j) to (i + 1, j), v[j][i] from (i, j)
    to (i, j + 1); paths compose as s(a) = r(b) for consecutive a, b; each unit
    square satisfies rho(bottom, right) = (left, top).
    """
    m, n = shape
    hs, vs = g.h, g.v
    rho = g.rho_map
    counts = {}
    for hl in itertools.product(sorted(hs), repeat=(n + 1) * m):
        H = [hl[j * m:(j + 1) * m] for j in range(n + 1)]
        if any(hs[r[i]][0] != hs[r[i + 1]][1] for r in H for i in range(m - 1)):
            continue
        for vl in itertools.product(sorted(vs), repeat=n * (m + 1)):
            V = [vl[j * (m + 1):(j + 1) * (m + 1)] for j in range(n)]
            if any(vs[V[j][i]][0] != vs[V[j + 1][i]][1] for j in range(n - 1) for i in range(m + 1)):
                continue
            if any(rho.get((H[j][i], V[j][i + 1])) != (V[j][i], H[j + 1][i])
                   for j in range(n) for i in range(m)):
                continue
            if m:
                corner = hs[H[0][0]][1]
            elif n:
                corner = vs[V[0][0]][1]
            else:
                corner = None
            counts[corner] = counts.get(corner, 0) + 1
    return counts


def mat_mul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def dense_rank(rows):
    m = [[Fraction(x) for x in r] for r in rows]
    rank = 0
    cols = len(m[0]) if m else 0
    for c in range(cols):
        piv = next((r for r in range(rank, len(m)) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][c] != 0:
                f = m[r][c] / m[rank][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def prime_factors(m):
    out, p = set(), 2
    while p * p <= m:
        while m % p == 0:
            out.add(p)
            m //= p
        p += 1
    if m > 1:
        out.add(m)
    return out
