"""Commuting shift actions on finite-depth data.

Covers fibers with weights, local-injectivity certificates, surjectivity and
openness at depth, orbit reach and periodicity diagnostics. Symbolic models
work on rectangular patterns. Circle models work on rational angles in Q/Z,
where ``sigma_i(x) = p_i * x mod 1``.
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import R2DError
from .models import (FiberMeasureSystem, ModelHandle, RectPattern, SftSpec, _translate_plan,
                     enumerate_patterns)

__all__ = [
    "FiberMeasureSystem", "LocalInjectivityVerdict", "apply_shift", "shift_pattern", "unit",
    "fiber_decomposition", "fiber_map", "fiber_weight", "check_local_injectivity",
    "scan_local_injectivity", "revalidate_witness", "check_open_surjective", "orbit_reach",
    "periodicity_diagnostic",
]


def unit(direction):
    if direction not in (1, 2):
        raise R2DError("bad-direction", f"direction must be 1 or 2, got {direction!r}")
    return (1, 0) if direction == 1 else (0, 1)


def _add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def shift_pattern(pattern: RectPattern, k) -> RectPattern:
    """``x(. + k)`` restricted to what remains; may produce a degenerate shape."""
    m, n = pattern.shape
    return pattern.restrict((m - k[0], n - k[1]), tuple(k))


def circle_map(model: ModelHandle, k, x):
    factor = model.degrees[0] ** k[0] * model.degrees[1] ** k[1]
    return (Fraction(x) * factor) % 1


def apply_shift(model: ModelHandle, k, pattern):
    """sigma^k on a pattern (shape must exceed ``k`` componentwise) or a circle point."""
    k = tuple(k)
    if model.is_circle:
        return circle_map(model, k, pattern)
    m, n = pattern.shape
    if m <= k[0] or n <= k[1]:
        raise R2DError("shape-underflow", f"pattern shape {pattern.shape} too small for shift {k}")
    return shift_pattern(pattern, k)


# ---------------------------------------------------------------- fibers

@lru_cache(maxsize=256)
def fiber_map(model: ModelHandle, direction: int, depth) -> dict:
    """Map each depth-(depth - e_dir) image to its sorted preimages at ``depth``."""
    e = unit(direction)
    groups = defaultdict(list)
    for y in model.patterns(depth):
        groups[shift_pattern(y, e)].append(y)
    return dict(groups)


def _new_line(y: RectPattern, direction):
    m, n = y.shape
    if direction == 1:
        return [y[0, j] for j in range(n)]
    return [y[i, 0] for i in range(m)]


def fiber_weight(model: ModelHandle, direction, y, fiber, measure=None) -> Fraction:
    """Weight of ``y`` inside ``fiber``; weights over any fiber sum to exactly 1."""
    measure = measure or model.measure
    if model.is_circle or measure.mode(direction) == "counting":
        return Fraction(1, len(fiber))
    w = measure.symbol_weights(direction)

    def raw(z):
        out = Fraction(1)
        for s in _new_line(z, direction):
            out *= w[s]
        return out

    total = sum(raw(z) for z in fiber)
    return raw(y) / total


@lru_cache(maxsize=256)
def fiber_weights(model: ModelHandle, direction: int, depth, measure=None) -> dict:
    """``{y: weight}`` for every pattern at ``depth``."""
    out = {}
    for fiber in fiber_map(model, direction, depth).values():
        for y in fiber:
            out[y] = fiber_weight(model, direction, y, fiber, measure)
    return out


def fiber_decomposition(model: ModelHandle, direction, target, extra_depth=0, measure=None):
    """Weighted preimages of ``target`` under sigma_dir.

    Symbolic: admissible ``y`` one column (row) larger than ``target`` with
    ``sigma(y) = target``; with ``extra_depth > 0`` only preimages extending by
    that many cells in both directions are kept. Circle: the |p| points
    ``(t + j)/p``. An empty list signals non-surjectivity.
    """
    if model.is_circle:
        p = model.degree(direction)
        pts = sorted({((Fraction(target) + j) / p) % 1 for j in range(abs(p))})
        return [(x, Fraction(1, len(pts))) for x in pts]
    e = unit(direction)
    depth = _add(target.shape, e)
    if extra_depth:
        big = _add(depth, (extra_depth, extra_depth))
        keep = {y.restrict(depth) for y in model.patterns(big)}
    else:
        keep = None
    fiber = [y for y in fiber_map(model, direction, depth).get(target, []) if keep is None or y in keep]
    return [(y, fiber_weight(model, direction, y, fiber, measure)) for y in fiber]


# ---------------------------------------------------------------- local injectivity

@dataclass
class LocalInjectivityVerdict:
    status: str
    direction: int
    window: tuple
    depth: tuple
    witness: tuple | None = None
    closed: bool | None = None
    note: str = ""

    def to_json(self):
        return {
            "status": self.status,
            "direction": self.direction,
            "window": [list(c) for c in self.window],
            "depth": list(self.depth),
            "closed": self.closed,
            "note": self.note,
            "witness": None if self.witness is None else [
                w.to_json() if isinstance(w, RectPattern) else str(w) for w in self.witness],
        }


def _find_pair(spec: SftSpec, shape, window):
    """First pair (y, z) of admissible patterns of ``shape`` that agree off column 0,
    agree on ``window`` and differ somewhere; None if no such pair exists."""
    m, n = shape
    size = m * n
    plan = _translate_plan(spec, shape)
    wset = set(window)
    choices = []
    for k in range(size):
        i, j = k % m, k // m
        if i == 0 and (i, j) not in wset:
            # differing pairs first so refutations surface early
            diff = [(a, b) for a in spec.alphabet for b in spec.alphabet if a != b]
            choices.append(diff + [(a, a) for a in spec.alphabet])
        else:
            choices.append([(a, a) for a in spec.alphabet])
    ys, zs = [None] * size, [None] * size

    def ok(k):
        for idx, allowed in plan[k]:
            if tuple(ys[t] for t in idx) not in allowed or tuple(zs[t] for t in idx) not in allowed:
                return False
        return True

    def rows(cells):
        return RectPattern(shape, tuple(tuple(cells[j * m:(j + 1) * m]) for j in range(n)))

    def dfs(k, differ):
        if k == size:
            return (rows(ys), rows(zs)) if differ else None
        for a, b in choices[k]:
            ys[k], zs[k] = a, b
            if ok(k):
                found = dfs(k + 1, differ or a != b)
                if found:
                    return found
        return None

    if not any(len(c) > len(spec.alphabet) for c in choices):
        return None
    return dfs(0, False)


def _rigid(spec: SftSpec) -> bool:
    """Is cell (0, h-1) of a box-sized block determined by the other block cells?"""
    w, h = spec.bounding_box
    seen = {}
    for p in enumerate_patterns(spec, (w, h)):
        key = tuple(c for k, c in enumerate(p.cells()) if k != (h - 1) * w)
        if seen.setdefault(key, p[0, h - 1]) != p[0, h - 1]:
            return False
    return True


def _transpose_cells(cells):
    return tuple(sorted(((c[1], c[0]) for c in cells), key=lambda c: (c[1], c[0])))


def check_local_injectivity(model: ModelHandle, direction, window=((0, 0),), depth=(3, 3),
                            refute_extra=2) -> LocalInjectivityVerdict:
    """Three-valued certificate that sigma_dir is injective on each cylinder over ``window``.

    VerifiedAtDepth: no two admissible depth patterns (one column longer than
    ``depth`` for direction 1) agree on ``window``, have equal shifts and
    differ, and the forcing closes: the window's bounding block determines its
    top-left cell from the rest, so agreement propagates up column 0 by
    induction. If injective at depth but not closed, taller patterns (up to
    ``refute_extra`` more rows) are searched for a witness before answering
    Inconclusive.
    """
    window = tuple(sorted({tuple(c) for c in window}, key=lambda c: (c[1], c[0])))
    depth = (depth, depth) if isinstance(depth, int) else tuple(depth)
    unit(direction)
    if model.is_circle:
        return _circle_injectivity(model, direction, window, depth)
    d1, d2 = depth
    ym, yn = _add(depth, unit(direction))
    if any(c[0] < 0 or c[1] < 0 or c[0] >= ym or c[1] >= yn for c in window):
        raise R2DError("window-outside-depth", f"window {window} not inside depth {depth}")
    spec, win, (a, b) = model.sft, window, depth
    if direction == 2:
        spec, win, (a, b) = spec.transpose(), _transpose_cells(window), (d2, d1)

    def back(pair, rows):
        y, z = pair
        if direction == 2:
            y, z = y.transpose(), z.transpose()
        dep = (a, rows) if direction == 1 else (rows, a)
        return (y, z), dep

    pair = _find_pair(spec, (a + 1, b), win)
    if pair is not None:
        wit, dep = back(pair, b)
        return LocalInjectivityVerdict("RefutedWithWitness", direction, window, depth, wit, False)
    closed = _rigid(spec) and b >= spec.bounding_box[1] - 1
    if closed:
        return LocalInjectivityVerdict("VerifiedAtDepth", direction, window, depth, None, True,
                                       "injective at depth; forcing closes by induction")
    for extra in range(1, refute_extra + 1):
        pair = _find_pair(spec, (a + 1, b + extra), win)
        if pair is not None:
            wit, dep = back(pair, b + extra)
            return LocalInjectivityVerdict("RefutedWithWitness", direction, window, dep, wit, False,
                                           f"witness found {extra} cell(s) beyond the requested depth")
    return LocalInjectivityVerdict("Inconclusive", direction, window, depth, None, False,
                                   "injective at depth but forcing does not close")


def _circle_injectivity(model, direction, window, depth):
    p = abs(model.degree(direction))
    level = depth[0]
    if level >= 1:
        # distinct preimages of one point differ by a multiple of 1/p, at least an arc length apart
        return LocalInjectivityVerdict("VerifiedAtDepth", direction, window, depth, None, True,
                                       f"arcs of length 1/{p ** level} separate fibers spaced 1/{p}")
    return LocalInjectivityVerdict("RefutedWithWitness", direction, window, depth,
                                   (Fraction(0), Fraction(1, p)), False, "whole circle is one arc")


def revalidate_witness(model: ModelHandle, verdict: LocalInjectivityVerdict) -> bool:
    """Re-check a refutation: admissible, agree on window, equal shifts, distinct."""
    if verdict.witness is None:
        return False
    y, z = verdict.witness
    if model.is_circle:
        return y != z and circle_map(model, unit(verdict.direction), y) == \
            circle_map(model, unit(verdict.direction), z)
    e = unit(verdict.direction)
    return (model.sft.admissible(y) and model.sft.admissible(z) and y != z
            and all(y[c] == z[c] for c in verdict.window)
            and shift_pattern(y, e) == shift_pattern(z, e))


def scan_local_injectivity(model: ModelHandle, direction, depth=(3, 3), max_window=(2, 2)):
    """Smallest anchored rectangular window [0,a)x[0,b) with a VerifiedAtDepth verdict."""
    for a, b in sorted(itertools.product(range(1, max_window[0] + 1), range(1, max_window[1] + 1)),
                       key=lambda ab: (ab[0] * ab[1], ab)):
        win = tuple((i, j) for j in range(b) for i in range(a))
        try:
            v = check_local_injectivity(model, direction, win, depth)
        except R2DError:
            continue
        if v.status == "VerifiedAtDepth":
            return v
    return None


# ---------------------------------------------------------------- surjectivity and openness

def check_open_surjective(model: ModelHandle, direction, depth=(3, 3)) -> dict:
    depth = (depth, depth) if isinstance(depth, int) else tuple(depth)
    if model.is_circle:
        p = abs(model.degree(direction))
        return {"surjective": True, "open": True, "nu": [p], "witness": None, "depth": list(depth)}
    e = unit(direction)
    fibers = fiber_map(model, direction, _add(depth, e))
    missing = [x for x in model.patterns(depth) if x not in fibers]
    nu = sorted({len(f) for f in fibers.values()})
    # openness: the image of each cylinder, seen one step deeper, is a union of depth cylinders
    big = _add(_add(depth, e), (1, 1))
    src = _add(depth, e)
    # row tuples rather than RectPattern objects: this loop sees every pattern of shape ``big``
    images = defaultdict(set)
    for y in model.patterns(big):
        rows = y.rows
        images[tuple(r[:src[0]] for r in rows[:src[1]])].add(tuple(r[e[0]:] for r in rows[e[1]:]))
    finer = _add(depth, (1, 1))
    by_coarse = defaultdict(set)
    for x in model.patterns(finer):
        by_coarse[tuple(r[:depth[0]] for r in x.rows[:depth[1]])].add(x.rows)
    open_ok, open_witness = True, None
    # every image point of [c] restricts to sigma(c) at depth, so one subset test per c suffices
    for c in sorted(images):
        if not by_coarse[tuple(r[e[0]:] for r in c[e[1]:])] <= images[c]:
            open_ok, open_witness = False, RectPattern(src, c)
            break
    return {
        "surjective": not missing,
        "witness": missing[0].to_json() if missing else None,
        "nu": nu,
        "open": open_ok,
        "open_witness": open_witness.to_json() if open_witness else None,
        "depth": list(depth),
    }


# ---------------------------------------------------------------- orbits and periodicity

def _box_leq(k):
    return list(itertools.product(range(k[0] + 1), range(k[1] + 1)))


def orbit_reach(model: ModelHandle, seed, k_bound, depth):
    """Depth patterns (circle: arc indices) met by the union over k <= k_bound of
    sigma^-k(sigma^k [seed])."""
    k_bound = tuple(k_bound)
    if model.is_circle:
        return _circle_reach(model, seed, k_bound, depth)
    depth = tuple(depth)
    reach = set()
    s = seed.shape
    for k in _box_leq(k_bound):
        e = _add(depth, k)
        t = (max(e[0], s[0]), max(e[1], s[1]))
        images = {shift_pattern(x.restrict(e), k) for x in model.patterns(t) if x.restrict(s) == seed}
        for y in model.patterns(e):
            if shift_pattern(y, k) in images:
                reach.add(y.restrict(depth))
    return sorted(reach, key=RectPattern.sort_key)


def _circle_reach(model, seed, k_bound, depth):
    d = depth if isinstance(depth, int) else depth[0]
    arcs = abs(model.degrees[0] * model.degrees[1]) ** d
    reach = set()
    x = Fraction(seed) % 1
    for k in _box_leq(k_bound):
        m = abs(model.degrees[0] ** k[0] * model.degrees[1] ** k[1])
        for j in range(m):
            y = (x + Fraction(j, m)) % 1
            reach.add(int(y * arcs))
    return sorted(reach)


def arc_count(model, depth):
    d = depth if isinstance(depth, int) else depth[0]
    return abs(model.degrees[0] * model.degrees[1]) ** d


def periodicity_diagnostic(model: ModelHandle, p, q, depth) -> dict:
    """Depth patterns consistent with sigma^p x = sigma^q x, and whether each admits
    an extension breaking the coincidence one step deeper."""
    p, q = tuple(p), tuple(q)
    if p == q:
        raise R2DError("p-equals-q", "periodicity needs p != q")
    if model.is_circle:
        np_ = model.degrees[0] ** p[0] * model.degrees[1] ** p[1]
        nq = model.degrees[0] ** q[0] * model.degrees[1] ** q[1]
        delta = abs(np_ - nq)
        if delta == 0:
            return {"p": list(p), "q": list(q), "finite": False, "periodic_points": None,
                    "evidence_positive": False}
        pts = [Fraction(j, delta) for j in range(delta)]
        return {"p": list(p), "q": list(q), "finite": True, "periodic_points": [str(x) for x in pts],
                "evidence_positive": True}
    depth = tuple(depth)
    mx = (max(p[0], q[0]), max(p[1], q[1]))
    e = _add(depth, mx)

    def periodic(x, d):
        return shift_pattern(x, p).restrict(d) == shift_pattern(x, q).restrict(d)

    per = [x for x in model.patterns(e) if periodic(x, depth)]
    bigger = _add(e, (1, 1))
    d2 = _add(depth, (1, 1))
    breaks = defaultdict(bool)
    for y in model.patterns(bigger):
        if not periodic(y, d2):
            breaks[y.restrict(e)] = True
    stuck = [x for x in per if not breaks[x]]
    return {
        "p": list(p), "q": list(q), "depth": list(depth),
        "periodic_patterns": [x.to_json() for x in per],
        "count": len(per),
        "non_breaking": [x.to_json() for x in stuck],
        "evidence_positive": not stuck,
    }
