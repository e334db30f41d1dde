"""Hilbert-bimodule layer over a model, as exact operators on cylinder-function spaces.

For a direction ``i`` the endomorphism is ``alpha_i(f) = f o sigma_i``, the
transfer operator ``L_i`` sums a function over each fiber with the fiber
weights, and the conditional expectation is ``P_i = alpha_i o L_i``. The
bimodule ``E_i`` is the function space with inner product ``<xi, eta> =
L_i(conj(xi) eta)``, right action ``xi . a = xi alpha_i(a)`` and left action by
multiplication.

Depth bookkeeping for symbolic models: ``L_i`` lowers depth by one in
direction ``i`` and ``alpha_i`` raises it, so ``E_i`` at depth ``D`` has its
coefficients at depth ``D - e_i``. ``E_(m,n)`` is flattened to one function
space with the inner product ``L_2^n L_1^m(conj(xi) eta)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import R2DError
from .functions import CylinderFunction, LaurentFunction, OperatorMatrix
from .groupoid import (CircleKernel, KernelFunction, _classes, circle_block_size, rn_classes,
                       rn_weights)
from .linalg import SparseMatrix, rank
from .models import ModelHandle
from .scalars import simplify
from .shifts import fiber_map, fiber_weights, scan_local_injectivity, shift_pattern, unit


def _steps(direction):
    """Normalize a direction (1 or 2) or a shape ``(m, n)`` to a shape."""
    if isinstance(direction, int):
        return unit(direction)
    return tuple(direction)


def _chain(n):
    return [1] * n[0] + [2] * n[1]


# ---------------------------------------------------------------- single operators

def alpha(f, direction):
    """Composition with sigma_dir (or sigma^n for a shape ``n``)."""
    for d in _chain(_steps(direction)):
        f = _alpha1(f, d)
    return f


def _alpha1(f, direction):
    if isinstance(f, LaurentFunction):
        p = f.model.degree(direction)
        return LaurentFunction(f.model, {k * p: v for k, v in f.coeffs.items()})
    e = unit(direction)
    depth = (f.depth[0] + e[0], f.depth[1] + e[1])
    return CylinderFunction(f.model, depth, lambda y: f.values[shift_pattern(y, e)])


def transfer(f, direction, measure=None):
    """``(L f)(z) = sum over sigma(y) = z of w(y) f(y)``; a shape applies L_1^m then L_2^n."""
    for d in _chain(_steps(direction)):
        f = _transfer1(f, d, measure)
    return f


def _transfer1(f, direction, measure):
    if isinstance(f, LaurentFunction):
        p = f.model.degree(direction)
        return LaurentFunction(f.model, {k // p: v for k, v in f.coeffs.items() if k % p == 0})
    e = unit(direction)
    if f.depth[direction - 1] < 1:
        f = f.refine((f.depth[0] + e[0], f.depth[1] + e[1]))
    fibers = fiber_map(f.model, direction, f.depth)
    w = fiber_weights(f.model, direction, f.depth, measure)
    out = {z: sum((w[y] * f.values[y] for y in ys), Fraction(0)) for z, ys in fibers.items()}
    depth = (f.depth[0] - e[0], f.depth[1] - e[1])
    return CylinderFunction(f.model, depth, out)


def expectation(f, direction, measure=None):
    return alpha(transfer(f, direction, measure), direction)


def inner_product(xi, eta, direction=1, measure=None):
    """``<xi, eta> = L(conj(xi) eta)`` in E_dir (or E_n for a shape)."""
    return transfer(xi.conjugate() * eta, direction, measure)


def right_action(xi, a, direction=1):
    return xi * alpha(a, direction)


def left_action(a, xi):
    return a * xi


# ---------------------------------------------------------------- matrices

def _basis(model, depth):
    if model.is_circle:
        span = depth if isinstance(depth, int) else depth[0]
        return tuple(range(-span, span + 1))
    return model.patterns(tuple(depth))


def _element(model, depth, key):
    if model.is_circle:
        return LaurentFunction.monomial(model, key)
    return CylinderFunction.delta(model, depth, key)


def _column(f):
    if isinstance(f, LaurentFunction):
        return dict(f.coeffs)
    return {x: v for x, v in f.values.items() if v != 0}


def _lowered(model, direction, depth):
    if model.is_circle:
        return depth
    e = unit(direction)
    if depth[direction - 1] < 1 or min(depth) < 1:
        raise R2DError("depth-too-small", f"depth {tuple(depth)} too small for direction {direction}")
    return (depth[0] - e[0], depth[1] - e[1])


def operator_matrix(model, fn, depth_in, depth_out, tag):
    dom, cod = _basis(model, depth_in), _basis(model, depth_out)
    return OperatorMatrix.from_columns(dom, cod, lambda b: _column(fn(_element(model, depth_in, b))), tag)


def expectation_matrix(model: ModelHandle, measure=None, direction=1, depth=(3, 3)) -> OperatorMatrix:
    """Matrix of P_dir on the depth basis (circle: Laurent span |k| <= depth)."""
    depth = depth if model.is_circle else tuple(depth)
    _lowered(model, direction, depth)
    return operator_matrix(model, lambda f: expectation(f, direction, measure), depth, depth, "expectation")


def transfer_matrix(model: ModelHandle, measure=None, direction=1, depth=(3, 3)) -> OperatorMatrix:
    depth = depth if model.is_circle else tuple(depth)
    low = _lowered(model, direction, depth)
    return operator_matrix(model, lambda f: transfer(f, direction, measure), depth, low, "transfer")


def alpha_matrix(model: ModelHandle, direction=1, depth=(3, 3)) -> OperatorMatrix:
    """alpha_dir from depth - e_dir to depth (circle: span |k| <= depth // |p| into |k| <= depth)."""
    if model.is_circle:
        p = abs(model.degree(direction))
        return operator_matrix(model, lambda f: alpha(f, direction), depth // p, depth, "endomorphism")
    depth = tuple(depth)
    low = _lowered(model, direction, depth)
    return operator_matrix(model, lambda f: alpha(f, direction), low, depth, "endomorphism")


def left_action_matrix(f, n=(1, 0), depth=None) -> OperatorMatrix:
    """phi(f): multiplication by ``f`` on the E_n basis at ``depth``."""
    if isinstance(f, LaurentFunction):
        span = depth if depth is not None else 6
        return operator_matrix(f.model, lambda g: f * g, span, span + f.degree_span(), "leftAction")
    depth = tuple(depth) if depth is not None else f.depth
    if depth[0] < f.depth[0] or depth[1] < f.depth[1]:
        raise R2DError("depth-mismatch", f"function depth {f.depth} exceeds {depth}")
    f = f.refine(depth)
    return operator_matrix(f.model, lambda g: f * g, depth, depth, "leftAction")


def operator_identity_report(model: ModelHandle, measure=None, depth=(3, 3)) -> dict:
    """Exact checks of P^2 = P, P(1) = 1, positivity, L(1) = 1, L alpha = id and
    L(alpha(f) g) = f L(g) over the full basis, for both directions."""
    out = {}
    for d in (1, 2):
        P = expectation_matrix(model, measure, d, depth)
        L = transfer_matrix(model, measure, d, depth)
        A = alpha_matrix(model, d, depth)
        one = _one(model, depth)
        low = depth // abs(model.degree(d)) if model.is_circle else _lowered(model, d, depth)
        res = {
            "P_idempotent": P.is_idempotent(),
            "P_unital": expectation(one, d, measure) == one,
            "P_positive": P.is_positive(),
            "L_unital": transfer(one, d, measure) == _one(model, _lowered(model, d, depth)),
            "L_positive": L.is_positive(),
            "L_alpha_identity": all(transfer(alpha(_element(model, low, b), d), d, measure)
                                    == _element(model, low, b) for b in A.domain),
            "bimodule_identity": _bimodule_identity(model, measure, d, depth),
        }
        out[f"direction_{d}"] = res
    comm = check_commuting_expectations(model, measure, depth)
    out["commuting"] = comm["commute"]
    out["ok"] = all(all(v.values()) for k, v in out.items() if k.startswith("direction")) and comm["commute"]
    return out


def _one(model, depth):
    if model.is_circle:
        return LaurentFunction.constant(model)
    return CylinderFunction.constant(model, tuple(depth))


def _bimodule_identity(model, measure, direction, depth):
    if model.is_circle:
        p = abs(model.degree(direction))
        fs = [LaurentFunction.monomial(model, a) for a in range(-depth, depth + 1)]
        gs = fs
    else:
        low = _lowered(model, direction, depth)
        fs = [CylinderFunction.delta(model, low, x) for x in model.patterns(low)]
        gs = [CylinderFunction.delta(model, depth, y) for y in model.patterns(depth)]
    for f in fs:
        af = alpha(f, direction)
        for g in gs:
            if transfer(af * g, direction, measure) != f * transfer(g, direction, measure):
                return False
    return True


def check_commuting_expectations(model: ModelHandle, measure=None, depth=(3, 3)) -> dict:
    """Compare P_1 P_2 with P_2 P_1 entrywise; report the largest deviation."""
    if not model.is_circle and (depth[0] < 2 or depth[1] < 2):
        raise R2DError("depth-too-small", "commuting check needs depth >= (2, 2)")
    P1 = expectation_matrix(model, measure, 1, depth)
    P2 = expectation_matrix(model, measure, 2, depth)
    a, b = P1 @ P2, P2 @ P1
    dev = a.max_deviation(b)
    if dev is not None and not model.is_circle:
        dev["row"] = dev["row"].to_json()
        dev["col"] = dev["col"].to_json()
    return {"commute": dev is None, "witness": dev, "depth": depth if model.is_circle else list(depth)}


# ---------------------------------------------------------------- frames

@dataclass
class FrameElement:
    """``u = sqrt(weight_squared) * indicator``; only the square is stored so all
    checked identities stay rational."""

    indicator: object
    weight_squared: object


def frame_compute(model: ModelHandle, measure=None, direction=1, depth=(3, 3)):
    """Parseval frame for E_dir: reconstruction ``f = sum u P(conj(u) f)`` holds exactly.

    Symbolic: one element per window assignment of the smallest rectangular
    window on which sigma_dir is certified injective, with weight_squared = nu.
    Circle of degree p: monomials 1, z, ..., z^(|p|-1) with weight_squared 1.
    """
    measure = measure or model.measure
    if model.is_circle:
        p = abs(model.degree(direction))
        return [FrameElement(LaurentFunction.monomial(model, j), Fraction(1)) for j in range(p)]
    if measure.mode(direction) != "counting":
        raise R2DError("not-locally-injective", "frames are defined for counting-normalized fibers")
    depth = tuple(depth)
    verdict = scan_local_injectivity(model, direction, depth)
    if verdict is None:
        raise R2DError("not-locally-injective", f"no injectivity window certified at depth {depth}")
    window = verdict.window
    fib = fiber_map(model, direction, depth)
    nu = {y: Fraction(len(ys)) for ys in fib.values() for y in ys}
    nu_fn = CylinderFunction(model, depth, nu)
    assignments = sorted({tuple(x[c] for c in window) for x in model.patterns(depth)})
    return [FrameElement(CylinderFunction.indicator(model, depth, dict(zip(window, a))), nu_fn)
            for a in assignments]


def frame_reconstruct(frame, f, direction=1, measure=None):
    total = None
    for u in frame:
        term = u.weight_squared * u.indicator * expectation(u.indicator.conjugate() * f, direction, measure)
        total = term if total is None else total + term
    return total


def frame_check(model: ModelHandle, measure=None, direction=1, depth=(3, 3)) -> dict:
    """Reconstruction over the full basis (symbolic deltas, or monomials |k| <= depth)."""
    frame = frame_compute(model, measure, direction, depth)
    if model.is_circle:
        span = depth if isinstance(depth, int) else depth[0]
        basis = [LaurentFunction.monomial(model, k) for k in range(-span, span + 1)]
    else:
        basis = [CylinderFunction.delta(model, tuple(depth), x) for x in model.patterns(tuple(depth))]
    ok = all(frame_reconstruct(frame, f, direction, measure) == f for f in basis)
    return {"frame_size": len(frame), "reconstructs": ok, "basis_size": len(basis)}


# ---------------------------------------------------------------- tensor products and Phi

@dataclass
class TensorSum:
    """Finite sum of simple tensors in E_a (x)_A E_b, ``order = (a, b)``."""

    terms: list
    order: tuple = (1, 2)

    @classmethod
    def simple(cls, xi, eta, order=(1, 2)):
        return cls([(Fraction(1), xi, eta)], order)

    def __sub__(self, other):
        return TensorSum(self.terms + [(-c, a, b) for c, a, b in other.terms], self.order)


def tensor_inner(s: TensorSum, t: TensorSum, measure=None):
    """``<x1 (x) x2, y1 (x) y2> = <x2, <x1, y1>_a y2>_b`` summed bilinearly."""
    a, b = s.order
    total = None
    for c, x1, x2 in s.terms:
        for d, y1, y2 in t.terms:
            inner = inner_product(x2, inner_product(x1, y1, a, measure) * y2, b, measure)
            term = inner * (c.conjugate() * d)
            total = term if total is None else total + term
    return total


def phi_iso(xi1, xi2, order=(1, 2)):
    """Phi(xi1 (x) xi2) = xi1 alpha_a(xi2) into the bimodule of the composed endomorphism."""
    return xi1 * alpha(xi2, order[0])


def phi_iso_inv(xi, order=(1, 2)):
    one = LaurentFunction.constant(xi.model) if isinstance(xi, LaurentFunction) else \
        CylinderFunction.constant(xi.model, (0, 0))
    return TensorSum.simple(xi, one, order)


def _composite_inner(xi, eta, order, measure=None):
    """Inner product of E_(1,1) as the bimodule of alpha_a alpha_b: L_b L_a(conj(xi) eta)."""
    a, b = order
    return transfer(transfer(xi.conjugate() * eta, a, measure), b, measure)


def _simple_tensors(model, depth, order):
    a, _ = order
    if model.is_circle:
        span = depth if isinstance(depth, int) else depth[0]
        mons = [LaurentFunction.monomial(model, k) for k in range(-span, span + 1)]
        return [(x, y) for x in mons for y in mons]
    depth = tuple(depth)
    low = _lowered(model, a, depth)
    return [(CylinderFunction.delta(model, depth, x), CylinderFunction.delta(model, low, y))
            for x in model.patterns(depth) for y in model.patterns(low)]


def _overlapping_pairs(tensors):
    """Pairs of simple tensors whose first factors have overlapping support.

    For the remaining pairs conj(x1) y1 = 0, so <x1, y1> = 0 and both sides of
    every inner-product identity below vanish identically."""
    if not tensors or isinstance(tensors[0][0], LaurentFunction):
        return [(s, t) for s in tensors for t in tensors]
    by_cell = {}
    for k, (x1, _) in enumerate(tensors):
        for x in x1.support():
            by_cell.setdefault(x, []).append(k)
    keep = set()
    for ks in by_cell.values():
        keep.update((a, b) for a in ks for b in ks)
    return [(tensors[a], tensors[b]) for a, b in sorted(keep)]


def phi_check(model: ModelHandle, measure=None, depth=(2, 2), order=(1, 2)) -> dict:
    """Phi preserves inner products on simple tensors of basis functions, and
    Phi^-1(xi) = xi (x) 1 is a two-sided inverse there."""
    tensors = _simple_tensors(model, depth, order)
    pairs = _overlapping_pairs(tensors)
    preserved = all(
        _composite_inner(phi_iso(x1, x2, order), phi_iso(y1, y2, order), order, measure)
        == tensor_inner(TensorSum.simple(x1, x2, order), TensorSum.simple(y1, y2, order), measure)
        for (x1, x2), (y1, y2) in pairs)
    right_inverse = all(
        phi_iso(*phi_iso_inv(phi_iso(x1, x2, order), order).terms[0][1:], order) == phi_iso(x1, x2, order)
        for x1, x2 in tensors)
    left_inverse = True
    for x1, x2 in tensors:
        diff = TensorSum.simple(x1, x2, order) - phi_iso_inv(phi_iso(x1, x2, order), order)
        norm = tensor_inner(diff, diff, measure)
        if _column(norm):
            left_inverse = False
            break
    return {"inner_products_preserved": preserved, "phi_phi_inv_identity": right_inverse,
            "phi_inv_phi_identity": left_inverse, "tensors": len(tensors), "pairs_checked": len(pairs)}


def flip_unitary_check(model: ModelHandle, measure=None, depth=(2, 2)) -> dict:
    """The composite flip Phi_21^-1 Phi_12 : E_1 (x) E_2 -> E_2 (x) E_1 preserves inner products."""
    comm = check_commuting_expectations(model, measure, depth if model.is_circle else
                                        (max(depth[0], 2), max(depth[1], 2)))
    if not comm["commute"]:
        raise R2DError("noncommuting-expectations", "flip needs commuting expectations")
    tensors = _simple_tensors(model, depth, (1, 2))
    pairs = _overlapping_pairs(tensors)
    ok = all(tensor_inner(TensorSum.simple(*s), TensorSum.simple(*t), measure)
             == tensor_inner(phi_iso_inv(phi_iso(*s), (2, 1)), phi_iso_inv(phi_iso(*t), (2, 1)), measure)
             for s, t in pairs)
    unit_ok = True
    one = tensors[0][0].constant(model, (0, 0)) if not model.is_circle else LaurentFunction.constant(model)
    if not model.is_circle:
        one_t = TensorSum.simple(one, one, (1, 2))
        f_one = phi_iso_inv(phi_iso(one, one), (2, 1))
        unit_ok = tensor_inner(one_t, one_t, measure) == tensor_inner(f_one, f_one, measure) and \
            f_one.terms[0][1] == one
    return {"preserved": ok, "unit_to_unit": unit_ok, "tensors": len(tensors), "pairs_checked": len(pairs)}


def scalar_flip_check(n1: int, n2: int) -> dict:
    """A = C, E_i = C^{n_i}, flip e_i (x) f_j -> f_j (x) e_i: Gram matrices agree."""
    basis = [(i, j) for i in range(n1) for j in range(n2)]

    def gram_12(s, t):
        # <e_i (x) f_j, e_k (x) f_l> = <f_j, <e_i, e_k> f_l>
        return Fraction(int(s[0] == t[0])) * Fraction(int(s[1] == t[1]))

    def gram_21(s, t):
        return Fraction(int(s[1] == t[1])) * Fraction(int(s[0] == t[0]))

    ok = all(gram_12(s, t) == gram_21(s, t) for s in basis for t in basis)
    return {"preserved": ok, "dimension": len(basis)}


# ---------------------------------------------------------------- Theta kernels

def theta_kernel(xi, eta, n=(1, 0), measure=None):
    """Kernel of Theta_{xi,eta} = xi <eta, .>_n: ``k(x, y) = xi(x) conj(eta(y))`` on R_n."""
    n = tuple(n)
    if isinstance(xi, LaurentFunction):
        order = circle_block_size(xi.model, n)
        return CircleKernel(xi.model, n, tuple(xi * eta.rotate(order, j).conjugate() for j in range(order)))
    d = (max(xi.depth[0], eta.depth[0], n[0]), max(xi.depth[1], eta.depth[1], n[1]))
    xi, eta = xi.refine(d), eta.refine(d)
    vals = {}
    for c in _classes(xi.model, n, d):
        for x in c:
            if xi.values[x] == 0:
                continue
            for y in c:
                v = xi.values[x] * eta.values[y].conjugate()
                if v != 0:
                    vals[(x, y)] = v
    return KernelFunction(xi.model, n, d, vals, measure)


def kernel_operator_apply(k, zeta):
    """Apply the operator of kernel ``k`` to ``zeta``."""
    if isinstance(k, CircleKernel):
        total = LaurentFunction(k.model, {})
        for j, comp in enumerate(k.comps):
            total = total + comp * zeta.rotate(k.order, j)
        return total * Fraction(1, k.order)
    zeta = zeta.refine(k.depth)
    w = k.weights()
    out = {}
    for (x, y), v in k.values.items():
        out[x] = out.get(x, 0) + v * w[y] * zeta.values[y]
    return CylinderFunction(k.model, k.depth, out)


def theta_apply(xi, eta, zeta, n=(1, 0), measure=None):
    """Theta_{xi,eta}(zeta) = xi . <eta, zeta>_n via inner product and right action."""
    return right_action(xi, inner_product(eta, zeta, n, measure), n)


def kernel_convolve(k1, k2):
    """``(k1 * k2)(x, y) = sum over z in the R_n class of x of w_n(z) k1(x, z) k2(z, y)``.

    The fiber weight is included so convolution matches operator composition.
    """
    if isinstance(k1, CircleKernel):
        if k1.n != k2.n:
            raise R2DError("shape-mismatch", "kernels on different R_n")
        order = k1.order
        comps = []
        for j in range(order):
            acc = LaurentFunction(k1.model, {})
            for i in range(order):
                acc = acc + k1.comps[i] * k2.comps[(j - i) % order].rotate(order, i)
            comps.append(acc * Fraction(1, order))
        return CircleKernel(k1.model, k1.n, tuple(comps))
    if (k1.n, k1.depth) != (k2.n, k2.depth):
        raise R2DError("shape-mismatch", "kernels on different R_n or depths")
    w = k1.weights()
    rows1 = {}
    for (x, z), v in k1.values.items():
        rows1.setdefault(x, []).append((z, v))
    rows2 = {}
    for (z, y), v in k2.values.items():
        rows2.setdefault(z, []).append((y, v))
    out = {}
    for x, zs in rows1.items():
        for z, a in zs:
            for y, b in rows2.get(z, ()):
                out[(x, y)] = out.get((x, y), 0) + w[z] * a * b
    return KernelFunction(k1.model, k1.n, k1.depth, out, k1.measure)


def theta_composition_rule(xi, eta, xi2, eta2, n=(1, 0), measure=None):
    """Kernel of Theta_{xi <eta, xi2>, eta2}, the closed form of Theta_{xi,eta} Theta_{xi2,eta2}."""
    return theta_kernel(right_action(xi, inner_product(eta, xi2, n, measure), n), eta2, n, measure)


# ---------------------------------------------------------------- compactness growth

def compactness_growth_diagnostic(model: ModelHandle, direction=1, depths=((2, 1), (2, 2), (2, 3), (2, 4)),
                                  measure=None) -> list:
    """Per depth, the minimal number of Theta operators whose sum is phi(1) = id on E_dir.

    Lower bound: a sum of r rank-one Thetas has rank <= r on each R_1 class
    block, and id restricted to a class block has full rank, so r >= the largest
    block rank. Upper bound: split every class into its k-th members U_k; the
    sum of Theta_{chi_Uk / w, chi_Uk} is verified to equal the identity exactly.
    """
    n = unit(direction)
    out = []
    for depth in depths:
        depth = tuple(depth)
        if model.is_circle:
            p = abs(model.degree(direction))
            out.append({"depth": depth, "lower": p, "upper": p, "minimal": p})
            continue
        classes = _classes(model, n, depth)
        w = rn_weights(model, n, depth, measure)
        biggest = max(classes, key=len)
        block = [[Fraction(1) / w[x] if x == y else Fraction(0) for y in biggest] for x in biggest]
        lower = rank(block)
        size = max(len(c) for c in classes)
        total = None
        for k in range(size):
            members = {c[k] for c in classes if len(c) > k}
            ind = CylinderFunction(model, depth, {x: Fraction(1) for x in members})
            scaled = CylinderFunction(model, depth, {x: Fraction(1) / w[x] for x in members})
            from .groupoid import kernel_to_block_matrix
            mat = kernel_to_block_matrix(theta_kernel(scaled, ind, n, measure)).matrix
            total = mat if total is None else total + mat
        exact = total is not None and total.is_identity()
        out.append({"depth": depth, "lower": lower, "upper": size if exact else None,
                    "minimal": lower if exact and lower == size else None})
    return out


# ---------------------------------------------------------------- handles and searches

@dataclass(frozen=True)
class BimoduleHandle:
    """E_(m,n) over a model; shape (0, 0) is the coefficient algebra itself."""

    model: ModelHandle
    shape: tuple = (1, 0)
    measure: object = None

    def inner(self, xi, eta):
        if self.shape == (0, 0):
            return xi.conjugate() * eta
        return inner_product(xi, eta, self.shape, self.measure)

    def right(self, xi, a):
        return right_action(xi, a, self.shape) if self.shape != (0, 0) else xi * a


def right_compatibility_check(model: ModelHandle, measure=None, direction=1, depth=(2, 2)) -> bool:
    """``<xi, eta . a> = <xi, eta> a`` over all basis xi, eta and coefficient a."""
    if model.is_circle:
        span = depth if isinstance(depth, int) else depth[0]
        es = [LaurentFunction.monomial(model, k) for k in range(-span, span + 1)]
        coeffs = es
    else:
        depth = tuple(depth)
        low = _lowered(model, direction, depth)
        es = [CylinderFunction.delta(model, depth, x) for x in model.patterns(depth)]
        coeffs = [CylinderFunction.delta(model, low, x) for x in model.patterns(low)]
    return all(inner_product(xi, right_action(eta, a, direction), direction, measure)
               == inner_product(xi, eta, direction, measure) * a
               for xi in es for eta in es for a in coeffs)


def positivity_check(model: ModelHandle, measure=None, direction=1, depth=(2, 2)) -> bool:
    """``<xi, xi>`` is nonnegative-valued for every basis function."""
    if model.is_circle:
        span = depth if isinstance(depth, int) else depth[0]
        es = [LaurentFunction.monomial(model, k) for k in range(-span, span + 1)]
        return all(inner_product(x, x, direction, measure) == LaurentFunction.constant(model) for x in es)
    es = [CylinderFunction.delta(model, tuple(depth), x) for x in model.patterns(tuple(depth))]
    return all(inner_product(x, x, direction, measure).is_nonnegative() for x in es)


def find_noncommuting_weights(depth=(2, 2), grid=(Fraction(1, 3), Fraction(1, 2), Fraction(2, 3))):
    """Brute-force search over 2-symbol product weights (w1, w2) on the full shift for a
    pair whose expectations fail to commute. Returns (w1, w2, report) or None."""
    from .models import FiberMeasureSystem, build_model
    for a in grid:
        for b in grid:
            w1 = {"0": a, "1": 1 - a}
            w2 = {"0": b, "1": 1 - b}
            model = build_model(("0", "1"), kind="fullshift",
                                measure=FiberMeasureSystem.product(w1, w2))
            rep = check_commuting_expectations(model, None, depth)
            if not rep["commute"]:
                return w1, w2, rep
    return None


def convolution_check(model: ModelHandle, n=(1, 0), depth=(2, 2), measure=None) -> dict:
    """Compare three evaluation paths over all pairs of basis kernels.

    Symbolic basis kernels are Theta_{delta_x, delta_y} for (x, y) in R_n. For a
    circle model they are Theta_{z^a, z^b} with |a|, |b| <= depth. The paths
    are kernel_convolve, block-matrix multiplication and the closed-form
    Theta composition rule.
    """
    from .groupoid import (block_matrix_to_kernel, circle_block_matrix_to_kernel, circle_block_product,
                           circle_kernel_to_block_matrix, kernel_to_block_matrix)
    n = tuple(n)
    if model.is_circle:
        span = depth if isinstance(depth, int) else depth[0]
        gens = [LaurentFunction.monomial(model, a) for a in range(-span, span + 1)]
        pairs = [(x, y) for x in gens for y in gens]
    else:
        depth = tuple(depth)
        pairs = [(CylinderFunction.delta(model, depth, x), CylinderFunction.delta(model, depth, y))
                 for c in rn_classes(model, n, depth) for x in c for y in c]
    kernels = [theta_kernel(x, y, n, measure) for x, y in pairs]
    blocks = [circle_kernel_to_block_matrix(k) if model.is_circle else kernel_to_block_matrix(k).matrix
              for k in kernels]
    mismatches, checked = [], 0
    for a, (xi, eta) in enumerate(pairs):
        for b, (xi2, eta2) in enumerate(pairs):
            conv = kernel_convolve(kernels[a], kernels[b])
            if model.is_circle:
                via_blocks = circle_block_matrix_to_kernel(circle_block_product(blocks[a], blocks[b]), model, n)
            else:
                prod = OperatorMatrix(model.patterns(depth), model.patterns(depth), blocks[a] @ blocks[b])
                via_blocks = block_matrix_to_kernel(prod, model, n, depth, measure)
            via_rule = theta_composition_rule(xi, eta, xi2, eta2, n, measure)
            checked += 1
            if not (conv == via_blocks and conv == via_rule):
                mismatches.append([a, b])
    return {"n": list(n), "depth": depth if isinstance(depth, int) else list(depth), "kernels": len(kernels),
            "products_checked": checked, "agree": not mismatches, "mismatches": mismatches[:5]}
