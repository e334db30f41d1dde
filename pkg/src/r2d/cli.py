"""Command-line front end: ``r2d <subcommand> --model <path or bundled name> [flags]``.

Model files are YAML; reports are JSON with sorted keys and exact rationals
written as "num/den", so repeated runs are byte-identical.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import yaml

from . import bimodule, groupoid, ktheory, models, shifts
from .errors import R2DError, ValidationError
from .functions import CylinderFunction, LaurentFunction
from .models import FiberMeasureSystem, ModelHandle, Rank2Graph, RectPattern, SftSpec
from .scalars import QQi, to_json

BUNDLED = ("ledrappier", "circle-2-3", "fullshift", "kgraph-2-3", "reducible")
DEFAULT_DEPTH = (3, 3)
DEFAULT_SPAN = 6

FIELDS = {
    "sft": {"kind", "name", "alphabet", "window", "allowed", "measure"},
    "kgraph": {"kind", "name", "vertices", "h_edges", "v_edges", "rho", "measure"},
    "fullshift": {"kind", "name", "alphabet", "weights", "measure"},
    "circle": {"kind", "name", "degrees"},
}

FIELD_OF_CODE = {
    "empty-alphabet": "alphabet", "empty-window": "window", "symbol-out-of-alphabet": "allowed",
    "empty-language": "allowed", "depth-too-small": "window", "endpoint-mismatch": "rho",
    "noncommuting-vertex-matrices": "h_edges", "rho-not-bijective": "rho", "validation-error": "degrees",
}


# ---------------------------------------------------------------- model files

class ParsedModel:
    def __init__(self, handle: ModelHandle, source: dict):
        self.handle = handle
        self.source = source
        canonical = json.dumps(source, sort_keys=True, default=str, separators=(",", ":"))
        self.fingerprint = hashlib.sha256(canonical.encode()).hexdigest()


def _key_lines(text):
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def _rational(value, where):
    if isinstance(value, bool) or isinstance(value, float):
        raise R2DError("parse-error", f"{where}: weights must be integers or 'num/den' strings, got {value!r}")
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        raise R2DError("parse-error", f"{where}: cannot read {value!r} as a rational") from None


def _weights(raw, where):
    if not isinstance(raw, dict) or not raw:
        raise R2DError("parse-error", f"{where}: expected a non-empty symbol -> weight mapping")
    return {str(s): _rational(v, f"{where}.{s}") for s, v in raw.items()}


def _measure(raw, line):
    if raw is None:
        return None
    if raw == "counting":
        return FiberMeasureSystem.counting()
    if not isinstance(raw, dict) or set(raw) - {"direction_1", "direction_2"}:
        raise R2DError("parse-error", f"line {line}, field 'measure': expected 'counting' or "
                                      "a mapping with direction_1/direction_2")
    modes, weights = [], []
    for key in ("direction_1", "direction_2"):
        entry = raw.get(key, "counting")
        if entry == "counting":
            modes.append("counting")
            weights.append(())
        else:
            w = FiberMeasureSystem.product(_weights(entry, f"measure.{key}"))
            modes.append("product")
            weights.append(w.weights[0])
    return FiberMeasureSystem(tuple(modes), tuple(weights))


def _symbol(s):
    return s if isinstance(s, int) and not isinstance(s, bool) else str(s)


def load_model_text(text: str, name: str = "") -> ParsedModel:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark else "input"
        raise R2DError("parse-error", f"{where}: {exc}") from None
    if not isinstance(data, dict):
        raise R2DError("parse-error", "model file must be a mapping")
    lines = _key_lines(text)
    kind = data.get("kind")
    if kind not in FIELDS:
        raise R2DError("parse-error", f"line {lines.get('kind', 1)}, field 'kind': unknown kind {kind!r}")
    for key in data:
        if key not in FIELDS[kind]:
            raise R2DError("parse-error", f"line {lines.get(key, '?')}: unknown field {key!r} for kind {kind}")

    def need(key):
        if key not in data:
            raise R2DError("parse-error", f"missing field {key!r} for kind {kind}")
        return data[key]

    label = str(data.get("name", name))
    measure = _measure(data.get("measure"), lines.get("measure", "?"))
    try:
        if kind == "sft":
            alphabet = [_symbol(s) for s in need("alphabet")]
            window = [tuple(c) for c in need("window")]
            allowed = [tuple(_symbol(s) for s in row) for row in need("allowed")]
            for k, row in enumerate(allowed):
                if len(row) != len(window):
                    raise R2DError("parse-error", f"line {lines.get('allowed', '?')}, field 'allowed[{k}]': "
                                                  f"expected {len(window)} symbols")
            handle = models.build_model(SftSpec.make(alphabet, window, allowed), measure=measure, name=label)
        elif kind == "kgraph":
            rho = {}
            for k, row in enumerate(need("rho")):
                if len(row) != 4:
                    raise R2DError("parse-error", f"line {lines.get('rho', '?')}, field 'rho[{k}]': "
                                                  "expected [bottom, right, left, top]")
                rho[(str(row[0]), str(row[1]))] = (str(row[2]), str(row[3]))
            edges = [{str(e): tuple(str(v) for v in ends) for e, ends in need(f).items()}
                     for f in ("h_edges", "v_edges")]
            g = Rank2Graph.make(tuple(str(v) for v in need("vertices")), edges[0], edges[1], rho)
            handle = models.build_model(g, measure=measure, name=label)
        elif kind == "fullshift":
            if "weights" in data:
                spec = _weights(data["weights"], "weights")
            else:
                spec = [str(s) for s in need("alphabet")]
            handle = models.build_model(spec, kind="fullshift", measure=measure, name=label)
        else:
            degrees = need("degrees")
            if not isinstance(degrees, list) or len(degrees) != 2:
                raise R2DError("parse-error", f"line {lines.get('degrees', '?')}, field 'degrees': expected two integers")
            handle = models.build_model(tuple(degrees), name=label)
    except ValidationError as exc:
        fields = sorted({FIELD_OF_CODE.get(c, "kind") for c in exc.report.codes()})
        where = ", ".join(f"line {lines.get(f, '?')}, field '{f}'" for f in fields)
        raise R2DError("validation-error", f"{where}: {exc.message}") from None
    except (TypeError, AttributeError) as exc:
        raise R2DError("parse-error", f"malformed model file: {exc}") from None
    return ParsedModel(handle, data)


def parse_model_spec(path) -> ModelHandle:
    return load_model(path).handle


def load_model(path) -> ParsedModel:
    path = str(path)
    if path in BUNDLED:
        text = resources.files("r2d").joinpath("specs").joinpath(f"{path}.yaml").read_text()
        return load_model_text(text, path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise R2DError("parse-error", f"cannot read {path}: {exc.strerror}") from None
    return load_model_text(text, Path(path).stem)


# ---------------------------------------------------------------- serialization

def jsonable(x):
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, (Fraction, QQi)):
        return to_json(x)
    if isinstance(x, RectPattern):
        return x.to_json()
    if isinstance(x, (CylinderFunction, LaurentFunction)):
        return x.to_json()
    if hasattr(x, "to_json"):
        return jsonable(x.to_json())
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted((jsonable(v) for v in x), key=lambda v: json.dumps(v, sort_keys=True))
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(doc) -> str:
    return json.dumps(jsonable(doc), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------- argument helpers

def pair(text):
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers in {text!r}") from None


def pair_list(text):
    return [pair(p) for p in str(text).split(";") if p.strip()]


def _depth(model, value, default_sft=DEFAULT_DEPTH, default_span=DEFAULT_SPAN):
    """Circle models take a single integer span (first coordinate when a pair is given)."""
    if model.is_circle:
        if value is None:
            return default_span
        return value[0] if isinstance(value, tuple) else int(value)
    return tuple(value) if value is not None else default_sft


def depth_arg(text):
    text = str(text)
    if "," in text:
        return pair(text)
    try:
        return int(text), int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a depth like '3,3' or '6', got {text!r}") from None


# ---------------------------------------------------------------- commands

def _matrix_doc(op):
    entries = [[i, j, v] for i, row in enumerate(op.matrix.rows) for j, v in sorted(row.items())]
    return {"tag": op.tag, "domain": list(op.domain), "codomain": list(op.codomain),
            "shape": [len(op.codomain), len(op.domain)], "entries": entries}


def cmd_validate(model, args):
    h = model.handle
    if h.kind in ("sft", "fullshift"):
        depth = _depth(h, args.depth)
        rep = models.validate_sft(h.sft, depth)
        return {"validation": rep}, rep.ok, {"depth": depth}
    if h.kind == "kgraph":
        rep = models.validate_rank2_graph(h.payload)
        return {"validation": rep}, rep.ok, {}
    return {"validation": {"ok": True, "errors": [], "details": {"degrees": list(h.degrees)}}}, True, {}


def cmd_patterns(model, args):
    pats = model.handle.patterns(args.shape)
    return {"count": len(pats), "patterns": pats}, True, {"shape": list(args.shape)}


def cmd_localhomeo(model, args):
    h = model.handle
    depth = _depth(h, args.depth, default_span=2)
    window = tuple(args.window) if args.window else ((0, 0),)
    verdict = shifts.check_local_injectivity(h, args.dir, window, depth)
    out = {"verdict": verdict}
    if verdict.status == "RefutedWithWitness":
        out["witness_revalidates"] = shifts.revalidate_witness(h, verdict)
    try:
        out["open_surjective"] = shifts.check_open_surjective(h, args.dir, depth)
    except R2DError as exc:
        if exc.code != "shape-overflow":
            raise
        out["open_surjective"] = {"skipped": exc.code, "message": exc.message}
    params = {"dir": args.dir, "window": [list(c) for c in window], "depth": depth}
    return out, out.get("witness_revalidates", True), params


def cmd_operator(kind):
    def run(model, args):
        h = model.handle
        depth = _depth(h, args.depth)
        if kind == "expectation":
            op = bimodule.expectation_matrix(h, None, args.dir, depth)
            checks = {"idempotent": op.is_idempotent(), "positive": op.is_positive(),
                      "unital": bimodule.expectation(bimodule._one(h, depth), args.dir) == bimodule._one(h, depth)}
        else:
            op = bimodule.transfer_matrix(h, None, args.dir, depth)
            low = bimodule._lowered(h, args.dir, depth)
            checks = {"positive": op.is_positive(),
                      "unital": bimodule.transfer(bimodule._one(h, depth), args.dir) == bimodule._one(h, low)}
        return {"matrix": _matrix_doc(op), "checks": checks}, all(checks.values()), {"dir": args.dir, "depth": depth}
    return run


def cmd_frame(model, args):
    h = model.handle
    depth = _depth(h, args.depth, default_sft=(2, 2))
    frame = bimodule.frame_compute(h, None, args.dir, depth)
    check = bimodule.frame_check(h, None, args.dir, depth)
    elements = [{"indicator": u.indicator, "weight_squared": u.weight_squared} for u in frame]
    return {"frame": elements, "check": check}, check["reconstructs"], {"dir": args.dir, "depth": depth}


TENSOR_BUDGET = 256


def _tensor_default(h):
    """(2, 2) when it yields at most TENSOR_BUDGET simple basis tensors, else (1, 1)."""
    if len(h.patterns((2, 2))) * len(h.patterns((1, 2))) <= TENSOR_BUDGET:
        return (2, 2)
    return (1, 1)


def cmd_prodsys(model, args):
    h = model.handle
    depth = _depth(h, args.depth)
    tdepth = _depth(h, args.tensor_depth, default_sft=None if h.is_circle else _tensor_default(h), default_span=2)
    comm = bimodule.check_commuting_expectations(h, None, depth)
    out = {"commuting": comm}
    ok = comm["commute"]
    if ok:
        out["phi"] = bimodule.phi_check(h, None, tdepth)
        out["flip"] = bimodule.flip_unitary_check(h, None, tdepth)
        ok = all(out["phi"][k] for k in ("inner_products_preserved", "phi_phi_inv_identity",
                                         "phi_inv_phi_identity")) and out["flip"]["preserved"]
    return out, ok, {"depth": depth, "tensor_depth": tdepth}


def cmd_groupoid(model, args):
    h = model.handle
    n = tuple(args.n)
    if h.is_circle:
        desc = groupoid.rn_algebra_description(h, n)
        return {"algebra": desc}, True, {"n": list(n)}
    depth = _depth(h, args.depth, default_sft=(n[0] + 1, n[1] + 1))
    desc = groupoid.rn_algebra_description(h, n, depth)
    classes = groupoid.rn_classes(h, n, depth)
    return {"algebra": desc.summary(), "classes": classes}, True, {"n": list(n), "depth": depth}


def cmd_convolve(model, args):
    h = model.handle
    depth = _depth(h, args.depth, default_sft=(2, 2), default_span=2)
    rep = bimodule.convolution_check(h, tuple(args.n), depth)
    return {"convolution": rep}, rep["agree"], {"n": list(args.n), "depth": depth}


def _diagram(model, args):
    h = model.handle
    chain = args.chain or ktheory.diagonal_chain(args.length)
    if h.kind == "kgraph":
        return ktheory.bratteli_from_kgraph(h.payload, chain), chain, None
    depth = None if h.is_circle else (tuple(args.depth) if args.depth else None)
    return ktheory.bratteli_build(h, chain, depth), chain, depth


def cmd_bratteli(model, args):
    d, chain, depth = _diagram(model, args)
    if args.diagram:
        Path(args.diagram).write_text(d.to_dot())
    return {"diagram": d, "consistent": d.consistency() is None}, True, \
        {"chain": [list(c) for c in chain], "depth": depth, "diagram_file": args.diagram}


def supernatural_text(sn):
    if not sn:
        return None
    return "·".join(f"{p}^∞" for p in sorted(sn, key=int))


def cmd_k0(model, args):
    d, chain, depth = _diagram(model, args)
    rep = ktheory.dimension_group_report(d)
    out = {"dimension_group": rep, "supernatural_text": supernatural_text(rep.supernatural), "diagram": d}
    return out, True, {"chain": [list(c) for c in chain], "depth": depth}


def cmd_simplicity(model, args):
    rep = ktheory.simplicity_report(model.handle, args.budget)
    return {"simplicity": rep}, True, {"budget": args.budget}


def cmd_report(model, args):
    sections, ok = {}, True
    h = model.handle
    jobs = [("validate", cmd_validate, {}),
            ("localhomeo_1", cmd_localhomeo, {"dir": 1, "window": None, "depth": None}),
            ("localhomeo_2", cmd_localhomeo, {"dir": 2, "window": None, "depth": None}),
            ("prodsys", cmd_prodsys, {"depth": (2, 2) if not h.is_circle else None, "tensor_depth": None}),
            ("frame_1", cmd_frame, {"dir": 1, "depth": None}),
            ("frame_2", cmd_frame, {"dir": 2, "depth": None}),
            ("groupoid", cmd_groupoid, {"n": (1, 0), "depth": None}),
            ("k0", cmd_k0, {"chain": None, "length": 3, "depth": None, "diagram": None}),
            ("simplicity", cmd_simplicity, {"budget": 1})]
    for name, fn, extra in jobs:
        ns = argparse.Namespace(**{**vars(args), **extra})
        try:
            result, good, params = fn(model, ns)
            sections[name] = {"parameters": params, "results": result, "ok": good}
            ok = ok and good
        except R2DError as exc:
            sections[name] = {"error": {"code": exc.code, "message": exc.message}}
            if exc.code != "not-locally-injective":
                ok = False
    return sections, ok, {"all": True}


COMMANDS = {
    "validate": cmd_validate,
    "patterns": cmd_patterns,
    "localhomeo": cmd_localhomeo,
    "expectation": cmd_operator("expectation"),
    "transfer": cmd_operator("transfer"),
    "frame": cmd_frame,
    "prodsys-check": cmd_prodsys,
    "groupoid": cmd_groupoid,
    "convolve-check": cmd_convolve,
    "bratteli": cmd_bratteli,
    "k0": cmd_k0,
    "simplicity": cmd_simplicity,
    "report": cmd_report,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="r2d", description="Finite-depth computations for rank-2 shift models.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--model", required=True, help=f"model file or bundled name ({', '.join(BUNDLED)})")
        p.add_argument("--out", help="write the report here instead of stdout")
        return p

    add("validate", "validate the model").add_argument("--depth", type=depth_arg)
    add("patterns", "enumerate admissible patterns").add_argument("--shape", type=pair, required=True)
    p = add("localhomeo", "local-injectivity verdict for one shift")
    p.add_argument("--dir", type=int, choices=(1, 2), default=1)
    p.add_argument("--window", type=pair_list, help="cells 'i,j;i,j'")
    p.add_argument("--depth", type=depth_arg)
    for name in ("expectation", "transfer"):
        p = add(name, f"{name} operator matrix")
        p.add_argument("--dir", type=int, choices=(1, 2), default=1)
        p.add_argument("--depth", type=depth_arg)
    p = add("frame", "Parseval frame and reconstruction check")
    p.add_argument("--dir", type=int, choices=(1, 2), default=1)
    p.add_argument("--depth", type=depth_arg)
    p = add("prodsys-check", "commuting expectations, Phi and flip")
    p.add_argument("--depth", type=depth_arg)
    p.add_argument("--tensor-depth", type=depth_arg)
    p = add("groupoid", "R_n classes and algebra description")
    p.add_argument("--n", type=pair, default=(1, 0))
    p.add_argument("--depth", type=depth_arg)
    p = add("convolve-check", "kernel convolution against two other evaluation paths")
    p.add_argument("--n", type=pair, default=(1, 0))
    p.add_argument("--depth", type=depth_arg)
    for name in ("bratteli", "k0"):
        p = add(name, "Bratteli diagram" if name == "bratteli" else "dimension-group invariants")
        p.add_argument("--chain", type=pair_list, help="increasing chain 'a,b;c,d;...'")
        p.add_argument("--length", type=int, default=4, help="diagonal chain length when --chain is absent")
        p.add_argument("--depth", type=depth_arg)
        p.add_argument("--diagram", help="write a Graphviz DOT file here")
    p = add("simplicity", "minimality and essential-freeness evidence")
    p.add_argument("--budget", type=int, default=2)
    p = add("report", "run every diagnostic")
    p.add_argument("--all", action="store_true", default=True)
    p.add_argument("--depth", type=depth_arg)
    return parser


def run(argv) -> tuple[int, str]:
    args = build_parser().parse_args(argv)
    doc = {"command": ["r2d", *argv]}
    try:
        model = load_model(args.model)
    except R2DError as exc:
        doc["error"] = {"code": exc.code, "message": exc.message}
        doc["status"] = "error"
        return 2, dumps(doc)
    h = model.handle
    doc["model"] = {"name": h.name, "kind": h.kind, "fingerprint": model.fingerprint}
    try:
        results, ok, params = COMMANDS[args.command](model, args)
    except R2DError as exc:
        doc["error"] = {"code": exc.code, "message": exc.message}
        doc["status"] = "error"
        return 1, dumps(doc)
    doc["parameters"] = params
    doc["results"] = results
    doc["status"] = "ok" if ok else "failed"
    return (0 if ok else 1), dumps(doc)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    code, text = run(argv)
    args = build_parser().parse_args(argv)
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
