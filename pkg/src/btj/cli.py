"""Command-line front end: ``btj <command> [options] [inputs...]``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .bttree import (
    Vertex,
    apply,
    displacement,
    fixed_ends,
    fixed_overlap_on_axis,
    hyperbolic_axis,
)
from .convergence import (
    MatrixSequence,
    common_end_tail,
    power_convergence_probe,
    run_examples,
    tail_classification,
    trace_tail,
)
from .jorgensen import (
    DEFAULT_WORD_LENGTH,
    INDETERMINATE,
    Certified,
    elementary_evidence,
    jorgensen_test,
    nonelementary_certificate,
    sharp_test,
)
from .literals import LiteralError, format_element, format_matrix, parse_element, parse_matrix
from .localfield import FieldDesc, IndeterminateError, PrecisionExhausted, val_to_json
from .sl2core import (
    DeterminantError,
    InfiniteOrder,
    Order,
    classify,
    finite_order,
    finite_order_traces,
    jorgensen_constant,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INDETERMINATE = 2

DEFAULT_PRECISION = 64
DEFAULT_RADIUS = 8


class InputError(ValueError):
    pass


def _default_precision() -> int:
    env = os.environ.get("BTJ_PRECISION")
    if env is None:
        return DEFAULT_PRECISION
    try:
        return int(env)
    except ValueError:
        raise InputError(f"BTJ_PRECISION must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--field", default="padic:5", help="field such as padic:7 or laurent:5")
    common.add_argument("--precision", type=int, default=None, help="significant digits (>= 8; env BTJ_PRECISION)")
    common.add_argument("--radius", type=int, default=DEFAULT_RADIUS, help="search radius in the tree (>= 2)")
    common.add_argument("--json", action="store_true", help="emit a single JSON object")
    common.add_argument("--input", metavar="FILE", help="JSON file holding a list of input literals")

    parser = argparse.ArgumentParser(prog="btj", description="SL_2 over local fields and Bruhat-Tits trees.")
    parser.add_argument("--version", action="version", version=f"btj {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, nargs="*"):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("inputs", nargs=nargs, help="matrix or sequence literals (JSON)")
        return p

    add("classify", "classify a matrix as elliptic or hyperbolic")
    add("jorgensen", "evaluate the inequality for a pair (A, B)")
    p = add("sharp", "the bound-0 inequality and its equality case")
    p.add_argument("--assume-no-order-p", action="store_true", help="Laurent fields: assume no elements of order p")
    p = add("certify", "search for a non-elementary certificate")
    p.add_argument("--word-length", type=int, default=DEFAULT_WORD_LENGTH)
    p = add("tree", "tree action of a matrix, optionally against the axis of a second one")
    p.add_argument("--vertex", help='vertex literal {"level": m, "offset": "..."}')
    add("mk", "the constant M_K and the finite-order trace catalogue")
    add("order", "finite order detection")
    add("examples", "run the worked example suite")
    p = add("converge", "tail experiments on matrix sequences")
    p.add_argument("--range", nargs=2, type=int, default=[1, 12], metavar=("N0", "N1"))
    p = add("probe", "valuations of g^k - I")
    p.add_argument("--exponents", type=int, nargs="+", help="default: p, p^2, p^3, p^4")
    return parser


# --- input handling --------------------------------------------------------------


def _gather_inputs(args) -> list:
    items = list(args.inputs)
    if args.input:
        try:
            with open(args.input, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read {args.input}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.input} is not valid JSON: {exc.msg} at position {exc.pos}") from None
        if isinstance(data, dict) and "inputs" in data:
            data = data["inputs"]
        if not isinstance(data, list):
            raise InputError(f'{args.input} must hold a JSON list of inputs or {{"inputs": [...]}}')
        items += data
    return items


def _matrices(args, field: FieldDesc, count: int | None = None, minimum: int = 1) -> list:
    items = _gather_inputs(args)
    if count is not None and len(items) != count:
        raise InputError(f"{args.command} expects {count} matrix literal(s), got {len(items)}")
    if len(items) < minimum:
        raise InputError(f"{args.command} expects at least {minimum} matrix literal(s)")
    out = []
    for item in items:
        try:
            out.append(parse_matrix(item, field))
        except DeterminantError as exc:
            raise InputError(f"matrix {item!r}: {exc}") from None
    args.parsed = out
    return out


def _sequences(args, field: FieldDesc) -> list[MatrixSequence]:
    items = _gather_inputs(args)
    if not 1 <= len(items) <= 2:
        raise InputError("converge expects one or two sequence literals")
    out = []
    for i, item in enumerate(items):
        try:
            seq = MatrixSequence.from_json(item, field, name=f"seq{i + 1}")
        except json.JSONDecodeError as exc:
            raise InputError(f"sequence literal is not valid JSON: {exc.msg} at position {exc.pos}") from None
        seq.declared_limit()
        out.append(seq)
    return out


# --- commands --------------------------------------------------------------------


def _class_info(M) -> dict:
    c = classify(M)
    return {"kind": c.kind, "translation_length": c.length, "trace_valuation": val_to_json(c.trace_valuation)}


def _order_info(M) -> dict:
    o = finite_order(M)
    if isinstance(o, Order):
        return {"result": "Order", "n": o.n, "caveat": o.caveat}
    if isinstance(o, InfiniteOrder):
        return {"result": "InfiniteOrder", "reason": o.reason}
    return {"result": "Indeterminate", "reason": o.reason}


def cmd_classify(args, field):
    (M,) = _matrices(args, field, 1)
    info = _class_info(M)
    out = {"verdict": info["kind"], "classification": info, "trace": format_element(M.trace())}
    try:
        out["fixed_ends"] = fixed_ends(M).to_json()
    except IndeterminateError as exc:
        out["fixed_ends"] = {"kind": "indeterminate", "reason": exc.reason}
    if info["kind"] == "hyperbolic":
        out["axis"] = hyperbolic_axis(M).to_json()
    return out, [M]


def cmd_jorgensen(args, field):
    A, B = _matrices(args, field, 2)
    rep = jorgensen_test(A, B).to_json()
    rep["elementary_evidence"] = elementary_evidence(A, B, min(args.radius, 6)).to_json()
    return rep, [A, B]


def cmd_sharp(args, field):
    A, B = _matrices(args, field, 2)
    return sharp_test(A, B, assume_no_order_p=args.assume_no_order_p, radius=args.radius).to_json(), [A, B]


def cmd_certify(args, field):
    gens = _matrices(args, field)
    cert = nonelementary_certificate(gens, args.word_length)
    out = {"verdict": "Certified" if isinstance(cert, Certified) else "Inconclusive", "certificate": cert.to_json()}
    return out, gens


def _parse_vertex(text: str, field: FieldDesc) -> Vertex:
    try:
        obj = json.loads(text)
        level = obj["level"]
        offset = parse_element(obj.get("offset", "0"), field, max(field.default_precision, abs(level) + 1))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f'vertex literal must be {{"level": m, "offset": "..."}}: {exc}') from None
    if not isinstance(level, int):
        raise InputError("vertex level must be an integer")
    return Vertex.make(level, offset)


def cmd_tree(args, field):
    mats = _matrices(args, field)
    if len(mats) > 2:
        raise InputError("tree expects one or two matrix literals")
    M = mats[0]
    v = _parse_vertex(args.vertex, field) if args.vertex else Vertex.base(field)
    image = apply(M, v)
    info = _class_info(M)
    out = {
        "verdict": info["kind"],
        "vertex": v.to_json(),
        "image": image.to_json(),
        "displacement": displacement(M, v),
        "classification": info,
        "fixed_ends": fixed_ends(M).to_json(),
    }
    if info["kind"] == "hyperbolic":
        out["axis"] = hyperbolic_axis(M).to_json()
    if len(mats) == 2:
        out["overlap_with_axis_of_second"] = fixed_overlap_on_axis(M, mats[1], args.radius).to_json()
    return out, mats


def cmd_mk(args, field):
    if _gather_inputs(args):
        raise InputError("mk takes no inputs")
    cat = finite_order_traces(field)
    entries = [
        {"order": e.order, "trace": format_element(e.trace), "v_trace_minus_2": e.val_t_minus_2, "excluded": e.flagged}
        for e in cat.entries
    ]
    mk = jorgensen_constant(field)
    return {"verdict": "Computed", "M_K": mk, "catalog": entries}, []


def cmd_order(args, field):
    (M,) = _matrices(args, field, 1)
    info = _order_info(M)
    return {"verdict": info["result"], "order": info}, [M]


def cmd_examples(args, field):
    if _gather_inputs(args):
        raise InputError("examples takes no inputs")
    checks = run_examples(field)
    statuses = {c.status for c in checks}
    if "fail" in statuses:
        verdict = "SomeFailed"
    elif "indeterminate" in statuses:
        verdict = INDETERMINATE
    else:
        verdict = "AllPass"
    return {"verdict": verdict, "checks": [c.to_json() for c in checks]}, []


def cmd_converge(args, field):
    seqs = _sequences(args, field)
    n0, n1 = args.range
    if n1 < n0:
        raise InputError("--range needs N0 <= N1")
    out = {
        "verdict": "Computed",
        "sequences": [s.to_json() for s in seqs],
        "tail_classification": [tail_classification(s, n0, n1) for s in seqs],
        "trace_tail": [trace_tail(s, n0, n1) for s in seqs],
    }
    if len(seqs) == 2:
        out["common_end_tail"] = common_end_tail(seqs[0], seqs[1], n0, n1)
    return out, []


def cmd_probe(args, field):
    (M,) = _matrices(args, field, 1)
    exps = args.exponents or [field.p**m for m in range(1, 5)]
    rep = power_convergence_probe(M, exps)
    return {"verdict": "Converging" if rep["strictly_increasing"] else "NotConverging", **rep}, [M]


COMMANDS = {
    "classify": cmd_classify,
    "jorgensen": cmd_jorgensen,
    "sharp": cmd_sharp,
    "certify": cmd_certify,
    "tree": cmd_tree,
    "mk": cmd_mk,
    "order": cmd_order,
    "examples": cmd_examples,
    "converge": cmd_converge,
    "probe": cmd_probe,
}


# --- output ----------------------------------------------------------------------


def _text(obj, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    for key, val in obj.items():
        if isinstance(val, dict):
            lines.append(f"{pad}{key}:")
            lines += _text(val, indent + 1)
        elif isinstance(val, list) and val and all(isinstance(x, dict) for x in val):
            lines.append(f"{pad}{key}:")
            for x in val:
                sub = _text(x, indent + 2)
                lines.append(pad + "  - " + sub[0].lstrip())
                lines += sub[1:]
        else:
            lines.append(f"{pad}{key}: {json.dumps(val) if not isinstance(val, str) else val}")
    return lines


def _emit(obj: dict, as_json: bool, stream) -> None:
    if as_json:
        stream.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    else:
        head = {"verdict": obj["verdict"]}
        head.update((k, v) for k, v in obj.items() if k != "verdict")
        stream.write("\n".join(_text(head)) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = sys.stdout
    try:
        precision = args.precision if args.precision is not None else _default_precision()
        if precision < 8:
            raise InputError(f"--precision must be at least 8, got {precision}")
        if args.radius < 2:
            raise InputError(f"--radius must be at least 2, got {args.radius}")
        try:
            field = FieldDesc.parse(args.field, precision)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        report, mats = COMMANDS[args.command](args, field)
    except (InputError, LiteralError) as exc:
        print(f"btj: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IndeterminateError, PrecisionExhausted) as exc:
        report, mats = {"verdict": INDETERMINATE, "reason": str(exc)}, getattr(args, "parsed", [])
    report = {
        **report,
        "command": args.command,
        "field": str(field),
        "precision": field.default_precision,
        "inputs": [format_matrix(m) for m in mats],
    }
    _emit(report, args.json, out)
    return EXIT_INDETERMINATE if report["verdict"] == INDETERMINATE else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
