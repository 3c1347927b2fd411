"""Finite-horizon experiments on matrix sequences and the worked example suite."""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

from .bttree import Vertex, act_on_end, common_fixed_end, fixed_ends, fixes_vertex, hyperbolic_axis
from .jorgensen import CERTIFICATE, FIXED_END, HOLDS, Certified, jorgensen_test, nonelementary_certificate
from .literals import format_element, parse_matrix
from .localfield import (
    AtLeast,
    Exact,
    FieldDesc,
    Indeterminate,
    IndeterminateError,
    PrecisionExhausted,
    lf_is_square,
    val_to_json,
)
from .sl2core import Mat2, Order, classify, commutator, finite_order, mat_mul, mat_pow

DEFAULT_RANGE = (1, 12)
EXPONENT_CAP_POWER = 6


@dataclass(frozen=True)
class MatrixSequence:
    """``n -> matrix`` given by entry expressions in ``n``, plus a declared limit."""

    field: FieldDesc
    entries: tuple[tuple[str, str], tuple[str, str]]
    limit: tuple[tuple[str, str], tuple[str, str]]
    name: str = ""

    @classmethod
    def from_json(cls, obj, field: FieldDesc, name: str = "") -> MatrixSequence:
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict) or "entries" not in obj:
            raise ValueError('sequence literal needs an "entries" key')
        limit = obj.get("limit", obj["entries"])
        to_rows = lambda m: tuple(tuple(str(e) for e in row) for row in m)  # noqa: E731
        return cls(field, to_rows(obj["entries"]), to_rows(limit), name or obj.get("name", ""))

    @classmethod
    def constant(cls, rows, field: FieldDesc, name: str = "") -> MatrixSequence:
        rows = tuple(tuple(str(e) for e in row) for row in rows)
        return cls(field, rows, rows, name)

    def term(self, n: int) -> Mat2:
        return parse_matrix([list(r) for r in self.entries], self.field, n=n)

    def declared_limit(self) -> Mat2:
        return parse_matrix([list(r) for r in self.limit], self.field)

    def to_json(self) -> dict:
        return {"entries": [list(r) for r in self.entries], "limit": [list(r) for r in self.limit]}


def _class_json(M: Mat2) -> dict:
    try:
        c = classify(M)
    except IndeterminateError as exc:
        return {"kind": "indeterminate", "reason": exc.reason}
    return {"kind": c.kind, "length": c.length, "trace_valuation": val_to_json(c.trace_valuation)}


def convergence_gaps(seq: MatrixSequence, n0: int, n1: int) -> list[dict]:
    """Least valuation of ``term(n) - limit`` per index."""
    L = seq.declared_limit()
    out = []
    for n in range(n0, n1 + 1):
        M = seq.term(n)
        diffs = [x - y for x, y in zip(M.entries(), L.entries())]
        exact = [d.val for d in diffs if not d.is_zero_like]
        out.append({"n": n, "min_gap": min(exact) if exact else None})
    return out


def tail_classification(seq: MatrixSequence, n0: int = DEFAULT_RANGE[0], n1: int = DEFAULT_RANGE[1]) -> dict:
    limit_cls = _class_json(seq.declared_limit())
    terms = [{"n": n, **_class_json(seq.term(n))} for n in range(n0, n1 + 1)]
    stable_from = None
    for t in reversed(terms):
        if t["kind"] != limit_cls["kind"]:
            break
        stable_from = t["n"]
    if limit_cls["kind"] == "hyperbolic":
        prediction = "hyperbolic limit: terms are eventually hyperbolic"
        consistent = stable_from is not None
    else:
        prediction = "elliptic limit: terms are eventually elliptic when their lengths have a positive floor"
        consistent = stable_from is not None or all(t["kind"] == "hyperbolic" for t in terms)
    return {
        "sequence": seq.name,
        "limit": limit_cls,
        "terms": terms,
        "tail_matches_limit_from": stable_from,
        "prediction": prediction,
        "consistent": consistent,
    }


def _order_json(M: Mat2) -> dict:
    o = finite_order(M)
    if isinstance(o, Order):
        return {"order": o.n, "caveat": o.caveat}
    if isinstance(o, Indeterminate):
        return {"order": "indeterminate", "reason": o.reason}
    return {"order": "infinite", "reason": o.reason}


def trace_tail(seq: MatrixSequence, n0: int = DEFAULT_RANGE[0], n1: int = DEFAULT_RANGE[1]) -> dict:
    traces = []
    for n in range(n0, n1 + 1):
        M = seq.term(n)
        traces.append((n, M.trace(), _order_json(M)))
    constant_from = None
    last = traces[-1][1]
    for n, t, _ in reversed(traces):
        if not t.agrees(last):
            break
        constant_from = n
    constant = constant_from is not None and constant_from < traces[-1][0]
    infinite = [n for n, _, o in traces if o["order"] == "infinite"]
    notes = []
    if not constant:
        notes.append("traces are not eventually constant, so the cyclic groups cannot all be discrete")
    if infinite:
        notes.append(f"terms {infinite} are infinite-order elliptic or unipotent elements")
    return {
        "sequence": seq.name,
        "traces": [{"n": n, "trace": format_element(t), "order": o} for n, t, o in traces],
        "constant_from": constant_from if constant else None,
        "eventually_constant": constant,
        "notes": notes,
    }


def common_end_tail(
    seq_a: MatrixSequence, seq_b: MatrixSequence, n0: int = DEFAULT_RANGE[0], n1: int = DEFAULT_RANGE[1]
) -> dict:
    """Common fixed ends of ``(A_n, B_n)`` against whether lim A fixes an end of Ax(lim B)."""
    LA, LB = seq_a.declared_limit(), seq_b.declared_limit()
    try:
        hyperbolic = classify(LB).hyperbolic
    except IndeterminateError:
        hyperbolic = False
    if not hyperbolic:
        return {"precondition": "failed", "reason": "the limit of the second sequence is not hyperbolic"}
    axis = hyperbolic_axis(LB)
    limit_end = None
    for e in (axis.attracting, axis.repelling):
        if act_on_end(LA, e).agrees(e):
            limit_end = e
            break
    rows = []
    for n in range(n0, n1 + 1):
        try:
            e = common_fixed_end(seq_a.term(n), seq_b.term(n))
            rows.append({"n": n, "common_end": None if e is None else e.to_json()})
        except (IndeterminateError, PrecisionExhausted) as exc:
            rows.append({"n": n, "common_end": "indeterminate", "reason": str(exc)})
    with_end = [r["n"] for r in rows if r["common_end"] not in (None, "indeterminate")]
    return {
        "precondition": "ok",
        "limit_fixes_axis_end": limit_end is not None,
        "limit_axis_end": None if limit_end is None else limit_end.to_json(),
        "terms": rows,
        "terms_with_common_end": with_end,
        "tail_has_common_end": bool(rows) and rows[-1]["common_end"] not in (None, "indeterminate"),
    }


def power_convergence_probe(g: Mat2, exponents: list[int]) -> dict:
    """Valuations of the entries of ``g^k - I``; growth along ``k = p^m`` signals non-discreteness."""
    cap = g.field.p**EXPONENT_CAP_POWER
    rows = []
    I = Mat2.identity(g.field)
    for k in exponents:
        if abs(k) > cap:
            raise PrecisionExhausted(f"exponent {k} exceeds the cap p^{EXPONENT_CAP_POWER} = {cap}")
        P = mat_pow(g, k)
        vals = [(x - y).valuation() for x, y in zip(P.entries(), I.entries())]
        exact = [v.n for v in vals if isinstance(v, Exact)]
        if exact:
            low = Exact(min(exact))
            # a zero-like entry below the exact minimum leaves the minimum unresolved
            if any(isinstance(v, AtLeast) and v.n < low.n for v in vals):
                low = AtLeast(min(v.n for v in vals))
        else:
            low = AtLeast(min(v.n for v in vals))
        rows.append({"k": k, "entry_valuations": [val_to_json(v) for v in vals], "min": val_to_json(low)})
    mins = [r["min"].get("exact", r["min"].get("at_least")) for r in rows]
    return {
        "exponents": list(exponents),
        "rows": rows,
        "strictly_increasing": all(a < b for a, b in zip(mins, mins[1:])),
    }


# --- worked examples ------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    status: str  # "pass" | "fail" | "indeterminate"
    details: dict = dc_field(default_factory=dict)
    note: str | None = None

    def to_json(self) -> dict:
        out = {"name": self.name, "status": self.status, "details": self.details}
        if self.note:
            out["note"] = self.note
        return out


STABILISER_NOTE = (
    "inconsistent with the finite vertex-stabiliser criterion if <D_n> were discrete: "
    "distinct powers D_n^(p^m) converge to I while fixing a common vertex"
)


def _ok(flag: bool) -> str:
    return "pass" if flag else "fail"


def _guard(name: str, fn) -> CheckResult:
    try:
        return fn()
    except (IndeterminateError, PrecisionExhausted) as exc:
        return CheckResult(name, "indeterminate", {"reason": str(exc)})


def _mat_key(M: Mat2, absprec: int) -> tuple:
    return tuple(format_element(x.reduce_mod(absprec)) for x in M.entries())


def generated_group(gens: list[Mat2], limit: int = 10000, absprec: int = 32) -> list[Mat2] | None:
    """Closure of ``gens`` under multiplication.

    Returns None past ``limit`` elements, or once an entry is no longer known
    to ``absprec`` digits (a finite group has bounded entries, so this only
    happens for infinite ones).
    """
    I = Mat2.identity(gens[0].field)
    seen = {_mat_key(I, absprec): I}
    frontier = [I]
    while frontier:
        nxt = []
        for M in frontier:
            for g in gens:
                W = mat_mul(M, g)
                try:
                    key = _mat_key(W, absprec)
                except PrecisionExhausted:
                    return None
                if key not in seen:
                    seen[key] = W
                    nxt.append(W)
                    if len(seen) > limit:
                        return None
        frontier = nxt
    return list(seen.values())


def unipotent_pair_group(p: int, precision: int = 32) -> CheckResult:
    name = "two unitriangular elements over F_p((t)) generate a finite group fixing the base vertex"
    F = FieldDesc.parse(f"laurent:{p}", precision)

    def run():
        X1 = parse_matrix([["1", "1"], ["0", "1"]], F)
        X2 = parse_matrix([["1", "t"], ["0", "1"]], F)
        group = generated_group([X1, X2])
        base = Vertex.base(F)
        order = None if group is None else len(group)
        fixes = group is not None and all(fixes_vertex(g, base) for g in group)
        orders = [finite_order(X).n if isinstance(finite_order(X), Order) else None for X in (X1, X2)]
        return CheckResult(
            name,
            _ok(order == p * p and fixes and orders == [p, p]),
            {"p": p, "group_order": order, "expected": p * p, "all_fix_base": fixes, "generator_orders": orders},
        )

    return _guard(name, run)


def triangular_pair_checks(p: int, precision: int = 64, n_max: int = 3) -> list[CheckResult]:
    F = FieldDesc.parse(f"padic:{p}", precision)
    B = parse_matrix([["p", "0"], ["1", "1/p"]], F)
    C = parse_matrix([["p", "0"], ["0", "1/p"]], F)
    out = []
    for n in range(1, n_max + 1):
        A = parse_matrix([["1", "p^n"], ["0", "1"]], F, n=n)

        def cert(A=A, n=n):
            r = jorgensen_test(A, B)
            expected = CERTIFICATE if 2 * n > r.m_k else HOLDS
            ok = r.verdict == expected and r.tr_comm_minus_2 == Exact(2 * n)
            return CheckResult(f"upper unipotent A_{n} with B: expect {expected}", _ok(ok), r.to_json())

        def fixed(A=A, n=n):
            r = jorgensen_test(A, C)
            ok = r.verdict == FIXED_END and r.common_end is not None and r.common_end.is_infinity
            return CheckResult(f"upper unipotent A_{n} with diagonal C: common end at infinity", _ok(ok), r.to_json())

        out.append(_guard(f"certificate A_{n}", cert))
        out.append(_guard(f"fixed end A_{n}", fixed))

    def nonelem():
        A1 = parse_matrix([["1", "p"], ["0", "1"]], F)
        c = nonelementary_certificate([A1, B], names=["A_1", "B"])
        return CheckResult("A_1 and B generate a non-elementary group", _ok(isinstance(c, Certified)), c.to_json())

    out.append(_guard("non-elementary", nonelem))
    out.append(_guard("D_n probe", lambda: diagonal_power_probe(F)))
    return out


def diagonal_power_probe(F: FieldDesc, n_max: int = 4, m_max: int = 4) -> CheckResult:
    """Powers ``D_n^(p^m)`` approach I: the computed data behind the stabiliser note."""
    p = F.p
    table = []
    claimed_bound_holds = True
    increasing = True
    for n in range(1, n_max + 1):
        D = parse_matrix([["1+p^n", "1"], ["0", "1/(1+p^n)"]], F, n=n)
        exps = [p**m for m in range(1, m_max + 1)]
        probe = power_convergence_probe(D, exps)
        mins = [r["min"].get("exact") for r in probe["rows"]]
        increasing = increasing and probe["strictly_increasing"]
        for m, v in zip(range(1, m_max + 1), mins):
            if v is None or v < n + m:
                claimed_bound_holds = False
        table.append({"n": n, "min_valuations": mins, "exponents": exps})
    return CheckResult(
        "powers of D_n approach the identity",
        _ok(increasing),
        {
            "probe": table,
            "powers_converge_to_identity": increasing,
            "lower_bound_n_plus_m_holds": claimed_bound_holds,
            "discrepancy": True,
        },
        note=STABILISER_NOTE,
    )


def commuting_pair_checks(precision: int = 64) -> list[CheckResult]:
    F = FieldDesc.parse("padic:7", precision)
    out = []

    def build():
        A = parse_matrix([["0", "-1"], ["1", "0"]], F)
        B = parse_matrix([["2", "-sqrt(-3)"], ["sqrt(-3)", "2"]], F)
        return A, B

    def commute():
        A, B = build()
        ok = mat_mul(A, B).agrees(mat_mul(B, A))
        return CheckResult("commuting pair over Q_7: AB = BA", _ok(ok), {})

    def trace2():
        A, B = build()
        d = commutator(A, B).trace() - 2
        return CheckResult("commuting pair: tr[A,B] agrees with 2", _ok(d.is_zero_like), {"tr_minus_2": val_to_json(d.valuation())})

    def squares():
        res = {str(x): lf_is_square(F.element(x)) for x in (-4, 12)}
        return CheckResult(
            "commuting pair: discriminants -4 and 12 are non-squares",
            _ok(all(v is False for v in res.values())),
            {k: v if isinstance(v, bool) else "indeterminate" for k, v in res.items()},
        )

    def no_ends():
        A, B = build()
        fa, fb = fixed_ends(A), fixed_ends(B)
        return CheckResult(
            "commuting pair: neither element fixes an end",
            _ok(fa.kind == "none" and fb.kind == "none"),
            {"A": fa.to_json(), "B": fb.to_json()},
        )

    for nm, fn in (("commute", commute), ("trace", trace2), ("squares", squares), ("ends", no_ends)):
        out.append(_guard(nm, fn))
    return out


def amalgam_checks(p: int, precision: int = 64) -> list[CheckResult]:
    F = FieldDesc.parse(f"padic:{p}", precision)
    S = parse_matrix([["0", "-1"], ["1", "0"]], F)
    T = parse_matrix([["0", "-1"], ["1", "1"]], F)
    T2 = parse_matrix([["0", "-1/p"], ["p", "1"]], F)
    out = []

    def orders():
        got = [_order_json(M)["order"] for M in (S, T, T2)]
        return CheckResult("order-4 and order-6 generators", _ok(got == [4, 6, 6]), {"orders": got})

    def integral_fix():
        base = Vertex.base(F)
        return CheckResult("integral pair fixes the base vertex", _ok(fixes_vertex(S, base) and fixes_vertex(T, base)), {})

    def cert():
        c = nonelementary_certificate([S, T2], 3, names=["S", "T"])
        return CheckResult("conjugated pair is non-elementary", _ok(isinstance(c, Certified)), c.to_json())

    def holds():
        r = jorgensen_test(S, T2)
        return CheckResult(
            "conjugated pair satisfies the inequality",
            _ok(r.verdict == HOLDS and r.minimum == Exact(-2)),
            r.to_json(),
        )

    for nm, fn in (("orders", orders), ("fix", integral_fix), ("cert", cert), ("holds", holds)):
        out.append(_guard(nm, fn))
    return out


def approximating_sequence(F: FieldDesc) -> tuple[MatrixSequence, MatrixSequence]:
    seq_a = MatrixSequence(F, (("1+p^n", "1"), ("p^n", "1")), (("1", "1"), ("0", "1")), "A_n")
    seq_b = MatrixSequence.constant([["p", "0"], ["0", "1/p"]], F, "B")
    return seq_a, seq_b


def lost_end_checks(p: int, precision: int = 64, n_max: int = 12) -> CheckResult:
    name = "approximating elliptic sequence loses the fixed end of the limit"
    F = FieldDesc.parse(f"padic:{p}", precision)

    def run():
        seq_a, seq_b = approximating_sequence(F)
        rep = common_end_tail(seq_a, seq_b, 1, n_max)
        ok = rep["precondition"] == "ok" and rep["limit_fixes_axis_end"] and not rep["terms_with_common_end"]
        return CheckResult(name, _ok(ok), rep)

    return _guard(name, run)


def run_examples(field: FieldDesc) -> list[CheckResult]:
    """Every worked example, at the residue characteristic of ``field`` where it applies."""
    p = field.p
    prec = field.default_precision
    checks = [unipotent_pair_group(p, min(prec, 32))]
    checks += triangular_pair_checks(p, prec)
    checks += commuting_pair_checks(prec)
    checks += amalgam_checks(p, prec)
    checks.append(lost_end_checks(p, prec))
    return checks


__all__ = [
    "CheckResult",
    "MatrixSequence",
    "common_end_tail",
    "convergence_gaps",
    "generated_group",
    "power_convergence_probe",
    "approximating_sequence",
    "run_examples",
    "tail_classification",
    "trace_tail",
]
