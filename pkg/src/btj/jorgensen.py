"""The valuation form of Jorgensen's inequality: verdicts, certificates, the sharp case."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field as dc_field
from itertools import product

from .bttree import (
    DEFAULT_OVERLAP_RADIUS,
    End,
    Vertex,
    common_end_detail,
    displacement,
    fixed_ends,
    fixed_overlap_on_axis,
    neighbors,
    stabilizes_end_pair,
)
from .localfield import (
    AtLeast,
    Exact,
    FieldDesc,
    FieldKind,
    Indeterminate,
    IndeterminateError,
    PrecisionExhausted,
    Split,
    ValResult,
    quadratic_roots,
    val_exceeds,
    val_min,
    val_to_json,
)
from .sl2core import (
    Mat2,
    Order,
    classify,
    commutator,
    finite_order,
    finite_order_traces,
    jorgensen_constant,
    mat_inv,
    mat_mul,
)

DEFAULT_VERTEX_RADIUS = 6
DEFAULT_WORD_LENGTH = 4
VERTEX_SEARCH_CAP = 20000

HOLDS = "InequalityHolds"
CERTIFICATE = "NotDiscreteCertificate"
FIXED_END = "FixedEndDetected"
INDETERMINATE = "Indeterminate"


def jorgensen_lhs(A: Mat2, B: Mat2) -> tuple[ValResult, ValResult, ValResult]:
    """``(v(tr^2 A - 4), v(tr[A,B] - 2), min)``."""
    tr = A.trace()
    v1 = (tr * tr - 4).valuation()
    v2 = (commutator(A, B).trace() - 2).valuation()
    return v1, v2, val_min(v1, v2)


@dataclass
class EqualityCheck:
    status: str  # "verified" | "refuted" | "indeterminate"
    reason: str = ""
    suggested_radius: int | None = None

    def to_json(self) -> dict:
        return {"status": self.status, "reason": self.reason, "suggested_radius": self.suggested_radius}


@dataclass
class JorgensenReport:
    tr_sq_minus_4: ValResult
    tr_comm_minus_2: ValResult
    minimum: ValResult
    m_k: int
    common_end: End | None
    common_end_status: str  # "found" | "none" | "none-caveated" | "indeterminate"
    verdict: str
    sharp: str | None = None
    equality: EqualityCheck | None = None
    caveats: list[str] = dc_field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "lhs": {
                "tr_sq_minus_4": val_to_json(self.tr_sq_minus_4),
                "tr_comm_minus_2": val_to_json(self.tr_comm_minus_2),
                "min": val_to_json(self.minimum),
            },
            "M_K": self.m_k,
            "common_end": None if self.common_end is None else self.common_end.to_json(),
            "common_end_status": self.common_end_status,
            "sharp": self.sharp,
            "equality": None if self.equality is None else self.equality.to_json(),
            "caveats": list(self.caveats),
        }


def jorgensen_test(A: Mat2, B: Mat2) -> JorgensenReport:
    v1, v2, vmin = jorgensen_lhs(A, B)
    mk = jorgensen_constant(A.field)
    caveats = []
    end = None
    try:
        end, exact = common_end_detail(A, B)
        if end is not None:
            status = "found"
            caveats.append("common end equality holds to working precision")
        else:
            status = "none" if exact else "none-caveated"
    except (IndeterminateError, PrecisionExhausted) as exc:
        status = "indeterminate"
        caveats.append(f"fixed ends unresolved: {exc}")

    exceeds = val_exceeds(vmin, mk)
    if exceeds is False:
        verdict = HOLDS
    elif isinstance(exceeds, Indeterminate):
        caveats.append(exceeds.reason)
        verdict = FIXED_END if status == "found" else INDETERMINATE
    elif status == "found":
        verdict = FIXED_END
    elif status == "none":
        verdict = CERTIFICATE
    else:
        verdict = INDETERMINATE
        if status == "none-caveated":
            caveats.append("fixed ends are distinct only to working precision; no certificate issued")
    for name, v in (("tr^2 A - 4", v1), ("tr[A,B] - 2", v2)):
        if isinstance(v, AtLeast):
            caveats.append(f"v({name}) is a lower bound: cancellation beyond precision {v.n}")
    return JorgensenReport(v1, v2, vmin, mk, end, status, verdict, caveats=caveats)


def equality_case_check(A: Mat2, B: Mat2, radius: int = DEFAULT_OVERLAP_RADIUS) -> EqualityCheck:
    """Check the geometric description of the equality case for the pair."""
    if A.is_central():
        return EqualityCheck("refuted", "A is central and fixes the whole tree")
    order = finite_order(A)
    if isinstance(order, Indeterminate):
        return EqualityCheck("indeterminate", f"order of A: {order.reason}")
    if not isinstance(order, Order):
        return EqualityCheck("refuted", f"A does not have finite order ({order.reason})")
    try:
        cls_b = classify(B)
    except IndeterminateError as exc:
        return EqualityCheck("indeterminate", exc.reason)
    if not cls_b.hyperbolic:
        return EqualityCheck("refuted", "B is not hyperbolic")
    try:
        overlap = fixed_overlap_on_axis(A, B, radius)
    except (IndeterminateError, PrecisionExhausted) as exc:
        return EqualityCheck("indeterminate", f"axis overlap unresolved: {exc}")
    if overlap.kind == "exceeds_radius":
        return EqualityCheck("indeterminate", f"fixed set of A reaches the radius {radius} boundary", 2 * radius)
    if overlap.kind == "empty":
        return EqualityCheck("refuted", "the fixed set of A misses the axis of B")
    if overlap.length != cls_b.length:
        return EqualityCheck("refuted", f"overlap has length {overlap.length}, translation length is {cls_b.length}")
    return EqualityCheck("verified", f"A has order {order.n}; overlap length {overlap.length} equals l(B) ({order.caveat})")


def sharp_test(
    A: Mat2, B: Mat2, assume_no_order_p: bool = False, radius: int = DEFAULT_OVERLAP_RADIUS
) -> JorgensenReport:
    """The inequality with bound 0, valid over Q_p (and char p without order-p elements)."""
    report = jorgensen_test(A, B)
    if A.field.kind is FieldKind.LAURENT:
        if not assume_no_order_p:
            report.sharp = "not-applicable"
            report.caveats.append("bound 0 needs a group without elements of order p; pass assume_no_order_p")
            return report
        report.caveats.append("assumed: the group contains no elements of order p (not verified)")
    vmin = report.minimum
    if isinstance(vmin, Exact) and vmin.n < 0:
        report.sharp = "strict"
    elif isinstance(vmin, Exact) and vmin.n == 0:
        report.sharp = "equality"
        report.equality = equality_case_check(A, B, radius)
    elif val_exceeds(vmin, 0) is True:
        report.sharp = "not-applicable"
        report.caveats.append("bound 0 exceeded: the group is not discrete or fixes an end")
    else:
        report.sharp = "indeterminate"
    return report


# --- equality-case search ----------------------------------------------------------


def _grid(field: FieldDesc, bound: int) -> list:
    p = field.p
    vals = [0]
    for k in range(bound + 1):
        for j in range(1, bound + 1):
            vals += [j * p**k, -j * p**k]
    return vals if bound > 0 else []


def _unipotent(field: FieldDesc, x, upper: bool) -> Mat2:
    one, zero = field.one(), field.zero()
    e = field.element(x) if x else zero
    return Mat2(one, e, zero, one, check=False) if upper else Mat2(one, zero, e, one, check=False)


def _conjugate(M: Mat2, D: Mat2) -> Mat2:
    return mat_mul(mat_mul(M, D), mat_inv(M))


def split_roots_of_unity(field: FieldDesc) -> list:
    """Roots of unity of order >= 3 lying in K, one per catalogue trace."""
    out = []
    for entry in finite_order_traces(field).entries:
        if entry.order < 3 or entry.flagged:
            continue
        try:
            roots = quadratic_roots(entry.trace)
        except IndeterminateError:
            continue
        if isinstance(roots, Split):
            out.append((entry.order, roots.lam))
    return out


def search_equality_case(field: FieldDesc, bound: int, radius: int = DEFAULT_OVERLAP_RADIUS) -> tuple[Mat2, Mat2] | None:
    """First grid pair realising equality in the bound-0 inequality, or None."""
    grid = _grid(field, bound)
    if not grid:
        return None
    zero = field.zero()
    C = Mat2(field.uniformizer_power(1), zero, zero, field.uniformizer_power(-1), check=False)
    for _, zeta in split_roots_of_unity(field):
        D = Mat2(zeta, zero, zero, 1 / zeta, check=False)
        for w in grid:
            A = _conjugate(_unipotent(field, w, upper=True), D)
            for y, z in product(grid, grid):
                N = mat_mul(_unipotent(field, y, upper=True), _unipotent(field, z, upper=False))
                B = _conjugate(N, C)
                if jorgensen_lhs(A, B)[2] != Exact(0):
                    continue
                if equality_case_check(A, B, radius).status == "verified":
                    return A, B
    return None


# --- non-elementary certificates ---------------------------------------------------


@dataclass(frozen=True)
class Certified:
    first: str
    second: str
    ends: tuple[End, End, End, End]

    def to_json(self) -> dict:
        return {"status": "certified", "words": [self.first, self.second], "ends": [e.to_json() for e in self.ends]}


@dataclass(frozen=True)
class Inconclusive:
    reason: str = ""

    def to_json(self) -> dict:
        return {"status": "inconclusive", "reason": self.reason}


def _reduced_words(gens: list[Mat2], names: list[str], max_len: int):
    """Freely reduced words by increasing length: yields (word string, matrix)."""
    letters = []
    for i, (g, nm) in enumerate(zip(gens, names)):
        letters.append((i, 1, nm, g))
        letters.append((i, -1, f"{nm}^-1", mat_inv(g)))
    frontier = [((), None, Mat2.identity(gens[0].field))]
    for _ in range(max_len):
        nxt = []
        for word, last, M in frontier:
            for i, s, nm, g in letters:
                if last is not None and last == (i, -s):
                    continue
                W = mat_mul(M, g)
                nxt.append((word + (nm,), (i, s), W))
                yield " ".join(word + (nm,)), W
        frontier = nxt


def _pairwise_distinct(ends) -> bool:
    return all(a.distinct_exactly(b) for i, a in enumerate(ends) for b in ends[i + 1 :])


def nonelementary_certificate(
    gens: list[Mat2], word_length: int = DEFAULT_WORD_LENGTH, names: list[str] | None = None
) -> Certified | Inconclusive:
    """Two hyperbolic words whose four axis ends are pairwise distinct."""
    if not gens:
        return Inconclusive("no generators")
    names = names or [chr(ord("A") + i) for i in range(len(gens))]
    axes: list[tuple[str, tuple[End, End]]] = []
    for word, W in _reduced_words(gens, names, word_length):
        try:
            if not classify(W).hyperbolic:
                continue
            fe = fixed_ends(W)
        except (IndeterminateError, PrecisionExhausted):
            continue
        if fe.kind != "two":
            continue
        ends = fe.ends
        for other, oends in axes:
            four = ends + oends
            if _pairwise_distinct(four):
                return Certified(other, word, oends + ends)
        axes.append((word, ends))
    return Inconclusive(f"no pair of hyperbolic words up to length {word_length} with four distinct ends")


# --- elementary evidence -----------------------------------------------------------


def _descend_to_fixed(g: Mat2, v: Vertex, limit: int) -> Vertex | None:
    """Walk from ``v`` to the nearest vertex fixed by elliptic ``g``."""
    d = displacement(g, v)
    steps = 0
    while d and steps < limit:
        for w in neighbors(v):
            dw = displacement(g, w)
            if dw < d:
                v, d = w, dw
                break
        else:
            return None
        steps += 1
    return v if d == 0 else None


def common_fixed_vertex(A: Mat2, B: Mat2, center: Vertex, radius: int) -> tuple[Vertex | None, bool]:
    """Search Fix(A) near ``center`` for a vertex fixed by B; second item flags truncation."""
    from .bttree import vertex_distance

    if classify(A).hyperbolic or classify(B).hyperbolic:
        return None, False
    start = _descend_to_fixed(A, center, 4 * radius + 64)
    if start is None or vertex_distance(center, start) > radius:
        return None, False
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        if displacement(B, v) == 0:
            return v, False
        if len(seen) >= VERTEX_SEARCH_CAP:
            return None, True
        for w in neighbors(v):
            if w not in seen and vertex_distance(center, w) <= radius and displacement(A, w) == 0:
                seen.add(w)
                queue.append(w)
    return None, False


@dataclass
class ElementaryEvidence:
    common_vertex: Vertex | None
    common_end: End | None
    stabilized_pair: tuple[End, End] | None
    caveats: list[str]

    @property
    def elementary_detected(self) -> bool:
        return self.common_vertex is not None or self.common_end is not None or self.stabilized_pair is not None

    def to_json(self) -> dict:
        return {
            "common_vertex": None if self.common_vertex is None else self.common_vertex.to_json(),
            "common_end": None if self.common_end is None else self.common_end.to_json(),
            "stabilized_pair": None if self.stabilized_pair is None else [e.to_json() for e in self.stabilized_pair],
            "elementary_detected": self.elementary_detected,
            "caveats": list(self.caveats),
        }


def elementary_evidence(A: Mat2, B: Mat2, radius: int = DEFAULT_VERTEX_RADIUS) -> ElementaryEvidence:
    """Observed elementary behaviour; absence of evidence proves nothing."""
    caveats = []
    base = Vertex.base(A.field)
    vertex = None
    try:
        vertex, truncated = common_fixed_vertex(A, B, base, radius)
        if truncated:
            caveats.append(f"vertex search stopped after {VERTEX_SEARCH_CAP} vertices")
    except (IndeterminateError, PrecisionExhausted) as exc:
        caveats.append(f"vertex search unresolved: {exc}")
    if vertex is None:
        caveats.append(f"no common fixed vertex within radius {radius} of the base vertex")
    end = None
    pair = None
    try:
        end, _ = common_end_detail(A, B)
        for g, h in ((A, B), (B, A)):
            fe = fixed_ends(g)
            if fe.kind == "two" and stabilizes_end_pair(h, *fe.ends):
                pair = fe.ends
                break
    except (IndeterminateError, PrecisionExhausted) as exc:
        caveats.append(f"end data unresolved: {exc}")
    if end is None and pair is None:
        caveats.append("end-pair search only tries fixed-end pairs of A and B")
    return ElementaryEvidence(vertex, end, pair, caveats)
