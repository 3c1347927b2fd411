"""SL_2 over a local field: traces, classification, finite-order catalogue."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from sympy import divisors

from .localfield import (
    AtLeast,
    Exact,
    FieldDesc,
    FieldKind,
    Indeterminate,
    IndeterminateError,
    LFElement,
    Split,
    ValResult,
    quadratic_roots,
)


class DeterminantError(ValueError):
    pass


class Mat2:
    """A determinant-one 2x2 matrix ``[[a, b], [c, d]]``."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: LFElement, b: LFElement, c: LFElement, d: LFElement, *, check: bool = True):
        self.a, self.b, self.c, self.d = a, b, c, d
        if check and not (a * d - b * c - 1).is_zero_like:
            raise DeterminantError("determinant does not agree with 1 at working precision")

    @property
    def field(self) -> FieldDesc:
        return self.a.field

    @classmethod
    def identity(cls, field: FieldDesc, prec: int | None = None) -> Mat2:
        one, zero = field.one(prec), field.zero(prec)
        return cls(one, zero, zero, one, check=False)

    @classmethod
    def from_values(cls, field: FieldDesc, rows, prec: int | None = None) -> Mat2:
        """Build from ints, Fractions, literals or LFElements."""
        from .literals import parse_element

        vals = []
        for row in rows:
            for e in row:
                if isinstance(e, LFElement):
                    vals.append(e)
                elif isinstance(e, Fraction):
                    vals.append(field.element(e, prec=prec))
                else:
                    vals.append(parse_element(e, field, prec))
        return cls(*vals)

    def trace(self) -> LFElement:
        return self.a + self.d

    def entries(self) -> tuple[LFElement, LFElement, LFElement, LFElement]:
        return self.a, self.b, self.c, self.d

    def __matmul__(self, other: Mat2) -> Mat2:
        return mat_mul(self, other)

    def __neg__(self) -> Mat2:
        return Mat2(-self.a, -self.b, -self.c, -self.d, check=False)

    def agrees(self, other: Mat2) -> bool:
        return all(x.agrees(y) for x, y in zip(self.entries(), other.entries()))

    def is_identity(self) -> bool:
        return self.agrees(Mat2.identity(self.field))

    def is_central(self) -> bool:
        """True for +-I at working precision."""
        return (
            self.b.is_zero_like
            and self.c.is_zero_like
            and (self.a - self.d).is_zero_like
            and ((self.a - 1).is_zero_like or (self.a + 1).is_zero_like)
        )

    def __repr__(self):
        from .literals import format_short

        return "Mat2([[{}, {}], [{}, {}]])".format(*(format_short(x, 4) for x in self.entries()))


def mat_mul(A: Mat2, B: Mat2) -> Mat2:
    return Mat2(
        A.a * B.a + A.b * B.c,
        A.a * B.b + A.b * B.d,
        A.c * B.a + A.d * B.c,
        A.c * B.b + A.d * B.d,
        check=False,
    )


def mat_inv(A: Mat2) -> Mat2:
    return Mat2(A.d, -A.b, -A.c, A.a, check=False)


def mat_pow(A: Mat2, k: int) -> Mat2:
    if k < 0:
        return mat_pow(mat_inv(A), -k)
    result = Mat2.identity(A.field)
    base = A
    while k:
        if k & 1:
            result = mat_mul(result, base)
        k >>= 1
        if k:
            base = mat_mul(base, base)
    return result


def commutator(A: Mat2, B: Mat2) -> Mat2:
    """``A B A^-1 B^-1``."""
    return mat_mul(mat_mul(A, B), mat_mul(mat_inv(A), mat_inv(B)))


def companion(t: LFElement) -> Mat2:
    """``[[0, -1], [1, t]]``: determinant 1 and trace t."""
    f = t.field
    return Mat2(f.zero(), -f.one(), f.one(), t, check=False)


# --- classification -------------------------------------------------------------


@dataclass(frozen=True)
class ElementClass:
    kind: str  # "hyperbolic" | "elliptic"
    length: int
    trace_valuation: ValResult

    @property
    def hyperbolic(self) -> bool:
        return self.kind == "hyperbolic"


def translation_length(tr_val: ValResult) -> int:
    """Translation length on the tree from the trace valuation: ``-2 min(0, v(tr))``."""
    if isinstance(tr_val, AtLeast):
        if tr_val.n < 0:
            raise IndeterminateError(f"trace valuation only known to be >= {tr_val.n}")
        return 0
    return -2 * min(0, tr_val.n)


def classify(A: Mat2) -> ElementClass:
    v = A.trace().valuation()
    length = translation_length(v)
    return ElementClass("hyperbolic" if length else "elliptic", length, v)


# --- finite order ---------------------------------------------------------------


def candidate_orders(field: FieldDesc) -> set[int]:
    """Orders of finite-order elements of SL_2(K)."""
    p = field.p
    orders = set(divisors(p - 1)) | set(divisors(p + 1))
    if field.kind is FieldKind.LAURENT:
        # unipotent elements, and -1 times them when -1 != 1
        orders.add(p)
        if p != 2:
            orders.add(2 * p)
        return orders
    # Q_p: p-power roots of unity generating an extension of degree <= 2
    # whose nontrivial automorphism inverts them
    orders.add(2)
    if p == 2:
        orders |= {4, 6}
    if p == 3:
        orders |= {3, 6}
    return orders


@dataclass(frozen=True)
class CatalogEntry:
    order: int
    trace: LFElement
    val_t_minus_2: int | None  # None when the trace is 2

    @property
    def flagged(self) -> bool:
        return self.val_t_minus_2 is None


@dataclass(frozen=True)
class FiniteOrderCatalog:
    field: FieldDesc
    entries: tuple[CatalogEntry, ...]

    def traces_for(self, order: int) -> list[LFElement]:
        return [e.trace for e in self.entries if e.order == order]


_RATIONAL_TRACES = {1: 2, 2: -2, 3: -1, 4: 0, 6: 1}


def _residue_order(p: int, tbar: int) -> int:
    """Order of the companion matrix of ``tbar`` in SL_2(F_p)."""
    M = (0, p - 1, 1, tbar % p)
    X, k = M, 1
    while X != (1, 0, 0, 1):
        a, b, c, d = X
        X = ((a * M[0] + b * M[2]) % p, (a * M[1] + b * M[3]) % p, (c * M[0] + d * M[2]) % p, (c * M[1] + d * M[3]) % p)
        k += 1
    return k


def _lift_trace(field: FieldDesc, tbar: int, n: int, prec: int) -> LFElement:
    """Hensel-lift a simple residue root of ``U_{n-1}`` (whose roots include the order-n traces)."""
    mod = field.p**prec

    def cheb(t):
        u_prev, u, du_prev, du = 0, 1, 0, 0
        for _ in range(n - 1):
            u_prev, u, du_prev, du = u, (t * u - u_prev) % mod, du, (u + t * du - du_prev) % mod
        return u, du

    t = tbar
    for _ in range(prec.bit_length() + 2):
        u, du = cheb(t)
        if u == 0:
            break
        t = (t - u * pow(du, -1, mod)) % mod
    return field.element(t, prec=prec)


@lru_cache(maxsize=None)
def finite_order_traces(field: FieldDesc, prec: int | None = None) -> FiniteOrderCatalog:
    """Every (order, trace) pair realised by a finite-order element of SL_2(K)."""
    prec = prec or field.default_precision
    p = field.p
    entries: list[CatalogEntry] = []

    def add(n: int, t: LFElement):
        d = t - 2
        entries.append(CatalogEntry(n, t, None if d.is_zero_like else d.val))

    orders = sorted(candidate_orders(field))
    if field.kind is FieldKind.LAURENT:
        by_order: dict[int, list[int]] = {}
        for tbar in range(p):
            by_order.setdefault(_residue_order(p, tbar), []).append(tbar)
        for n in orders:
            if n == 1:
                add(1, field.element(2, prec=prec))
            elif n == p:
                add(p, field.element(2, prec=prec))
            elif n == 2 * p or n == 2:
                add(n, field.element(-2, prec=prec))
            else:
                for tbar in by_order.get(n, []):
                    add(n, field.element(tbar, prec=prec))
        return FiniteOrderCatalog(field, tuple(entries))

    for n in orders:
        if n in _RATIONAL_TRACES:
            add(n, field.element(_RATIONAL_TRACES[n], prec=prec))
            continue
        # here p >= 5 and n | p +- 1 with n not in {1,2,3,4,6}: traces are Teichmuller-type lifts
        for tbar in range(p):
            if _residue_order(p, tbar) == n:
                add(n, _lift_trace(field, tbar, n, prec))
    return FiniteOrderCatalog(field, tuple(entries))


def jorgensen_constant(field: FieldDesc) -> int:
    """Largest ``v(tr X - 2)`` over finite-order X with trace != 2."""
    cat = finite_order_traces(field)
    return max(e.val_t_minus_2 for e in cat.entries if not e.flagged)


@dataclass(frozen=True)
class Order:
    n: int
    caveat: str = ""


@dataclass(frozen=True)
class InfiniteOrder:
    reason: str = ""


def finite_order(A: Mat2, field: FieldDesc | None = None) -> Order | InfiniteOrder | Indeterminate:
    field = field or A.field
    try:
        cls = classify(A)
    except IndeterminateError as exc:
        return Indeterminate(exc.reason)
    if cls.hyperbolic:
        return InfiniteOrder("hyperbolic")
    prec = min(min(x.absprec for x in A.entries()), field.default_precision)
    caveat = f"verified at precision {prec}"
    tr = A.trace()
    I = Mat2.identity(field)
    char = field.characteristic
    if (tr - 2).is_zero_like:
        if A.is_identity():
            return Order(1, caveat)
        if char == 0:
            return InfiniteOrder("nontrivial unipotent in characteristic 0")
        if mat_pow(A, char).agrees(I):
            return Order(char, caveat)
        return Indeterminate("trace agrees with 2 but A^p does not agree with I")
    if (tr + 2).is_zero_like:
        if A.agrees(-I):
            return Order(2, caveat)
        if char == 0:
            return InfiniteOrder("-1 times a nontrivial unipotent in characteristic 0")
        if mat_pow(A, 2 * char).agrees(I):
            return Order(2 * char, caveat)
        return Indeterminate("trace agrees with -2 but A^(2p) does not agree with I")
    for entry in finite_order_traces(field).entries:
        if entry.flagged or entry.order <= 2:
            continue
        diff = tr - entry.trace
        if diff.is_zero_like:
            if mat_pow(A, entry.order).agrees(I):
                return Order(entry.order, caveat)
            return Indeterminate(f"trace matches order {entry.order} but the power check fails")
    return InfiniteOrder("trace differs from every finite-order trace")


def realize(entry: CatalogEntry) -> Mat2:
    """An explicit matrix of the entry's order and trace.

    Traces +-2 are realised by +-I (orders 1, 2) or by +-[[1, 1], [0, 1]]
    (orders p, 2p in characteristic p); every other trace by its companion matrix.
    """
    field = entry.trace.field
    one, zero = field.one(), field.zero()
    if field.characteristic and entry.order in (field.p, 2 * field.p):
        s = one if entry.order == field.p else -one
        return Mat2(s, s, zero, s, check=False)
    if entry.order in (1, 2):
        s = one if entry.order == 1 else -one
        return Mat2(s, zero, zero, s, check=False)
    return companion(entry.trace)


def eigenvalues(A: Mat2) -> Split | None:
    """Eigenvalues in K when they exist (``None`` if the characteristic polynomial is irreducible)."""
    r = quadratic_roots(A.trace())
    return r if isinstance(r, Split) else None


__all__ = [
    "AtLeast",
    "CatalogEntry",
    "DeterminantError",
    "ElementClass",
    "Exact",
    "FiniteOrderCatalog",
    "InfiniteOrder",
    "Mat2",
    "Order",
    "candidate_orders",
    "classify",
    "commutator",
    "companion",
    "eigenvalues",
    "finite_order",
    "finite_order_traces",
    "jorgensen_constant",
    "mat_inv",
    "mat_mul",
    "mat_pow",
    "realize",
    "translation_length",
]
