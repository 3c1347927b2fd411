"""Text forms for field elements, matrices, vertices, ends and sequences.

Element grammar (both directions)::

    3/7                      rational form
    p^-1 * (1 + 2*p) + O(p^63)   expansion form; use t for Laurent fields
    2 - sqrt(-3), 1/(1+p^n)  arithmetic, sqrt, and the sequence index n

Integer and polynomial sub-expressions are evaluated exactly and only
converted to truncated elements at the end, so expansions round-trip.
"""

from __future__ import annotations

import ast
from fractions import Fraction

from .localfield import (
    DenominatorZero,
    FieldDesc,
    FieldKind,
    LFElement,
    NotASquare,
    PrecisionExhausted,
    ZeroLikeInput,
    lf_sqrt,
)


class LiteralError(ValueError):
    def __init__(self, literal: str, message: str, position: int | None = None):
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"bad literal {literal!r}{where}: {message}")
        self.literal = literal
        self.position = position


class _Poly:
    """Exact Laurent polynomial over F_p, used while parsing."""

    __slots__ = ("p", "c")

    def __init__(self, p: int, coeffs: dict[int, int]):
        self.p = p
        self.c = {e: v % p for e, v in coeffs.items() if v % p}

    def __add__(self, o):
        out = dict(self.c)
        for e, v in o.c.items():
            out[e] = out.get(e, 0) + v
        return _Poly(self.p, out)

    def __neg__(self):
        return _Poly(self.p, {e: -v for e, v in self.c.items()})

    def __mul__(self, o):
        out: dict[int, int] = {}
        for e1, v1 in self.c.items():
            for e2, v2 in o.c.items():
                out[e1 + e2] = out.get(e1 + e2, 0) + v1 * v2
        return _Poly(self.p, out)

    @property
    def monomial(self) -> bool:
        return len(self.c) == 1

    def inverse_monomial(self):
        ((e, v),) = self.c.items()
        return _Poly(self.p, {-e: pow(v, -1, self.p)})


class _BigO:
    __slots__ = ("n",)

    def __init__(self, n: int):
        self.n = n


def _exact_to_element(x, field: FieldDesc, prec: int) -> LFElement:
    p = field.p
    if isinstance(x, LFElement):
        return x
    if isinstance(x, _Poly):
        if not x.c:
            return LFElement.zero_like(field, prec)
        lo, hi = min(x.c), max(x.c)
        digits = [x.c.get(e, 0) for e in range(lo, hi + 1)]
        return LFElement.from_digits(field, lo, digits, max(prec, len(digits)))
    x = Fraction(x)
    if field.kind is FieldKind.LAURENT:
        return field.element(x, prec=prec)
    if x == 0:
        return LFElement.zero_like(field, prec)
    num, den = x.numerator, x.denominator
    while den % p == 0:
        den //= p
    if num > 0 and den == 1:
        while num % p == 0:
            num //= p
        ndig = 0
        while num:
            num //= p
            ndig += 1
        prec = max(prec, ndig)
    return field.element(x, prec=prec)


class _Evaluator:
    def __init__(self, text: str, field: FieldDesc, prec: int, n: int | None):
        self.text = text
        self.field = field
        self.prec = prec
        self.n = n
        self.shift: list[int] = []  # positions of '^' rewritten to '**'

    def fail(self, msg: str, node=None):
        pos = None
        if node is not None and hasattr(node, "col_offset"):
            pos = node.col_offset - sum(1 for s in self.shift if s < node.col_offset)
        raise LiteralError(self.text, msg, pos)

    def run(self) -> LFElement:
        src = []
        for ch in self.text:
            if ch == "^":
                self.shift.append(len(src) + 1)
                src.append("**")
            else:
                src.append(ch)
        try:
            tree = ast.parse("".join(src).strip(), mode="eval")
        except SyntaxError as exc:
            pos = (exc.offset or 1) - 1
            raise LiteralError(self.text, "syntax error", pos - sum(1 for s in self.shift if s < pos)) from None
        value = self.strip_index(self.eval(tree.body))
        if isinstance(value, _BigO):
            return LFElement.zero_like(self.field, value.n)
        return self.to_element(value)

    def to_element(self, x) -> LFElement:
        return _exact_to_element(x, self.field, self.prec)

    def exact_int(self, x, node) -> int:
        if isinstance(x, Fraction) and x.denominator == 1:
            return int(x)
        if isinstance(x, _Poly) and set(x.c) <= {0}:
            self.fail("Laurent exponents must be integer literals or n (constants live in F_p)", node)
        self.fail("exponent must be an integer", node)

    def pi_exponent(self, x, node) -> int:
        p = self.field.p
        if isinstance(x, Fraction):
            if x == 1:
                return 0
            num, den = x.numerator, x.denominator
            if num == 1 and _is_ppow(den, p):
                return -_log(den, p)
            if den == 1 and _is_ppow(num, p):
                return _log(num, p)
        if isinstance(x, _Poly) and x.monomial and list(x.c.values()) == [1]:
            return next(iter(x.c))
        self.fail("O(...) takes a power of the uniformiser", node)

    def eval(self, node):
        f = self.field
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, int):
                self.fail("only integer constants are allowed", node)
            return _IntLit(node.value)
        if isinstance(node, ast.Name):
            name = node.id
            if name == "n":
                if self.n is None:
                    self.fail("index n is only valid in sequence entries", node)
                return _IntLit(self.n)
            if name == "pi" or name == f.symbol:
                return Fraction(f.p) if f.kind is FieldKind.PADIC else _Poly(f.p, {1: 1})
            self.fail(f"unknown name {name!r} (uniformiser is {f.symbol!r})", node)
        if isinstance(node, ast.UnaryOp):
            v = self.eval(node.operand)
            if isinstance(node.op, ast.USub):
                return self.neg(v, node)
            if isinstance(node.op, ast.UAdd):
                return v
            self.fail("unsupported unary operator", node)
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or len(node.args) != 1 or node.keywords:
                self.fail("only sqrt(x) and O(x) calls are allowed", node)
            arg = self.eval(node.args[0])
            if node.func.id == "O":
                return _BigO(self.pi_exponent(self.strip_index(arg), node))
            if node.func.id == "sqrt":
                try:
                    return lf_sqrt(self.to_element(self.strip_index(arg)))
                except (NotASquare, PrecisionExhausted, ZeroLikeInput) as exc:
                    self.fail(str(exc), node)
            self.fail(f"unknown function {node.func.id!r}", node)
        if isinstance(node, ast.BinOp):
            a = self.eval(node.left)
            b = self.eval(node.right)
            if isinstance(node.op, ast.Pow):
                return self.power(a, b, node)
            a, b = self.strip_index(a), self.strip_index(b)
            if isinstance(a, _BigO) or isinstance(b, _BigO):
                if isinstance(node.op, ast.Add):
                    return self.add_bigo(a, b)
                self.fail("O(...) may only be added", node)
            if isinstance(node.op, ast.Add):
                return self.add(a, b)
            if isinstance(node.op, ast.Sub):
                return self.add(a, self.neg(b, node))
            if isinstance(node.op, ast.Mult):
                return self.mul(a, b)
            if isinstance(node.op, ast.Div):
                return self.div(a, b, node)
            self.fail("unsupported operator", node)
        self.fail("unsupported syntax", node)

    def strip_index(self, x):
        if not isinstance(x, _IntLit):
            return x
        if self.field.kind is FieldKind.PADIC:
            return Fraction(x.value)
        return _Poly(self.field.p, {0: x.value})

    def neg(self, v, node):
        if isinstance(v, _IntLit):
            return _IntLit(-v.value)
        v = self.strip_index(v)
        if isinstance(v, _BigO):
            return v
        return -v

    def add(self, a, b):
        if isinstance(a, LFElement) or isinstance(b, LFElement) or type(a) is not type(b):
            return self.to_element(a) + self.to_element(b)
        return a + b

    def add_bigo(self, a, b):
        if isinstance(a, _BigO) and isinstance(b, _BigO):
            return _BigO(min(a.n, b.n))
        big, other = (a, b) if isinstance(a, _BigO) else (b, a)
        return self.to_element(other) + LFElement.zero_like(self.field, big.n)

    def mul(self, a, b):
        if isinstance(a, LFElement) or isinstance(b, LFElement) or type(a) is not type(b):
            return self.to_element(a) * self.to_element(b)
        return a * b

    def div(self, a, b, node):
        try:
            if isinstance(a, Fraction) and isinstance(b, Fraction):
                if b == 0:
                    raise DenominatorZero("division by zero")
                return a / b
            if isinstance(a, _Poly) and isinstance(b, _Poly):
                if not b.c:
                    raise DenominatorZero("division by zero")
                if b.monomial:
                    return a * b.inverse_monomial()
            return self.to_element(a) / self.to_element(b)
        except ZeroDivisionError as exc:
            self.fail(str(exc) or "division by zero", node)

    def power(self, a, b, node):
        if isinstance(b, _IntLit):
            k = b.value
        else:
            k = self.exact_int(b, node)
        a = self.strip_index(a)
        if isinstance(a, _BigO):
            self.fail("O(...) cannot be raised to a power", node)
        if isinstance(a, Fraction):
            if a == 0 and k < 0:
                self.fail("division by zero", node)
            return a**k
        if isinstance(a, _Poly):
            if k >= 0:
                out = _Poly(a.p, {0: 1})
                for _ in range(k):
                    out = out * a
                return out
            if a.monomial:
                inv = a.inverse_monomial()
                out = _Poly(a.p, {0: 1})
                for _ in range(-k):
                    out = out * inv
                return out
        return self.to_element(a) ** k


class _IntLit:
    """An integer literal or the sequence index: an exponent, or a field constant elsewhere."""

    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = value


def _is_ppow(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


def _log(n: int, p: int) -> int:
    k = 0
    while n > 1:
        n //= p
        k += 1
    return k


def parse_element(text, field: FieldDesc, prec: int | None = None, n: int | None = None) -> LFElement:
    """Parse an element literal; ints are accepted as-is."""
    prec = prec or field.default_precision
    if isinstance(text, int) and not isinstance(text, bool):
        return _exact_to_element(Fraction(text) if field.kind is FieldKind.PADIC else _Poly(field.p, {0: text}), field, prec)
    if not isinstance(text, str):
        raise LiteralError(repr(text), "element literals must be strings or integers")
    return _Evaluator(text, field, prec, n).run()


def _term(d: int, i: int, sym: str) -> str:
    if i == 0:
        return str(d)
    pw = sym if i == 1 else f"{sym}^{i}"
    return pw if d == 1 else f"{d}*{pw}"


def format_element(x: LFElement) -> str:
    sym = x.field.symbol
    if x.is_zero_like:
        return f"O({sym}^{x.val})"
    terms = [_term(d, i, sym) for i, d in enumerate(x.digits) if d]
    body = " + ".join(terms)
    tail = f" + O({sym}^{x.absprec})"
    if x.val == 0:
        return body + tail
    return f"{sym}^{x.val} * ({body}){tail}"


def format_short(x: LFElement, digits: int = 6) -> str:
    """Human-oriented form showing only the leading digits."""
    sym = x.field.symbol
    if x.is_zero_like:
        return f"O({sym}^{x.val})"
    shown = x.digits[:digits]
    terms = [_term(d, i, sym) for i, d in enumerate(shown) if d]
    body = " + ".join(terms) + (" + ..." if x.prec > digits else "")
    return body if x.val == 0 else f"{sym}^{x.val} * ({body})"


def parse_matrix(obj, field: FieldDesc, prec: int | None = None, n: int | None = None):
    """Parse ``[[a, b], [c, d]]`` (a JSON string or nested list) into a Mat2."""
    import json

    from .sl2core import Mat2

    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise LiteralError(obj, f"matrix is not valid JSON ({exc.msg})", exc.pos) from None
    if not (isinstance(obj, list) and len(obj) == 2 and all(isinstance(r, list) and len(r) == 2 for r in obj)):
        raise LiteralError(str(obj), "matrix must be [[a, b], [c, d]]")
    (a, b), (c, d) = [[parse_element(e, field, prec, n) for e in row] for row in obj]
    return Mat2(a, b, c, d)


def format_matrix(m) -> list[list[str]]:
    return [[format_element(m.a), format_element(m.b)], [format_element(m.c), format_element(m.d)]]
