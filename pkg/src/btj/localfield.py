"""Truncated arithmetic in Q_p and F_p((t)).

Elements carry relative precision: a nonzero element is ``pi^val * unit``
with the unit known to ``prec`` digits.  Anything whose tracked digits all
cancel becomes a zero-like element that only remembers a lower bound on
its valuation, so valuation queries never claim more than is known.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from sympy import isprime, legendre_symbol

DEFAULT_PRECISION = 64


class DenominatorZero(ZeroDivisionError):
    pass


class DivisionByZeroLike(ZeroDivisionError):
    pass


class PrecisionExhausted(ArithmeticError):
    pass


class NotASquare(ValueError):
    pass


class ZeroLikeInput(ValueError):
    pass


class IndeterminateError(ArithmeticError):
    """Raised when finite precision blocks a sound answer."""

    @property
    def reason(self) -> str:
        return self.args[0] if self.args else "insufficient precision"


@dataclass(frozen=True)
class Indeterminate:
    """Returned in place of a boolean or variant when precision is insufficient."""

    reason: str

    def __bool__(self):
        raise TypeError(f"indeterminate value used as a boolean: {self.reason}")


class FieldKind(str, enum.Enum):
    PADIC = "padic"
    LAURENT = "laurent"


@dataclass(frozen=True)
class FieldDesc:
    kind: FieldKind
    p: int
    default_precision: int = DEFAULT_PRECISION

    def __post_init__(self):
        object.__setattr__(self, "kind", FieldKind(self.kind))
        if not isprime(self.p):
            raise ValueError(f"residue characteristic must be prime, got {self.p}")
        if self.default_precision < 1:
            raise ValueError("default_precision must be >= 1")

    @classmethod
    def parse(cls, name: str, precision: int | None = None) -> FieldDesc:
        """Parse ``"padic:7"`` or ``"laurent:5"``."""
        kind, sep, p = name.strip().partition(":")
        if not sep or kind not in ("padic", "laurent") or not p.strip().isdigit():
            raise ValueError(f"bad field {name!r}; expected 'padic:P' or 'laurent:P'")
        return cls(FieldKind(kind), int(p), precision or DEFAULT_PRECISION)

    @property
    def q(self) -> int:
        return self.p

    @property
    def symbol(self) -> str:
        return "p" if self.kind is FieldKind.PADIC else "t"

    @property
    def characteristic(self) -> int:
        return 0 if self.kind is FieldKind.PADIC else self.p

    def __str__(self):
        return f"{self.kind.value}:{self.p}"

    # convenience constructors
    def element(self, num: int | Fraction = 0, den: int = 1, prec: int | None = None) -> LFElement:
        if isinstance(num, Fraction):
            num, den = num.numerator, num.denominator * den
        return lf_from_rational(num, den, self, prec or self.default_precision)

    def one(self, prec: int | None = None) -> LFElement:
        return self.element(1, prec=prec)

    def zero(self, prec: int | None = None) -> LFElement:
        return LFElement.zero_like(self, prec or self.default_precision)

    def uniformizer_power(self, k: int, prec: int | None = None) -> LFElement:
        return LFElement(self, k, prec or self.default_precision, _one_unit(self, prec or self.default_precision))


# --- valuation results -------------------------------------------------------


@dataclass(frozen=True, order=True)
class Exact:
    n: int

    def __str__(self):
        return str(self.n)


@dataclass(frozen=True, order=True)
class AtLeast:
    n: int

    def __str__(self):
        return f">={self.n}"


ValResult = Exact | AtLeast


def val_min(a: ValResult, b: ValResult) -> ValResult:
    """Minimum with lower-bound semantics for ``AtLeast``."""
    if isinstance(a, Exact) and isinstance(b, Exact):
        return Exact(min(a.n, b.n))
    if isinstance(a, AtLeast) and isinstance(b, AtLeast):
        return AtLeast(min(a.n, b.n))
    ex, al = (a, b) if isinstance(a, Exact) else (b, a)
    return ex if ex.n < al.n else AtLeast(al.n)


def val_exceeds(v: ValResult, bound: int) -> bool | Indeterminate:
    """Decide ``v > bound``; indeterminate when a lower bound straddles it."""
    if isinstance(v, Exact):
        return v.n > bound
    if v.n > bound:
        return True
    return Indeterminate(f"valuation only known to be {v}, cannot compare with {bound}")


def val_to_json(v: ValResult) -> dict:
    if isinstance(v, Exact):
        return {"exact": v.n}
    return {"at_least": v.n, "caveat": f"cancellation beyond tracked precision (>= {v.n})"}


# --- low level helpers on integral truncations ---------------------------------


@lru_cache(maxsize=None)
def _ppow(p: int, n: int) -> int:
    return p**n


def _vp_int(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _one_unit(field: FieldDesc, prec: int):
    if field.kind is FieldKind.PADIC:
        return 1
    return (1,) + (0,) * (prec - 1)


def _series_mul(a, b, n: int, p: int) -> list[int]:
    out = [0] * n
    for i, ai in enumerate(a[:n]):
        if ai:
            for j in range(n - i):
                bj = b[j] if j < len(b) else 0
                if bj:
                    out[i + j] += ai * bj
    return [c % p for c in out]


def _series_inv(u, n: int, p: int) -> list[int]:
    inv0 = pow(u[0], -1, p)
    out = [inv0] + [0] * (n - 1)
    for k in range(1, n):
        s = 0
        for i in range(1, k + 1):
            if i < len(u) and u[i]:
                s += u[i] * out[k - i]
        out[k] = (-inv0 * s) % p
    return out


def _normalize(field: FieldDesc, w: int, S, k: int) -> LFElement:
    """Element ``pi^w * S`` where ``S`` is known modulo ``pi^k``."""
    if k <= 0:
        return LFElement.zero_like(field, w + k)
    p = field.p
    if field.kind is FieldKind.PADIC:
        S %= _ppow(p, k)
        if S == 0:
            return LFElement.zero_like(field, w + k)
        t = _vp_int(S, p)
        return LFElement(field, w + t, k - t, S // _ppow(p, t))
    for t, c in enumerate(S[:k]):
        if c % p:
            unit = tuple(c % p for c in S[t:k])
            return LFElement(field, w + t, k - t, unit)
    return LFElement.zero_like(field, w + k)


# --- the element type ----------------------------------------------------------


class LFElement:
    """A truncated element of Q_p or F_p((t)).

    Immutable by convention.  For a nonzero element ``unit`` is an int in
    ``[1, p^prec)`` prime to p (p-adic) or a tuple of ``prec`` residues with
    nonzero leading entry (Laurent).  Zero-like elements have ``prec == 0``
    and ``val`` is the bound N in "valuation >= N".
    """

    __slots__ = ("field", "val", "prec", "unit")

    def __init__(self, field: FieldDesc, val: int, prec: int, unit):
        self.field = field
        self.val = val
        self.prec = prec
        self.unit = unit

    @classmethod
    def zero_like(cls, field: FieldDesc, bound: int) -> LFElement:
        return cls(field, bound, 0, 0 if field.kind is FieldKind.PADIC else ())

    @classmethod
    def from_digits(cls, field: FieldDesc, val: int, digits, prec: int | None = None) -> LFElement:
        """Build ``pi^val * sum(digits[i] pi^i)`` known to ``prec`` digits (default: len(digits))."""
        digits = list(digits)
        prec = len(digits) if prec is None else prec
        digits = (digits + [0] * prec)[:prec]
        p = field.p
        if any(not 0 <= d < p for d in digits):
            raise ValueError(f"digits must lie in [0, {p})")
        if field.kind is FieldKind.PADIC:
            S = sum(d * _ppow(p, i) for i, d in enumerate(digits))
        else:
            S = digits
        return _normalize(field, val, S, prec)

    # --- structure ---
    @property
    def is_zero_like(self) -> bool:
        return self.prec == 0

    @property
    def absprec(self) -> int:
        return self.val + self.prec

    @property
    def digits(self) -> tuple[int, ...]:
        if self.prec == 0:
            return ()
        if self.field.kind is FieldKind.LAURENT:
            return self.unit
        p, u, out = self.field.p, self.unit, []
        for _ in range(self.prec):
            u, r = divmod(u, p)
            out.append(r)
        return tuple(out)

    def valuation(self) -> ValResult:
        return AtLeast(self.val) if self.prec == 0 else Exact(self.val)

    def residue(self) -> int:
        """Image in the residue field; requires ``self`` to be integral."""
        if self.prec == 0:
            if self.val >= 1:
                return 0
            raise PrecisionExhausted("residue of a zero-like element with bound < 1")
        if self.val < 0:
            raise ValueError("element is not integral")
        if self.val > 0:
            return 0
        return self.digits[0]

    def lift(self, prec: int) -> LFElement:
        """Extend the tracked digits with zeros (treat the known part as exact)."""
        if self.prec == 0 or prec <= self.prec:
            return self
        if self.field.kind is FieldKind.PADIC:
            return LFElement(self.field, self.val, prec, self.unit)
        return LFElement(self.field, self.val, prec, self.unit + (0,) * (prec - self.prec))

    def truncate(self, prec: int) -> LFElement:
        if self.prec <= prec:
            return self
        if prec <= 0:
            return LFElement.zero_like(self.field, self.val + max(prec, 0))
        if self.field.kind is FieldKind.PADIC:
            return LFElement(self.field, self.val, prec, self.unit % _ppow(self.field.p, prec))
        return LFElement(self.field, self.val, prec, self.unit[:prec])

    def reduce_mod(self, m: int) -> LFElement:
        """Drop every digit of exponent >= m; zero-like when nothing remains."""
        if self.prec == 0:
            if self.val < m:
                raise PrecisionExhausted(f"need absolute precision {m}, have {self.val}")
            return LFElement.zero_like(self.field, m)
        keep = m - self.val
        if keep <= 0:
            return LFElement.zero_like(self.field, m)
        if keep > self.prec:
            raise PrecisionExhausted(f"need absolute precision {m}, have {self.absprec}")
        return self.truncate(keep)

    # --- arithmetic ---
    def _coerce(self, other) -> LFElement:
        if isinstance(other, LFElement):
            if other.field != self.field:
                if other.field.kind != self.field.kind or other.field.p != self.field.p:
                    raise TypeError(f"mixing fields {self.field} and {other.field}")
            return other
        if isinstance(other, (int, Fraction)):
            prec = max(self.field.default_precision, self.absprec)
            return self.field.element(Fraction(other), prec=prec)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return lf_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return lf_neg(self)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return lf_add(self, lf_neg(other))

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return lf_add(other, lf_neg(self))

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return lf_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return lf_mul(self, lf_inv(other))

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return lf_mul(other, lf_inv(self))

    def __pow__(self, k: int):
        if k < 0:
            return lf_inv(self) ** (-k)
        result = self.field.one(max(self.prec, 1))
        base = self
        while k:
            if k & 1:
                result = lf_mul(result, base)
            k >>= 1
            if k:
                base = lf_mul(base, base)
        return result

    def agrees(self, other) -> bool:
        """True when the two elements coincide on all shared valid digits."""
        return (self - other).is_zero_like

    def __eq__(self, other):
        if not isinstance(other, LFElement):
            return NotImplemented
        return (
            self.field.kind == other.field.kind
            and self.field.p == other.field.p
            and self.val == other.val
            and self.prec == other.prec
            and self.unit == other.unit
        )

    def __hash__(self):
        return hash((self.field.kind, self.field.p, self.val, self.prec, self.unit))

    def __repr__(self):
        from .literals import format_element

        return f"LFElement({format_element(self)!r})"


# --- field-level operations ------------------------------------------------------


def lf_from_rational(num: int, den: int, field: FieldDesc, prec: int | None = None) -> LFElement:
    """Image of ``num/den`` truncated to ``prec`` significant digits.

    For Laurent fields the integers map into the constant field F_p.
    """
    prec = prec or field.default_precision
    if den == 0:
        raise DenominatorZero(f"{num}/{den}")
    p = field.p
    if field.kind is FieldKind.LAURENT:
        if den % p == 0:
            raise DenominatorZero(f"{den} vanishes in F_{p}")
        c = (num * pow(den, -1, p)) % p
        if c == 0:
            return LFElement.zero_like(field, prec)
        return LFElement(field, 0, prec, (c,) + (0,) * (prec - 1))
    if num == 0:
        return LFElement.zero_like(field, prec)
    a, b = _vp_int(num, p), _vp_int(den, p)
    mod = _ppow(p, prec)
    unit = (num // _ppow(p, a)) * pow(den // _ppow(p, b), -1, mod) % mod
    return LFElement(field, a - b, prec, unit)


def lf_add(x: LFElement, y: LFElement) -> LFElement:
    field = x.field
    absp = min(x.absprec, y.absprec)
    nz = [e for e in (x, y) if e.prec]
    if not nz:
        return LFElement.zero_like(field, absp)
    w = min(e.val for e in nz)
    k = absp - w
    if k <= 0:
        return LFElement.zero_like(field, absp)
    p = field.p
    if field.kind is FieldKind.PADIC:
        S = 0
        for e in nz:
            S += e.unit * _ppow(p, e.val - w)
        return _normalize(field, w, S, k)
    S = [0] * k
    for e in nz:
        off = e.val - w
        for i, c in enumerate(e.unit[: max(k - off, 0)]):
            S[off + i] += c
    return _normalize(field, w, [c % p for c in S], k)


def lf_neg(x: LFElement) -> LFElement:
    if x.prec == 0:
        return x
    p = x.field.p
    if x.field.kind is FieldKind.PADIC:
        return LFElement(x.field, x.val, x.prec, (-x.unit) % _ppow(p, x.prec))
    return LFElement(x.field, x.val, x.prec, tuple((-c) % p for c in x.unit))


def lf_mul(x: LFElement, y: LFElement) -> LFElement:
    if x.prec == 0 or y.prec == 0:
        return LFElement.zero_like(x.field, x.val + y.val)
    n = min(x.prec, y.prec)
    p = x.field.p
    if x.field.kind is FieldKind.PADIC:
        return LFElement(x.field, x.val + y.val, n, x.unit * y.unit % _ppow(p, n))
    return LFElement(x.field, x.val + y.val, n, tuple(_series_mul(x.unit, y.unit, n, p)))


def lf_inv(x: LFElement) -> LFElement:
    if x.prec == 0:
        raise DivisionByZeroLike(f"cannot invert an element known only to have valuation >= {x.val}")
    p = x.field.p
    if x.field.kind is FieldKind.PADIC:
        return LFElement(x.field, -x.val, x.prec, pow(x.unit, -1, _ppow(p, x.prec)))
    return LFElement(x.field, -x.val, x.prec, tuple(_series_inv(x.unit, x.prec, p)))


def lf_valuation(x: LFElement) -> ValResult:
    return x.valuation()


def lf_is_square(x: LFElement) -> bool | Indeterminate:
    """Decide whether ``x`` is a square in K from its valuation and leading digits."""
    if x.is_zero_like:
        raise ZeroLikeInput("square test of a zero-like element")
    if x.val % 2:
        return False
    p = x.field.p
    digits = x.digits
    if p != 2:
        return legendre_symbol(digits[0], p) == 1
    if x.field.kind is FieldKind.LAURENT:
        # squares in characteristic 2 are series in t^2
        if any(digits[1::2]):
            return False
        return Indeterminate("every known odd coefficient vanishes; squareness in F_2((t)) is not decidable at finite precision")
    if x.prec < 3:
        return Indeterminate(f"2-adic square test needs 3 unit digits, have {x.prec}")
    return x.unit % 8 == 1


def _newton_lift(field: FieldDesc, root0: int, n: int, step) -> LFElement:
    """Lift a simple residue root to ``n`` digits; ``step(r, k)`` is one Newton update at precision k."""
    r = field.element(root0, prec=1)
    k = 1
    while k < n:
        k = min(2 * k, n)
        r = step(r.lift(k), k)
        if r.prec < k:
            raise PrecisionExhausted("Newton step lost precision")
    return r


def lf_sqrt(x: LFElement) -> LFElement:
    """Square root by Hensel lifting, canonical root per the digit rules below.

    Odd p: the root whose leading digit is the smaller integer.  p = 2: the
    root congruent to 1 mod 4.  The 2-adic root is known to one digit less
    than ``x``.
    """
    sq = lf_is_square(x)
    field, p = x.field, x.field.p
    if isinstance(sq, Indeterminate):
        if not (field.kind is FieldKind.LAURENT and p == 2):
            raise PrecisionExhausted(sq.reason)
    elif not sq:
        raise NotASquare(f"{x!r} is not a square")
    half = x.val // 2
    n = x.prec
    if p == 2 and field.kind is FieldKind.LAURENT:
        unit = x.digits[0::2]
        return LFElement(field, half, len(unit), tuple(unit))
    if p == 2:
        if n < 3:
            raise PrecisionExhausted("2-adic square root needs 3 unit digits")
        u, y = x.unit, 1
        for k in range(3, n):
            if (y * y - u) % _ppow(2, k + 1):
                y += _ppow(2, k - 1)
        return LFElement(field, half, n - 1, y % _ppow(2, n - 1))
    d0 = x.digits[0]
    r0 = min(r for r in range(1, p) if (r * r - d0) % p == 0)
    u = LFElement(field, 0, n, x.unit)

    def step(r, k):
        return r - (r * r - u.truncate(k)) / (2 * r)

    root = _newton_lift(field, r0, n, step)
    return LFElement(field, half, root.prec, root.unit)


@dataclass(frozen=True)
class Split:
    lam: LFElement
    mu: LFElement


@dataclass(frozen=True)
class NonSplit:
    pass


def _residue_roots(p: int, tbar: int) -> list[int]:
    return [r for r in range(p) if (r * r - tbar * r + 1) % p == 0]


def quadratic_roots(t: LFElement) -> Split | NonSplit:
    """Roots of ``x^2 - t x + 1`` in K.

    Raises IndeterminateError when the discriminant is zero-like or the
    characteristic-2 residue polynomial is inseparable.
    """
    field, p = t.field, t.field.p
    if t.is_zero_like and t.val < 0:
        raise IndeterminateError(f"trace only known to valuation >= {t.val}")
    if not t.is_zero_like and t.val < 0:
        # Newton polygon slopes +-v(t): the large root is a fixed point of x -> t - 1/x
        lam = t
        for _ in range(t.prec + 2):
            nxt = t - 1 / lam
            if nxt.agrees(lam) and nxt.prec == lam.prec:
                lam = nxt
                break
            lam = nxt
        return Split(lam, 1 / lam)

    def via_discriminant():
        disc = t * t - 4
        if disc.is_zero_like:
            raise IndeterminateError("t^2 - 4 is zero-like: repeated eigenvalue at working precision")
        sq = lf_is_square(disc)
        if isinstance(sq, Indeterminate):
            raise IndeterminateError(sq.reason)
        if not sq:
            return NonSplit()
        s = lf_sqrt(disc)
        return Split((t + s) / 2, (t - s) / 2)

    if field.kind is FieldKind.PADIC and p != 2:
        return via_discriminant()
    try:
        tbar = t.residue()
    except PrecisionExhausted as exc:
        raise IndeterminateError(str(exc)) from exc
    roots = _residue_roots(p, tbar)
    if not roots:
        return NonSplit()
    if len(roots) == 2:
        n = max(t.absprec, 1)

        def step(x, k):
            tk = t.reduce_mod(k) if not t.is_zero_like else t
            return x - (x * x - tk * x + 1) / (2 * x - tk)

        lam = _newton_lift(field, roots[0], n, step)
        return Split(lam, t - lam)
    if field.kind is FieldKind.LAURENT and p == 2:
        raise IndeterminateError("residue polynomial x^2 + 1 is inseparable in characteristic 2")
    return via_discriminant()
