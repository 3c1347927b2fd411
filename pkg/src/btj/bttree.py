"""The Bruhat-Tits tree of SL_2(K): lattice classes, the SL_2 action, ends and axes.

A vertex is stored as ``(level m, offset b mod pi^m)``: the homothety class of
the lattice spanned by ``(pi^m, 0)`` and ``(b, 1)``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .localfield import (
    FieldDesc,
    IndeterminateError,
    LFElement,
    NonSplit,
    PrecisionExhausted,
    Split,
    quadratic_roots,
)
from .sl2core import Mat2, classify

DEFAULT_OVERLAP_RADIUS = 8


# --- vertices ------------------------------------------------------------------


@dataclass(frozen=True)
class Vertex:
    level: int
    offset: LFElement

    @classmethod
    def make(cls, level: int, offset: LFElement) -> Vertex:
        return cls(level, offset.reduce_mod(level))

    @classmethod
    def base(cls, field: FieldDesc) -> Vertex:
        return cls(0, LFElement.zero_like(field, 0))

    @property
    def field(self) -> FieldDesc:
        return self.offset.field

    def exact_offset(self, extra: int) -> LFElement:
        """The offset as an exact element known to absolute precision ``level + extra``."""
        b = self.offset
        if b.is_zero_like:
            return LFElement.zero_like(b.field, self.level + extra)
        return b.lift(self.level + extra - b.val)

    def to_json(self) -> dict:
        from .literals import format_element

        return {"level": self.level, "offset": format_element(self.offset)}

    def __str__(self):
        from .literals import format_short

        off = "0" if self.offset.is_zero_like else format_short(self.offset, 8)
        return f"({self.level}, {off})"


def _working_prec(field: FieldDesc, *levels: int) -> int:
    return field.default_precision + max((abs(m) for m in levels), default=0)


def lattice_vertex(alpha: LFElement, beta: LFElement, gamma: LFElement, delta: LFElement) -> Vertex:
    """Vertex of the lattice spanned by the columns ``(alpha, gamma)`` and ``(beta, delta)``."""
    det = alpha * delta - beta * gamma
    if det.is_zero_like:
        raise PrecisionExhausted("lattice basis is degenerate at working precision")
    # the bottom-row entry of least valuation is the pivot; put it second
    if gamma.is_zero_like and delta.is_zero_like:
        raise PrecisionExhausted("bottom row vanishes at working precision")
    if delta.is_zero_like:
        if gamma.val > delta.val:
            raise PrecisionExhausted("cannot choose a pivot: bottom-row valuations unresolved")
        swap = True
    elif gamma.is_zero_like:
        if delta.val > gamma.val:
            raise PrecisionExhausted("cannot choose a pivot: bottom-row valuations unresolved")
        swap = False
    else:
        swap = gamma.val < delta.val
    top, pivot = (alpha, gamma) if swap else (beta, delta)
    level = det.val - 2 * pivot.val
    return Vertex.make(level, top / pivot)


def apply(g: Mat2, v: Vertex) -> Vertex:
    """The image ``g . v``."""
    prec = _working_prec(g.field, v.level)
    pim = g.field.uniformizer_power(v.level, prec)
    b = v.exact_offset(prec)
    return lattice_vertex(g.a * pim, g.a * b + g.b, g.c * pim, g.c * b + g.d)


def vertex_distance(u: Vertex, v: Vertex) -> int:
    dm = v.level - u.level
    diff = v.offset - u.offset
    if diff.is_zero_like:
        # both offsets are exact, so the difference vanishes mod pi^min(levels)
        # and this term can never be the strict minimum
        low = min(dm, 0)
    else:
        low = min(dm, diff.val - u.level, 0)
    return dm - 2 * low


def displacement(g: Mat2, v: Vertex) -> int:
    return vertex_distance(v, apply(g, v))


def fixes_vertex(g: Mat2, v: Vertex) -> bool:
    return displacement(g, v) == 0


def neighbors(v: Vertex) -> list[Vertex]:
    """The ``p + 1`` adjacent vertices: ``p`` children then the parent."""
    field = v.field
    m = v.level
    b = v.exact_offset(1)
    out = []
    for c in range(field.p):
        child = b + field.element(c, prec=1) * field.uniformizer_power(m, 1) if c else b
        out.append(Vertex.make(m + 1, child))
    out.append(Vertex.make(m - 1, b))
    return out


def parent(v: Vertex) -> Vertex:
    return neighbors(v)[-1]


def ball(center: Vertex, radius: int) -> list[Vertex]:
    """All vertices within ``radius``, in breadth-first order."""
    seen = {center}
    out = [center]
    frontier = deque([(center, 0)])
    while frontier:
        v, d = frontier.popleft()
        if d == radius:
            continue
        for w in neighbors(v):
            if w not in seen:
                seen.add(w)
                out.append(w)
                frontier.append((w, d + 1))
    return out


def path_between(u: Vertex, v: Vertex) -> list[Vertex]:
    """The geodesic from ``u`` to ``v`` inclusive."""
    path = [u]
    d = vertex_distance(u, v)
    cur = u
    while d:
        for w in neighbors(cur):
            dw = vertex_distance(w, v)
            if dw == d - 1:
                cur, d = w, dw
                break
        else:  # pragma: no cover - a tree always has a closer neighbour
            raise RuntimeError("no neighbour decreases the distance")
        path.append(cur)
    return path


# --- ends ----------------------------------------------------------------------


@dataclass(frozen=True)
class End:
    """A point of P^1(K): ``[point : 1]``, or ``[1 : 0]`` when ``point`` is None."""

    point: LFElement | None

    @classmethod
    def infinity(cls) -> End:
        return cls(None)

    @classmethod
    def finite(cls, c: LFElement) -> End:
        return cls(c)

    @property
    def is_infinity(self) -> bool:
        return self.point is None

    def agrees(self, other: End) -> bool:
        """Equality at working precision."""
        if self.is_infinity or other.is_infinity:
            return self.is_infinity and other.is_infinity
        return self.point.agrees(other.point)

    def distinct_exactly(self, other: End) -> bool:
        """True only when the two ends provably differ."""
        if self.is_infinity or other.is_infinity:
            return self.is_infinity != other.is_infinity
        return not (self.point - other.point).is_zero_like

    def to_json(self):
        from .literals import format_element

        return "inf" if self.is_infinity else format_element(self.point)

    def __str__(self):
        from .literals import format_short

        return "Infinity" if self.is_infinity else f"Finite({format_short(self.point, 8)})"


def _projective(u: LFElement, w: LFElement) -> End:
    if w.is_zero_like:
        if u.is_zero_like:
            raise IndeterminateError("projective point with both coordinates zero-like")
        return End.infinity()
    return End.finite(u / w)


def act_on_end(g: Mat2, e: End) -> End:
    if e.is_infinity:
        return _projective(g.a, g.c)
    x = e.point
    return _projective(g.a * x + g.b, g.c * x + g.d)


def _eigenvector(g: Mat2, lam: LFElement) -> tuple[LFElement, LFElement]:
    """A kernel vector of ``g - lam``, choosing the better-conditioned row."""
    candidates = [(g.b, lam - g.a), (lam - g.d, g.c)]
    best, best_val = None, None
    for vec in candidates:
        vals = [x.val for x in vec if not x.is_zero_like]
        if not vals:
            continue
        if best is None or min(vals) < best_val:
            best, best_val = vec, min(vals)
    if best is None:
        raise IndeterminateError("eigenvector not resolved at working precision")
    return best


def eigen_end(g: Mat2, lam: LFElement) -> End:
    return _projective(*_eigenvector(g, lam))


@dataclass(frozen=True)
class FixedEnds:
    kind: str  # "none" | "one" | "two" | "all"
    ends: tuple[End, ...] = ()

    def to_json(self) -> dict:
        return {"kind": self.kind, "ends": [e.to_json() for e in self.ends]}


def fixed_ends(g: Mat2) -> FixedEnds:
    """Ends fixed by ``g``; for hyperbolic ``g`` the attracting end is listed first."""
    if g.is_central():
        return FixedEnds("all")
    tr = g.trace()
    for lam in (1, -1):
        if (tr - 2 * lam).is_zero_like:
            return FixedEnds("one", (eigen_end(g, g.field.element(lam)),))
    roots = quadratic_roots(tr)
    if isinstance(roots, NonSplit):
        return FixedEnds("none")
    lam, mu = roots.lam, roots.mu
    if not mu.is_zero_like and not lam.is_zero_like and mu.val < lam.val:
        lam, mu = mu, lam
    return FixedEnds("two", (eigen_end(g, lam), eigen_end(g, mu)))


def common_end_detail(A: Mat2, B: Mat2) -> tuple[End | None, bool]:
    """A shared fixed end (or None) and whether a "None" answer is exact."""
    fa, fb = fixed_ends(A), fixed_ends(B)
    if fa.kind == "all" and fb.kind == "all":
        return End.infinity(), True
    if fa.kind == "all":
        return (fb.ends[0] if fb.ends else None), True
    if fb.kind == "all":
        return (fa.ends[0] if fa.ends else None), True
    exact = True
    for e in fa.ends:
        for f in fb.ends:
            if e.agrees(f):
                return e, True
            exact = exact and e.distinct_exactly(f)
    return None, exact


def common_fixed_end(A: Mat2, B: Mat2) -> End | None:
    return common_end_detail(A, B)[0]


def stabilizes_end_pair(g: Mat2, e1: End, e2: End) -> bool:
    g1, g2 = act_on_end(g, e1), act_on_end(g, e2)
    return (g1.agrees(e1) and g2.agrees(e2)) or (g1.agrees(e2) and g2.agrees(e1))


# --- axes ----------------------------------------------------------------------


@dataclass(frozen=True)
class AxisData:
    repelling: End
    attracting: End
    base_point: Vertex
    length: int

    def to_json(self) -> dict:
        return {
            "repelling": self.repelling.to_json(),
            "attracting": self.attracting.to_json(),
            "base_point": self.base_point.to_json(),
            "length": self.length,
        }


def _scaled(vec: tuple[LFElement, LFElement]) -> tuple[LFElement, LFElement]:
    k = min(x.val for x in vec if not x.is_zero_like)
    field = vec[0].field
    s = field.uniformizer_power(-k, max(x.prec for x in vec) or field.default_precision)
    return vec[0] * s, vec[1] * s


def hyperbolic_axis(g: Mat2) -> AxisData:
    cls = classify(g)
    if not cls.hyperbolic:
        raise ValueError("hyperbolic_axis needs a hyperbolic element")
    roots = quadratic_roots(g.trace())
    assert isinstance(roots, Split)
    lam, mu = (roots.lam, roots.mu) if roots.lam.val < 0 else (roots.mu, roots.lam)
    att, rep = _eigenvector(g, lam), _eigenvector(g, mu)
    (x1, y1), (x2, y2) = _scaled(att), _scaled(rep)
    base = lattice_vertex(x1, x2, y1, y2)
    if displacement(g, base) != cls.length:
        raise IndeterminateError("axis base point not resolved at working precision")
    return AxisData(_projective(*rep), _projective(*att), base, cls.length)


def step_toward_end(v: Vertex, e: End) -> Vertex:
    """The neighbour of ``v`` on the ray from ``v`` to ``e``."""
    if e.is_infinity:
        return parent(v)
    m = v.level
    c = e.point
    diff = c - v.exact_offset(1)
    if diff.is_zero_like and diff.val < m:
        raise IndeterminateError("end coordinate exhausted before the current level")
    if diff.is_zero_like or diff.val >= m:
        try:
            return Vertex.make(m + 1, c)
        except PrecisionExhausted as exc:
            raise IndeterminateError(str(exc)) from exc
    return parent(v)


def axis_vertices(axis: AxisData, radius: int) -> list[Vertex]:
    """Axis vertices from ``radius`` steps toward the repelling end to ``radius`` toward the attracting end."""
    back, fwd = [axis.base_point], [axis.base_point]
    for _ in range(radius):
        back.append(step_toward_end(back[-1], axis.repelling))
        fwd.append(step_toward_end(fwd[-1], axis.attracting))
    return back[:0:-1] + fwd


@dataclass(frozen=True)
class Overlap:
    kind: str  # "segment" | "exceeds_radius" | "empty"
    length: int | None = None

    def to_json(self) -> dict:
        return {"kind": self.kind, "length": self.length}


def fixed_overlap_on_axis(A: Mat2, B: Mat2, radius: int = DEFAULT_OVERLAP_RADIUS) -> Overlap:
    """Length of the segment of Ax(B) fixed by ``A``, found by bounded enumeration."""
    axis = hyperbolic_axis(B)
    verts = axis_vertices(axis, radius)
    fixed = [i for i, v in enumerate(verts) if fixes_vertex(A, v)]
    if not fixed:
        return Overlap("empty")
    if fixed[0] == 0 or fixed[-1] == len(verts) - 1:
        return Overlap("exceeds_radius")
    return Overlap("segment", fixed[-1] - fixed[0])


def min_displacement(g: Mat2, center: Vertex, radius: int) -> int:
    return min(displacement(g, v) for v in ball(center, radius))


__all__ = [
    "AxisData",
    "End",
    "FixedEnds",
    "Overlap",
    "Vertex",
    "act_on_end",
    "apply",
    "axis_vertices",
    "ball",
    "common_end_detail",
    "common_fixed_end",
    "displacement",
    "eigen_end",
    "fixed_ends",
    "fixed_overlap_on_axis",
    "fixes_vertex",
    "hyperbolic_axis",
    "lattice_vertex",
    "min_displacement",
    "neighbors",
    "path_between",
    "stabilizes_end_pair",
    "step_toward_end",
    "vertex_distance",
]
