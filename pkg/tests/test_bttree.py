import random
from collections import deque
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from btj.bttree import (
    End,
    Vertex,
    act_on_end,
    apply,
    axis_vertices,
    ball,
    common_fixed_end,
    displacement,
    fixed_ends,
    fixed_overlap_on_axis,
    fixes_vertex,
    hyperbolic_axis,
    min_displacement,
    neighbors,
    path_between,
    stabilizes_end_pair,
    step_toward_end,
    vertex_distance,
)
from btj.literals import parse_matrix
from btj.localfield import FieldDesc
from btj.sl2core import Mat2, classify, mat_inv, mat_mul
from oracles import tree_distance

Q2, Q3, Q5, Q7 = (FieldDesc.parse(f"padic:{p}") for p in (2, 3, 5, 7))


def M(rows, field=Q5, n=None):
    return parse_matrix([[str(x) for x in r] for r in rows], field, n=n)


def B_(f=Q5):
    return M([["p", 0], [1, "1/p"]], f)


def C_(f=Q5):
    return M([["p", 0], [0, "1/p"]], f)


def random_vertex(rng, field, steps=6):
    v = Vertex.base(field)
    for _ in range(rng.randint(0, steps)):
        v = rng.choice(neighbors(v))
    return v


def random_sl2(rng, field, steps=4):
    X = Mat2.identity(field)
    one, zero = field.one(), field.zero()
    for _ in range(steps):
        x = field.element(rng.randint(-6, 6)) * field.uniformizer_power(rng.randint(-1, 2))
        kind = rng.choice("ULD")
        if kind == "U":
            E = Mat2(one, x, zero, one, check=False)
        elif kind == "L":
            E = Mat2(one, zero, x, one, check=False)
        else:
            k = rng.randint(-1, 1)
            E = Mat2(field.uniformizer_power(k), zero, zero, field.uniformizer_power(-k), check=False)
        X = mat_mul(X, E)
    return X


def test_distance_examples():
    base = Vertex.base(Q5)
    assert vertex_distance(base, base) == 0
    assert vertex_distance(base, apply(C_(), base)) == 2
    assert vertex_distance(base, Vertex.make(1, Q5.zero())) == 1


def test_apply_examples():
    base = Vertex.base(Q5)
    assert apply(Mat2.identity(Q5), base) == base
    assert apply(C_(), base) == Vertex.make(2, Q5.zero())
    A1 = M([[1, "p"], [0, 1]])
    assert apply(A1, base) == base and displacement(A1, base) == 0


def test_neighbors_examples():
    base = Vertex.base(Q5)
    nb = neighbors(base)
    assert len(nb) == 6 and len(set(nb)) == 6
    assert {vertex_distance(a, b) for a in nb for b in nb if a != b} == {2}
    for w in nb:
        assert base in neighbors(w)


def test_fixes_vertex_examples():
    base = Vertex.base(Q5)
    assert not fixes_vertex(C_(), base)
    rng = random.Random(1)
    minus = -Mat2.identity(Q5)
    for _ in range(10):
        assert fixes_vertex(minus, random_vertex(rng, Q5))


def test_fixed_ends_examples():
    A = M([[0, -1], [1, 0]], Q7)
    B = M([[2, "-sqrt(-3)"], ["sqrt(-3)", 2]], Q7)
    assert fixed_ends(A).kind == "none" and fixed_ends(B).kind == "none"
    for n in (1, 2, 3):
        fe = fixed_ends(M([[1, "p^n"], [0, 1]], n=n))
        assert fe.kind == "one" and fe.ends[0].is_infinity
    assert fixed_ends(B_()).kind == "two"
    assert fixed_ends(-Mat2.identity(Q5)).kind == "all"


def test_common_fixed_end_examples():
    A1 = M([[1, "p"], [0, 1]])
    assert common_fixed_end(A1, C_()).is_infinity
    assert common_fixed_end(A1, B_()) is None
    e = common_fixed_end(Mat2.identity(Q5), B_())
    assert any(e.agrees(x) for x in fixed_ends(B_()).ends)


def test_axis_of_diagonal():
    ax = hyperbolic_axis(C_())
    assert ax.repelling.is_infinity and not ax.attracting.is_infinity and ax.attracting.point.is_zero_like
    assert ax.base_point == Vertex.base(Q5) and ax.length == 2


def test_axis_of_lower_triangular():
    ax = hyperbolic_axis(B_())
    assert ax.length == 2 and displacement(B_(), ax.base_point) == 2


def test_inverse_swaps_axis_ends():
    for g in (B_(), C_(), M([[2, 1], [1, 1]], Q5)):
        if not classify(g).hyperbolic:
            continue
        a, b = hyperbolic_axis(g), hyperbolic_axis(mat_inv(g))
        assert a.attracting.agrees(b.repelling) and a.repelling.agrees(b.attracting)


def test_steps_toward_ends():
    base = Vertex.base(Q5)
    assert step_toward_end(base, End.infinity()) == Vertex.make(-1, Q5.zero())
    assert step_toward_end(base, End.finite(Q5.zero())) == Vertex.make(1, Q5.zero())
    v = step_toward_end(base, End.finite(Q5.element(3)))
    assert step_toward_end(v, End.infinity()) == base


def test_paths():
    base = Vertex.base(Q5)
    assert path_between(base, base) == [base]
    far = Vertex.make(2, Q5.zero())
    assert len(path_between(base, far)) == 3
    rng = random.Random(4)
    for _ in range(20):
        u, v = random_vertex(rng, Q5), random_vertex(rng, Q5)
        path = path_between(u, v)
        assert len(path) == vertex_distance(u, v) + 1
        assert path == list(reversed(path_between(v, u)))


def test_overlap_examples():
    minus = -Mat2.identity(Q5)
    assert fixed_overlap_on_axis(minus, B_(), 5).kind == "exceeds_radius"
    S = M([[0, -1], [1, 0]])
    ov = fixed_overlap_on_axis(S, C_(), 6)
    assert ov.kind == "segment" and ov.length == 0
    # an upper unipotent fixes the half of the diagonal axis toward infinity
    assert fixed_overlap_on_axis(M([[1, "p^2"], [0, 1]]), C_(), 6).kind == "exceeds_radius"


def test_end_pair_stabilisers():
    inf, zero = End.infinity(), End.finite(Q5.zero())
    assert stabilizes_end_pair(C_(), inf, zero)
    S = M([[0, -1], [1, 0]])
    assert act_on_end(S, inf).agrees(zero) and stabilizes_end_pair(S, inf, zero)
    rng = random.Random(2)
    hits = 0
    for _ in range(30):
        g = random_sl2(rng, Q5)
        e1, e2 = End.finite(Q5.element(rng.randint(1, 50))), End.finite(Q5.element(rng.randint(51, 99)))
        hits += stabilizes_end_pair(g, e1, e2) and not g.is_central()
    assert hits <= 2


# --- oracles -------------------------------------------------------------------------


def bfs_distances(start, radius):
    dist = {start: 0}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        if dist[v] == radius:
            continue
        for w in neighbors(v):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


@pytest.mark.parametrize("field", [Q2, Q3, FieldDesc.parse("laurent:2")])
def test_distance_matches_breadth_first_search(field):
    rng = random.Random(field.p)
    for _ in range(4):
        u = random_vertex(rng, field, 4)
        for w, d in bfs_distances(u, 4).items():
            assert vertex_distance(u, w) == d


@pytest.mark.parametrize("p", [2, 3, 5])
def test_displacement_of_base_matches_elementary_divisors(p):
    rng = random.Random(10 + p)
    f = FieldDesc.parse(f"padic:{p}")
    for _ in range(60):
        X = [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(1)]]
        for _ in range(4):
            x = Fraction(rng.randint(-5, 5)) * Fraction(p) ** rng.randint(-2, 2)
            E = [[1, x], [0, 1]] if rng.random() < 0.5 else [[1, 0], [x, 1]]
            X = [[sum(X[i][m] * E[m][j] for m in range(2)) for j in range(2)] for i in range(2)]
        g = Mat2(*(f.element(x) if x else f.zero() for row in X for x in row))
        assert displacement(g, Vertex.base(f)) == tree_distance(X, p)


# --- properties ----------------------------------------------------------------------


@st.composite
def tree_samples(draw):
    p = draw(st.sampled_from([2, 3, 5]))
    f = FieldDesc.parse(f"padic:{p}", 32)
    rng = random.Random(draw(st.integers(0, 10**9)))
    return f, rng


@settings(max_examples=80, deadline=None)
@given(tree_samples())
def test_metric_axioms(sample):
    f, rng = sample
    u, v, w = (random_vertex(rng, f) for _ in range(3))
    assert vertex_distance(u, v) == vertex_distance(v, u)
    assert (vertex_distance(u, v) == 0) == (u == v)
    assert vertex_distance(u, w) <= vertex_distance(u, v) + vertex_distance(v, w)


@settings(max_examples=80, deadline=None)
@given(tree_samples())
def test_action_is_an_isometric_group_action(sample):
    f, rng = sample
    g, h = random_sl2(rng, f), random_sl2(rng, f)
    u, v = random_vertex(rng, f), random_vertex(rng, f)
    assert vertex_distance(apply(g, u), apply(g, v)) == vertex_distance(u, v)
    assert apply(g, apply(h, u)) == apply(mat_mul(g, h), u)
    assert apply(mat_inv(g), apply(g, u)) == u


@settings(max_examples=80, deadline=None)
@given(tree_samples())
def test_displacement_parity_and_floor(sample):
    f, rng = sample
    g, v = random_sl2(rng, f), random_vertex(rng, f)
    d, length = displacement(g, v), classify(g).length
    assert d >= length and (d - length) % 2 == 0


@settings(max_examples=40, deadline=None)
@given(tree_samples())
def test_rays_to_a_fixed_end_merge(sample):
    f, rng = sample
    g = random_sl2(rng, f)
    fe = fixed_ends(g)
    if fe.kind not in ("one", "two"):
        return
    v = random_vertex(rng, f)
    e = fe.ends[0]
    a, b = v, apply(g, v)
    trail_a, trail_b = {a}, {b}
    for _ in range(vertex_distance(a, b)):
        a, b = step_toward_end(a, e), step_toward_end(b, e)
        trail_a.add(a)
        trail_b.add(b)
    assert trail_a & trail_b


def test_translation_length_by_brute_force():
    rng = random.Random(7)
    f = FieldDesc.parse("padic:3", 24)
    checked = 0
    while checked < 15:
        g = random_sl2(rng, f)
        c = classify(g)
        if not c.hyperbolic or c.length > 6:
            continue
        ax = hyperbolic_axis(g)
        assert min_displacement(g, ax.base_point, 3) == c.length
        assert all(displacement(g, v) == c.length for v in axis_vertices(ax, 3))
        checked += 1


def test_ball_sizes():
    base = Vertex.base(Q3)
    assert [len(ball(base, r)) for r in range(4)] == [1, 5, 17, 53]
