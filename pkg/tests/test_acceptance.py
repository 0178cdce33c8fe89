"""Acceptance suite: one test per criterion, at the stated tolerances."""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from constraint_opinion import constraints as cs
from constraint_opinion import dynamics as dyn
from constraint_opinion import metrics as mt
from constraint_opinion.constraints import DomainSpec, Space
from constraint_opinion.dsl import bundled
from constraint_opinion.semiring import builtin_semiring, law_check


def values(c, var):
    return np.array([float(cs.evaluate(c, {var: v})) for v in c.domains.domain(var)])


def converge(model, tol=1e-9, max_steps=10_000):
    return dyn.run(model.influence, model.opinions, update=model.update, tol=tol, max_steps=max_steps)


def disj(*cons):
    out = cons[0]
    for c in cons[1:]:
        out = out + c
    return out


def conj(*cons):
    out = cons[0]
    for c in cons[1:]:
        out = out * c
    return out


@pytest.mark.criterion(1)
def test_degroot_baseline():
    """DeGroot step gives {0: 0.36, 1: 0.64}; limit matrix [[1,0],[1,0]]; under 1 s"""
    start = time.perf_counter()
    m = bundled("degroot_tables")
    B1 = dyn.step_matrix(m.influence, m.opinions)
    lim = dyn.limit_matrix(m.influence)
    elapsed = time.perf_counter() - start
    np.testing.assert_allclose(values(B1[1], "p"), [0.36, 0.64], atol=1e-9, rtol=0)
    np.testing.assert_allclose(values(B1[0], "p"), [0.3, 0.7], atol=1e-9, rtol=0)
    assert lim.limit is not None and lim.equal_rows
    np.testing.assert_allclose(lim.limit, [[1, 0], [1, 0]], atol=1e-6, rtol=0)
    assert elapsed < 1.0


@pytest.mark.criterion(2)
def test_boolean_dynamics():
    """Boolean M1 stabilises at step 1, M2 fixes B, M3 cycles with period 2, M4 tables exact"""
    m1 = bundled("boolean_m1")
    sp = m1.space
    c1, c2 = sp.atom("x", "<=", 42), sp.atom("y", "<=", 25)
    c3, c4 = sp.atom("x", ">=", 15), sp.atom("y", ">=", 66)
    d1, d2 = c1 * c2, c3 + c4
    assert cs.equals(m1.opinions[0], d1) and cs.equals(m1.opinions[1], d2)

    tr = converge(m1)
    assert (tr.verdict.kind, tr.verdict.step) == ("converged", 1)
    assert cs.equals(tr.final[0], d1) and cs.equals(tr.final[1], d1 + d2)

    m2 = bundled("boolean_m2")
    for B in [(d1, d2), (d2, d1), (c1, c4), (sp.one, sp.zero)]:
        assert all(cs.equals(a, b) for a, b in zip(dyn.step_matrix(m2.influence, B), B))

    tr3 = converge(bundled("boolean_m3"), max_steps=50)
    assert tr3.verdict.kind == "cycle" and tr3.verdict.period == 2

    m4 = bundled("boolean_m4")
    got = dyn.step_matrix(m4.influence, m4.opinions)
    want1 = (c1 * c2) + (sp.atom("x", ">=", 15) * sp.atom("y", "<=", 20))
    want2 = (sp.between("x", 10, 42) * sp.atom("y", "<=", 25)) + c3 + c4
    assert np.array_equal(got[0].expand(("x", "y")), want1.expand(("x", "y")))
    assert np.array_equal(got[1].expand(("x", "y")), want2.expand(("x", "y")))


@pytest.mark.criterion(3)
@pytest.mark.parametrize("name,hi,lo", [
    ("interval_m1", 0.467, 0.022),
    ("interval_m2", 0.255, 0.163),
    ("interval_m3", 0.35, 0.1),
])
def test_interval_consensus(name, hi, lo):
    """Interval consensus triplet within 0.005 per entry, under 5 s each"""
    start = time.perf_counter()
    tr = converge(bundled(name))
    elapsed = time.perf_counter() - start
    assert tr.verdict.kind == "converged"
    shared = dyn.consensus_check(tr.final)
    assert shared is not None
    for c in tr.final:
        np.testing.assert_allclose(values(c, "p"), [hi, hi, lo, lo, lo], atol=0.005, rtol=0)
    assert elapsed < 5.0


@pytest.mark.criterion(4)
def test_extremes():
    """Extreme-position consensus c1 and c2 within 0.01 per entry"""
    c1 = converge(bundled("extremes_b1")).final
    c2 = converge(bundled("extremes_b2")).final
    for c in c1:
        np.testing.assert_allclose(values(c, "p"), [0.36, 0.13, 0.19, 0.00, 0.36], atol=0.01, rtol=0)
    for c in c2:
        np.testing.assert_allclose(values(c, "p"), [0.36, 0.64, 0.64, 0.64, 0.36], atol=0.01, rtol=0)


@pytest.mark.criterion(5)
def test_topics():
    """Topics consensus {0.36, 0.52, 0.26} and {0.36, 0.43, 0.26} within 0.01"""
    const = converge(bundled("topics_constant"))
    cond = converge(bundled("topics_conditional"))
    assert dyn.consensus_check(const.final) is not None
    assert dyn.consensus_check(cond.final) is not None
    got_const = values(const.final[0], "p")
    got_cond = values(cond.final[0], "p")
    np.testing.assert_allclose(got_cond, [0.36, 0.43, 0.26], atol=0.01, rtol=0)
    np.testing.assert_allclose(got_const, [0.36, 0.52, 0.26], atol=0.01, rtol=0)


@pytest.mark.criterion(6)
def test_committee():
    """Committee consensus values and projection onto y (1.97, 3.0) within 0.01"""
    c = converge(bundled("committee")).final[0]
    got = values(c, "x")
    want = [0, 0.28, 0.28, 0.28, 0.46, 0.44, 0.72, 0.53, 0.25, 0.25, 0.25]
    np.testing.assert_allclose(got, want, atol=0.01, rtol=0)

    ext = converge(bundled("committee_external")).final[0]
    d = cs.project(ext, ["y"])
    np.testing.assert_allclose(values(d, "y"), [1.97, 3.0], atol=0.01, rtol=0)


@pytest.mark.criterion(7)
def test_distance_example():
    """Forward distances 15 and sqrt(8989), L1 133, Linf 75, ratios 1.0 and 0.106; brute force under 10 s"""
    start = time.perf_counter()
    m = bundled("distance")
    a, b = m.opinions
    xy = ("x", "y")
    A, B = mt.solution_points(a, True, xy), mt.solution_points(b, True, xy)
    assert len(A) == 43 * 26
    fwd_ab = mt.forward_distance(A, B, method="brute")
    fwd_ba = mt.forward_distance(B, A, method="brute")
    taxi = mt.forward_distance(B, A, mt.MetricConfig("L1"), method="brute")
    cheb = mt.forward_distance(B, A, mt.MetricConfig("Linf"), method="brute")
    grid = mt.grid_points(a, xy)
    assert len(grid) == 101 * 101
    extremes = mt.forward_distance(grid, B, method="brute")
    diameter = mt.diameter(a, xy)
    elapsed = time.perf_counter() - start

    assert fwd_ab == 15
    assert abs(fwd_ba - math.sqrt(8989)) <= 1e-6
    assert taxi == 133 and cheb == 75
    assert abs(fwd_ab / extremes - 1.0) <= 1e-3
    assert abs(fwd_ab / diameter - 0.106) <= 1e-3
    assert elapsed < 10.0
    # the tree-backed path agrees
    assert mt.similarity_ratio(a, b, True) == (fwd_ab / extremes, fwd_ab / diameter)


@pytest.mark.criterion(8)
def test_polarization_over_time():
    """delta_geq_0.5 pairwise distances are 0 from t = 3; the t = 0 maximum pair is (2,3)"""
    m = bundled("committee_external")
    B = m.opinions
    series = []
    for _ in range(8):
        series.append(mt.pairwise(B, 0.5, mode="geq"))
        B = dyn.step_matrix(m.influence, B)
    first = series[0]
    assert max(first, key=first.get) == (1, 2)
    assert sorted(first.values())[-1] > sorted(first.values())[-2]
    for t, pairs in enumerate(series):
        if t >= 3:
            assert all(v == 0 for v in pairs.values()), (t, pairs)
        else:
            assert any(v > 0 for v in pairs.values())


@pytest.mark.criterion(9)
def test_semiring_laws():
    """Zero law violations over 100 random triples for each builtin semiring"""
    rng = np.random.default_rng(9)
    # The tolerance is absolute, so samples stay in the range where products
    # are exact to well under 1e-9 in double precision.
    draws = {
        "boolean": lambda: list(rng.random(3) < 0.5),
        "nonneg-real": lambda: list(rng.random(3) * 10),
        "real-ring": lambda: list(rng.normal(size=3) * 10),
    }
    for name, draw in draws.items():
        sr = builtin_semiring(name)
        report = [msg for _ in range(100) for msg in law_check(sr, draw())]
        assert report == [], (name, report[:3])
    exact = builtin_semiring("real-ring", exact=True)
    report = [
        msg for _ in range(100)
        for msg in law_check(exact, [Fraction(int(rng.integers(-99, 99)), int(rng.integers(1, 30))) for _ in range(3)])
    ]
    assert report == []


def random_cp(space, rng):
    dom = space.domains.domain("p")
    w = rng.random(len(dom)) * (rng.random(len(dom)) < 0.7)
    if w.sum() == 0:
        w[0] = 1
    return space.table("p", dict(zip(dom, w / w.sum())))


@pytest.mark.criterion(10)
def test_probability_preserved():
    """100 random row-stochastic matrices keep probability opinions probabilities"""
    rng = np.random.default_rng(10)
    space = Space(builtin_semiring("nonneg-real"), DomainSpec(("p",), (tuple(range(1, 6)),)))
    for _ in range(100):
        n = int(rng.integers(1, 7))
        W = rng.random((n, n)) * (rng.random((n, n)) < 0.5)
        W[np.arange(n), rng.integers(n, size=n)] += 0.05
        W /= W.sum(axis=1, keepdims=True)
        M = dyn.InfluenceGraph.constants(space, W)
        B = [random_cp(space, rng) for _ in range(n)]
        assert dyn.probability_preservation_check(M, B) is True
        assert all(cs.is_probability(c) for c in dyn.step_matrix(M, B))


def random_consensus_matrix(rng, n):
    while True:
        W = rng.random((n, n)) * (rng.random((n, n)) < 0.4)
        W[np.arange(n), np.arange(n)] += rng.random(n) * (rng.random(n) < 0.5)
        if (W.sum(axis=1) == 0).any():
            continue
        W /= W.sum(axis=1, keepdims=True)
        return W


@pytest.mark.criterion(11)
def test_consensus_theorem():
    """200 random stochastic, strongly connected, aperiodic matrices reach consensus"""
    rng = np.random.default_rng(11)
    space = Space(builtin_semiring("nonneg-real"), DomainSpec(("p",), (tuple(range(1, 6)),)))
    checked = 0
    while checked < 200:
        n = int(rng.integers(1, 7))
        M = dyn.InfluenceGraph.constants(space, random_consensus_matrix(rng, n))
        if not (dyn.is_row_stochastic(M) and dyn.is_strongly_connected(M) and dyn.is_aperiodic(M)):
            continue
        checked += 1
        lim = dyn.limit_matrix(M, tol=1e-8)
        assert lim.converged and lim.equal_rows
        B = [random_cp(space, rng) for _ in range(n)]
        tr = dyn.run(M, B, max_steps=100_000, tol=1e-10)
        assert tr.verdict.kind == "converged"
        assert dyn.consensus_check(tr.final, tol=1e-6) is not None


@pytest.mark.criterion(12)
def test_biased_update_stochastic():
    """Rows of I + N(U - V) sum to 1 within 1e-9; constant-one bias equals the plain step within 1e-12"""
    rng = np.random.default_rng(12)
    space = Space(builtin_semiring("real-ring"), DomainSpec(("p",), ((0, 1),)))
    for _ in range(100):
        n = int(rng.integers(1, 7))
        W = rng.random((n, n)) * (rng.random((n, n)) < 0.6)
        W[np.arange(n), rng.integers(n, size=n)] += 0.05
        W /= W.sum(axis=1, keepdims=True)
        M = dyn.InfluenceGraph.constants(space, W)
        B = [space.table("p", {0: 1 - b, 1: b}) for b in rng.random(n)]
        mats = dyn.update_matrices(M, B, dyn.CONFIRMATION)
        T = mats.transition().astype(float)
        np.testing.assert_allclose(T.sum(axis=1), 1.0, atol=1e-9, rtol=0)
        np.testing.assert_allclose(mats.zero_drift().astype(float), 0.0, atol=1e-9, rtol=0)
        plain = dyn.step_matrix(M, B)
        biased = dyn.step_biased(M, B, dyn.CONSTANT_ONE)
        assert dyn.state_distance(plain, biased) <= 1e-12


def brute_hausdorff(A, B):
    if not A and not B:
        return 0.0
    if not A or not B:
        return math.inf
    forward = lambda P, Q: max(min(math.dist(p, q) for q in Q) for p in P)
    return max(forward(A, B), forward(B, A))


@pytest.mark.criterion(13)
def test_hausdorff_oracle():
    """Engine Hausdorff equals a brute-force double loop on 50 random subset pairs of a 20x20 grid"""
    rng = np.random.default_rng(13)
    grid = list(itertools.product(range(20), range(20)))
    for k in range(50):
        pa, pb = rng.random(2)
        A = [p for p in grid if rng.random() < pa]
        B = [p for p in grid if rng.random() < pb * 0.3]
        if k == 0:
            B = []
        want = brute_hausdorff(A, B)
        assert mt.hausdorff(A, B) == want
        arrays = [np.array(P, dtype=float).reshape(-1, 2) for P in (A, B)]
        assert mt.hausdorff(*arrays, method="brute") == want


@pytest.mark.criterion(14)
def test_beliefs():
    """Belief updates under N and M give the stated tables; both encodings agree"""
    mm, mn = bundled("beliefs_m"), bundled("beliefs_n")
    sp = mm.space
    tag = lambda c, a: c * sp.atom("who", "=", a)
    ca = tag(sp.atom("x", ">", 42) * sp.atom("y", "<=", 30), "a") + tag(sp.atom("x", "<=", 20), "b")
    cb = tag(sp.atom("x", ">", 10) * sp.atom("y", "=", 20), "b")
    assert cs.equals(mm.opinions[0], ca) and cs.equals(mm.opinions[1], cb)

    dn = dyn.belief_step(mn.influence, mn.opinions, check=True)
    assert cs.equals(dn[0], ca) and cs.equals(dn[1], ca + cb)

    dm = dyn.belief_step(mm.influence, mm.opinions, check=True)
    assert cs.equals(dm[0], cs.tag_component(ca, "a") + cs.tag_component(cb, "b"))
    assert cs.equals(dm[0], tag(sp.atom("x", ">", 42) * sp.atom("y", "<=", 30), "a")
                     + tag(sp.atom("x", ">", 10) * sp.atom("y", "=", 20), "b"))
    want_db = (tag(sp.atom("x", ">", 42) * sp.atom("y", "<=", 30), "a")
               + tag(sp.atom("x", "<=", 20), "b")
               + tag(sp.atom("x", ">", 20) * sp.atom("y", "=", 20), "b"))
    assert cs.equals(dm[1], want_db)
    # the component-wise path and the direct product on the tagged encoding
    for model in (mm, mn):
        direct = dyn.step_matrix(model.influence, model.opinions)
        parts = dyn.belief_step(model.influence, model.opinions, check=False)
        assert all(cs.equals(x, y) for x, y in zip(direct, parts))
