import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from constraint_opinion import builders
from constraint_opinion import constraints as cs
from constraint_opinion.constraints import DomainSpec, Space
from constraint_opinion.errors import CapabilityError, EvaluationError, SemiringMismatch
from constraint_opinion.semiring import builtin_semiring

BOOL = builtin_semiring("boolean")
REAL = builtin_semiring("nonneg-real")

GRID = Space(BOOL, DomainSpec.of({"x": range(101), "y": range(101)}))
P5 = Space(REAL, DomainSpec.of({"p": range(1, 6)}))
SMALL = Space(REAL, DomainSpec.of({"x": range(3), "y": range(2), "z": range(2)}))


def c1():
    return GRID.atom("x", "<=", 42)


def c2():
    return GRID.atom("y", "<=", 25)


def brute_valuations(space):
    doms = space.domains
    for vals in itertools.product(*doms.domains):
        yield dict(zip(doms.variables, vals))


# --- evaluation ------------------------------------------------------------

def test_eval_atom():
    assert cs.evaluate(c1(), {"x": 40}) is True
    assert cs.evaluate(c1(), {"x": 43}) is False


def test_eval_constant():
    c = P5.constant(0.5)
    assert c.is_constant and c.support == ()
    assert cs.evaluate(c, {}) == 0.5 and cs.evaluate(c, {"p": 4}) == 0.5


def test_eval_interval():
    c = builders.interval(P5, "p", 1, 2)
    assert cs.evaluate(c, {"p": 1}) == 0.5
    assert cs.evaluate(c, {"p": 3}) == 0


def test_eval_unbound_variable():
    with pytest.raises(EvaluationError, match="unbound"):
        cs.evaluate(c1(), {"y": 3})


def test_eval_outside_domain():
    with pytest.raises(EvaluationError, match="outside the domain"):
        cs.evaluate(c1(), {"x": 101})


# --- combination -----------------------------------------------------------

def test_conjunction_of_atoms():
    both = c1() * c2()
    assert both.support == ("x", "y")
    for x, y in [(42, 25), (43, 25), (42, 26), (0, 0), (100, 100)]:
        assert cs.evaluate(both, {"x": x, "y": y}) == (x <= 42 and y <= 25)


def test_times_one_is_identity():
    c = c1() * c2()
    assert cs.equals(c * GRID.one, c)
    assert np.array_equal((c * GRID.one).table, c.table)


def test_top_absorbs_disjunction():
    assert cs.equals(GRID.one + GRID.atom("y", "<=", 20), GRID.one)
    assert (GRID.one + GRID.atom("y", "<=", 20)).is_constant


def test_semiring_mismatch():
    other = Space(REAL, DomainSpec.of({"x": range(101), "y": range(101)}))
    with pytest.raises(SemiringMismatch):
        cs.combine(c1(), other.atom("x", "<=", 3), "plus")


def test_minus_needs_a_ring():
    with pytest.raises(CapabilityError):
        P5.constant(1.0) - P5.constant(0.5)


# --- support ---------------------------------------------------------------

def test_minimize_drops_irrelevant_variable():
    c = SMALL.from_function(("x", "y"), lambda x, y: x / 10)
    assert c.support == ("x",)


def test_minimize_constant_table():
    c = cs.Constraint(SMALL, ("x",), np.full(3, 0.4))
    assert cs.minimize_support(c).support == ()


def test_conjunction_keeps_both_variables():
    assert cs.minimize_support(c1() * c2()).support == ("x", "y")


# --- projection ------------------------------------------------------------

def test_projection_of_conjunction():
    assert cs.equals(cs.project(c1() * c2(), {"x"}), c1())


def test_projection_onto_support_is_identity():
    c = c1() * c2()
    assert cs.equals(cs.project(c, c.support), c)


# --- inverse ---------------------------------------------------------------

def test_inverse_of_conjunction():
    sols = cs.inverse(c1() * c2(), True)
    assert len(sols) == 43 * 26
    assert all(v["x"] <= 42 and v["y"] <= 25 for v in sols)


def test_inverse_of_constant():
    c = P5.constant(0.5)
    assert cs.inverse(c, 0.5) == [{}]
    assert cs.inverse(c, 0.3) == []


def test_inverse_of_interval():
    assert cs.inverse(builders.interval(P5, "p", 1, 2), 0.5) == [{"p": 1}, {"p": 2}]


def test_inverse_geq():
    c = builders.interval(P5, "p", 1, 2)
    assert cs.inverse_geq(c, 0.5) == [{"p": 1}, {"p": 2}]
    assert len(cs.inverse_geq(c, 0.0)) == 5
    d = c1()
    assert cs.inverse_geq(d, True) == cs.inverse(d, True)


def test_inverse_geq_unordered():
    ring = Space(builtin_semiring("real-ring"), DomainSpec.of({"p": range(3)}))
    with pytest.raises(CapabilityError):
        cs.inverse_geq(ring.constant(1.0), 0.5)


# --- probability constraints -----------------------------------------------

@pytest.mark.parametrize("a,b", [(a, b) for a in range(1, 6) for b in range(a, 6)])
def test_intervals_are_probabilities(a, b):
    assert cs.is_probability(builders.interval(P5, "p", a, b))


def test_probability_tables():
    sp = Space(REAL, DomainSpec.of({"p": [0, 1]}))
    assert cs.is_probability(sp.table("p", {0: 0.3, 1: 0.7}))
    assert not cs.is_probability(sp.table("p", {0: 0.3, 1: 0.3}))


def test_probability_counts_extensions():
    sp = Space(REAL, DomainSpec.of({"p": [0, 1], "q": [0, 1]}))
    c = sp.table("p", {0: 0.3, 1: 0.7})
    raw, full = cs.probability_mass(c)
    assert raw == pytest.approx(1.0) and full == pytest.approx(2.0)
    assert not cs.is_probability(c)


def test_probability_boolean():
    with pytest.raises(CapabilityError):
        cs.is_probability(c1())


# --- beliefs ---------------------------------------------------------------

BELIEF = Space(BOOL, DomainSpec.of({"who": ["a", "b"], "x": range(101), "y": range(101)}, tag="who"))


def tagged(c, agent):
    return c * BELIEF.atom("who", "=", agent)


def test_tag_component_example():
    a_part = tagged(BELIEF.atom("x", ">", 42) * BELIEF.atom("y", "<=", 30), "a")
    b_part = tagged(BELIEF.atom("x", "<=", 20), "b")
    c_a = a_part + b_part
    assert cs.equals(cs.tag_component(c_a, "b"), b_part)
    assert cs.equals(cs.tag_component(c_a, "a"), a_part)


def test_tag_component_of_other_agent_only():
    c = tagged(BELIEF.atom("x", "<=", 20), "b")
    assert cs.equals(cs.tag_component(c, "a"), BELIEF.zero)


def test_untagged_constraint():
    with pytest.raises(TypeError):
        cs.tag_component(c1(), "a")


# --- properties ------------------------------------------------------------

values = st.floats(min_value=0, max_value=5, allow_nan=False)
tables = st.lists(values, min_size=12, max_size=12)


def from_list(xs, support=("x", "y", "z")):
    shape = SMALL.domains.shape(support)
    return cs.Constraint(SMALL, support, np.array(xs[: int(np.prod(shape))]).reshape(shape))


supports = st.sampled_from([("x",), ("y",), ("x", "y"), ("y", "z"), ("x", "y", "z"), ()])


@st.composite
def constraints(draw):
    support = draw(supports)
    return from_list(draw(tables), support).minimized()


@settings(max_examples=60)
@given(constraints(), constraints(), st.sampled_from(["plus", "times"]))
def test_pointwise_lifting(c, d, op):
    out = cs.combine(c, d, op)
    fn = {"plus": lambda a, b: a + b, "times": lambda a, b: a * b}[op]
    assert set(out.support) <= set(c.support) | set(d.support)
    for eta in brute_valuations(SMALL):
        assert cs.evaluate(out, eta) == pytest.approx(fn(cs.evaluate(c, eta), cs.evaluate(d, eta)), abs=1e-9)


@settings(max_examples=60)
@given(constraints(), st.sets(st.sampled_from(["x", "y", "z"])))
def test_projection_soundness(c, keep):
    out = cs.project(c, keep)
    assert set(out.support) <= keep & set(c.support)
    support = c.support
    for eta in brute_valuations(SMALL):
        total = sum(
            cs.evaluate(c, other)
            for other in brute_valuations(SMALL)
            if all(other[v] == eta[v] for v in keep)
            and all(other[v] == eta[v] for v in SMALL.domains.variables if v not in support)
        )
        assert cs.evaluate(out, eta) == pytest.approx(total, abs=1e-9)


@settings(max_examples=60)
@given(constraints())
def test_inverse_partitions(c):
    seen = []
    for s in cs.image(c):
        seen += [tuple(sorted(v.items())) for v in cs.inverse(c, s)]
    assert len(seen) == len(set(seen)) == max(1, c.table.size)


@settings(max_examples=60)
@given(tables, supports)
def test_minimize_idempotent(xs, support):
    c = from_list(xs, support)
    m = cs.minimize_support(c)
    assert cs.minimize_support(m) is m
    # variables are dropped when the table is constant up to the semiring tolerance
    for eta in brute_valuations(SMALL):
        assert REAL.close(cs.evaluate(m, eta), cs.evaluate(c, eta))


@settings(max_examples=40)
@given(st.lists(st.booleans(), min_size=2 * 4 * 3, max_size=2 * 4 * 3))
def test_tagged_decomposition(bits):
    sp = Space(BOOL, DomainSpec.of({"who": ["a", "b"], "u": range(4), "v": range(3)}, tag="who"))
    c = cs.Constraint(sp, ("who", "u", "v"), np.array(bits).reshape(2, 4, 3)).minimized()
    parts = cs.tag_components(c)
    assert np.array_equal(cs.total(parts.values(), sp).expand(("who", "u", "v")), c.expand(("who", "u", "v")))


def test_constraints_are_immutable():
    c = c1()
    with pytest.raises(AttributeError):
        c.support = ()
    with pytest.raises(ValueError):
        c.table[0] = False


def test_domain_spec_validation():
    with pytest.raises(ValueError):
        DomainSpec(("x", "x"), ((1,), (2,)))
    with pytest.raises(ValueError):
        DomainSpec(("x",), ((),))
