from fractions import Fraction

import pytest

from constraint_opinion import builders
from constraint_opinion import constraints as cs
from constraint_opinion.constraints import DomainSpec, Space
from constraint_opinion.errors import CapabilityError, ModelError
from constraint_opinion.semiring import builtin_semiring

REAL = builtin_semiring("nonneg-real")
P5 = Space(REAL, DomainSpec.of({"p": range(1, 6)}))
P3 = Space(REAL, DomainSpec.of({"p": range(1, 4)}))
COMMITTEE = Space(REAL, DomainSpec.of({"x": range(11), "y": [0, 1]}))


def column(c, var="p"):
    return [cs.evaluate(c, {var: v}) for v in c.domains.domain(var)]


def test_interval_weights():
    assert column(builders.interval(P5, "p", 2, 4)) == pytest.approx([0, 1 / 3, 1 / 3, 1 / 3, 0])


def test_interval_exact():
    sp = Space(builtin_semiring("nonneg-real", exact=True), DomainSpec.of({"p": range(1, 6)}))
    c = builders.interval(sp, "p", 1, 3)
    assert column(c) == [Fraction(1, 3)] * 3 + [0, 0]
    assert cs.is_probability(c)


def test_interval_errors():
    with pytest.raises(ModelError):
        builders.interval(P5, "p", 4, 2)
    with pytest.raises(ModelError):
        builders.interval(P5, "p", 0, 2)
    boolean = Space(builtin_semiring("boolean"), DomainSpec.of({"p": range(1, 6)}))
    with pytest.raises(CapabilityError):
        builders.interval(boolean, "p", 1, 2)


def test_extreme_uses_domain_ends():
    assert column(builders.extreme(P5, "p", 0.4, 0.05)) == [0.4, 0.05, 0.05, 0.05, 0.4]


def test_topics():
    assert column(builders.topics(P3, "p", 0.3, 0.7, 0.1)) == [0.3, 0.7, 0.1]
    assert column(builders.topics(P5, "p", 0.5, 0.1)) == [0.5, 0.1, 0.1, 0.1, 0.1]


def test_cond_matches_its_definition():
    c = builders.cond(COMMITTEE, "x", "y", 5, 6, 3, 5)
    for x in range(11):
        for y in (0, 1):
            first = y == 1 or 5 <= x <= 6
            second = y == 0 or 3 <= x <= 5
            assert cs.evaluate(c, {"x": x, "y": y}) == float(first and second)


def test_cond_fix():
    c = builders.cond_fix(COMMITTEE, "x", "y", 1, 4, 6)
    for x in range(11):
        for y in (0, 1):
            assert cs.evaluate(c, {"x": x, "y": y}) == float(y == 1 and 4 <= x <= 6)
    with pytest.raises(ModelError):
        builders.cond_fix(COMMITTEE, "x", "y", 2, 4, 6)
