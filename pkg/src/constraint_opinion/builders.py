"""Constraint families used to write opinions and influences compactly."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .constraints import Constraint, Space, combine
from .errors import CapabilityError, ModelError


def _numeric(space: Space, what: str) -> None:
    if space.semiring.kind == "boolean":
        raise CapabilityError(f"{what} needs a numeric semiring")


def _in_domain(space: Space, var: str, *values) -> None:
    dom = space.domains.domain(var)
    for v in values:
        if v not in dom:
            raise ModelError(f"bound {v!r} is outside the domain of {var!r}")


def interval(space: Space, var: str, low, high) -> Constraint:
    """Uniform preference ``1 / (1 + high - low)`` on ``[low, high]``, zero elsewhere."""
    _numeric(space, "interval")
    _in_domain(space, var, low, high)
    if low > high:
        raise ModelError(f"empty interval [{low}, {high}]")
    sr = space.semiring
    width = 1 + (high - low)
    weight = Fraction(1, width) if sr.kind == "rational" else sr.div(sr.one, sr.coerce(width))
    return space.from_function((var,), lambda v: weight if low <= v <= high else sr.zero)


def extreme(space: Space, var: str, high, low) -> Constraint:
    """``high`` on the two ends of the domain of ``var``, ``low`` in between."""
    dom = space.domains.domain(var)
    ends = (min(dom), max(dom))
    return space.from_function((var,), lambda v: high if v in ends else low)


def topics(space: Space, var: str, *values) -> Constraint:
    """``values[i-1]`` when ``var == i`` for i < k, the last value otherwise."""
    if not values:
        raise ModelError("topics needs at least one value")
    head, last = values[:-1], values[-1]
    return space.from_function(
        (var,), lambda v: head[v - 1] if isinstance(v, int) and 1 <= v <= len(head) else last
    )


def _either(a: Constraint, b: Constraint) -> Constraint:
    # crisp disjunction of two 0/1 indicators
    sr = a.semiring
    if sr.kind == "boolean":
        return combine(a, b, "plus")
    support = a.domains.ordered(a.support + b.support)
    on = (a.expand(support) != sr.zero) | (b.expand(support) != sr.zero)
    return Constraint(a.space, support, np.where(on, sr.one, sr.zero)).minimized()


def cond(space: Space, x: str, y: str, a0, b0, a1, b1) -> Constraint:
    """Conditional preference: ``(y=1 or a0<=x<=b0) times (y=0 or a1<=x<=b1)``."""
    _in_domain(space, x, a0, b0, a1, b1)
    first = _either(space.atom(y, "=", 1), space.between(x, a0, b0))
    second = _either(space.atom(y, "=", 0), space.between(x, a1, b1))
    return combine(first, second, "times")


def cond_fix(space: Space, x: str, y: str, s, a, b) -> Constraint:
    """``{y = s} times {a <= x <= b}``."""
    _in_domain(space, x, a, b)
    _in_domain(space, y, s)
    return combine(space.atom(y, "=", s), space.between(x, a, b), "times")


BUILDERS = {
    "interval": (interval, 1),
    "extreme": (extreme, 1),
    "topics": (topics, 1),
    "cond": (cond, 2),
    "cond_fix": (cond_fix, 2),
}
"""Name -> (function, number of leading variable arguments)."""
