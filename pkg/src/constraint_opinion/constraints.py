"""Soft constraints as dense tables over their support variables.

A constraint maps valuations of the model variables to semiring values.
Only the variables it depends on (its support) index the table; everything
else is implicit.  Tables are numpy arrays whose axes follow the order in
which variables were declared in the :class:`DomainSpec`, so two
constraints over the same space align by broadcasting.

Belief models add a distinguished *tag* variable ranging over agent names;
a tagged constraint is an ordinary constraint whose support may include it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Any, Callable, Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .errors import CapabilityError, EvaluationError, SemiringMismatch
from .semiring import Semiring

Valuation = Mapping[str, Any]


@dataclass(frozen=True)
class DomainSpec:
    """Model variables, each with a finite ordered domain.

    ``tag`` names the agent-tag variable when the model carries beliefs.
    """

    variables: tuple[str, ...]
    domains: tuple[tuple, ...]
    tag: Optional[str] = None

    def __post_init__(self):
        if len(set(self.variables)) != len(self.variables):
            raise ValueError(f"duplicate variable names in {self.variables}")
        if len(self.variables) != len(self.domains):
            raise ValueError("one domain per variable is required")
        for var, dom in zip(self.variables, self.domains):
            if not dom:
                raise ValueError(f"domain of {var!r} is empty")
            if len(set(dom)) != len(dom):
                raise ValueError(f"domain of {var!r} repeats a value")
        if self.tag is not None and self.tag not in self.variables:
            raise ValueError(f"tag variable {self.tag!r} is not declared")

    @classmethod
    def of(cls, spec: Mapping[str, Iterable], tag: Optional[str] = None) -> "DomainSpec":
        return cls(tuple(spec), tuple(tuple(v) for v in spec.values()), tag)

    @cached_property
    def _positions(self) -> dict[str, int]:
        return {v: k for k, v in enumerate(self.variables)}

    @cached_property
    def _indices(self) -> dict[str, dict]:
        return {v: {d: k for k, d in enumerate(dom)} for v, dom in zip(self.variables, self.domains)}

    def domain(self, var: str) -> tuple:
        return self.domains[self.position(var)]

    def position(self, var: str) -> int:
        try:
            return self._positions[var]
        except KeyError:
            raise EvaluationError(f"undeclared variable {var!r}") from None

    def index(self, var: str, value) -> int:
        try:
            return self._indices[var][value]
        except KeyError:
            if var not in self._indices:
                raise EvaluationError(f"undeclared variable {var!r}") from None
            raise EvaluationError(f"value {value!r} is outside the domain of {var!r}") from None

    def ordered(self, variables: Iterable[str]) -> tuple[str, ...]:
        return tuple(sorted(set(variables), key=self.position))

    def shape(self, variables: Sequence[str]) -> tuple[int, ...]:
        return tuple(len(self.domain(v)) for v in variables)

    @property
    def value_variables(self) -> tuple[str, ...]:
        """Model variables other than the agent tag."""
        return tuple(v for v in self.variables if v != self.tag)


@dataclass(frozen=True)
class Space:
    """A semiring together with the variables constraints range over."""

    semiring: Semiring
    domains: DomainSpec

    def constant(self, value) -> "Constraint":
        return Constraint(self, (), np.asarray(self.semiring.coerce(value), dtype=self.semiring.dtype))

    @property
    def zero(self) -> "Constraint":
        return self.constant(self.semiring.zero)

    @property
    def one(self) -> "Constraint":
        return self.constant(self.semiring.one)

    def from_function(self, support: Iterable[str], fn: Callable[..., Any]) -> "Constraint":
        """Tabulate ``fn(*values)`` over the support, in declaration order."""
        support = self.domains.ordered(support)
        doms = [self.domains.domain(v) for v in support]
        sr = self.semiring
        table = np.empty(self.domains.shape(support), dtype=sr.dtype)
        for idx in itertools.product(*(range(len(d)) for d in doms)):
            table[idx] = sr.coerce(fn(*(d[i] for d, i in zip(doms, idx))))
        return Constraint(self, support, table).minimized()

    def table(self, support: Sequence[str] | str, entries: Mapping, default=None) -> "Constraint":
        """Build from an explicit mapping; missing keys take ``default`` (zero).

        For a single variable keys are plain domain values, otherwise tuples
        in the order of ``support``.
        """
        if isinstance(support, str):
            support = (support,)
        support = tuple(support)
        default = self.semiring.zero if default is None else default
        for key in entries:
            key = key if len(support) > 1 else (key,)
            if len(key) != len(support):
                raise EvaluationError(f"table key {key!r} does not match support {support}")
            for var, val in zip(support, key):
                self.domains.index(var, val)

        def lookup(*vals):
            key = dict(zip(self.domains.ordered(support), vals))
            key = tuple(key[v] for v in support)
            return entries.get(key if len(support) > 1 else key[0], default)

        return self.from_function(support, lookup)

    def indicator(self, var: str, predicate: Callable[[Any], bool]) -> "Constraint":
        """Crisp constraint: one where ``predicate`` holds on ``var``, zero elsewhere."""
        sr = self.semiring
        return self.from_function((var,), lambda v: sr.one if predicate(v) else sr.zero)

    def atom(self, var: str, op: str, value) -> "Constraint":
        """Crisp comparison atom such as ``x <= 42`` evaluated to one/zero."""
        test = _COMPARATORS[op]
        return self.indicator(var, lambda v: test(v, value))

    def between(self, var: str, low, high) -> "Constraint":
        return self.indicator(var, lambda v: low <= v <= high)


_COMPARATORS: dict[str, Callable[[Any, Any], bool]] = {
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
    "=": lambda a, b: a == b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


class Constraint:
    """A soft constraint: a table over ``support`` with values in the space's semiring.

    Instances are immutable.  ``+``, ``*`` and ``-`` are the lifted semiring
    operations; ``c(valuation)`` evaluates.
    """

    __slots__ = ("space", "support", "table")

    def __init__(self, space: Space, support: tuple[str, ...], table: np.ndarray):
        table = np.asarray(table, dtype=space.semiring.dtype)
        if table.shape != space.domains.shape(support):
            raise ValueError(f"table shape {table.shape} does not match support {support}")
        table.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "support", tuple(support))
        object.__setattr__(self, "table", table)

    def __setattr__(self, name, value):
        raise AttributeError("Constraint is immutable")

    @property
    def semiring(self) -> Semiring:
        return self.space.semiring

    @property
    def domains(self) -> DomainSpec:
        return self.space.domains

    @property
    def is_constant(self) -> bool:
        return not self.support

    @property
    def value(self):
        """The value of a constant constraint."""
        if self.support:
            raise ValueError(f"constraint depends on {self.support}; it is not constant")
        return self.semiring.coerce(self.table[()])

    def __repr__(self):
        if self.is_constant:
            return f"Constraint({self.semiring.format(self.value)})"
        return f"Constraint(support={self.support}, entries={self.table.size})"

    def __call__(self, valuation: Valuation):
        return evaluate(self, valuation)

    def __add__(self, other):
        return combine(self, other, "plus")

    def __mul__(self, other):
        return combine(self, other, "times")

    def __sub__(self, other):
        return combine(self, other, "minus")

    def items(self) -> Iterator[tuple[tuple, Any]]:
        """Yield ``(support values, value)`` in table order."""
        doms = [self.domains.domain(v) for v in self.support]
        for idx in itertools.product(*(range(len(d)) for d in doms)):
            yield tuple(d[i] for d, i in zip(doms, idx)), self.semiring.coerce(self.table[idx])

    def expand(self, variables: Sequence[str]) -> np.ndarray:
        """Broadcast the table to ``variables`` (a superset of the support, declaration order)."""
        variables = tuple(variables)
        missing = set(self.support) - set(variables)
        if missing:
            raise ValueError(f"cannot expand to {variables}: support variables {missing} missing")
        view = self.table.reshape(tuple(
            self.table.shape[self.support.index(v)] if v in self.support else 1 for v in variables
        ))
        return np.broadcast_to(view, self.domains.shape(variables))

    def minimized(self) -> "Constraint":
        return minimize_support(self)


def _check_same_space(a: Constraint, b: Constraint) -> None:
    if a.semiring is not b.semiring:
        raise SemiringMismatch(f"cannot combine constraints over {a.semiring!r} and {b.semiring!r}")
    if a.domains != b.domains:
        raise SemiringMismatch("cannot combine constraints over different variable domains")


def evaluate(c: Constraint, valuation: Valuation):
    """Value of ``c`` at ``valuation``; variables outside the support are ignored."""
    idx = []
    for var in c.support:
        if var not in valuation:
            raise EvaluationError(f"valuation leaves support variable {var!r} unbound")
        idx.append(c.domains.index(var, valuation[var]))
    return c.semiring.coerce(c.table[tuple(idx)])


def combine(c1: Constraint, c2: Constraint, op: str) -> Constraint:
    """Pointwise ``plus``/``times`` (or ``minus`` in a ring), support-minimized."""
    _check_same_space(c1, c2)
    sr = c1.semiring
    fn = {"plus": sr.plus, "times": sr.times}.get(op)
    if op == "minus":
        fn = sr.minus
        if fn is None:
            raise CapabilityError(f"semiring {sr.name!r} has no minus")
    if fn is None:
        raise ValueError(f"unknown combinator {op!r}")
    support = c1.domains.ordered(c1.support + c2.support)
    table = fn(c1.expand(support), c2.expand(support))
    return Constraint(c1.space, support, np.asarray(table, dtype=sr.dtype)).minimized()


def scale(c: Constraint, value) -> Constraint:
    """``c`` times the constant ``value``."""
    return combine(c, c.space.constant(value), "times")


def minimize_support(c: Constraint) -> Constraint:
    """Drop every support variable the table does not depend on."""
    table, support = c.table, list(c.support)
    close = c.semiring.close
    for axis in reversed(range(len(support))):
        first = np.take(table, [0], axis=axis)
        if np.all(close(table, first)):
            table = np.take(table, 0, axis=axis)
            del support[axis]
    if len(support) == len(c.support):
        return c
    return Constraint(c.space, tuple(support), table)


def restrict(c: Constraint, bindings: Valuation) -> Constraint:
    """Fix some variables to values; the result no longer depends on them."""
    idx = tuple(
        c.domains.index(v, bindings[v]) if v in bindings else slice(None) for v in c.support
    )
    support = tuple(v for v in c.support if v not in bindings)
    return Constraint(c.space, support, c.table[idx]).minimized()


def project(c: Constraint, variables: Iterable[str]) -> Constraint:
    """Sum out (with ``plus``) every support variable not in ``variables``.

    Only support variables are summed: a variable the constraint does not
    depend on contributes no multiplicity.
    """
    keep = set(variables)
    table, support = c.table, list(c.support)
    for axis in reversed(range(len(support))):
        if support[axis] not in keep:
            table = c.semiring.reduce(table, axis)
            del support[axis]
    return Constraint(c.space, tuple(support), table).minimized()


def equals(c1: Constraint, c2: Constraint, tol: Optional[float] = None) -> bool:
    """Table equality on every valuation (at ``tol`` or the semiring's tolerance)."""
    _check_same_space(c1, c2)
    support = c1.domains.ordered(c1.support + c2.support)
    a, b = c1.expand(support), c2.expand(support)
    if tol is None or c1.semiring.kind != "real":
        return bool(np.all(c1.semiring.close(a, b)))
    return bool(np.all(np.abs(a - b) <= tol))


def sup_distance(c1: Constraint, c2: Constraint) -> float:
    """Largest pointwise difference; 0/1 for boolean tables."""
    _check_same_space(c1, c2)
    support = c1.domains.ordered(c1.support + c2.support)
    a, b = c1.expand(support), c2.expand(support)
    if c1.semiring.kind == "boolean":
        return float(np.any(a != b))
    diff = np.abs(a - b)
    return float(np.max(diff)) if diff.size else 0.0


def image(c: Constraint) -> list:
    """Distinct values the constraint takes, deduplicated at the semiring tolerance."""
    sr = c.semiring
    out: list = []
    for v in c.table.ravel():
        v = sr.coerce(v)
        if not any(bool(sr.close(v, w)) for w in out):
            out.append(v)
    return out


def level_mask(c: Constraint, s, geq: bool = False) -> np.ndarray:
    """Boolean mask over the support table selecting ``c == s`` (or ``s <= c``)."""
    sr = c.semiring
    s = sr.coerce(s)
    if not geq:
        return np.asarray(sr.close(c.table, s), dtype=bool)
    if sr.leq is None:
        raise CapabilityError(f"semiring {sr.name!r} is not ordered")
    mask = np.asarray(sr.leq(s, c.table), dtype=bool)
    if sr.kind == "real" and sr.tol:
        mask |= np.asarray(sr.close(c.table, s), dtype=bool)
    return mask


def _valuations(c: Constraint, mask: np.ndarray) -> list[dict]:
    doms = [c.domains.domain(v) for v in c.support]
    return [
        {v: d[i] for v, d, i in zip(c.support, doms, idx)}
        for idx in zip(*np.nonzero(mask))
    ] if c.support else ([{}] if bool(mask) else [])


def inverse(c: Constraint, s) -> list[dict]:
    """Support-valuations mapped to ``s``, in table order."""
    return _valuations(c, level_mask(c, s))


def inverse_geq(c: Constraint, s) -> list[dict]:
    """Support-valuations whose value is at least ``s`` in the semiring order."""
    return _valuations(c, level_mask(c, s, geq=True))


def probability_mass(c: Constraint) -> tuple[Any, Any]:
    """``(support-table sum, sum over all valuations of the model variables)``.

    The second figure multiplies the first by the number of ways to extend a
    support valuation to the remaining model variables.
    """
    sr = c.semiring
    if sr.kind == "boolean":
        raise CapabilityError("probability mass needs a numeric semiring")
    total = sr.sum(sr.coerce(v) for v in c.table.ravel())
    extensions = 1
    for var in c.domains.variables:
        if var not in c.support:
            extensions *= len(c.domains.domain(var))
    return total, sr.sum([total] * extensions) if extensions > 1 else total


def is_probability(c: Constraint) -> bool:
    """True iff the constraint sums to one over all model valuations."""
    _, full = probability_mass(c)
    sr = c.semiring
    if sr.kind == "real":
        return abs(float(full) - 1.0) <= max(sr.tol, 1e-9)
    return full == sr.one


def tag_component(c: Constraint, agent) -> Constraint:
    """The part of a tagged constraint that concerns ``agent``; zero elsewhere."""
    tag = c.domains.tag
    if tag is None:
        raise TypeError("constraint space declares no agent tag variable")
    c.domains.index(tag, agent)
    return combine(c, c.space.atom(tag, "=", agent), "times")


def tag_components(c: Constraint) -> dict:
    tag = c.domains.tag
    if tag is None:
        raise TypeError("constraint space declares no agent tag variable")
    return {a: tag_component(c, a) for a in c.domains.domain(tag)}


def total(constraints: Iterable[Constraint], space: Space) -> Constraint:
    """``plus`` over an iterable of constraints (zero when empty)."""
    return reduce(lambda a, b: combine(a, b, "plus"), constraints, space.zero)
