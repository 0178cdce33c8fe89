"""Semirings, rings and fields behind one value interface.

A :class:`Semiring` bundles the two monoid operations with their identities
and, optionally, a group inverse for ``plus`` (ring mode), a partial
division (field mode) and a partial order.  Operations are plain callables
that work elementwise on numpy arrays as well as on scalars, so soft
constraint tables can be combined without per-entry Python loops.

Three instances ship: ``boolean``, ``nonneg-real`` and ``real-ring``.  The
real ones can be built over :class:`fractions.Fraction` (``exact=True``)
for oracle tests that should not depend on a tolerance.
"""

from __future__ import annotations

import itertools
import operator
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Any, Callable, Iterable, Optional

import numpy as np

from .errors import AlgebraError, CapabilityError, ConfigurationError

BUILTIN_NAMES = ("boolean", "nonneg-real", "real-ring")
DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Semiring:
    """An algebraic structure ``<S, plus, zero, times, one>``.

    ``tol`` is the absolute equality tolerance used by :meth:`close`; zero
    means exact comparison.  ``kind`` is one of ``boolean``, ``real`` or
    ``rational`` and decides the numpy dtype of constraint tables.
    ``idempotent_plus`` is informational only.
    """

    name: str
    plus: Callable[[Any, Any], Any]
    times: Callable[[Any, Any], Any]
    zero: Any
    one: Any
    minus: Optional[Callable[[Any, Any], Any]] = None
    divide: Optional[Callable[[Any, Any], Any]] = None
    leq: Optional[Callable[[Any, Any], Any]] = None
    idempotent_plus: bool = False
    tol: float = DEFAULT_TOLERANCE
    kind: str = "real"
    nonnegative: bool = False

    def __repr__(self):
        return f"Semiring({self.name!r}, kind={self.kind!r}, tol={self.tol!r})"

    @property
    def dtype(self):
        return {"boolean": bool, "real": float}.get(self.kind, object)

    @property
    def is_ring(self) -> bool:
        return self.minus is not None

    @property
    def is_ordered(self) -> bool:
        return self.leq is not None

    def coerce(self, value):
        """Convert a Python or numpy scalar into this semiring's carrier."""
        if self.kind == "boolean":
            if isinstance(value, (bool, np.bool_)):
                return bool(value)
            if value in (0, 1):
                return bool(value)
            raise ValueError(f"{value!r} is not a boolean truth value")
        if isinstance(value, (bool, np.bool_)):
            raise ValueError(f"{value!r} is not a number")
        if self.kind == "rational":
            value = value if isinstance(value, Fraction) else Fraction(str(value)) if isinstance(value, float) else Fraction(value)
        elif self.kind == "real":
            value = float(value)
        if self.nonnegative and value < 0:
            raise ValueError(f"{value!r} is negative; {self.name} values are >= 0")
        return value

    def close(self, a, b):
        """Equality at this semiring's tolerance; elementwise on arrays."""
        if self.tol == 0 or self.kind != "real":
            return np.equal(a, b)
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        with np.errstate(invalid="ignore"):
            return (a == b) | (np.abs(a - b) <= self.tol)

    def sub(self, a, b):
        if self.minus is None:
            raise CapabilityError(f"semiring {self.name!r} has no minus")
        return self.minus(a, b)

    def div(self, a, b):
        if self.divide is None:
            raise CapabilityError(f"semiring {self.name!r} has no division")
        return self.divide(a, b)

    def le(self, a, b):
        if self.leq is None:
            raise CapabilityError(f"semiring {self.name!r} is not ordered")
        return self.leq(a, b)

    def sum(self, values: Iterable):
        return reduce(self.plus, values, self.zero)

    def product(self, values: Iterable):
        return reduce(self.times, values, self.one)

    def reduce(self, table: np.ndarray, axis: int) -> np.ndarray:
        """Fold ``plus`` over one axis of a table."""
        slices = list(np.moveaxis(table, axis, 0))
        if not slices:
            return np.full(table.shape[:axis] + table.shape[axis + 1:], self.zero, dtype=self.dtype)
        return np.asarray(reduce(self.plus, slices), dtype=self.dtype)

    def format(self, value) -> str:
        if self.kind == "boolean":
            return "true" if value else "false"
        if isinstance(value, Fraction):
            return str(value)
        return np.format_float_positional(float(value), unique=True, trim="-")


def _checked_div(a, b):
    if b == 0:
        raise AlgebraError("division by zero")
    return a / b


def _bool_leq(a, b):
    return np.logical_or(np.logical_not(a), b)


@lru_cache(maxsize=None)
def builtin_semiring(name: str, exact: bool = False, tol: Optional[float] = None) -> Semiring:
    """Return one of the shipped semirings by key.

    ``real-ring`` carries minus and divide, ``nonneg-real`` carries divide
    only (used for the reciprocals of row sums), ``boolean`` neither.
    Only ``boolean`` and ``nonneg-real`` are ordered: in a ring every value
    can be reached from every other by adding, so no preference order is
    induced.
    Instances are cached, so equal arguments give the identical object.
    """
    if name == "boolean":
        return Semiring(
            name="boolean", plus=np.logical_or, times=np.logical_and,
            zero=False, one=True, leq=_bool_leq, idempotent_plus=True,
            tol=0.0, kind="boolean",
        )
    if name not in ("nonneg-real", "real-ring"):
        raise ConfigurationError(f"unknown semiring {name!r}; expected one of {', '.join(BUILTIN_NAMES)}")
    kind = "rational" if exact else "real"
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    tol = 0.0 if exact else (DEFAULT_TOLERANCE if tol is None else float(tol))
    return Semiring(
        name=name, plus=operator.add, times=operator.mul, zero=zero, one=one,
        minus=operator.sub if name == "real-ring" else None,
        divide=_checked_div, leq=operator.le if name == "nonneg-real" else None, tol=tol, kind=kind,
        nonnegative=name == "nonneg-real",
    )


def law_check(spec: Semiring, samples: Iterable) -> list[str]:
    """Check the semiring axioms on every pair and triple drawn from ``samples``.

    Returns one message per violated law instance; an empty list means all
    checked instances hold at ``spec.tol``.
    """
    values = [spec.coerce(v) for v in samples]
    if not values:
        raise ValueError("law_check needs at least one sample")
    eq = lambda a, b: bool(np.all(spec.close(a, b)))
    report = []
    p, t, z, o = spec.plus, spec.times, spec.zero, spec.one

    for a in values:
        if not eq(p(a, z), a):
            report.append(f"plus identity violated: {a!r} plus zero = {p(a, z)!r}")
        if not eq(t(a, o), a):
            report.append(f"times identity violated: {a!r} times one = {t(a, o)!r}")
        if not eq(t(a, z), z):
            report.append(f"annihilation violated: {a!r} times zero = {t(a, z)!r}")
        if spec.minus is not None and not eq(spec.minus(a, a), z):
            report.append(f"minus inverse violated: {a!r} minus itself = {spec.minus(a, a)!r}")
        if spec.divide is not None and not eq(a, z):
            q = spec.divide(a, a)
            if not eq(q, o):
                report.append(f"divide inverse violated: {a!r} divided by itself = {q!r}")

    for a, b in itertools.product(values, repeat=2):
        for label, op in (("plus", p), ("times", t)):
            if not eq(op(a, b), op(b, a)):
                report.append(f"{label} commutativity violated at ({a!r}, {b!r})")
        if spec.minus is not None and not eq(p(spec.minus(a, b), b), a):
            report.append(f"minus/plus cancellation violated at ({a!r}, {b!r})")

    for a, b, c in itertools.product(values, repeat=3):
        for label, op in (("plus", p), ("times", t)):
            if not eq(op(op(a, b), c), op(a, op(b, c))):
                report.append(f"{label} associativity violated at ({a!r}, {b!r}, {c!r})")
        if not eq(t(a, p(b, c)), p(t(a, b), t(a, c))):
            report.append(f"distributivity violated at ({a!r}, {b!r}, {c!r})")
    return report
