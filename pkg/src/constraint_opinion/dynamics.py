"""Opinion dynamics over constraint-valued influence graphs.

The state of a model is a tuple of constraints, one per agent.  The plain
update multiplies it by the influence matrix in the lifted semiring,
``B'_i = sum_j M_ij * B_j``.  The biased update weighs disagreements by a
bias factor and is available in rings with division, for influence
matrices of constant constraints.

:func:`run` iterates an update until two successive states agree, a state
recurs (a cycle), or the step budget runs out.
"""

from __future__ import annotations

import hashlib
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np

from . import constraints as cs
from .constraints import Constraint, Space
from .errors import CapabilityError, ModelError, SemiringMismatch

log = logging.getLogger(__name__)

OpinionState = tuple[Constraint, ...]


@dataclass(frozen=True)
class InfluenceGraph:
    """Square matrix of constraints; entry ``(i, j)`` is how agent j influences agent i."""

    entries: tuple[tuple[Constraint, ...], ...]

    def __post_init__(self):
        n = len(self.entries)
        if n == 0:
            raise ModelError("influence graph needs at least one agent")
        for row in self.entries:
            if len(row) != n:
                raise ModelError(f"influence matrix is not square: {n} rows, a row of {len(row)}")
        space = self.entries[0][0].space
        for row in self.entries:
            for c in row:
                if c.space != space:
                    raise SemiringMismatch("influence entries do not share a semiring and variables")

    @classmethod
    def of(cls, rows: Sequence[Sequence[Constraint]]) -> "InfluenceGraph":
        return cls(tuple(tuple(r) for r in rows))

    @classmethod
    def constants(cls, space: Space, matrix) -> "InfluenceGraph":
        return cls(tuple(tuple(space.constant(v) for v in row) for row in matrix))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def space(self) -> Space:
        return self.entries[0][0].space

    def __getitem__(self, ij: tuple[int, int]) -> Constraint:
        i, j = ij
        return self.entries[i][j]

    @property
    def is_constant(self) -> bool:
        return all(c.is_constant for row in self.entries for c in row)

    def scalars(self) -> np.ndarray:
        """Matrix of carrier values; entries must be constant constraints."""
        if not self.is_constant:
            raise CapabilityError("influence matrix has non-constant entries")
        sr = self.space.semiring
        return np.array([[c.value for c in row] for row in self.entries], dtype=sr.dtype)

    def instantiate(self, bindings) -> "InfluenceGraph":
        return InfluenceGraph(tuple(tuple(cs.restrict(c, bindings) for c in row) for row in self.entries))

    def map(self, fn: Callable[[Constraint], Constraint]) -> "InfluenceGraph":
        return InfluenceGraph(tuple(tuple(fn(c) for c in row) for row in self.entries))


def _check_state(M: InfluenceGraph, B: Sequence[Constraint]) -> OpinionState:
    B = tuple(B)
    if len(B) != M.n:
        raise ModelError(f"{M.n} agents in the influence graph but {len(B)} opinions")
    for b in B:
        if b.space != M.space:
            raise SemiringMismatch("opinions and influences do not share a semiring and variables")
    return B


def step_matrix(M: InfluenceGraph, B: Sequence[Constraint]) -> OpinionState:
    """One plain update ``B' = M B`` in the lifted semiring."""
    B = _check_state(M, B)
    return tuple(
        cs.total((cs.combine(M.entries[i][j], B[j], "times") for j in range(M.n)), M.space)
        for i in range(M.n)
    )


# --- biased update -------------------------------------------------------

@dataclass(frozen=True)
class Bias:
    """A bias factor rule ``beta(B_i, B_j)`` with values in [0, 1]."""

    name: str
    weight: Callable[[Constraint, Constraint], Any]

    def __call__(self, bi: Constraint, bj: Constraint):
        return self.weight(bi, bj)


def scalar_opinion(c: Constraint) -> Any:
    """Read an opinion over one 0/1 variable as the real number ``c[p -> 1]``."""
    doms = c.domains
    names = doms.value_variables
    if len(names) != 1 or set(doms.domain(names[0])) != {0, 1}:
        raise CapabilityError("scalar opinions need exactly one variable with domain {0, 1}")
    return cs.evaluate(c, {names[0]: 1})


def _constant_one(bi: Constraint, bj: Constraint):
    return bi.semiring.one


def _confirmation(bi: Constraint, bj: Constraint):
    sr = bi.semiring
    a, b = scalar_opinion(bi), scalar_opinion(bj)
    return sr.sub(sr.one, abs(sr.sub(b, a)))


CONSTANT_ONE = Bias("one", _constant_one)
CONFIRMATION = Bias("confirmation", _confirmation)
BIASES = {"one": CONSTANT_ONE, "confirmation": CONFIRMATION}


@dataclass(frozen=True)
class UpdateMatrices:
    """Matrices of the biased update: ``B' = B + N (U B - V B)``.

    ``R`` holds reciprocal row sums (zero for empty rows), ``U`` is the
    elementwise product of bias factors and influences, ``V`` the diagonal of
    the row sums of ``U`` and ``N`` the diagonal of ``R``.
    """

    R: np.ndarray
    U: np.ndarray
    V: np.ndarray
    N: np.ndarray
    semiring: Any = field(repr=False)

    def transition(self) -> np.ndarray:
        """``I + N (U - V)``, a row-stochastic matrix."""
        sr = self.semiring
        n = len(self.R)
        eye = np.array([[sr.one if i == j else sr.zero for j in range(n)] for i in range(n)], dtype=sr.dtype)
        scaled = sr.times(self.R[:, None], sr.sub(self.U, self.V))
        return np.asarray(sr.plus(eye, scaled), dtype=sr.dtype)

    def zero_drift(self) -> np.ndarray:
        """``(U - V) 1``; every entry is zero."""
        sr = self.semiring
        diff = sr.sub(self.U, self.V)
        return np.array([sr.sum(row) for row in diff], dtype=sr.dtype)


def _require_ring(M: InfluenceGraph) -> None:
    sr = M.space.semiring
    if sr.minus is None or sr.divide is None:
        raise CapabilityError(f"biased update needs a ring with division; {sr.name!r} lacks it")
    if not M.is_constant:
        raise CapabilityError("biased update is defined for constant influence entries only")


def update_matrices(M: InfluenceGraph, B: Sequence[Constraint], bias: Bias = CONSTANT_ONE) -> UpdateMatrices:
    _require_ring(M)
    B = _check_state(M, B)
    sr = M.space.semiring
    W = M.scalars()
    n = M.n
    beta = np.empty((n, n), dtype=sr.dtype)
    for i in range(n):
        for j in range(n):
            b = sr.coerce(bias(B[i], B[j]))
            if not (0 <= b <= 1):
                raise ModelError(f"bias {bias.name!r} gave {b!r} for agents ({i + 1}, {j + 1}); must lie in [0, 1]")
            beta[i, j] = b
    U = np.asarray(sr.times(beta, W), dtype=sr.dtype)
    row_sums = [sr.sum(row) for row in W]
    R = np.array([sr.zero if s == sr.zero else sr.div(sr.one, s) for s in row_sums], dtype=sr.dtype)
    V = np.array([[sr.sum(U[i]) if i == j else sr.zero for j in range(n)] for i in range(n)], dtype=sr.dtype)
    N = np.array([[R[i] if i == j else sr.zero for j in range(n)] for i in range(n)], dtype=sr.dtype)
    return UpdateMatrices(R=R, U=U, V=V, N=N, semiring=sr)


def step_biased(M: InfluenceGraph, B: Sequence[Constraint], bias: Bias = CONSTANT_ONE) -> OpinionState:
    """One biased update, ``B'_i = B_i + R_i (sum_j U_ij B_j - V_ii B_i)``."""
    mats = update_matrices(M, B, bias)
    B = tuple(B)
    space = M.space
    out = []
    for i in range(M.n):
        pulled = cs.total((cs.scale(B[j], mats.U[i, j]) for j in range(M.n)), space)
        drift = cs.combine(pulled, cs.scale(B[i], mats.V[i, i]), "minus")
        out.append(cs.combine(B[i], cs.scale(drift, mats.R[i]), "plus"))
    return tuple(out)


# --- structural checks ---------------------------------------------------

def row_sums(M: InfluenceGraph) -> list[Constraint]:
    return [cs.total(row, M.space) for row in M.entries]


def is_row_stochastic(M: InfluenceGraph) -> bool:
    """Every row sums to the constant constraint one."""
    one = M.space.one
    return all(cs.equals(s, one) for s in row_sums(M))


def _is_zero(c: Constraint) -> bool:
    return bool(np.all(c.semiring.close(c.table, c.semiring.zero)))


def adjacency(M: InfluenceGraph) -> list[set[int]]:
    """``succ[j]`` holds every i such that j influences i (entry not identically zero)."""
    succ: list[set[int]] = [set() for _ in range(M.n)]
    for i, row in enumerate(M.entries):
        for j, c in enumerate(row):
            if not _is_zero(c):
                succ[j].add(i)
    return succ


def _reach(succ: list[set[int]], start: int) -> dict[int, int]:
    level = {start: 0}
    frontier = deque([start])
    while frontier:
        u = frontier.popleft()
        for v in succ[u]:
            if v not in level:
                level[v] = level[u] + 1
                frontier.append(v)
    return level


def is_strongly_connected(M: InfluenceGraph) -> bool:
    succ = adjacency(M)
    pred: list[set[int]] = [set() for _ in range(M.n)]
    for u, vs in enumerate(succ):
        for v in vs:
            pred[v].add(u)
    return len(_reach(succ, 0)) == M.n and len(_reach(pred, 0)) == M.n


def period(M: InfluenceGraph) -> Optional[int]:
    """Gcd of the cycle lengths of a strongly connected graph; None otherwise.

    Uses BFS levels from one node: the gcd of ``level[u] + 1 - level[v]``
    over all edges ``u -> v`` equals the gcd of all cycle lengths.  A graph
    without cycles (a lone agent ignoring itself) has period 0.
    """
    if not is_strongly_connected(M):
        return None
    succ = adjacency(M)
    level = _reach(succ, 0)
    g = 0
    for u, vs in enumerate(succ):
        for v in vs:
            g = math.gcd(g, abs(level[u] + 1 - level[v]))
    return g


def is_aperiodic(M: InfluenceGraph) -> Optional[bool]:
    """True iff the gcd of cycle lengths is one; None when not strongly connected."""
    p = period(M)
    return None if p is None else p == 1


def has_self_loop(M: InfluenceGraph) -> bool:
    """Sufficient condition for aperiodicity: some agent keeps part of its own opinion."""
    return any(not _is_zero(M.entries[i][i]) for i in range(M.n))


# --- iteration -----------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    kind: str  # "converged" | "cycle" | "budget_exhausted"
    step: Optional[int] = None
    period: Optional[int] = None

    def as_dict(self) -> dict:
        return {"kind": self.kind, "step": self.step, "period": self.period}


@dataclass
class Trace:
    """Recorded states ``states[k]`` taken at time ``steps[k]`` plus the verdict."""

    states: list[OpinionState]
    steps: list[int]
    verdict: Verdict
    final: OpinionState
    final_step: int
    summaries: Optional[list] = None


def state_distance(A: Sequence[Constraint], B: Sequence[Constraint]) -> float:
    return max(cs.sup_distance(a, b) for a, b in zip(A, B))


def _state_key(B: OpinionState, tol: float) -> bytes:
    digest = hashlib.blake2b(digest_size=16)
    for c in B:
        digest.update(repr(c.support).encode())
        t = c.table
        if c.semiring.kind == "real":
            t = np.round(t / tol).astype(np.int64)
            digest.update(t.tobytes())
        elif c.semiring.kind == "boolean":
            digest.update(t.tobytes())
        else:
            digest.update(repr(t.tolist()).encode())
    return digest.digest()


def _same(A: OpinionState, B: OpinionState, tol: float) -> bool:
    if A[0].semiring.kind != "real":
        return all(cs.equals(a, b) for a, b in zip(A, B))
    return state_distance(A, B) <= tol


# A tolerance match between real states can be a damped oscillation that is
# still heading for a fixed point.  A genuine cycle keeps moving by the same
# amount every period; a damped one shrinks by a constant factor.
CONTRACTION = 0.999


def _contracting(M, step, recent, k: int, nxt: OpinionState) -> bool:
    if nxt[0].semiring.kind != "real":
        return False
    by_step = dict(recent)
    if k + 1 in by_step:
        before = state_distance(by_step[k], by_step[k + 1])
    else:
        before = state_distance(by_step[k], nxt)
    after = state_distance(nxt, step(M, nxt))
    return after < CONTRACTION * before


Update = Union[str, Bias, None]


def make_step(update: Update) -> Callable[[InfluenceGraph, OpinionState], OpinionState]:
    if update in (None, "matrix"):
        return step_matrix
    if isinstance(update, str):
        update = BIASES[update]
    return lambda M, B: step_biased(M, B, update)


def run(
    M: InfluenceGraph,
    B0: Sequence[Constraint],
    update: Update = "matrix",
    max_steps: int = 10_000,
    tol: float = 1e-6,
    history: int = 64,
    stride: int = 1,
) -> Trace:
    """Iterate the update until convergence, a cycle, or ``max_steps`` steps.

    ``converged(t)`` means ``B^t`` is reproduced by the next update (within
    ``tol``); ``cycle(period p, entry k)`` means ``B^{k+p} = B^k``.  Boolean
    and exact models compare tables exactly.  For real models a repeat within
    ``tol`` only counts as a cycle when the orbit is not contracting, so a
    damped oscillation runs on to convergence.
    """
    if max_steps < 1 or tol <= 0 or stride < 1:
        raise ValueError("max_steps and stride must be >= 1 and tol > 0")
    step = make_step(update)
    B = _check_state(M, B0)
    states, steps = [B], [0]
    recent: deque[tuple[int, OpinionState]] = deque([(0, B)], maxlen=max(history, 1))
    keys: dict[bytes, list[int]] = {_state_key(B, tol): [0]}
    verdict = Verdict("budget_exhausted")
    t = 0
    while t < max_steps:
        nxt = step(M, B)
        if _same(B, nxt, tol):
            verdict = Verdict("converged", step=t)
            break
        t += 1
        key = _state_key(nxt, tol)
        oldest = recent[0][0] if len(recent) == recent.maxlen else 0
        hit = None
        for k in keys.get(key, ()):
            if k >= oldest:
                earlier = next(s for idx, s in recent if idx == k)
                if _same(earlier, nxt, tol) and not _contracting(M, step, recent, k, nxt):
                    hit = k
                    break
        B = nxt
        if t % stride == 0 or hit is not None:
            states.append(B)
            steps.append(t)
        if hit is not None:
            verdict = Verdict("cycle", step=hit, period=t - hit)
            break
        recent.append((t, B))
        keys.setdefault(key, []).append(t)
    if steps[-1] != t:
        states.append(B)
        steps.append(t)
    log.info("run finished: %s after %d steps", verdict.kind, t)
    return Trace(states=states, steps=steps, verdict=verdict, final=B, final_step=t)


def consensus_check(B: Sequence[Constraint], tol: float = 1e-6) -> Optional[Constraint]:
    """The shared opinion when every agent holds the same constraint (within ``tol``)."""
    B = tuple(B)
    first = B[0]
    exact = first.semiring.kind != "real"
    for c in B[1:]:
        if exact and not cs.equals(first, c):
            return None
        if not exact and cs.sup_distance(first, c) > tol:
            return None
    return first


def consensus_about(B: Sequence[Constraint], valuation, tol: float = 1e-6):
    """The common value of all opinions at ``valuation``, or None."""
    values = [cs.evaluate(c, valuation) for c in B]
    sr = B[0].semiring
    if sr.kind != "real":
        return values[0] if all(v == values[0] for v in values) else None
    if max(values) - min(values) > tol:
        return None
    return values[0]


@dataclass(frozen=True)
class LimitMatrix:
    limit: Optional[np.ndarray]
    equal_rows: bool
    converged: bool
    squarings: int


def limit_matrix(M: InfluenceGraph, max_steps: int = 64, tol: float = 1e-8) -> LimitMatrix:
    """Numerical limit of ``M^t`` by repeated squaring.

    A squaring fixed point ``P`` only counts as the limit when ``P M = P``
    too; otherwise the powers oscillate (e.g. a permutation matrix) and no
    limit is reported.
    """
    sr = M.space.semiring
    if sr.kind == "boolean":
        raise CapabilityError("limit_matrix works on numeric semirings")
    W = M.scalars().astype(float)
    P = W.copy()
    for k in range(1, max_steps + 1):
        Q = P @ P
        if np.max(np.abs(Q - P)) < tol:
            P = Q
            break
        P = Q
    else:
        return LimitMatrix(None, False, False, max_steps)
    if np.max(np.abs(P @ W - P)) >= tol:
        return LimitMatrix(None, False, False, k)
    equal = bool(np.max(np.abs(P - P[0])) < tol)
    return LimitMatrix(P, equal, True, k)


@dataclass(frozen=True)
class ValuationCheck:
    value: Any
    row_stochastic: bool
    strongly_connected: bool
    aperiodic: Optional[bool]
    bad_rows: tuple[int, ...]

    @property
    def passed(self) -> bool:
        return self.row_stochastic and self.strongly_connected and bool(self.aperiodic)


@dataclass(frozen=True)
class PerValuationReport:
    variable: str
    checks: tuple[ValuationCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[ValuationCheck]:
        return [c for c in self.checks if not c.passed]


def per_valuation_check(M: InfluenceGraph) -> PerValuationReport:
    """Check the consensus hypotheses separately for each value of the single model variable."""
    names = M.space.domains.value_variables
    if len(names) != 1:
        raise CapabilityError(f"per-valuation check needs exactly one model variable, found {len(names)}")
    var = names[0]
    one = M.space.one
    checks = []
    for d in M.space.domains.domain(var):
        Md = M.instantiate({var: d})
        bad = tuple(i + 1 for i, s in enumerate(row_sums(Md)) if not cs.equals(s, one))
        checks.append(ValuationCheck(
            value=d, row_stochastic=not bad,
            strongly_connected=is_strongly_connected(Md),
            aperiodic=is_aperiodic(Md), bad_rows=bad,
        ))
    return PerValuationReport(var, tuple(checks))


def probability_preservation_check(M: InfluenceGraph, B: Sequence[Constraint]) -> Optional[bool]:
    """Whether one plain step keeps every opinion a probability constraint.

    Returns None (not applicable) when ``M`` is not a constant row-stochastic
    matrix over a numeric semiring or some opinion is not a probability.
    """
    sr = M.space.semiring
    if sr.kind == "boolean" or not M.is_constant or not is_row_stochastic(M):
        return None
    if any(float(v) < 0 for v in M.scalars().ravel()):
        return None
    B = _check_state(M, B)
    if not all(cs.is_probability(b) for b in B):
        return None
    return all(cs.is_probability(c) for c in step_matrix(M, B))


# --- beliefs -------------------------------------------------------------

def belief_step(M: InfluenceGraph, B: Sequence[Constraint], check: bool = True) -> OpinionState:
    """Plain update of tagged opinions as a sum of per-agent component updates.

    Each agent ``a`` contributes ``M^a B^a`` where ``M^a`` and ``B^a`` keep
    only the ``tag = a`` part.  With ``check`` the result is compared with
    the direct product on the tagged encoding.
    """
    B = _check_state(M, B)
    tag = M.space.domains.tag
    if tag is None:
        raise TypeError("belief_step needs a model with an agent tag variable")
    parts = []
    for a in M.space.domains.domain(tag):
        Ma = M.map(lambda c: cs.tag_component(c, a))
        Ba = tuple(cs.tag_component(b, a) for b in B)
        parts.append(step_matrix(Ma, Ba))
    out = tuple(
        reduce(lambda x, y: cs.combine(x, y, "plus"), (p[i] for p in parts)) for i in range(M.n)
    )
    if check:
        direct = step_matrix(M, B)
        if not all(cs.equals(x, y) for x, y in zip(out, direct)):
            raise AssertionError("component-wise belief update disagrees with the direct product")
    return out
