"""Distances between opinions and polarization of opinion sets.

Two constraints are compared through their solution sets at a preference
level ``s``: the valuations mapped exactly to ``s`` (or, in an ordered
semiring, to at least ``s``).  Valuations are points of the product of the
variable domains, with a per-coordinate distance lifted by a norm, and two
point sets are compared with the Hausdorff distance.  An empty set is at
infinite distance from a non-empty one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import constraints as cs
from .constraints import Constraint
from .errors import CapabilityError

INF = math.inf

_MINKOWSKI = {"L1": 1, "L2": 2, "Linf": math.inf}

_NORMS = {
    "L1": "L1", "taxicab": "L1", "l1": "L1",
    "L2": "L2", "euclidean": "L2", "l2": "L2",
    "Linf": "Linf", "chebyshev": "Linf", "linf": "Linf",
}


@dataclass(frozen=True)
class MetricConfig:
    """How valuations are compared.

    ``point_distance`` is the per-coordinate distance (``|x - y|`` when
    None); it must accept numpy arrays.  ``norm`` lifts coordinate
    distances to valuations.
    """

    norm: str = "L2"
    point_distance: Optional[Callable] = None

    def __post_init__(self):
        if self.norm not in _NORMS:
            raise ValueError(f"unknown norm {self.norm!r}; use L1, L2 or Linf")
        object.__setattr__(self, "norm", _NORMS[self.norm])

    def coordinate_gaps(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.point_distance is None:
            return np.abs(a - b)
        return np.asarray(self.point_distance(a, b), dtype=float)

    def lift(self, gaps: np.ndarray) -> np.ndarray:
        """Norm over the last axis."""
        if gaps.shape[-1] == 0:
            return np.zeros(gaps.shape[:-1])
        if self.norm == "L1":
            return gaps.sum(axis=-1)
        if self.norm == "Linf":
            return gaps.max(axis=-1)
        return np.sqrt((gaps * gaps).sum(axis=-1))


EUCLIDEAN = MetricConfig()


def valuation_distance(eta1, eta2, cfg: MetricConfig = EUCLIDEAN, tag: Optional[str] = None) -> float:
    """Distance between two valuations binding the same variables."""
    if set(eta1) != set(eta2):
        raise ValueError("valuations bind different variables")
    if tag is not None and tag in eta1:
        raise CapabilityError("agent tags carry no metric; compare per agent component")
    names = sorted(eta1)
    a = np.array([eta1[v] for v in names], dtype=float)
    b = np.array([eta2[v] for v in names], dtype=float)
    return float(cfg.lift(cfg.coordinate_gaps(a, b)))


def _points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, arr.shape[1] if arr.ndim == 2 else 0)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr


def forward_distance(A, B, cfg: MetricConfig = EUCLIDEAN, method: str = "auto", chunk: int = 1 << 22) -> float:
    """``sup_{a in A} min_{b in B} d(a, b)``; 0 for empty A, inf for empty B.

    ``method="brute"`` compares every pair in numpy blocks; ``"auto"`` uses a
    k-d tree when the metric is one of the built-in norms.  Both are exact.
    """
    if method not in ("auto", "brute"):
        raise ValueError(f"unknown method {method!r}; use 'auto' or 'brute'")
    A, B = _points(A), _points(B)
    if len(A) == 0:
        return 0.0
    if len(B) == 0:
        return INF
    if method == "auto" and cfg.point_distance is None and A.shape[1] > 0:
        # nearest neighbours through a k-d tree for the built-in norms
        d, _ = cKDTree(B).query(A, k=1, p=_MINKOWSKI[cfg.norm])
        return float(np.max(d))
    rows = max(1, chunk // max(1, len(B) * max(1, A.shape[1])))
    worst = 0.0
    for start in range(0, len(A), rows):
        block = A[start:start + rows]
        d = cfg.lift(cfg.coordinate_gaps(block[:, None, :], B[None, :, :]))
        worst = max(worst, float(d.min(axis=1).max()))
    return worst


def hausdorff(A, B, cfg: MetricConfig = EUCLIDEAN, method: str = "auto") -> float:
    """Hausdorff distance; inf when exactly one set is empty, 0 when both are."""
    A, B = _points(A), _points(B)
    if len(A) == 0 and len(B) == 0:
        return 0.0
    if len(A) == 0 or len(B) == 0:
        return INF
    return max(forward_distance(A, B, cfg, method), forward_distance(B, A, cfg, method))


# --- solution sets -------------------------------------------------------

def _common_variables(c: Constraint, d: Constraint) -> tuple[str, ...]:
    if c.space != d.space:
        raise CapabilityError("constraints live in different spaces")
    variables = c.domains.ordered(c.support + d.support)
    if c.domains.tag is not None and c.domains.tag in variables:
        raise CapabilityError("agent tags carry no metric; use per_agent() to compare components")
    return variables


def solution_points(c: Constraint, s, variables: Sequence[str], geq: bool = False) -> np.ndarray:
    """Coordinates of the valuations of ``variables`` at level ``s`` (``>= s`` with ``geq``)."""
    mask = cs.level_mask(c, s, geq)
    full = _expand_mask(c, mask, variables)
    idx = np.argwhere(full)
    coords = [np.asarray(c.domains.domain(v), dtype=float) for v in variables]
    if not variables:
        return np.zeros((len(idx), 0))
    return np.stack([coords[k][idx[:, k]] for k in range(len(variables))], axis=1)


def _expand_mask(c: Constraint, mask: np.ndarray, variables: Sequence[str]) -> np.ndarray:
    shape = tuple(mask.shape[c.support.index(v)] if v in c.support else 1 for v in variables)
    return np.broadcast_to(mask.reshape(shape), c.domains.shape(variables))


def grid_points(c: Constraint, variables: Sequence[str]) -> np.ndarray:
    """Every valuation of ``variables`` as coordinates."""
    coords = [np.asarray(c.domains.domain(v), dtype=float) for v in variables]
    if not coords:
        return np.zeros((1, 0))
    mesh = np.meshgrid(*coords, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def delta_s(c: Constraint, d: Constraint, s, cfg: MetricConfig = EUCLIDEAN) -> float:
    """Hausdorff distance between the level-``s`` solution sets of two opinions."""
    variables = _common_variables(c, d)
    return hausdorff(solution_points(c, s, variables), solution_points(d, s, variables), cfg)


def delta_geq_s(c: Constraint, d: Constraint, s, cfg: MetricConfig = EUCLIDEAN) -> float:
    """Hausdorff distance between the ``>= s`` level sets of two opinions."""
    if not c.semiring.is_ordered:
        raise CapabilityError(f"semiring {c.semiring.name!r} is not ordered")
    variables = _common_variables(c, d)
    return hausdorff(
        solution_points(c, s, variables, geq=True), solution_points(d, s, variables, geq=True), cfg
    )


def levels(c: Constraint, d: Constraint) -> list:
    """Union of both images, deduplicated at the semiring tolerance."""
    sr = c.semiring
    out: list = []
    for v in cs.image(c) + cs.image(d):
        if not any(bool(sr.close(v, w)) for w in out):
            out.append(v)
    return out


def delta(c: Constraint, d: Constraint, cfg: MetricConfig = EUCLIDEAN) -> float:
    """Largest ``delta_s`` over every level either opinion takes."""
    worst = 0.0
    for s in levels(c, d):
        worst = max(worst, delta_s(c, d, s, cfg))
        if worst == INF:
            break
    return worst


def pairwise(
    opinions: Sequence[Constraint], s, mode: str = "exact", cfg: MetricConfig = EUCLIDEAN
) -> dict[tuple[int, int], float]:
    """Distances for every pair ``i < j`` (0-based indices)."""
    fn = {"exact": delta_s, "geq": delta_geq_s}.get(mode)
    if fn is None:
        raise ValueError(f"unknown mode {mode!r}; use 'exact' or 'geq'")
    return {
        (i, j): fn(opinions[i], opinions[j], s, cfg)
        for i, j in itertools.combinations(range(len(opinions)), 2)
    }


def polarization(
    opinions: Iterable[Constraint], s, mode: str = "exact", cfg: MetricConfig = EUCLIDEAN
) -> float:
    """Distance between the two most antagonistic opinions of a set."""
    opinions = list(opinions)
    if not opinions:
        raise ValueError("polarization of an empty set of opinions")
    return max(pairwise(opinions, s, mode, cfg).values(), default=0.0)


def diameter(c: Constraint, variables: Sequence[str], cfg: MetricConfig = EUCLIDEAN) -> float:
    """Largest distance between two valuations of ``variables``."""
    if cfg.point_distance is not None:
        grid = grid_points(c, variables)
        return max(
            float(cfg.lift(cfg.coordinate_gaps(p[None, :], grid)).max()) for p in grid
        )
    spans = np.array([max(c.domains.domain(v)) - min(c.domains.domain(v)) for v in variables], dtype=float)
    return float(cfg.lift(spans))


def similarity_ratio(c: Constraint, d: Constraint, s, cfg: MetricConfig = EUCLIDEAN) -> tuple[float, float]:
    """Forward distance from ``c``'s to ``d``'s solutions at ``s``, normalised two ways.

    First relative to the forward distance from the whole grid to ``d``'s
    solutions, then relative to the grid diameter.  Both are 0 when the
    forward distance is 0.
    """
    variables = _common_variables(c, d)
    target = solution_points(d, s, variables)
    if len(target) == 0:
        raise ValueError("reference opinion has no solutions at this level")
    forward = forward_distance(solution_points(c, s, variables), target, cfg)
    if forward == 0:
        return 0.0, 0.0
    extremes = forward_distance(grid_points(c, variables), target, cfg)
    return forward / extremes, forward / diameter(c, variables, cfg)


def per_agent(fn: Callable, c: Constraint, d: Constraint, *args, **kwargs) -> dict:
    """Apply a distance to each agent component of two tagged opinions.

    The tag is fixed to each agent in turn, so the distance only sees the
    value variables.
    """
    tag = c.domains.tag
    if tag is None:
        raise TypeError("per_agent needs constraints over a tagged space")
    return {
        a: fn(cs.restrict(c, {tag: a}), cs.restrict(d, {tag: a}), *args, **kwargs)
        for a in c.domains.domain(tag)
    }
