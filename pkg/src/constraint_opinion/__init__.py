"""Constraint opinion models.

Agents hold soft constraints over shared variables and update them through
an influence graph whose entries are constraints as well.  Values live in a
semiring: booleans, non-negative reals or the real ring.
"""

from .builders import cond, cond_fix, extreme, interval, topics
from .constraints import Constraint, DomainSpec, Space, combine, project, restrict
from .dsl import Scenario, bundled, load, load_file, parse, roundtrip
from .dynamics import (
    InfluenceGraph,
    Trace,
    Verdict,
    belief_step,
    consensus_check,
    is_aperiodic,
    is_row_stochastic,
    is_strongly_connected,
    limit_matrix,
    run,
    step_biased,
    step_matrix,
)
from .errors import (
    AlgebraError,
    CapabilityError,
    ConfigurationError,
    EvaluationError,
    ModelError,
    OpinionModelError,
    SemiringMismatch,
)
from .metrics import MetricConfig, delta, delta_geq_s, delta_s, hausdorff, polarization
from .semiring import Semiring, builtin_semiring, law_check

__version__ = "0.1.0"

__all__ = [
    "AlgebraError", "CapabilityError", "ConfigurationError", "Constraint", "DomainSpec",
    "EvaluationError", "InfluenceGraph", "MetricConfig", "ModelError", "OpinionModelError",
    "Scenario", "Semiring", "SemiringMismatch", "Space", "Trace", "Verdict",
    "belief_step", "builtin_semiring", "bundled", "combine", "cond", "cond_fix",
    "consensus_check", "delta", "delta_geq_s", "delta_s", "extreme", "hausdorff", "interval",
    "is_aperiodic", "is_row_stochastic", "is_strongly_connected", "law_check", "limit_matrix",
    "load", "load_file", "parse", "polarization", "project", "restrict", "roundtrip", "run",
    "step_biased", "step_matrix", "topics",
]
