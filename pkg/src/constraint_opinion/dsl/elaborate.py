"""Turn a parsed scenario into a validated model."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence

from .. import builders
from ..constraints import Constraint, DomainSpec, Space, combine
from ..dynamics import BIASES, Bias, InfluenceGraph
from ..errors import CapabilityError, ConfigurationError, EvaluationError, ModelError, OpinionModelError
from ..metrics import MetricConfig
from ..semiring import Semiring, builtin_semiring
from . import parser as ast


class ScenarioError(OpinionModelError, ValueError):
    """A semantic problem in a scenario file, located at ``pos``."""

    def __init__(self, message: str, pos: Optional[ast.Pos] = None):
        self.pos = pos
        where = f"line {pos[0]}, column {pos[1]}: " if pos else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class RunConfig:
    max_steps: int = 10_000
    tol: float = 1e-6
    history: int = 64
    stride: int = 1


@dataclass(frozen=True)
class MetricSettings:
    config: MetricConfig = field(default_factory=MetricConfig)
    levels: tuple = ()
    mode: str = "exact"


@dataclass(frozen=True)
class Scenario:
    """An elaborated model: influence graph, initial opinions and run settings."""

    space: Space
    agents: tuple[str, ...]
    influence: InfluenceGraph
    opinions: tuple[Constraint, ...]
    update: Any = "matrix"  # "matrix" or a Bias
    run: RunConfig = field(default_factory=RunConfig)
    metric: MetricSettings = field(default_factory=MetricSettings)
    title: str = ""
    exact: bool = False
    boolean_aliases: bool = False
    tolerance: Optional[float] = None

    @property
    def semiring(self) -> Semiring:
        return self.space.semiring

    @property
    def domains(self) -> DomainSpec:
        return self.space.domains

    @property
    def n(self) -> int:
        return len(self.agents)


_SETTINGS = {
    "title", "semiring", "exact", "tolerance", "boolean_aliases", "update",
    "run.max_steps", "run.tol", "run.history", "run.stride",
    "metric.norm", "metric.levels", "metric.mode",
}


def _literal(v):
    """Python value of a setting or domain literal."""
    if isinstance(v, ast.Bool):
        return v.value
    if isinstance(v, ast.Name):
        return v.text
    if isinstance(v, ast.Num):
        if v.denominator is not None:
            return Fraction(int(v.text), int(v.denominator))
        return int(v.text) if "." not in v.text else float(v.text)
    if isinstance(v, list):
        return [_literal(x) for x in v]
    return v


class _Elaborator:
    def __init__(self, tree: ast.ScenarioFile):
        self.tree = tree
        self.settings: dict[str, ast.Setting] = {}
        self.vars: list[ast.VarDecl] = []
        self.tag: Optional[ast.TagDecl] = None
        self.agents_decl: Optional[ast.AgentsDecl] = None
        self.influence: list[ast.InfluenceEntry] = []
        self.opinion_decls: list[ast.OpinionDecl] = []
        for st in tree.statements:
            if isinstance(st, ast.Setting):
                if st.key not in _SETTINGS:
                    raise ScenarioError(f"unknown setting {st.key!r}", st.pos)
                if st.key in self.settings:
                    raise ScenarioError(f"setting {st.key!r} given twice", st.pos)
                self.settings[st.key] = st
            elif isinstance(st, ast.VarDecl):
                self.vars.append(st)
            elif isinstance(st, ast.TagDecl):
                if self.tag is not None:
                    raise ScenarioError("only one tag variable may be declared", st.pos)
                self.tag = st
            elif isinstance(st, ast.AgentsDecl):
                if self.agents_decl is not None:
                    raise ScenarioError("agents declared twice", st.pos)
                self.agents_decl = st
            elif isinstance(st, ast.InfluenceEntry):
                self.influence.append(st)
            else:
                self.opinion_decls.append(st)

    def get(self, key: str, default=None):
        st = self.settings.get(key)
        return default if st is None else _literal(st.value)

    def pos(self, key: str):
        st = self.settings.get(key)
        return st.pos if st else None

    # setup
    def build_space(self) -> Space:
        name = self.get("semiring")
        if name is None:
            raise ScenarioError("missing setting 'semiring'")
        exact = bool(self.get("exact", False))
        tol = self.get("tolerance")
        try:
            sr = builtin_semiring(str(name), exact=exact, tol=None if tol is None else float(tol))
        except ConfigurationError as exc:
            raise ScenarioError(str(exc), self.pos("semiring")) from None
        if self.agents_decl is None:
            raise ScenarioError("missing 'agents' declaration")
        self.agent_names = self.agents_decl.names
        if len(set(self.agent_names)) != len(self.agent_names):
            raise ScenarioError("agent names repeat", self.agents_decl.pos)
        variables, domains = [], []
        for decl in self.vars:
            if decl.name in variables:
                raise ScenarioError(f"variable {decl.name!r} declared twice", decl.pos)
            values = tuple(_literal(v) for v in decl.values)
            if len(set(values)) != len(values):
                raise ScenarioError(f"domain of {decl.name!r} repeats a value", decl.pos)
            variables.append(decl.name)
            domains.append(values)
        tag = None
        if self.tag is not None:
            if self.tag.name in variables:
                raise ScenarioError(f"tag {self.tag.name!r} clashes with a variable", self.tag.pos)
            tag = self.tag.name
            variables.append(tag)
            domains.append(tuple(self.agent_names))
        if not variables:
            raise ScenarioError("declare at least one variable")
        self.space = Space(sr, DomainSpec(tuple(variables), tuple(domains), tag))
        self.aliases = bool(self.get("boolean_aliases", False))
        return self.space

    def agent_index(self, ref: ast.Value) -> int:
        text = ref.text
        if text in self.agent_names:
            return self.agent_names.index(text)
        if isinstance(ref, ast.Num) and text.isdigit() and 1 <= int(text) <= len(self.agent_names):
            return int(text) - 1
        if isinstance(ref, ast.Num) and text.isdigit():
            n = len(self.agent_names)
            raise ScenarioError(f"agent index {text} is out of range; the matrix is {n}x{n}", ref.pos)
        raise ScenarioError(f"unknown agent {text!r} (agents: {', '.join(self.agent_names)})", ref.pos)

    # expressions
    def scalar(self, v: ast.Value):
        sr = self.space.semiring
        try:
            if isinstance(v, ast.Bool):
                if sr.kind != "boolean":
                    raise ScenarioError(f"'{'true' if v.value else 'false'}' needs the boolean semiring", v.pos)
                return v.value
            if isinstance(v, ast.Num):
                if sr.kind == "boolean":
                    raise ScenarioError(f"number {v.text} in the boolean semiring; write true or false", v.pos)
                if v.denominator is not None:
                    q = Fraction(int(v.text), int(v.denominator))
                    return sr.coerce(q if sr.kind == "rational" else float(q))
                return sr.coerce(Fraction(v.text) if sr.kind == "rational" else float(v.text))
        except ValueError as exc:
            raise ScenarioError(str(exc), v.pos) from None
        raise ScenarioError(f"expected a number, found {v.text!r}", v.pos)

    def domain_value(self, var: str, v: ast.Value, pos):
        if isinstance(v, ast.Num) and v.denominator is not None:
            raise ScenarioError("domain values are integers or names", pos)
        if var == self.space.domains.tag:
            # agent names are text even when written as numbers
            return v.text if not isinstance(v, ast.Bool) else str(v.value).lower()
        return _literal(v)

    def variable(self, name: ast.Name) -> str:
        if name.text not in self.space.domains.variables:
            raise ScenarioError(f"undeclared variable {name.text!r}", name.pos)
        return name.text

    def compile(self, e: ast.Expr) -> Constraint:
        sp = self.space
        sr = sp.semiring
        if isinstance(e, (ast.Num, ast.Bool)):
            return sp.constant(self.scalar(e))
        if isinstance(e, ast.Binary):
            if e.word in ("and", "or") and sr.kind != "boolean" and not self.aliases:
                raise ScenarioError(
                    f"'{e.word}' is boolean notation; write '{e.op}' or set boolean_aliases = true", e.pos)
            return combine(self.compile(e.left), self.compile(e.right), e.op)
        if isinstance(e, ast.SetOf):
            out = self.compile(e.items[0])
            for item in e.items[1:]:
                out = combine(out, self.compile(item), "times")
            return out
        if isinstance(e, ast.Tagged):
            tag = sp.domains.tag
            if tag is None:
                raise ScenarioError("agent tag '^' used but no 'tag' variable declared", e.pos)
            if e.agent.text not in self.agent_names:
                raise ScenarioError(f"unknown agent {e.agent.text!r} in tag", e.agent.pos)
            return combine(self.compile(e.expr), sp.atom(tag, "=", e.agent.text), "times")
        if isinstance(e, ast.Compare):
            var = self.variable(e.var)
            bounds = [self.domain_value(var, b, e.pos) for b in e.bounds]
            if e.lower_first:
                # `low op var [op high]`: flip the first comparison around
                flip = {"<=": ">=", "<": ">", ">=": "<=", ">": "<", "=": "=", "==": "=", "!=": "!="}
                out = sp.atom(var, flip[e.ops[0]], bounds[0])
                if len(e.ops) == 2:
                    out = combine(out, sp.atom(var, e.ops[1], bounds[1]), "times")
            else:
                out = sp.atom(var, e.ops[0], bounds[0])
            if any(op in ("=", "==") for op in e.ops):
                for b in bounds:
                    if b not in sp.domains.domain(var):
                        raise ScenarioError(f"{b!r} is outside the domain of {var!r}", e.pos)
            return out
        if isinstance(e, ast.Call):
            return self.builder(e)
        if isinstance(e, ast.Table):
            return self.table(e)
        raise ScenarioError(f"cannot compile {type(e).__name__}")

    def builder(self, e: ast.Call) -> Constraint:
        if e.name not in builders.BUILDERS:
            raise ScenarioError(
                f"unknown builder {e.name!r}; expected one of {', '.join(sorted(builders.BUILDERS))}", e.pos)
        fn, nvars = builders.BUILDERS[e.name]
        if len(e.args) < nvars or any(not isinstance(a, ast.Name) for a in e.args[:nvars]):
            raise ScenarioError(f"{e.name} takes {nvars} variable name(s) first", e.pos)
        names = [self.variable(a) for a in e.args[:nvars]]
        rest = e.args[nvars:]
        if e.name in ("extreme", "topics"):
            args = [self.scalar(a) for a in rest]
        else:
            args = [self.domain_value(names[0], a, e.pos) for a in rest]
        arity = {"interval": 2, "extreme": 2, "cond": 4, "cond_fix": 3}.get(e.name)
        if arity is not None and len(args) != arity:
            raise ScenarioError(f"{e.name} expects {nvars + arity} arguments, got {len(e.args)}", e.pos)
        try:
            return fn(self.space, *names, *args)
        except (ModelError, CapabilityError, EvaluationError) as exc:
            raise ScenarioError(str(exc), e.pos) from None

    def table(self, e: ast.Table) -> Constraint:
        if e.variables is None:
            names = self.space.domains.value_variables
            if len(names) != 1:
                raise ScenarioError("table literal without variables needs a single-variable model; "
                                    "write {x, y | ...}", e.pos)
            support = names
        else:
            support = tuple(self.variable(v) for v in e.variables)
        entries = {}
        for key, value in e.entries:
            if len(key) != len(support):
                raise ScenarioError(f"table key has {len(key)} values for {len(support)} variables", e.pos)
            k = tuple(self.domain_value(v, x, e.pos) for v, x in zip(support, key))
            for var, x in zip(support, k):
                if x not in self.space.domains.domain(var):
                    raise ScenarioError(f"{x!r} is outside the domain of {var!r}", e.pos)
            k = k if len(support) > 1 else k[0]
            if k in entries:
                raise ScenarioError(f"table key {k!r} repeated", e.pos)
            entries[k] = self.scalar(value)
        return self.space.table(support, entries)

    # model
    def build(self) -> Scenario:
        self.build_space()
        n = len(self.agent_names)
        cells: list[list[Optional[Constraint]]] = [[None] * n for _ in range(n)]
        for entry in self.influence:
            i = self.agent_index(entry.row)
            if entry.col is None:
                if len(entry.exprs) != n:
                    raise ScenarioError(f"influence row has {len(entry.exprs)} entries for {n} agents", entry.pos)
                targets = list(enumerate(entry.exprs))
            else:
                targets = [(self.agent_index(entry.col), entry.exprs[0])]
            for j, expr in targets:
                if cells[i][j] is not None:
                    raise ScenarioError(f"influence[{i + 1}][{j + 1}] given twice", entry.pos)
                cells[i][j] = self.compile(expr)
        for i in range(n):
            for j in range(n):
                if cells[i][j] is None:
                    raise ScenarioError(f"influence[{self.agent_names[i]}][{self.agent_names[j]}] is missing")
        opinions: list[Optional[Constraint]] = [None] * n
        for decl in self.opinion_decls:
            i = self.agent_index(decl.agent)
            if opinions[i] is not None:
                raise ScenarioError(f"opinion of {self.agent_names[i]!r} given twice", decl.pos)
            opinions[i] = self.compile(decl.expr)
        missing = [self.agent_names[i] for i, o in enumerate(opinions) if o is None]
        if missing:
            raise ScenarioError(f"missing opinion for agent(s) {', '.join(missing)}")
        return Scenario(
            space=self.space,
            agents=tuple(self.agent_names),
            influence=InfluenceGraph.of(cells),
            opinions=tuple(opinions),
            update=self.update(),
            run=self.run_config(),
            metric=self.metric(),
            title=str(self.get("title", "")),
            exact=bool(self.get("exact", False)),
            boolean_aliases=self.aliases,
            tolerance=None if self.get("tolerance") is None else float(self.get("tolerance")),
        )

    def update(self):
        st = self.settings.get("update")
        if st is None:
            return "matrix"
        v = st.value
        if isinstance(v, ast.Name) and v.text == "matrix":
            return "matrix"
        if isinstance(v, ast.Call) and v.name == "biased":
            rule = v.args[0].text
            if rule not in BIASES:
                raise ScenarioError(f"unknown bias rule {rule!r}; expected one of {', '.join(BIASES)}", st.pos)
            sr = self.space.semiring
            if sr.minus is None or sr.divide is None:
                raise ScenarioError(f"biased update needs the real-ring semiring, not {sr.name!r}", st.pos)
            return BIASES[rule]
        raise ScenarioError("update must be 'matrix' or 'biased(<rule>)'", st.pos)

    def run_config(self) -> RunConfig:
        cfg = RunConfig(
            max_steps=int(self.get("run.max_steps", RunConfig.max_steps)),
            tol=float(self.get("run.tol", RunConfig.tol)),
            history=int(self.get("run.history", RunConfig.history)),
            stride=int(self.get("run.stride", RunConfig.stride)),
        )
        if cfg.max_steps < 1 or cfg.tol <= 0 or cfg.history < 1 or cfg.stride < 1:
            raise ScenarioError("run settings must be positive")
        return cfg

    def metric(self) -> MetricSettings:
        try:
            cfg = MetricConfig(norm=str(self.get("metric.norm", "L2")))
        except ValueError as exc:
            raise ScenarioError(str(exc), self.pos("metric.norm")) from None
        st = self.settings.get("metric.levels")
        levels = tuple(self.scalar(v) for v in st.value) if st else ()
        mode = str(self.get("metric.mode", "exact"))
        if mode not in ("exact", "geq"):
            raise ScenarioError("metric.mode must be 'exact' or 'geq'", self.pos("metric.mode"))
        if mode == "geq" and not self.space.semiring.is_ordered:
            raise ScenarioError("metric.mode geq needs an ordered semiring", self.pos("metric.mode"))
        return MetricSettings(cfg, levels, mode)


def elaborate(tree: ast.ScenarioFile) -> Scenario:
    """Check and compile a parsed scenario."""
    return _Elaborator(tree).build()


def load(text: str) -> Scenario:
    """Parse and elaborate scenario text."""
    return elaborate(ast.parse(text))
