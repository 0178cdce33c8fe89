"""Canonical scenario text for an elaborated model."""

from __future__ import annotations

import re

from ..constraints import Constraint
from ..dynamics import Bias
from .elaborate import RunConfig, Scenario

_BARE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$|^-?\d+$")


def _atom(value) -> str:
    text = str(value).lower() if isinstance(value, bool) else str(value)
    if not _BARE.match(text):
        raise ValueError(f"domain value {value!r} has no literal spelling")
    return text


def _domain(values: tuple) -> str:
    if values and all(type(v) is int for v in values) and len(values) > 1 and \
            list(values) == list(range(values[0], values[0] + len(values))):
        return f"{values[0]}..{values[-1]}"
    return "{" + ", ".join(_atom(v) for v in values) + "}"


def constraint_text(c: Constraint) -> str:
    """Constants as bare numbers, everything else as a table literal in domain order."""
    sr = c.semiring
    if c.is_constant:
        return sr.format(c.value)
    rows = []
    for key, value in c.items():
        if value == sr.zero:
            continue
        k = ", ".join(_atom(v) for v in key)
        rows.append(f"({k}): {sr.format(value)}" if len(key) > 1 else f"{k}: {sr.format(value)}")
    if not rows:
        return sr.format(sr.zero)
    return "{" + ", ".join(c.support) + " | " + ", ".join(rows) + "}"


def roundtrip(model: Scenario) -> str:
    """Render ``model`` as scenario text that parses back to identical tables."""
    sr = model.semiring
    lines = []
    if model.title:
        lines.append(f'title = "{model.title}"')
    lines.append(f"semiring = {sr.name}")
    if model.exact:
        lines.append("exact = true")
    if model.tolerance is not None:
        lines.append(f"tolerance = {model.tolerance!r}")
    if model.boolean_aliases:
        lines.append("boolean_aliases = true")
    if isinstance(model.update, Bias):
        lines.append(f"update = biased({model.update.name})")
    defaults = RunConfig()
    for key in ("max_steps", "tol", "history", "stride"):
        value = getattr(model.run, key)
        if value != getattr(defaults, key):
            lines.append(f"run.{key} = {value!r}")
    if model.metric.config.norm != "L2":
        lines.append(f"metric.norm = {model.metric.config.norm}")
    if model.metric.levels:
        lines.append("metric.levels = [" + ", ".join(sr.format(s) for s in model.metric.levels) + "]")
    if model.metric.mode != "exact":
        lines.append(f"metric.mode = {model.metric.mode}")
    lines.append("")
    doms = model.domains
    for var, values in zip(doms.variables, doms.domains):
        if var != doms.tag:
            lines.append(f"var {var} in {_domain(values)}")
    if doms.tag is not None:
        lines.append(f"tag {doms.tag}")
    if model.agents == tuple(str(k) for k in range(1, model.n + 1)):
        lines.append(f"agents = {model.n}")
    else:
        lines.append("agents = [" + ", ".join(_atom(a) for a in model.agents) + "]")
    lines.append("")
    for i, a in enumerate(model.agents):
        for j, b in enumerate(model.agents):
            lines.append(f"influence[{a}][{b}] = {constraint_text(model.influence[i, j])}")
    lines.append("")
    for a, c in zip(model.agents, model.opinions):
        lines.append(f"opinion {a} = {constraint_text(c)}")
    return "\n".join(lines) + "\n"
