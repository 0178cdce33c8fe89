"""Scenario language: parsing, elaboration and canonical rendering."""

from importlib import resources
from pathlib import Path

from .elaborate import MetricSettings, RunConfig, Scenario, ScenarioError, elaborate, load
from .parser import ScenarioSyntaxError, parse
from .render import constraint_text, roundtrip


def load_file(path) -> Scenario:
    """Read and elaborate a scenario file (UTF-8)."""
    return load(Path(path).read_text(encoding="utf-8"))


def bundled_path(name: str):
    """Path of a scenario shipped with the package (name without ``.com``)."""
    path = resources.files("constraint_opinion") / "scenarios" / f"{name}.com"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled scenario named {name!r}")
    return path


def bundled_names() -> list[str]:
    root = resources.files("constraint_opinion") / "scenarios"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".com"))


def bundled(name: str) -> Scenario:
    """Load a scenario shipped with the package."""
    return load(bundled_path(name).read_text(encoding="utf-8"))


__all__ = [
    "bundled", "bundled_names", "bundled_path",
    "MetricSettings", "RunConfig", "Scenario", "ScenarioError", "ScenarioSyntaxError",
    "constraint_text", "elaborate", "load", "load_file", "parse", "roundtrip",
]
