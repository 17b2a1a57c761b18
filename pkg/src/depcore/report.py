"""Run configuration and the analysis report emitted by the CLI."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

from .abstract import AnalysisReport, analyze_program
from .concrete import TaintedValue, evaluate, Location
from .lattice import AbstractValue, alpha
from .syntax import Expr, Mark, MarkSet, parse, render_const

ENGINES = ("concrete", "abstract", "both")


@dataclass(frozen=True)
class RunConfig:
    modes: tuple = ("T", "S")
    default_mode: str = "T"
    engine: str = "both"
    step_budget: int = 10**6
    iteration_cap: int = 1000
    report_format: str = "text"

    def __post_init__(self):
        if self.default_mode not in self.modes:
            raise ValueError(f"default mode {self.default_mode!r} not in modes")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.step_budget <= 0 or self.iteration_cap <= 0:
            raise ValueError("budgets must be positive")
        if self.report_format not in ("text", "json"):
            raise ValueError(f"unknown report format {self.report_format!r}")

    @classmethod
    def from_dict(cls, data: dict, **overrides) -> "RunConfig":
        known = {
            "modes": tuple(data.get("modes", cls.modes)),
            "default_mode": data.get("default_mode", cls.default_mode),
            "step_budget": int(data.get("step_budget", cls.step_budget)),
            "iteration_cap": int(data.get("iteration_cap", cls.iteration_cap)),
        }
        known.update(overrides)
        return cls(**known)

    @classmethod
    def from_file(cls, path: str, **overrides) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh), **overrides)


class DepEntry(NamedTuple):
    label: str
    mode: str
    cls: str
    span: str


@dataclass(frozen=True)
class Sanitization:
    flagged: bool
    mixed_classes: tuple


@dataclass(frozen=True)
class Report:
    """Stable-schema analysis report; one value renders both text and JSON."""

    program: str
    engine: str
    value: str
    deps: tuple  # tuple[DepEntry, ...]
    iterations: int | None
    sanitization: Sanitization

    def to_json_dict(self) -> dict:
        return {
            "program": self.program,
            "engine": self.engine,
            "value": self.value,
            "deps": [{"label": d.label, "mode": d.mode, "class": d.cls,
                      "span": d.span} for d in self.deps],
            "iterations": self.iterations,
            "sanitization": {"flagged": self.sanitization.flagged,
                             "mixed_classes": list(self.sanitization.mixed_classes)},
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Report":
        deps = tuple(DepEntry(d["label"], d["mode"], d["class"], d["span"])
                     for d in data["deps"])
        san = Sanitization(bool(data["sanitization"]["flagged"]),
                           tuple(data["sanitization"]["mixed_classes"]))
        return cls(data["program"], data["engine"], data["value"], deps,
                   data["iterations"], san)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"program: {self.program}",
                 f"engine: {self.engine}",
                 f"value: {self.value}"]
        if self.iterations is not None:
            lines.append(f"iterations: {self.iterations}")
        if self.deps:
            lines.append("dependencies:")
            for d in self.deps:
                lines.append(f"  {d.label} mode={d.mode} class={d.cls} at {d.span}")
        else:
            lines.append("dependencies: none")
        if self.sanitization.flagged:
            mixed = ", ".join(self.sanitization.mixed_classes)
            lines.append(f"sanitization: MIXED modes for class(es) {mixed}")
        else:
            lines.append("sanitization: clean")
        return "\n".join(lines)


def _mark_entries(marks: MarkSet) -> tuple:
    entries = []
    for m in sorted(marks, key=lambda m: (m.label.id, m.mode, m.cls)):
        span = str(m.label.origin) if m.label.origin else ""
        entries.append(DepEntry(m.label.text, m.mode, m.cls, span))
    return tuple(entries)


def _sanitization(marks: MarkSet) -> Sanitization:
    by_class: dict = {}
    for m in marks:
        by_class.setdefault(m.cls, set()).add(m.mode)
    mixed = tuple(sorted(cls for cls, modes in by_class.items() if len(modes) > 1))
    return Sanitization(bool(mixed), mixed)


def render_concrete_value(omega: TaintedValue) -> str:
    if isinstance(omega.value, Location):
        return f"object@{omega.value.label.text}"
    return render_const(omega.value)


def render_abstract_value(value: AbstractValue) -> str:
    parts = []
    lat = value.lattice
    if lat.undef:
        parts.append("undefined")
    if lat.null:
        parts.append("null")
    parts.extend(sorted("true" if b else "false" for b in lat.bools))
    if not lat.num.is_bottom:
        parts.append(str(lat.num) if lat.num.is_const else "num:⊤")
    if not lat.string.is_bottom:
        parts.append(str(lat.string) if lat.string.is_const else "str:⊤")
    parts.extend(f"object@{l.text}" for l in sorted(value.objs))
    return " | ".join(parts) if parts else "⊥"


@dataclass(frozen=True)
class AnalysisOutcome:
    """Engine results backing one report (kept for tests and exit codes)."""

    report: Report
    concrete: TaintedValue | None
    abstract: AnalysisReport | None
    marks: MarkSet


def analyze_source(program: Expr, path: str, config: RunConfig) -> AnalysisOutcome:
    """Run the configured engine(s) and assemble the report.

    With both engines, the dependency list is the union of the final-value
    marks (the abstract set subsumes the concrete one on conclusive runs)
    and the rendered value comes from the concrete run.
    """
    concrete_result: TaintedValue | None = None
    abstract_result: AnalysisReport | None = None
    marks: MarkSet = frozenset()
    value_text = ""
    if config.engine in ("concrete", "both"):
        _, concrete_result = evaluate(program, budget=config.step_budget)
        marks |= concrete_result.marks
        value_text = render_concrete_value(concrete_result)
    if config.engine in ("abstract", "both"):
        abstract_result = analyze_program(program,
                                          iteration_cap=config.iteration_cap)
        marks |= abstract_result.final_value.deps
        if not value_text:
            value_text = render_abstract_value(abstract_result.final_value)
    report = Report(
        program=path,
        engine=config.engine,
        value=value_text,
        deps=_mark_entries(marks),
        iterations=abstract_result.iterations if abstract_result else None,
        sanitization=_sanitization(marks),
    )
    return AnalysisOutcome(report, concrete_result, abstract_result, marks)


def analyze_file(path: str, config: RunConfig) -> AnalysisOutcome:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    program = parse(text, filename=path, default_mode=config.default_mode,
                    modes=config.modes)
    return analyze_source(program, path, config)
