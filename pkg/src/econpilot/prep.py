"""Analytic-table construction: external merges, transforms, sample
restrictions and listwise deletion, with an auditable construction report.

Every step that can change the row count is logged, so the attrition from
raw file to analytic sample is reproducible from the report alone.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

from .dataset import (
    DEFAULT_MISSING_TOKENS,
    DatasetAudit,
    Table,
    VariableKind,
    _parse_cell,
)

COMPARATORS = ("<", "<=", ">", ">=", "==", "!=")
TRANSFORM_KINDS = ("LogTransform", "Standardize", "BinaryRecode")


class PrepError(Exception):
    """Base class for analytic-table construction failures."""


class SampleSpecError(PrepError):
    pass


class ExternalSeriesError(PrepError):
    pass


class MergeError(PrepError):
    pass


class TransformError(PrepError):
    pass


class EmptySampleError(PrepError):
    """All rows eliminated; the run halts gracefully rather than estimating."""


@dataclass
class Restriction:
    """Single conjunctive filter: keep rows where ``variable <cmp> literal``.

    Rows missing the restricted variable never satisfy the predicate.
    """
    variable: str
    comparator: str
    literal: Union[int, float, str]

    def __post_init__(self) -> None:
        if self.comparator not in COMPARATORS:
            raise SampleSpecError(
                f"unknown comparator {self.comparator!r}; "
                f"expected one of {list(COMPARATORS)}")

    def keep(self, value: Any) -> bool:
        if value is None:
            return False
        if self.comparator == "==":
            return value == self.literal
        if self.comparator == "!=":
            return value != self.literal
        try:
            if self.comparator == "<":
                return value < self.literal
            if self.comparator == "<=":
                return value <= self.literal
            if self.comparator == ">":
                return value > self.literal
            return value >= self.literal
        except TypeError:
            return False

    def label(self) -> str:
        return f"{self.variable} {self.comparator} {self.literal!r}"

    def to_dict(self) -> dict[str, Any]:
        return {"variable": self.variable, "comparator": self.comparator,
                "literal": self.literal}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Restriction":
        return cls(d["variable"], d["comparator"], d["literal"])


@dataclass
class TransformStep:
    variable: str
    kind: str
    threshold: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in TRANSFORM_KINDS:
            raise SampleSpecError(
                f"unknown transform {self.kind!r}; "
                f"expected one of {list(TRANSFORM_KINDS)}")
        if self.kind == "BinaryRecode" and self.threshold is None:
            raise SampleSpecError("BinaryRecode requires a threshold")

    def to_dict(self) -> dict[str, Any]:
        return {"variable": self.variable, "kind": self.kind,
                "threshold": self.threshold}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TransformStep":
        return cls(d["variable"], d["kind"], d.get("threshold"))


@dataclass
class SampleSpec:
    variables: list[str]
    restrictions: list[Restriction] = field(default_factory=list)
    listwise_on: list[str] = field(default_factory=list)
    transforms: list[TransformStep] = field(default_factory=list)

    def named_variables(self) -> list[str]:
        seen: dict[str, None] = {}
        for name in [*self.variables,
                     *(r.variable for r in self.restrictions),
                     *self.listwise_on,
                     *(t.variable for t in self.transforms)]:
            seen.setdefault(name)
        return list(seen)

    def validate(self, audit: DatasetAudit,
                 external_names: Iterable[str] = ()) -> None:
        """Every referenced variable must exist in the audited inventory or
        arrive via an external merge."""
        known = audit.variable_names() | set(external_names)
        missing = [n for n in self.named_variables() if n not in known]
        if missing:
            raise SampleSpecError(f"spec references unknown variables: {missing}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "variables": self.variables,
            "restrictions": [r.to_dict() for r in self.restrictions],
            "listwise_on": self.listwise_on,
            "transforms": [t.to_dict() for t in self.transforms],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SampleSpec":
        return cls(
            variables=list(d["variables"]),
            restrictions=[Restriction.from_dict(r)
                          for r in d.get("restrictions", [])],
            listwise_on=list(d.get("listwise_on", [])),
            transforms=[TransformStep.from_dict(t)
                        for t in d.get("transforms", [])],
        )


@dataclass
class ExternalSeries:
    """Merge-in series keyed by ``key_var`` and optionally ``time_var``.
    ``source_id`` doubles as the merged column's name."""
    source_id: str
    key_var: str
    time_var: Optional[str]
    rows: list[tuple]  # (key, value) or (key, time, value)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        width = 3 if self.time_var is not None else 2
        seen: set[tuple] = set()
        for row in self.rows:
            if len(row) != width:
                raise ExternalSeriesError(
                    f"series {self.source_id!r}: row {row!r} has "
                    f"{len(row)} fields, expected {width}")
            join_key = row[:-1]
            if any(k is None for k in join_key):
                raise ExternalSeriesError(
                    f"series {self.source_id!r}: missing join key in {row!r}")
            if join_key in seen:
                raise ExternalSeriesError(
                    f"series {self.source_id!r}: duplicate key {join_key!r}")
            seen.add(join_key)

    def lookup(self) -> dict[tuple, Any]:
        return {row[:-1]: row[-1] for row in self.rows}


@dataclass
class LocalFile:
    path: Union[str, Path]


@dataclass
class RemoteStub:
    """Stand-in for a live data API: returns a preconfigured series."""
    series: ExternalSeries


def fetch_external(source: Union[LocalFile, RemoteStub]) -> ExternalSeries:
    """Resolve an external-series source to a validated series.

    Local files are CSV with a header row of either ``key,value`` or
    ``key,time,value``; the value column's header names the series.
    """
    if isinstance(source, RemoteStub):
        source.series.validate()
        return source.series
    path = Path(source.path)
    if not path.exists():
        raise ExternalSeriesError(f"external series file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ExternalSeriesError(f"external series file is empty: {path}")
        if len(header) not in (2, 3):
            raise ExternalSeriesError(
                f"external series must have 2 or 3 columns, "
                f"got {len(header)} in {path}")
        missing = frozenset(DEFAULT_MISSING_TOKENS)
        rows = []
        for raw in reader:
            if len(raw) != len(header):
                raise ExternalSeriesError(
                    f"ragged row in external series {path}: {raw!r}")
            rows.append(tuple(_parse_cell(cell, missing) for cell in raw))
    key_var = header[0]
    time_var = header[1] if len(header) == 3 else None
    return ExternalSeries(source_id=header[-1], key_var=key_var,
                          time_var=time_var, rows=rows)


@dataclass
class StepCount:
    step: str
    detail: str
    rows: int

    def to_dict(self) -> dict[str, Any]:
        return {"step": self.step, "detail": self.detail, "rows": self.rows}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "StepCount":
        return cls(d["step"], d["detail"], d["rows"])


@dataclass
class ConstructionReport:
    initial_rows: int
    steps: list[StepCount] = field(default_factory=list)

    @property
    def final_rows(self) -> int:
        return self.steps[-1].rows if self.steps else self.initial_rows

    def add(self, step: str, detail: str, rows: int) -> None:
        self.steps.append(StepCount(step, detail, rows))

    def to_dict(self) -> dict[str, Any]:
        return {
            "initial_rows": self.initial_rows,
            "steps": [s.to_dict() for s in self.steps],
            "final_rows": self.final_rows,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ConstructionReport":
        return cls(initial_rows=d["initial_rows"],
                   steps=[StepCount.from_dict(s) for s in d.get("steps", [])])

    def render(self) -> str:
        lines = [f"{'start':<24} {'':<32} {self.initial_rows:>10}"]
        for s in self.steps:
            lines.append(f"{s.step:<24} {s.detail:<32} {s.rows:>10}")
        return "\n".join(lines)


def _merge_one(table: Table, series: ExternalSeries) -> Table:
    for needed in filter(None, (series.key_var, series.time_var)):
        if not table.has_column(needed):
            raise MergeError(
                f"series {series.source_id!r} joins on {needed!r}, "
                f"which the table lacks")
    lookup: dict[tuple, Any] = {}
    for row in series.rows:
        join_key = row[:-1]
        if join_key in lookup:
            raise MergeError(
                f"series {series.source_id!r}: duplicate match for "
                f"key {join_key!r}")
        lookup[join_key] = row[-1]
    keys = table.column(series.key_var)
    if series.time_var is not None:
        times = table.column(series.time_var)
        merged = [lookup.get((k, t)) for k, t in zip(keys, times)]
    else:
        merged = [lookup.get((k,)) for k in keys]
    kind = (VariableKind.NUMERIC
            if any(isinstance(v, (int, float)) for v in merged)
            else VariableKind.TEXT)
    return table.with_column(series.source_id, kind, merged)


def _apply_transform(table: Table, step: TransformStep) -> Table:
    values = table.column(step.variable)
    if step.kind == "LogTransform":
        offending = [i + 1 for i, v in enumerate(values)
                     if v is not None and v <= 0]
        if offending:
            raise TransformError(
                f"LogTransform on {step.variable!r}: non-positive values "
                f"at rows {offending[:20]}"
                + (f" and {len(offending) - 20} more" if len(offending) > 20
                   else ""))
        out = [None if v is None else math.log(v) for v in values]
        return table.with_column(step.variable, VariableKind.NUMERIC, out)
    if step.kind == "Standardize":
        present = [v for v in values if v is not None]
        if len(present) < 2:
            raise TransformError(
                f"Standardize on {step.variable!r}: fewer than 2 observations")
        mean = sum(present) / len(present)
        var = sum((v - mean) ** 2 for v in present) / (len(present) - 1)
        if var == 0.0:
            raise TransformError(
                f"Standardize on {step.variable!r}: zero variance")
        sd = math.sqrt(var)
        out = [None if v is None else (v - mean) / sd for v in values]
        return table.with_column(step.variable, VariableKind.NUMERIC, out)
    # BinaryRecode
    threshold = step.threshold
    out = [None if v is None else (1 if v >= threshold else 0) for v in values]
    return table.with_column(step.variable, VariableKind.BINARY, out)


def build_analytic_table(
        table: Table, spec: SampleSpec,
        externals: Sequence[ExternalSeries] = (),
        audit: Optional[DatasetAudit] = None,
) -> tuple[Table, ConstructionReport]:
    """Run the construction pipeline: merge, transform, restrict, delete.

    Returns the analytic table projected onto ``spec.variables`` (plus panel
    identifiers when an audit with panel structure is given) and a report
    with the row count after every step.
    """
    if audit is not None:
        spec.validate(audit, external_names=[s.source_id for s in externals])
    report = ConstructionReport(initial_rows=table.n_rows)
    current = table
    for series in externals:
        current = _merge_one(current, series)
        matched = current.n_rows - current.column(series.source_id).count(None)
        report.add("merge", f"{series.source_id} ({matched} matched)",
                   current.n_rows)
    for step in spec.transforms:
        current = _apply_transform(current, step)
        report.add("transform", f"{step.kind} {step.variable}", current.n_rows)
    for restriction in spec.restrictions:
        col = current.column(restriction.variable)
        current = current.filter_rows([restriction.keep(v) for v in col])
        report.add("restrict", restriction.label(), current.n_rows)
    if spec.listwise_on:
        cols = [current.column(n) for n in spec.listwise_on]
        keep = [all(c[i] is not None for c in cols)
                for i in range(current.n_rows)]
        current = current.filter_rows(keep)
        report.add("listwise_deletion", ", ".join(spec.listwise_on),
                   current.n_rows)
    if current.n_rows == 0:
        raise EmptySampleError(
            "sample construction eliminated every observation; "
            "relax the restrictions and re-run")
    keep_names = list(spec.variables)
    if audit is not None and audit.panel_structure is not None:
        for name in (audit.panel_structure.entity_var,
                     audit.panel_structure.time_var):
            if name not in keep_names and current.has_column(name):
                keep_names.append(name)
    return current.project(keep_names), report
