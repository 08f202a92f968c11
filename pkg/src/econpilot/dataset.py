"""Tabular dataset ingestion and structural auditing.

The audit is the inventory every downstream step is constrained by: which
variables exist, what kind of values they hold, and whether the file is a
panel (entity x wave).  Only CSV input is supported; a sidecar
``<dataset>.meta.json`` file can supply variable labels and the panel hint.
Panel structure is never guessed: no hint, no panel.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

Cell = Union[float, int, str, None]

DEFAULT_MISSING_TOKENS = ("", "NA", ".")

# Non-numeric columns with more distinct values than this are treated as
# free text: they cannot be dummy-encoded without blowing up the design
# matrix, so they are audited but unusable as regressors.
MAX_CATEGORICAL_LEVELS = 50


class CsvParseError(Exception):
    """Malformed CSV input (ragged rows, empty file)."""


class SchemaError(Exception):
    """Structurally unusable header (duplicate or empty names)."""


class AuditError(Exception):
    """The audit request contradicts the table (e.g. bad panel hint)."""


class VariableKind(str, Enum):
    NUMERIC = "Numeric"
    INTEGER = "Integer"
    CATEGORICAL = "Categorical"
    BINARY = "Binary"
    IDENTIFIER = "Identifier"
    TIME_INDEX = "TimeIndex"
    # High-cardinality free text; audited but unusable for estimation.
    TEXT = "Text"


NUMERIC_KINDS = frozenset(
    {VariableKind.NUMERIC, VariableKind.INTEGER, VariableKind.BINARY,
     VariableKind.IDENTIFIER, VariableKind.TIME_INDEX}
)


class Table:
    """Column-major cell store.  Cells are float/int (numeric), str (text)
    or None (missing)."""

    def __init__(self, names: Sequence[str], kinds: Sequence[VariableKind],
                 columns: Sequence[list]) -> None:
        if len(names) != len(kinds) or len(names) != len(columns):
            raise SchemaError("names, kinds and columns must align")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if list(names).count(n) > 1})
            raise SchemaError(f"duplicate column names: {dupes}")
        n_rows = len(columns[0]) if columns else 0
        for name, col in zip(names, columns):
            if len(col) != n_rows:
                raise SchemaError(f"column {name!r} has {len(col)} cells, "
                                  f"expected {n_rows}")
        self.names: list[str] = list(names)
        self.kinds: dict[str, VariableKind] = dict(zip(names, kinds))
        self._cols: dict[str, list] = dict(zip(names, columns))
        self.n_rows: int = n_rows

    @property
    def n_cols(self) -> int:
        return len(self.names)

    def column(self, name: str) -> list:
        return self._cols[name]

    def kind(self, name: str) -> VariableKind:
        return self.kinds[name]

    def has_column(self, name: str) -> bool:
        return name in self._cols

    def rows(self) -> Iterable[tuple]:
        return zip(*(self._cols[n] for n in self.names))

    def project(self, names: Sequence[str]) -> "Table":
        missing = [n for n in names if n not in self._cols]
        if missing:
            raise SchemaError(f"unknown columns: {missing}")
        return Table(list(names), [self.kinds[n] for n in names],
                     [self._cols[n] for n in names])

    def filter_rows(self, keep: Sequence[bool]) -> "Table":
        if len(keep) != self.n_rows:
            raise SchemaError("row mask length mismatch")
        idx = [i for i, k in enumerate(keep) if k]
        return Table(
            self.names,
            [self.kinds[n] for n in self.names],
            [[col[i] for i in idx] for col in (self._cols[n] for n in self.names)],
        )

    def with_column(self, name: str, kind: VariableKind, values: list) -> "Table":
        """Return a copy with ``name`` added or replaced."""
        if len(values) != self.n_rows:
            raise SchemaError(f"column {name!r} has wrong length")
        names = list(self.names)
        if name not in self._cols:
            names.append(name)
        kinds = {**self.kinds, name: kind}
        cols = {**self._cols, name: values}
        return Table(names, [kinds[n] for n in names], [cols[n] for n in names])

    def missing_count(self) -> int:
        return sum(col.count(None) for col in self._cols.values())


@dataclass
class VariableInfo:
    name: str
    dtype: VariableKind
    label: Optional[str] = None
    n_nonmissing: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "dtype": self.dtype.value,
                "label": self.label, "n_nonmissing": self.n_nonmissing}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "VariableInfo":
        return cls(d["name"], VariableKind(d["dtype"]), d.get("label"),
                   d.get("n_nonmissing", 0))


@dataclass
class PanelStructure:
    entity_var: str
    time_var: str
    n_entities: int
    waves: list = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {"entity_var": self.entity_var, "time_var": self.time_var,
                "n_entities": self.n_entities, "waves": self.waves}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PanelStructure":
        return cls(d["entity_var"], d["time_var"], d["n_entities"],
                   list(d.get("waves", [])))


@dataclass
class DatasetAudit:
    """Structural inventory of one dataset."""

    dataset_id: str
    source_path: str
    n_rows: int
    n_cols: int
    variables: list[VariableInfo] = field(default_factory=list)
    panel_structure: Optional[PanelStructure] = None

    def variable(self, name: str) -> Optional[VariableInfo]:
        for v in self.variables:
            if v.name == name:
                return v
        return None

    def variable_names(self) -> set[str]:
        return {v.name for v in self.variables}

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset_id": self.dataset_id,
            "source_path": self.source_path,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "variables": [v.to_dict() for v in self.variables],
            "panel_structure": (
                self.panel_structure.to_dict() if self.panel_structure else None
            ),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DatasetAudit":
        return cls(
            dataset_id=d["dataset_id"],
            source_path=d["source_path"],
            n_rows=d["n_rows"],
            n_cols=d["n_cols"],
            variables=[VariableInfo.from_dict(v) for v in d.get("variables", [])],
            panel_structure=(
                PanelStructure.from_dict(d["panel_structure"])
                if d.get("panel_structure") else None
            ),
        )


def _parse_cell(text: str, missing_tokens: frozenset[str]) -> Cell:
    if text in missing_tokens:
        return None
    try:
        value = int(text)
    except ValueError:
        try:
            value = float(text)
        except ValueError:
            return text
    return value


def infer_kind(values: list) -> VariableKind:
    """Classify a column from its nonmissing cells.

    Order matters: Binary before Integer before Numeric before Categorical.
    Identifier and TimeIndex are only ever assigned via an explicit panel
    hint, never inferred.
    """
    nonmissing = {v for v in values if v is not None}
    if not nonmissing:
        return VariableKind.NUMERIC
    if all(isinstance(v, (int, float)) and not isinstance(v, bool)
           for v in nonmissing):
        as_floats = {float(v) for v in nonmissing}
        if as_floats <= {0.0, 1.0}:
            return VariableKind.BINARY
        if all(f.is_integer() for f in as_floats):
            return VariableKind.INTEGER
        return VariableKind.NUMERIC
    if len(nonmissing) <= MAX_CATEGORICAL_LEVELS:
        return VariableKind.CATEGORICAL
    return VariableKind.TEXT


def load_csv(path: Union[str, Path], delimiter: str = ",",
             missing_tokens: Iterable[str] = DEFAULT_MISSING_TOKENS) -> Table:
    """Parse an RFC-4180-style CSV with a header row into a typed Table.

    A column is numeric iff every nonmissing cell parses as a number, and
    Binary iff the nonmissing values are a subset of {0, 1}.  Missing tokens
    (default: empty string, "NA", ".") become missing cells.
    """
    path = Path(path)
    tokens = frozenset(missing_tokens)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: empty file") from None
        if any(not name.strip() for name in header):
            raise SchemaError(f"{path}: blank column name in header")
        if len(set(header)) != len(header):
            dupes = sorted({n for n in header if header.count(n) > 1})
            raise SchemaError(f"{path}: duplicate header names: {dupes}")
        width = len(header)
        columns: list[list] = [[] for _ in header]
        for row_no, row in enumerate(reader, start=2):
            if len(row) != width:
                raise CsvParseError(
                    f"{path}: row {row_no} has {len(row)} cells, expected {width}"
                )
            for col, text in zip(columns, row):
                col.append(_parse_cell(text, tokens))
    kinds = [infer_kind(col) for col in columns]
    return Table(header, kinds, columns)


def audit_dataset(table: Table, dataset_id: str,
                  panel_hint: Optional[tuple[str, str]] = None,
                  source_path: str = "",
                  labels: Optional[dict[str, str]] = None) -> DatasetAudit:
    """Build the variable inventory (one VariableInfo per column) and, given
    a panel hint, the entity/wave structure."""
    if table.n_rows == 0 or table.n_cols == 0:
        raise AuditError("cannot audit an empty table")
    labels = labels or {}
    panel_cols: dict[str, VariableKind] = {}
    panel: Optional[PanelStructure] = None
    if panel_hint is not None:
        entity_var, time_var = panel_hint
        absent = [n for n in (entity_var, time_var) if not table.has_column(n)]
        if absent:
            raise AuditError(f"panel hint names absent columns: {absent}")
        entities = {v for v in table.column(entity_var) if v is not None}
        waves = sorted({v for v in table.column(time_var) if v is not None})
        panel = PanelStructure(entity_var, time_var, len(entities), waves)
        panel_cols = {entity_var: VariableKind.IDENTIFIER,
                      time_var: VariableKind.TIME_INDEX}
    variables = []
    for name in table.names:
        col = table.column(name)
        variables.append(VariableInfo(
            name=name,
            dtype=panel_cols.get(name, table.kind(name)),
            label=labels.get(name),
            n_nonmissing=table.n_rows - col.count(None),
        ))
    return DatasetAudit(
        dataset_id=dataset_id,
        source_path=source_path,
        n_rows=table.n_rows,
        n_cols=table.n_cols,
        variables=variables,
        panel_structure=panel,
    )


@dataclass
class DatasetMeta:
    """Optional sidecar metadata: variable labels and the panel hint."""

    dataset_id: Optional[str] = None
    labels: dict[str, str] = field(default_factory=dict)
    panel_hint: Optional[tuple[str, str]] = None

    @classmethod
    def load(cls, path: Union[str, Path]) -> "DatasetMeta":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        hint = d.get("panel_hint")
        return cls(
            dataset_id=d.get("dataset_id"),
            labels=d.get("labels", {}),
            panel_hint=(hint["entity_var"], hint["time_var"]) if hint else None,
        )


def load_dataset(path: Union[str, Path],
                 meta_path: Optional[Union[str, Path]] = None,
                 dataset_id: Optional[str] = None) -> tuple[Table, DatasetAudit]:
    """Load a CSV plus optional sidecar metadata and audit it in one step."""
    path = Path(path)
    meta = DatasetMeta()
    if meta_path is not None:
        meta = DatasetMeta.load(meta_path)
    else:
        default_sidecar = path.with_suffix(".meta.json")
        if default_sidecar.exists():
            meta = DatasetMeta.load(default_sidecar)
    table = load_csv(path)
    audit = audit_dataset(
        table,
        dataset_id=dataset_id or meta.dataset_id or path.stem,
        panel_hint=meta.panel_hint,
        source_path=str(path),
        labels=meta.labels,
    )
    return table, audit
