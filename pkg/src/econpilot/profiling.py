"""Statistical profile of an audited dataset.

Produces the diagnostics that hypothesis generation is conditioned on:
per-variable moments and missingness, pairwise correlations over complete
pairs, advisory endogeneity flags for highly correlated regressor pairs, and
transformation suggestions.  All flags are advisory text, never hard blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import numpy as np

from .dataset import DatasetAudit, Table, VariableKind

# Heuristic thresholds.  None of these is a hard rule; they shape advisory
# output only.
ENDOGENEITY_R_THRESHOLD = 0.5
LOG_TRANSFORM_SKEW_THRESHOLD = 2.0
MIN_CORRELATION_PAIRS = 30
HIGH_MISSINGNESS_RATE = 0.20
STANDARDIZE_SCALE_THRESHOLD = 1e4


class ProfilingError(Exception):
    pass


class TransformKind(str, Enum):
    LOG_TRANSFORM = "LogTransform"
    STANDARDIZE = "Standardize"
    BINARY_RECODE = "BinaryRecode"


@dataclass
class VariableProfile:
    name: str
    missing_rate: float
    n_distinct: int
    mean: Optional[float] = None
    sd: Optional[float] = None
    min: Optional[float] = None
    max: Optional[float] = None
    median: Optional[float] = None
    skewness: Optional[float] = None
    top_categories: list[tuple[Any, int]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "missing_rate": self.missing_rate,
            "n_distinct": self.n_distinct,
            "mean": self.mean,
            "sd": self.sd,
            "min": self.min,
            "max": self.max,
            "median": self.median,
            "skewness": self.skewness,
            "top_categories": [[v, c] for v, c in self.top_categories],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "VariableProfile":
        return cls(
            name=d["name"],
            missing_rate=d["missing_rate"],
            n_distinct=d["n_distinct"],
            mean=d.get("mean"),
            sd=d.get("sd"),
            min=d.get("min"),
            max=d.get("max"),
            median=d.get("median"),
            skewness=d.get("skewness"),
            top_categories=[(v, c) for v, c in d.get("top_categories", [])],
        )


@dataclass
class Correlation:
    var_a: str
    var_b: str
    pearson_r: float
    n_pairs: int

    def to_dict(self) -> dict[str, Any]:
        return {"var_a": self.var_a, "var_b": self.var_b,
                "pearson_r": self.pearson_r, "n_pairs": self.n_pairs}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Correlation":
        return cls(d["var_a"], d["var_b"], d["pearson_r"], d["n_pairs"])


@dataclass
class EndogeneityFlag:
    var_a: str
    var_b: str
    reason: str

    def to_dict(self) -> dict[str, Any]:
        return {"var_a": self.var_a, "var_b": self.var_b, "reason": self.reason}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EndogeneityFlag":
        return cls(d["var_a"], d["var_b"], d["reason"])


@dataclass
class TransformSuggestion:
    var: str
    suggestion: TransformKind
    reason: str

    def to_dict(self) -> dict[str, Any]:
        return {"var": self.var, "suggestion": self.suggestion.value,
                "reason": self.reason}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TransformSuggestion":
        return cls(d["var"], TransformKind(d["suggestion"]), d["reason"])


@dataclass
class DataProfile:
    dataset_id: str
    variable_profiles: list[VariableProfile] = field(default_factory=list)
    correlations: list[Correlation] = field(default_factory=list)
    endogeneity_flags: list[EndogeneityFlag] = field(default_factory=list)
    transform_suggestions: list[TransformSuggestion] = field(default_factory=list)
    # Free-text advisories, e.g. high-missingness callouts.
    notes: list[str] = field(default_factory=list)

    def variable_profile(self, name: str) -> Optional[VariableProfile]:
        for p in self.variable_profiles:
            if p.name == name:
                return p
        return None

    def missing_rate(self, name: str) -> Optional[float]:
        p = self.variable_profile(name)
        return p.missing_rate if p else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset_id": self.dataset_id,
            "variable_profiles": [p.to_dict() for p in self.variable_profiles],
            "correlations": [c.to_dict() for c in self.correlations],
            "endogeneity_flags": [f.to_dict() for f in self.endogeneity_flags],
            "transform_suggestions": [t.to_dict() for t in self.transform_suggestions],
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DataProfile":
        return cls(
            dataset_id=d["dataset_id"],
            variable_profiles=[VariableProfile.from_dict(p)
                               for p in d.get("variable_profiles", [])],
            correlations=[Correlation.from_dict(c)
                          for c in d.get("correlations", [])],
            endogeneity_flags=[EndogeneityFlag.from_dict(f)
                               for f in d.get("endogeneity_flags", [])],
            transform_suggestions=[TransformSuggestion.from_dict(t)
                                   for t in d.get("transform_suggestions", [])],
            notes=list(d.get("notes", [])),
        )


def _numeric_array(values: list) -> np.ndarray:
    """Column as float array with NaN for missing/non-numeric cells."""
    out = np.full(len(values), np.nan)
    for i, v in enumerate(values):
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            out[i] = float(v)
    return out


def _skewness(x: np.ndarray) -> Optional[float]:
    """Adjusted Fisher-Pearson skewness: g1 * sqrt(n(n-1)) / (n-2)."""
    n = x.size
    if n < 3:
        return None
    m = x.mean()
    m2 = ((x - m) ** 2).mean()
    if m2 <= 0:
        return 0.0
    m3 = ((x - m) ** 3).mean()
    g1 = m3 / m2 ** 1.5
    return float(g1 * math.sqrt(n * (n - 1)) / (n - 2))


def _profile_variable(name: str, values: list, kind: VariableKind,
                      n_rows: int) -> VariableProfile:
    nonmissing = [v for v in values if v is not None]
    prof = VariableProfile(
        name=name,
        missing_rate=1.0 - len(nonmissing) / n_rows,
        n_distinct=len(set(nonmissing)),
    )
    if kind in (VariableKind.CATEGORICAL, VariableKind.TEXT):
        counts: dict[Any, int] = {}
        for v in nonmissing:
            counts[v] = counts.get(v, 0) + 1
        prof.top_categories = sorted(
            counts.items(), key=lambda kv: (-kv[1], str(kv[0]))
        )[:10]
        return prof
    if not nonmissing:
        return prof
    x = np.asarray([float(v) for v in nonmissing])
    prof.mean = float(x.mean())
    prof.sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
    prof.min = float(x.min())
    prof.max = float(x.max())
    prof.median = float(np.median(x))
    prof.skewness = _skewness(x)
    return prof


def profile(table: Table, audit: DatasetAudit) -> DataProfile:
    """Compute the full statistical profile of ``table``.

    Moments use nonmissing cells only (sample sd, n-1 denominator).
    Correlations are Pearson over pairwise-complete observations; pairs with
    fewer than MIN_CORRELATION_PAIRS complete observations, or with zero
    variance on either side, are omitted.
    """
    if table.n_rows == 0 or table.n_cols == 0:
        raise ProfilingError("cannot profile an empty table")

    kind_of = {v.name: v.dtype for v in audit.variables}
    result = DataProfile(dataset_id=audit.dataset_id)
    for name in table.names:
        kind = kind_of.get(name, table.kind(name))
        prof = _profile_variable(name, table.column(name), kind, table.n_rows)
        result.variable_profiles.append(prof)
        if prof.missing_rate >= HIGH_MISSINGNESS_RATE:
            result.notes.append(
                f"high missingness: {name} is missing for "
                f"{prof.missing_rate:.0%} of observations"
            )

    numeric_names = [
        n for n in table.names
        if kind_of.get(n, table.kind(n)) in (
            VariableKind.NUMERIC, VariableKind.INTEGER, VariableKind.BINARY,
            VariableKind.IDENTIFIER, VariableKind.TIME_INDEX)
    ]
    arrays = {n: _numeric_array(table.column(n)) for n in numeric_names}
    regressor_like = {
        n for n in numeric_names
        if kind_of.get(n, table.kind(n)) not in (
            VariableKind.IDENTIFIER, VariableKind.TIME_INDEX)
    }

    for i, a in enumerate(numeric_names):
        xa = arrays[a]
        for b in numeric_names[i + 1:]:
            xb = arrays[b]
            both = ~np.isnan(xa) & ~np.isnan(xb)
            n_pairs = int(both.sum())
            if n_pairs < MIN_CORRELATION_PAIRS:
                continue
            va, vb = xa[both], xb[both]
            sa, sb = va.std(), vb.std()
            if sa == 0.0 or sb == 0.0:
                continue
            r = float(np.clip(((va - va.mean()) * (vb - vb.mean())).mean()
                              / (sa * sb), -1.0, 1.0))
            result.correlations.append(Correlation(a, b, r, n_pairs))
            if (abs(r) > ENDOGENEITY_R_THRESHOLD
                    and a in regressor_like and b in regressor_like):
                result.endogeneity_flags.append(EndogeneityFlag(
                    a, b,
                    f"|r|={abs(r):.2f} between candidate regressors; joint "
                    "inclusion risks simultaneity or omitted-variable bias",
                ))

    for prof in result.variable_profiles:
        name = prof.name
        kind = kind_of.get(name, table.kind(name))
        if kind not in (VariableKind.NUMERIC, VariableKind.INTEGER):
            continue
        if (prof.skewness is not None and prof.min is not None
                and prof.skewness > LOG_TRANSFORM_SKEW_THRESHOLD
                and prof.min > 0):
            result.transform_suggestions.append(TransformSuggestion(
                name, TransformKind.LOG_TRANSFORM,
                f"skewness {prof.skewness:.2f} with strictly positive support",
            ))
        elif prof.n_distinct == 2 and kind is VariableKind.INTEGER:
            result.transform_suggestions.append(TransformSuggestion(
                name, TransformKind.BINARY_RECODE,
                "two distinct values but not coded 0/1",
            ))
        elif (prof.sd is not None and prof.sd > 0 and prof.max is not None
              and max(abs(prof.max), abs(prof.min or 0.0))
              >= STANDARDIZE_SCALE_THRESHOLD):
            result.transform_suggestions.append(TransformSuggestion(
                name, TransformKind.STANDARDIZE,
                "very large scale; standardizing aids coefficient readability",
            ))
    return result


def render_profile(prof: DataProfile) -> str:
    """Human-readable table for terminal display."""
    lines = [f"Profile: {prof.dataset_id}", ""]
    header = (f"{'variable':<24} {'miss%':>6} {'distinct':>8} {'mean':>12} "
              f"{'sd':>12} {'min':>12} {'median':>12} {'max':>12} {'skew':>8}")
    lines.append(header)
    lines.append("-" * len(header))

    def fmt(v: Optional[float], width: int = 12) -> str:
        if v is None:
            return " " * (width - 1) + "."
        return f"{v:>{width}.4g}"

    for p in prof.variable_profiles:
        lines.append(
            f"{p.name:<24} {100 * p.missing_rate:>5.1f}% {p.n_distinct:>8} "
            f"{fmt(p.mean)} {fmt(p.sd)} {fmt(p.min)} {fmt(p.median)} "
            f"{fmt(p.max)} {fmt(p.skewness, 8)}"
        )
    if prof.correlations:
        strongest = sorted(prof.correlations,
                           key=lambda c: -abs(c.pearson_r))[:10]
        lines += ["", "Strongest correlations (pairwise complete):"]
        for c in strongest:
            lines.append(f"  {c.var_a} ~ {c.var_b}: r={c.pearson_r:+.3f} "
                         f"(n={c.n_pairs})")
    for f in prof.endogeneity_flags:
        lines.append(f"  endogeneity risk: {f.var_a} ~ {f.var_b} ({f.reason})")
    for t in prof.transform_suggestions:
        lines.append(f"  suggest {t.suggestion.value} on {t.var}: {t.reason}")
    for note in prof.notes:
        lines.append(f"  note: {note}")
    return "\n".join(lines)
