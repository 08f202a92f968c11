"""Linear estimators with robust inference: OLS, within (fixed effects),
difference-in-differences, and event studies.

Least squares is solved by orthogonal decomposition (SVD); the explicitly
formed normal equations exist only in the test oracles.  Every failure is a
structured EstimationError carrying a machine-readable kind plus the
offending variables, so the orchestrator can halt gracefully instead of
crashing mid-run.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
import scipy.linalg
from scipy import stats

from .dataset import Table, VariableKind

RANK_TOLERANCE = 1e-10
PERFECT_FIT_TOLERANCE = 1e-20
DEMEAN_TOLERANCE = 1e-12
WITHIN_VARIATION_TOLERANCE = 1e-12


class SeType(str, Enum):
    CLASSICAL = "Classical"
    HC1 = "HC1"
    CLUSTER_ROBUST = "ClusterRobust"


class EstimationErrorKind(str, Enum):
    RANK_DEFICIENT = "RankDeficient"
    INSUFFICIENT_OBSERVATIONS = "InsufficientObservations"
    NO_WITHIN_VARIATION = "NoWithinVariation"
    EMPTY_CELL = "EmptyCell"
    SINGLE_CLUSTER = "SingleCluster"


class SpecificationError(Exception):
    """The specification itself is malformed (not a data failure)."""


class EstimationError(Exception):
    """Estimation failed on this data; carries a kind and the offenders."""

    def __init__(self, kind: EstimationErrorKind,
                 offending: Sequence[str] = (), message: str = "") -> None:
        self.kind = kind
        self.offending = list(offending)
        detail = message or f"{kind.value}: {', '.join(self.offending)}"
        super().__init__(detail)


class InferenceError(EstimationError):
    """Variance estimation failed; point estimates may still be usable."""


@dataclass
class DidFields:
    treat_var: str
    post_var: str

    def to_dict(self) -> dict[str, Any]:
        return {"treat_var": self.treat_var, "post_var": self.post_var}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DidFields":
        return cls(d["treat_var"], d["post_var"])


@dataclass
class EventFields:
    event_time_var: str
    leads: int
    lags: int
    omitted_period: int = -1

    def to_dict(self) -> dict[str, Any]:
        return {"event_time_var": self.event_time_var, "leads": self.leads,
                "lags": self.lags, "omitted_period": self.omitted_period}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EventFields":
        return cls(d["event_time_var"], d["leads"], d["lags"],
                   d.get("omitted_period", -1))


@dataclass
class Specification:
    design: str
    outcome: str
    regressors: list[str] = field(default_factory=list)
    fixed_effects: list[str] = field(default_factory=list)  # subset of Entity, Time
    cluster_var: Optional[str] = None
    did_fields: Optional[DidFields] = None
    event_fields: Optional[EventFields] = None
    se_type: SeType = SeType.HC1
    entity_var: Optional[str] = None
    time_var: Optional[str] = None
    label: str = ""

    def validate(self) -> None:
        if self.design not in ("OLS", "FixedEffects", "DiD", "EventStudy"):
            raise SpecificationError(f"unknown design {self.design!r}")
        bad_fe = [f for f in self.fixed_effects if f not in ("Entity", "Time")]
        if bad_fe:
            raise SpecificationError(f"unknown fixed effects {bad_fe}")
        if self.design == "DiD" and self.did_fields is None:
            raise SpecificationError("DiD requires did_fields")
        if self.design == "EventStudy":
            if self.event_fields is None:
                raise SpecificationError("EventStudy requires event_fields")
            if not {"Entity", "Time"} <= set(self.fixed_effects):
                raise SpecificationError(
                    "EventStudy requires Entity and Time fixed effects")
            ev = self.event_fields
            if ev.leads < 1 or ev.lags < 1:
                raise SpecificationError("event window needs leads >= 1 and "
                                         "lags >= 1")
            if not (-ev.leads <= ev.omitted_period <= ev.lags):
                raise SpecificationError(
                    f"omitted period {ev.omitted_period} lies outside the "
                    f"window [{-ev.leads}, {ev.lags}]")
        if self.se_type is SeType.CLUSTER_ROBUST and self.cluster_var is None:
            raise SpecificationError("ClusterRobust requires cluster_var")

    def to_dict(self) -> dict[str, Any]:
        return {
            "design": self.design,
            "outcome": self.outcome,
            "regressors": self.regressors,
            "fixed_effects": self.fixed_effects,
            "cluster_var": self.cluster_var,
            "did_fields": self.did_fields.to_dict() if self.did_fields else None,
            "event_fields": (self.event_fields.to_dict()
                             if self.event_fields else None),
            "se_type": self.se_type.value,
            "entity_var": self.entity_var,
            "time_var": self.time_var,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Specification":
        return cls(
            design=d["design"],
            outcome=d["outcome"],
            regressors=list(d.get("regressors", [])),
            fixed_effects=list(d.get("fixed_effects", [])),
            cluster_var=d.get("cluster_var"),
            did_fields=(DidFields.from_dict(d["did_fields"])
                        if d.get("did_fields") else None),
            event_fields=(EventFields.from_dict(d["event_fields"])
                          if d.get("event_fields") else None),
            se_type=SeType(d.get("se_type", "HC1")),
            entity_var=d.get("entity_var"),
            time_var=d.get("time_var"),
            label=d.get("label", ""),
        )


@dataclass
class Coefficient:
    name: str
    estimate: float
    std_error: float
    t_stat: Optional[float]
    p_value: float
    ci_low: float
    ci_high: float

    def stars(self) -> str:
        if self.p_value < 0.001:
            return "***"
        if self.p_value < 0.01:
            return "**"
        if self.p_value < 0.05:
            return "*"
        return ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "t_stat": self.t_stat,
            "p_value": self.p_value,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Coefficient":
        return cls(d["name"], d["estimate"], d["std_error"], d.get("t_stat"),
                   d["p_value"], d["ci_low"], d["ci_high"])


@dataclass
class AnalysisResult:
    spec: Specification
    coefficients: list[Coefficient]
    n_obs: int
    n_entities: Optional[int]
    r_squared: float
    notes: list[str] = field(default_factory=list)

    def coefficient(self, name: str) -> Optional[Coefficient]:
        for c in self.coefficients:
            if c.name == name:
                return c
        return None

    def is_perfect_fit(self) -> bool:
        return any("perfect fit" in n for n in self.notes)

    def validate(self) -> None:
        for c in self.coefficients:
            if not 0.0 <= c.p_value <= 1.0:
                raise ValueError(f"{c.name}: p-value {c.p_value} out of range")
            if c.std_error > 0.0:
                if c.t_stat is None:
                    raise ValueError(f"{c.name}: missing t statistic")
                if abs(c.t_stat - c.estimate / c.std_error) > 1e-6 * max(
                        1.0, abs(c.t_stat)):
                    raise ValueError(f"{c.name}: t != estimate/se")
                if not c.ci_low <= c.estimate <= c.ci_high:
                    raise ValueError(f"{c.name}: CI does not bracket estimate")
            elif not self.is_perfect_fit():
                raise ValueError(f"{c.name}: zero std error without a "
                                 "perfect-fit flag")

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "coefficients": [c.to_dict() for c in self.coefficients],
            "n_obs": self.n_obs,
            "n_entities": self.n_entities,
            "r_squared": self.r_squared,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AnalysisResult":
        return cls(
            spec=Specification.from_dict(d["spec"]),
            coefficients=[Coefficient.from_dict(c) for c in d["coefficients"]],
            n_obs=d["n_obs"],
            n_entities=d.get("n_entities"),
            r_squared=d["r_squared"],
            notes=list(d.get("notes", [])),
        )


def _find_kind(table: Table, kind: VariableKind) -> Optional[str]:
    for name in table.names:
        if table.kind(name) is kind:
            return name
    return None


def _panel_ids(table: Table, spec: Specification) -> tuple[str, str]:
    entity = spec.entity_var or _find_kind(table, VariableKind.IDENTIFIER)
    time = spec.time_var or _find_kind(table, VariableKind.TIME_INDEX)
    if entity is None or not table.has_column(entity):
        raise SpecificationError("panel entity identifier not found")
    if time is None or not table.has_column(time):
        raise SpecificationError("panel time identifier not found")
    return entity, time


def _require_columns(table: Table, names: Sequence[str]) -> None:
    missing = [n for n in names if not table.has_column(n)]
    if missing:
        raise SpecificationError(f"specification references unknown "
                                 f"variables: {missing}")


def _complete_case_index(table: Table, names: Sequence[str]) -> list[int]:
    cols = [table.column(n) for n in names]
    return [i for i in range(table.n_rows)
            if all(c[i] is not None for c in cols)]


def _numeric_values(table: Table, name: str, idx: Sequence[int]) -> np.ndarray:
    col = table.column(name)
    values = [col[i] for i in idx]
    if any(isinstance(v, str) for v in values):
        raise SpecificationError(f"variable {name!r} is not numeric")
    return np.asarray(values, dtype=float)


def _expand_regressor(table: Table, name: str,
                      idx: Sequence[int]) -> list[tuple[str, np.ndarray]]:
    """Numeric columns pass through; categoricals expand to dummies with the
    first (sorted) level omitted."""
    kind = table.kind(name)
    if kind in (VariableKind.CATEGORICAL, VariableKind.TEXT):
        if kind is VariableKind.TEXT:
            raise SpecificationError(
                f"free-text variable {name!r} cannot enter a regression")
        col = table.column(name)
        levels = sorted({str(col[i]) for i in idx})
        if len(levels) < 2:
            raise EstimationError(
                EstimationErrorKind.RANK_DEFICIENT, [name],
                f"categorical {name!r} has a single level")
        out = []
        for level in levels[1:]:
            vec = np.asarray([1.0 if str(col[i]) == level else 0.0
                              for i in idx])
            out.append((f"{name}[{level}]", vec))
        return out
    return [(name, _numeric_values(table, name, idx))]


def _check_rank(X: np.ndarray, names: Sequence[str]) -> None:
    if X.shape[0] == 0:
        raise EstimationError(EstimationErrorKind.INSUFFICIENT_OBSERVATIONS,
                              message="no observations")
    singular = np.linalg.svd(X, compute_uv=False)
    if singular[0] == 0.0 or singular[-1] < RANK_TOLERANCE * singular[0]:
        _, r_mat, pivots = scipy.linalg.qr(X, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r_mat))
        ref = diag[0] if diag.size and diag[0] > 0 else 1.0
        rank = int(np.sum(diag > RANK_TOLERANCE * ref))
        offending = sorted(names[p] for p in pivots[rank:])
        raise EstimationError(
            EstimationErrorKind.RANK_DEFICIENT, offending,
            f"design matrix is rank deficient; offending columns: {offending}")


def cluster_robust_se(X: np.ndarray, residuals: np.ndarray,
                      clusters: Sequence) -> tuple[np.ndarray, int]:
    """CR1 cluster-robust standard errors.

    Sandwich (XᵀX)⁻¹ (Σ_g Xgᵀûg ûgᵀXg) (XᵀX)⁻¹ scaled by
    G/(G−1)·(n−1)/(n−k).  With every observation its own cluster this
    reduces exactly to HC1.
    """
    n, k = X.shape
    labels = list(clusters)
    if len(labels) != n:
        raise SpecificationError("cluster assignment length mismatch")
    groups: dict[Any, list[int]] = {}
    for i, g in enumerate(labels):
        groups.setdefault(g, []).append(i)
    n_clusters = len(groups)
    if n_clusters < 2:
        raise InferenceError(EstimationErrorKind.SINGLE_CLUSTER,
                             message="cluster-robust inference needs at "
                                     "least 2 clusters")
    xtx_inv = np.linalg.inv(X.T @ X)
    meat = np.zeros((k, k))
    for rows in groups.values():
        xg = X[rows]
        score = xg.T @ residuals[rows]
        meat += np.outer(score, score)
    scale = (n_clusters / (n_clusters - 1)) * ((n - 1) / (n - k))
    cov = scale * xtx_inv @ meat @ xtx_inv
    return np.sqrt(np.maximum(np.diag(cov), 0.0)), n_clusters


def _ols_core(y: np.ndarray, X: np.ndarray, names: list[str],
              spec: Specification, clusters: Optional[Sequence],
              k_model: Optional[int] = None,
              n_entities: Optional[int] = None,
              extra_notes: Sequence[str] = (),
              r_squared_label: str = "") -> AnalysisResult:
    """Shared estimation core: solve, check, infer, package.

    ``k_model`` is the model's total parameter count for degrees of freedom,
    which exceeds X's width when fixed effects were absorbed by demeaning.
    """
    n, k_cols = X.shape
    k_model = k_cols if k_model is None else k_model
    if n <= k_model:
        raise EstimationError(
            EstimationErrorKind.INSUFFICIENT_OBSERVATIONS,
            message=f"{n} observations cannot identify {k_model} parameters")
    _check_rank(X, names)
    beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    sse = float(resid @ resid)
    df = n - k_model
    notes = list(extra_notes)

    sst = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - sse / sst if sst > 0 else 0.0
    if r_squared_label:
        notes.append(r_squared_label)

    perfect = sse <= PERFECT_FIT_TOLERANCE * max(1.0, float(y @ y))
    if perfect:
        notes.append("perfect fit: residual variance is zero, "
                     "standard errors are degenerate")
        coefs = [Coefficient(nm, float(b), 0.0, None,
                             0.0 if b != 0.0 else 1.0, float(b), float(b))
                 for nm, b in zip(names, beta)]
        return AnalysisResult(spec=spec, coefficients=coefs, n_obs=n,
                              n_entities=n_entities, r_squared=r_squared,
                              notes=notes)

    se_type = spec.se_type
    inference_df = df
    if se_type is SeType.CLUSTER_ROBUST:
        assert clusters is not None
        try:
            ses, n_clusters = cluster_robust_se(X, resid, clusters)
            notes.append(f"cluster-robust (CR1) by {spec.cluster_var}, "
                         f"G={n_clusters} clusters")
            inference_df = n_clusters - 1
        except InferenceError:
            notes.append("warning: single cluster, cluster-robust inference "
                         "unavailable; classical standard errors reported")
            se_type = SeType.CLASSICAL
    if se_type is SeType.CLASSICAL:
        sigma2 = sse / df
        cov = sigma2 * np.linalg.inv(X.T @ X)
        ses = np.sqrt(np.maximum(np.diag(cov), 0.0))
    elif se_type is SeType.HC1:
        xtx_inv = np.linalg.inv(X.T @ X)
        meat = (X * (resid ** 2)[:, None]).T @ X
        cov = (n / df) * xtx_inv @ meat @ xtx_inv
        ses = np.sqrt(np.maximum(np.diag(cov), 0.0))

    t_crit = float(stats.t.ppf(0.975, inference_df))
    coefs = []
    for nm, b, se in zip(names, beta, ses):
        b = float(b)
        se = float(se)
        if se > 0.0:
            t_stat = b / se
            p_value = float(2.0 * stats.t.sf(abs(t_stat), inference_df))
            ci_low, ci_high = b - t_crit * se, b + t_crit * se
        else:
            t_stat, p_value, ci_low, ci_high = None, 1.0, b, b
            notes.append(f"warning: degenerate standard error for {nm}")
        coefs.append(Coefficient(nm, b, se, t_stat, p_value, ci_low, ci_high))
    return AnalysisResult(spec=spec, coefficients=coefs, n_obs=n,
                          n_entities=n_entities, r_squared=r_squared,
                          notes=notes)


def _cluster_labels(table: Table, spec: Specification,
                    idx: Sequence[int]) -> Optional[list]:
    if spec.se_type is not SeType.CLUSTER_ROBUST:
        return None
    if spec.cluster_var is None or not table.has_column(spec.cluster_var):
        raise SpecificationError("cluster variable not found")
    col = table.column(spec.cluster_var)
    return [col[i] for i in idx]


def estimate_ols(table: Table, spec: Specification) -> AnalysisResult:
    """Cross-sectional OLS with an intercept."""
    spec.validate()
    if spec.design != "OLS":
        raise SpecificationError(f"estimate_ols got design {spec.design!r}")
    used = [spec.outcome, *spec.regressors]
    if spec.cluster_var:
        used.append(spec.cluster_var)
    _require_columns(table, used)
    idx = _complete_case_index(table, [spec.outcome, *spec.regressors])
    dropped = table.n_rows - len(idx)
    y = _numeric_values(table, spec.outcome, idx)
    names = ["const"]
    cols = [np.ones(len(idx))]
    for reg in spec.regressors:
        for nm, vec in _expand_regressor(table, reg, idx):
            names.append(nm)
            cols.append(vec)
    X = np.column_stack(cols) if cols else np.empty((len(idx), 0))
    notes = []
    if dropped:
        notes.append(f"dropped {dropped} incomplete rows")
    return _ols_core(y, X, names, spec, _cluster_labels(table, spec, idx),
                     extra_notes=notes)


def _entity_codes(values: Sequence) -> tuple[np.ndarray, int]:
    codes: dict[Any, int] = {}
    out = np.empty(len(values), dtype=int)
    for i, v in enumerate(values):
        out[i] = codes.setdefault(v, len(codes))
    return out, len(codes)


def _group_demean(M: np.ndarray, codes: np.ndarray, n_groups: int) -> np.ndarray:
    counts = np.bincount(codes, minlength=n_groups).astype(float)
    means = np.zeros((n_groups, M.shape[1]))
    np.add.at(means, codes, M)
    means /= counts[:, None]
    return M - means[codes]


def _within_transform(M: np.ndarray, ent: np.ndarray, n_ent: int,
                      tim: Optional[np.ndarray], n_tim: int) -> np.ndarray:
    """Project out entity (and optionally time) group means.

    The two-way case uses alternating projections, which converges to the
    exact least-squares projection on unbalanced panels where one-shot
    two-way demeaning does not.  Grand means are added back afterwards.
    """
    grand = M.mean(axis=0)
    R = _group_demean(M, ent, n_ent)
    if tim is not None:
        scale = max(1.0, float(np.max(np.abs(M))))
        for _ in range(500):
            R_next = _group_demean(R, tim, n_tim)
            R_next = _group_demean(R_next, ent, n_ent)
            delta = float(np.max(np.abs(R_next - R)))
            R = R_next
            if delta < DEMEAN_TOLERANCE * scale:
                break
    return R + grand


def _fe_core(table: Table, spec: Specification, dummy_cols: list[tuple[str, np.ndarray]],
             idx: list[int]) -> AnalysisResult:
    """Within-estimator machinery shared by FixedEffects and EventStudy."""
    entity_name, time_name = _panel_ids(table, spec)
    ent_vals = [table.column(entity_name)[i] for i in idx]
    ent, n_ent = _entity_codes(ent_vals)
    use_time = "Time" in spec.fixed_effects
    tim, n_tim = (None, 0)
    if use_time:
        tim_vals = [table.column(time_name)[i] for i in idx]
        tim, n_tim = _entity_codes(tim_vals)

    group_sizes = np.bincount(ent, minlength=n_ent)
    if int(group_sizes.max(initial=0)) <= 1:
        raise EstimationError(
            EstimationErrorKind.RANK_DEFICIENT, [entity_name],
            "every entity appears once; within variation is empty")

    y = _numeric_values(table, spec.outcome, idx)
    names: list[str] = []
    cols: list[np.ndarray] = []
    for nm, vec in dummy_cols:
        names.append(nm)
        cols.append(vec)
    for reg in spec.regressors:
        for nm, vec in _expand_regressor(table, reg, idx):
            names.append(nm)
            cols.append(vec)
    if not cols:
        raise SpecificationError("fixed-effects design has no regressors")

    M = np.column_stack([y, *cols])
    demeaned_entity = _group_demean(M, ent, n_ent)
    for j, nm in enumerate(names, start=1):
        scale = max(1.0, float(np.max(np.abs(M[:, j]))))
        if float(np.max(np.abs(demeaned_entity[:, j]))) < (
                WITHIN_VARIATION_TOLERANCE * scale):
            raise EstimationError(
                EstimationErrorKind.NO_WITHIN_VARIATION, [nm],
                f"{nm!r} has no within-entity variation")

    W = _within_transform(M, ent, n_ent, tim, n_tim)
    y_w = W[:, 0]
    X = np.column_stack([np.ones(len(idx)), W[:, 1:]])
    k_model = 1 + len(names) + (n_ent - 1) + ((n_tim - 1) if use_time else 0)

    clusters = _cluster_labels(table, spec, idx)
    fe_label = "entity" + (" and time" if use_time else "") + " fixed effects"
    result = _ols_core(
        y_w, X, ["const", *names], spec, clusters, k_model=k_model,
        n_entities=n_ent,
        extra_notes=[f"{fe_label} absorbed by demeaning"],
        r_squared_label="r_squared is within-R^2 on demeaned data")
    return result


def estimate_fe(table: Table, spec: Specification) -> AnalysisResult:
    """Within (fixed-effects) estimator; slopes match dummy-variable OLS."""
    if spec.design != "FixedEffects":
        raise SpecificationError(f"estimate_fe got design {spec.design!r}")
    if "Entity" not in spec.fixed_effects:
        spec.fixed_effects = ["Entity", *spec.fixed_effects]
    entity_name, time_name = _panel_ids(table, spec)
    if spec.se_type is SeType.CLUSTER_ROBUST and spec.cluster_var is None:
        spec.cluster_var = entity_name
    spec.validate()
    used = [spec.outcome, *spec.regressors, entity_name]
    if "Time" in spec.fixed_effects:
        used.append(time_name)
    if spec.cluster_var:
        used.append(spec.cluster_var)
    _require_columns(table, used)
    idx = _complete_case_index(table, used)
    return _fe_core(table, spec, [], idx)


def _binary_check(table: Table, name: str, idx: Sequence[int]) -> np.ndarray:
    vec = _numeric_values(table, name, idx)
    if not set(np.unique(vec)) <= {0.0, 1.0}:
        raise SpecificationError(f"{name!r} must be binary 0/1")
    return vec


def estimate_did(table: Table, spec: Specification) -> AnalysisResult:
    """2x2 difference-in-differences: the interaction is labeled "DiD"."""
    spec.validate()
    if spec.design != "DiD":
        raise SpecificationError(f"estimate_did got design {spec.design!r}")
    did = spec.did_fields
    used = [spec.outcome, did.treat_var, did.post_var, *spec.regressors]
    if spec.cluster_var:
        used.append(spec.cluster_var)
    _require_columns(table, used)
    idx = _complete_case_index(
        table, [spec.outcome, did.treat_var, did.post_var, *spec.regressors])
    treat = _binary_check(table, did.treat_var, idx)
    post = _binary_check(table, did.post_var, idx)
    for t_val in (0.0, 1.0):
        for p_val in (0.0, 1.0):
            if not np.any((treat == t_val) & (post == p_val)):
                cell = f"treat={int(t_val)},post={int(p_val)}"
                raise EstimationError(
                    EstimationErrorKind.EMPTY_CELL, [cell],
                    f"no observations in cell {cell}")
    y = _numeric_values(table, spec.outcome, idx)
    names = ["const", did.treat_var, did.post_var, "DiD"]
    cols = [np.ones(len(idx)), treat, post, treat * post]
    for reg in spec.regressors:
        for nm, vec in _expand_regressor(table, reg, idx):
            names.append(nm)
            cols.append(vec)
    X = np.column_stack(cols)
    return _ols_core(y, X, names, spec, _cluster_labels(table, spec, idx))


def event_time_name(period: int) -> str:
    return f"event_time[{period}]"


def parse_event_time_name(name: str) -> Optional[int]:
    if name.startswith("event_time[") and name.endswith("]"):
        try:
            return int(name[len("event_time["):-1])
        except ValueError:
            return None
    return None


def estimate_event_study(table: Table, spec: Specification) -> AnalysisResult:
    """Event-study dummies on [-leads, +lags] with endpoint binning.

    Periods beyond the window are absorbed into the endpoint bins; the
    omitted period (default -1) is the reference.  Rows with a missing event
    time are never-treated controls and get zeros in every dummy.
    """
    if spec.design != "EventStudy":
        raise SpecificationError(
            f"estimate_event_study got design {spec.design!r}")
    entity_name, time_name = _panel_ids(table, spec)
    if spec.se_type is SeType.CLUSTER_ROBUST and spec.cluster_var is None:
        spec.cluster_var = entity_name
    spec.validate()
    ev = spec.event_fields
    used = [spec.outcome, *spec.regressors, entity_name, time_name]
    if spec.cluster_var:
        used.append(spec.cluster_var)
    _require_columns(table, used + [ev.event_time_var])
    idx = _complete_case_index(table, used)  # event time may be missing
    event_col = table.column(ev.event_time_var)
    periods = [p for p in range(-ev.leads, ev.lags + 1)
               if p != ev.omitted_period]
    dummies: list[tuple[str, np.ndarray]] = []
    binned = []
    for i in idx:
        v = event_col[i]
        if v is None:
            binned.append(None)
        else:
            binned.append(int(min(max(round(v), -ev.leads), ev.lags)))
    for p in periods:
        vec = np.asarray([1.0 if b == p else 0.0 for b in binned])
        dummies.append((event_time_name(p), vec))
    return _fe_core(table, spec, dummies, idx)


ESTIMATORS = {
    "OLS": estimate_ols,
    "FixedEffects": estimate_fe,
    "DiD": estimate_did,
    "EventStudy": estimate_event_study,
}


def estimate(table: Table, spec: Specification) -> AnalysisResult:
    """Dispatch to the estimator matching ``spec.design``."""
    if spec.design not in ESTIMATORS:
        raise SpecificationError(f"unknown design {spec.design!r}")
    return ESTIMATORS[spec.design](table, spec)


def format_real(x: Optional[float]) -> str:
    """17 significant digits: round-trips any double exactly."""
    if x is None:
        return ""
    return f"{x:.17g}"


def emit_outputs(results: Sequence[AnalysisResult],
                 out_dir: Union[str, Path]) -> list[Path]:
    """Write per-result coefficient tables (and event-study figure data).

    ``table_{k}.csv`` holds the full coefficient block with significance
    stars at 0.05/0.01/0.001; event studies add ``figure_{k}.csv`` with
    (event_time, estimate, ci_low, ci_high) sorted by event time.
    """
    if not results:
        raise ValueError("emit_outputs requires at least one result")
    out = Path(out_dir)
    written: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for k, result in enumerate(results, start=1):
            table_path = out / f"table_{k}.csv"
            with open(table_path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["term", "estimate", "se", "t", "p",
                                 "ci_low", "ci_high", "stars"])
                for c in result.coefficients:
                    writer.writerow([
                        c.name, format_real(c.estimate),
                        format_real(c.std_error), format_real(c.t_stat),
                        format_real(c.p_value), format_real(c.ci_low),
                        format_real(c.ci_high), c.stars(),
                    ])
            written.append(table_path)
            if result.spec.design == "EventStudy":
                points = []
                for c in result.coefficients:
                    period = parse_event_time_name(c.name)
                    if period is not None:
                        points.append((period, c.estimate, c.ci_low, c.ci_high))
                points.sort(key=lambda p: p[0])
                figure_path = out / f"figure_{k}.csv"
                with open(figure_path, "w", newline="",
                          encoding="utf-8") as fh:
                    writer = csv.writer(fh)
                    writer.writerow(["event_time", "estimate",
                                     "ci_low", "ci_high"])
                    for period, est, lo, hi in points:
                        writer.writerow([period, format_real(est),
                                         format_real(lo), format_real(hi)])
                written.append(figure_path)
    except OSError as exc:
        from .persistence import PersistenceError
        raise PersistenceError(f"failed to write analysis outputs: {exc}")
    return written
