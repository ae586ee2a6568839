"""Indicator hierarchy and weighted aggregation for the child growth index.

The index is a three-stage weighted aggregation of binary deprivation
indicators (1 = deprived): indicators roll up into six constructs, constructs
into four broad dimensions, broad dimensions into three overarching
dimensions, and those into a single overall scalar. Weights are normalized
to sum to 1 within each group, so every score lives in [0, 1].
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping

NORMALIZATION_TOL = 1e-9


class Level(str, Enum):
    """Aggregation level a weight set belongs to."""

    INDICATOR = "indicator"
    CONSTRUCT = "construct"
    BROAD = "broad"
    OVERARCHING = "overarching"


class IncompleteObservationError(ValueError):
    """An observation is missing values for configured indicators."""


class LevelMismatchError(ValueError):
    """A weight set was used at a different level than it was built for."""


class DegenerateGroupError(ValueError):
    """All raw weights in a group are zero, so they cannot be normalized."""


@dataclass(frozen=True)
class IndicatorDef:
    """One binary deprivation indicator and the cutoff that defines it."""

    id: str
    label: str
    capability_id: str
    deprivation_description: str = ""


@dataclass(frozen=True)
class Capability:
    id: str
    label: str


@dataclass(frozen=True)
class Group:
    """A named group of lower-level element ids (one construct, broad, or
    overarching dimension)."""

    id: str
    label: str
    members: tuple[str, ...]


@dataclass(frozen=True)
class HierarchyConfig:
    """Declarative definition of the full indicator hierarchy.

    ``constructs`` group indicator ids, ``broad_dimensions`` group construct
    ids, ``overarching`` group broad-dimension ids, and ``overall_weights``
    hold one raw (unnormalized) weight per overarching dimension for the
    final scalar.
    """

    indicators: tuple[IndicatorDef, ...]
    capabilities: tuple[Capability, ...]
    constructs: tuple[Group, ...]
    broad_dimensions: tuple[Group, ...]
    overarching: tuple[Group, ...]
    overall_weights: Mapping[str, float]
    version: str = "unversioned"

    def indicator_ids(self) -> tuple[str, ...]:
        return tuple(ind.id for ind in self.indicators)

    def groups_at(self, level: Level) -> tuple[Group, ...]:
        """Groups whose members are elements of ``level``.

        The overarching level has a single implicit group combining the
        overarching dimensions into the overall scalar.
        """
        if level == Level.INDICATOR:
            return self.constructs
        if level == Level.CONSTRUCT:
            return self.broad_dimensions
        if level == Level.BROAD:
            return self.overarching
        return (Group("overall", "Overall", tuple(g.id for g in self.overarching)),)

    @classmethod
    def from_dict(cls, raw: Mapping) -> "HierarchyConfig":
        return cls(
            indicators=tuple(
                IndicatorDef(
                    id=d["id"],
                    label=d.get("label", d["id"]),
                    capability_id=d["capability_id"],
                    deprivation_description=d.get("deprivation_description", ""),
                )
                for d in raw["indicators"]
            ),
            capabilities=tuple(
                Capability(id=c["id"], label=c.get("label", c["id"]))
                for c in raw["capabilities"]
            ),
            constructs=_groups_from(raw["constructs"]),
            broad_dimensions=_groups_from(raw["broad_dimensions"]),
            overarching=_groups_from(raw["overarching"]),
            overall_weights=dict(raw["overall_weights"]),
            version=raw.get("version", "unversioned"),
        )

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "capabilities": [{"id": c.id, "label": c.label} for c in self.capabilities],
            "indicators": [
                {
                    "id": d.id,
                    "label": d.label,
                    "capability_id": d.capability_id,
                    "deprivation_description": d.deprivation_description,
                }
                for d in self.indicators
            ],
            "constructs": _groups_to(self.constructs),
            "broad_dimensions": _groups_to(self.broad_dimensions),
            "overarching": _groups_to(self.overarching),
            "overall_weights": dict(self.overall_weights),
        }


def _groups_from(raw: Iterable[Mapping]) -> tuple[Group, ...]:
    return tuple(
        Group(id=g["id"], label=g.get("label", g["id"]), members=tuple(g["members"]))
        for g in raw
    )


def _groups_to(groups: Iterable[Group]) -> list[dict]:
    return [{"id": g.id, "label": g.label, "members": list(g.members)} for g in groups]


def load_config(path) -> HierarchyConfig:
    with open(path, encoding="utf-8") as fh:
        return HierarchyConfig.from_dict(json.load(fh))


def default_config() -> HierarchyConfig:
    """The shipped 29-indicator configuration."""
    text = resources.files("micg.data").joinpath("default_hierarchy.json").read_text("utf-8")
    return HierarchyConfig.from_dict(json.loads(text))


def validate_hierarchy(config: HierarchyConfig) -> list[str]:
    """Check every structural invariant; returns a list of violations.

    An empty list means the configuration is valid. Violations are data,
    not exceptions: callers decide whether to abort.
    """
    violations: list[str] = []

    ind_ids = [d.id for d in config.indicators]
    if len(set(ind_ids)) != len(ind_ids):
        dupes = sorted({i for i in ind_ids if ind_ids.count(i) > 1})
        violations.append(f"duplicate indicator ids: {dupes}")

    cap_ids = {c.id for c in config.capabilities}
    for d in config.indicators:
        if d.capability_id not in cap_ids:
            violations.append(
                f"indicator {d.id!r} references unknown capability {d.capability_id!r}"
            )

    violations += _check_partition(
        "construct", config.constructs, set(ind_ids), "indicator"
    )
    violations += _check_partition(
        "broad dimension",
        config.broad_dimensions,
        {g.id for g in config.constructs},
        "construct",
    )
    violations += _check_partition(
        "overarching dimension",
        config.overarching,
        {g.id for g in config.broad_dimensions},
        "broad dimension",
    )

    over_ids = {g.id for g in config.overarching}
    if set(config.overall_weights) != over_ids:
        violations.append(
            "overall_weights keys do not match overarching dimension ids"
        )
    for key, w in config.overall_weights.items():
        if w < 0:
            violations.append(f"overall weight for {key!r} is negative")
    if config.overall_weights and sum(config.overall_weights.values()) <= 0:
        violations.append("overall weights sum to zero")

    return violations


def _check_partition(
    kind: str, groups: tuple[Group, ...], universe: set[str], member_kind: str
) -> list[str]:
    violations: list[str] = []
    group_ids = [g.id for g in groups]
    if len(set(group_ids)) != len(group_ids):
        violations.append(f"duplicate {kind} ids")
    seen: dict[str, str] = {}
    for g in groups:
        if not g.members:
            violations.append(f"empty group: {kind} {g.id!r}")
        for m in g.members:
            if m not in universe:
                violations.append(
                    f"{kind} {g.id!r} references unknown {member_kind} {m!r}"
                )
            elif m in seen:
                violations.append(
                    f"{member_kind} {m!r} in multiple groups: {seen[m]!r} and {g.id!r}"
                )
            else:
                seen[m] = g.id
    unassigned = universe - set(seen)
    for m in sorted(unassigned):
        violations.append(f"{member_kind} {m!r} belongs to no {kind}")
    return violations


@dataclass(frozen=True)
class WeightSet:
    """Normalized weights for the elements of one aggregation level.

    Within each group of the owning level the weights sum to 1 (checked to
    1e-9 by :func:`validate_weight_set`); all weights are non-negative.
    """

    level: Level
    weights: Mapping[str, float]

    def __getitem__(self, element_id: str) -> float:
        return self.weights[element_id]


def validate_weight_set(w: WeightSet, config: HierarchyConfig) -> None:
    """Raise ValueError unless ``w`` satisfies the per-group normalization
    and non-negativity invariants for its level under ``config``."""
    for key, value in w.weights.items():
        if value < 0:
            raise ValueError(f"negative weight for {key!r}: {value}")
    for group in config.groups_at(w.level):
        missing = [m for m in group.members if m not in w.weights]
        if missing:
            raise ValueError(
                f"weight set at level {w.level.value!r} missing entries for {missing}"
            )
        total = sum(w.weights[m] for m in group.members)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(
                f"weights in group {group.id!r} sum to {total!r}, expected 1"
            )


def normalize_weights(
    raw: Mapping[str, float],
    grouping: Iterable[Group],
    level: Level,
    on_degenerate: str = "error",
) -> WeightSet:
    """Normalize raw non-negative weights to sum to 1 within each group.

    ``on_degenerate`` controls what happens when every raw weight in a group
    is zero: ``"error"`` raises :class:`DegenerateGroupError`, ``"equal"``
    falls back to equal weights within the group and emits a warning.

    Groups whose raw weights already sum to 1 within the normalization
    tolerance pass through unchanged, which makes normalization exactly
    idempotent despite float division drift.
    """
    if on_degenerate not in ("error", "equal"):
        raise ValueError(f"unknown on_degenerate policy {on_degenerate!r}")
    normalized: dict[str, float] = {}
    for group in grouping:
        missing = [m for m in group.members if m not in raw]
        if missing:
            raise ValueError(f"raw weights missing entries for {missing}")
        for m in group.members:
            if raw[m] < 0:
                raise ValueError(f"negative raw weight for {m!r}: {raw[m]}")
        total = sum(raw[m] for m in group.members)
        if total <= 0:
            if on_degenerate == "error":
                raise DegenerateGroupError(
                    f"all raw weights in group {group.id!r} are zero"
                )
            warnings.warn(
                f"all raw weights in group {group.id!r} are zero; "
                "falling back to equal weights",
                stacklevel=2,
            )
            share = 1.0 / len(group.members)
            for m in group.members:
                normalized[m] = share
        elif abs(total - 1.0) <= NORMALIZATION_TOL:
            for m in group.members:
                normalized[m] = raw[m]
        else:
            for m in group.members:
                normalized[m] = raw[m] / total
    return WeightSet(level=level, weights=normalized)


def equal_weights(config: HierarchyConfig, level: Level) -> WeightSet:
    """Equal weights within every group of ``level``."""
    raw = {m: 1.0 for g in config.groups_at(level) for m in g.members}
    return normalize_weights(raw, config.groups_at(level), level)


@dataclass(frozen=True)
class AllWeights:
    """The four weight sets the full aggregation needs, one per level."""

    indicator: WeightSet
    construct: WeightSet
    broad: WeightSet
    overarching: WeightSet

    @classmethod
    def equal(cls, config: HierarchyConfig) -> "AllWeights":
        """Equal weights everywhere except the overall scalar, which uses the
        configured ``overall_weights`` (normalized)."""
        return cls(
            indicator=equal_weights(config, Level.INDICATOR),
            construct=equal_weights(config, Level.CONSTRUCT),
            broad=equal_weights(config, Level.BROAD),
            overarching=normalize_weights(
                config.overall_weights,
                config.groups_at(Level.OVERARCHING),
                Level.OVERARCHING,
            ),
        )

    def validate(self, config: HierarchyConfig) -> None:
        for expected, w in (
            (Level.INDICATOR, self.indicator),
            (Level.CONSTRUCT, self.construct),
            (Level.BROAD, self.broad),
            (Level.OVERARCHING, self.overarching),
        ):
            if w.level != expected:
                raise LevelMismatchError(
                    f"expected level {expected.value!r}, got {w.level.value!r}"
                )
            validate_weight_set(w, config)

    def to_dict(self) -> dict:
        return {
            "indicator": dict(self.indicator.weights),
            "construct": dict(self.construct.weights),
            "broad": dict(self.broad.weights),
            "overarching": dict(self.overarching.weights),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "AllWeights":
        return cls(
            indicator=WeightSet(Level.INDICATOR, dict(raw["indicator"])),
            construct=WeightSet(Level.CONSTRUCT, dict(raw["construct"])),
            broad=WeightSet(Level.BROAD, dict(raw["broad"])),
            overarching=WeightSet(Level.OVERARCHING, dict(raw["overarching"])),
        )


@dataclass(frozen=True)
class IndicatorVector:
    """One child's binary deprivation observations (1 = deprived)."""

    child_id: str
    values: Mapping[str, int]
    observed_at: datetime

    def __post_init__(self):
        for key, v in self.values.items():
            if v not in (0, 1):
                raise ValueError(
                    f"indicator {key!r} for child {self.child_id!r} is {v!r}, "
                    "expected 0 or 1"
                )


@dataclass(frozen=True)
class IndexReport:
    """Scores at every aggregation level for one child.

    Scores are deprivation intensities (1 = fully deprived); attainment
    views (1 - score) are added on export for display.
    """

    child_id: str
    construct_scores: Mapping[str, float]
    broad_scores: Mapping[str, float]
    overarching_scores: Mapping[str, float]
    overall: float
    weights_used: AllWeights
    computed_at: datetime

    def to_dict(self) -> dict:
        return {
            "child_id": self.child_id,
            "construct_scores": dict(self.construct_scores),
            "broad_scores": dict(self.broad_scores),
            "overarching_scores": dict(self.overarching_scores),
            "overall": self.overall,
            "attainment": {
                "overarching_scores": {
                    k: 1.0 - v for k, v in self.overarching_scores.items()
                },
                "overall": 1.0 - self.overall,
            },
            "weights_used": self.weights_used.to_dict(),
            "computed_at": self.computed_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "IndexReport":
        return cls(
            child_id=raw["child_id"],
            construct_scores=dict(raw["construct_scores"]),
            broad_scores=dict(raw["broad_scores"]),
            overarching_scores=dict(raw["overarching_scores"]),
            overall=raw["overall"],
            weights_used=AllWeights.from_dict(raw["weights_used"]),
            computed_at=datetime.fromisoformat(raw["computed_at"]),
        )


def _group_weighted_sum(
    values: Mapping[str, float],
    w: WeightSet,
    grouping: Iterable[Group],
    missing_policy: str,
) -> dict[str, float]:
    # Each score is the weighted mean over its group: dividing by the group
    # weight total (1 within 1e-9 for a valid WeightSet) keeps bounds and the
    # all/none boundary identities exact despite float normalization drift.
    scores: dict[str, float] = {}
    for group in grouping:
        observed = [m for m in group.members if m in values]
        missing = [m for m in group.members if m not in values]
        if missing and missing_policy == "error":
            raise IncompleteObservationError(
                f"group {group.id!r} is missing values for {missing}"
            )
        if not observed:
            raise IncompleteObservationError(
                f"group {group.id!r} has no observed members"
            )
        total_w = sum(w[m] for m in observed)
        if total_w <= 0:
            raise DegenerateGroupError(
                f"observed members of group {group.id!r} carry zero weight"
            )
        scores[group.id] = sum(values[m] * w[m] for m in observed) / total_w
    return scores


def aggregate_constructs(
    x: IndicatorVector,
    w: WeightSet,
    config: HierarchyConfig,
    missing_policy: str = "error",
) -> dict[str, float]:
    """Weighted sum of indicator values within each construct.

    ``missing_policy`` is ``"error"`` (default: any missing indicator raises
    :class:`IncompleteObservationError`) or ``"renormalize"`` (weights are
    renormalized over the observed indicators within each group).
    """
    if w.level != Level.INDICATOR:
        raise LevelMismatchError(
            f"construct aggregation needs indicator-level weights, got {w.level.value!r}"
        )
    if missing_policy not in ("error", "renormalize"):
        raise ValueError(f"unknown missing policy {missing_policy!r}")
    unknown = set(x.values) - set(config.indicator_ids())
    if unknown:
        raise IncompleteObservationError(
            f"observation for {x.child_id!r} has unconfigured indicators: {sorted(unknown)}"
        )
    return _group_weighted_sum(x.values, w, config.constructs, missing_policy)


def aggregate_level(
    lower_scores: Mapping[str, float],
    w: WeightSet,
    grouping: Iterable[Group],
) -> dict[str, float]:
    """Weighted sum of lower-level scores within each group; used for every
    aggregation step above the indicators."""
    return _group_weighted_sum(lower_scores, w, grouping, "error")


def compute_micg(
    x: IndicatorVector,
    weights: AllWeights,
    config: HierarchyConfig,
    missing_policy: str = "error",
    computed_at: datetime | None = None,
) -> IndexReport:
    """Run the full aggregation pipeline for one child.

    Deterministic: the report's ``overall`` equals the weighted sum of its
    overarching scores under ``weights.overarching``.
    """
    construct_scores = aggregate_constructs(x, weights.indicator, config, missing_policy)
    if weights.construct.level != Level.CONSTRUCT:
        raise LevelMismatchError("broad aggregation needs construct-level weights")
    broad_scores = aggregate_level(
        construct_scores, weights.construct, config.broad_dimensions
    )
    if weights.broad.level != Level.BROAD:
        raise LevelMismatchError("overarching aggregation needs broad-level weights")
    overarching_scores = aggregate_level(broad_scores, weights.broad, config.overarching)
    if weights.overarching.level != Level.OVERARCHING:
        raise LevelMismatchError("overall aggregation needs overarching-level weights")
    overall = aggregate_level(
        overarching_scores,
        weights.overarching,
        config.groups_at(Level.OVERARCHING),
    )["overall"]
    return IndexReport(
        child_id=x.child_id,
        construct_scores=construct_scores,
        broad_scores=broad_scores,
        overarching_scores=overarching_scores,
        overall=overall,
        weights_used=weights,
        computed_at=computed_at if computed_at is not None else x.observed_at,
    )


def reports_to_csv(reports: Iterable[IndexReport], config: HierarchyConfig) -> str:
    """Flat CSV, one row per child, one column per score.

    Column order follows the configuration's declaration order.
    """
    construct_ids = [g.id for g in config.constructs]
    broad_ids = [g.id for g in config.broad_dimensions]
    over_ids = [g.id for g in config.overarching]
    header = (
        ["child_id", "computed_at"]
        + [f"construct.{i}" for i in construct_ids]
        + [f"broad.{i}" for i in broad_ids]
        + [f"overarching.{i}" for i in over_ids]
        + ["overall"]
    )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in reports:
        writer.writerow(
            [r.child_id, r.computed_at.isoformat()]
            + [repr(r.construct_scores[i]) for i in construct_ids]
            + [repr(r.broad_scores[i]) for i in broad_ids]
            + [repr(r.overarching_scores[i]) for i in over_ids]
            + [repr(r.overall)]
        )
    return buf.getvalue()
