"""
mindblend.ensemble — weighted linear rank aggregation.

Each member's raw scores are mapped to a comparable per-impression score
space, combined linearly, and sorted:

    fused(c) = sum_i w_i * comparable_i(c)

Transforms (rank 1 = best; tied raw scores share the better rank):
    reciprocal_rank   1 / rank
    borda             (n - rank) / (n - 1), 1.0 when n == 1
    minmax_score      (s - min) / (max - min), 0.5 everywhere when max == min

Ties in the fused score are broken by ascending article id, so the output
never depends on candidate input order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Iterator, Mapping, Optional, Sequence

import numpy as np

from exceptions import CoverageError, DatasetValidationError, InvalidConfigError, UsageError
from logger import get_logger
from mindblend.dataset import BehaviorSet, Impression

if TYPE_CHECKING:
    from mindblend.learners import ScoreTable
    from mindblend.metrics import Metric

logger = get_logger(__name__)

DEFAULT_STEP = 0.1


class Transform(str, Enum):
    RECIPROCAL_RANK = "reciprocal_rank"
    BORDA = "borda"
    MINMAX_SCORE = "minmax_score"


# ─── TYPES ────────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class FusionMember:
    name: str
    weight: float = 1.0


@dataclass(frozen=True)
class FusionSpec:
    """Members with nonnegative weights, a transform and the article-id tie-break."""
    members: tuple[FusionMember, ...]
    transform: Transform = Transform.RECIPROCAL_RANK
    tiebreak: str = "article_id"

    def __post_init__(self) -> None:
        if not self.members:
            raise InvalidConfigError("Fusion needs at least one member")
        names = [m.name for m in self.members]
        if len(set(names)) != len(names):
            raise InvalidConfigError(
                "Fusion member names must be unique", context={"members": names}
            )
        for m in self.members:
            if not math.isfinite(m.weight) or m.weight < 0:
                raise InvalidConfigError(
                    f"Weight for '{m.name}' must be finite and nonnegative",
                    context={"weight": m.weight},
                )
        if all(m.weight == 0 for m in self.members):
            raise InvalidConfigError("Fusion weights must not all be zero")
        if self.tiebreak != "article_id":
            raise InvalidConfigError(f"Unsupported tiebreak {self.tiebreak!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.members)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(m.weight for m in self.members)

    @classmethod
    def create(
        cls,
        names: Sequence[str],
        weights: Optional[Sequence[float]] = None,
        transform: Transform = Transform.RECIPROCAL_RANK,
    ) -> "FusionSpec":
        """Build from parallel name/weight lists; omitted weights mean uniform."""
        if weights is None:
            weights = [1.0] * len(names)
        if len(weights) != len(names):
            raise UsageError(
                f"{len(weights)} weight(s) given for {len(names)} member(s)",
                context={"members": ", ".join(names)},
            )
        return cls(
            members=tuple(FusionMember(n, float(w)) for n, w in zip(names, weights)),
            transform=transform,
        )

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "FusionSpec":
        try:
            transform = Transform(str(raw.get("transform", Transform.RECIPROCAL_RANK.value)))
        except ValueError as exc:
            raise InvalidConfigError(
                f"Unknown transform {raw.get('transform')!r}",
                context={"allowed": [t.value for t in Transform]},
            ) from exc
        members_raw = raw.get("members") or []
        members = []
        for item in members_raw:
            if isinstance(item, str):
                members.append(FusionMember(item))
            else:
                members.append(FusionMember(str(item["name"]), float(item.get("weight", 1.0))))
        return cls(members=tuple(members), transform=transform)

    def to_dict(self) -> dict[str, Any]:
        return {
            "transform": self.transform.value,
            "tiebreak": self.tiebreak,
            "members": [{"name": m.name, "weight": m.weight} for m in self.members],
        }


@dataclass(frozen=True)
class RankedList:
    """Articles best-first with their fused scores."""
    impression_id: str
    articles: tuple[str, ...]
    scores: tuple[float, ...]

    def ranks_for(self, candidate_ids: Sequence[str]) -> list[int]:
        """1-based rank of each candidate, in the given (file) order."""
        position = {a: i for i, a in enumerate(self.articles, start=1)}
        return [position[a] for a in candidate_ids]


@dataclass
class SweepResult:
    spec: FusionSpec
    value: float
    objective: "Metric"
    grid: list[tuple[tuple[float, ...], Optional[float]]] = field(default_factory=list)

    def to_text(self) -> str:
        names = self.spec.names
        header = "  ".join(f"{n:>10}" for n in names) + f"  {self.objective.label:>10}"
        lines = [header]
        for weights, value in self.grid:
            shown = f"{value:.4f}" if value is not None else "n/a"
            lines.append("  ".join(f"{w:>10.4g}" for w in weights) + f"  {shown:>10}")
        best = ", ".join(f"{m.name}={m.weight:g}" for m in self.spec.members)
        lines.append(f"best: {best} ({self.objective.label}={self.value:.4f})")
        return "\n".join(lines) + "\n"


# ─── TRANSFORMS ───────────────────────────────────────────────────────────────


def competition_ranks(scores: Sequence[float]) -> np.ndarray:
    """1 + number of strictly higher scores; tied scores share the better rank."""
    s = np.asarray(scores, dtype=np.float64)
    return 1 + (s[None, :] > s[:, None]).sum(axis=1)


def to_comparable(scores: Sequence[float], transform: Transform) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    n = s.size
    if n == 0:
        raise ValueError("to_comparable needs at least one candidate")
    if transform == Transform.MINMAX_SCORE:
        lo, hi = float(s.min()), float(s.max())
        if hi == lo:
            return np.full(n, 0.5)
        span = hi - lo
        if math.isinf(span):
            # span wider than the float range; halving is exact for these magnitudes
            return np.clip((s / 2 - lo / 2) / (hi / 2 - lo / 2), 0.0, 1.0)
        return (s - lo) / span
    ranks = competition_ranks(s).astype(np.float64)
    if transform == Transform.RECIPROCAL_RANK:
        return 1.0 / ranks
    if n == 1:
        return np.ones(1)
    return (n - ranks) / (n - 1)


# ─── FUSION ───────────────────────────────────────────────────────────────────


def rank_order(impression_id: str, scores: Mapping[str, float]) -> RankedList:
    """Sort descending by score, ties by ascending article id."""
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return RankedList(
        impression_id=impression_id,
        articles=tuple(a for a, _ in ordered),
        scores=tuple(float(s) for _, s in ordered),
    )


def _comparable_by_member(
    member_scores: Mapping[str, Mapping[str, float]],
    spec: FusionSpec,
    impression_id: str,
) -> tuple[list[str], list[np.ndarray]]:
    """Comparable scores per member over the sorted candidate ids."""
    missing = [name for name in spec.names if name not in member_scores]
    if missing:
        raise CoverageError(
            f"No scores from member(s) {', '.join(missing)} for impression {impression_id}",
            [(impression_id, f"<{name}>") for name in missing],
        )
    candidates = sorted(member_scores[spec.names[0]])
    rows = []
    for name in spec.names:
        table = member_scores[name]
        if set(table) != set(candidates):
            gaps = [(impression_id, a) for a in candidates if a not in table]
            gaps += [(impression_id, a) for a in sorted(table) if a not in candidates]
            raise CoverageError(
                f"Member '{name}' covers a different candidate set for impression {impression_id}",
                gaps,
            )
        rows.append(to_comparable([table[a] for a in candidates], spec.transform))
    return candidates, rows


def _combine(
    candidates: list[str], rows: Sequence[np.ndarray], weights: Sequence[float]
) -> np.ndarray:
    fused = np.zeros(len(candidates), dtype=np.float64)
    for row, w in zip(rows, weights):
        fused = fused + w * row
    return fused


def fuse(
    impression_id: str,
    member_scores: Mapping[str, Mapping[str, float]],
    spec: FusionSpec,
) -> RankedList:
    """Fuse per-member {article_id: score} maps for one impression.

    Raises:
        CoverageError: a member is missing or covers other candidates.
    """
    candidates, rows = _comparable_by_member(member_scores, spec, impression_id)
    fused = _combine(candidates, rows, spec.weights)
    return rank_order(impression_id, dict(zip(candidates, fused.tolist())))


def member_scores_for(
    tables: Mapping[str, "ScoreTable"], names: Sequence[str], impression: Impression
) -> dict[str, dict[str, float]]:
    out: dict[str, dict[str, float]] = {}
    for name in names:
        if name not in tables:
            continue
        scores = tables[name].scores_for(impression)
        out[name] = dict(zip(impression.candidate_ids, scores.tolist()))
    return out


def fuse_all(
    tables: Mapping[str, "ScoreTable"],
    behaviors: BehaviorSet,
    spec: FusionSpec,
    workers: int = 1,
) -> list[RankedList]:
    """Fuse every impression; results in behaviors-file order."""
    missing = [name for name in spec.names if name not in tables]
    if missing:
        raise CoverageError(f"No score table for member(s) {', '.join(missing)}")
    for name in spec.names:
        tables[name].check_coverage(behaviors)

    def _one(imp: Impression) -> RankedList:
        return fuse(imp.impression_id, member_scores_for(tables, spec.names, imp), spec)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_one, behaviors))
    return [_one(imp) for imp in behaviors]


# ─── WEIGHT SWEEP ─────────────────────────────────────────────────────────────


def simplex_grid(members: int, step: float) -> list[tuple[float, ...]]:
    """Weight vectors on the simplex with the given step, lexicographic ascending.

    Raises:
        UsageError: step outside (0, 1] or not dividing 1 evenly.
    """
    if not (0.0 < step <= 1.0):
        raise UsageError(f"Grid step must lie in (0, 1], got {step}")
    parts = round(1.0 / step)
    if abs(parts * step - 1.0) > 1e-9:
        raise UsageError(f"Grid step {step} does not divide 1 evenly")
    if members < 1:
        return []
    return [tuple(c / parts for c in combo) for combo in _compositions(parts, members)]


def _compositions(total: int, slots: int) -> Iterator[tuple[int, ...]]:
    """Nonnegative integer tuples of length slots summing to total, lexicographic ascending."""
    if slots == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, slots - 1):
            yield (first, *rest)


def sweep_weights(
    tables: Mapping[str, "ScoreTable"],
    members: Sequence[str],
    behaviors: BehaviorSet,
    objective: "Metric",
    step: float = DEFAULT_STEP,
    transform: Transform = Transform.RECIPROCAL_RANK,
    workers: int = 1,
) -> SweepResult:
    """Exhaustive simplex search for the weights maximizing objective.

    Ties between weight vectors keep the first in enumeration order.

    Raises:
        UsageError: fewer than two members, bad step.
        DatasetValidationError: empty dev set.
    """
    from mindblend.metrics import evaluate

    if len(members) < 2:
        raise UsageError("Weight sweep needs at least two members")
    if len(behaviors) == 0:
        raise DatasetValidationError("Weight sweep needs a non-empty dev set")
    grid = simplex_grid(len(members), step)

    probe = FusionSpec.create(members, transform=transform)
    missing = [name for name in members if name not in tables]
    if missing:
        raise CoverageError(f"No score table for member(s) {', '.join(missing)}")
    for name in members:
        tables[name].check_coverage(behaviors)

    # comparable scores do not depend on weights
    prepared = [
        _comparable_by_member(member_scores_for(tables, members, imp), probe, imp.impression_id)
        for imp in behaviors
    ]

    def _value(weights: tuple[float, ...]) -> Optional[float]:
        ranked = [
            rank_order(imp.impression_id, dict(zip(cands, _combine(cands, rows, weights).tolist())))
            for imp, (cands, rows) in zip(behaviors, prepared)
        ]
        return evaluate(ranked, behaviors).mean(objective)

    logger.info("Sweeping %d weight vectors over %d impressions", len(grid), len(behaviors))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_value, grid))
    else:
        values = [_value(w) for w in grid]

    best_index: Optional[int] = None
    for i, value in enumerate(values):
        if value is None:
            continue
        if best_index is None or value > values[best_index]:  # type: ignore[operator]
            best_index = i
    if best_index is None:
        raise DatasetValidationError(
            f"{objective.label} is undefined on every dev impression"
        )
    best = FusionSpec.create(members, grid[best_index], transform)
    return SweepResult(
        spec=best,
        value=float(values[best_index]),  # type: ignore[arg-type]
        objective=objective,
        grid=list(zip(grid, values)),
    )
