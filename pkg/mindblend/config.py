"""
mindblend/config.py — run configuration loader.

Loads a YAML run config (mindblend.yaml). Falls back to built-in defaults if
no config file is found. Relative paths resolve against the directory of
the config file that names them.

Search order:
  1. Explicit path (--config)
  2. MINDBLEND_CONFIG_PATH env var
  3. ./mindblend.yaml (CWD — experiment directory)
  4. Package defaults (mindblend/defaults/mindblend.yaml)

Usage:
    from mindblend.config import get_config

    cfg = get_config()
    cfg.paths.news        # Path | None
    cfg.learner("tfidf")  # LearnerSpec
    cfg.fusion            # FusionSpec
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from exceptions import (
    ConfigError,
    InvalidConfigError,
    MindBlendFileNotFoundError,
    UnknownLearnerError,
    UsageError,
)
from mindblend.ensemble import DEFAULT_STEP, FusionSpec, Transform
from mindblend.learners import LearnerKind, LearnerSpec
from mindblend.metrics import Metric

# ─── DEFAULT VALUES ────────────────────────────────────────────────────────────

_DEFAULT_SEED = 42
_DEFAULT_OUTPUT_DIR = "runs"
_DEFAULT_LEARNERS: list[dict[str, Any]] = [
    {"name": "tfidf", "kind": "tfidf"},
    {"name": "popularity", "kind": "popularity"},
    {"name": "random", "kind": "random"},
]
_DEFAULT_FUSION: dict[str, Any] = {
    "transform": Transform.RECIPROCAL_RANK.value,
    "members": [{"name": "tfidf", "weight": 1.0}, {"name": "popularity", "weight": 1.0}],
}

# ─── DATA MODEL ───────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class DataPaths:
    """Input files. None means not configured."""
    news: Optional[Path] = None
    behaviors: Optional[Path] = None
    embeddings: Optional[Path] = None
    train_behaviors: Optional[Path] = None


@dataclass(frozen=True)
class RunConfig:
    """
    Resolved run configuration.

    Attributes:
        paths:      Input files (news, behaviors, embeddings, training behaviors).
        learners:   Configured base learners; names unique.
        fusion:     Members, weights and transform used by `combine`.
        metrics:    Metrics shown in `evaluate` reports and the `run` table.
        seed:       Seed for the random learner and fixtures.
        output_dir: Where score files, predictions and reports are written.
        workers:    Thread pool size for per-impression work.
        objective:  Sweep objective.
        step:       Sweep grid step.
        source:     Path of the loaded config file, or None for built-in defaults.
    """
    paths: DataPaths = field(default_factory=DataPaths)
    learners: tuple[LearnerSpec, ...] = ()
    fusion: Optional[FusionSpec] = None
    metrics: tuple[Metric, ...] = tuple(Metric)
    seed: int = _DEFAULT_SEED
    output_dir: Path = Path(_DEFAULT_OUTPUT_DIR)
    workers: int = 1
    objective: Metric = Metric.AUC
    step: float = DEFAULT_STEP
    log_level: str = "INFO"
    log_json: bool = False
    source: Optional[Path] = None

    def __post_init__(self) -> None:
        names = [spec.name for spec in self.learners]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise InvalidConfigError("Learner names must be unique", context={"duplicates": dupes})
        if self.workers < 1:
            raise InvalidConfigError("workers must be >= 1", context={"workers": self.workers})

    @property
    def learner_names(self) -> list[str]:
        return [spec.name for spec in self.learners]

    def learner(self, name: str) -> LearnerSpec:
        for spec in self.learners:
            if spec.name == name:
                return spec
        raise UnknownLearnerError(name, self.learner_names)

    def seed_for(self, spec: LearnerSpec) -> int:
        return spec.seed if spec.seed is not None else self.seed

    def score_path(self, name: str) -> Path:
        return self.output_dir / "scores" / f"{name}.tsv"

    def with_overrides(self, **changes: Any) -> "RunConfig":
        """Return a copy with non-None flag values applied."""
        applied = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **applied) if applied else self

    def check_paths(self) -> None:
        """Every referenced input file must exist at run start."""
        referenced = [p for p in dataclasses.astuple(self.paths) if p is not None]
        referenced += [s.path for s in self.learners if s.path is not None]
        for path in referenced:
            if not Path(path).exists():
                raise MindBlendFileNotFoundError(str(path))

    def to_dict(self) -> dict[str, Any]:
        paths = {k: str(v) for k, v in dataclasses.asdict(self.paths).items() if v is not None}
        return {
            "seed": self.seed,
            "workers": self.workers,
            "output_dir": str(self.output_dir),
            "paths": paths,
            "learners": [s.to_dict() for s in self.learners],
            "fusion": self.fusion.to_dict() if self.fusion else None,
            "metrics": [m.value for m in self.metrics],
            "sweep": {"objective": self.objective.value, "step": self.step},
        }


# ─── LOADER ───────────────────────────────────────────────────────────────────

_DEFAULT_CONFIG_FILENAME = "mindblend.yaml"
_PACKAGE_DEFAULTS_PATH = Path(__file__).parent / "defaults" / "mindblend.yaml"
_ENV_VAR = "MINDBLEND_CONFIG_PATH"


def _resolve(base: Path, value: Any) -> Optional[Path]:
    if value in (None, ""):
        return None
    p = Path(str(value)).expanduser()
    return p if p.is_absolute() else base / p


def _defaults() -> RunConfig:
    """Return a config populated entirely from built-in defaults."""
    base = Path.cwd()
    return RunConfig(
        learners=tuple(LearnerSpec.from_dict(raw, base) for raw in _DEFAULT_LEARNERS),
        fusion=FusionSpec.from_dict(_DEFAULT_FUSION),
        output_dir=base / _DEFAULT_OUTPUT_DIR,
        source=None,
    )


def parse_config(raw: dict[str, Any], base: Path, source: Optional[Path] = None) -> RunConfig:
    """
    Build a RunConfig from a parsed YAML mapping.

    Unknown keys are ignored; missing sections fall back to defaults.
    """
    if not isinstance(raw, dict):
        raise InvalidConfigError("Config root must be a mapping")

    paths_raw = raw.get("paths") or {}
    paths = DataPaths(
        news=_resolve(base, paths_raw.get("news")),
        behaviors=_resolve(base, paths_raw.get("behaviors")),
        embeddings=_resolve(base, paths_raw.get("embeddings")),
        train_behaviors=_resolve(base, paths_raw.get("train_behaviors")),
    )

    learners_raw = raw.get("learners")
    if not isinstance(learners_raw, list) or not learners_raw:
        learners_raw = _DEFAULT_LEARNERS
    learners = []
    for item in learners_raw:
        if not isinstance(item, dict):
            raise InvalidConfigError(f"Learner entry must be a mapping, got {item!r}")
        inherits = item.get("kind") == LearnerKind.EMBEDDING.value and not item.get("path")
        if inherits and paths.embeddings:
            item = {**item, "path": str(paths.embeddings)}
        learners.append(LearnerSpec.from_dict(item, base))

    fusion_raw = raw.get("fusion")
    fusion = FusionSpec.from_dict(fusion_raw if isinstance(fusion_raw, dict) else _DEFAULT_FUSION)

    sweep_raw = raw.get("sweep") or {}
    metrics_raw = raw.get("metrics")
    try:
        metrics = tuple(Metric.parse(str(m)) for m in metrics_raw) if metrics_raw else tuple(Metric)
        objective = Metric.parse(str(sweep_raw.get("objective", Metric.AUC.value)))
    except UsageError as exc:
        raise InvalidConfigError(str(exc)) from exc
    try:
        seed = int(raw.get("seed", _DEFAULT_SEED))
        workers = int(raw.get("workers", 1))
        step = float(sweep_raw.get("step", DEFAULT_STEP))
    except (TypeError, ValueError) as exc:
        raise InvalidConfigError(f"Invalid numeric config value: {exc}") from exc

    return RunConfig(
        paths=paths,
        learners=tuple(learners),
        fusion=fusion,
        metrics=metrics,
        seed=seed,
        output_dir=_resolve(base, raw.get("output_dir", _DEFAULT_OUTPUT_DIR)) or base,
        workers=workers,
        objective=objective,
        step=step,
        log_level=str(raw.get("log_level", "INFO")),
        log_json=bool(raw.get("log_json", False)),
        source=source,
    )


def _parse_yaml(path: Path) -> RunConfig:
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise InvalidConfigError(f"Invalid YAML in {path}: {exc}") from exc
    return parse_config(raw, base=path.resolve().parent, source=path.resolve())


def load_config(path: Optional[Path | str] = None) -> RunConfig:
    """
    Load the run configuration.

    Search order:
      1. Explicit `path` argument
      2. MINDBLEND_CONFIG_PATH environment variable
      3. ./mindblend.yaml in current working directory
      4. Package defaults (mindblend/defaults/mindblend.yaml)
      5. Built-in Python defaults (no file required)

    Raises:
        ConfigError: explicit or env path does not exist, or invalid YAML.
    """
    candidates: list[tuple[Path, bool]] = []  # (path, raise_if_missing)

    if path is not None:
        candidates.append((Path(path), True))

    env_path = os.environ.get(_ENV_VAR)
    if env_path:
        candidates.append((Path(env_path), True))

    candidates.append((Path.cwd() / _DEFAULT_CONFIG_FILENAME, False))
    candidates.append((_PACKAGE_DEFAULTS_PATH, False))

    for candidate, raise_if_missing in candidates:
        if candidate.exists():
            return _parse_yaml(candidate)
        if raise_if_missing:
            raise ConfigError(
                f"Config file not found: {candidate}", context={"path": str(candidate)}
            )

    return _defaults()


def dump_fusion(spec: FusionSpec) -> str:
    """YAML snippet holding a fusion spec, reusable via `combine --fusion`."""
    return yaml.safe_dump({"fusion": spec.to_dict()}, sort_keys=False)


def load_fusion(path: Path | str) -> FusionSpec:
    """Read a fusion spec written by dump_fusion (or any config with a fusion key)."""
    path = Path(path)
    if not path.exists():
        raise MindBlendFileNotFoundError(str(path))
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise InvalidConfigError(f"Invalid YAML in {path}: {exc}") from exc
    fusion = raw.get("fusion", raw) if isinstance(raw, dict) else None
    if not isinstance(fusion, dict):
        raise InvalidConfigError(f"No fusion spec in {path}")
    return FusionSpec.from_dict(fusion)


# ─── SINGLETON ────────────────────────────────────────────────────────────────
# Module-level singleton. Call reset_config() in tests to clear between cases.

_config_cache: Optional[RunConfig] = None


def get_config(path: Optional[Path | str] = None) -> RunConfig:
    """
    Return the cached run config, loading it on first call.

    Pass `path` only on the first call (or after reset_config()).
    """
    global _config_cache
    if _config_cache is None:
        _config_cache = load_config(path)
    return _config_cache


def reset_config() -> None:
    """Clear the cached config. Use in tests between test cases."""
    global _config_cache
    _config_cache = None
