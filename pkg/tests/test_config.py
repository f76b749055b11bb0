"""
tests/test_config.py — Tests for mindblend.config

Coverage targets:
  - load_config() search order (explicit path, env var, CWD, package defaults, built-in)
  - parse_config() section parsing, relative path resolution, fallbacks
  - RunConfig helpers: learner lookup, score paths, overrides, check_paths
  - dump_fusion()/load_fusion() round trip
  - get_config() singleton + reset_config()
"""

from __future__ import annotations

import textwrap
from pathlib import Path

import pytest
import yaml

import mindblend.config as config_module
from exceptions import (
    ConfigError,
    InvalidConfigError,
    MindBlendFileNotFoundError,
    UnknownLearnerError,
)
from mindblend.config import (
    RunConfig,
    dump_fusion,
    get_config,
    load_config,
    load_fusion,
    parse_config,
    reset_config,
)
from mindblend.ensemble import FusionSpec, Transform
from mindblend.learners import Aggregation, LearnerKind
from mindblend.metrics import Metric


# ─── FIXTURES ─────────────────────────────────────────────────────────────────


@pytest.fixture(autouse=True)
def clear_cache():
    """Reset singleton cache before and after every test."""
    reset_config()
    yield
    reset_config()


@pytest.fixture()
def full_yaml(tmp_path: Path) -> Path:
    content = textwrap.dedent("""\
        seed: 7
        workers: 3
        output_dir: out
        log_level: DEBUG

        paths:
          news: data/news.tsv
          behaviors: data/behaviors.tsv
          embeddings: data/embeddings.txt

        learners:
          - name: tfidf
            kind: tfidf
          - name: tfidf_max
            kind: tfidf
            aggregation: max
          - name: bert
            kind: embedding
          - name: nrms
            kind: external
            path: scores/nrms.tsv
          - name: random
            kind: random
            seed: 99

        fusion:
          transform: borda
          members:
            - name: tfidf
              weight: 0.3
            - name: nrms
              weight: 0.7

        metrics: [AUC, nDCG@5]

        sweep:
          objective: mrr
          step: 0.25
    """)
    p = tmp_path / "mindblend.yaml"
    p.write_text(content, encoding="utf-8")
    return p


@pytest.fixture()
def minimal_yaml(tmp_path: Path) -> Path:
    d = tmp_path / "minimal"
    d.mkdir()
    p = d / "mindblend.yaml"
    p.write_text("seed: 5\n", encoding="utf-8")
    return p


# ─── load_config: explicit path ───────────────────────────────────────────────


class TestLoadConfigExplicitPath:
    def test_loads_full_yaml(self, full_yaml: Path) -> None:
        cfg = load_config(path=full_yaml)
        assert cfg.seed == 7
        assert cfg.workers == 3
        assert cfg.learner_names == ["tfidf", "tfidf_max", "bert", "nrms", "random"]
        assert cfg.fusion is not None
        assert cfg.fusion.transform == Transform.BORDA
        assert cfg.fusion.weights == (0.3, 0.7)
        assert cfg.metrics == (Metric.AUC, Metric.NDCG5)
        assert cfg.objective == Metric.MRR
        assert cfg.step == 0.25
        assert cfg.log_level == "DEBUG"
        assert cfg.source == full_yaml.resolve()

    def test_relative_paths_resolve_against_config_dir(self, full_yaml: Path) -> None:
        cfg = load_config(path=full_yaml)
        base = full_yaml.resolve().parent
        assert cfg.paths.news == base / "data" / "news.tsv"
        assert cfg.output_dir == base / "out"
        assert cfg.learner("nrms").path == base / "scores" / "nrms.tsv"

    def test_embedding_learner_inherits_embeddings_path(self, full_yaml: Path) -> None:
        cfg = load_config(path=full_yaml)
        spec = cfg.learner("bert")
        assert spec.kind == LearnerKind.EMBEDDING
        assert spec.path == full_yaml.resolve().parent / "data" / "embeddings.txt"

    def test_learner_options(self, full_yaml: Path) -> None:
        cfg = load_config(path=full_yaml)
        assert cfg.learner("tfidf_max").aggregation == Aggregation.MAX
        assert cfg.learner("tfidf").aggregation == Aggregation.MEAN
        assert cfg.seed_for(cfg.learner("random")) == 99
        assert cfg.seed_for(cfg.learner("tfidf")) == 7

    def test_minimal_yaml_falls_back_to_defaults(self, minimal_yaml: Path) -> None:
        cfg = load_config(path=minimal_yaml)
        assert cfg.seed == 5
        assert cfg.learner_names == ["tfidf", "popularity", "random"]
        assert cfg.metrics == tuple(Metric)
        assert cfg.objective == Metric.AUC
        assert cfg.step == 0.1

    def test_explicit_path_missing_raises(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError, match="does_not_exist.yaml"):
            load_config(path=tmp_path / "does_not_exist.yaml")

    def test_accepts_string_path(self, full_yaml: Path) -> None:
        assert load_config(path=str(full_yaml)).seed == 7


# ─── load_config: env var / CWD / defaults ────────────────────────────────────


class TestSearchOrder:
    def test_env_var_takes_precedence_over_cwd(
        self, full_yaml: Path, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        cwd = tmp_path / "cwd"
        cwd.mkdir()
        (cwd / "mindblend.yaml").write_text("seed: 1\n", encoding="utf-8")
        monkeypatch.chdir(cwd)
        monkeypatch.setenv("MINDBLEND_CONFIG_PATH", str(full_yaml))
        assert load_config().seed == 7

    def test_env_var_missing_file_raises(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.setenv("MINDBLEND_CONFIG_PATH", str(tmp_path / "no_such.yaml"))
        with pytest.raises(ConfigError):
            load_config()

    def test_discovers_config_in_cwd(
        self, minimal_yaml: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.chdir(minimal_yaml.parent)
        monkeypatch.delenv("MINDBLEND_CONFIG_PATH", raising=False)
        assert load_config().seed == 5

    def test_no_config_in_cwd_uses_package_defaults(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.chdir(tmp_path)
        monkeypatch.delenv("MINDBLEND_CONFIG_PATH", raising=False)
        cfg = load_config()
        assert cfg.source is not None and "defaults" in str(cfg.source)
        assert "tfidf_max" in cfg.learner_names

    def test_built_in_defaults_without_any_file(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.chdir(tmp_path)
        monkeypatch.delenv("MINDBLEND_CONFIG_PATH", raising=False)
        monkeypatch.setattr(config_module, "_PACKAGE_DEFAULTS_PATH", tmp_path / "nope.yaml")
        cfg = load_config()
        assert cfg.source is None
        assert cfg.learner_names == ["tfidf", "popularity", "random"]
        assert cfg.fusion is not None and cfg.fusion.names == ("tfidf", "popularity")


# ─── parse_config: invalid input ──────────────────────────────────────────────


class TestInvalidConfig:
    def test_invalid_yaml_raises(self, tmp_path: Path) -> None:
        p = tmp_path / "bad.yaml"
        p.write_text("seed: [unclosed\n", encoding="utf-8")
        with pytest.raises(InvalidConfigError, match="Invalid YAML"):
            load_config(path=p)

    def test_root_must_be_mapping(self, tmp_path: Path) -> None:
        with pytest.raises(InvalidConfigError):
            parse_config(["a", "b"], tmp_path)  # type: ignore[arg-type]

    def test_duplicate_learner_names(self, tmp_path: Path) -> None:
        raw = {"learners": [{"name": "a", "kind": "tfidf"}, {"name": "a", "kind": "random"}]}
        with pytest.raises(InvalidConfigError, match="unique"):
            parse_config(raw, tmp_path)

    def test_unknown_learner_kind(self, tmp_path: Path) -> None:
        with pytest.raises(InvalidConfigError, match="kind"):
            parse_config({"learners": [{"name": "a", "kind": "lstm"}]}, tmp_path)

    def test_external_learner_needs_path(self, tmp_path: Path) -> None:
        with pytest.raises(InvalidConfigError, match="needs a path"):
            parse_config({"learners": [{"name": "x", "kind": "external"}]}, tmp_path)

    def test_unsupported_metric_is_config_error(self, tmp_path: Path) -> None:
        with pytest.raises(InvalidConfigError):
            parse_config({"metrics": ["ndcg7"]}, tmp_path)

    def test_unknown_objective_is_config_error(self, tmp_path: Path) -> None:
        with pytest.raises(InvalidConfigError):
            parse_config({"sweep": {"objective": "precision"}}, tmp_path)

    def test_non_numeric_seed(self, tmp_path: Path) -> None:
        with pytest.raises(InvalidConfigError, match="numeric"):
            parse_config({"seed": "abc"}, tmp_path)

    def test_zero_workers_rejected(self, tmp_path: Path) -> None:
        with pytest.raises(InvalidConfigError, match="workers"):
            parse_config({"workers": 0}, tmp_path)

    def test_all_zero_fusion_weights(self, tmp_path: Path) -> None:
        raw = {"fusion": {"members": [{"name": "a", "weight": 0}, {"name": "b", "weight": 0}]}}
        with pytest.raises(InvalidConfigError, match="all be zero"):
            parse_config(raw, tmp_path)

    def test_fusion_weights_default_to_uniform(self, tmp_path: Path) -> None:
        cfg = parse_config({"fusion": {"members": ["a", "b"]}}, tmp_path)
        assert cfg.fusion is not None
        assert cfg.fusion.weights == (1.0, 1.0)


# ─── RunConfig helpers ────────────────────────────────────────────────────────


class TestRunConfigHelpers:
    def test_unknown_learner_lists_configured(self, minimal_yaml: Path) -> None:
        cfg = load_config(path=minimal_yaml)
        with pytest.raises(UnknownLearnerError) as exc:
            cfg.learner("lstur")
        assert "tfidf, popularity, random" in str(exc.value)

    def test_score_path_under_output_dir(self, full_yaml: Path) -> None:
        cfg = load_config(path=full_yaml)
        assert cfg.score_path("tfidf") == cfg.output_dir / "scores" / "tfidf.tsv"

    def test_with_overrides_ignores_none(self, minimal_yaml: Path) -> None:
        cfg = load_config(path=minimal_yaml)
        assert cfg.with_overrides(seed=None, workers=None) is cfg
        changed = cfg.with_overrides(seed=11, workers=4)
        assert (changed.seed, changed.workers) == (11, 4)
        assert cfg.seed == 5

    def test_with_overrides_validates(self, minimal_yaml: Path) -> None:
        cfg = load_config(path=minimal_yaml)
        with pytest.raises(InvalidConfigError):
            cfg.with_overrides(workers=0)

    def test_check_paths_reports_missing_file(self, full_yaml: Path) -> None:
        cfg = load_config(path=full_yaml)
        with pytest.raises(MindBlendFileNotFoundError, match="news.tsv"):
            cfg.check_paths()

    def test_check_paths_passes_when_files_exist(self, tmp_path: Path) -> None:
        for name in ("news.tsv", "behaviors.tsv"):
            (tmp_path / name).write_text("", encoding="utf-8")
        cfg = parse_config({"paths": {"news": "news.tsv", "behaviors": "behaviors.tsv"}}, tmp_path)
        cfg.check_paths()

    def test_to_dict_is_yaml_serialisable(self, full_yaml: Path) -> None:
        data = load_config(path=full_yaml).to_dict()
        again = yaml.safe_load(yaml.safe_dump(data))
        assert again["sweep"] == {"objective": "mrr", "step": 0.25}
        assert [l["name"] for l in again["learners"]][:2] == ["tfidf", "tfidf_max"]


# ─── fusion spec files ────────────────────────────────────────────────────────


class TestFusionFiles:
    def test_dump_and_load_round_trip(self, tmp_path: Path) -> None:
        spec = FusionSpec.create(["tfidf", "nrms"], [0.2, 0.8], Transform.MINMAX_SCORE)
        p = tmp_path / "fusion.yaml"
        p.write_text(dump_fusion(spec), encoding="utf-8")
        assert load_fusion(p) == spec

    def test_load_fusion_from_run_config(self, full_yaml: Path) -> None:
        spec = load_fusion(full_yaml)
        assert spec.names == ("tfidf", "nrms")

    def test_load_fusion_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(MindBlendFileNotFoundError):
            load_fusion(tmp_path / "fusion.yaml")

    def test_load_fusion_without_spec(self, tmp_path: Path) -> None:
        p = tmp_path / "fusion.yaml"
        p.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(InvalidConfigError):
            load_fusion(p)


# ─── singleton ────────────────────────────────────────────────────────────────


class TestSingleton:
    def test_get_config_caches(self, minimal_yaml: Path) -> None:
        first = get_config(minimal_yaml)
        assert get_config() is first

    def test_reset_config_clears(self, minimal_yaml: Path, full_yaml: Path) -> None:
        get_config(minimal_yaml)
        reset_config()
        assert get_config(full_yaml).seed == 7

    def test_default_run_config_type(self) -> None:
        assert isinstance(get_config(), RunConfig)
