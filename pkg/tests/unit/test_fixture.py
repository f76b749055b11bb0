"""
tests/unit/test_fixture.py — synthetic dataset generator and its planted signals.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from exceptions import UsageError
from mindblend.config import load_config
from mindblend.dataset import parse_behaviors, parse_news, serialize_behaviors, serialize_news, validate
from mindblend.ensemble import sweep_weights
from mindblend.learners import Aggregation, TfidfLearner, load_external_scores
from mindblend.metrics import Metric, evaluate
from mindblend.text import fit_tfidf, load_embeddings
from mindblend.fixture import Fixture, FixtureSizes, generate_fixture, write_fixture

SMALL = FixtureSizes(users=10, articles=20, impressions=50, candidates=8)


@pytest.fixture(scope="module")
def small() -> Fixture:
    return generate_fixture(SMALL, seed=42)


class TestGenerate:
    def test_counts(self, small: Fixture) -> None:
        assert len(small.catalog) == 20
        assert len(small.behaviors) == 50
        assert len({imp.user_id for imp in small.behaviors}) == 10
        assert all(len(imp.candidates) == 8 for imp in small.behaviors)
        assert len(small.collab_scores) == 50 * 8

    def test_each_impression_has_click_and_non_click(self, small: Fixture) -> None:
        for imp in small.behaviors:
            assert imp.clicked and imp.not_clicked

    def test_references_resolve(self, small: Fixture) -> None:
        report = validate(small.catalog, small.behaviors)
        assert report.missing_ids == []
        assert report.no_click == []

    def test_deterministic(self, small: Fixture) -> None:
        again = generate_fixture(SMALL, seed=42)
        assert serialize_news(again.catalog) == serialize_news(small.catalog)
        assert serialize_behaviors(again.behaviors) == serialize_behaviors(small.behaviors)
        assert again.collab_scores.to_tsv() == small.collab_scores.to_tsv()

    def test_seed_matters(self, small: Fixture) -> None:
        other = generate_fixture(SMALL, seed=7)
        assert serialize_behaviors(other.behaviors) != serialize_behaviors(small.behaviors)

    @pytest.mark.parametrize(
        "kwargs",
        [{"users": 0}, {"candidates": 1}, {"articles": 5, "candidates": 8}],
    )
    def test_bad_sizes(self, kwargs: dict) -> None:
        with pytest.raises(UsageError):
            FixtureSizes(**kwargs)


class TestWrite:
    def test_files_parse_back(self, small: Fixture, tmp_path: Path) -> None:
        written = write_fixture(small, tmp_path, seed=42)
        assert {p.name for p in written} == {
            "news.tsv", "behaviors.tsv", "embeddings.txt", "collab_scores.tsv", "mindblend.yaml"
        }
        assert parse_news(tmp_path / "news.tsv") == small.catalog
        assert parse_behaviors(tmp_path / "behaviors.tsv") == small.behaviors
        emb = load_embeddings(tmp_path / "embeddings.txt")
        for article_id, vec in small.embeddings.vectors.items():
            assert np.allclose(emb.get(article_id), vec, atol=1e-6)
        scores = load_external_scores(tmp_path / "collab_scores.tsv", small.behaviors)
        assert dict(scores.entries) == dict(small.collab_scores.entries)

    def test_config_is_loadable(self, small: Fixture, tmp_path: Path) -> None:
        write_fixture(small, tmp_path, seed=5)
        cfg = load_config(tmp_path / "mindblend.yaml")
        assert cfg.seed == 5
        assert cfg.paths.news == tmp_path.resolve() / "news.tsv"
        assert "collab" in cfg.learner_names
        assert cfg.fusion is not None and cfg.fusion.names == ("tfidf", "collab")
        cfg.check_paths()

    def test_without_seed_no_config(self, small: Fixture, tmp_path: Path) -> None:
        write_fixture(small, tmp_path)
        assert not (tmp_path / "mindblend.yaml").exists()


@pytest.mark.slow
class TestPlantedSignals:
    @pytest.fixture(scope="class")
    def large(self) -> Fixture:
        return generate_fixture(
            FixtureSizes(users=60, articles=60, impressions=400, candidates=10, cohorts=3), seed=42
        )

    @pytest.fixture(scope="class")
    def tables(self, large: Fixture) -> dict:
        model = fit_tfidf(large.catalog)
        return {
            "tfidf": TfidfLearner("tfidf", model).score_all(large.behaviors),
            "tfidf_max": TfidfLearner("tfidf_max", model, Aggregation.MAX).score_all(large.behaviors),
            "collab": large.collab_scores,
        }

    def _auc(self, tables: dict, name: str, large: Fixture) -> float:
        value = evaluate(tables[name], large.behaviors).mean(Metric.AUC)
        assert value is not None
        return value

    def test_each_signal_informative(self, tables: dict, large: Fixture) -> None:
        assert self._auc(tables, "tfidf", large) > 0.55
        assert self._auc(tables, "collab", large) > 0.55

    def test_diverse_pair_gains_more_than_similar_pair(self, tables: dict, large: Fixture) -> None:
        def gain(a: str, b: str) -> float:
            best = sweep_weights(tables, [a, b], large.behaviors, Metric.AUC, step=0.1).value
            return best - max(self._auc(tables, a, large), self._auc(tables, b, large))

        diverse = gain("tfidf", "collab")
        similar = gain("tfidf", "tfidf_max")
        assert diverse > 0.0
        assert similar >= -1e-12
        assert similar < 0.01
        assert diverse > similar
