"""
tests/unit/test_predictions.py — prediction file writer and reader.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from exceptions import AlignmentError, ParseError
from mindblend.dataset import BehaviorSet
from mindblend.ensemble import RankedList, rank_order
from mindblend.predictions import (
    looks_like_predictions,
    read_predictions,
    serialize_predictions,
    write_predictions,
)
from tests.factories import behaviors, impression


@pytest.fixture()
def data() -> BehaviorSet:
    return behaviors(
        impression("1", [("N1", 1), ("N2", 0)]),
        impression("2", [("N3", 0), ("N4", 0), ("N5", 1)]),
    )


def _ranked(data: BehaviorSet) -> list[RankedList]:
    return [
        rank_order("1", {"N1": 0.2, "N2": 0.8}),
        rank_order("2", {"N3": 0.5, "N4": 0.1, "N5": 0.9}),
    ]


class TestSerialize:
    def test_ranks_follow_candidate_order(self, data: BehaviorSet) -> None:
        assert serialize_predictions(_ranked(data), data) == "1 [2,1]\n2 [2,3,1]\n"

    def test_two_candidate_example(self) -> None:
        data = behaviors(impression("1", [("A", 1), ("B", 0)]))
        assert serialize_predictions([rank_order("1", {"A": 0.9, "B": 0.1})], data) == "1 [1,2]\n"

    def test_misaligned_refused(self, data: BehaviorSet) -> None:
        with pytest.raises(AlignmentError):
            serialize_predictions(_ranked(data)[:1], data)

    def test_write_is_atomic_target(self, data: BehaviorSet, tmp_path: Path) -> None:
        path = write_predictions(_ranked(data), data, tmp_path / "out" / "prediction.txt")
        assert path.read_text(encoding="utf-8") == "1 [2,1]\n2 [2,3,1]\n"
        assert [p.name for p in path.parent.iterdir()] == ["prediction.txt"]


class TestRead:
    def _write(self, tmp_path: Path, text: str) -> Path:
        path = tmp_path / "prediction.txt"
        path.write_text(text, encoding="utf-8")
        return path

    def test_reads_back_order(self, data: BehaviorSet, tmp_path: Path) -> None:
        ranked = read_predictions(self._write(tmp_path, "1 [2,1]\n2 [2,3,1]\n"), data)
        assert ranked[0].articles == ("N2", "N1")
        assert ranked[1].articles == ("N5", "N3", "N4")
        assert ranked[1].scores == (-1.0, -2.0, -3.0)

    def test_truncated(self, data: BehaviorSet, tmp_path: Path) -> None:
        with pytest.raises(AlignmentError) as exc:
            read_predictions(self._write(tmp_path, "1 [2,1]\n"), data)
        assert exc.value.position == 2
        assert "<end of file>" in str(exc.value)

    def test_id_mismatch(self, data: BehaviorSet, tmp_path: Path) -> None:
        with pytest.raises(AlignmentError, match="line 1"):
            read_predictions(self._write(tmp_path, "2 [2,3,1]\n1 [2,1]\n"), data)

    def test_extra_line(self, data: BehaviorSet, tmp_path: Path) -> None:
        with pytest.raises(AlignmentError) as exc:
            read_predictions(self._write(tmp_path, "1 [2,1]\n2 [2,3,1]\n3 [1]\n"), data)
        assert exc.value.position == 3

    @pytest.mark.parametrize("line", ["1 2,1", "1 [2, 1]", "1 []", "[2,1]"])
    def test_malformed(self, data: BehaviorSet, tmp_path: Path, line: str) -> None:
        with pytest.raises(ParseError):
            read_predictions(self._write(tmp_path, f"{line}\n2 [2,3,1]\n"), data)

    @pytest.mark.parametrize("ranks", ["[1,1]", "[1,3]", "[1]", "[0,1]"])
    def test_not_a_permutation(self, data: BehaviorSet, tmp_path: Path, ranks: str) -> None:
        with pytest.raises(ParseError, match="permutation"):
            read_predictions(self._write(tmp_path, f"1 {ranks}\n2 [2,3,1]\n"), data)

    def test_blank_lines_ignored(self, data: BehaviorSet, tmp_path: Path) -> None:
        ranked = read_predictions(self._write(tmp_path, "\n1 [1,2]\n\n2 [1,2,3]\n"), data)
        assert len(ranked) == 2


class TestSniff:
    def test_prediction_file(self, tmp_path: Path) -> None:
        path = tmp_path / "p.txt"
        path.write_text("\n1 [3,1,2]\n", encoding="utf-8")
        assert looks_like_predictions(path)

    def test_score_file(self, tmp_path: Path) -> None:
        path = tmp_path / "s.tsv"
        path.write_text("1\tN1\t0.5\n", encoding="utf-8")
        assert not looks_like_predictions(path)

    def test_empty_file(self, tmp_path: Path) -> None:
        path = tmp_path / "e.txt"
        path.write_text("", encoding="utf-8")
        assert not looks_like_predictions(path)
