"""
Prediction file: one line per impression, ranks aligned to candidate order.

    <impression_id> [<rank of candidate 1>,<rank of candidate 2>,...]

e.g. "1 [2,1,3]" means the second candidate was ranked first.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Sequence

from exceptions import AlignmentError, ParseError
from mindblend.dataset import BehaviorSet
from mindblend.ensemble import RankedList
from mindblend.io import atomic_write, read_text, split_lines
from mindblend.metrics import check_alignment

_LINE = re.compile(r"^(\S+) \[(\d+(?:,\d+)*)\]$")


def serialize_predictions(ranked: Sequence[RankedList], behaviors: BehaviorSet) -> str:
    check_alignment(ranked, behaviors)
    lines = []
    for rl, imp in zip(ranked, behaviors):
        ranks = ",".join(str(r) for r in rl.ranks_for(imp.candidate_ids))
        lines.append(f"{imp.impression_id} [{ranks}]\n")
    return "".join(lines)


def write_predictions(ranked: Sequence[RankedList], behaviors: BehaviorSet, path: Path) -> Path:
    return atomic_write(serialize_predictions(ranked, behaviors), path)


def read_predictions(path: Path | str, behaviors: BehaviorSet) -> list[RankedList]:
    """Parse a prediction file back into ranked lists.

    The ranked-list scores are -rank, so no two candidates tie.

    Raises:
        ParseError: malformed line or ranks that are not a permutation of 1..n.
        AlignmentError: impression ids or counts differ from the behaviors file.
    """
    path = Path(path)
    text, _ = read_text(path)
    lines = [line for line in split_lines(text) if line.strip()]

    ranked: list[RankedList] = []
    for position, imp in enumerate(behaviors, start=1):
        if position > len(lines):
            raise AlignmentError(position, imp.impression_id, None)
        match = _LINE.match(lines[position - 1].strip())
        if not match:
            raise ParseError(str(path), position, "expected '<impression_id> [r1,r2,...]'")
        impression_id, body = match.group(1), match.group(2)
        if impression_id != imp.impression_id:
            raise AlignmentError(position, imp.impression_id, impression_id)
        ranks = [int(r) for r in body.split(",")]
        n = len(imp.candidates)
        if sorted(ranks) != list(range(1, n + 1)):
            raise ParseError(
                str(path), position, f"ranks must be a permutation of 1..{n}, got {ranks}"
            )
        ordered = sorted(zip(ranks, imp.candidate_ids))
        ranked.append(
            RankedList(
                impression_id=impression_id,
                articles=tuple(a for _, a in ordered),
                scores=tuple(-float(r) for r, _ in ordered),
            )
        )
    if len(lines) > len(behaviors):
        extra = lines[len(behaviors)].split(" ", 1)[0]
        raise AlignmentError(len(behaviors) + 1, None, extra)
    return ranked


def looks_like_predictions(path: Path | str) -> bool:
    """True when the first non-blank line has prediction-file shape."""
    text, _ = read_text(Path(path))
    for line in split_lines(text):
        if line.strip():
            return bool(_LINE.match(line.strip()))
    return False
