"""
Dataset issue contract.

Report-only findings produced by dataset.validate(). Issues never abort a
run; they are listed in the ValidationReport and summarised by the CLI.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional


class IssueCode(str, Enum):
    MISSING_ARTICLE = "D001_MISSING_ARTICLE"
    NO_CLICK = "D002_NO_CLICK"
    DEGENERATE_AUC = "D003_DEGENERATE_AUC"
    PLACEHOLDER = "D004_PLACEHOLDER"


class Severity(str, Enum):
    ERROR = "error"      # impression excluded from rank metrics
    WARNING = "warning"  # informational, metrics unaffected


@dataclass(frozen=True)
class Issue:
    code: IssueCode
    impression_id: Optional[str]
    article_id: Optional[str]
    detail: str
    severity: Severity = Severity.WARNING

    def to_dict(self) -> dict[str, Any]:
        return {
            "code": self.code.value,
            "impression_id": self.impression_id,
            "article_id": self.article_id,
            "detail": self.detail,
            "severity": self.severity.value,
        }

    def __str__(self) -> str:
        where = []
        if self.impression_id is not None:
            where.append(f"impression={self.impression_id}")
        if self.article_id is not None:
            where.append(f"article={self.article_id}")
        location = " ".join(where)
        return f"[{self.severity.value.upper()}] {self.code.value} {location} {self.detail}".rstrip()


# --- Convenience constructors ---

def missing_article(impression_id: str, article_id: str, role: str) -> Issue:
    return Issue(
        code=IssueCode.MISSING_ARTICLE,
        impression_id=impression_id,
        article_id=article_id,
        detail=f"{role} id absent from catalog",
        severity=Severity.WARNING,
    )


def no_click(impression_id: str) -> Issue:
    return Issue(
        code=IssueCode.NO_CLICK,
        impression_id=impression_id,
        article_id=None,
        detail="no clicked candidate; excluded from MRR/nDCG",
        severity=Severity.ERROR,
    )


def degenerate_auc(impression_id: str, clicked: int, total: int) -> Issue:
    return Issue(
        code=IssueCode.DEGENERATE_AUC,
        impression_id=impression_id,
        article_id=None,
        detail=f"degenerate for AUC ({clicked}/{total} clicked)",
        severity=Severity.ERROR,
    )


def placeholder(article_id: str) -> Issue:
    return Issue(
        code=IssueCode.PLACEHOLDER,
        impression_id=None,
        article_id=article_id,
        detail="synthesized placeholder article with empty text",
        severity=Severity.WARNING,
    )
