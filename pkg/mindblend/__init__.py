from mindblend.pipeline import (
    CombineResult,
    ComparisonResult,
    EvaluateResult,
    Experiment,
    ScoreResult,
)

__all__ = ["Experiment", "ScoreResult", "CombineResult", "EvaluateResult", "ComparisonResult"]
