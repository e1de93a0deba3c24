"""Math-solution evaluation toolkit: answer grading, clustering, majority
voting and verifier-based re-ranking, backed by the C++ core."""

from mathsel._core import (
    DECIMAL_TOLERANCE,
    DEFAULT_MARGIN,
    AnswerExpr,
    AnswerKind,
    ScoringError,
    build_prompt,
    cls_margin_loss,
    cls_xent_loss,
    cluster,
    combined_loss,
    extract_answer,
    grade,
    grade_parsed,
    majk_at_n,
    mle_loss,
    parse_answer,
    pass_at_n,
    s_cls,
    select,
    seq_margin_loss,
)

__version__ = "0.1.0"

__all__ = [
    "DECIMAL_TOLERANCE",
    "DEFAULT_MARGIN",
    "AnswerExpr",
    "AnswerKind",
    "ScoringError",
    "build_prompt",
    "cls_margin_loss",
    "cls_xent_loss",
    "cluster",
    "combined_loss",
    "extract_answer",
    "grade",
    "grade_parsed",
    "majk_at_n",
    "mle_loss",
    "parse_answer",
    "pass_at_n",
    "s_cls",
    "select",
    "seq_margin_loss",
]
