"""Python interface to the xrl rule-extraction toolkit."""

import json

from . import _xrl
from ._xrl import (
    Error,
    IntegrityError,
    InvalidActionError,
    ParseError,
    PipelineConfig,
    ResolutionError,
    ResourceError,
    SchemaError,
    TrainingError,
    UnavailableError,
    ValidationError,
    collect,
    evaluate_performance,
    load_policy,
    load_predicates,
    load_replay,
    load_rules,
    make_limits,
    qm_minimize,
    question_to_sql,
    refine,
    run_cli,
    run_pipeline,
    save_replay,
    train,
    validate_sql,
)

__all__ = [
    "Error",
    "IntegrityError",
    "InvalidActionError",
    "ParseError",
    "PipelineConfig",
    "ResolutionError",
    "ResourceError",
    "SchemaError",
    "TrainingError",
    "UnavailableError",
    "ValidationError",
    "collect",
    "evaluate_performance",
    "load_policy",
    "load_predicates",
    "load_replay",
    "load_rules",
    "make_limits",
    "predicates_dict",
    "qm_minimize",
    "question_to_sql",
    "refine",
    "run_cli",
    "run_pipeline",
    "save_replay",
    "train",
    "validate_sql",
]


def predicates_dict(schema):
    """Predicate schema as a plain dict (same layout as predicates.json)."""
    return json.loads(schema.to_json())
