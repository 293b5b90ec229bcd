"""Model/query/fact text formats, JSON reports and the command line."""
from .parser import (
    Model,
    ParseError,
    format_facts,
    format_model,
    format_query,
    parse_constant,
    parse_effect,
    parse_fact,
    parse_facts,
    parse_model,
    parse_queries,
    parse_query,
)
from .report import ContainmentResult, Report, digest

__all__ = [
    "ContainmentResult",
    "Report",
    "digest",
    "Model",
    "ParseError",
    "format_facts",
    "format_model",
    "format_query",
    "parse_constant",
    "parse_effect",
    "parse_fact",
    "parse_facts",
    "parse_model",
    "parse_queries",
    "parse_query",
]
