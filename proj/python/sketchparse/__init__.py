"""Sketch-based semantic parsing: question -> logical form."""

from ._core import (
    Error,
    System,
    crf_log_partition,
    generate,
    inspect,
    load_jsonl,
    normalize_losses,
    parse_logical_form,
    save_jsonl,
    split,
    synthetic_classes,
    tokenize,
    viterbi,
)

__all__ = [
    "Error",
    "System",
    "crf_log_partition",
    "generate",
    "inspect",
    "load_jsonl",
    "normalize_losses",
    "parse_logical_form",
    "save_jsonl",
    "split",
    "synthetic_classes",
    "tokenize",
    "viterbi",
]
