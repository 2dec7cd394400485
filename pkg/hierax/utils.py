import logging
from typing import Iterable, List, Optional

from rapidfuzz import process
from rapidfuzz.fuzz import ratio


logger = logging.getLogger(__name__)

SUGGESTION_THRESHOLD = 60  # Similarity score below which no suggestion is offered


def suggest_symbol(name: str, candidates: Iterable[str], threshold: int = SUGGESTION_THRESHOLD) -> Optional[str]:
    """
    Finds the declared symbol closest to a misspelled one.

    Args:
        name (str): The unknown symbol.
        candidates (Iterable[str]): Declared symbols.
        threshold (int): Minimum similarity score (0-100).

    Returns:
        str or None: The best candidate, or None if nothing is similar enough.

    Example:
        >>> suggest_symbol("hh", ["f", "h", "g"])
        'h'
        >>> suggest_symbol("zzz", ["f", "h"]) is None
        True
    """
    candidates = list(candidates)
    if not candidates:
        return None
    match = process.extractOne(name, candidates, scorer=ratio, score_cutoff=threshold)
    if match is None:
        return None
    logger.debug("Suggestion for '%s': '%s' (score %.2f)", name, match[0], match[1])
    return match[0]


def format_location(line: Optional[int], column: Optional[int]) -> str:
    """
    Example:
        >>> format_location(3, 14)
        'line 3, column 14'
        >>> format_location(None, None)
        ''
    """
    if line is None:
        return ""
    return f"line {line}, column {column}"


def dedupe(items: Iterable) -> List:
    """Drops repeated items and keeps the first occurrence of each."""
    return list(dict.fromkeys(items))
