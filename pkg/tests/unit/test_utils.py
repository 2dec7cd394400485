import pytest

from hierax.utils import dedupe, format_location, suggest_symbol


@pytest.mark.parametrize(
    "name, candidates, expected",
    [
        ("hh", ["f", "h", "g"], "h"),
        ("fun", ["fun1", "gun2"], "fun1"),
        ("zzz", ["f", "h"], None),
        ("f", [], None),
    ],
    ids=["doubled letter", "prefix", "nothing close", "no candidates"],
)
def test_suggest_symbol(name, candidates, expected):
    assert suggest_symbol(name, candidates) == expected


def test_suggestion_threshold():
    # ratio("ab", "ac") is 50
    assert suggest_symbol("ab", ["ac"]) is None
    assert suggest_symbol("ab", ["ac"], threshold=50) == "ac"


def test_format_location():
    assert format_location(3, 14) == "line 3, column 14"
    assert format_location(None, None) == ""


def test_dedupe_keeps_first_occurrence():
    assert dedupe(["b", "a", "b", "c", "a"]) == ["b", "a", "c"]
