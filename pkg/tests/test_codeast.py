"""Analyzer tests: statement/identifier extraction, round-tripping, and
fresh-name generation on complete and incomplete inputs."""

from random import Random

from hypothesis import given, settings
from hypothesis import strategies as st

from advmia.codeast import (
    DENYLIST,
    after_definition,
    analyze,
    body_insertion,
    fresh_identifier,
    statement_anchors,
)


def test_basic_function():
    src = "def add(a, b):\n    c = a + b\n    return c"
    facts = analyze(src)
    assert facts.variables == ["a", "b", "c"]
    assert facts.methods == ["add"]
    assert facts.statements == [1, 2]
    assert facts.headers == [0]
    assert facts.var_first_line == {"a": 0, "b": 0, "c": 1}


def test_empty_input():
    facts = analyze("")
    assert facts.variables == []
    assert facts.methods == []
    assert facts.statements == []


def test_first_definition_wins():
    facts = analyze("x = 1\nx = 2")
    assert facts.variables == ["x"]
    assert facts.var_first_line["x"] == 0


def test_loop_targets_and_augmented_assignment():
    src = "for i, j in pairs:\n    total += i\n"
    facts = analyze(src)
    assert "i" in facts.variables and "j" in facts.variables
    assert "total" in facts.variables
    assert facts.var_first_line["i"] == 0


def test_docstring_lines_are_not_statements():
    src = 'def f():\n    """Doc line one.\n    x = fake\n    """\n    y = 1'
    facts = analyze(src)
    assert 2 not in facts.statements  # inside the docstring
    assert "x" not in facts.variables
    assert "y" in facts.variables
    # the docstring opener itself is an ordinary expression statement
    assert 1 in facts.statements


def test_multiline_statement_grouping():
    src = "x = foo(1,\n        2)\ny = 3"
    facts = analyze(src)
    assert facts.statements == [0, 2]
    assert facts.logical_end[0] == 1


def test_continuation_backslash():
    src = "x = 1 + \\\n    2\ny = 4"
    facts = analyze(src)
    assert facts.statements == [0, 2]
    assert facts.logical_end[0] == 1


def test_decorators_are_neither_statements_nor_headers():
    src = "@wrap\ndef f():\n    pass"
    facts = analyze(src)
    assert 0 not in facts.statements
    assert 0 not in facts.headers
    assert facts.statements == [2]


def test_one_line_def_does_not_record_params():
    facts = analyze("def f(a): return a")
    # renaming-after-definition for `a` would land outside the function
    assert "a" not in facts.variables
    assert "f" in facts.methods


def test_attribute_and_subscript_targets_excluded():
    facts = analyze("obj.attr = 1\nitems[0] = 2\nplain = 3")
    assert facts.variables == ["plain"]


def test_comments_and_strings_masked():
    src = 'msg = "hidden = 1"  # shadow = 2\n'
    facts = analyze(src)
    assert facts.variables == ["msg"]
    assert "hidden" not in facts.ident_tokens
    assert "shadow" not in facts.ident_tokens


def test_round_trip_examples():
    for src in (
        "def f():\n\tx = 1\n\treturn x",
        "a = 1\r\nb = 2",
        "  leading\n",
        "",
        "x = '''multi\nline'''\ny = 2",
    ):
        assert analyze(src).reconstruct() == src


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=400))
def test_round_trip_property(src):
    facts = analyze(src)
    assert facts.reconstruct() == src


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=400))
def test_analyze_total(src):
    facts = analyze(src)
    for i in facts.statements:
        assert 0 <= i < len(facts.lines)
    for name in facts.var_first_line:
        assert name in facts.variables


def test_fresh_identifier_replays_seeded_draw():
    facts = analyze("c = a + b")
    seed = 7
    expected = f"c_{Random(seed).randint(1000, 9999)}"
    assert fresh_identifier(facts, "c", seed) == expected


def test_fresh_identifier_no_collisions_possible():
    facts = analyze("pass")
    seed = 11
    assert fresh_identifier(facts, "v", seed) == f"v_{Random(seed).randint(1000, 9999)}"


def test_fresh_identifier_redraws_on_collision():
    seed = 13
    rng = Random(seed)
    first, second = rng.randint(1000, 9999), rng.randint(1000, 9999)
    facts = analyze(f"x_{first} = 1")
    assert fresh_identifier(facts, "x", seed) == f"x_{second}"


def test_fresh_identifier_never_a_source_token():
    src = "def run(data):\n    data_2 = data\n    return data_2"
    facts = analyze(src)
    for seed in range(20):
        name = fresh_identifier(facts, "data", seed)
        assert name not in facts.ident_tokens
        assert name not in DENYLIST


def test_body_insertion_uses_body_indent():
    facts = analyze("def f():\n    x = 1")
    pos, lead = body_insertion(facts, 0)
    assert (pos, lead) == (1, "    ")


def test_body_insertion_header_at_eof():
    facts = analyze("if cond:")
    pos, lead = body_insertion(facts, 0)
    assert pos == 1
    assert lead == "    "


def test_after_definition_multiline_statement():
    facts = analyze("x = (1 +\n     2)\ny = 3")
    pos, lead = after_definition(facts, 0)
    assert pos == 2  # past the whole logical statement
    assert lead == ""


def test_after_definition_for_header_goes_inside_body():
    facts = analyze("for i in range(3):\n    use(i)")
    pos, lead = after_definition(facts, 0)
    assert pos == 1
    assert lead == "    "


def test_statement_anchors_carry_indentation():
    facts = analyze("def f():\n    a = 1\nb = 2")
    assert statement_anchors(facts) == [(1, "    "), (2, "")]
