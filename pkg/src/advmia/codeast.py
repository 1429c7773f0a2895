"""Indentation-aware, parse-tolerant analysis of code prefixes.

Inputs are often syntactically incomplete (a prefix cut mid-program), so a
full grammar parser is useless here.  Instead a single line scanner tracks
string/bracket/continuation state and recovers just what the perturbation
engine needs: statement boundaries, block headers, identifier definitions,
and safe insertion points.  ``analyze`` is total: no input raises.
"""

from __future__ import annotations

import keyword
import re
from dataclasses import dataclass, field
from random import Random

# Reserved words plus builtins whose rebinding or renaming would change
# program behavior.
BUILTIN_DENYLIST = frozenset(
    {"print", "len", "range", "input", "int", "str", "list", "dict", "set", "sum", "min", "max"}
)
DENYLIST = frozenset(keyword.kwlist) | BUILTIN_DENYLIST

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_DEF_RE = re.compile(r"^\s*(?:async\s+)?def\s+([A-Za-z_][A-Za-z0-9_]*)\s*\(")
_FOR_RE = re.compile(r"^\s*(?:async\s+)?for\s+(.+?)\s+in\s")
_ASSIGN_RE = re.compile(
    r"^\s*([A-Za-z_][A-Za-z0-9_]*(?:\s*,\s*[A-Za-z_][A-Za-z0-9_]*)*)\s*"
    r"(=|\+=|-=|\*=|/=|//=|\*\*=|%=|&=|\|=|\^=|>>=|<<=|@=)(?!=)"
)
_ANNOTATED_ASSIGN_RE = re.compile(
    r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*[^=]+?=(?!=)"
)
_STRING_PREFIX_CHARS = frozenset("rbufRBUF")


@dataclass
class Line:
    """One physical source line, split into leading whitespace and content."""

    text: str
    indent: int
    lead: str

    @property
    def raw(self) -> str:
        return self.lead + self.text


@dataclass
class CodeFacts:
    """Everything the transform engine needs to know about a prefix."""

    source: str
    lines: list[Line]
    statements: list[int]
    headers: list[int]
    variables: list[str]
    methods: list[str]
    var_first_line: dict[str, int]
    ident_tokens: set[str]
    logical_end: dict[int, int]
    code_spans: list[list[tuple[int, int]]]
    header_set: frozenset[int] = field(init=False)

    def __post_init__(self):
        self.header_set = frozenset(self.headers)

    def reconstruct(self) -> str:
        """Rebuild the original text byte-for-byte."""
        return "\n".join(line.raw for line in self.lines)


def _split_lead(raw: str) -> Line:
    stripped = raw.lstrip(" \t")
    lead = raw[: len(raw) - len(stripped)]
    return Line(text=stripped, indent=len(lead), lead=lead)


def _string_prefix_start(raw: str, quote_pos: int) -> int:
    """Column where a string literal starts, including r/b/f/u prefix letters."""
    k = quote_pos
    while k > 0 and quote_pos - k < 2 and raw[k - 1] in _STRING_PREFIX_CHARS:
        k -= 1
    if k < quote_pos and (k == 0 or not (raw[k - 1].isalnum() or raw[k - 1] == "_")):
        return k
    return quote_pos


def _scan(raw_lines: list[str]):
    """One pass over physical lines tracking string/bracket/continuation state.

    Returns per-line start states, code spans (columns outside strings and
    comments), and the last code character on each line.
    """
    n = len(raw_lines)
    start_states = []
    code_spans: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    last_code: list[str] = [""] * n
    opened_string = [False] * n  # line starts a string literal in code position

    str_delim: str | None = None
    depth = 0
    cont = False

    for li, raw in enumerate(raw_lines):
        start_states.append((str_delim, depth, cont))
        cont = False
        spans = code_spans[li]
        length = len(raw)
        i = 0
        span_start = None if str_delim else 0
        line_last = ""

        while i < length:
            if str_delim is not None:
                if raw[i] == "\\":
                    i += 2
                    continue
                if raw.startswith(str_delim, i):
                    i += len(str_delim)
                    str_delim = None
                    line_last = raw[i - 1]
                    span_start = i
                    continue
                i += 1
                continue

            c = raw[i]
            if c == "#":
                if span_start is not None and i > span_start:
                    spans.append((span_start, i))
                span_start = None
                break
            if c in "\"'":
                if raw.startswith(c * 3, i):
                    delim = c * 3
                else:
                    delim = c
                pstart = _string_prefix_start(raw, i)
                if span_start is not None and pstart > span_start:
                    spans.append((span_start, pstart))
                span_start = None
                str_delim = delim
                opened_string[li] = True
                i += len(delim)
                continue
            if not c.isspace():
                line_last = c
            if c in "([{":
                depth += 1
            elif c in ")]}":
                depth = max(0, depth - 1)
            elif c == "\\" and i == length - 1:
                cont = True
            i += 1

        if span_start is not None and length > span_start:
            spans.append((span_start, length))
        # A single-quoted string left open at end of line cannot continue;
        # close it so one bad line does not poison the rest of the prefix.
        if str_delim is not None and len(str_delim) == 1:
            str_delim = None
        last_code[li] = line_last

    start_states.append((str_delim, depth, cont))
    return start_states, code_spans, last_code, opened_string


def _masked(raw: str, spans: list[tuple[int, int]]) -> str:
    """The line with everything outside code spans blanked out."""
    out = [" "] * len(raw)
    for s, e in spans:
        out[s:e] = raw[s:e]
    return "".join(out)


def _split_top_commas(text: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, c in enumerate(text):
        if c in "([{":
            depth += 1
        elif c in ")]}":
            depth = max(0, depth - 1)
        elif c == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def _def_params(code: str) -> list[str]:
    open_pos = code.find("(")
    if open_pos < 0:
        return []
    depth = 0
    close_pos = -1
    for i in range(open_pos, len(code)):
        if code[i] in "([{":
            depth += 1
        elif code[i] in ")]}":
            depth -= 1
            if depth == 0:
                close_pos = i
                break
    inner = code[open_pos + 1 : close_pos] if close_pos > 0 else code[open_pos + 1 :]
    names = []
    for part in _split_top_commas(inner):
        part = part.strip().lstrip("*").strip()
        m = _IDENT_RE.match(part)
        if m and m.group(0) not in keyword.kwlist:
            names.append(m.group(0))
    return names


def _chain_assign_targets(code: str) -> list[str]:
    """Targets of plain/augmented assignments, following a = b = ... chains."""
    names: list[str] = []
    rest = code
    while True:
        m = _ASSIGN_RE.match(rest)
        if m is None:
            m2 = _ANNOTATED_ASSIGN_RE.match(rest)
            if m2 is not None:
                names.append(m2.group(1))
            break
        for name in m.group(1).split(","):
            name = name.strip()
            if name and name not in keyword.kwlist:
                names.append(name)
        if m.group(2) != "=":
            break
        rest = rest[m.end() :]
    return names


def analyze(source: str) -> CodeFacts:
    """Extract statements, headers, and identifier definitions from a prefix."""
    raw_lines = source.split("\n")
    lines = [_split_lead(raw) for raw in raw_lines]
    start_states, code_spans, last_code, opened_string = _scan(raw_lines)

    n = len(raw_lines)
    statements: list[int] = []
    headers: list[int] = []
    logical_end: dict[int, int] = {}
    variables: list[str] = []
    methods: list[str] = []
    var_first_line: dict[str, int] = {}
    ident_tokens: set[str] = set()

    def note_var(name: str, line_i: int):
        if name not in var_first_line:
            var_first_line[name] = line_i
            variables.append(name)

    for li in range(n):
        for s, e in code_spans[li]:
            ident_tokens.update(_IDENT_RE.findall(raw_lines[li][s:e]))

    li = 0
    while li < n:
        str_delim, depth, cont = start_states[li]
        has_code = opened_string[li] or any(
            raw_lines[li][s:e].strip() for s, e in code_spans[li]
        )
        if str_delim is not None or depth > 0 or cont or not has_code:
            li += 1
            continue

        end = li
        while end + 1 <= n - 1:
            nd, ndepth, ncont = start_states[end + 1]
            if nd is None and ndepth == 0 and not ncont:
                break
            end += 1
        logical_end[li] = end

        final = ""
        for j in range(li, end + 1):
            if last_code[j]:
                final = last_code[j]
        code = " ".join(_masked(raw_lines[j], code_spans[j]) for j in range(li, end + 1))
        code = code.strip()

        is_header = final == ":"
        is_decorator = code.startswith("@")
        if is_header:
            headers.append(li)
        elif not is_decorator:
            statements.append(li)

        def_match = _DEF_RE.match(code)
        if def_match:
            name = def_match.group(1)
            if name not in methods:
                methods.append(name)
            if is_header:
                for pname in _def_params(code):
                    note_var(pname, li)
        elif is_header:
            for_match = _FOR_RE.match(code)
            if for_match:
                targets = for_match.group(1).strip().strip("()")
                for part in _split_top_commas(targets):
                    part = part.strip().lstrip("*").strip()
                    if _IDENT_RE.fullmatch(part) and part not in keyword.kwlist:
                        note_var(part, li)
        else:
            for name in _chain_assign_targets(code):
                note_var(name, li)

        li = end + 1

    return CodeFacts(
        source=source,
        lines=lines,
        statements=statements,
        headers=headers,
        variables=variables,
        methods=methods,
        var_first_line=var_first_line,
        ident_tokens=ident_tokens,
        logical_end=logical_end,
        code_spans=code_spans,
    )


def fresh_identifier(facts: CodeFacts, base: str, seed: int) -> str:
    """A new identifier ``base_<n>`` colliding with nothing in the source.

    Draws n uniformly from [1000, 9999] until free; deterministic given
    (facts, base, seed).
    """
    rng = Random(seed)
    taken = facts.ident_tokens | set(facts.variables) | set(facts.methods) | DENYLIST
    for attempt in range(100_000):
        lo, hi = (1000, 9999) if attempt < 50_000 else (10_000, 10_000_000)
        candidate = f"{base}_{rng.randint(lo, hi)}"
        if candidate not in taken:
            return candidate
    raise RuntimeError("identifier space exhausted")  # pragma: no cover


def body_insertion(facts: CodeFacts, header_i: int) -> tuple[int, str]:
    """Insertion point and leading whitespace for the first line of the
    suite opened by the block header at ``header_i``."""
    end = facts.logical_end.get(header_i, header_i)
    header_lead = facts.lines[header_i].lead
    pos = end + 1
    for j in range(pos, len(facts.lines)):
        line = facts.lines[j]
        if not line.text.strip() or line.text.lstrip().startswith("#"):
            continue
        if len(line.lead) > len(header_lead):
            return pos, line.lead
        break
    return pos, header_lead + "    "


def after_definition(facts: CodeFacts, line_i: int) -> tuple[int, str]:
    """Insertion point immediately after the statement starting at
    ``line_i``, staying inside the same block.  If the line is a block
    header (def/for/...), the point is the top of its suite instead."""
    if line_i in facts.header_set:
        return body_insertion(facts, line_i)
    end = facts.logical_end.get(line_i, line_i)
    return end + 1, facts.lines[line_i].lead


def statement_anchors(facts: CodeFacts) -> list[tuple[int, str]]:
    """Positions where a new statement or block can be inserted without
    splitting a header from its suite: directly before each existing
    simple statement, at that statement's indentation."""
    return [(i, facts.lines[i].lead) for i in facts.statements]
