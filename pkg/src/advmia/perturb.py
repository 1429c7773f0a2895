"""Semantics-preserving code transformations and the 11-variant generator.

Five transform families, each parameterized by a small "form" index:

* IDC  -- dead conditional branch (statically false predicate)
* IRV  -- redundant, never-used variable declaration
* VR   -- consistent whole-token rename of a variable or method
* IDP  -- debug print insertion
* IDL  -- dead loop (header can never iterate)

Each input yields exactly 11 variants in a fixed slot layout
(2 IDC, 2 IRV, 2 VR, 2 IDP, 3 IDL), every variant carrying exactly one
transform applied to the original prefix.  Degenerate inputs (no
statements, no identifiers) fall back to total forms so the cardinality
contract always holds.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from random import Random

from .codeast import (
    DENYLIST,
    CodeFacts,
    after_definition,
    analyze,
    body_insertion,
    fresh_identifier,
    statement_anchors,
)
from .corpus import Sample
from .seeding import derive_seed

FAMILIES = ("IDC", "IRV", "VR", "IDP", "IDL")
FORM_COUNTS = {"IDC": 4, "IRV": 2, "VR": 2, "IDP": 2, "IDL": 3}

# Slot layout of the 11 variants: two each of IDC/IRV/VR/IDP, three IDL.
SLOT_FAMILIES = ("IDC", "IDC", "IRV", "IRV", "VR", "VR", "IDP", "IDP", "IDL", "IDL", "IDL")
FAMILY_SLOTS = {
    "IDC": (0, 1),
    "IRV": (2, 3),
    "VR": (4, 5),
    "IDP": (6, 7),
    "IDL": (8, 9, 10),
}

FALSE_PREDICATES = ("False", "1 == 2", '"a" == "b"', "0 > 1")
DEAD_LOOP_HEADERS = ("while False:", "while 1 > 2:", "for _ in []:")

# Statements whose text cannot be copied into a dead branch without risking
# a compile-time error or a scope directive (e.g. `return` at module level,
# `global` changing name resolution even when unexecuted).
_UNCOPYABLE_TOKENS = frozenset(
    {"return", "yield", "break", "continue", "global", "nonlocal", "await"}
)
_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class TransformKind:
    kind: str
    form: int

    def validate(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown transform family {self.kind!r}")
        if not 0 <= self.form < FORM_COUNTS[self.kind]:
            raise ValueError(f"form {self.form} out of range for {self.kind}")


@dataclass(frozen=True)
class PerturbedVariant:
    parent_id: str
    index: int
    transform: TransformKind
    text: str


@dataclass
class _Applied:
    text: str
    form: int
    fallback: bool = False
    renamed: str | None = None


def _insert_lines(source: str, pos: int, new_lines: list[str]) -> str:
    lines = source.split("\n")
    return "\n".join(lines[:pos] + new_lines + lines[pos:])


def _pick_anchor(facts: CodeFacts, rng: Random) -> tuple[int, str]:
    anchors = statement_anchors(facts)
    if not anchors:
        return 0, ""
    return rng.choice(anchors)


def _copy_candidates(facts: CodeFacts) -> list[int]:
    """Statements safe to duplicate verbatim inside a dead branch."""
    out = []
    for i in facts.statements:
        if facts.logical_end.get(i, i) != i:
            continue  # multi-line statements cannot be copied as one line
        body = facts.lines[i].text.strip()
        if not body:
            continue
        tokens = set(_TOKEN_RE.findall(body))
        if tokens & _UNCOPYABLE_TOKENS:
            continue
        out.append(i)
    return out


def _idc(source: str, form: int, seed: int) -> _Applied:
    facts = analyze(source)
    rng = Random(seed)
    candidates = _copy_candidates(facts)
    effective = form
    fallback = False
    if form in (2, 3) and not candidates:
        effective = 0
        fallback = True
    predicate = FALSE_PREDICATES[effective]
    if effective in (0, 1):
        fresh = fresh_identifier(facts, "tmp", derive_seed(seed, "fresh"))
        body = f"{fresh} = {rng.randint(0, 99)}"
    else:
        body = facts.lines[rng.choice(candidates)].text.strip()
    pos, lead = _pick_anchor(facts, rng)
    block = [f"{lead}if {predicate}:", f"{lead}    {body}"]
    return _Applied(_insert_lines(source, pos, block), effective, fallback)


def _irv(source: str, form: int, seed: int) -> _Applied:
    facts = analyze(source)
    rng = Random(seed)
    effective = form
    fallback = False
    if form == 0 and not facts.variables:
        effective = 1
        fallback = True
    if effective == 0:
        var = rng.choice(facts.variables)
        fresh = fresh_identifier(facts, var, derive_seed(seed, "fresh"))
        pos, lead = after_definition(facts, facts.var_first_line[var])
        line = f"{lead}{fresh} = {var}"
    else:
        fresh = fresh_identifier(facts, "tmp", derive_seed(seed, "fresh"))
        constant = rng.randint(0, 99)
        pos, lead = _pick_anchor(facts, rng)
        line = f"{lead}{fresh} = {constant}"
    return _Applied(_insert_lines(source, pos, [line]), effective, fallback)


def _rename_token(source: str, facts: CodeFacts, old: str, new: str) -> str:
    """Replace every whole-token occurrence of ``old`` outside string
    literals and comments."""
    pattern = re.compile(rf"(?<![A-Za-z0-9_]){re.escape(old)}(?![A-Za-z0-9_])")
    out_lines = []
    for li, line in enumerate(facts.lines):
        raw = line.raw
        spans = facts.code_spans[li]
        if not spans:
            out_lines.append(raw)
            continue
        pieces = []
        cursor = 0
        for s, e in spans:
            pieces.append(raw[cursor:s])
            pieces.append(pattern.sub(new, raw[s:e]))
            cursor = e
        pieces.append(raw[cursor:])
        out_lines.append("".join(pieces))
    return "\n".join(out_lines)


def _vr(source: str, form: int, seed: int, exclude: frozenset[str] = frozenset()) -> _Applied:
    facts = analyze(source)
    rng = Random(seed)
    variables = [v for v in facts.variables if v not in DENYLIST]
    methods = [m for m in facts.methods if m not in DENYLIST]
    primary, secondary = (variables, methods) if form == 0 else (methods, variables)
    effective = form
    fallback = False
    pool = primary
    if not pool and secondary:
        pool = secondary
        fallback = True
        effective = 1 - form
    if pool:
        narrowed = [name for name in pool if name not in exclude]
        if narrowed:
            pool = narrowed
        old = rng.choice(pool)
        fresh = fresh_identifier(facts, old, derive_seed(seed, "fresh"))
        return _Applied(_rename_token(source, facts, old, fresh), effective, fallback, renamed=old)
    # No identifiers at all: declare a dummy and "rename" it on insertion so
    # the 11-variant contract holds.
    fresh = fresh_identifier(facts, "tmp", derive_seed(seed, "fresh"))
    anchors = statement_anchors(facts)
    pos, lead = anchors[0] if anchors else (0, "")
    text = _insert_lines(source, pos, [f"{lead}{fresh} = 0"])
    return _Applied(text, form, fallback=True, renamed=fresh)


def _idp(source: str, form: int, seed: int) -> _Applied:
    facts = analyze(source)
    rng = Random(seed)
    effective = form
    fallback = False
    if form == 1 and not facts.variables:
        effective = 0
        fallback = True
    if effective == 1:
        var = rng.choice(facts.variables)
        pos, lead = after_definition(facts, facts.var_first_line[var])
        line = f"{lead}print({var})"
    else:
        method_header = None
        for i in facts.headers:
            if re.match(r"\s*(?:async\s+)?def\s", facts.lines[i].raw):
                method_header = i
                break
        if method_header is not None:
            name = facts.methods[0] if facts.methods else "method"
            pos, lead = body_insertion(facts, method_header)
            line = f'{lead}print("enter {name}")'
        else:
            pos, lead = 0, ""
            line = 'print("trace")'
    return _Applied(_insert_lines(source, pos, [line]), effective, fallback)


def _idl(source: str, form: int, seed: int) -> _Applied:
    facts = analyze(source)
    rng = Random(seed)
    header = DEAD_LOOP_HEADERS[form]
    fresh = fresh_identifier(facts, "tmp", derive_seed(seed, "fresh"))
    bodies = ['print("idle")', "pass", f"{fresh} = {rng.randint(0, 99)}"]
    body = rng.choice(bodies)
    pos, lead = _pick_anchor(facts, rng)
    block = [f"{lead}{header}", f"{lead}    {body}"]
    return _Applied(_insert_lines(source, pos, block), form)


_APPLIERS = {"IDC": _idc, "IRV": _irv, "VR": _vr, "IDP": _idp, "IDL": _idl}


def apply_idc(source: str, form: int, seed: int) -> str:
    """Insert a conditional branch whose predicate is statically false."""
    return _idc(source, form, seed).text


def apply_irv(source: str, form: int, seed: int) -> str:
    """Insert a variable declaration that is never used afterwards."""
    return _irv(source, form, seed).text


def apply_vr(source: str, form: int, seed: int) -> str:
    """Rename every whole-token occurrence of one variable (form 0) or
    method (form 1) to a fresh suffixed identifier."""
    return _vr(source, form, seed).text


def apply_idp(source: str, form: int, seed: int) -> str:
    """Insert a debug print at a method-body start (form 0) or after a
    variable definition (form 1)."""
    return _idp(source, form, seed).text


def apply_idl(source: str, form: int, seed: int) -> str:
    """Insert a loop whose condition is statically false."""
    return _idl(source, form, seed).text


def generate_variants_text(prefix: str, parent_id: str, seed: int) -> list[PerturbedVariant]:
    """Produce the 11 single-transform variants of a prefix, in slot order."""
    idc_rng = Random(derive_seed(seed, parent_id, "idc-forms"))
    idc_forms = idc_rng.sample(range(4), 2)
    slots = [
        ("IDC", idc_forms[0]),
        ("IDC", idc_forms[1]),
        ("IRV", 0),
        ("IRV", 1),
        ("VR", 0),
        ("VR", 1),
        ("IDP", 0),
        ("IDP", 1),
        ("IDL", 0),
        ("IDL", 1),
        ("IDL", 2),
    ]
    variants = []
    renamed: set[str] = set()
    for index, (family, form) in enumerate(slots):
        slot_seed = derive_seed(seed, parent_id, "slot", index)
        if family == "VR":
            applied = _vr(prefix, form, slot_seed, exclude=frozenset(renamed))
            if applied.renamed:
                renamed.add(applied.renamed)
        else:
            applied = _APPLIERS[family](prefix, form, slot_seed)
        variants.append(
            PerturbedVariant(
                parent_id=parent_id,
                index=index,
                transform=TransformKind(family, applied.form),
                text=applied.text,
            )
        )
    return variants


def generate_variants(sample: Sample, seed: int) -> list[PerturbedVariant]:
    return generate_variants_text(sample.prefix, sample.id, seed)
