"""Seeded generator of small executable programs.

Each program is a self-contained script: one or two functions followed by
driver ``print`` calls on fixed inputs, so running it produces
deterministic output instantly.  The programs double as an execution
oracle for the transform engine (perturb, run, compare output) and as the
corpus for the synthetic end-to-end pipeline run.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random

from .corpus import Sample
from .seeding import derive_seed

_NOUNS = (
    "items", "values", "parts", "numbers", "scores", "weights",
    "entries", "fields", "cells", "marks", "units", "steps",
)
_VERBS = (
    "fold", "scan", "pack", "sift", "tally", "merge",
    "trim", "rank", "blend", "probe", "shift", "gauge",
)
_WORDS = (
    "oak", "elm", "fir", "ash", "yew", "ivy", "fern", "reed",
    "moss", "sage", "rue", "dill",
)


@dataclass(frozen=True)
class Program:
    id: str
    text: str
    cut_line: int  # prefix = lines[:cut_line], suffix = lines[cut_line:]

    @property
    def prefix(self) -> str:
        return "\n".join(self.text.split("\n")[: self.cut_line]).rstrip()

    @property
    def suffix(self) -> str:
        return "\n".join(self.text.split("\n")[self.cut_line :]).rstrip()


def _template_scaled_sum(rng: Random, name: str) -> str:
    noun = rng.choice(_NOUNS)
    k1, k2 = rng.randint(2, 9), rng.randint(3, 17)
    a, b, c, d = (rng.randint(1, 30) for _ in range(4))
    return (
        f"def {name}({noun}, limit):\n"
        f'    """Scale the {noun} and cap the running total."""\n'
        f"    total = 0\n"
        f"    for value in {noun}:\n"
        f"        total = total + value * {k1}\n"
        f"        if total > limit:\n"
        f"            total = total - {k2}\n"
        f"    return total\n"
        f"\n"
        f"print({name}([{a}, {b}, {c}], {d}))\n"
        f"print({name}([{c}, {a}], {b}))"
    )


def _template_join_parts(rng: Random, name: str) -> str:
    w1, w2, w3 = rng.sample(_WORDS, 3)
    sep = rng.choice(["-", "+", "/", "."])
    return (
        f"def {name}(parts, sep):\n"
        f'    """Join the non-empty parts with the separator."""\n'
        f"    kept = []\n"
        f"    for part in parts:\n"
        f"        if part:\n"
        f"            kept.append(part)\n"
        f"    joined = sep.join(kept)\n"
        f"    return joined\n"
        f"\n"
        f'print({name}(["{w1}", "", "{w2}"], "{sep}"))\n'
        f'print({name}(["{w3}"], "{sep}"))'
    )


def _template_countdown(rng: Random, name: str) -> str:
    start, step = rng.randint(12, 40), rng.randint(2, 5)
    return (
        f"def {name}(start, step):\n"
        f'    """Count down to zero, collecting each value seen."""\n'
        f"    seen = []\n"
        f"    current = start\n"
        f"    while current > 0:\n"
        f"        seen.append(current)\n"
        f"        current = current - step\n"
        f"    return seen\n"
        f"\n"
        f"print({name}({start}, {step}))"
    )


def _template_spread(rng: Random, name: str) -> str:
    noun = rng.choice(_NOUNS)
    nums = [rng.randint(-20, 60) for _ in range(5)]
    inner = ", ".join(str(v) for v in nums)
    return (
        f"def {name}({noun}):\n"
        f'    """Spread between the largest and smallest of the {noun}."""\n'
        f"    low = {noun}[0]\n"
        f"    high = {noun}[0]\n"
        f"    for value in {noun}:\n"
        f"        if value < low:\n"
        f"            low = value\n"
        f"        if value > high:\n"
        f"            high = value\n"
        f"    return high - low\n"
        f"\n"
        f"print({name}([{inner}]))"
    )


def _template_recursive_fold(rng: Random, name: str) -> str:
    depth = rng.randint(4, 8)
    return (
        f"def {name}(n):\n"
        f'    """Fold the positive integers up to n into a product."""\n'
        f"    if n <= 1:\n"
        f"        return 1\n"
        f"    return n * {name}(n - 1)\n"
        f"\n"
        f"print({name}({depth}))\n"
        f"print({name}(1))"
    )


def _template_helper_pair(rng: Random, name: str) -> str:
    helper = f"{rng.choice(_VERBS)}_one_{name.rsplit('_', 1)[-1]}"
    k, j = rng.randint(2, 7), rng.randint(1, 19)
    a, b = rng.randint(1, 25), rng.randint(1, 25)
    return (
        f"def {helper}(value):\n"
        f'    """Offset and scale a single value."""\n'
        f"    return value * {k} + {j}\n"
        f"\n"
        f"def {name}(items):\n"
        f'    """Apply the one-value transform across the items."""\n'
        f"    out = []\n"
        f"    for item in items:\n"
        f"        out.append({helper}(item))\n"
        f"    return out\n"
        f"\n"
        f"print({name}([{a}, {b}]))"
    )


def _template_char_count(rng: Random, name: str) -> str:
    word = rng.choice(_WORDS) + rng.choice(_WORDS) + rng.choice(_WORDS)
    target = rng.choice(sorted(set(word)))
    return (
        f"def {name}(text, target):\n"
        f'    """Count occurrences of the target character."""\n'
        f"    count = 0\n"
        f"    for ch in text:\n"
        f"        if ch == target:\n"
        f"            count = count + 1\n"
        f"    return count\n"
        f"\n"
        f'print({name}("{word}", "{target}"))'
    )


def _template_multiples(rng: Random, name: str) -> str:
    limit, divisor = rng.randint(20, 60), rng.randint(2, 7)
    return (
        f"def {name}(limit, divisor):\n"
        f'    """Sum the multiples of divisor strictly below limit."""\n'
        f"    total = 0\n"
        f"    value = 0\n"
        f"    while value < limit:\n"
        f"        if value % divisor == 0:\n"
        f"            total = total + value\n"
        f"        value = value + 1\n"
        f"    return total\n"
        f"\n"
        f"print({name}({limit}, {divisor}))"
    )


_TEMPLATES = (
    _template_scaled_sum,
    _template_join_parts,
    _template_countdown,
    _template_spread,
    _template_recursive_fold,
    _template_helper_pair,
    _template_char_count,
    _template_multiples,
)


def generate_program(index: int, seed: int) -> Program:
    rng = Random(derive_seed(seed, "program", index))
    template = _TEMPLATES[index % len(_TEMPLATES)]
    name = f"{rng.choice(_VERBS)}_{rng.choice(_NOUNS)}_{index}"
    text = template(rng, name)
    lines = text.split("\n")
    # Cut inside the function body so the prefix carries statements,
    # variables, and a method for every transform family to grab onto.
    lo = 3
    hi = max(lo + 1, len(lines) - 2)
    cut = rng.randint(lo, hi - 1)
    return Program(id=f"prog_{index:04d}", text=text, cut_line=cut)


def generate_programs(count: int, seed: int) -> list[Program]:
    return [generate_program(i, seed) for i in range(count)]


def programs_to_samples(programs: list[Program], member_count: int) -> list[Sample]:
    """First ``member_count`` programs become the victim's training pool."""
    samples = []
    for i, prog in enumerate(programs):
        origin = "train_pool" if i < member_count else "test_pool"
        samples.append(Sample(id=prog.id, prefix=prog.prefix, suffix=prog.suffix, origin=origin))
    return samples
