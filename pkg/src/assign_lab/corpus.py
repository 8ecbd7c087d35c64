"""Reader and writer for the golden corpus of worked cases.

A record looks like::

    case 24
    k 4
    pattern
    4 3
    000
    00.
    0..
    A..
    special A: (m-2)*n
    cover rows 1 2 3
    uses 1 2 3 5
    b
    0 0 -1 1
    ...
    residual ((1/((m-2)*(2*m*n-5*n-1))))
    end

``special`` lines list the stage rates of a labeled entry, ``b`` holds k
rows of the coefficient triangle and each ``residual`` line is one extra
term.  Records are separated by blank lines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Optional

from .exact import BTriangle, RatFunc, parse_expr
from .pattern import ZeroPattern, parse_pattern_text


@dataclass
class GoldenCase:
    id: int
    k: int
    pattern_text: str
    specials: dict = field(default_factory=dict)  # label -> list of stage expressions
    cover: Optional[str] = None
    uses: list = field(default_factory=list)
    b: list = field(default_factory=list)  # k rows of Fractions
    residual: list = field(default_factory=list)  # expression strings

    def pattern(self) -> tuple[ZeroPattern, dict]:
        """The zero pattern and a map cell -> stage RatFuncs (0-based cells)."""
        Z, labels = parse_pattern_text(self.pattern_text)
        sp = {}
        for cell, lab in labels.items():
            if lab not in self.specials:
                raise ValueError(f"case {self.id}: no stages for label {lab}")
            sp[cell] = [parse_expr(s) for s in self.specials[lab]]
        return Z, sp

    def expected_b(self) -> BTriangle:
        return BTriangle.from_rows(self.b, [parse_expr(r) for r in self.residual]) if self.k else BTriangle(1, {}, [])

    def expected_F(self) -> RatFunc:
        if self.k == 0:
            return RatFunc.const(0)
        return self.expected_b().value()


def parse_corpus(text: str) -> list[GoldenCase]:
    cases = []
    cur: Optional[GoldenCase] = None
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].rstrip()
        i += 1
        if not line.strip():
            continue
        if cur is None:
            if not line.startswith("case "):
                raise ValueError(f"line {i}: expected 'case N'")
            cur = GoldenCase(int(line.split()[1]), 0, "")
            continue
        word, _, rest = line.partition(" ")
        if word == "k":
            cur.k = int(rest)
        elif word == "pattern":
            head = lines[i].strip()
            R = int(head.split()[0])
            cur.pattern_text = "\n".join(x.strip() for x in lines[i : i + 1 + R]) + "\n"
            i += 1 + R
        elif word == "special":
            lab, _, stages = rest.partition(":")
            cur.specials[lab.strip()] = [s.strip() for s in _split_top(stages.strip())]
        elif word == "cover":
            cur.cover = rest
        elif word == "uses":
            cur.uses = [int(x) for x in rest.split()]
        elif word == "b":
            cur.b = []
            for _ in range(cur.k):
                cur.b.append([Fraction(x) for x in lines[i].split()])
                i += 1
        elif word == "residual":
            cur.residual.append(rest.strip())
        elif word == "end":
            cases.append(cur)
            cur = None
        else:
            raise ValueError(f"line {i}: unknown field {word!r}")
    if cur is not None:
        raise ValueError("unterminated record")
    return cases


def _split_top(s: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return out


def format_case(c: GoldenCase) -> str:
    out = [f"case {c.id}", f"k {c.k}", "pattern", c.pattern_text.rstrip("\n")]
    for lab in sorted(c.specials):
        out.append(f"special {lab}: " + ", ".join(c.specials[lab]))
    if c.cover is not None:
        out.append(f"cover {c.cover}")
    if c.uses:
        out.append("uses " + " ".join(str(u) for u in c.uses))
    out.append("b")
    for row in c.b:
        out.append(" ".join(str(x) for x in row))
    for r in c.residual:
        out.append(f"residual {r}")
    out.append("end")
    return "\n".join(out) + "\n"


def format_corpus(cases: list[GoldenCase]) -> str:
    return "\n".join(format_case(c) for c in cases)


def load_appendix() -> list[GoldenCase]:
    text = resources.files("assign_lab").joinpath("data/appendix.txt").read_text()
    return parse_corpus(text)


def appendix_text() -> str:
    return resources.files("assign_lab").joinpath("data/appendix.txt").read_text()
