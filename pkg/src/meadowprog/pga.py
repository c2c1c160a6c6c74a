"""PGA instruction sequences over the meadow instruction set.

An :class:`InstrSeq` is a prefix optionally followed by a repeated block, i.e.
an instruction sequence in first canonical form.  Associativity and the
unrolling laws therefore hold by construction; :func:`second_canonical_form`
implements the jump rewrites.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

__all__ = [
    "Cp", "Set0", "Set1", "SetAi", "SetMi", "SetA", "SetM", "SetS", "Test0",
    "OutCp", "Opaque", "Plain", "PosTest", "NegTest", "Jump", "Halt", "HALT",
    "InstrSeq", "PGASyntaxError", "parse_pga", "format_pga", "format_instr",
    "second_canonical_form", "unfold", "is_straight_line", "aux_indices",
    "core_aux", "raise_core", "raise_instr", "is_second_canonical",
]


# ---------------------------------------------------------------------------
# core instructions (the meadow instruction set)

@dataclass(frozen=True)
class Cp:
    aux: int
    inp: int

    def __str__(self):
        return f"a{self.aux}.cp(x{self.inp})"


@dataclass(frozen=True)
class Set0:
    aux: int

    def __str__(self):
        return f"a{self.aux}.set:0"


@dataclass(frozen=True)
class Set1:
    aux: int

    def __str__(self):
        return f"a{self.aux}.set:1"


@dataclass(frozen=True)
class SetAi:
    """``a := -a``"""
    aux: int

    def __str__(self):
        return f"a{self.aux}.set:ai"


@dataclass(frozen=True)
class SetMi:
    """``a := a^-1``"""
    aux: int

    def __str__(self):
        return f"a{self.aux}.set:mi"


@dataclass(frozen=True)
class SetA:
    """``a := a + src``"""
    aux: int
    src: int

    def __str__(self):
        return f"a{self.aux}.set:a(a{self.src})"


@dataclass(frozen=True)
class SetM:
    """``a := a * src``"""
    aux: int
    src: int

    def __str__(self):
        return f"a{self.aux}.set:m(a{self.src})"


@dataclass(frozen=True)
class SetS:
    """``a := s(a)``"""
    aux: int

    def __str__(self):
        return f"a{self.aux}.set:s"


@dataclass(frozen=True)
class Test0:
    """Replies true iff ``a`` is zero."""
    aux: int

    def __str__(self):
        return f"a{self.aux}.test:0"


@dataclass(frozen=True)
class OutCp:
    """``y := a``"""
    src: int

    def __str__(self):
        return f"y.cp(a{self.src})"


@dataclass(frozen=True)
class Opaque:
    """An uninterpreted basic action, for the abstract PGA examples."""
    name: str

    def __str__(self):
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", self.name):
            return self.name
        return f"'{self.name}'"


Core = Union[Cp, Set0, Set1, SetAi, SetMi, SetA, SetM, SetS, Test0, OutCp, Opaque]


# ---------------------------------------------------------------------------
# primitive instructions

@dataclass(frozen=True)
class Plain:
    action: Core

    def __str__(self):
        return str(self.action)


@dataclass(frozen=True)
class PosTest:
    action: Core

    def __str__(self):
        return f"+{self.action}"


@dataclass(frozen=True)
class NegTest:
    action: Core

    def __str__(self):
        return f"-{self.action}"


@dataclass(frozen=True)
class Jump:
    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("jump counter must be a natural number")

    def __str__(self):
        return f"#{self.k}"


@dataclass(frozen=True)
class Halt:
    def __str__(self):
        return "!"


HALT = Halt()


@dataclass(frozen=True)
class InstrSeq:
    """``prefix`` alone, or ``prefix;(cycle)^w`` when ``cycle`` is set."""

    prefix: tuple
    cycle: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        if self.cycle is not None:
            cycle = tuple(self.cycle)
            if not cycle:
                raise ValueError("a repeated block must be nonempty")
            object.__setattr__(self, "cycle", cycle)

    def __len__(self):
        return len(self.prefix) + len(self.cycle or ())

    def instructions(self) -> tuple:
        return self.prefix + (self.cycle or ())

    def __str__(self):
        return format_pga(self)


# ---------------------------------------------------------------------------
# text syntax

class PGASyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_CORE_RES = [
    (re.compile(r"a(\d+)\.cp\(x(\d+)\)"), lambda m: Cp(int(m[1]), int(m[2]))),
    (re.compile(r"a(\d+)\.set:0"), lambda m: Set0(int(m[1]))),
    (re.compile(r"a(\d+)\.set:1"), lambda m: Set1(int(m[1]))),
    (re.compile(r"a(\d+)\.set:ai"), lambda m: SetAi(int(m[1]))),
    (re.compile(r"a(\d+)\.set:mi"), lambda m: SetMi(int(m[1]))),
    (re.compile(r"a(\d+)\.set:a\(a(\d+)\)"), lambda m: SetA(int(m[1]), int(m[2]))),
    (re.compile(r"a(\d+)\.set:m\(a(\d+)\)"), lambda m: SetM(int(m[1]), int(m[2]))),
    (re.compile(r"a(\d+)\.set:s"), lambda m: SetS(int(m[1]))),
    (re.compile(r"a(\d+)\.test:0"), lambda m: Test0(int(m[1]))),
    (re.compile(r"y\.cp\(a(\d+)\)"), lambda m: OutCp(int(m[1]))),
    (re.compile(r"'([^']+)'"), lambda m: Opaque(m[1])),
    (re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?![.\w(])"), lambda m: Opaque(m[0])),
]


def _parse_instr(text: str, pos: int):
    if not text:
        raise PGASyntaxError("empty instruction", pos)
    if text == "!":
        return HALT
    if text[0] == "#":
        if not text[1:].isdigit():
            raise PGASyntaxError(f"bad jump {text!r}", pos)
        return Jump(int(text[1:]))
    wrap, body, offset = Plain, text, 0
    if text[0] in "+-":
        wrap = PosTest if text[0] == "+" else NegTest
        body, offset = text[1:].lstrip(), len(text) - len(text[1:].lstrip())
    for regex, build in _CORE_RES:
        m = regex.fullmatch(body)
        if m:
            return wrap(build(m))
    raise PGASyntaxError(f"unknown instruction {body!r}", pos + offset)


def _split(text: str, start: int, end: int):
    """Yield ``(segment, position)`` for the ``;``-separated pieces."""
    pos = start
    while pos <= end:
        nxt = text.find(";", pos, end)
        if nxt < 0:
            nxt = end
        raw = text[pos:nxt]
        lead = len(raw) - len(raw.lstrip())
        yield raw.strip(), pos + lead
        pos = nxt + 1


def parse_pga(text: str) -> InstrSeq:
    """Parse e.g. ``"a0.cp(x0); y.cp(a0); !"`` or ``"#2;a;(#5;b;+c)^w"``."""
    # Parentheses also occur inside core instructions; the repetition block
    # is the one opened right after a separator or at the start.
    block = re.search(r"(?:^|;)\s*\(", text)
    prefix_text, cycle = text, None
    if block:
        start = block.end() - 1
        close = re.search(r"\)\s*\^\s*w", text[start:])
        if not close:
            raise PGASyntaxError("unterminated repetition, expected ')^w'", start)
        inner_end = start + close.start()
        after = start + close.end()
        rest = text[after:]
        if rest.strip():
            semi = rest.lstrip()
            where = after + len(rest) - len(semi)
            raise PGASyntaxError(
                "instruction after a repeated block is unreachable "
                "(X^w;Y = X^w, PGA3); remove it", where)
        inner = text[start + 1:inner_end]
        if re.search(r"(?:^|;)\s*\(", inner):
            raise PGASyntaxError("nested repetition is not supported", start + 1)
        cycle = [_parse_instr(seg, p)
                 for seg, p in _split(text, start + 1, inner_end)]
        head = text[:block.start()] if block.group(0).startswith(";") else ""
        prefix_text = head
    prefix = []
    if prefix_text.strip():
        prefix = [_parse_instr(seg, p)
                  for seg, p in _split(text, 0, len(prefix_text))]
    elif cycle is None:
        raise PGASyntaxError("empty instruction sequence", 0)
    return InstrSeq(tuple(prefix), tuple(cycle) if cycle is not None else None)


def format_instr(u) -> str:
    return str(u)


def format_pga(seq: InstrSeq) -> str:
    parts = [str(u) for u in seq.prefix]
    if seq.cycle is not None:
        parts.append("(" + ";".join(str(u) for u in seq.cycle) + ")^w")
    return ";".join(parts)


# ---------------------------------------------------------------------------
# structural congruence

class _Layout:
    """Positions of the (possibly infinite) sequence folded to a finite set.

    Position ``i`` with ``i >= n`` (prefix length) lies in the cycle at offset
    ``(i - n) % m``; positions are normalized into ``[0, n + m)``.
    """

    def __init__(self, seq: InstrSeq):
        self.seq = seq
        self.n = len(seq.prefix)
        self.m = len(seq.cycle) if seq.cycle is not None else 0
        self.instrs = seq.instructions()

    def norm(self, i: int) -> int | None:
        """Canonical position, or None past the end of a finite sequence."""
        if i < self.n + self.m:
            return i
        if not self.m:
            return None
        return self.n + (i - self.n) % self.m

    def at(self, i: int):
        return self.instrs[i]


def _chain_target(layout: _Layout, i: int, k: int):
    """Follow a jump ``#k`` at ``i`` through chained jumps.

    Returns ("D", None) when the chain deadlocks (reaches ``#0`` or loops),
    otherwise ("pos", distance) with the absolute distance travelled, which
    may point past the end of a finite sequence.
    """
    if k == 0:
        return "D", None
    seen = {i}
    dist = k
    cur = layout.norm(i + k)
    absolute = i + k
    while cur is not None:
        u = layout.at(cur)
        if not isinstance(u, Jump):
            return "pos", dist
        if u.k == 0 or cur in seen:
            return "D", None
        seen.add(cur)
        dist += u.k
        absolute += u.k
        cur = layout.norm(cur + u.k)
    return "pos", dist


def second_canonical_form(seq: InstrSeq) -> InstrSeq:
    """Collapse chained jumps and minimize jumps into the repeating part."""
    layout = _Layout(seq)
    n, m = layout.n, layout.m
    out = []
    for i, u in enumerate(layout.instrs):
        if not isinstance(u, Jump):
            out.append(u)
            continue
        kind, dist = _chain_target(layout, i, u.k)
        if kind == "D":
            out.append(Jump(0))
            continue
        target = i + dist
        if m and target >= n:
            offset = (target - n) % m
            if i >= n:
                # Within the cycle: least positive counter with this target.
                k = (offset - (i - n)) % m or m
            else:
                # From the prefix into the cycle: first occurrence.
                k = n + offset - i
        else:
            k = dist
        out.append(Jump(k))
    prefix = tuple(out[:n])
    cycle = tuple(out[n:]) if seq.cycle is not None else None
    return InstrSeq(prefix, cycle)


def is_second_canonical(seq: InstrSeq) -> bool:
    """No jump (other than ``#0``) lands on a jump instruction."""
    layout = _Layout(seq)
    for i, u in enumerate(layout.instrs):
        if isinstance(u, Jump) and u.k:
            t = layout.norm(i + u.k)
            if t is not None and isinstance(layout.at(t), Jump):
                return False
    return True


def unfold(seq: InstrSeq, n: int) -> InstrSeq:
    """Move ``n`` instructions of the cycle into the prefix."""
    if seq.cycle is None or n <= 0:
        return seq
    m = len(seq.cycle)
    moved = tuple(seq.cycle[i % m] for i in range(n))
    r = n % m
    return InstrSeq(seq.prefix + moved, seq.cycle[r:] + seq.cycle[:r])


# ---------------------------------------------------------------------------
# variables

def core_aux(c) -> tuple:
    """Auxiliary indices read or written by a core instruction."""
    if isinstance(c, (SetA, SetM)):
        return (c.aux, c.src)
    if isinstance(c, OutCp):
        return (c.src,)
    if isinstance(c, Opaque):
        return ()
    return (c.aux,)


def raise_core(c, by: int = 1):
    """Shift every auxiliary index up by ``by``."""
    if isinstance(c, Opaque):
        return c
    if isinstance(c, (SetA, SetM)):
        return type(c)(c.aux + by, c.src + by)
    if isinstance(c, OutCp):
        return OutCp(c.src + by)
    if isinstance(c, Cp):
        return Cp(c.aux + by, c.inp)
    return type(c)(c.aux + by)


def _raise_prim(u, by):
    if isinstance(u, (Plain, PosTest, NegTest)):
        return type(u)(raise_core(u.action, by))
    return u


def raise_instr(seq: InstrSeq, by: int = 1) -> InstrSeq:
    return InstrSeq(tuple(_raise_prim(u, by) for u in seq.prefix),
                    None if seq.cycle is None else
                    tuple(_raise_prim(u, by) for u in seq.cycle))


def aux_indices(seq: InstrSeq) -> set:
    out = set()
    for u in seq.instructions():
        if isinstance(u, (Plain, PosTest, NegTest)):
            out.update(core_aux(u.action))
    return out


def is_straight_line(seq: InstrSeq) -> bool:
    """Test- and jump-free, no repetition, ends in ``!``."""
    if seq.cycle is not None or not seq.prefix:
        return False
    *body, last = seq.prefix
    if not isinstance(last, Halt):
        return False
    return all(isinstance(u, Plain) and not isinstance(u.action, (Test0, Opaque))
               for u in body)
