"""Threads: behaviour of instruction sequences, and their execution.

Finite threads are hash-consed, so structurally equal threads are the same
object and comparing projections is cheap.  Regular threads are finite state
graphs; :func:`extract` builds one from any instruction sequence.
"""
from __future__ import annotations

import weakref
from collections import deque
from dataclasses import dataclass
from typing import Mapping

from .meadow import (BackendMismatchError, Meadow, MeadowValue,
                     UnsupportedOperationError)
from .pga import (Cp, Halt, InstrSeq, Jump, OutCp, Plain,
                  PosTest, Set0, Set1, SetA, SetAi, SetM, SetMi, SetS, Test0,
                  raise_core)
from .term import (ONE, ZERO, Add, Inv, Mul, Neg, Sign, Term, Var, Y, a,
                   free_vars, pseudo_unit, pseudo_zero, substitute, var, x)

__all__ = [
    "S", "D", "PostCond", "prefix", "RegularThread", "ThreadState",
    "extract", "project", "thread_from_equations", "format_finite",
    "Assignment", "Terminated", "Divergent", "apply", "run",
    "thread_to_term", "raise_thread", "UnsupportedActionError",
]


# ---------------------------------------------------------------------------
# finite threads

class _Const:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name

    __str__ = __repr__

    def __reduce__(self):
        return self.name


S = _Const("S")
D = _Const("D")


class PostCond:
    """``then <| action |> else``; instances are unique per structure."""

    __slots__ = ("then", "action", "else_", "__weakref__")
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, then, action, else_):
        key = (id(then), action, id(else_))
        hit = cls._table.get(key)
        if hit is not None and hit.then is then and hit.else_ is else_:
            return hit
        obj = super().__new__(cls)
        obj.then, obj.action, obj.else_ = then, action, else_
        cls._table[key] = obj
        return obj

    def __repr__(self):
        return format_finite(self)


def prefix(action, thread):
    """Action prefix ``action o thread``."""
    return PostCond(thread, action, thread)


def format_finite(t) -> str:
    if t is S or t is D:
        return t.name
    if t.then is t.else_:
        inner = format_finite(t.then)
        if isinstance(t.then, PostCond) and t.then.then is not t.then.else_:
            inner = f"({inner})"
        return f"{t.action} o {inner}"
    parts = []
    for side in (t.then, t.else_):
        text = format_finite(side)
        parts.append(f"({text})" if isinstance(side, PostCond) else text)
    return f"{parts[0]} <| {t.action} |> {parts[1]}"


def _project_finite(t, n: int, memo: dict):
    if n == 0:
        return D
    if t is S or t is D:
        return t
    key = (id(t), n)
    hit = memo.get(key)
    if hit is None:
        hit = PostCond(_project_finite(t.then, n - 1, memo), t.action,
                       _project_finite(t.else_, n - 1, memo))
        memo[key] = (hit, t)
        return hit
    return hit[0]


# ---------------------------------------------------------------------------
# regular threads

@dataclass(frozen=True)
class ThreadState:
    then: int
    action: object
    else_: int


@dataclass(frozen=True)
class RegularThread:
    """States are "S", "D" or :class:`ThreadState` referring to indices.

    Built through :meth:`canonical`, which keeps reachable states only,
    merges bisimilar ones and numbers them breadth-first from the root, so
    equal behaviour gives equal graphs.
    """

    states: tuple
    root: int

    @classmethod
    def canonical(cls, states, root: int) -> "RegularThread":
        states = list(states)
        # Partition refinement for bisimulation.
        def sig0(s):
            return s if isinstance(s, str) else ("A", s.action)
        block = {}
        ids = [block.setdefault(sig0(s), len(block)) for s in states]
        while True:
            block = {}
            new = []
            for i, s in enumerate(states):
                if isinstance(s, str):
                    sig = (ids[i],)
                else:
                    sig = (ids[i], ids[s.then], ids[s.else_])
                new.append(block.setdefault(sig, len(block)))
            if len(block) == len(set(ids)):
                break
            ids = new
        rep = {}
        for i, b in enumerate(ids):
            rep.setdefault(b, i)
        # Breadth-first renumbering of the quotient.
        order = {}
        queue = deque([ids[root]])
        order[ids[root]] = 0
        while queue:
            s = states[rep[queue.popleft()]]
            if isinstance(s, str):
                continue
            for nxt in (ids[s.then], ids[s.else_]):
                if nxt not in order:
                    order[nxt] = len(order)
                    queue.append(nxt)
        final = []
        for b, idx in sorted(order.items(), key=lambda kv: kv[1]):
            s = states[rep[b]]
            if isinstance(s, str):
                final.append(s)
            else:
                final.append(ThreadState(order[ids[s.then]], s.action,
                                         order[ids[s.else_]]))
        return cls(tuple(final), 0)

    def is_finite(self) -> bool:
        """No cycles in the state graph."""
        colour = {}

        def visit(i):
            stack = [(i, False)]
            while stack:
                node, done = stack.pop()
                if done:
                    colour[node] = 2
                    continue
                if colour.get(node) == 2:
                    continue
                if colour.get(node) == 1:
                    return False
                colour[node] = 1
                stack.append((node, True))
                s = self.states[node]
                if isinstance(s, ThreadState):
                    for nxt in {s.then, s.else_}:
                        c = colour.get(nxt)
                        if c == 1:
                            return False
                        if c is None:
                            stack.append((nxt, False))
            return True

        return visit(self.root)

    def actions(self) -> list:
        return [s.action for s in self.states if isinstance(s, ThreadState)]

    def has_tests(self) -> bool:
        return any(s.then != s.else_ for s in self.states
                   if isinstance(s, ThreadState))

    def format(self, inline: bool = True) -> str:
        """Recursive equations, ``T0 = a o T1`` and ``T1 = T2 <| b |> T3``.

        With ``inline`` states referenced only once are written in place.
        """
        refs = [0] * len(self.states)
        for s in self.states:
            if isinstance(s, ThreadState):
                for nxt in {s.then, s.else_}:
                    refs[nxt] += 1
        named = [i for i, s in enumerate(self.states)
                 if not isinstance(s, str)
                 and (i == self.root or not inline or refs[i] != 1)]
        names = {i: f"T{k}" for k, i in enumerate(named)}

        def ref(i, top=False):
            s = self.states[i]
            if isinstance(s, str):
                return s
            if i in names and not top:
                return names[i]
            if s.then == s.else_:
                inner = ref(s.then)
                if self._compound(s.then, names):
                    inner = f"({inner})"
                return f"{s.action} o {inner}"
            left, right = ref(s.then), ref(s.else_)
            if self._compound(s.then, names):
                left = f"({left})"
            if self._compound(s.else_, names):
                right = f"({right})"
            return f"{left} <| {s.action} |> {right}"

        if isinstance(self.states[self.root], str):
            return self.states[self.root]
        return "\n".join(f"{names[i]} = {ref(i, top=True)}" for i in named)

    def _compound(self, i, names) -> bool:
        s = self.states[i]
        return (isinstance(s, ThreadState) and i not in names
                and s.then != s.else_)

    def __str__(self):
        return self.format()

    def state_thread(self, i: int):
        s = self.states[i]
        return S if s == "S" else D if s == "D" else None


def extract(seq: InstrSeq) -> RegularThread:
    """Thread extraction ``|X|`` as a canonical regular thread."""
    instrs = seq.instructions()
    n = len(seq.prefix)
    m = len(seq.cycle) if seq.cycle is not None else 0

    def norm(i):
        if i < n + m:
            return i
        return None if not m else n + (i - n) % m

    def resolve(i):
        """State reached at position ``i``: an index, "S" or "D"."""
        seen = set()
        cur = norm(i)
        while cur is not None:
            u = instrs[cur]
            if not isinstance(u, Jump):
                return cur
            if u.k == 0 or cur in seen:
                return "D"
            seen.add(cur)
            cur = norm(cur + u.k)
        return "D"

    # State 0 is S, state 1 is D, then one per non-jump position.
    states = ["S", "D"]
    index = {}
    for i, u in enumerate(instrs):
        if not isinstance(u, Jump):
            index[i] = len(states)
            states.append(None)

    def sid(r):
        return 0 if r == "S" else 1 if r == "D" else index[r]

    for i, idx in index.items():
        u = instrs[i]
        if isinstance(u, Halt):
            states[idx] = "S"
        elif isinstance(u, Plain):
            nxt = sid(resolve(i + 1))
            states[idx] = ThreadState(nxt, u.action, nxt)
        elif isinstance(u, PosTest):
            states[idx] = ThreadState(sid(resolve(i + 1)), u.action,
                                      sid(resolve(i + 2)))
        else:
            states[idx] = ThreadState(sid(resolve(i + 2)), u.action,
                                      sid(resolve(i + 1)))
    return RegularThread.canonical(states, sid(resolve(0)))


def thread_from_equations(equations: Mapping[str, object], root: str) -> RegularThread:
    """Regular thread from recursive equations.

    Each right-hand side is "S", "D" or a triple ``(then, action, else)``
    whose parts are "S", "D", equation names or nested triples.
    """
    states = ["S", "D"]
    names = {name: None for name in equations}
    pending = []

    def build(expr):
        if expr == "S":
            return 0
        if expr == "D":
            return 1
        if isinstance(expr, str):
            if names[expr] is None:
                names[expr] = len(states)
                states.append(None)
                pending.append(expr)
            return names[expr]
        idx = len(states)
        states.append(None)
        then, action, else_ = expr
        states[idx] = ThreadState(build(then), action, build(else_))
        return idx

    root_idx = build(root)
    while pending:
        name = pending.pop()
        rhs = equations[name]
        if rhs in ("S", "D"):
            states[names[name]] = rhs
        else:
            then, action, else_ = rhs
            states[names[name]] = ThreadState(build(then), action, build(else_))
    return RegularThread.canonical(states, root_idx)


def project(t, n: int):
    """``pi_n``: a finite thread.  Accepts regular and finite threads."""
    if not isinstance(t, RegularThread):
        return _project_finite(t, n, {})
    memo: dict = {}
    states = t.states

    # Iterative over depth to avoid recursion limits on long paths.
    def at(i, k):
        if k == 0:
            return D
        s = states[i]
        if s == "S":
            return S
        if s == "D":
            return D
        return memo[(i, k)]

    for k in range(1, n + 1):
        for i, s in enumerate(states):
            if isinstance(s, ThreadState):
                memo[(i, k)] = PostCond(at(s.then, k - 1), s.action,
                                        at(s.else_, k - 1))
    return at(t.root, n)


# ---------------------------------------------------------------------------
# execution

class UnsupportedActionError(RuntimeError):
    """An action the meadow instruction set cannot execute on this backend."""


class Assignment(Mapping):
    """Total, immutable map from variables to values of one meadow (default 0)."""

    __slots__ = ("meadow", "_raw")

    def __init__(self, meadow: Meadow, bindings: Mapping | None = None):
        self.meadow = meadow
        raw = {}
        for key, value in (bindings or {}).items():
            v = Var.parse(key) if isinstance(key, str) else key
            if isinstance(value, MeadowValue):
                if value.meadow != meadow:
                    raise BackendMismatchError(
                        f"value from {value.meadow}, expected {meadow}")
                value = value.raw
            elif isinstance(value, str):
                value = meadow.parse_raw(value)
            else:
                value = meadow.from_int(value) if isinstance(value, int) else value
            if not meadow.is_zero(value):
                raw[v] = value
        self._raw = raw

    @classmethod
    def _wrap(cls, meadow, raw):
        obj = cls.__new__(cls)
        obj.meadow = meadow
        obj._raw = {k: v for k, v in raw.items() if not meadow.is_zero(v)}
        return obj

    @classmethod
    def initial(cls, meadow: Meadow, inputs) -> "Assignment":
        """``x_i := inputs[i]``, everything else 0."""
        return cls(meadow, {x(i): v for i, v in enumerate(inputs)})

    def is_initial(self) -> bool:
        return all(v.kind == "x" for v in self._raw)

    def raw(self, v: Var):
        return self._raw.get(v, self.meadow.zero())

    def __getitem__(self, v):
        if isinstance(v, str):
            v = Var.parse(v)
        return MeadowValue(self.meadow, self.raw(v))

    def __iter__(self):
        return iter(sorted(self._raw, key=Var.sort_key))

    def __len__(self):
        return len(self._raw)

    def set(self, v: Var, value) -> "Assignment":
        raw = dict(self._raw)
        raw[v] = value.raw if isinstance(value, MeadowValue) else value
        return Assignment._wrap(self.meadow, raw)

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return self.meadow == other.meadow and self._raw == other._raw

    def __hash__(self):
        return hash((self.meadow, frozenset(self._raw.items())))

    def __repr__(self):
        body = ", ".join(f"{v}: {self.meadow.format(self._raw[v])}" for v in self)
        return f"Assignment({self.meadow}, {{{body}}})"


@dataclass(frozen=True)
class Terminated:
    final: Assignment
    steps: int

    @property
    def output(self) -> MeadowValue:
        return self.final[Y]


@dataclass(frozen=True)
class Divergent:
    reason: str        # "bound-exhausted" or "deadlock"
    bound: int
    steps: int = 0


def _step(action, regs: dict, m: Meadow):
    """Perform ``action`` on the mutable register file; return the reply."""
    zero = m.zero()
    if isinstance(action, Test0):
        return m.is_zero(regs.get(a(action.aux), zero))
    if isinstance(action, Cp):
        regs[a(action.aux)] = regs.get(x(action.inp), zero)
    elif isinstance(action, Set0):
        regs[a(action.aux)] = zero
    elif isinstance(action, Set1):
        regs[a(action.aux)] = m.one()
    elif isinstance(action, SetAi):
        v = a(action.aux)
        regs[v] = m.neg(regs.get(v, zero))
    elif isinstance(action, SetMi):
        v = a(action.aux)
        regs[v] = m.inv(regs.get(v, zero))
    elif isinstance(action, SetA):
        v = a(action.aux)
        regs[v] = m.add(regs.get(v, zero), regs.get(a(action.src), zero))
    elif isinstance(action, SetM):
        v = a(action.aux)
        regs[v] = m.mul(regs.get(v, zero), regs.get(a(action.src), zero))
    elif isinstance(action, SetS):
        if not m.has_sign:
            raise UnsupportedOperationError(
                f"set:s needs a signed meadow, got {m.selector}")
        v = a(action.aux)
        regs[v] = m.sign(regs.get(v, zero))
    elif isinstance(action, OutCp):
        regs[Y] = regs.get(a(action.src), zero)
    else:
        raise UnsupportedActionError(f"cannot execute action {action}")
    return True


def _apply_finite(t, alpha: Assignment, bound: int):
    m = alpha.meadow
    regs = dict(alpha._raw)
    steps = 0
    while True:
        if t is S:
            return Terminated(Assignment._wrap(m, regs), steps)
        if t is D:
            return Divergent("deadlock", bound, steps)
        if steps >= bound:
            return Divergent("bound-exhausted", bound, steps)
        reply = _step(t.action, regs, m)
        steps += 1
        t = t.then if reply else t.else_


def apply(t, alpha: Assignment, bound: int):
    """Run ``t`` from ``alpha`` for at most ``bound`` actions."""
    if not isinstance(t, RegularThread):
        return _apply_finite(t, alpha, bound)
    m = alpha.meadow
    states = t.states
    regs = dict(alpha._raw)
    i, steps = t.root, 0
    while True:
        s = states[i]
        if s == "S":
            return Terminated(Assignment._wrap(m, regs), steps)
        if s == "D":
            return Divergent("deadlock", bound, steps)
        if steps >= bound:
            return Divergent("bound-exhausted", bound, steps)
        reply = _step(s.action, regs, m)
        steps += 1
        i = s.then if reply else s.else_


def run(seq: InstrSeq | RegularThread, inputs, meadow: Meadow, bound: int):
    """``[[seq]]`` on ``inputs``: extract, then apply to the initial assignment."""
    thread = seq if isinstance(seq, RegularThread) else extract(seq)
    return apply(thread, Assignment.initial(meadow, inputs), bound)


# ---------------------------------------------------------------------------
# symbolic execution

def _action_subst(action) -> dict:
    if isinstance(action, Cp):
        return {a(action.aux): var(x(action.inp))}
    if isinstance(action, Set0):
        return {a(action.aux): ZERO}
    if isinstance(action, Set1):
        return {a(action.aux): ONE}
    if isinstance(action, SetAi):
        return {a(action.aux): Neg(var(a(action.aux)))}
    if isinstance(action, SetMi):
        return {a(action.aux): Inv(var(a(action.aux)))}
    if isinstance(action, SetA):
        return {a(action.aux): Add(var(a(action.aux)), var(a(action.src)))}
    if isinstance(action, SetM):
        return {a(action.aux): Mul(var(a(action.aux)), var(a(action.src)))}
    if isinstance(action, SetS):
        return {a(action.aux): Sign(var(a(action.aux)))}
    if isinstance(action, OutCp):
        return {Y: var(a(action.src))}
    raise UnsupportedActionError(f"no term semantics for action {action}")


def _symbolic(t, memo: dict) -> Term:
    """Term ``t_T`` with ``(T . alpha)(y) = [[t_T]]_alpha`` (before zeroing)."""
    # Post-order over the DAG of hash-consed nodes.
    stack = [t]
    while stack:
        cur = stack[-1]
        if cur is S or cur is D:
            memo[id(cur)] = (var(Y), cur)
            stack.pop()
            continue
        if id(cur) in memo:
            stack.pop()
            continue
        todo = [c for c in (cur.then, cur.else_) if id(c) not in memo]
        if todo:
            stack.extend(todo)
            continue
        then_term = memo[id(cur.then)][0]
        if isinstance(cur.action, Test0):
            else_term = memo[id(cur.else_)][0]
            g = var(a(cur.action.aux))
            if then_term == else_term:
                out = then_term
            else:
                out = Add(Mul(pseudo_zero(g), then_term),
                          Mul(pseudo_unit(g), else_term))
        else:
            out = substitute(then_term, _action_subst(cur.action))
        memo[id(cur)] = (out, cur)
        stack.pop()
    return memo[id(t)][0]


def thread_to_term(t, k: int, depth: int | None = None) -> Term:
    """Term for the output of a finite thread run on inputs ``x0..xk``.

    Regular threads are accepted when acyclic, or after projection to
    ``depth`` when one is given.  Agrees with :func:`run` on cancellation
    meadows wherever the run terminates.
    """
    if isinstance(t, RegularThread):
        if depth is not None:
            t = project(t, depth)
        elif t.is_finite():
            t = project(t, len(t.states) + 1)
        else:
            raise ValueError("thread has cycles; pass a projection depth")
    body = _symbolic(t, {})
    zeroing = {v: ZERO for v in free_vars(body)
               if v.kind != "x" or v.index > k}
    return substitute(body, zeroing)


def raise_thread(t, by: int = 1):
    """Rename every ``a_i`` to ``a_{i+by}``."""
    if isinstance(t, RegularThread):
        states = tuple(s if isinstance(s, str) else
                       ThreadState(s.then, raise_core(s.action, by), s.else_)
                       for s in t.states)
        return RegularThread(states, t.root)
    memo: dict = {}

    def go(n):
        if n is S or n is D:
            return n
        hit = memo.get(id(n))
        if hit is None:
            hit = PostCond(go(n.then), raise_core(n.action, by), go(n.else_))
            memo[id(n)] = (hit, n)
            return hit
        return hit[0]

    return go(t)

