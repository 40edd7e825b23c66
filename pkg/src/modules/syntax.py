"""
Abstract syntax of the object language

Values and expressions are frozen dataclasses with structural equality and a
cached structural hash, so whole configurations can key the engines' memo
tables. Surface-only forms (let, sequencing, `|||`, lists, locks, spawn/join,
short-circuit booleans) are separate node classes that `parser.desugar`
removes before execution.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable, Iterator, Optional, Tuple


def node(cls):
    """Class decorator for AST nodes: frozen dataclass with Node equality"""
    cls = dataclass(frozen=True, eq=False)(cls)
    cls._fields = tuple(f.name for f in fields(cls))
    return cls


class Node:
    """Structural equality and a hash computed once per instance"""

    _fields: Tuple[str, ...] = ()

    def _key(self) -> tuple:
        return tuple(getattr(self, name) for name in self._fields)

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        if hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __ne__(self, other: object) -> bool:
        return not self.__eq__(other)

    def __hash__(self) -> int:
        cached = self.__dict__.get("_hash")
        if cached is None:
            cached = hash((type(self).__name__, self._key()))
            object.__setattr__(self, "_hash", cached)
        return cached

    def __getstate__(self) -> dict:
        # string hashes differ between processes
        state = dict(self.__dict__)
        state.pop("_hash", None)
        state.pop("_free", None)
        return state


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------

class Value(Node):
    def sort_key(self) -> tuple:
        raise NotImplementedError


@node
class Int(Value):
    n: int

    def sort_key(self) -> tuple:
        return (0, self.n)


@node
class Bool(Value):
    b: bool

    def sort_key(self) -> tuple:
        return (1, int(self.b))


@node
class Unit(Value):
    def sort_key(self) -> tuple:
        return (2,)


@node
class Loc(Value):
    """Heap location"""
    addr: int

    def sort_key(self) -> tuple:
        return (3, self.addr)


@node
class Label(Value):
    """Presampling tape label"""
    index: int

    def sort_key(self) -> tuple:
        return (4, self.index)


@node
class PairV(Value):
    left: Value
    right: Value

    def sort_key(self) -> tuple:
        return (5, self.left.sort_key(), self.right.sort_key())


@node
class InlV(Value):
    value: Value

    def sort_key(self) -> tuple:
        return (6, self.value.sort_key())


@node
class InrV(Value):
    value: Value

    def sort_key(self) -> tuple:
        return (7, self.value.sort_key())


@node
class RecV(Value):
    """Recursive closure `rec f x -> body`; f is None for plain functions"""
    f: Optional[str]
    x: str
    body: "Expr"

    def __post_init__(self):
        loose = free_vars(self.body) - {self.f, self.x}
        if loose:
            raise ValueError(f"Closure body has free variables: {sorted(loose)}")

    def sort_key(self) -> tuple:
        return (8, self.f or "", self.x, repr(self.body))


UNIT = Unit()
TRUE = Bool(True)
FALSE = Bool(False)


# ---------------------------------------------------------------------------
# Core expressions
# ---------------------------------------------------------------------------

class Expr(Node):
    pass


@node
class Val(Expr):
    value: Value


@node
class Var(Expr):
    name: str


@node
class Rec(Expr):
    f: Optional[str]
    x: str
    body: Expr


@node
class App(Expr):
    fn: Expr
    arg: Expr


@node
class UnOp(Expr):
    op: str  # "neg" | "not"
    operand: Expr


@node
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@node
class If(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@node
class Pair(Expr):
    left: Expr
    right: Expr


@node
class Fst(Expr):
    expr: Expr


@node
class Snd(Expr):
    expr: Expr


@node
class InjL(Expr):
    expr: Expr


@node
class InjR(Expr):
    expr: Expr


@node
class Case(Expr):
    scrutinee: Expr
    left_var: str
    left_body: Expr
    right_var: str
    right_body: Expr


@node
class Alloc(Expr):
    init: Expr


@node
class Load(Expr):
    loc: Expr


@node
class Store(Expr):
    loc: Expr
    value: Expr


@node
class AllocN(Expr):
    size: Expr
    init: Expr


@node
class ArrayLoad(Expr):
    array: Expr
    index: Expr


@node
class ArrayStore(Expr):
    array: Expr
    index: Expr
    value: Expr


@node
class Rand(Expr):
    bound: Expr


@node
class RandL(Expr):
    label: Expr
    bound: Expr


@node
class AllocTape(Expr):
    bound: Expr


@node
class Fork(Expr):
    body: Expr


@node
class Faa(Expr):
    loc: Expr
    delta: Expr


@node
class Cas(Expr):
    loc: Expr
    expected: Expr
    desired: Expr


# ---------------------------------------------------------------------------
# Surface-only forms
# ---------------------------------------------------------------------------

@node
class Let(Expr):
    name: str
    bound: Expr
    body: Expr


@node
class LetPair(Expr):
    left: str
    right: str
    bound: Expr
    body: Expr


@node
class Seq(Expr):
    first: Expr
    second: Expr


@node
class Par(Expr):
    left: Expr
    right: Expr


@node
class ListLit(Expr):
    items: Tuple[Expr, ...]


@node
class Cons(Expr):
    head: Expr
    tail: Expr


@node
class ListCase(Expr):
    scrutinee: Expr
    nil_body: Expr
    head_var: str
    tail_var: str
    cons_body: Expr


@node
class Spawn(Expr):
    expr: Expr


@node
class Join(Expr):
    expr: Expr


@node
class NewLock(Expr):
    expr: Expr


@node
class Acquire(Expr):
    expr: Expr


@node
class Release(Expr):
    expr: Expr


@node
class And(Expr):
    left: Expr
    right: Expr


@node
class Or(Expr):
    left: Expr
    right: Expr


SUGAR_NODES = (
    Let, LetPair, Seq, Par, ListLit, Cons, ListCase,
    Spawn, Join, NewLock, Acquire, Release, And, Or
)


# ---------------------------------------------------------------------------
# Program files
# ---------------------------------------------------------------------------

@node
class OpenModule(Node):
    name: str


@node
class Definition(Node):
    name: str
    expr: Expr


@node
class Program(Node):
    declarations: Tuple[Node, ...]
    main: Optional[Expr]

    @property
    def opens(self) -> Tuple[str, ...]:
        return tuple(d.name for d in self.declarations if isinstance(d, OpenModule))

    @property
    def definitions(self) -> Tuple[Definition, ...]:
        return tuple(d for d in self.declarations if isinstance(d, Definition))


# ---------------------------------------------------------------------------
# Traversals
# ---------------------------------------------------------------------------

def children(e: Expr) -> Iterator[Expr]:
    """Immediate subexpressions, in field order"""
    for name in e._fields:
        item = getattr(e, name)
        if isinstance(item, Expr):
            yield item
        elif isinstance(item, tuple):
            for sub in item:
                if isinstance(sub, Expr):
                    yield sub


def map_children(e: Expr, fn) -> Expr:
    """Rebuild e with fn applied to every immediate subexpression"""
    changed = False
    new_fields = []
    for name in e._fields:
        item = getattr(e, name)
        if isinstance(item, Expr):
            new = fn(item)
        elif isinstance(item, tuple):
            new = tuple(fn(sub) if isinstance(sub, Expr) else sub for sub in item)
        else:
            new = item
        changed = changed or new is not item
        new_fields.append(new)
    if not changed:
        return e
    return type(e)(*new_fields)


def iter_nodes(e: Expr, into_values: bool = True) -> Iterator[Expr]:
    """Pre-order walk, optionally descending into closure bodies"""
    stack = [e]
    while stack:
        current = stack.pop()
        yield current
        if into_values and isinstance(current, Val):
            stack.extend(_closure_bodies(current.value))
        stack.extend(reversed(list(children(current))))


def _closure_bodies(v: Value) -> Iterator[Expr]:
    if isinstance(v, RecV):
        yield v.body
    elif isinstance(v, PairV):
        yield from _closure_bodies(v.left)
        yield from _closure_bodies(v.right)
    elif isinstance(v, (InlV, InrV)):
        yield from _closure_bodies(v.value)


def is_core(e: Expr) -> bool:
    return not any(isinstance(n, SUGAR_NODES) for n in iter_nodes(e))


def contains_tape_ops(e: Expr) -> bool:
    return any(isinstance(n, (AllocTape, RandL)) for n in iter_nodes(e))


def free_vars(e: Expr) -> frozenset:
    """Free variables of e, computed once per node instance"""
    cached = e.__dict__.get("_free")
    if cached is None:
        cached = _free_vars(e)
        object.__setattr__(e, "_free", cached)
    return cached


def _free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Val):
        return frozenset()
    if isinstance(e, Rec):
        return free_vars(e.body) - {e.f, e.x}
    if isinstance(e, Case):
        return (
            free_vars(e.scrutinee)
            | (free_vars(e.left_body) - {e.left_var})
            | (free_vars(e.right_body) - {e.right_var})
        )
    if isinstance(e, Let):
        return free_vars(e.bound) | (free_vars(e.body) - {e.name})
    if isinstance(e, LetPair):
        return free_vars(e.bound) | (free_vars(e.body) - {e.left, e.right})
    if isinstance(e, ListCase):
        return (
            free_vars(e.scrutinee)
            | free_vars(e.nil_body)
            | (free_vars(e.cons_body) - {e.head_var, e.tail_var})
        )
    result = frozenset()
    for child in children(e):
        result |= free_vars(child)
    return result


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    if base not in avoid:
        return base
    index = 1
    while f"{base}{index}" in avoid:
        index += 1
    return f"{base}{index}"


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------

def subst(e: Expr, name: Optional[str], value: Value) -> Expr:
    """Replace the free occurrences of `name` in e by the closed value"""
    if name is None or name == "_" or name not in free_vars(e):
        return e
    if isinstance(e, Var):
        return Val(value)
    if isinstance(e, Rec):
        # free_vars already excludes f and x, so name is not shadowed here
        return Rec(e.f, e.x, subst(e.body, name, value))
    if isinstance(e, Case):
        return Case(
            subst(e.scrutinee, name, value),
            e.left_var,
            e.left_body if e.left_var == name else subst(e.left_body, name, value),
            e.right_var,
            e.right_body if e.right_var == name else subst(e.right_body, name, value)
        )
    if isinstance(e, Let):
        body = e.body if e.name == name else subst(e.body, name, value)
        return Let(e.name, subst(e.bound, name, value), body)
    if isinstance(e, LetPair):
        shadowed = name in (e.left, e.right)
        body = e.body if shadowed else subst(e.body, name, value)
        return LetPair(e.left, e.right, subst(e.bound, name, value), body)
    if isinstance(e, ListCase):
        shadowed = name in (e.head_var, e.tail_var)
        return ListCase(
            subst(e.scrutinee, name, value),
            subst(e.nil_body, name, value),
            e.head_var,
            e.tail_var,
            e.cons_body if shadowed else subst(e.cons_body, name, value)
        )
    return map_children(e, lambda child: subst(child, name, value))


def subst_all(e: Expr, env: dict) -> Expr:
    for name in sorted(free_vars(e) & env.keys()):
        e = subst(e, name, env[name])
    return e


# ---------------------------------------------------------------------------
# Tape erasure
# ---------------------------------------------------------------------------

def erase(e: Expr) -> Expr:
    """
    Remove tape allocation and tape labels

    `alloctape b` becomes `let _ = b in ()` and `rand (l, b)` becomes
    `let b' = b in let _ = l in rand b'`, keeping the right-to-left order in
    which the original evaluates its operands.
    """
    if isinstance(e, Val):
        erased = _erase_value(e.value)
        return e if erased is e.value else Val(erased)
    if isinstance(e, AllocTape):
        return App(Rec(None, "_", Val(UNIT)), erase(e.bound))
    if isinstance(e, RandL):
        label = erase(e.label)
        bound_name = fresh_name("b", free_vars(label))
        return App(
            Rec(None, bound_name, App(Rec(None, "_", Rand(Var(bound_name))), label)),
            erase(e.bound)
        )
    return map_children(e, erase)


def _erase_value(v: Value) -> Value:
    if isinstance(v, RecV):
        body = erase(v.body)
        return v if body is v.body else RecV(v.f, v.x, body)
    if isinstance(v, PairV):
        left, right = _erase_value(v.left), _erase_value(v.right)
        if left is v.left and right is v.right:
            return v
        return PairV(left, right)
    if isinstance(v, (InlV, InrV)):
        inner = _erase_value(v.value)
        return v if inner is v.value else type(v)(inner)
    return v


__all__ = [
    "Node", "Value", "Int", "Bool", "Unit", "Loc", "Label", "PairV", "InlV", "InrV", "RecV",
    "UNIT", "TRUE", "FALSE",
    "Expr", "Val", "Var", "Rec", "App", "UnOp", "BinOp", "If", "Pair", "Fst", "Snd",
    "InjL", "InjR", "Case", "Alloc", "Load", "Store", "AllocN", "ArrayLoad", "ArrayStore",
    "Rand", "RandL", "AllocTape", "Fork", "Faa", "Cas",
    "Let", "LetPair", "Seq", "Par", "ListLit", "Cons", "ListCase", "Spawn", "Join",
    "NewLock", "Acquire", "Release", "And", "Or", "SUGAR_NODES",
    "OpenModule", "Definition", "Program",
    "children", "map_children", "iter_nodes", "is_core", "contains_tape_ops",
    "free_vars", "fresh_name", "subst", "subst_all", "erase"
]
