"""
Canonical text rendering of programs, values and configurations

`pretty` inserts exactly the parentheses the grammar in cpl.lark needs, so
`parse(pretty(e))` rebuilds `e` for every tree the parser can produce.
Heap locations and tape labels only exist at run time; they render as
`<loc n>` and `<tape n>` and do not reparse.
"""

from typing import List, Tuple

from modules.syntax import (
    Acquire, Alloc, AllocN, AllocTape, And, App, ArrayLoad, ArrayStore, BinOp, Bool,
    Cas, Case, Cons, Definition, Expr, Faa, Fork, Fst, If, InjL, InjR, InlV, InrV, Int,
    Join, Label, Let, LetPair, ListCase, ListLit, Load, Loc, NewLock, Node, OpenModule,
    Or, Pair, PairV, Par, Program, Rand, RandL, Rec, RecV, Release, Seq, Snd, Spawn,
    Store, UnOp, Unit, Val, Value, Var
)

# Binding strength, loosest first; matches the rule nesting in cpl.lark.
EXPR, SEQ, PAR, ASSIGN, OR, AND, CMP, CONS, ADD, MUL, UNARY, APP, POSTFIX, PREFIX, ATOM = range(15)

_COMPARISONS = {"==", "!=", "<", "<=", ">", ">="}
_ADDITIVE = {"+", "-"}
_MULTIPLICATIVE = {"*", "/", "%"}

_KEYWORD_FORMS = {
    Alloc: ("ref", "init"),
    Rand: ("rand", "bound"),
    AllocTape: ("alloctape", "bound"),
    Fork: ("fork", "body"),
    Fst: ("fst", "expr"),
    Snd: ("snd", "expr"),
    InjL: ("inl", "expr"),
    InjR: ("inr", "expr"),
    Spawn: ("spawn", "expr"),
    Join: ("join", "expr"),
    NewLock: ("newlock", "expr"),
    Acquire: ("acquire", "expr"),
    Release: ("release", "expr"),
}


def _at(e: Expr, level: int) -> str:
    text, own = _render(e)
    return f"({text})" if own < level else text


def _params(fn: Rec) -> Tuple[List[str], Expr]:
    """Collect curried parameters: rec f x -> fun y -> b gives [x, y], b"""
    params = [fn.x]
    body = fn.body
    while isinstance(body, Rec) and body.f is None:
        params.append(body.x)
        body = body.body
    return params, body


def _binding(name: str, bound: Expr) -> str:
    """Left side of `let ... = ...`, folding function parameters into it"""
    if isinstance(bound, Rec) and bound.f in (None, name):
        params, body = _params(bound)
        prefix = "rec " if bound.f == name else ""
        return f"{prefix}{name} {' '.join(params)} = {_at(body, EXPR)}"
    return f"{name} = {_at(bound, EXPR)}"


def render_value(v: Value) -> str:
    """Display text of a run-time value"""
    return _render_value(v)[0]


def _render_value(v: Value) -> Tuple[str, int]:
    if isinstance(v, Int):
        return (str(v.n), ATOM) if v.n >= 0 else (f"-{-v.n}", UNARY)
    if isinstance(v, Bool):
        return ("true" if v.b else "false"), ATOM
    if isinstance(v, Unit):
        return "()", ATOM
    if isinstance(v, Loc):
        return f"<loc {v.addr}>", ATOM
    if isinstance(v, Label):
        return f"<tape {v.index}>", ATOM
    if isinstance(v, PairV):
        return f"({render_value(v.left)}, {render_value(v.right)})", ATOM
    if isinstance(v, (InlV, InrV)):
        keyword = "inl" if isinstance(v, InlV) else "inr"
        text, own = _render_value(v.value)
        return f"{keyword} {text if own >= POSTFIX else '(' + text + ')'}", APP
    if isinstance(v, RecV):
        return _render(Rec(v.f, v.x, v.body))
    raise TypeError(f"Not a value: {v!r}")


def _render(e: Expr) -> Tuple[str, int]:
    if isinstance(e, Val):
        return _render_value(e.value)
    if isinstance(e, Var):
        return e.name, ATOM

    if isinstance(e, Rec):
        params, body = _params(e)
        head = f"rec {e.f}" if e.f is not None else "fun"
        return f"{head} {' '.join(params)} -> {_at(body, EXPR)}", EXPR
    if isinstance(e, Let):
        return f"let {_binding(e.name, e.bound)} in {_at(e.body, EXPR)}", EXPR
    if isinstance(e, LetPair):
        return f"let ({e.left}, {e.right}) = {_at(e.bound, EXPR)} in {_at(e.body, EXPR)}", EXPR
    if isinstance(e, If):
        return f"if {_at(e.cond, EXPR)} then {_at(e.then, EXPR)} else {_at(e.orelse, EXPR)}", EXPR
    if isinstance(e, Case):
        return (
            f"match {_at(e.scrutinee, EXPR)} with inl {e.left_var} => {_at(e.left_body, EXPR)}"
            f" | inr {e.right_var} => {_at(e.right_body, EXPR)} end"
        ), EXPR
    if isinstance(e, ListCase):
        return (
            f"match {_at(e.scrutinee, EXPR)} with [] => {_at(e.nil_body, EXPR)}"
            f" | {e.head_var} :: {e.tail_var} => {_at(e.cons_body, EXPR)} end"
        ), EXPR

    if isinstance(e, Seq):
        return f"{_at(e.first, PAR)}; {_at(e.second, EXPR)}", SEQ
    if isinstance(e, Par):
        return f"{_at(e.left, PAR)} ||| {_at(e.right, ASSIGN)}", PAR
    if isinstance(e, Store):
        return f"{_at(e.loc, OR)} := {_at(e.value, ASSIGN)}", ASSIGN
    if isinstance(e, ArrayStore):
        return f"{_at(e.array, POSTFIX)}.[{_at(e.index, EXPR)}] := {_at(e.value, ASSIGN)}", ASSIGN
    if isinstance(e, Or):
        return f"{_at(e.left, OR)} || {_at(e.right, AND)}", OR
    if isinstance(e, And):
        return f"{_at(e.left, AND)} && {_at(e.right, CMP)}", AND
    if isinstance(e, Cons):
        return f"{_at(e.head, ADD)} :: {_at(e.tail, CONS)}", CONS

    if isinstance(e, BinOp):
        if e.op in _COMPARISONS:
            return f"{_at(e.left, CONS)} {e.op} {_at(e.right, CONS)}", CMP
        if e.op in _ADDITIVE:
            return f"{_at(e.left, ADD)} {e.op} {_at(e.right, MUL)}", ADD
        if e.op in _MULTIPLICATIVE:
            return f"{_at(e.left, MUL)} {e.op} {_at(e.right, UNARY)}", MUL
        raise ValueError(f"Unknown operator: {e.op}")
    if isinstance(e, UnOp):
        symbol = "-" if e.op == "neg" else "not "
        return f"{symbol}{_at(e.operand, UNARY)}", UNARY

    if isinstance(e, App):
        return f"{_at(e.fn, APP)} {_at(e.arg, POSTFIX)}", APP
    if type(e) in _KEYWORD_FORMS:
        keyword, field = _KEYWORD_FORMS[type(e)]
        return f"{keyword} {_at(getattr(e, field), POSTFIX)}", APP
    if isinstance(e, RandL):
        return f"rand ({_at(e.label, EXPR)}, {_at(e.bound, EXPR)})", APP
    if isinstance(e, Faa):
        return f"faa ({_at(e.loc, EXPR)}, {_at(e.delta, EXPR)})", APP
    if isinstance(e, Cas):
        return f"cas ({_at(e.loc, EXPR)}, {_at(e.expected, EXPR)}, {_at(e.desired, EXPR)})", APP
    if isinstance(e, AllocN):
        return f"array ({_at(e.size, EXPR)}, {_at(e.init, EXPR)})", APP

    if isinstance(e, ArrayLoad):
        return f"{_at(e.array, POSTFIX)}.[{_at(e.index, EXPR)}]", POSTFIX
    if isinstance(e, Load):
        return f"!{_at(e.loc, PREFIX)}", PREFIX

    if isinstance(e, Pair):
        return f"({_at(e.left, EXPR)}, {_at(e.right, EXPR)})", ATOM
    if isinstance(e, ListLit):
        return "[" + "; ".join(_at(item, PAR) for item in e.items) + "]", ATOM

    raise TypeError(f"Cannot render {type(e).__name__}")


def pretty(e: Node) -> str:
    """
    Render an expression or a whole program as reparseable text

    Args:
        e: Expression, Program, or a single declaration

    Returns:
        Canonical program text
    """
    if isinstance(e, Program):
        lines = [pretty(declaration) for declaration in e.declarations]
        if e.main is not None:
            lines.append(pretty(e.main))
        return "\n".join(lines)
    if isinstance(e, OpenModule):
        return f"open {e.name};;"
    if isinstance(e, Definition):
        return f"let {_binding(e.name, e.expr)};;"
    if isinstance(e, Value):
        return render_value(e)
    return _render(e)[0]


def dump_config(config) -> str:
    """
    Debug dump of a configuration: thread pool, heap and tape store

    See docs/state-dump.md for the layout.
    """
    lines = ["threads:"]
    for index, thread in enumerate(config.threads):
        lines.append(f"  [{index}] {pretty(thread)}")
    lines.append("heap:")
    if not config.state.heap:
        lines.append("  (empty)")
    for addr, value in enumerate(config.state.heap):
        lines.append(f"  <loc {addr}> = {render_value(value)}")
    lines.append("tapes:")
    if not config.state.tapes:
        lines.append("  (empty)")
    for index, tape in enumerate(config.state.tapes):
        queue = ", ".join(str(n) for n in tape.queue)
        lines.append(f"  <tape {index}> = bound {tape.bound}, queue [{queue}]")
    return "\n".join(lines)
