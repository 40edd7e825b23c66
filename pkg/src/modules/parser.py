"""
Parsing, scope checking and desugaring of .cpl programs

`parse` turns text into a surface `Program`; `desugar` rewrites surface
forms into core expressions; `ModuleLoader` resolves `open NAME;;`
declarations, binds top-level definitions to closure values and produces the
closed core expression that the semantics executes.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from modules.errors import ProgramSyntaxError, UnboundVariableError, UnknownModuleError
from modules.syntax import (
    FALSE, TRUE, UNIT,
    Acquire, Alloc, AllocN, AllocTape, And, App, ArrayLoad, ArrayStore, BinOp, Bool,
    Cas, Case, Cons, Definition, Expr, Faa, Fork, Fst, If, InjL, InjR, Int, Join,
    Let, LetPair, ListCase, ListLit, Load, NewLock, OpenModule, Or, Pair, Par,
    Program, Rand, RandL, Rec, RecV, Release, Seq, Snd, Spawn, Store, UnOp, Val,
    Value, Var, free_vars, fresh_name, map_children, subst_all
)
from utils.constants import PROGRAM_FILE_EXTENSION

logger = logging.getLogger(__name__)

GRAMMAR_PATH = Path(__file__).parent / "cpl.lark"


@lru_cache(maxsize=1)
def get_parser() -> Lark:
    return Lark(GRAMMAR_PATH.read_text(encoding="utf-8"), parser="lalr", start="start")


def _curry(name: Optional[str], params: Tuple[str, ...], body: Expr) -> Expr:
    for param in reversed(params[1:]):
        body = Rec(None, param, body)
    return Rec(name, params[0], body)


def _binop(op: str):
    def build(self, left, right):
        return BinOp(op, left, right)
    return build


@v_args(inline=True)
class ProgramTransformer(Transformer):
    """Builds surface syntax nodes from the lark parse tree"""

    def start(self, *items):
        declarations = []
        main = None
        for item in items:
            if isinstance(item, (OpenModule, Definition)):
                declarations.append(item)
            else:
                main = item
        return Program(tuple(declarations), main)

    def open_module(self, name):
        return OpenModule(str(name))

    def params(self, *names):
        return tuple(str(n) for n in names)

    def def_fun(self, name, params, body):
        return Definition(str(name), _curry(None, params, body))

    def def_rec(self, name, params, body):
        return Definition(str(name), _curry(str(name), params, body))

    def def_value(self, name, expr):
        return Definition(str(name), expr)

    def let(self, name, bound, body):
        return Let(str(name), bound, body)

    def let_fun(self, name, params, bound, body):
        return Let(str(name), _curry(None, params, bound), body)

    def let_rec(self, name, params, bound, body):
        return Let(str(name), _curry(str(name), params, bound), body)

    def let_pair(self, left, right, bound, body):
        return LetPair(str(left), str(right), bound, body)

    def fun(self, params, body):
        return _curry(None, params, body)

    def rec(self, name, params, body):
        return _curry(str(name), params, body)

    def if_(self, cond, then, orelse):
        return If(cond, then, orelse)

    def case(self, scrutinee, left_var, left_body, right_var, right_body):
        return Case(scrutinee, str(left_var), left_body, str(right_var), right_body)

    def list_case(self, scrutinee, nil_body, head_var, tail_var, cons_body):
        return ListCase(scrutinee, nil_body, str(head_var), str(tail_var), cons_body)

    def seq(self, first, second):
        return Seq(first, second)

    def par(self, left, right):
        return Par(left, right)

    def store(self, target, value):
        if isinstance(target, ArrayLoad):
            return ArrayStore(target.array, target.index, value)
        return Store(target, value)

    def or_(self, left, right):
        return Or(left, right)

    def and_(self, left, right):
        return And(left, right)

    eq = _binop("==")
    ne = _binop("!=")
    lt = _binop("<")
    le = _binop("<=")
    gt = _binop(">")
    ge = _binop(">=")
    add = _binop("+")
    sub = _binop("-")
    mul = _binop("*")
    div = _binop("/")
    mod = _binop("%")

    def cons(self, head, tail):
        return Cons(head, tail)

    def neg(self, operand):
        return UnOp("neg", operand)

    def not_(self, operand):
        return UnOp("not", operand)

    def apply(self, fn, arg):
        return App(fn, arg)

    def ref(self, init):
        return Alloc(init)

    def rand(self, arg):
        # `rand (lbl, bound)` is the labelled form
        if isinstance(arg, Pair):
            return RandL(arg.left, arg.right)
        return Rand(arg)

    def alloctape(self, bound):
        return AllocTape(bound)

    def fork(self, body):
        return Fork(body)

    def fst(self, expr):
        return Fst(expr)

    def snd(self, expr):
        return Snd(expr)

    def inl(self, expr):
        return InjL(expr)

    def inr(self, expr):
        return InjR(expr)

    def spawn(self, expr):
        return Spawn(expr)

    def join(self, expr):
        return Join(expr)

    def newlock(self, expr):
        return NewLock(expr)

    def acquire(self, expr):
        return Acquire(expr)

    def release(self, expr):
        return Release(expr)

    def faa(self, loc, delta):
        return Faa(loc, delta)

    def cas(self, loc, expected, desired):
        return Cas(loc, expected, desired)

    def array(self, size, init):
        return AllocN(size, init)

    def index(self, array, idx):
        return ArrayLoad(array, idx)

    def load(self, loc):
        return Load(loc)

    def int(self, token):
        return Val(Int(int(token)))

    def true(self):
        return Val(TRUE)

    def false(self):
        return Val(FALSE)

    def unit(self):
        return Val(UNIT)

    def pair(self, left, right):
        return Pair(left, right)

    def nil(self):
        return ListLit(())

    def list(self, *items):
        return ListLit(tuple(items))

    def var(self, token):
        return Var(str(token))


def _syntax_error(err: UnexpectedInput, text: str) -> ProgramSyntaxError:
    if isinstance(err, UnexpectedToken):
        message = f"Unexpected token {err.token!r}"
        expected = err.expected
    elif isinstance(err, UnexpectedCharacters):
        message = f"Unexpected character {err.char!r}"
        expected = err.allowed or ()
    elif isinstance(err, UnexpectedEOF):
        message = "Unexpected end of input"
        expected = err.expected
    else:
        message = "Syntax error"
        expected = ()
    line = getattr(err, "line", 0) or 0
    column = getattr(err, "column", 0) or 0
    try:
        context = err.get_context(text)
    except Exception:
        context = None
    if line < 0:
        line, column = 0, 0
    return ProgramSyntaxError(message, line, column, expected, context)


def parse(text: str) -> Program:
    """
    Parse program text into surface syntax

    Raises:
        ProgramSyntaxError: With line, column and the expected-token set
    """
    try:
        tree = get_parser().parse(text)
    except UnexpectedInput as err:
        raise _syntax_error(err, text) from None
    return ProgramTransformer().transform(tree)


def parse_expr(text: str) -> Expr:
    """Parse a bare expression (no declarations)"""
    program = parse(text)
    if program.declarations or program.main is None:
        raise ProgramSyntaxError("Expected a single expression")
    return program.main


# ---------------------------------------------------------------------------
# Desugaring
# ---------------------------------------------------------------------------

_JOIN_LOOP = Rec(
    "join", "c",
    Case(Load(Var("c")), "_", App(Var("join"), Var("c")), "v", Var("v"))
)

_ACQUIRE_LOOP = Rec(
    "acquire", "l",
    If(Cas(Var("l"), Val(FALSE), Val(TRUE)), Val(UNIT), App(Var("acquire"), Var("l")))
)


def _let(name: str, bound: Expr, body: Expr) -> Expr:
    return App(Rec(None, name, body), bound)


def desugar(e: Expr) -> Expr:
    """Rewrite every surface form into core constructors"""
    if isinstance(e, (Val, Var)):
        return e
    if isinstance(e, Let):
        return _let(e.name, desugar(e.bound), desugar(e.body))
    if isinstance(e, Seq):
        return _let("_", desugar(e.first), desugar(e.second))
    if isinstance(e, LetPair):
        avoid = set(free_vars(e.body)) | {e.left, e.right}
        whole = fresh_name("p", avoid)
        inner = Let(e.left, Fst(Var(whole)), Let(e.right, Snd(Var(whole)), e.body))
        return _let(whole, desugar(e.bound), desugar(inner))
    if isinstance(e, Par):
        return _desugar_par(e)
    if isinstance(e, Spawn):
        cell = fresh_name("c", free_vars(e.expr))
        return desugar(
            Let(cell, Alloc(InjL(Val(UNIT))),
                Seq(Fork(Store(Var(cell), InjR(e.expr))), Var(cell)))
        )
    if isinstance(e, Join):
        return App(_JOIN_LOOP, desugar(e.expr))
    if isinstance(e, NewLock):
        if e.expr == Val(UNIT):
            return Alloc(Val(FALSE))
        return desugar(Seq(e.expr, Alloc(Val(FALSE))))
    if isinstance(e, Acquire):
        return App(_ACQUIRE_LOOP, desugar(e.expr))
    if isinstance(e, Release):
        return Store(desugar(e.expr), Val(FALSE))
    if isinstance(e, ListLit):
        result: Expr = InjL(Val(UNIT))
        for item in reversed(e.items):
            result = InjR(Pair(desugar(item), result))
        return result
    if isinstance(e, Cons):
        return InjR(Pair(desugar(e.head), desugar(e.tail)))
    if isinstance(e, ListCase):
        avoid = set(free_vars(e.cons_body)) | {e.head_var, e.tail_var}
        cell = fresh_name("z", avoid)
        cons_body = Let(e.head_var, Fst(Var(cell)), Let(e.tail_var, Snd(Var(cell)), e.cons_body))
        return Case(desugar(e.scrutinee), "_", desugar(e.nil_body), cell, desugar(cons_body))
    if isinstance(e, And):
        return If(desugar(e.left), desugar(e.right), Val(FALSE))
    if isinstance(e, Or):
        return If(desugar(e.left), Val(TRUE), desugar(e.right))
    return map_children(e, desugar)


def _desugar_par(e: Par) -> Expr:
    """
    `e1 ||| e2` spawns e2 into a result cell, runs e1, then busy-waits on the
    cell and returns the pair of both results
    """
    avoid = set(free_vars(e.left)) | set(free_vars(e.right))
    handle = fresh_name("h", avoid)
    avoid.add(handle)
    first = fresh_name("v1", avoid)
    avoid.add(first)
    second = fresh_name("v2", avoid)
    return desugar(
        Let(handle, Spawn(e.right),
            Let(first, e.left,
                Let(second, Join(Var(handle)), Pair(Var(first), Var(second)))))
    )


# ---------------------------------------------------------------------------
# Scope checking and module loading
# ---------------------------------------------------------------------------

def check_scope(e: Expr, bound: Iterable[str] = (), where: str = "program") -> None:
    """
    Raises:
        UnboundVariableError: For the alphabetically first unbound variable
    """
    unbound = free_vars(e) - set(bound)
    if unbound:
        raise UnboundVariableError(sorted(unbound)[0], where)


def close_definition(definition: Definition, env: Dict[str, Value]) -> Value:
    """Turn a top-level definition into a closed value"""
    core = desugar(definition.expr)
    check_scope(core, env.keys(), where=f"definition of '{definition.name}'")
    closed = subst_all(core, env)
    if isinstance(closed, Rec):
        return RecV(closed.f, closed.x, closed.body)
    if isinstance(closed, Val):
        return closed.value
    raise ValueError(
        f"Top-level definition '{definition.name}' must be a function or a literal value"
    )


@dataclass
class LoadedProgram:
    """A parsed program with its closed core expression"""
    program: Program
    expr: Optional[Expr]
    exports: Dict[str, Value] = field(default_factory=dict)
    env: Dict[str, Value] = field(default_factory=dict)


class ModuleLoader:
    """
    Resolves `open NAME;;` against `NAME.cpl` files

    Modules named in `prelude` are opened implicitly in every program and in
    every module that is not itself part of the prelude.
    """

    def __init__(self, search_dirs: Iterable[Path] = (), prelude: Iterable[str] = ()):
        self.search_dirs: List[Path] = [Path(d) for d in search_dirs]
        self.prelude: Tuple[str, ...] = tuple(prelude)
        self._modules: Dict[str, Dict[str, Value]] = {}

    def find(self, name: str, source_dir: Optional[Path] = None) -> Path:
        candidates = ([Path(source_dir)] if source_dir else []) + self.search_dirs
        for directory in candidates:
            path = directory / f"{name}{PROGRAM_FILE_EXTENSION}"
            if path.is_file():
                return path
        raise UnknownModuleError(name, [str(d) for d in candidates])

    def module(self, name: str, source_dir: Optional[Path] = None, _stack: Tuple[str, ...] = ()) -> Dict[str, Value]:
        """Exported definitions of a module, loading it on first use"""
        if name in self._modules:
            return self._modules[name]
        if name in _stack:
            raise ValueError(f"Cyclic module dependency: {' -> '.join(_stack + (name,))}")
        path = self.find(name, source_dir)
        logger.debug(f"Loading module '{name}' from {path}")
        program = parse(path.read_text(encoding="utf-8"))
        if program.main is not None:
            raise ValueError(f"Module '{name}' must contain only declarations")
        loaded = self._elaborate(program, f"module '{name}'", path.parent, _stack + (name,))
        self._modules[name] = loaded.exports
        return loaded.exports

    def load(self, text: str, source_dir: Optional[Path] = None, where: str = "program") -> LoadedProgram:
        """
        Parse, scope-check and close a program

        Raises:
            ProgramSyntaxError, UnboundVariableError, UnknownModuleError
        """
        return self._elaborate(parse(text), where, source_dir, ())

    def load_file(self, path: Path) -> LoadedProgram:
        path = Path(path)
        return self.load(path.read_text(encoding="utf-8"), source_dir=path.parent, where=str(path))

    def _elaborate(self, program: Program, where: str, source_dir: Optional[Path], stack: Tuple[str, ...]) -> LoadedProgram:
        env: Dict[str, Value] = {}
        if not any(name in self.prelude for name in stack):
            for name in self.prelude:
                env.update(self.module(name, source_dir, stack))
        exports: Dict[str, Value] = {}
        for declaration in program.declarations:
            if isinstance(declaration, OpenModule):
                env.update(self.module(declaration.name, source_dir, stack))
            else:
                value = close_definition(declaration, env)
                env[declaration.name] = value
                exports[declaration.name] = value
        expr = None
        if program.main is not None:
            core = desugar(program.main)
            check_scope(core, env.keys(), where)
            expr = subst_all(core, env)
        return LoadedProgram(program, expr, exports, env)


def load_program(text: str, loader: Optional[ModuleLoader] = None) -> Expr:
    """Closed core expression of a program text (no stdlib unless the loader has one)"""
    loaded = (loader or ModuleLoader()).load(text)
    if loaded.expr is None:
        raise ValueError("Program has no main expression")
    return loaded.expr
