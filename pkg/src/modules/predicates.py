"""
Predicate mini-language over result values

    ret > 0
    exists n in 0..1. ret == ((n, n), (n, n))
    fst ret == snd ret && !(fst ret < 0)

Evaluation is total: a comparison whose operands have the wrong shape is
false, and a predicate holds only when it evaluates to `true`.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, Optional

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from modules.errors import PredicateSyntaxError
from modules.syntax import FALSE, TRUE, UNIT, Bool, Int, PairV, Value

GRAMMAR_PATH = Path(__file__).parent / "predicate.lark"

# (env, ret) -> Value or None
Evaluator = Callable[[Dict[str, Value], Value], Optional[Value]]


@lru_cache(maxsize=1)
def get_parser() -> Lark:
    return Lark(GRAMMAR_PATH.read_text(encoding="utf-8"), parser="lalr", start="start")


def _truth(value: Optional[Value]) -> bool:
    return value == TRUE


def _compare(op: str) -> Callable:
    def build(self, left: Evaluator, right: Evaluator) -> Evaluator:
        def evaluate(env, ret):
            a, b = left(env, ret), right(env, ret)
            if a is None or b is None:
                return FALSE
            if op == "==":
                return Bool(a == b)
            if op == "!=":
                return Bool(a != b)
            if not (isinstance(a, Int) and isinstance(b, Int)):
                return FALSE
            return Bool({
                "<": a.n < b.n, "<=": a.n <= b.n, ">": a.n > b.n, ">=": a.n >= b.n
            }[op])
        return evaluate
    return build


def _project(first: bool) -> Callable:
    def build(self, inner: Evaluator) -> Evaluator:
        def evaluate(env, ret):
            value = inner(env, ret)
            if not isinstance(value, PairV):
                return None
            return value.left if first else value.right
        return evaluate
    return build


def _constant(value: Value) -> Callable:
    def build(self) -> Evaluator:
        return lambda env, ret: value
    return build


@v_args(inline=True)
class PredicateCompiler(Transformer):
    """Compiles the parse tree into nested evaluator closures"""

    def start(self, pred):
        return pred

    def exists(self, name, low, high, body):
        name, low, high = str(name), int(low), int(high)

        def evaluate(env, ret):
            for n in range(low, high + 1):
                if _truth(body({**env, name: Int(n)}, ret)):
                    return TRUE
            return FALSE
        return evaluate

    def or_(self, left, right):
        return lambda env, ret: Bool(_truth(left(env, ret)) or _truth(right(env, ret)))

    def and_(self, left, right):
        return lambda env, ret: Bool(_truth(left(env, ret)) and _truth(right(env, ret)))

    def not_(self, inner):
        return lambda env, ret: Bool(not _truth(inner(env, ret)))

    eq = _compare("==")
    ne = _compare("!=")
    lt = _compare("<")
    le = _compare("<=")
    gt = _compare(">")
    ge = _compare(">=")

    fst = _project(True)
    snd = _project(False)

    def ret(self):
        return lambda env, ret: ret

    def int(self, token):
        value = Int(int(token))
        return lambda env, ret: value

    true = _constant(TRUE)
    false = _constant(FALSE)
    unit = _constant(UNIT)

    def pair(self, left, right):
        def evaluate(env, ret):
            a, b = left(env, ret), right(env, ret)
            if a is None or b is None:
                return None
            return PairV(a, b)
        return evaluate

    def var(self, token):
        name = str(token)

        def evaluate(env, ret):
            if name not in env:
                raise PredicateSyntaxError(f"Unbound name '{name}' in predicate")
            return env[name]
        return evaluate


def _check_names(tree, text: str) -> None:
    """Reject names not bound by an enclosing `exists`"""

    def walk(node, scope):
        if getattr(node, "data", None) == "exists":
            name = str(node.children[0])
            for child in node.children[1:]:
                walk(child, scope | {name})
            return
        if getattr(node, "data", None) == "var":
            name = str(node.children[0])
            if name not in scope:
                raise PredicateSyntaxError(f"Unbound name '{name}' in predicate: {text}")
            return
        for child in getattr(node, "children", ()):
            walk(child, scope)

    walk(tree, frozenset())


@dataclass(frozen=True)
class Predicate:
    """A parsed predicate; `negated` flips `holds`"""
    text: str
    evaluator: Evaluator = field(compare=False, repr=False)
    negated: bool = False

    def holds(self, value: Value) -> bool:
        result = _truth(self.evaluator({}, value))
        return result != self.negated

    def violated(self, value: Value) -> bool:
        return not self.holds(value)

    def negate(self) -> "Predicate":
        return Predicate(self.text, self.evaluator, not self.negated)

    def __str__(self) -> str:
        return f"!({self.text})" if self.negated else self.text


def parse_predicate(text: str) -> Predicate:
    """
    Parse predicate text

    Args:
        text: Predicate source, e.g. "ret > 0"

    Returns:
        Predicate

    Raises:
        PredicateSyntaxError: On a syntax error or an unbound name
    """
    try:
        tree = get_parser().parse(text)
        _check_names(tree, text)
        evaluator = PredicateCompiler().transform(tree)
    except UnexpectedInput as err:
        raise PredicateSyntaxError(
            f"Invalid predicate {text!r} at column {getattr(err, 'column', '?')}"
        ) from None
    except VisitError as err:
        raise PredicateSyntaxError(f"Invalid predicate {text!r}: {err.orig_exc}") from None
    return Predicate(text.strip(), evaluator)


TRUE_PREDICATE = parse_predicate("true")
