"""
Probabilistic small-step semantics of the concurrent language

A configuration is a thread pool plus a machine state. `step` reduces one
thread's expression, `tpstep` lifts that to the pool, and `sched_step` lets a
scheduler policy pick the thread. Stuck expressions step to the empty
distribution; nothing in this module raises for a stuck program.

Operands are evaluated right to left everywhere (application, binary
operators, pairs, stores, faa, cas). Fresh heap locations and tape labels
are the smallest unused index, so equal histories give equal configurations.
"""

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple, Union

from modules.distributions import ZERO, Dist
from modules.syntax import (
    FALSE, TRUE, UNIT,
    Alloc, AllocN, AllocTape, App, ArrayLoad, ArrayStore, BinOp, Bool, Case, Cas,
    Expr, Faa, Fork, Fst, If, InjL, InjR, InlV, InrV, Int, Label, Load, Loc, Node,
    Pair, PairV, Rand, RandL, Rec, RecV, Snd, Store, UnOp, Val, Value, free_vars,
    node, subst
)

logger = logging.getLogger(__name__)


class Tape(NamedTuple):
    """Presampling tape: values in {0..bound}, consumed from the front"""
    bound: int
    queue: Tuple[int, ...] = ()


@node
class State(Node):
    """Heap cells indexed by location and tapes indexed by label"""
    heap: Tuple[Value, ...] = ()
    tapes: Tuple[Tape, ...] = ()


@node
class Config(Node):
    threads: Tuple[Expr, ...]
    state: State

    @property
    def final(self) -> bool:
        return isinstance(self.threads[0], Val)

    @property
    def result(self) -> Optional[Value]:
        return self.threads[0].value if self.final else None


@node
class SchedView(Node):
    """
    What a scheduler may observe: threads, heap, and the allocated tapes'
    bounds. `tape_queues` stays None except for policies built with
    `reveal_tapes=True`, which exist to test erasability failures.
    """
    threads: Tuple[Expr, ...]
    heap: Tuple[Value, ...]
    tape_bounds: Tuple[int, ...]
    tape_queues: Optional[Tuple[Tuple[int, ...], ...]] = None


StepResult = Tuple[Expr, State, Tuple[Expr, ...]]

EMPTY = Dist.null()


def initial_config(program: Expr) -> Config:
    return Config((program,), State())


# ---------------------------------------------------------------------------
# Expression steps
# ---------------------------------------------------------------------------

# Subexpressions evaluated before the node itself reduces, in evaluation order.
_EVAL_ORDER: Dict[type, Tuple[str, ...]] = {
    App: ("arg", "fn"),
    UnOp: ("operand",),
    BinOp: ("right", "left"),
    If: ("cond",),
    Pair: ("right", "left"),
    Fst: ("expr",),
    Snd: ("expr",),
    InjL: ("expr",),
    InjR: ("expr",),
    Case: ("scrutinee",),
    Alloc: ("init",),
    Load: ("loc",),
    Store: ("value", "loc"),
    AllocN: ("init", "size"),
    ArrayLoad: ("index", "array"),
    ArrayStore: ("value", "index", "array"),
    Rand: ("bound",),
    RandL: ("bound", "label"),
    AllocTape: ("bound",),
    Faa: ("delta", "loc"),
    Cas: ("desired", "expected", "loc"),
}


def _ret(e: Expr, state: State, forked: Tuple[Expr, ...] = ()) -> Dist:
    return Dist.ret((e, state, forked))


def _uniform_ints(bound: int, state: State) -> Dist:
    weight = Fraction(1, bound + 1)
    return Dist.from_trusted({(Val(Int(n)), state, ()): weight for n in range(bound + 1)})


def _truncdiv(a: int, b: int) -> int:
    quotient = abs(a) // abs(b)
    return quotient if (a >= 0) == (b >= 0) else -quotient


def _binop(op: str, left: Value, right: Value) -> Optional[Value]:
    if op == "==":
        return Bool(left == right)
    if op == "!=":
        return Bool(left != right)
    if not (isinstance(left, Int) and isinstance(right, Int)):
        return None
    a, b = left.n, right.n
    if op == "+":
        return Int(a + b)
    if op == "-":
        return Int(a - b)
    if op == "*":
        return Int(a * b)
    if op in ("/", "%"):
        if b == 0:
            return None
        quotient = _truncdiv(a, b)
        return Int(quotient if op == "/" else a - b * quotient)
    if op == "<":
        return Bool(a < b)
    if op == "<=":
        return Bool(a <= b)
    if op == ">":
        return Bool(a > b)
    if op == ">=":
        return Bool(a >= b)
    return None


def _cell(state: State, loc: Value, offset: int = 0) -> Optional[int]:
    if not isinstance(loc, Loc) or offset < 0:
        return None
    addr = loc.addr + offset
    return addr if addr < len(state.heap) else None


def _write(state: State, addr: int, value: Value) -> State:
    heap = state.heap[:addr] + (value,) + state.heap[addr + 1:]
    return State(heap, state.tapes)


def head_step(e: Expr, state: State) -> Dist:
    """Step a redex whose evaluated operands are all values"""
    if isinstance(e, Rec):
        if free_vars(e):
            return EMPTY
        return _ret(Val(RecV(e.f, e.x, e.body)), state)

    if isinstance(e, App):
        fn = e.fn.value
        if not isinstance(fn, RecV):
            return EMPTY
        body = subst(fn.body, fn.x, e.arg.value)
        if fn.f is not None and fn.f != fn.x:
            body = subst(body, fn.f, fn)
        return _ret(body, state)

    if isinstance(e, UnOp):
        v = e.operand.value
        if e.op == "neg" and isinstance(v, Int):
            return _ret(Val(Int(-v.n)), state)
        if e.op == "not" and isinstance(v, Bool):
            return _ret(Val(Bool(not v.b)), state)
        return EMPTY

    if isinstance(e, BinOp):
        result = _binop(e.op, e.left.value, e.right.value)
        return EMPTY if result is None else _ret(Val(result), state)

    if isinstance(e, If):
        cond = e.cond.value
        if not isinstance(cond, Bool):
            return EMPTY
        return _ret(e.then if cond.b else e.orelse, state)

    if isinstance(e, Pair):
        return _ret(Val(PairV(e.left.value, e.right.value)), state)

    if isinstance(e, (Fst, Snd)):
        v = e.expr.value
        if not isinstance(v, PairV):
            return EMPTY
        return _ret(Val(v.left if isinstance(e, Fst) else v.right), state)

    if isinstance(e, InjL):
        return _ret(Val(InlV(e.expr.value)), state)
    if isinstance(e, InjR):
        return _ret(Val(InrV(e.expr.value)), state)

    if isinstance(e, Case):
        v = e.scrutinee.value
        if isinstance(v, InlV):
            return _ret(subst(e.left_body, e.left_var, v.value), state)
        if isinstance(v, InrV):
            return _ret(subst(e.right_body, e.right_var, v.value), state)
        return EMPTY

    if isinstance(e, Alloc):
        loc = Loc(len(state.heap))
        return _ret(Val(loc), State(state.heap + (e.init.value,), state.tapes))

    if isinstance(e, Load):
        addr = _cell(state, e.loc.value)
        return EMPTY if addr is None else _ret(Val(state.heap[addr]), state)

    if isinstance(e, Store):
        addr = _cell(state, e.loc.value)
        if addr is None:
            return EMPTY
        return _ret(Val(UNIT), _write(state, addr, e.value.value))

    if isinstance(e, AllocN):
        size = e.size.value
        if not isinstance(size, Int) or size.n < 1:
            return EMPTY
        loc = Loc(len(state.heap))
        return _ret(Val(loc), State(state.heap + (e.init.value,) * size.n, state.tapes))

    if isinstance(e, (ArrayLoad, ArrayStore)):
        index = e.index.value
        if not isinstance(index, Int):
            return EMPTY
        addr = _cell(state, e.array.value, index.n)
        if addr is None:
            return EMPTY
        if isinstance(e, ArrayLoad):
            return _ret(Val(state.heap[addr]), state)
        return _ret(Val(UNIT), _write(state, addr, e.value.value))

    if isinstance(e, Rand):
        bound = e.bound.value
        if not isinstance(bound, Int) or bound.n < 0:
            return EMPTY
        return _uniform_ints(bound.n, state)

    if isinstance(e, RandL):
        label, bound = e.label.value, e.bound.value
        if not isinstance(label, Label) or label.index >= len(state.tapes):
            return EMPTY
        if not isinstance(bound, Int) or bound.n < 0:
            return EMPTY
        tape = state.tapes[label.index]
        if tape.bound != bound.n or not tape.queue:
            # bound mismatch samples fresh and leaves the tape alone
            return _uniform_ints(bound.n, state)
        popped = Tape(tape.bound, tape.queue[1:])
        tapes = state.tapes[:label.index] + (popped,) + state.tapes[label.index + 1:]
        return _ret(Val(Int(tape.queue[0])), State(state.heap, tapes))

    if isinstance(e, AllocTape):
        bound = e.bound.value
        if not isinstance(bound, Int) or bound.n < 0:
            return EMPTY
        label = Label(len(state.tapes))
        return _ret(Val(label), State(state.heap, state.tapes + (Tape(bound.n),)))

    if isinstance(e, Fork):
        return _ret(Val(UNIT), state, (e.body,))

    if isinstance(e, Faa):
        addr = _cell(state, e.loc.value)
        delta = e.delta.value
        if addr is None or not isinstance(delta, Int):
            return EMPTY
        old = state.heap[addr]
        if not isinstance(old, Int):
            return EMPTY
        return _ret(Val(old), _write(state, addr, Int(old.n + delta.n)))

    if isinstance(e, Cas):
        addr = _cell(state, e.loc.value)
        if addr is None:
            return EMPTY
        if state.heap[addr] == e.expected.value:
            return _ret(Val(TRUE), _write(state, addr, e.desired.value))
        return _ret(Val(FALSE), state)

    # variables and surface forms never reduce
    return EMPTY


def step(e: Expr, state: State) -> Dist:
    """
    One reduction step of an expression

    Args:
        e: Thread expression
        state: Current heap and tapes

    Returns:
        Distribution over (expression, state, forked threads); empty when e
        is a value or stuck
    """
    if isinstance(e, Val):
        return EMPTY
    for name in _EVAL_ORDER.get(type(e), ()):
        child = getattr(e, name)
        if not isinstance(child, Val):
            inner = step(child, state)
            return inner.map(lambda r: (replace(e, **{name: r[0]}), r[1], r[2]))
    return head_step(e, state)


def tpstep(config: Config, index: int) -> Dist:
    """
    Step thread `index` of a configuration

    Returns:
        Empty for final configurations, the unchanged configuration when the
        thread is already a value, otherwise the stepped pool with forked
        threads appended

    Raises:
        IndexError: If index is not a thread of the pool
    """
    threads = config.threads
    if not 0 <= index < len(threads):
        raise IndexError(f"Thread index {index} out of range for {len(threads)} threads")
    if config.final:
        return EMPTY
    thread = threads[index]
    if isinstance(thread, Val):
        return Dist.ret(config)
    return step(thread, config.state).map(
        lambda r: Config(threads[:index] + (r[0],) + threads[index + 1:] + r[2], r[1])
    )


def head_redex(e: Expr) -> Optional[Expr]:
    """The subexpression that `step` reduces next; None for a value"""
    while not isinstance(e, Val):
        for name in _EVAL_ORDER.get(type(e), ()):
            child = getattr(e, name)
            if not isinstance(child, Val):
                e = child
                break
        else:
            return e
    return None


def step_with(e: Expr, state: State, pick: Callable[[Dist], StepResult]) -> Optional[StepResult]:
    """
    One reduction step with the head redex's distribution resolved by `pick`

    Plugs the single picked result back into the evaluation context instead
    of lifting a distribution through it. None when e is a value or stuck.
    """
    if isinstance(e, Val):
        return None
    for name in _EVAL_ORDER.get(type(e), ()):
        child = getattr(e, name)
        if not isinstance(child, Val):
            inner = step_with(child, state, pick)
            if inner is None:
                return None
            return replace(e, **{name: inner[0]}), inner[1], inner[2]
    outcomes = head_step(e, state)
    return pick(outcomes) if outcomes else None


def tpstep_with(config: Config, index: int, pick: Callable[[Dist], StepResult]) -> Optional[Config]:
    """Sampled counterpart of `tpstep`: one successor, or None when the thread is stuck"""
    threads = config.threads
    if not 0 <= index < len(threads):
        raise IndexError(f"Thread index {index} out of range for {len(threads)} threads")
    if config.final:
        return None
    thread = threads[index]
    if isinstance(thread, Val):
        return config
    result = step_with(thread, config.state, pick)
    if result is None:
        return None
    return Config(threads[:index] + (result[0],) + threads[index + 1:] + result[2], result[1])


# ---------------------------------------------------------------------------
# Scheduling
# ---------------------------------------------------------------------------

def censor(config: Config) -> SchedView:
    """Scheduler view of a configuration with tape queues redacted"""
    state = config.state
    return SchedView(config.threads, state.heap, tuple(t.bound for t in state.tapes))


def view_for(policy, config: Config) -> SchedView:
    if getattr(policy, "reveal_tapes", False):
        state = config.state
        return SchedView(
            config.threads, state.heap,
            tuple(t.bound for t in state.tapes),
            tuple(t.queue for t in state.tapes)
        )
    return censor(config)


def sched_step(policy, zeta, config: Config) -> Dist:
    """Distribution over (scheduler state, configuration) after one scheduled step"""
    choices = policy.choose(zeta, view_for(policy, config))
    return choices.bind(
        lambda choice: tpstep(config, choice[1]).map(lambda c: (choice[0], c))
    )


def exec_n(policy, zeta, config: Config, n: int) -> Dist:
    """
    Distribution of thread 0's value after at most n scheduler steps

    Direct recursion; the exact engine computes the same distribution with
    merging of equal configurations.
    """
    if config.final:
        return Dist.ret(config.result)
    if n == 0:
        return EMPTY
    return sched_step(policy, zeta, config).bind(
        lambda pair: exec_n(policy, pair[0], pair[1], n - 1)
    )


def pexec_n(policy, zeta, config: Config, n: int) -> Dist:
    """Partial execution: distribution over (scheduler state, configuration) after n steps"""
    frontier = Dist.ret((zeta, config))
    for _ in range(n):
        if all(c.final for _, c in frontier):
            break
        acc: dict = {}
        for (z, c), weight in frontier.items():
            if c.final:
                acc[(z, c)] = acc.get((z, c), ZERO) + weight
                continue
            for successor, inner in sched_step(policy, z, c).items():
                acc[successor] = acc.get(successor, ZERO) + weight * inner
        frontier = Dist.from_trusted(acc)
    return frontier


# ---------------------------------------------------------------------------
# Presampling and erasability
# ---------------------------------------------------------------------------

def presample(state: State, label: Union[Label, int], value: int) -> State:
    """
    Append a value to the end of a tape

    Raises:
        ValueError: If the label is not allocated or value is outside {0..bound}
    """
    index = label.index if isinstance(label, Label) else label
    if not 0 <= index < len(state.tapes):
        raise ValueError(f"Tape {index} is not allocated")
    tape = state.tapes[index]
    if not 0 <= value <= tape.bound:
        raise ValueError(f"Value {value} is outside tape bound {tape.bound}")
    tapes = state.tapes[:index] + (Tape(tape.bound, tape.queue + (value,)),) + state.tapes[index + 1:]
    return State(state.heap, tapes)


@dataclass
class ErasabilityVerdict:
    passed: bool
    counterexample: Optional[Tuple[Expr, ...]] = None
    presampled_mass: Fraction = ZERO
    direct_mass: Fraction = ZERO


def _thread_pools(dist: Dist) -> Dist:
    return dist.map(lambda pair: pair[1].threads)


def erasability_check(policy, zeta, config: Config, label: Union[Label, int], n: int) -> ErasabilityVerdict:
    """
    Check that presampling one uniform value onto a tape leaves the
    thread-pool distribution of `pexec_n` unchanged

    Returns:
        Verdict with the first differing thread pool on failure
    """
    index = label.index if isinstance(label, Label) else label
    if not 0 <= index < len(config.state.tapes):
        raise ValueError(f"Tape {index} is not allocated")
    bound = config.state.tapes[index].bound
    weight = Fraction(1, bound + 1)

    presampled: dict = {}
    for value in range(bound + 1):
        shifted = Config(config.threads, presample(config.state, index, value))
        for pool, mass in _thread_pools(pexec_n(policy, zeta, shifted, n)).items():
            presampled[pool] = presampled.get(pool, ZERO) + weight * mass
    direct = _thread_pools(pexec_n(policy, zeta, config, n))

    lhs = Dist.from_trusted(presampled)
    verdict = ErasabilityVerdict(lhs == direct, None, lhs.mass(), direct.mass())
    if not verdict.passed:
        differing = [pool for pool in set(lhs) | set(direct) if lhs[pool] != direct[pool]]
        verdict.counterexample = min(differing, key=repr)
        logger.info(f"Erasability failed on tape {index} at horizon {n}")
    return verdict


def tape_configs(policy, zeta, config: Config, n: int) -> List[Tuple[object, Config]]:
    """Reachable (scheduler state, configuration) pairs within n steps that have a tape"""
    found = []
    seen = set()
    frontier = [(zeta, config)]
    for _ in range(n + 1):
        successors = []
        for z, c in frontier:
            if (z, c) in seen:
                continue
            seen.add((z, c))
            if c.state.tapes and not c.final:
                found.append((z, c))
            if not c.final:
                successors.extend(sched_step(policy, z, c))
        frontier = successors
    return found
