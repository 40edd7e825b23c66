"""
Reduced configuration graph for analyses without a step horizon

Thread-local steps (beta reduction, arithmetic, branching, pairs and sums)
have exactly one outcome and neither read nor write the machine state, so
they commute with every step of every other thread. `ReducedGraph` advances
each thread through them eagerly and keeps only the remaining steps (heap and
tape operations, sampling, fork) as scheduling decisions. Busy-wait loops then
close into cycles of the graph instead of unrolling with a horizon, and
`max_reach` solves the adversary's reachability problem on it exactly.

Thread 0 is never settled into a value: its last step decides when the
configuration becomes final, which the adversary may still delay.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Set, Tuple

import networkx as nx

from modules.distributions import ONE, ZERO, Dist
from modules.errors import MemoLimitExceeded
from modules.schedulers import SchedulerPolicy
from modules.semantics import Config, SchedView, State, Tape, head_redex, step_with, tpstep
from modules.syntax import App, BinOp, Case, Expr, Fst, If, InjL, InjR, Pair, Rec, Snd, UnOp, Val
from utils.constants import DEFAULT_MEMO_LIMIT, DEFAULT_POLICY_ITERATIONS, DEFAULT_SETTLE_LIMIT

logger = logging.getLogger(__name__)

LOCAL_REDEXES = (Rec, App, UnOp, BinOp, If, Pair, Fst, Snd, InjL, InjR, Case)

_NO_STATE = State()


def _only(outcomes: Dist):
    return next(iter(outcomes))


def local_step(e: Expr) -> Optional[Expr]:
    """The next expression when e's head redex is thread-local; None otherwise or when stuck"""
    if not isinstance(head_redex(e), LOCAL_REDEXES):
        return None
    result = step_with(e, _NO_STATE, _only)
    return None if result is None else result[0]


def settle(e: Expr, keep_unfinished: bool = False, limit: int = DEFAULT_SETTLE_LIMIT) -> Expr:
    """
    Advance an expression through thread-local steps

    Args:
        e: Thread expression
        keep_unfinished: Stop before the step that would make e a value
        limit: Most local steps taken in one call

    Returns:
        The first expression whose next step is not thread-local
    """
    for _ in range(limit):
        following = local_step(e)
        if following is None or (keep_unfinished and isinstance(following, Val)):
            break
        e = following
    return e


def settle_config(config: Config, indices: Optional[range] = None) -> Config:
    """Settle the given threads (all by default) of a configuration"""
    threads = list(config.threads)
    for index in indices if indices is not None else range(len(threads)):
        threads[index] = settle(threads[index], keep_unfinished=index == 0)
    return Config(tuple(threads), config.state)


@dataclass(frozen=True)
class Move:
    """One scheduling decision: step `thread`, reaching node ids with weights or losing `lost` mass to a stuck step"""
    thread: int
    successors: Tuple[Tuple[int, Fraction], ...]
    lost: Fraction = ZERO


class ReducedGraph:
    """
    Reachable settled configurations and their moves

    Args:
        root: Initial configuration, settled before exploration
        node_limit: Largest number of nodes before MemoLimitExceeded
    """

    def __init__(self, root: Config, node_limit: int = DEFAULT_MEMO_LIMIT):
        self.node_limit = node_limit
        self.configs: List[Config] = []
        self.moves: List[Tuple[Move, ...]] = []
        self._ids: Dict[Config, int] = {}
        self.root = self._node(settle_config(root))
        self._explore()
        logger.info(f"Reduced graph: {len(self.configs)} nodes")

    def __len__(self) -> int:
        return len(self.configs)

    def _node(self, config: Config) -> int:
        node_id = self._ids.get(config)
        if node_id is None:
            node_id = self._ids[config] = len(self.configs)
            self.configs.append(config)
            if len(self.configs) > self.node_limit:
                logger.warning(f"Node limit {self.node_limit} hit in the reduced graph")
                raise MemoLimitExceeded(self.node_limit, len(self.configs), None)
        return node_id

    def _explore(self) -> None:
        position = 0
        while position < len(self.configs):
            config = self.configs[position]
            self.moves.append(() if config.final else tuple(self._moves_of(config)))
            position += 1

    def _moves_of(self, config: Config):
        width = len(config.threads)
        for index, thread in enumerate(config.threads):
            if isinstance(thread, Val):
                continue
            outcomes = tpstep(config, index)
            successors: Dict[int, Fraction] = {}
            for successor, weight in outcomes.items():
                touched = [index] + list(range(width, len(successor.threads)))
                node_id = self._node(settle_config(successor, touched))
                successors[node_id] = successors.get(node_id, ZERO) + weight
            yield Move(index, tuple(successors.items()), ONE - outcomes.mass())

    def node_of(self, config: Config) -> Optional[int]:
        return self._ids.get(config)

    def final_results(self) -> set:
        return {config.result for config in self.configs if config.final}

    @cached_property
    def components(self) -> List[Set[int]]:
        """Strongly connected components, each listed after every component it can reach"""
        digraph = nx.DiGraph()
        digraph.add_nodes_from(range(len(self.configs)))
        for node_id, moves in enumerate(self.moves):
            for move in moves:
                digraph.add_edges_from((node_id, target) for target, _ in move.successors)
        condensed = nx.condensation(digraph)
        return [
            set(condensed.nodes[component]["members"])
            for component in reversed(list(nx.topological_sort(condensed)))
        ]


@dataclass
class ReachResult:
    """Optimal values per node and the move index chosen at each non-final node"""
    values: List[Fraction]
    choices: List[Optional[int]]
    iterations: int = 0

    def value(self, node_id: int) -> Fraction:
        return self.values[node_id]


def _move_value(move: Move, values: List[Fraction], lost_value: Fraction) -> Fraction:
    total = move.lost * lost_value
    for target, weight in move.successors:
        total += weight * values[target]
    return total


def solve_linear(rows: Dict[int, Dict[int, Fraction]], rhs: Dict[int, Fraction]) -> Dict[int, Fraction]:
    """
    Solve sum(rows[i][j] * x[j]) = rhs[i] exactly by sparse elimination

    The systems built here are (I - P) for substochastic P with every row
    leaking mass eventually, which are nonsingular M-matrices: every pivot
    stays positive without row exchanges.
    """
    rows = {i: dict(row) for i, row in rows.items()}
    rhs = dict(rhs)
    users: Dict[int, Set[int]] = {}
    for i, row in rows.items():
        for j in row:
            users.setdefault(j, set()).add(i)
    order = list(rows)
    done: Set[int] = set()
    for pivot in order:
        row = rows[pivot]
        factor = ONE / row.pop(pivot)
        row = {j: coefficient * factor for j, coefficient in row.items()}
        rows[pivot] = row
        rhs[pivot] *= factor
        done.add(pivot)
        for other in users.pop(pivot, ()):
            if other in done:
                continue
            target = rows[other]
            coefficient = target.pop(pivot, ZERO)
            if coefficient == 0:
                continue
            for j, value in row.items():
                updated = target.get(j, ZERO) - coefficient * value
                if updated:
                    target[j] = updated
                    users.setdefault(j, set()).add(other)
                else:
                    target.pop(j, None)
            rhs[other] -= coefficient * rhs[pivot]
    solution: Dict[int, Fraction] = {}
    for pivot in reversed(order):
        solution[pivot] = rhs[pivot] - sum(
            (value * solution[j] for j, value in rows[pivot].items()), ZERO
        )
    return solution


def _evaluate(
    graph: ReducedGraph,
    members: Set[int],
    policy: Dict[int, int],
    values: List[Fraction],
    lost_value: Fraction
) -> None:
    """Least solution of the policy's equations on one strongly connected component"""
    constant: Dict[int, Fraction] = {}
    inside: Dict[int, Dict[int, Fraction]] = {}
    for node_id, choice in policy.items():
        move = graph.moves[node_id][choice]
        total = move.lost * lost_value
        internal: Dict[int, Fraction] = {}
        for target, weight in move.successors:
            if target in members:
                internal[target] = internal.get(target, ZERO) + weight
            else:
                total += weight * values[target]
        constant[node_id] = total
        inside[node_id] = internal

    # only nodes that can reach a positive constant get a positive value
    predecessors: Dict[int, List[int]] = {}
    for node_id, internal in inside.items():
        for target in internal:
            predecessors.setdefault(target, []).append(node_id)
    live = {node_id for node_id, total in constant.items() if total > 0}
    frontier = list(live)
    while frontier:
        for source in predecessors.get(frontier.pop(), ()):
            if source not in live:
                live.add(source)
                frontier.append(source)

    for node_id in policy:
        values[node_id] = ZERO
    if not live:
        return
    rows = {}
    for node_id in live:
        row = {node_id: ONE}
        for target, weight in inside[node_id].items():
            if target in live:
                row[target] = row.get(target, ZERO) - weight
        rows[node_id] = row
    for node_id, value in solve_linear(rows, {n: constant[n] for n in live}).items():
        values[node_id] = value


def _solve_component(
    graph: ReducedGraph,
    members: Set[int],
    values: List[Fraction],
    choices: List[Optional[int]],
    lost_value: Fraction,
    max_iterations: int
) -> int:
    open_nodes = sorted(n for n in members if graph.moves[n])
    if not open_nodes:
        return 0
    cyclic = len(members) > 1 or any(
        target in members for move in graph.moves[open_nodes[0]] for target, _ in move.successors
    )
    # members are still zero, so this is the greedy policy on exits alone
    policy = {
        node_id: max(
            range(len(graph.moves[node_id])),
            key=lambda m, n=node_id: _move_value(graph.moves[n][m], values, lost_value)
        )
        for node_id in open_nodes
    }
    if not cyclic:
        node_id = open_nodes[0]
        values[node_id] = _move_value(graph.moves[node_id][policy[node_id]], values, lost_value)
        choices[node_id] = policy[node_id]
        return 0

    iterations = 0
    while True:
        iterations += 1
        _evaluate(graph, members, policy, values, lost_value)
        switched = False
        for node_id in open_nodes:
            current = _move_value(graph.moves[node_id][policy[node_id]], values, lost_value)
            for index, move in enumerate(graph.moves[node_id]):
                candidate = _move_value(move, values, lost_value)
                if candidate > current:
                    current, policy[node_id], switched = candidate, index, True
        if not switched:
            break
        if iterations >= max_iterations:
            logger.warning(f"Policy iteration stopped after {iterations} rounds; values are lower bounds")
            _evaluate(graph, members, policy, values, lost_value)
            break
    for node_id in open_nodes:
        choices[node_id] = policy[node_id]
    return iterations


def max_reach(
    graph: ReducedGraph,
    final_value: Callable[[Config], Fraction],
    lost_value: Fraction,
    max_iterations: int = DEFAULT_POLICY_ITERATIONS
) -> ReachResult:
    """
    Largest expected payoff over all schedulers, without a step limit

    A final configuration pays `final_value`, a stuck step pays `lost_value`
    per unit of lost mass and a run that never finishes pays nothing. The
    graph is solved one strongly connected component at a time, successors
    first; components with cycles use policy iteration with exact linear
    solves.
    """
    values: List[Fraction] = [ZERO] * len(graph)
    choices: List[Optional[int]] = [None] * len(graph)
    for node_id, config in enumerate(graph.configs):
        if config.final:
            values[node_id] = Fraction(final_value(config))

    iterations = 0
    for members in graph.components:
        iterations += _solve_component(graph, members, values, choices, lost_value, max_iterations)
    logger.info(f"max_reach: {len(graph)} nodes, {len(graph.components)} components, "
                f"{iterations} policy rounds, value {values[graph.root]}")
    return ReachResult(values, choices, iterations)


def principal_path(graph: ReducedGraph, result: ReachResult) -> List[int]:
    """Thread choices from the root along the successor contributing most, until a final node or a repeat"""
    script = []
    node_id, seen = graph.root, set()
    while node_id not in seen and result.choices[node_id] is not None:
        seen.add(node_id)
        move = graph.moves[node_id][result.choices[node_id]]
        script.append(move.thread)
        if not move.successors:
            break
        node_id, _ = max(move.successors, key=lambda item: item[1] * result.values[item[0]])
    return script


class ReducedWitness(SchedulerPolicy):
    """
    Replays a reduced-graph strategy on the unreduced semantics

    Pending thread-local steps are taken first, lowest thread index first;
    at a settled configuration the table names the thread. It sees tape
    queues because the adversary did.
    """

    name = "witness"
    initial = None
    reveal_tapes = True

    def __init__(self, table: Mapping[Config, int]):
        self.table: Dict[Config, int] = dict(table)

    def choose(self, zeta, view: SchedView) -> Dist:
        for index, thread in enumerate(view.threads):
            following = local_step(thread)
            if following is not None and not (index == 0 and isinstance(following, Val)):
                return Dist.ret((None, index))
        queues = view.tape_queues or ((),) * len(view.tape_bounds)
        state = State(view.heap, tuple(Tape(b, q) for b, q in zip(view.tape_bounds, queues)))
        return Dist.ret((None, self.table.get(Config(view.threads, state), 0)))

    @classmethod
    def from_result(cls, graph: ReducedGraph, result: ReachResult) -> "ReducedWitness":
        return cls({
            graph.configs[node_id]: graph.moves[node_id][choice].thread
            for node_id, choice in enumerate(result.choices)
            if choice is not None
        })
