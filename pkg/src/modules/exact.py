"""
Exact analysis over the configuration graph

* `value_dist`: the value distribution of thread 0 under one policy, as a
  forward sweep that merges equal (scheduler state, configuration) pairs.
* `sup_violation`: the largest probability, over every deterministic
  history-dependent choice of threads, of returning a value that violates a
  predicate. The adversary sees the full configuration including tape
  contents, so the result upper-bounds every tape-censored scheduler.
* `min_mass`: the smallest probability of not getting stuck within the
  horizon over the same class of adversaries.

Both optimisations run an iterative dynamic program over (configuration,
remaining steps) with a transition cache shared across horizons. With the
horizon "unbounded" they are solved instead on the reduced configuration
graph of `modules.reduction`, which gives the limit of the bounded values.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple, Union

from modules.distributions import ONE, ZERO, Dist
from modules.errors import MemoLimitExceeded
from modules.predicates import Predicate
from modules.pretty import render_value
from modules.reduction import ReducedGraph, ReducedWitness, ReachResult, max_reach, principal_path
from modules.schedulers import RoundRobin, SchedulerPolicy, WitnessPolicy, enumerate_scripts
from modules.semantics import Config, exec_n, initial_config, sched_step, tpstep
from modules.syntax import Expr, Val, erase
from utils.constants import DEFAULT_MEMO_LIMIT, UNBOUNDED

logger = logging.getLogger(__name__)

# A thread's successors as (configuration, probability) pairs
Successors = Tuple[Tuple[Config, Fraction], ...]

# A step count, or UNBOUNDED for the limit analysis
Horizon = Union[int, str]


class ConfigGraph:
    """
    Cache of per-thread transitions

    `successors(config)` lists one entry per thread: None for a thread that
    is already a value (a stutter), otherwise its tpstep outcomes (empty when
    the thread is stuck).
    """

    def __init__(self):
        self._edges: Dict[Config, Tuple[Optional[Successors], ...]] = {}

    def __len__(self) -> int:
        return len(self._edges)

    def successors(self, config: Config) -> Tuple[Optional[Successors], ...]:
        edges = self._edges.get(config)
        if edges is None:
            edges = tuple(
                None if isinstance(thread, Val) else tuple(tpstep(config, index).items())
                for index, thread in enumerate(config.threads)
            )
            self._edges[config] = edges
        return edges


@dataclass
class ValueDistResult:
    dist: Dist
    residual: Fraction
    pending: Fraction
    memo_entries: int
    horizon: int
    finals: Optional[Dict[Config, Fraction]] = field(default=None, repr=False)

    @property
    def stuck(self) -> Fraction:
        return self.residual - self.pending


@dataclass
class OptimisationResult:
    """
    Outcome of a sup_violation or min_mass analysis

    `horizon` is None for the limit analysis; its strategy is then keyed by
    (settled configuration, None) and its script lists decision points only.
    """
    value: Fraction
    horizon: Optional[int]
    memo_entries: int
    final_reached: bool
    strategy: Dict[Tuple[Config, Optional[int]], int] = field(default_factory=dict, repr=False)
    script: List[int] = field(default_factory=list)

    @property
    def unbounded(self) -> bool:
        return self.horizon is None

    def witness_policy(self) -> SchedulerPolicy:
        if self.unbounded:
            return ReducedWitness({config: index for (config, _), index in self.strategy.items()})
        return WitnessPolicy.from_strategy(self.strategy, self.horizon)


@dataclass
class BoundVerdict:
    holds: bool
    value: Fraction
    bound: Fraction
    horizon: Optional[int]
    witness: Optional[List[int]] = None
    result: Optional[OptimisationResult] = field(default=None, repr=False)


@dataclass
class PolicyComparison:
    """Original against erased value distribution under one policy"""
    policy: str
    original: ValueDistResult
    erased: ValueDistResult

    @property
    def complete(self) -> bool:
        return self.original.residual == 0 and self.erased.residual == 0

    @property
    def equal(self) -> bool:
        return self.original.dist == self.erased.dist

    @property
    def refuted(self) -> bool:
        """Some outcome already has more mass on one side than the other side can still reach"""
        left, right = self.original, self.erased
        for outcome in left.dist.support() | right.dist.support():
            if left.dist[outcome] > right.dist[outcome] + right.pending:
                return True
            if right.dist[outcome] > left.dist[outcome] + left.pending:
                return True
        return False


@dataclass
class LimitComparison:
    """Largest probability of one event over all schedulers, without a step limit"""
    event: str
    original: Fraction
    erased: Fraction

    @property
    def equal(self) -> bool:
        return self.original == self.erased


@dataclass
class EraseCheckResult:
    """
    Evidence that erasing tapes preserves the program's behaviour

    A fixed-policy comparison refutes erasure once one side has more mass on
    an outcome than the other can still reach, and confirms it once both
    sides have mass one. Limit comparisons need no horizon and are always
    conclusive. With neither kind of conclusive evidence the check is
    inconclusive (`passed` is None).
    """
    horizon: int
    comparisons: List[PolicyComparison]
    violation: Optional[LimitComparison] = None
    outcomes: List[LimitComparison] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def limits(self) -> List[LimitComparison]:
        return ([self.violation] if self.violation is not None else []) + self.outcomes

    @property
    def sup_original(self) -> Optional[Fraction]:
        return None if self.violation is None else self.violation.original

    @property
    def sup_erased(self) -> Optional[Fraction]:
        return None if self.violation is None else self.violation.erased

    @property
    def inconclusive(self) -> List[str]:
        return [c.policy for c in self.comparisons if not c.complete and not c.refuted]

    @property
    def refuted(self) -> List[str]:
        return [c.policy for c in self.comparisons if c.refuted] + [
            limit.event for limit in self.limits if not limit.equal
        ]

    @property
    def passed(self) -> Optional[bool]:
        if self.refuted:
            return False
        if self.limits or any(c.complete for c in self.comparisons):
            return True
        return None

    @property
    def status(self) -> str:
        return {True: "passed", False: "failed", None: "inconclusive"}[self.passed]


@dataclass
class HorizonSearch:
    """Values seen while doubling the horizon; the last entry is the answer"""
    history: List[Tuple[int, Fraction]]
    result: object
    converged: bool


class ExactEngine:
    """
    Exact analyses sharing one transition cache

    Args:
        memo_limit: Largest number of memo entries before MemoLimitExceeded
    """

    def __init__(self, memo_limit: int = DEFAULT_MEMO_LIMIT):
        if memo_limit <= 0:
            raise ValueError("memo_limit must be positive")
        self.memo_limit = memo_limit
        self.graph = ConfigGraph()
        self._reduced: Dict[Config, ReducedGraph] = {}

    # Value distribution under a fixed policy

    def value_dist(
        self,
        config: Config,
        policy: Optional[SchedulerPolicy] = None,
        horizon: int = 0,
        zeta=None,
        memoize: bool = True,
        keep_finals: bool = False
    ) -> ValueDistResult:
        """
        Distribution of thread 0's value within `horizon` scheduler steps

        Args:
            keep_finals: Also collect the final configurations with their mass

        Returns:
            Result with the distribution and the residual (non-final) mass
        """
        policy = policy or RoundRobin()
        zeta = policy.initial if zeta is None else zeta
        if not memoize:
            dist = exec_n(policy, zeta, config, horizon)
            return ValueDistResult(dist, ONE - dist.mass(), ZERO, 0, horizon)

        finished: Dict[object, Fraction] = {}
        finals: Optional[Dict[Config, Fraction]] = {} if keep_finals else None
        frontier: Dict[Tuple[object, Config], Fraction] = {(zeta, config): ONE}
        entries = 0
        for depth in range(horizon + 1):
            still_running: Dict[Tuple[object, Config], Fraction] = {}
            for (z, c), weight in frontier.items():
                if c.final:
                    finished[c.result] = finished.get(c.result, ZERO) + weight
                    if finals is not None:
                        finals[c] = finals.get(c, ZERO) + weight
                else:
                    still_running[(z, c)] = weight
            entries += len(frontier)
            if entries > self.memo_limit:
                logger.warning(f"Memo limit {self.memo_limit} hit at depth {depth}")
                raise MemoLimitExceeded(self.memo_limit, entries, depth)
            if depth == horizon or not still_running:
                frontier = still_running
                break
            frontier = {}
            for (z, c), weight in still_running.items():
                for successor, inner in sched_step(policy, z, c).items():
                    frontier[successor] = frontier.get(successor, ZERO) + weight * inner

        dist = Dist.from_trusted(finished)
        pending = sum(frontier.values(), ZERO)
        logger.info(f"value_dist: horizon {horizon}, {entries} states, residual {ONE - dist.mass()}")
        return ValueDistResult(dist, ONE - dist.mass(), pending, entries, horizon, finals)

    # Adversarial dynamic programs

    def _optimise(
        self,
        root: Config,
        horizon: int,
        final_value: Callable[[Config], Fraction],
        exhausted_value: Fraction,
        maximise: bool
    ) -> OptimisationResult:
        finals: Dict[Config, Fraction] = {}
        memo: Dict[Tuple[Config, int], Fraction] = {}
        strategy: Dict[Tuple[Config, int], int] = {}

        def known(config: Config, remaining: int) -> Optional[Fraction]:
            if config.final:
                value = finals.get(config)
                if value is None:
                    value = finals[config] = final_value(config)
                return value
            if remaining == 0:
                return exhausted_value
            return memo.get((config, remaining))

        root_value = known(root, horizon)
        if root_value is not None:
            return OptimisationResult(root_value, horizon, len(finals), root.final)

        stack = [(root, horizon)]
        while stack:
            config, remaining = stack[-1]
            if (config, remaining) in memo:
                stack.pop()
                continue
            edges = self.graph.successors(config)
            missing = []
            for outcomes in edges:
                if outcomes is None:
                    continue
                for successor, _ in outcomes:
                    if known(successor, remaining - 1) is None:
                        missing.append((successor, remaining - 1))
            if missing:
                stack.extend(missing)
                continue

            best_value, best_index = None, 0
            for index, outcomes in enumerate(edges):
                # a stutter never beats the best real move
                if outcomes is None:
                    continue
                value = sum(
                    (weight * known(successor, remaining - 1) for successor, weight in outcomes),
                    ZERO
                )
                if best_value is None or (value > best_value if maximise else value < best_value):
                    best_value, best_index = value, index
            memo[(config, remaining)] = best_value
            strategy[(config, remaining)] = best_index
            stack.pop()

            if len(memo) > self.memo_limit:
                logger.warning(f"Memo limit {self.memo_limit} hit at horizon {horizon}")
                raise MemoLimitExceeded(self.memo_limit, len(memo) + len(finals), horizon)

        result = OptimisationResult(
            memo[(root, horizon)], horizon, len(memo) + len(finals), bool(finals), strategy
        )
        result.script = self._principal_script(root, horizon, strategy, known, maximise)
        logger.info(f"DP at horizon {horizon}: value {result.value}, {result.memo_entries} entries")
        return result

    def _principal_script(self, root, horizon, strategy, known, maximise) -> List[int]:
        """Thread choices along the branch contributing most to the optimum"""
        script = []
        config, remaining = root, horizon
        while not config.final and remaining > 0 and (config, remaining) in strategy:
            index = strategy[(config, remaining)]
            script.append(index)
            outcomes = self.graph.successors(config)[index]
            if not outcomes:
                break
            config, _ = max(
                outcomes,
                key=lambda item: item[1] * known(item[0], remaining - 1) if maximise else item[1]
            )
            remaining -= 1
        return script

    def sup_violation(self, config: Config, horizon: Horizon, predicate: Predicate) -> OptimisationResult:
        """Largest probability of a predicate-violating final value within the horizon"""
        if horizon == UNBOUNDED:
            return self.sup_violation_unbounded(config, predicate)
        return self._optimise(
            config, horizon,
            lambda c: ZERO if predicate.holds(c.result) else ONE,
            ZERO, maximise=True
        )

    def min_mass(self, config: Config, horizon: Horizon) -> OptimisationResult:
        """Smallest probability of not being stuck after the horizon"""
        if horizon == UNBOUNDED:
            return self.min_mass_unbounded(config)
        return self._optimise(config, horizon, lambda c: ONE, ONE, maximise=False)

    def check_bound(self, config: Config, horizon: Horizon, predicate: Predicate, bound: Fraction) -> BoundVerdict:
        result = self.sup_violation(config, horizon, predicate)
        holds = result.value <= bound
        return BoundVerdict(holds, result.value, Fraction(bound), result.horizon,
                            None if holds else result.script, result)

    # Limit analyses on the reduced graph

    def reduced_graph(self, config: Config) -> ReducedGraph:
        """Reduced configuration graph from `config`, built once per engine"""
        graph = self._reduced.get(config)
        if graph is None:
            graph = self._reduced[config] = ReducedGraph(config, self.memo_limit)
        return graph

    def _limit_result(self, graph: ReducedGraph, reach: ReachResult, value: Fraction) -> OptimisationResult:
        strategy = {
            (graph.configs[node_id], None): graph.moves[node_id][choice].thread
            for node_id, choice in enumerate(reach.choices)
            if choice is not None
        }
        final_reached = any(config.final for config in graph.configs)
        return OptimisationResult(value, None, len(graph), final_reached, strategy, principal_path(graph, reach))

    def sup_violation_unbounded(self, config: Config, predicate: Predicate) -> OptimisationResult:
        """
        Largest probability, over all schedulers and without a step limit, of
        returning a value that violates the predicate

        Raises:
            MemoLimitExceeded: If the reduced graph outgrows the memo limit
        """
        graph = self.reduced_graph(config)
        reach = max_reach(graph, lambda c: ZERO if predicate.holds(c.result) else ONE, ZERO)
        logger.info(f"Unbounded sup_violation: {reach.value(graph.root)} over {len(graph)} nodes")
        return self._limit_result(graph, reach, reach.value(graph.root))

    def min_mass_unbounded(self, config: Config) -> OptimisationResult:
        """One minus the largest probability, over all schedulers, of ever taking a stuck step"""
        graph = self.reduced_graph(config)
        reach = max_reach(graph, lambda c: ZERO, ONE)
        logger.info(f"Unbounded min_mass: {ONE - reach.value(graph.root)} over {len(graph)} nodes")
        return self._limit_result(graph, reach, ONE - reach.value(graph.root))

    def sup_outcome(self, config: Config, outcome) -> Fraction:
        """Largest probability, over all schedulers, of returning `outcome`"""
        graph = self.reduced_graph(config)
        reach = max_reach(graph, lambda c: ONE if c.result == outcome else ZERO, ZERO)
        return reach.value(graph.root)

    # Erasure

    def scripted_value_dists(
        self,
        config: Config,
        horizon: int,
        max_threads: int,
        length: int
    ) -> Dict[Tuple[int, ...], ValueDistResult]:
        """
        Value distributions under every scripted policy of `length` choices

        Scripts sharing a prefix share its frontier, and the round-robin tail
        after a script is computed once per configuration.
        """
        if max_threads < 1 or length < 0:
            raise ValueError("max_threads must be positive and length non-negative")
        depth = min(length, horizon)
        tail = horizon - depth
        continuations: Dict[Config, ValueDistResult] = {}
        results: Dict[Tuple[int, ...], ValueDistResult] = {}

        def finish(frontier: Dict[Config, Fraction], prefix: Tuple[int, ...]) -> None:
            acc: Dict[object, Fraction] = {}
            pending = ZERO
            for c, weight in frontier.items():
                rest = continuations.get(c)
                if rest is None:
                    rest = continuations[c] = self.value_dist(c, RoundRobin(), tail)
                for outcome, inner in rest.dist.items():
                    acc[outcome] = acc.get(outcome, ZERO) + weight * inner
                pending += weight * rest.pending
            dist = Dist.from_trusted(acc)
            result = ValueDistResult(dist, ONE - dist.mass(), pending, len(continuations), horizon)
            for suffix in itertools.product(range(max_threads), repeat=length - depth):
                results[prefix + suffix] = result

        def expand(frontier: Dict[Config, Fraction], prefix: Tuple[int, ...]) -> None:
            if len(prefix) == depth:
                finish(frontier, prefix)
                return
            for index in range(max_threads):
                following: Dict[Config, Fraction] = {}
                for c, weight in frontier.items():
                    edges = None if c.final else self.graph.successors(c)[index % len(c.threads)]
                    if edges is None:
                        following[c] = following.get(c, ZERO) + weight
                        continue
                    for successor, inner in edges:
                        following[successor] = following.get(successor, ZERO) + weight * inner
                expand(following, prefix + (index,))

        expand({config: ONE}, ())
        logger.info(f"{len(results)} scripts of length {length}, {len(continuations)} round-robin tails")
        return results

    def erase_check(
        self,
        program: Expr,
        horizon: int,
        predicate: Optional[Predicate] = None,
        policy: Optional[SchedulerPolicy] = None,
        script_length: int = 0,
        max_threads: int = 2,
        limits: bool = True
    ) -> EraseCheckResult:
        """
        Compare a program with its tape-erased version

        The erased program spends extra steps on the beta-redexes that replace
        tape operations, so fixed policies run it at twice the horizon. The
        limit comparisons need no horizon: those extra steps are thread-local
        and vanish from the reduced graph.

        Args:
            program: Closed core program
            horizon: Steps for the original program under fixed policies
            predicate: If given, also compare the largest violation probability
            policy: Fixed policy compared first (round robin by default)
            script_length: Also compare under every scripted policy of this length
            max_threads: Thread indices the scripts range over
            limits: Compare the largest probability of every final value
        """
        if horizon == UNBOUNDED:
            raise ValueError("erase_check compares fixed policies and needs a numeric horizon")
        original, erased = initial_config(program), initial_config(erase(program))
        policy = policy or RoundRobin()
        comparisons = [PolicyComparison(
            policy.name,
            self.value_dist(original, policy, horizon),
            self.value_dist(erased, policy, 2 * horizon)
        )]
        if script_length > 0:
            left = self.scripted_value_dists(original, horizon, max_threads, script_length)
            right = self.scripted_value_dists(erased, 2 * horizon, max_threads, script_length)
            comparisons.extend(
                PolicyComparison(scripted.name, left[scripted.script], right[scripted.script])
                for scripted in enumerate_scripts(max_threads, script_length)
            )
        for comparison in comparisons:
            if comparison.refuted:
                logger.info(f"Erased program differs under {comparison.policy}")
        result = EraseCheckResult(horizon, comparisons)
        if predicate is not None or limits:
            try:
                self._compare_limits(result, original, erased, predicate, limits)
            except MemoLimitExceeded as err:
                logger.warning(f"Limit comparison skipped: {err}")
                result.violation, result.outcomes = None, []
                result.notes.append(f"limit comparison skipped: {err}")
        return result

    def _compare_limits(self, result: EraseCheckResult, original: Config, erased: Config,
                        predicate: Optional[Predicate], outcomes: bool) -> None:
        if predicate is not None:
            result.violation = LimitComparison(
                f"violation of {predicate}",
                self.sup_violation_unbounded(original, predicate).value,
                self.sup_violation_unbounded(erased, predicate).value
            )
        if outcomes:
            values = self.reduced_graph(original).final_results() | self.reduced_graph(erased).final_results()
            for value in sorted(values, key=lambda v: v.sort_key()):
                result.outcomes.append(LimitComparison(
                    f"ret = {render_value(value)}",
                    self.sup_outcome(original, value),
                    self.sup_outcome(erased, value)
                ))

    def auto_horizon(
        self,
        evaluate: Callable[[int], object],
        start: int = 16,
        max_horizon: int = 1024,
        value_of: Callable[[object], Fraction] = lambda r: r.value,
        final_reached: Callable[[object], bool] = lambda r: r.final_reached
    ) -> HorizonSearch:
        """
        Double the horizon until two consecutive values agree (once a final
        configuration is reachable) or `max_horizon` is passed

        Raises:
            MemoLimitExceeded: With the last completed value attached
        """
        horizon = max(start, 1)
        history: List[Tuple[int, Fraction]] = []
        result = None
        while True:
            try:
                result = evaluate(horizon)
            except MemoLimitExceeded as err:
                err.last_value = history[-1][1] if history else None
                raise
            value = value_of(result)
            history.append((horizon, value))
            logger.info(f"Horizon {horizon}: {value}")
            if len(history) >= 2 and history[-2][1] == value and final_reached(result):
                return HorizonSearch(history, result, True)
            if horizon * 2 > max_horizon:
                return HorizonSearch(history, result, False)
            horizon *= 2


def value_dist(config: Config, policy: Optional[SchedulerPolicy] = None, horizon: int = 0,
               memo_limit: int = DEFAULT_MEMO_LIMIT, memoize: bool = True) -> Tuple[Dist, Fraction]:
    result = ExactEngine(memo_limit).value_dist(config, policy, horizon, memoize=memoize)
    return result.dist, result.residual


def sup_violation(config: Config, horizon: Horizon, predicate: Predicate,
                  memo_limit: int = DEFAULT_MEMO_LIMIT) -> Fraction:
    return ExactEngine(memo_limit).sup_violation(config, horizon, predicate).value


def min_mass(config: Config, horizon: Horizon, memo_limit: int = DEFAULT_MEMO_LIMIT) -> Fraction:
    return ExactEngine(memo_limit).min_mass(config, horizon).value


def check_bound(config: Config, horizon: Horizon, predicate: Predicate, bound: Fraction,
                memo_limit: int = DEFAULT_MEMO_LIMIT) -> BoundVerdict:
    return ExactEngine(memo_limit).check_bound(config, horizon, predicate, bound)


def erase_check(program: Expr, horizon: int, predicate: Optional[Predicate] = None,
                policy: Optional[SchedulerPolicy] = None, script_length: int = 0,
                memo_limit: int = DEFAULT_MEMO_LIMIT) -> EraseCheckResult:
    return ExactEngine(memo_limit).erase_check(program, horizon, predicate, policy, script_length)
