"""
Monte Carlo estimation of violation probabilities

Each trial samples one trajectory of the scheduled semantics. Trial i draws
from a Philox counter-based generator seeded with SeedSequence([seed, i]),
so trials share no state and any trial can be replayed on its own. The same
holds across worker processes: splitting the trials into blocks never
changes the counts.

Trials of one process share a `TransitionCache`, so a thread step is
expanded once per configuration and afterwards only sampled.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import beta

from modules.distributions import Dist
from modules.predicates import Predicate, parse_predicate
from modules.schedulers import SchedulerPolicy
from modules.semantics import Config, tpstep, tpstep_with, view_for
from modules.syntax import Value
from utils.constants import (
    DEFAULT_CONFIDENCE,
    DEFAULT_MAX_STEPS,
    DEFAULT_MC_WORKERS,
    DEFAULT_TRANSITION_CACHE,
    DEFAULT_TRIAL_BLOCK
)

logger = logging.getLogger(__name__)

# Above this common denominator sampling switches to floating point
_EXACT_SAMPLING_LIMIT = 1 << 62

# One thread step: (successor, probability) pairs, empty when the thread is stuck
Edges = Tuple[Tuple[Config, Fraction], ...]


@dataclass(frozen=True)
class TrialOutcome:
    kind: str  # "value" | "timeout" | "stuck"
    steps_taken: int
    value: Optional[Value] = None


@dataclass
class Estimate:
    successes: int
    trials: int
    point: float
    ci_low: float
    ci_high: float
    confidence: float
    timeouts: int
    stuck: int = 0


def make_rng(seed: int, trial: Optional[int] = None) -> np.random.Generator:
    """Counter-based generator keyed by (seed, trial)"""
    entropy = [seed] if trial is None else [seed, trial]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _pick(items: Sequence[Tuple[object, Fraction]], rng: np.random.Generator):
    if len(items) == 1:
        return items[0][0]
    common = math.lcm(*(weight.denominator for _, weight in items))
    if common < _EXACT_SAMPLING_LIMIT:
        draw = int(rng.integers(common))
        for outcome, weight in items:
            draw -= weight.numerator * (common // weight.denominator)
            if draw < 0:
                return outcome
        return items[-1][0]
    point = Fraction(rng.random())
    for outcome, weight in items:
        point -= weight
        if point < 0:
            return outcome
    return items[-1][0]


def sample(dist: Dist, rng: np.random.Generator):
    """
    Draw one outcome of a distribution with total mass one

    Outcomes keep the distribution's insertion order, which is deterministic
    for the semantics, so a fixed stream always picks the same outcome.
    """
    return _pick(list(dist.items()), rng)


class TransitionCache:
    """
    Thread steps shared by the trials of one process

    Keyed by (configuration, thread index). Once `limit` entries are stored,
    new configurations are stepped without being kept.
    """

    def __init__(self, limit: int = DEFAULT_TRANSITION_CACHE):
        if limit < 0:
            raise ValueError(f"Cache limit must be non-negative, got {limit}")
        self.limit = limit
        self._edges: Dict[Tuple[Config, int], Edges] = {}

    def __len__(self) -> int:
        return len(self._edges)

    def edges(self, config: Config, index: int) -> Edges:
        key = (config, index)
        found = self._edges.get(key)
        if found is None:
            found = tuple(tpstep(config, index).items())
            if len(self._edges) < self.limit:
                self._edges[key] = found
        return found


def run_trial(config: Config, policy: SchedulerPolicy, seed: Optional[int], max_steps: int = DEFAULT_MAX_STEPS,
              rng: Optional[np.random.Generator] = None,
              cache: Optional[TransitionCache] = None) -> TrialOutcome:
    """
    Sample one scheduled execution

    Args:
        config: Initial configuration
        policy: round_robin, scripted or uniform_random policy
        seed: Seed of the pseudorandom stream (ignored when rng is given)
        max_steps: Scheduler steps before the trial is a timeout
        rng: Generator to draw from instead of one built from seed
        cache: Expanded thread steps to sample from and extend; without one
            each step resolves its random choices as it reduces

    Returns:
        Thread 0's value, a timeout, or stuck when the chosen thread cannot step

    Raises:
        ValueError: If the policy cannot be sampled or neither seed nor rng is given
    """
    if not policy.samplable:
        raise ValueError(f"Policy {policy.name} cannot be sampled")
    if rng is None:
        if seed is None:
            raise ValueError("run_trial needs a seed or a generator")
        rng = make_rng(seed)
    pick = partial(sample, rng=rng)
    zeta = policy.initial
    for steps in range(max_steps + 1):
        if config.final:
            return TrialOutcome("value", steps, config.result)
        if steps == max_steps:
            break
        choice = policy.draw(zeta, config, rng)
        if choice is None:
            choice = sample(policy.choose(zeta, view_for(policy, config)), rng)
        zeta, index = choice
        if cache is None:
            successor = tpstep_with(config, index, pick)
        else:
            edges = cache.edges(config, index)
            successor = _pick(edges, rng) if edges else None
        if successor is None:
            return TrialOutcome("stuck", steps)
        config = successor
    return TrialOutcome("timeout", max_steps)


def ci(successes: int, trials: int, confidence: float = DEFAULT_CONFIDENCE) -> Tuple[float, float]:
    """
    Clopper-Pearson interval for a binomial proportion

    With zero successes the interval is (0, 1 - alpha ** (1 / n)); with all
    successes it is (alpha ** (1 / n), 1).

    Raises:
        ValueError: If the counts or the confidence are out of range
    """
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError(f"Need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}")
    if not 0 < confidence < 1:
        raise ValueError(f"Confidence must lie in (0, 1), got {confidence}")
    alpha = 1.0 - confidence
    if successes == 0:
        return 0.0, 1.0 - alpha ** (1.0 / trials)
    if successes == trials:
        return alpha ** (1.0 / trials), 1.0
    low = float(beta.ppf(alpha / 2, successes, trials - successes + 1))
    high = float(beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return low, high


@dataclass
class TrialCounts:
    violations: int = 0
    timeouts: int = 0
    stuck: int = 0

    def add(self, other: "TrialCounts") -> None:
        self.violations += other.violations
        self.timeouts += other.timeouts
        self.stuck += other.stuck


def count_trials(
    config: Config,
    policy: SchedulerPolicy,
    predicate: Predicate,
    base_seed: int,
    trials: range,
    max_steps: int = DEFAULT_MAX_STEPS,
    timeout_as_violation: bool = False,
    cache: Optional[TransitionCache] = None
) -> TrialCounts:
    """Run the trials with the given indices and tally their outcomes"""
    cache = TransitionCache() if cache is None else cache
    counts = TrialCounts()
    report_every = max(len(trials) // 10, 1)
    for done, trial in enumerate(trials, start=1):
        outcome = run_trial(config, policy, None, max_steps, make_rng(base_seed, trial), cache)
        if outcome.kind == "value":
            counts.violations += predicate.violated(outcome.value)
        elif outcome.kind == "timeout":
            counts.timeouts += 1
            counts.violations += timeout_as_violation
        else:
            counts.stuck += 1
        if done % report_every == 0:
            logger.info(f"Monte Carlo: {done}/{len(trials)} trials, {counts.violations} violations")
    return counts


# Set in each worker process by _start_worker
_worker_cache: Optional[TransitionCache] = None


def _start_worker() -> None:
    global _worker_cache
    _worker_cache = TransitionCache()


def _count_block(config: Config, policy: SchedulerPolicy, predicate_text: str, negated: bool,
                 base_seed: int, start: int, stop: int, max_steps: int,
                 timeout_as_violation: bool) -> TrialCounts:
    """Worker entry point: predicates hold compiled closures, so they travel as text"""
    predicate = parse_predicate(predicate_text)
    if negated:
        predicate = predicate.negate()
    return count_trials(
        config, policy, predicate, base_seed, range(start, stop), max_steps, timeout_as_violation, _worker_cache
    )


def _count_parallel(config: Config, policy: SchedulerPolicy, predicate: Predicate, trials: int,
                    base_seed: int, max_steps: int, timeout_as_violation: bool,
                    workers: int, block: int) -> TrialCounts:
    counts = TrialCounts()
    with ProcessPoolExecutor(max_workers=workers, initializer=_start_worker) as pool:
        futures = [
            pool.submit(
                _count_block, config, policy, predicate.text, predicate.negated,
                base_seed, start, min(start + block, trials), max_steps, timeout_as_violation
            )
            for start in range(0, trials, block)
        ]
        for finished, future in enumerate(futures, start=1):
            counts.add(future.result())
            logger.info(f"Monte Carlo: block {finished}/{len(futures)} done")
    return counts


def estimate(
    config: Config,
    policy: SchedulerPolicy,
    predicate: Predicate,
    trials: int,
    base_seed: int = 0,
    max_steps: int = DEFAULT_MAX_STEPS,
    confidence: float = DEFAULT_CONFIDENCE,
    timeout_as_violation: bool = False,
    workers: int = DEFAULT_MC_WORKERS,
    block: int = DEFAULT_TRIAL_BLOCK
) -> Estimate:
    """
    Estimate the probability of returning a value that violates `predicate`

    Timeouts and stuck trials are counted and reported but are not
    violations unless `timeout_as_violation` is set (then timeouts are).

    Args:
        workers: Processes sharing the trials in blocks of `block`; every
            trial keeps its own stream, so the counts do not depend on it
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if workers < 1 or block < 1:
        raise ValueError(f"workers and block must be positive, got {workers} and {block}")
    if not policy.samplable:
        raise ValueError(f"Policy {policy.name} cannot be sampled")
    if workers > 1 and trials > block:
        counts = _count_parallel(config, policy, predicate, trials, base_seed, max_steps,
                                 timeout_as_violation, workers, block)
    else:
        counts = count_trials(config, policy, predicate, base_seed, range(trials), max_steps, timeout_as_violation)
    if counts.timeouts:
        logger.warning(f"{counts.timeouts} of {trials} trials hit the step limit {max_steps}")
    low, high = ci(counts.violations, trials, confidence)
    point = counts.violations / trials
    return Estimate(counts.violations, trials, point, min(low, point), max(high, point), confidence,
                    counts.timeouts, counts.stuck)
