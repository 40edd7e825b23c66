"""
Scheduler policies

A policy maps (internal state, scheduler view) to a distribution over
(next internal state, thread index). Policies only ever receive a
`SchedView`, which hides tape contents unless the policy was built with
`reveal_tapes=True`.
"""

import itertools
import logging
from typing import Callable, Dict, Hashable, Iterator, Mapping, Optional, Sequence, Tuple

from modules.distributions import Dist
from modules.semantics import Config, SchedView, view_for

logger = logging.getLogger(__name__)


class SchedulerPolicy:
    """Base class: subclasses set `name` and implement `choose`"""

    name: str = "policy"
    initial: Hashable = None
    reveal_tapes: bool = False
    # whether run_trial can sample it without an exact enumeration
    samplable: bool = True

    def choose(self, zeta, view: SchedView) -> Dist:
        raise NotImplementedError

    def draw(self, zeta, config: Config, rng) -> Optional[Tuple[Hashable, int]]:
        """Sample one (next state, thread index) directly, or None to sample `choose`"""
        return None

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"


class RoundRobin(SchedulerPolicy):
    """Cycles through thread indices, wrapping as the pool grows"""

    name = "round_robin"
    initial = 0

    def choose(self, zeta: int, view: SchedView) -> Dist:
        index = zeta % len(view.threads)
        return Dist.ret((index + 1, index))

    def draw(self, zeta: int, config: Config, rng) -> Tuple[int, int]:
        index = zeta % len(config.threads)
        return index + 1, index


class UniformRandom(SchedulerPolicy):
    """Picks every thread with equal probability"""

    name = "uniform_random"
    initial = None

    def choose(self, zeta, view: SchedView) -> Dist:
        return Dist.uniform_over((None, index) for index in range(len(view.threads)))

    def draw(self, zeta, config: Config, rng) -> Tuple[None, int]:
        threads = len(config.threads)
        # same stream use as sampling `choose`: a single thread draws nothing
        return None, int(rng.integers(threads)) if threads > 1 else 0


class Scripted(SchedulerPolicy):
    """
    Follows a fixed list of thread indices (taken modulo the pool size), then
    continues round robin so the policy always has mass one

    The state is the script position; after the script it is
    `len(script) + next round-robin index`.
    """

    initial = 0

    def __init__(self, script: Sequence[int]):
        if any(index < 0 for index in script):
            raise ValueError(f"Script indices must be non-negative: {list(script)}")
        self.script: Tuple[int, ...] = tuple(script)
        self.name = "scripted:" + ",".join(str(i) for i in self.script)

    def _next(self, zeta: int, threads: int) -> Tuple[int, int]:
        length = len(self.script)
        if zeta < length:
            return zeta + 1, self.script[zeta] % threads
        index = (zeta - length) % threads
        return length + index + 1, index

    def choose(self, zeta: int, view: SchedView) -> Dist:
        return Dist.ret(self._next(zeta, len(view.threads)))

    def draw(self, zeta: int, config: Config, rng) -> Tuple[int, int]:
        return self._next(zeta, len(config.threads))


class External(SchedulerPolicy):
    """
    Wraps a user callback `(zeta, view) -> Dist or mapping`

    The callback's distribution is checked to have mass one.
    """

    samplable = False

    def __init__(
        self,
        callback: Callable[[Hashable, SchedView], object],
        initial: Hashable = None,
        reveal_tapes: bool = False,
        name: str = "external"
    ):
        self.callback = callback
        self.initial = initial
        self.reveal_tapes = reveal_tapes
        self.name = name

    def choose(self, zeta, view: SchedView) -> Dist:
        result = self.callback(zeta, view)
        dist = result if isinstance(result, Dist) else Dist(result)
        if dist.mass() != 1:
            raise ValueError(f"Policy {self.name} returned mass {dist.mass()}, expected 1")
        return dist


class WitnessPolicy(SchedulerPolicy):
    """
    Replays an adversary strategy

    The table maps (step number, full view) to a thread index; unknown keys
    fall back to thread 0. It sees tape queues because the adversary did.
    """

    name = "witness"
    initial = 0
    reveal_tapes = True

    def __init__(self, table: Mapping[Tuple[int, SchedView], int]):
        self.table: Dict[Tuple[int, SchedView], int] = dict(table)

    def choose(self, zeta: int, view: SchedView) -> Dist:
        return Dist.ret((zeta + 1, self.table.get((zeta, view), 0)))

    @classmethod
    def from_strategy(cls, strategy: Mapping[Tuple[Config, int], int], horizon: int) -> "WitnessPolicy":
        """Build from an exact-engine strategy keyed by (configuration, remaining steps)"""
        empty = cls({})
        table = {
            (horizon - remaining, view_for(empty, config)): index
            for (config, remaining), index in strategy.items()
        }
        return cls(table)


def make_policy(name: str) -> SchedulerPolicy:
    """
    Build a policy from its CLI name

    Args:
        name: "round_robin", "uniform_random" or "scripted:I,J,..."

    Returns:
        Scheduler policy

    Raises:
        ValueError: For unknown names or malformed scripts
    """
    name = name.strip()
    if name in ("round_robin", "rr"):
        return RoundRobin()
    if name in ("uniform_random", "uniform"):
        return UniformRandom()
    if name.startswith("scripted"):
        _, _, body = name.partition(":")
        try:
            script = [int(part) for part in body.split(",") if part.strip()]
        except ValueError:
            raise ValueError(f"Malformed script in scheduler '{name}'") from None
        return Scripted(script)
    raise ValueError(f"Unknown scheduler '{name}'. Use round_robin, uniform_random or scripted:I,J,...")


def enumerate_scripts(max_threads: int, length: int) -> Iterator[Scripted]:
    """Every scripted policy of exactly `length` choices over `max_threads` threads"""
    if max_threads < 1 or length < 0:
        raise ValueError("max_threads must be positive and length non-negative")
    for script in itertools.product(range(max_threads), repeat=length):
        yield Scripted(script)


def default_policies() -> Tuple[SchedulerPolicy, ...]:
    return (RoundRobin(), UniformRandom(), Scripted([1, 0]))


def resolve_policy(policy: Optional[object]) -> SchedulerPolicy:
    if policy is None:
        return RoundRobin()
    if isinstance(policy, SchedulerPolicy):
        return policy
    return make_policy(str(policy))
