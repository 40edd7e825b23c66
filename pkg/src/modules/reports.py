"""
Report schemas shared by the CLI and the HTTP API

Every probability is carried twice: as an exact rational "p/q", which is
authoritative, and as a rounded decimal for display. See docs/reports.md.
"""

from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field

from modules.distributions import Dist
from modules.exact import EraseCheckResult, HorizonSearch, OptimisationResult, ValueDistResult
from modules.montecarlo import Estimate
from modules.pretty import dump_config, render_value
from utils.constants import DEFAULT_DECIMAL_PLACES, FULL_VIEW_NOTE, UNBOUNDED_NOTE
from utils.helpers import format_rational, to_decimal


class RationalValue(BaseModel):
    """Exact rational with its decimal rendering"""
    rational: str = Field(..., description="Exact value as p/q")
    decimal: float = Field(..., description="Rounded decimal value")

    @classmethod
    def of(cls, value: Fraction, places: int = DEFAULT_DECIMAL_PLACES) -> "RationalValue":
        value = Fraction(value)
        return cls(rational=format_rational(value), decimal=to_decimal(value, places))

    def to_fraction(self) -> Fraction:
        return Fraction(self.rational)

    def __str__(self) -> str:
        return f"{self.rational} ({self.decimal!r})"


class HorizonValue(BaseModel):
    horizon: int
    value: RationalValue


class OutcomeMass(BaseModel):
    """One outcome of a value distribution"""
    value: str
    probability: RationalValue


class QueryReport(BaseModel):
    """Result of an exact, adversary or safety query"""
    query: str
    program: str
    horizon: Optional[int] = Field(..., description="Step horizon; null when unbounded")
    unbounded: bool = False
    policy: Optional[str] = None
    predicate: Optional[str] = None
    value: Optional[RationalValue] = None
    distribution: Optional[List[OutcomeMass]] = None
    distribution_text: Optional[str] = None
    residual: Optional[RationalValue] = None
    monotone_history: List[HorizonValue] = Field(default_factory=list)
    converged: Optional[bool] = None
    witness: Optional[List[int]] = None
    memo_entries: int = 0
    bound: Optional[RationalValue] = None
    holds: Optional[bool] = None
    final_states: Optional[List[str]] = None
    notes: List[str] = Field(default_factory=list)


class EstimateReport(BaseModel):
    """Monte Carlo estimate of a violation probability"""
    program: str
    policy: str
    predicate: str
    trials: int
    successes: int
    point: float
    ci_low: float
    ci_high: float
    confidence: float
    seed: int
    max_steps: int
    timeouts: int
    stuck: int
    generator: str = "numpy.random.Philox(SeedSequence([seed, trial]))"


class EfpReport(BaseModel):
    """Bloom filter false-positive probability"""
    size: int
    hashes: int
    insertions: Optional[int] = Field(default=None, description="Keys inserted")
    draws: Optional[int] = Field(default=None, description="Index draws, hashes per key times keys")
    keys: Optional[int] = None
    set_bits: int = 0
    value: RationalValue
    method: str = Field(..., description="recurrence or bruteforce")


class ParseReport(BaseModel):
    program: str
    pretty: str
    core: Optional[str] = None
    uses_tapes: bool = False


class PolicyEquality(BaseModel):
    policy: str
    equal: bool
    complete: bool
    refuted: bool = False
    original: str
    erased: str


class LimitEquality(BaseModel):
    """Largest probability of one event over all schedulers, original against erased"""
    event: str
    equal: bool
    original: RationalValue
    erased: RationalValue


class EraseReport(BaseModel):
    """Erased program text and, for erase-check, the comparisons"""
    program: str
    erased: Optional[str] = None
    horizon: Optional[int] = None
    status: Optional[str] = Field(default=None, description="passed, failed or inconclusive")
    passed: Optional[bool] = None
    comparisons: List[PolicyEquality] = Field(default_factory=list)
    limits: List[LimitEquality] = Field(default_factory=list)
    sup_original: Optional[RationalValue] = None
    sup_erased: Optional[RationalValue] = None
    inconclusive: List[str] = Field(default_factory=list)
    refuted: List[str] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)


class FixtureInfo(BaseModel):
    name: str
    kind: str
    description: str = ""
    predicate: Optional[str] = None
    bound: Optional[RationalValue] = None
    horizon: Optional[Union[int, Literal["unbounded"]]] = None
    params: Dict[str, Any] = Field(default_factory=dict)


class FixtureListReport(BaseModel):
    fixtures: List[FixtureInfo]
    total: int


# Builders

def distribution_outcomes(dist: Dist, places: int = DEFAULT_DECIMAL_PLACES) -> List[OutcomeMass]:
    return [
        OutcomeMass(value=render_value(outcome), probability=RationalValue.of(weight, places))
        for outcome, weight in dist.sorted_items()
    ]


def history_values(search: Optional[HorizonSearch], places: int = DEFAULT_DECIMAL_PLACES) -> List[HorizonValue]:
    if search is None:
        return []
    return [HorizonValue(horizon=h, value=RationalValue.of(v, places)) for h, v in search.history]


def exact_report(
    program: str,
    result: ValueDistResult,
    policy: str,
    search: Optional[HorizonSearch] = None,
    dump_finals: bool = False,
    places: int = DEFAULT_DECIMAL_PLACES
) -> QueryReport:
    """Report of a value distribution under a fixed policy"""
    report = QueryReport(
        query="exact",
        program=program,
        horizon=result.horizon,
        policy=policy,
        distribution=distribution_outcomes(result.dist, places),
        distribution_text=result.dist.to_text(render_value),
        residual=RationalValue.of(result.residual, places),
        value=RationalValue.of(result.dist.mass(), places),
        monotone_history=history_values(search, places),
        converged=None if search is None else search.converged,
        memo_entries=result.memo_entries,
    )
    if result.stuck:
        report.notes.append(f"stuck mass {format_rational(result.stuck)}")
    if dump_finals and result.finals is not None:
        report.final_states = [
            f"probability {format_rational(weight)}\n{dump_config(config)}"
            for config, weight in result.finals.items()
        ]
    return report


def optimisation_report(
    query: str,
    program: str,
    result: OptimisationResult,
    predicate: Optional[str] = None,
    bound: Optional[Fraction] = None,
    search: Optional[HorizonSearch] = None,
    places: int = DEFAULT_DECIMAL_PLACES
) -> QueryReport:
    """
    Report of an adversary (sup_violation) or safety (min_mass) query

    For adversary queries the bound holds when the value is at most the
    bound; for safety queries when the mass is at least the bound.
    """
    holds = None
    if bound is not None:
        holds = result.value <= bound if query == "adversary" else result.value >= bound
    report = QueryReport(
        query=query,
        program=program,
        horizon=result.horizon,
        unbounded=result.unbounded,
        predicate=predicate,
        value=RationalValue.of(result.value, places),
        monotone_history=history_values(search, places),
        converged=None if search is None else search.converged,
        witness=list(result.script),
        memo_entries=result.memo_entries,
        bound=None if bound is None else RationalValue.of(bound, places),
        holds=holds,
        notes=[FULL_VIEW_NOTE],
    )
    if result.unbounded:
        report.notes.append(UNBOUNDED_NOTE)
    if not result.final_reached:
        report.notes.append("no final configuration is reachable within the horizon")
    return report


def estimate_report(program: str, policy: str, predicate: str, estimate: Estimate,
                    seed: int, max_steps: int) -> EstimateReport:
    return EstimateReport(
        program=program,
        policy=policy,
        predicate=predicate,
        trials=estimate.trials,
        successes=estimate.successes,
        point=estimate.point,
        ci_low=estimate.ci_low,
        ci_high=estimate.ci_high,
        confidence=estimate.confidence,
        seed=seed,
        max_steps=max_steps,
        timeouts=estimate.timeouts,
        stuck=estimate.stuck,
    )


def erase_check_report(program: str, result: EraseCheckResult,
                       places: int = DEFAULT_DECIMAL_PLACES) -> EraseReport:
    return EraseReport(
        program=program,
        horizon=result.horizon,
        status=result.status,
        passed=result.passed,
        comparisons=[
            PolicyEquality(
                policy=c.policy,
                equal=c.equal,
                complete=c.complete,
                refuted=c.refuted,
                original=c.original.dist.to_text(render_value),
                erased=c.erased.dist.to_text(render_value),
            )
            for c in result.comparisons
        ],
        limits=[
            LimitEquality(
                event=limit.event,
                equal=limit.equal,
                original=RationalValue.of(limit.original, places),
                erased=RationalValue.of(limit.erased, places),
            )
            for limit in result.limits
        ],
        sup_original=None if result.sup_original is None else RationalValue.of(result.sup_original, places),
        sup_erased=None if result.sup_erased is None else RationalValue.of(result.sup_erased, places),
        inconclusive=result.inconclusive,
        refuted=result.refuted,
        notes=list(result.notes),
    )


def render_text(report: BaseModel) -> str:
    """Human-readable rendering of any report"""
    if isinstance(report, QueryReport):
        return _query_text(report)
    if isinstance(report, EstimateReport):
        return (
            f"violations: {report.successes}/{report.trials} = {report.point!r}\n"
            f"{report.confidence:.0%} interval: [{report.ci_low!r}, {report.ci_high!r}]\n"
            f"timeouts: {report.timeouts}, stuck: {report.stuck}\n"
            f"policy: {report.policy}, seed: {report.seed}"
        )
    if isinstance(report, EfpReport):
        return str(report.value)
    if isinstance(report, ParseReport):
        return report.pretty if report.core is None else f"{report.pretty}\n\ncore:\n{report.core}"
    if isinstance(report, EraseReport):
        return _erase_text(report)
    if isinstance(report, FixtureListReport):
        return "\n".join(
            f"{info.name:<14} {info.kind:<12} {info.description}" for info in report.fixtures
        )
    return report.model_dump_json(indent=2)


def _query_text(report: QueryReport) -> str:
    lines = []
    if report.distribution_text is not None:
        lines.append(report.distribution_text)
        lines.append(f"residual: {report.residual}")
    else:
        label = "sup_violation" if report.query == "adversary" else "min_mass"
        lines.append(f"{label}: {report.value}")
    if report.monotone_history:
        lines.append("horizons: " + ", ".join(f"{h.horizon} -> {h.value.rational}" for h in report.monotone_history))
    elif report.unbounded:
        lines.append("horizon: unbounded")
    else:
        lines.append(f"horizon: {report.horizon}")
    if report.bound is not None:
        lines.append(f"bound {report.bound.rational}: {'holds' if report.holds else 'VIOLATED'}")
    if report.witness:
        lines.append("witness: " + ",".join(str(i) for i in report.witness))
    lines.append(f"memo entries: {report.memo_entries}")
    lines.extend(f"note: {note}" for note in report.notes)
    for state in report.final_states or ():
        lines.append(state)
    return "\n".join(lines)


def _comparison_verdict(comparison: PolicyEquality) -> str:
    if comparison.refuted:
        return "DIFFERENT"
    if comparison.complete:
        return "equal"
    return "inconclusive (residual mass)"


def _erase_text(report: EraseReport, listed: int = 16) -> str:
    if report.status is None:
        return report.erased or ""
    status = "FAILED" if report.status == "failed" else report.status
    lines = [f"erase-check: {status} at horizon {report.horizon}"]
    for comparison in report.comparisons[:listed]:
        lines.append(f"  {comparison.policy}: {_comparison_verdict(comparison)}")
    rest = report.comparisons[listed:]
    if rest:
        counts: Dict[str, int] = {}
        for comparison in rest:
            verdict = _comparison_verdict(comparison)
            counts[verdict] = counts.get(verdict, 0) + 1
        lines.append(f"  {len(rest)} more policies: " + ", ".join(f"{n} {v}" for v, n in sorted(counts.items())))
        lines.extend(f"  {c.policy}: DIFFERENT" for c in rest if c.refuted)
    for limit in report.limits:
        verdict = "equal" if limit.equal else "DIFFERENT"
        lines.append(
            f"  limit {limit.event}: original {limit.original.rational}, "
            f"erased {limit.erased.rational} ({verdict})"
        )
    lines.extend(f"note: {note}" for note in report.notes)
    return "\n".join(lines)
