"""
Analyzer facade used by the CLI and the HTTP API

Resolves a program from a fixture name, a file or inline text, runs one
query with the configured guards and returns a report model.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional

from modules.analytics import bloom_bruteforce, efp
from modules.config import Config
from modules.exact import ExactEngine, Horizon, HorizonSearch
from modules.fixtures import Fixture, fixture, get_loader, list_fixtures
from modules.montecarlo import estimate
from modules.parser import LoadedProgram
from modules.predicates import Predicate, parse_predicate
from modules.pretty import pretty
from modules.reports import (
    EfpReport,
    EraseReport,
    EstimateReport,
    FixtureInfo,
    FixtureListReport,
    ParseReport,
    QueryReport,
    RationalValue,
    erase_check_report,
    estimate_report,
    exact_report,
    optimisation_report
)
from modules.schedulers import make_policy
from modules.semantics import initial_config
from modules.syntax import Expr, contains_tape_ops, erase
from utils.constants import UNBOUNDED
from utils.helpers import validate_program_file

logger = logging.getLogger(__name__)


@dataclass
class ResolvedProgram:
    """A closed program and where it came from"""
    name: str
    expr: Optional[Expr]
    loaded: LoadedProgram
    fixture: Optional[Fixture] = None


class Analyzer:
    """
    Runs queries against one configuration

    Args:
        settings: Configuration; a fresh `Config()` when omitted
    """

    def __init__(self, settings: Optional[Config] = None):
        self.settings = settings or Config()
        self.fixtures_dir: Path = self.settings.fixtures.fixtures_dir
        self.places = self.settings.analytics.decimal_places

    def engine(self) -> ExactEngine:
        return ExactEngine(self.settings.engine.memo_limit)

    # Program resolution

    def resolve(
        self,
        path: Optional[str] = None,
        fixture_name: Optional[str] = None,
        text: Optional[str] = None,
        params: Optional[Dict[str, Any]] = None,
        require_main: bool = True
    ) -> ResolvedProgram:
        """
        Load exactly one of a file, a fixture or inline program text

        Raises:
            ValueError: For missing or conflicting sources and invalid files
            UnknownFixtureError: For an unknown fixture name
        """
        given = [source for source in (path, fixture_name, text) if source is not None]
        if len(given) != 1:
            raise ValueError("Give exactly one of a program file, --fixture NAME or program text")

        loader = get_loader(self.fixtures_dir)
        if fixture_name is not None:
            found = fixture(fixture_name, self.fixtures_dir, **(params or {}))
            resolved = ResolvedProgram(found.name, None, found.load(loader), found)
        elif path is not None:
            is_valid, error_msg = validate_program_file(path)
            if not is_valid:
                raise ValueError(error_msg)
            resolved = ResolvedProgram(Path(path).name, None, loader.load_file(Path(path)))
        else:
            resolved = ResolvedProgram("<input>", None, loader.load(text))

        resolved.expr = resolved.loaded.expr
        if require_main and resolved.expr is None:
            raise ValueError(f"'{resolved.name}' declares a module and has no main expression")
        return resolved

    def predicate_for(self, program: ResolvedProgram, text: Optional[str]) -> Predicate:
        if text is not None:
            return parse_predicate(text)
        if program.fixture is not None and program.fixture.predicate_text:
            return program.fixture.predicate
        raise ValueError("A predicate is required (--predicate)")

    def _search(self, engine: ExactEngine, evaluate, horizon: Optional[Horizon], **kwargs) -> HorizonSearch:
        if horizon == UNBOUNDED:
            return HorizonSearch([], evaluate(UNBOUNDED), True)
        if horizon is not None:
            result = evaluate(horizon)
            value_of = kwargs.get("value_of", lambda r: r.value)
            return HorizonSearch([(horizon, value_of(result))], result, True)
        return engine.auto_horizon(
            evaluate,
            start=self.settings.engine.start_horizon,
            max_horizon=self.settings.engine.max_horizon,
            **kwargs
        )

    @staticmethod
    def _limit_horizon(program: ResolvedProgram, horizon: Optional[Horizon]) -> Optional[Horizon]:
        """An omitted horizon means unbounded for fixtures catalogued that way"""
        if horizon is None and program.fixture is not None and program.fixture.horizon == UNBOUNDED:
            return UNBOUNDED
        return horizon

    @staticmethod
    def _numeric_horizon(query: str, horizon: Optional[Horizon]) -> Optional[int]:
        if horizon == UNBOUNDED:
            raise ValueError(
                f"{query} runs a fixed number of steps; an unbounded horizon applies to adversary and safety"
            )
        return horizon

    # Queries

    def parse(self, program: ResolvedProgram, core: bool = False) -> ParseReport:
        return ParseReport(
            program=program.name,
            pretty=pretty(program.loaded.program),
            core=pretty(program.expr) if core and program.expr is not None else None,
            uses_tapes=program.expr is not None and contains_tape_ops(program.expr),
        )

    def exact(self, program: ResolvedProgram, scheduler: str = "round_robin",
              horizon: Optional[Horizon] = None, dump_final: bool = False) -> QueryReport:
        """Value distribution under one policy"""
        horizon = self._numeric_horizon("exact", horizon)
        policy = make_policy(scheduler)
        engine = self.engine()
        config = initial_config(program.expr)
        search = self._search(
            engine,
            lambda h: engine.value_dist(config, policy, h, keep_finals=dump_final),
            horizon,
            value_of=lambda r: r.dist.mass(),
            final_reached=lambda r: bool(r.dist) or r.pending == 0,
        )
        return exact_report(program.name, search.result, policy.name, search, dump_final, self.places)

    def adversary(self, program: ResolvedProgram, predicate: Optional[str] = None,
                  horizon: Optional[Horizon] = None, bound: Optional[Fraction] = None) -> QueryReport:
        """Worst-case violation probability over full-view schedulers"""
        horizon = self._limit_horizon(program, horizon)
        pred = self.predicate_for(program, predicate)
        if bound is None and predicate is None and program.fixture is not None:
            bound = program.fixture.bound
        engine = self.engine()
        config = initial_config(program.expr)
        search = self._search(engine, lambda h: engine.sup_violation(config, h, pred), horizon)
        return optimisation_report("adversary", program.name, search.result, str(pred), bound, search, self.places)

    def safety(self, program: ResolvedProgram, horizon: Optional[Horizon] = None,
               bound: Optional[Fraction] = None) -> QueryReport:
        """Smallest probability of not getting stuck"""
        horizon = self._limit_horizon(program, horizon)
        if bound is None and program.fixture is not None and program.fixture.kind == "safety":
            bound = program.fixture.bound
        engine = self.engine()
        config = initial_config(program.expr)
        search = self._search(engine, lambda h: engine.min_mass(config, h), horizon)
        return optimisation_report("safety", program.name, search.result, None, bound, search, self.places)

    def mc(
        self,
        program: ResolvedProgram,
        predicate: Optional[str] = None,
        scheduler: str = "round_robin",
        trials: Optional[int] = None,
        seed: Optional[int] = None,
        max_steps: Optional[int] = None,
        confidence: Optional[float] = None,
        timeout_as_violation: bool = False,
        workers: Optional[int] = None
    ) -> EstimateReport:
        """Monte Carlo estimate of the violation probability"""
        settings = self.settings.montecarlo
        trials = settings.trials if trials is None else trials
        seed = settings.seed if seed is None else seed
        max_steps = settings.max_steps if max_steps is None else max_steps
        confidence = settings.confidence if confidence is None else confidence
        workers = settings.workers if workers is None else workers
        pred = self.predicate_for(program, predicate)
        policy = make_policy(scheduler)
        logger.info(f"Monte Carlo on {program.name}: {trials} trials under {policy.name}")
        result = estimate(
            initial_config(program.expr), policy, pred, trials, seed, max_steps, confidence,
            timeout_as_violation, workers
        )
        return estimate_report(program.name, policy.name, str(pred), result, seed, max_steps)

    def erase(self, program: ResolvedProgram) -> EraseReport:
        return EraseReport(program=program.name, erased=pretty(erase(program.expr)))

    def erase_check(self, program: ResolvedProgram, horizon: Optional[Horizon] = None,
                    scheduler: str = "round_robin", script_length: int = 0,
                    predicate: Optional[str] = None, limits: bool = True) -> EraseReport:
        """
        Compare the program with its erased version

        With `limits` off only fixed policies are compared, and a predicate is
        ignored
        """
        horizon = self._numeric_horizon("erase-check", horizon)
        if horizon is None:
            catalogued = program.fixture.horizon if program.fixture is not None else None
            horizon = catalogued if isinstance(catalogued, int) else self.settings.engine.start_horizon
        pred = None
        if limits and (predicate is not None or (program.fixture is not None and program.fixture.predicate_text)):
            pred = self.predicate_for(program, predicate)
        result = self.engine().erase_check(
            program.expr, horizon, pred, make_policy(scheduler), script_length, limits=limits
        )
        return erase_check_report(program.name, result, self.places)

    def efp(self, size: int, hashes: int, insertions: Optional[int] = None, set_bits: int = 0,
            draws: Optional[int] = None) -> EfpReport:
        """
        False-positive probability after inserting `insertions` keys, or
        after `draws` further index draws with `set_bits` bits already set

        Raises:
            ValueError: Unless exactly one of insertions and draws is given
        """
        if (insertions is None) == (draws is None):
            raise ValueError("Give exactly one of insertions (keys) or draws")
        if draws is None:
            draws = hashes * insertions
        value = efp(draws, set_bits, size, hashes)
        return EfpReport(
            size=size, hashes=hashes, insertions=insertions, draws=draws, set_bits=set_bits,
            value=RationalValue.of(value, self.places), method="recurrence"
        )

    def bloom_oracle(self, size: int, hashes: int, keys: int) -> EfpReport:
        value = bloom_bruteforce(size, hashes, keys, self.settings.analytics.enumeration_limit)
        return EfpReport(
            size=size, hashes=hashes, keys=keys,
            value=RationalValue.of(value, self.places), method="bruteforce"
        )

    def fixtures(self) -> FixtureListReport:
        infos = []
        for name in list_fixtures(self.fixtures_dir):
            found = fixture(name, self.fixtures_dir)
            infos.append(FixtureInfo(
                name=found.name,
                kind=found.kind,
                description=found.description,
                predicate=found.predicate_text,
                bound=None if found.bound is None else RationalValue.of(found.bound, self.places),
                horizon=found.horizon,
                params=found.params,
            ))
        return FixtureListReport(fixtures=infos, total=len(infos))
