"""FastAPI application for the probabilistic scheduler analyzer"""

import sys
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
import logging

# Add src directory to path if not already there
src_path = Path(__file__).parent.parent
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from modules.analyzer import Analyzer, ResolvedProgram
from modules.config import Config
from modules.errors import ResourceGuardError, UnknownFixtureError
from modules.fixtures import list_fixtures
from modules.reports import EfpReport, EraseReport, EstimateReport, FixtureListReport, ParseReport, QueryReport
from utils.constants import APP_VERSION
from utils.helpers import parse_rational
from api.models import (
    AdversaryRequest,
    BloomOracleRequest,
    EfpRequest,
    EraseRequest,
    ExactRequest,
    HealthResponse,
    MonteCarloRequest,
    ParseRequest,
    ProgramRequest,
    SafetyRequest
)

# Setup logging
logger = logging.getLogger(__name__)

# Initialize FastAPI app
app = FastAPI(
    title="probsched API",
    description="Exact and statistical analysis of randomized concurrent programs",
    version=APP_VERSION
)

# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Analyzer (lazy loading)
analyzer: Optional[Analyzer] = None


def initialize_components():
    """Initialize the analyzer from the environment"""
    global analyzer

    if analyzer is None:
        logger.info("Initializing analyzer...")
        analyzer = Analyzer(Config())
        logger.info(f"Analyzer ready, fixtures from {analyzer.fixtures_dir}")


def _resolve(request: ProgramRequest, require_main: bool = True) -> ResolvedProgram:
    return analyzer.resolve(
        fixture_name=request.fixture,
        text=request.source,
        params=request.params or None,
        require_main=require_main
    )


def _handle(action: str, run: Callable):
    """Run a query, mapping analyzer errors to HTTP status codes"""
    try:
        initialize_components()
        return run()
    except HTTPException:
        raise
    except UnknownFixtureError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except ResourceGuardError as e:
        logger.warning(f"{action} stopped by a resource guard: {e}")
        raise HTTPException(status_code=422, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error in {action}: {e}")
        raise HTTPException(status_code=500, detail=str(e))


def _bound(text: Optional[str]):
    return None if text is None else parse_rational(text)


@app.on_event("startup")
async def startup_event():
    """Initialize components on startup"""
    initialize_components()


@app.get('/health', response_model=HealthResponse)
def health():
    """Health check endpoint"""
    initialize_components()
    try:
        fixtures = len(list_fixtures(analyzer.fixtures_dir))
    except FileNotFoundError:
        fixtures = 0
    return HealthResponse(
        status='ok',
        version=APP_VERSION,
        fixtures=fixtures,
        memo_limit=analyzer.settings.engine.memo_limit
    )


@app.get('/fixtures', response_model=FixtureListReport)
def fixtures():
    """List catalogue fixtures"""
    return _handle("fixtures", lambda: analyzer.fixtures())


@app.post('/parse', response_model=ParseReport)
def parse_program(request: ParseRequest):
    """
    Parse and pretty-print a program

    Args:
        request: Program and whether to include the core expression

    Returns:
        Parse report
    """
    return _handle("parse", lambda: analyzer.parse(_resolve(request, require_main=False), core=request.core))


@app.post('/exact', response_model=QueryReport)
def exact(request: ExactRequest):
    """Value distribution under one scheduler policy"""
    return _handle("exact", lambda: analyzer.exact(
        _resolve(request), request.scheduler, request.horizon, request.dump_final
    ))


@app.post('/adversary', response_model=QueryReport)
def adversary(request: AdversaryRequest):
    """
    Worst-case violation probability over full-view schedulers

    Args:
        request: Program, predicate, optional horizon and bound

    Returns:
        Query report with the horizon history and a witness script
    """
    return _handle("adversary", lambda: analyzer.adversary(
        _resolve(request), request.predicate, request.horizon, _bound(request.bound)
    ))


@app.post('/safety', response_model=QueryReport)
def safety(request: SafetyRequest):
    """Smallest probability of not getting stuck"""
    return _handle("safety", lambda: analyzer.safety(_resolve(request), request.horizon, _bound(request.bound)))


@app.post('/mc', response_model=EstimateReport)
def monte_carlo(request: MonteCarloRequest):
    """Monte Carlo estimate with a Clopper-Pearson interval"""
    return _handle("mc", lambda: analyzer.mc(
        _resolve(request),
        request.predicate,
        request.scheduler,
        request.trials,
        request.seed,
        request.max_steps,
        request.confidence,
        request.timeout_as_violation,
        request.workers
    ))


@app.post('/erase', response_model=EraseReport)
def erase(request: EraseRequest):
    """Erased program text, or the original-against-erased comparison when `check` is set"""
    def run():
        program = _resolve(request)
        if not request.check:
            return analyzer.erase(program)
        return analyzer.erase_check(
            program, request.horizon, request.scheduler, request.script_length, request.predicate,
            request.limits
        )
    return _handle("erase", run)


@app.post('/efp', response_model=EfpReport)
def efp(request: EfpRequest):
    """False-positive probability from the recurrence"""
    return _handle("efp", lambda: analyzer.efp(
        request.size, request.hashes, request.insertions, request.set_bits, request.draws
    ))


@app.post('/bloom-oracle', response_model=EfpReport)
def bloom_oracle(request: BloomOracleRequest):
    """False-positive probability by brute-force enumeration"""
    return _handle("bloom-oracle", lambda: analyzer.bloom_oracle(request.size, request.hashes, request.keys))


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
