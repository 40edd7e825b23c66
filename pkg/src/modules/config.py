"""Configuration settings for the analyzer"""

import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

from utils.constants import (
    DEFAULT_CONFIDENCE,
    DEFAULT_DECIMAL_PLACES,
    DEFAULT_ENUMERATION_LIMIT,
    DEFAULT_MAX_HORIZON,
    DEFAULT_MAX_STEPS,
    DEFAULT_MC_WORKERS,
    DEFAULT_MEMO_LIMIT,
    DEFAULT_SEED,
    DEFAULT_START_HORIZON,
    DEFAULT_TRIALS
)

# Load environment variables
load_dotenv()

DEFAULT_FIXTURES_DIR = Path(__file__).resolve().parents[2] / "fixtures"


def _env(name: str, default):
    return os.getenv(name, default)


class EnvModel(BaseModel):
    """Validates defaults too, so environment strings are coerced and checked"""
    model_config = ConfigDict(validate_default=True)


class EngineConfig(EnvModel):
    """Configuration for the exact engine"""
    memo_limit: int = Field(
        default_factory=lambda: _env("PROBSCHED_MEMO_LIMIT", DEFAULT_MEMO_LIMIT),
        gt=0,
        description="Maximum number of memo entries before the analysis stops"
    )
    start_horizon: int = Field(
        default_factory=lambda: _env("PROBSCHED_START_HORIZON", DEFAULT_START_HORIZON),
        ge=0,
        description="First horizon tried by horizon doubling"
    )
    max_horizon: int = Field(
        default_factory=lambda: _env("PROBSCHED_MAX_HORIZON", DEFAULT_MAX_HORIZON),
        ge=0,
        description="Largest horizon tried by horizon doubling"
    )


class MonteCarloConfig(EnvModel):
    """Configuration for Monte Carlo estimation"""
    trials: int = Field(
        default_factory=lambda: _env("PROBSCHED_MC_TRIALS", DEFAULT_TRIALS),
        gt=0,
        description="Number of sampled executions"
    )
    seed: int = Field(
        default_factory=lambda: _env("PROBSCHED_MC_SEED", DEFAULT_SEED),
        ge=0,
        description="Base seed; trial i uses the stream keyed by (seed, i)"
    )
    max_steps: int = Field(
        default_factory=lambda: _env("PROBSCHED_MC_MAX_STEPS", DEFAULT_MAX_STEPS),
        ge=0,
        description="Scheduler steps per trial before it counts as a timeout"
    )
    confidence: float = Field(
        default=DEFAULT_CONFIDENCE,
        gt=0.0,
        lt=1.0,
        description="Confidence level of the Clopper-Pearson interval"
    )
    workers: int = Field(
        default_factory=lambda: _env("PROBSCHED_MC_WORKERS", DEFAULT_MC_WORKERS),
        ge=1,
        description="Worker processes; results do not depend on the count"
    )


class AnalyticsConfig(EnvModel):
    """Configuration for the Bloom filter analytics"""
    enumeration_limit: int = Field(
        default=DEFAULT_ENUMERATION_LIMIT,
        gt=0,
        description="Largest brute-force enumeration allowed"
    )
    decimal_places: int = Field(default=DEFAULT_DECIMAL_PLACES, ge=1, description="Decimal places in reports")


class FixtureConfig(EnvModel):
    """Configuration for the fixture catalogue"""
    fixtures_dir: Path = Field(
        default_factory=lambda: Path(_env("PROBSCHED_FIXTURES_DIR", DEFAULT_FIXTURES_DIR)),
        description="Directory holding .cpl fixtures and catalogue.yaml"
    )


class LoggingConfig(EnvModel):
    """Configuration for logging"""
    level: str = Field(
        default_factory=lambda: _env("PROBSCHED_LOG_LEVEL", "WARNING"),
        description="Root log level"
    )
    log_file: Optional[str] = Field(
        default_factory=lambda: _env("PROBSCHED_LOG_FILE", None),
        description="Optional log file path"
    )


class Config(BaseModel):
    """Main configuration class for the analyzer"""
    engine: EngineConfig = Field(default_factory=EngineConfig)
    montecarlo: MonteCarloConfig = Field(default_factory=MonteCarloConfig)
    analytics: AnalyticsConfig = Field(default_factory=AnalyticsConfig)
    fixtures: FixtureConfig = Field(default_factory=FixtureConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

