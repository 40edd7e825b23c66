"""Pydantic models for API requests and responses"""

from typing import Any, Dict, Literal, Optional, Union

from pydantic import BaseModel, Field, NonNegativeInt, model_validator

# A step count or "unbounded" for the limit analysis
HorizonField = Optional[Union[NonNegativeInt, Literal["unbounded"]]]


class ProgramRequest(BaseModel):
    """A program given as inline text or as a catalogue fixture"""
    source: Optional[str] = Field(default=None, description="Program text", min_length=1)
    fixture: Optional[str] = Field(default=None, description="Catalogue fixture name", min_length=1)
    params: Dict[str, Any] = Field(default_factory=dict, description="Parameters of a generated fixture")

    @model_validator(mode="after")
    def one_program(self):
        if (self.source is None) == (self.fixture is None):
            raise ValueError("Give exactly one of 'source' or 'fixture'")
        return self


class ParseRequest(ProgramRequest):
    core: bool = Field(default=False, description="Also return the desugared core expression")


class ExactRequest(ProgramRequest):
    scheduler: str = Field(default="round_robin", description="round_robin, uniform_random or scripted:I,J,...")
    horizon: Optional[int] = Field(default=None, ge=0, description="Steps; horizon doubling when omitted")
    dump_final: bool = False


class AdversaryRequest(ProgramRequest):
    predicate: Optional[str] = Field(default=None, description="Postcondition, e.g. 'ret > 0'")
    horizon: HorizonField = Field(default=None, description="Steps, or 'unbounded' for the limit")
    bound: Optional[str] = Field(default=None, description="Bound as p/q")


class SafetyRequest(ProgramRequest):
    horizon: HorizonField = Field(default=None, description="Steps, or 'unbounded' for the limit")
    bound: Optional[str] = Field(default=None, description="Bound as p/q")


class MonteCarloRequest(ProgramRequest):
    predicate: Optional[str] = None
    scheduler: str = "round_robin"
    trials: Optional[int] = Field(default=None, ge=1, le=1_000_000)
    seed: Optional[int] = Field(default=None, ge=0)
    max_steps: Optional[int] = Field(default=None, ge=0)
    confidence: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    timeout_as_violation: bool = False
    workers: Optional[int] = Field(default=None, ge=1, le=64, description="Worker processes")


class EraseRequest(ProgramRequest):
    check: bool = Field(default=False, description="Compare the original and erased programs")
    horizon: Optional[int] = Field(default=None, ge=0)
    scheduler: str = "round_robin"
    script_length: int = Field(default=0, ge=0, le=16)
    predicate: Optional[str] = None
    limits: bool = Field(default=True, description="Compare the largest probability of every final value")


class EfpRequest(BaseModel):
    size: int = Field(..., ge=1, description="Bits in the filter array")
    hashes: int = Field(..., ge=1, description="Hash functions per key")
    insertions: Optional[int] = Field(default=None, ge=0, description="Keys inserted")
    draws: Optional[int] = Field(default=None, ge=0, description="Remaining index draws instead of keys")
    set_bits: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def one_count(self):
        if (self.insertions is None) == (self.draws is None):
            raise ValueError("Give exactly one of 'insertions' or 'draws'")
        return self


class BloomOracleRequest(BaseModel):
    size: int = Field(..., ge=1)
    hashes: int = Field(..., ge=1)
    keys: int = Field(..., ge=0)


class HealthResponse(BaseModel):
    """Health check response"""
    status: str
    version: str
    fixtures: int
    memo_limit: int
