"""
JSON records emitted by the command line and the sweep engine
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class BlockRecord(BaseModel):
    model_config = ConfigDict(extra='forbid')

    partition: List[int]
    tableaux: int
    side: int


class SolveRecord(BaseModel):
    """Result of one level of the hierarchy for one channel"""
    model_config = ConfigDict(extra='forbid')

    channel: str
    param: float
    value: float
    level: int = Field(ge=1)
    M: int = Field(ge=1)
    status: str
    gap: float
    solver: str
    iterations: int
    eq_residual: float
    min_block_eig: float
    blocks: List[BlockRecord]
    timings_ms: Dict[str, float]
    seesaw: Optional[float] = None


class SuiteRecord(BaseModel):
    model_config = ConfigDict(extra='forbid')

    passed: bool
    checks: int
    failures: List[str]
    time_ms: float


class VerifyRecord(BaseModel):
    """Aggregate outcome of one or more verification suites"""
    model_config = ConfigDict(extra='forbid')

    passed: bool
    suites: Dict[str, SuiteRecord]
    total_ms: float
