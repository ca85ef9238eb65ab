"""
Run configuration with layered defaults
"""

import json
import logging
import os
from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.core.errors import DomainError

logger = logging.getLogger(__name__)

# real parameters above which 'auto' switches from the barrier method to splitting
AUTO_ADMM_THRESHOLD = 4000


class RunConfig(BaseModel):
    """Every tunable of a solve / export / verify run"""
    model_config = ConfigDict(extra='forbid')

    channel: str = 'depolarizing'
    param: float = 0.0
    dim: int = Field(default=2, ge=1)
    M: int = Field(default=2, ge=1)
    level: int = Field(default=1, ge=1)
    solver: Literal['auto', 'ipm', 'admm'] = 'auto'
    tol: float = Field(default=1e-7, gt=0)
    max_iter: int = Field(default=20000, ge=1)
    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    seed: Optional[int] = None
    seesaw_rounds: int = Field(default=20, ge=1)
    out: Optional[str] = None
    log_level: Literal['DEBUG', 'INFO', 'WARNING', 'ERROR'] = 'INFO'
    export_format: Literal['sdpa'] = 'sdpa'
    admm_rho: float = Field(default=0.1, gt=0)
    admm_sigma: float = Field(default=1e-6, gt=0)
    admm_alpha: float = Field(default=1.6, gt=0, lt=2)
    check_every: int = Field(default=25, ge=1)
    linear_solver: Literal['direct', 'indirect'] = 'direct'

    def solver_for(self, num_vars: int) -> str:
        """Resolve 'auto' against the size of the realified instance"""
        if self.solver != 'auto':
            return self.solver
        return 'admm' if num_vars > AUTO_ADMM_THRESHOLD else 'ipm'

    @classmethod
    def layered(cls, file_values: Optional[Dict[str, Any]] = None,
                flag_values: Optional[Dict[str, Any]] = None) -> 'RunConfig':
        """
        Flags over config file over defaults

        Args:
            file_values: Keys read from a --config file
            flag_values: Keys given on the command line; None means not given

        Returns:
            Validated RunConfig
        """
        merged: Dict[str, Any] = dict(file_values or {})
        merged.update({k: v for k, v in (flag_values or {}).items() if v is not None})
        return cls.model_validate(merged)


def load_config_file(path: str) -> Dict[str, Any]:
    """Raw keys of a JSON config file; validation happens in RunConfig.layered"""
    with open(path, encoding='utf-8') as f:
        try:
            values = json.load(f)
        except json.JSONDecodeError as e:
            raise DomainError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(values, dict):
        raise DomainError(f"Config file {path} must hold a JSON object")
    logger.debug(f"Config file {path}: {sorted(values)}")
    return values


def config_errors(error: ValidationError) -> str:
    return '; '.join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in error.errors())
