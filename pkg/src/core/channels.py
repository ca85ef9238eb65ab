"""
Quantum channels as Choi matrices: construction, validation and JSON files

Choi convention: J = (I ⊗ N)(|Φ><Φ|) with the normalized maximally
entangled state, so tr J = 1 and tr_B J = I/d_in for a CPTP map. The
objective prefactor d_in * d_out of the hierarchy only lands on the fidelity
scale under this normalization.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.core.errors import ChannelFileError, ChannelValidationError, DomainError
from src.core.linalg import hermitian_part, partial_trace, trace_norm

logger = logging.getLogger(__name__)

CPTP_TOL = 1e-9

BUILTIN_CHANNELS = ('identity', 'depolarizing', 'dephasing', 'amplitude_damping', 'erasure_like_qubit')


@dataclass
class ChannelSpec:
    """A channel given by Kraus operators (d_out x d_in each) or by its Choi matrix"""
    name: str
    d_in: int
    d_out: int
    kraus: Optional[List[np.ndarray]] = None
    choi: Optional[np.ndarray] = None
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if (self.kraus is None) == (self.choi is None):
            raise DomainError("ChannelSpec needs exactly one of kraus or choi")
        if self.d_in < 1 or self.d_out < 1:
            raise DomainError(f"Channel dimensions must be >= 1, got d_in={self.d_in}, d_out={self.d_out}")
        if self.kraus is not None:
            self.kraus = [np.asarray(k, dtype=complex) for k in self.kraus]
            for k in self.kraus:
                if k.shape != (self.d_out, self.d_in):
                    raise DomainError(
                        f"Kraus operator has shape {k.shape}, expected {(self.d_out, self.d_in)}"
                    )
        else:
            self.choi = np.asarray(self.choi, dtype=complex)
            side = self.d_in * self.d_out
            if self.choi.shape != (side, side):
                raise DomainError(f"Choi matrix has shape {self.choi.shape}, expected {(side, side)}")


@dataclass(frozen=True)
class ChoiMatrix:
    """Normalized Choi matrix on A ⊗ B with d_A = channel input dimension"""
    matrix: np.ndarray
    d_A: int
    d_B: int

    @property
    def side(self) -> int:
        return self.d_A * self.d_B


@dataclass
class CptpReport:
    """Outcome of validate_cptp"""
    psd_deviation: float
    tp_deviation: float
    tol: float = CPTP_TOL

    @property
    def passed(self) -> bool:
        return self.psd_deviation >= -self.tol and self.tp_deviation <= self.tol

    def to_dict(self) -> Dict[str, float]:
        return {
            'psd_deviation': self.psd_deviation,
            'tp_deviation': self.tp_deviation,
            'tol': self.tol,
            'passed': self.passed,
        }


def maximally_entangled(d: int) -> np.ndarray:
    """
    |Φ><Φ| with |Φ> = (1/√d) Σ_i |i>|i>

    Args:
        d: Local dimension

    Returns:
        Rank-one projector of side d²
    """
    if d < 1:
        raise DomainError(f"Dimension must be >= 1, got {d}")
    phi = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return np.outer(phi, phi.conj())


def _choi_from_kraus_unchecked(kraus: Sequence[np.ndarray], d_in: int) -> np.ndarray:
    phi = np.eye(d_in, dtype=complex).reshape(-1) / np.sqrt(d_in)
    choi = 0
    for k in kraus:
        v = np.kron(np.eye(d_in), k) @ phi
        choi = choi + np.outer(v, v.conj())
    return np.asarray(choi)


def kraus_completeness_deviation(kraus: Sequence[np.ndarray], d_in: int) -> float:
    gram = sum(k.conj().T @ k for k in kraus)
    return trace_norm(gram - np.eye(d_in)) / d_in


def choi_from_kraus(spec: ChannelSpec) -> ChoiMatrix:
    """
    Build the normalized Choi matrix of a Kraus channel

    Args:
        spec: Channel with a Kraus representation

    Returns:
        ChoiMatrix J = Σ_k (I⊗K_k)|Φ><Φ|(I⊗K_k)†

    Raises:
        ChannelValidationError: if Σ K†K deviates from the identity
    """
    if spec.kraus is None:
        raise DomainError(f"Channel '{spec.name}' has no Kraus representation")
    deviation = kraus_completeness_deviation(spec.kraus, spec.d_in)
    if deviation > CPTP_TOL:
        report = CptpReport(psd_deviation=0.0, tp_deviation=deviation)
        raise ChannelValidationError(
            f"Kraus set of '{spec.name}' is not trace preserving (deviation {deviation:.3e})",
            report=report,
        )
    matrix = hermitian_part(_choi_from_kraus_unchecked(spec.kraus, spec.d_in))
    return ChoiMatrix(matrix=matrix, d_A=spec.d_in, d_B=spec.d_out)


def _raw_choi(spec: ChannelSpec) -> np.ndarray:
    if spec.kraus is not None:
        return _choi_from_kraus_unchecked(spec.kraus, spec.d_in)
    return spec.choi


def _report_for(choi: np.ndarray, d_in: int, d_out: int, tol: float) -> CptpReport:
    psd = float(np.linalg.eigvalsh(hermitian_part(choi))[0])
    marginal = partial_trace(choi, (d_in, d_out), [1])
    tp = trace_norm(marginal - np.eye(d_in) / d_in)
    return CptpReport(psd_deviation=psd, tp_deviation=tp, tol=tol)


def validate_cptp(spec: ChannelSpec, tol: float = CPTP_TOL) -> CptpReport:
    """
    Report how far a channel is from complete positivity and trace preservation

    Args:
        spec: Channel to check
        tol: Pass threshold for both deviations

    Returns:
        CptpReport with the minimum Choi eigenvalue and ‖tr_B J − I/d_in‖₁
    """
    return _report_for(_raw_choi(spec), spec.d_in, spec.d_out, tol)


def validate_choi(choi: ChoiMatrix, tol: float = CPTP_TOL) -> CptpReport:
    """Same report for an already-built ChoiMatrix"""
    return _report_for(choi.matrix, choi.d_A, choi.d_B, tol)


def choi_matrix(spec: ChannelSpec) -> ChoiMatrix:
    """Validated ChoiMatrix for either representation"""
    if spec.kraus is not None:
        return choi_from_kraus(spec)
    report = validate_cptp(spec)
    if not report.passed:
        raise ChannelValidationError(f"Choi matrix of '{spec.name}' is not CPTP", report=report)
    return ChoiMatrix(matrix=hermitian_part(spec.choi), d_A=spec.d_in, d_B=spec.d_out)


def _weyl_operators(d: int) -> List[np.ndarray]:
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    ops = []
    for a in range(d):
        for b in range(d):
            ops.append(np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
    return ops


def builtin_channel(name: str, param: float = 0.0, dim: int = 2) -> ChannelSpec:
    """
    Kraus representation of a built-in channel family

    Args:
        name: One of BUILTIN_CHANNELS
        param: Noise parameter in [0, 1] (p for depolarizing/dephasing/erasure, γ for damping)
        dim: Dimension for identity, depolarizing and dephasing (the others are qubit channels)

    Returns:
        ChannelSpec
    """
    if name not in BUILTIN_CHANNELS:
        raise DomainError(f"Unknown channel '{name}'; expected one of {', '.join(BUILTIN_CHANNELS)}")
    p = float(param)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Channel parameter must lie in [0, 1], got {param}")
    if dim < 1:
        raise DomainError(f"Channel dimension must be >= 1, got {dim}")

    if name == 'identity':
        kraus = [np.eye(dim)]
        d_in = d_out = dim
    elif name == 'depolarizing':
        ops = _weyl_operators(dim)
        weights = [1 - p + p / dim ** 2] + [p / dim ** 2] * (len(ops) - 1)
        kraus = [np.sqrt(w) * op for w, op in zip(weights, ops) if w > 0]
        d_in = d_out = dim
    elif name == 'dephasing':
        clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
        kraus = [np.sqrt(1 - p) * np.eye(dim), np.sqrt(p) * clock]
        d_in = d_out = dim
    elif name == 'amplitude_damping':
        kraus = [
            np.array([[1, 0], [0, np.sqrt(1 - p)]]),
            np.array([[0, np.sqrt(p)], [0, 0]]),
        ]
        d_in = d_out = 2
    else:
        # qubit in, qutrit out; level 2 flags the erasure
        keep = np.zeros((3, 2))
        keep[0, 0] = keep[1, 1] = 1
        erase0 = np.zeros((3, 2))
        erase0[2, 0] = 1
        erase1 = np.zeros((3, 2))
        erase1[2, 1] = 1
        kraus = [np.sqrt(1 - p) * keep, np.sqrt(p) * erase0, np.sqrt(p) * erase1]
        d_in, d_out = 2, 3

    return ChannelSpec(name=name, d_in=d_in, d_out=d_out, kraus=kraus, params={'p': p})


def random_channel(d_in: int, d_out: int, seed: int = 0, num_kraus: int = 2) -> ChannelSpec:
    """CPTP channel from a random isometry d_in -> d_out ⊗ C^num_kraus"""
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(d_out * num_kraus, d_in)) + 1j * rng.normal(size=(d_out * num_kraus, d_in))
    isometry, _ = np.linalg.qr(g)
    kraus = [isometry[k * d_out:(k + 1) * d_out, :] for k in range(num_kraus)]
    return ChannelSpec(name=f'random_{seed}', d_in=d_in, d_out=d_out, kraus=kraus)


# JSON files -----------------------------------------------------------------

ComplexEntry = Tuple[float, float]


class ChannelFile(BaseModel):
    """On-disk channel schema; complex entries are [re, im] pairs"""
    model_config = ConfigDict(extra='forbid')

    name: str
    d_in: int = Field(ge=1)
    d_out: int = Field(ge=1)
    kraus: Optional[List[List[List[ComplexEntry]]]] = None
    choi: Optional[List[List[ComplexEntry]]] = None

    @model_validator(mode='after')
    def _check_representation(self) -> 'ChannelFile':
        if (self.kraus is None) == (self.choi is None):
            raise ValueError("exactly one of 'kraus' or 'choi' must be given")
        if self.kraus is not None:
            for idx, op in enumerate(self.kraus):
                if len(op) != self.d_out or any(len(row) != self.d_in for row in op):
                    raise ValueError(f"kraus[{idx}] must be {self.d_out} x {self.d_in}")
        else:
            side = self.d_in * self.d_out
            if len(self.choi) != side or any(len(row) != side for row in self.choi):
                raise ValueError(f"choi must be {side} x {side}")
        return self


def _to_complex(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def _to_pairs(m: np.ndarray) -> List[List[List[float]]]:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def load_channel_file(path: str) -> ChannelSpec:
    """
    Load and validate a channel JSON file

    Args:
        path: Path to the JSON file

    Returns:
        ChannelSpec
    """
    try:
        with open(path) as f:
            raw = json.load(f)
    except OSError as e:
        raise ChannelFileError(f"Cannot read channel file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ChannelFileError(f"Channel file {path} is not valid JSON: {e}") from e

    try:
        parsed = ChannelFile.model_validate(raw)
    except ValidationError as e:
        diagnostics = [
            {'loc': '.'.join(str(part) for part in err['loc']), 'msg': err['msg']}
            for err in e.errors()
        ]
        raise ChannelFileError(f"Channel file {path} does not match the schema", diagnostics) from e

    if parsed.kraus is not None:
        spec = ChannelSpec(name=parsed.name, d_in=parsed.d_in, d_out=parsed.d_out,
                           kraus=[_to_complex(op) for op in parsed.kraus])
    else:
        spec = ChannelSpec(name=parsed.name, d_in=parsed.d_in, d_out=parsed.d_out,
                           choi=_to_complex(parsed.choi))
    logger.info(f"Loaded channel '{spec.name}' ({spec.d_in} -> {spec.d_out}) from {path}")
    return spec


def dump_channel_file(spec: ChannelSpec, path: str) -> None:
    payload = {'name': spec.name, 'd_in': spec.d_in, 'd_out': spec.d_out}
    if spec.kraus is not None:
        payload['kraus'] = [_to_pairs(k) for k in spec.kraus]
    else:
        payload['choi'] = _to_pairs(spec.choi)
    with open(path, 'w') as f:
        json.dump(payload, f, indent=2)


def resolve_channel(name_or_path: str, param: float = 0.0, dim: int = 2) -> ChannelSpec:
    """Built-in channel by name, or a channel JSON file by path"""
    if name_or_path.endswith('.json') or os.path.sep in name_or_path:
        return load_channel_file(name_or_path)
    return builtin_channel(name_or_path, param, dim)
