"""
Alternating lower bound on the channel fidelity

The fidelity is bilinear in the normalized encoder Choi state E on A ⊗ Ā and
the decoder Choi state D on B ⊗ B̄:
    F(E, D) = d_Ā·d_B·tr[(J ⊗ Φ)·(E ⊗ D)],  tr_Ā E = I/d_A,  tr_B̄ D = I/d_B.
Fixing one factor leaves a small SDP in the other. Every accepted step is a
feasible code, so the value is a lower bound on F(N, M).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.core.channels import ChoiMatrix, choi_matrix, maximally_entangled, random_channel, validate_choi
from src.core.errors import ChannelValidationError, DomainError, SolverError
from src.core.linalg import kron, partial_trace
from src.oracle.dense import dense_start_point, hermitian_from_parameters, hermitian_program, objective_operator
from src.solvers.ipm import solve_ipm

logger = logging.getLogger(__name__)

STEP_TOL = 1e-9
STALL_TOL = 1e-10


@dataclass
class SeesawResult:
    """Best code found by alternating maximization"""
    value: float
    E: np.ndarray
    D: np.ndarray
    rounds: int
    history: List[Dict[str, float]] = field(default_factory=list)


def bilinear_value(choi: ChoiMatrix, M: int, E: np.ndarray, D: np.ndarray) -> float:
    """F(E, D) for encoder state E on A ⊗ Ā and decoder state D on B ⊗ B̄"""
    return float(np.real(np.trace(objective_operator(choi, M, 1) @ kron(E, D))))


def initial_decoder(choi: ChoiMatrix, M: int, seed: Optional[int] = None) -> np.ndarray:
    """
    Starting decoder state on B ⊗ B̄

    The identity decoder when the channel output has dimension M and no seed
    is given, otherwise the Choi state of a seeded random decoder B -> B̄.
    """
    if seed is None and choi.d_B == M:
        return maximally_entangled(M)
    decoder = random_channel(choi.d_B, M, seed=0 if seed is None else seed)
    return choi_matrix(decoder).matrix


def _step(weight: np.ndarray, d_kept: int, d_partner: int, label: str, round_index: int) -> np.ndarray:
    """Maximize Re tr[weight·X] over states X on kept ⊗ partner with tr_partner X = I/d_kept"""
    side = d_kept * d_partner
    constraint = ('marginal', lambda m: partial_trace(m, (d_kept, d_partner), [1]), np.eye(d_kept) / d_kept)
    program = hermitian_program(weight, [constraint], side, name=f'seesaw_{label}',
                                structure_key=f'seesaw_{label}:{d_kept}x{d_partner}')
    result = solve_ipm(program, tol=STEP_TOL, start=dense_start_point(side))
    if not result.optimal:
        raise SolverError(f"seesaw {label}-step ended with status {result.status} in round {round_index}",
                          result=result, round_index=round_index)
    return hermitian_from_parameters(result.assignment, side)


def run_seesaw(choi: ChoiMatrix, M: int, rounds: int = 20, seed: Optional[int] = None) -> SeesawResult:
    """
    Alternate encoder and decoder SDPs

    Args:
        choi: Normalized Choi matrix of the channel
        M: Code dimension
        rounds: Maximum number of (encoder, decoder) rounds
        seed: Seed of the random starting decoder; None starts from the
            identity decoder when the dimensions allow it

    Returns:
        SeesawResult with a nondecreasing value history
    """
    if rounds < 1:
        raise DomainError(f"rounds must be >= 1, got {rounds}")
    report = validate_choi(choi)
    if not report.passed:
        raise ChannelValidationError('Choi matrix is not CPTP', report=report)

    d_A, d_Abar, d_B, d_Bbar = M, choi.d_A, choi.d_B, M
    dims = (d_A, d_Abar, d_B, d_Bbar)
    weight = objective_operator(choi, M, 1)

    D = initial_decoder(choi, M, seed)
    E = np.eye(d_A * d_Abar) / (d_A * d_Abar)
    value = bilinear_value(choi, M, E, D)
    history = [{'round': 0, 'value': value}]
    completed = 0

    for round_index in range(1, rounds + 1):
        previous = value
        k_e = partial_trace(weight @ kron(np.eye(d_A * d_Abar), D), dims, [2, 3])
        candidate = _step(k_e, d_A, d_Abar, 'E', round_index)
        trial = bilinear_value(choi, M, candidate, D)
        if trial > value:
            E, value = candidate, trial

        k_d = partial_trace(weight @ kron(E, np.eye(d_B * d_Bbar)), dims, [0, 1])
        candidate = _step(k_d, d_B, d_Bbar, 'D', round_index)
        trial = bilinear_value(choi, M, E, candidate)
        if trial > value:
            D, value = candidate, trial

        completed = round_index
        history.append({'round': round_index, 'value': value})
        logger.debug(f"seesaw round {round_index}: value={value:.10f}")
        if value - previous < STALL_TOL:
            break

    logger.info(f"Seesaw lower bound after {completed} rounds: {value:.8f}")
    return SeesawResult(value=value, E=E, D=D, rounds=completed, history=history)


def seesaw_lower_bound(choi: ChoiMatrix, M: int, rounds: int = 20, seed: Optional[int] = None) -> float:
    return run_seesaw(choi, M, rounds, seed).value
