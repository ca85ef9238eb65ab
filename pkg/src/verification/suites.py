"""
Named invariant suites behind `verify --suite`

Each suite returns one DataFrame row per check with the observed quantity,
the bound it is held to and a pass flag.
"""

import logging
import time
from math import comb
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.channels import builtin_channel, choi_matrix
from src.core.errors import DomainError
from src.core.linalg import kron, partial_trace, permute_systems
from src.core.orbitbasis import (
    BasisElement,
    InvariantOperator,
    enumerate_orbits,
    first_copy_reduction,
    orbit_count,
    ptrace_last_outputbar,
)
from src.core.records import SuiteRecord, VerifyRecord
from src.core.reduction import (
    HermitianParametrization,
    assemble,
    assignment_from_parameters,
    psd_block_map,
    to_block_sdp,
)
from src.core.symrep import build_pairing_tables, pairing_table, partitions, semistandard_tableaux, tableau_count
from src.oracle.dense import (
    brute_force_pairing_table,
    build_dense_program,
    dense_orbit_matrix,
    dense_reconstruct,
    dense_start_point,
)
from src.oracle.seesaw import seesaw_lower_bound
from src.solvers.admm import solve_admm
from src.solvers.ipm import solve_ipm

logger = logging.getLogger(__name__)

CHANNEL_GRID: Tuple[Tuple[str, float], ...] = (
    ('identity', 0.0),
    ('depolarizing', 0.0),
    ('depolarizing', 0.25),
    ('depolarizing', 0.5),
    ('dephasing', 0.5),
    ('amplitude_damping', 0.3),
)
ORACLE_TOL = 1e-4
MONOTONE_TOL = 1e-5
SANDWICH_TOL = 1e-4
WITNESS_TOL = 1e-9
IDENTITY_TOL = 1e-5

COLUMNS = ['suite', 'check', 'observed', 'bound', 'passed']


def _row(suite: str, check: str, observed, bound, passed: bool) -> Dict:
    return {'suite': suite, 'check': check, 'observed': observed, 'bound': bound, 'passed': bool(passed)}


def solve_reduced(channel: str, param: float, M: int, n: int, workers: int = 1) -> float:
    """Optimal value of the reduced level-n program (barrier method, splitting above level 2)"""
    choi = choi_matrix(builtin_channel(channel, param))
    reduced = assemble(choi, M, n, workers=workers)
    program = to_block_sdp(reduced)
    if n <= 2:
        start = reduced.parametrization.to_parameters(reduced.start_point())
        result = solve_ipm(program, tol=1e-8, start=start)
    else:
        result = solve_admm(program, tol=1e-6)
    return result.value


# Suites ------------------------------------------------------------------------

def suite_combinatorics(max_d: int = 4, max_n: int = 6) -> pd.DataFrame:
    """Dimension identity Σ|T_λ|² = C(n+d²−1, d²−1) and tableau enumeration counts"""
    rows = []
    for d in range(2, max_d + 1):
        for n in range(0, max_n + 1):
            shapes = partitions(d, n)
            total = sum(tableau_count(shape, d) ** 2 for shape in shapes)
            expected = comb(n + d * d - 1, d * d - 1)
            rows.append(_row('combinatorics', f'dimension d={d} n={n}', total, expected,
                             total == expected == orbit_count(d, n)))
            if d ** n <= 4096:
                for shape in shapes:
                    listed = len(semistandard_tableaux(shape, d))
                    rows.append(_row('combinatorics', f'tableaux {shape} d={d}', listed,
                                     tableau_count(shape, d), listed == tableau_count(shape, d)))
    return pd.DataFrame(rows, columns=COLUMNS)


def suite_pairing(cases: Sequence[Tuple[int, int]] = ((2, 1), (2, 2), (2, 3), (2, 4), (4, 1), (4, 2))) -> pd.DataFrame:
    """Pairing tables from Gram polynomials against explicit u-vectors"""
    rows = []
    for d, n in cases:
        for shape in partitions(d, n):
            fast = pairing_table(shape, d)
            slow = brute_force_pairing_table(shape, d)
            mismatches = sum(1 for k in set(fast) | set(slow) if fast.get(k, 0) != slow.get(k, 0))
            rows.append(_row('pairing', f'table {shape} d={d}', mismatches, 0, mismatches == 0))
    return pd.DataFrame(rows, columns=COLUMNS)


def _partial_trace_rows(d_B: int, d_Bbar: int, max_n: int) -> List[Dict]:
    rows = []
    d = d_B * d_Bbar
    for n in range(1, max_n + 1):
        worst_last, worst_first = 0.0, 0.0
        for key in enumerate_orbits(d, n):
            dense = dense_orbit_matrix(key)
            dims = (d,) * (n - 1) + (d_B, d_Bbar)
            traced = partial_trace(dense, dims, [n])
            rebuilt = np.zeros_like(traced)
            for reduced, p, q in ptrace_last_outputbar(key, d_B, d_Bbar):
                unit = np.zeros((d_B, d_B))
                unit[p, q] = 1.0
                rebuilt += kron(dense_orbit_matrix(reduced), unit)
            worst_last = max(worst_last, float(np.max(np.abs(traced - rebuilt))))
            if n >= 2:
                first = partial_trace(dense, (d,) * n, list(range(1, n)))
                expected = np.zeros((d, d))
                for (p, q), count in first_copy_reduction(key).items():
                    expected[p, q] = count
                worst_first = max(worst_first, float(np.max(np.abs(first - expected))))
        rows.append(_row('oracle', f'ptrace last copy dB={d_B} dBbar={d_Bbar} n={n}', worst_last, 1e-12,
                         worst_last <= 1e-12))
        if n >= 2:
            rows.append(_row('oracle', f'first copy reduction d={d} n={n}', worst_first, 1e-12,
                             worst_first <= 1e-12))
    return rows


def _block_sign_rows(samples: int, seed: int) -> List[Dict]:
    """Positivity of random invariant operators read from the blocks and from the dense matrix"""
    d_H, n = 2, 3
    keys = enumerate_orbits(d_H, n)
    elements = [BasisElement(0, 0, 0, 0, key) for key in keys]
    param = HermitianParametrization(elements)
    tables = build_pairing_tables(d_H, n)
    blocks = [psd_block_map(shape, table, 1, 1, len(semistandard_tableaux(shape, d_H)))
              for shape, table in tables.items()]
    identity = {BasisElement(0, 0, 0, 0, key): 1.0 for key in keys if key.is_diagonal}

    rng = np.random.default_rng(seed)
    agreements, decided = 0, 0
    for _ in range(samples):
        coeffs = param.to_assignment(rng.normal(size=param.num_params))
        op = InvariantOperator(d_A=1, d_Abar=1, d_H=d_H, n=n, coeffs=coeffs)
        shift = np.linalg.eigvalsh(dense_reconstruct(op)).min() + rng.normal(scale=0.5)
        for elem, value in identity.items():
            op.coeffs[elem] = op.coeffs.get(elem, 0) - shift * value
        dense_min = float(np.linalg.eigvalsh(dense_reconstruct(op)).min())
        block_min = min(float(np.linalg.eigvalsh(b.evaluate(op.coeffs)).min()) for b in blocks)
        if abs(dense_min) <= 1e-8:
            continue
        decided += 1
        agreements += int(np.sign(dense_min) == np.sign(block_min) or abs(block_min) <= 1e-8)
    return [_row('oracle', f'block positivity d_H={d_H} n={n}', agreements, decided, agreements == decided)]


def _witness_rows(channel: str, param: float, M: int) -> List[Dict]:
    """Marginal conditions and swap invariance of a reconstructed level-2 optimizer"""
    choi = choi_matrix(builtin_channel(channel, param))
    reduced = assemble(choi, M, 2)
    program = to_block_sdp(reduced)
    start = reduced.parametrization.to_parameters(reduced.start_point())
    result = solve_ipm(program, tol=1e-8, start=start)
    rho = dense_reconstruct(assignment_from_parameters(reduced, result.assignment))
    d = reduced.dims
    label = f'witness {channel}({param}) n=2'

    no_abar = partial_trace(rho, (d.d_A, d.d_Abar, d.d_H, d.d_H), [1])
    swapped = permute_systems(no_abar, (d.d_A, d.d_H, d.d_H), [0, 2, 1])
    swap_defect = float(np.max(np.abs(swapped - no_abar)))

    outputs = partial_trace(rho, (d.d_A, d.d_Abar, d.d_H, d.d_H), [0, 1])
    a_defect = float(np.max(np.abs(no_abar - kron(np.eye(d.d_A) / d.d_A, outputs))))

    no_bbar = partial_trace(rho, (d.d_A, d.d_Abar, d.d_H, d.d_B, d.d_Bbar), [4])
    first_copy = partial_trace(rho, (d.d_A, d.d_Abar, d.d_H, d.d_H), [3])
    b_defect = float(np.max(np.abs(no_bbar - kron(first_copy, np.eye(d.d_B) / d.d_B))))

    return [
        _row('oracle', f'{label} swap', swap_defect, WITNESS_TOL, swap_defect <= WITNESS_TOL),
        _row('oracle', f'{label} A marginal', a_defect, WITNESS_TOL, a_defect <= WITNESS_TOL),
        _row('oracle', f'{label} last output marginal', b_defect, WITNESS_TOL, b_defect <= WITNESS_TOL),
    ]


def suite_oracle(M: int = 2, levels: Sequence[int] = (1, 2),
                 grid: Sequence[Tuple[str, float]] = CHANNEL_GRID) -> pd.DataFrame:
    """Dense program against the reduced program, plus expansion and block checks"""
    rows = []
    for channel, param in grid:
        choi = choi_matrix(builtin_channel(channel, param))
        for n in levels:
            dense = build_dense_program(choi, M, n)
            dense_value = solve_ipm(dense, tol=1e-8, start=dense_start_point(dense.blocks[0].side // 2)).value
            reduced_value = solve_reduced(channel, param, M, n)
            gap = abs(dense_value - reduced_value)
            rows.append(_row('oracle', f'{channel}({param}) n={n}', gap, ORACLE_TOL, gap <= ORACLE_TOL))
        rows += _witness_rows(channel, param, M)
    rows += _partial_trace_rows(2, 2, 2)
    rows += _partial_trace_rows(2, 1, 4)
    rows += _block_sign_rows(samples=50, seed=7)
    return pd.DataFrame(rows, columns=COLUMNS)


def suite_monotonic(M: int = 2, levels: Sequence[int] = (1, 2, 3),
                    grid: Sequence[Tuple[str, float]] = CHANNEL_GRID) -> pd.DataFrame:
    """Values decrease with the level and stay above the seesaw lower bound"""
    rows = []
    for channel, param in grid:
        values = [solve_reduced(channel, param, M, n) for n in levels]
        for lo, hi, v_lo, v_hi in zip(levels, levels[1:], values, values[1:]):
            rows.append(_row('monotonic', f'{channel}({param}) n={lo}>=n={hi}', v_lo - v_hi, -MONOTONE_TOL,
                             v_lo >= v_hi - MONOTONE_TOL))
        lower = seesaw_lower_bound(choi_matrix(builtin_channel(channel, param)), M)
        for n, value in zip(levels, values):
            rows.append(_row('monotonic', f'{channel}({param}) seesaw<=n={n}', value - lower, -SANDWICH_TOL,
                             lower <= value + SANDWICH_TOL))
        if channel == 'identity':
            worst = max(abs(v - 1.0) for v in values)
            rows.append(_row('monotonic', 'identity value 1', worst, IDENTITY_TOL, worst <= IDENTITY_TOL))
    return pd.DataFrame(rows, columns=COLUMNS)


SUITES: Dict[str, Callable[[], pd.DataFrame]] = {
    'combinatorics': suite_combinatorics,
    'pairing': suite_pairing,
    'oracle': suite_oracle,
    'monotonic': suite_monotonic,
}


def run_suites(name: str) -> Tuple[VerifyRecord, Dict[str, pd.DataFrame]]:
    """
    Run one suite, or every suite for 'all'

    Args:
        name: Suite name or 'all'

    Returns:
        (VerifyRecord, per-suite check tables)
    """
    if name != 'all' and name not in SUITES:
        raise DomainError(f"Unknown suite '{name}'; expected one of {', '.join(list(SUITES) + ['all'])}")
    names = list(SUITES) if name == 'all' else [name]
    clock = time.perf_counter()
    records, tables = {}, {}
    for suite in names:
        start = time.perf_counter()
        logger.info(f"Running suite '{suite}'")
        table = SUITES[suite]()
        elapsed = (time.perf_counter() - start) * 1000
        failures = table.loc[~table['passed'], 'check'].tolist()
        records[suite] = SuiteRecord(passed=not failures, checks=len(table), failures=failures,
                                     time_ms=round(elapsed, 3))
        tables[suite] = table
        logger.info(f"Suite '{suite}': {len(table) - len(failures)}/{len(table)} checks passed ({elapsed:.0f} ms)")
    record = VerifyRecord(passed=all(r.passed for r in records.values()), suites=records,
                          total_ms=round((time.perf_counter() - clock) * 1000, 3))
    return record, tables
