"""
SDPA sparse format (.dat-s) writer and reader

SDPA solves  minimize cᵀx  s.t.  Σ_i F_i x_i − F_0 ⪰ 0. A BlockSDP maximizing
objᵀθ over F_k(θ) ⪰ 0 and Aθ = b maps to c = −obj and F_0 = −constant; each
equality row becomes a pair of opposite inequalities in a trailing diagonal
block.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from src.core.errors import ShapeError
from src.solvers.problem import BlockSDP

logger = logging.getLogger(__name__)

Entry = Tuple[int, int, int, int, float]


@dataclass
class SdpaInstance:
    """Contents of a .dat-s file"""
    num_vars: int
    block_struct: List[int]
    objective: np.ndarray
    entries: List[Entry] = field(default_factory=list)
    comments: List[str] = field(default_factory=list)

    @property
    def block_sides(self) -> List[int]:
        return [b for b in self.block_struct if b > 0]

    @property
    def diagonal_size(self) -> int:
        return sum(-b for b in self.block_struct if b < 0)


def _fmt(value: float) -> str:
    return repr(float(value))


def _block_entries(p: BlockSDP, columns: List[List[Tuple[int, float]]]) -> Dict[int, List[Tuple[int, int, int, float]]]:
    """matno -> (blkno, i, j, value) over the upper triangles of the PSD blocks"""
    per_matrix: Dict[int, List[Tuple[int, int, int, float]]] = {}
    for blk, block in enumerate(p.blocks, start=1):
        s = block.side
        const = block.constant.reshape(s, s)
        for r, c in zip(*np.nonzero(np.triu(const))):
            per_matrix.setdefault(0, []).append((blk, r + 1, c + 1, -const[r, c]))
        coeffs = block.coeffs.tocsc()
        for var in range(p.num_vars):
            start, stop = coeffs.indptr[var], coeffs.indptr[var + 1]
            for flat, value in zip(coeffs.indices[start:stop], coeffs.data[start:stop]):
                r, c = divmod(int(flat), s)
                if r <= c and value != 0:
                    columns[var].append((blk, r + 1, c + 1, float(value)))
    return per_matrix


def export_sdpa(p: BlockSDP, path: str, split_free: bool = True) -> str:
    """
    Write a BlockSDP in SDPA sparse format

    Args:
        p: Instance
        path: Output file
        split_free: Write θ = x⁺ − x⁻ with x⁺, x⁻ ≥ 0 in the diagonal block;
            otherwise the SDPA variables are the free θ themselves

    Returns:
        The path written
    """
    columns: List[List[Tuple[int, int, int, float]]] = [[] for _ in range(p.num_vars)]
    per_matrix = _block_entries(p, columns)
    diag_blk = len(p.blocks) + 1

    eq = p.eq_matrix.tocsc()
    num_rows = p.num_rows
    for var in range(p.num_vars):
        start, stop = eq.indptr[var], eq.indptr[var + 1]
        for row, value in zip(eq.indices[start:stop], eq.data[start:stop]):
            if value != 0:
                columns[var].append((diag_blk, 2 * row + 1, 2 * row + 1, float(value)))
                columns[var].append((diag_blk, 2 * row + 2, 2 * row + 2, -float(value)))
    for row in range(num_rows):
        if p.eq_rhs[row] != 0:
            per_matrix.setdefault(0, []).append((diag_blk, 2 * row + 1, 2 * row + 1, float(p.eq_rhs[row])))
            per_matrix.setdefault(0, []).append((diag_blk, 2 * row + 2, 2 * row + 2, -float(p.eq_rhs[row])))
    diag_size = 2 * num_rows

    if split_free:
        num_sdpa = 2 * p.num_vars
        objective = np.empty(num_sdpa)
        objective[0::2] = -p.objective
        objective[1::2] = p.objective
        for var in range(p.num_vars):
            plus, minus = 2 * var + 1, 2 * var + 2
            per_matrix[plus] = list(columns[var]) + [(diag_blk, diag_size + plus, diag_size + plus, 1.0)]
            per_matrix[minus] = [(b, i, j, -v) for b, i, j, v in columns[var]]
            per_matrix[minus].append((diag_blk, diag_size + minus, diag_size + minus, 1.0))
        diag_size += num_sdpa
    else:
        num_sdpa = p.num_vars
        objective = -p.objective
        for var in range(p.num_vars):
            per_matrix[var + 1] = list(columns[var])

    block_struct = [b.side for b in p.blocks]
    if diag_size:
        block_struct.append(-diag_size)

    labels = p.variable_labels or [f'theta[{k}]' for k in range(p.num_vars)]
    lines = [f'* {p.name}: maximize objective; SDPA objective is its negative']
    for var, label in enumerate(labels):
        if split_free:
            lines.append(f'* x{2 * var + 1} - x{2 * var + 2} = {label}')
        else:
            lines.append(f'* x{var + 1} = {label}')
    lines.append(str(num_sdpa))
    lines.append(str(len(block_struct)))
    lines.append(' '.join(str(b) for b in block_struct))
    lines.append(' '.join(_fmt(v) for v in objective))
    for mat in sorted(per_matrix):
        for blk, i, j, value in sorted(per_matrix[mat]):
            if value != 0:
                lines.append(f'{mat} {blk} {i} {j} {_fmt(value)}')

    try:
        with open(path, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write('\n'.join(lines) + '\n')
    except OSError as exc:
        raise OSError(f"cannot write SDPA file '{path}': {exc}") from exc
    logger.info(f"SDPA export: {path} ({num_sdpa} variables, blocks {block_struct})")
    return path


_SEPARATORS = re.compile(r'[,{}()]')


def parse_sdpa(path: str) -> SdpaInstance:
    """Read a .dat-s file written by export_sdpa or any SDPA-sparse producer"""
    comments, payload = [], []
    with open(path, 'r', encoding='utf-8') as handle:
        for raw in handle:
            line = raw.strip()
            if not line:
                continue
            if line[0] in '*"':
                comments.append(line)
                continue
            payload.append(_SEPARATORS.sub(' ', line).split())
    if len(payload) < 4:
        raise ShapeError(f"SDPA file '{path}' is truncated")

    num_vars = int(payload[0][0])
    num_blocks = int(payload[1][0])
    block_struct = [int(v) for v in payload[2][:num_blocks]]
    objective = np.array([float(v) for v in payload[3][:num_vars]])
    if len(block_struct) != num_blocks or len(objective) != num_vars:
        raise ShapeError(f"SDPA header of '{path}' is inconsistent")
    entries = []
    for fields in payload[4:]:
        mat, blk, i, j = (int(v) for v in fields[:4])
        entries.append((mat, blk, i, j, float(fields[4])))
    return SdpaInstance(num_vars=num_vars, block_struct=block_struct, objective=objective,
                        entries=entries, comments=comments)
