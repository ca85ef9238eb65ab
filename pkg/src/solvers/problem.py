"""
Solver-facing normal form shared by the reduced and the dense programs

A BlockSDP maximizes cᵀθ over real θ subject to A θ = b and
F_k(θ) = F_k0 + Σ_p θ_p F_kp ⪰ 0 for every block k.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.sparse as sp

from src.core.errors import ShapeError

logger = logging.getLogger(__name__)

STATUS_OPTIMAL = 'optimal'
STATUS_MAX_ITER = 'max_iter'
STATUS_INFEASIBLE = 'infeasible_detected'


@dataclass
class BlockMap:
    """Affine symmetric block θ -> reshape(constant + coeffs @ θ, (side, side))"""
    side: int
    constant: np.ndarray
    coeffs: sp.csr_matrix
    label: str = ''

    def __post_init__(self):
        self.constant = np.asarray(self.constant, dtype=float).reshape(-1)
        self.coeffs = sp.csr_matrix(self.coeffs, dtype=float)
        if self.constant.shape[0] != self.side * self.side:
            raise ShapeError(f"Block '{self.label}' constant has {self.constant.shape[0]} entries, "
                             f"expected {self.side * self.side}")
        if self.coeffs.shape[0] != self.side * self.side:
            raise ShapeError(f"Block '{self.label}' coefficient matrix has {self.coeffs.shape[0]} rows, "
                             f"expected {self.side * self.side}")

    @classmethod
    def from_dense(cls, constant: np.ndarray, coefficients: Dict[int, np.ndarray],
                   num_vars: int, label: str = '') -> 'BlockMap':
        """
        Build a block from dense coefficient matrices

        Args:
            constant: side x side symmetric matrix
            coefficients: variable index -> side x side symmetric matrix
            num_vars: Total number of variables
            label: Block name used in logs and exports
        """
        constant = np.asarray(constant, dtype=float)
        side = constant.shape[0]
        rows, cols, vals = [], [], []
        for var, mat in coefficients.items():
            flat = np.asarray(mat, dtype=float).reshape(-1)
            nz = np.flatnonzero(flat)
            rows.extend(nz.tolist())
            cols.extend([var] * len(nz))
            vals.extend(flat[nz].tolist())
        coeffs = sp.csr_matrix((vals, (rows, cols)), shape=(side * side, num_vars))
        return cls(side=side, constant=constant.reshape(-1), coeffs=coeffs, label=label)

    @property
    def num_vars(self) -> int:
        return self.coeffs.shape[1]

    def evaluate(self, theta: np.ndarray) -> np.ndarray:
        flat = self.constant + self.coeffs @ np.asarray(theta, dtype=float)
        return flat.reshape(self.side, self.side)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """θ-gradient of <Y, F(θ)>"""
        return self.coeffs.T @ np.asarray(y, dtype=float).reshape(-1)

    def symmetry_defect(self) -> float:
        s = self.side
        perm = (np.arange(s * s) % s) * s + np.arange(s * s) // s
        coeff_gap = abs(self.coeffs - self.coeffs[perm]).max() if self.coeffs.nnz else 0.0
        const_gap = float(np.max(np.abs(self.constant - self.constant[perm]), initial=0.0))
        return max(float(coeff_gap), const_gap)


@dataclass
class BlockSDP:
    """maximize objectiveᵀθ  s.t.  eq_matrix θ = eq_rhs, blocks(θ) ⪰ 0"""
    num_vars: int
    objective: np.ndarray
    eq_matrix: sp.csr_matrix
    eq_rhs: np.ndarray
    blocks: List[BlockMap]
    variable_labels: Optional[List[str]] = None
    structure_key: Optional[str] = None
    name: str = 'sdp'
    objective_offset: float = 0.0

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        self.eq_matrix = sp.csr_matrix(self.eq_matrix, dtype=float)
        self.eq_rhs = np.asarray(self.eq_rhs, dtype=float).reshape(-1)
        self.validate()

    def validate(self) -> None:
        if self.objective.shape[0] != self.num_vars:
            raise ShapeError(f"Objective has {self.objective.shape[0]} entries for {self.num_vars} variables")
        if self.eq_matrix.shape[1] != self.num_vars:
            raise ShapeError(f"Equality matrix has {self.eq_matrix.shape[1]} columns for {self.num_vars} variables")
        if self.eq_matrix.shape[0] != self.eq_rhs.shape[0]:
            raise ShapeError(f"{self.eq_matrix.shape[0]} equality rows but {self.eq_rhs.shape[0]} right-hand sides")
        if not (np.all(np.isfinite(self.objective)) and np.all(np.isfinite(self.eq_rhs))
                and np.all(np.isfinite(self.eq_matrix.data))):
            raise ShapeError("BlockSDP data must be finite")
        for block in self.blocks:
            if block.num_vars != self.num_vars:
                raise ShapeError(f"Block '{block.label}' covers {block.num_vars} variables, expected {self.num_vars}")
        if self.variable_labels is not None and len(self.variable_labels) != self.num_vars:
            raise ShapeError(f"{len(self.variable_labels)} labels for {self.num_vars} variables")

    @property
    def num_rows(self) -> int:
        return self.eq_matrix.shape[0]

    @property
    def block_sides(self) -> List[int]:
        return [b.side for b in self.blocks]

    def objective_value(self, theta: np.ndarray) -> float:
        return float(self.objective @ theta) + self.objective_offset

    def eq_residual(self, theta: np.ndarray) -> float:
        if self.num_rows == 0:
            return 0.0
        return float(np.max(np.abs(self.eq_matrix @ theta - self.eq_rhs)))

    def min_block_eig(self, theta: np.ndarray) -> float:
        eigs = [float(np.linalg.eigvalsh(b.evaluate(theta))[0]) for b in self.blocks if b.side]
        return min(eigs) if eigs else float('inf')


@dataclass
class SolveResult:
    """Outcome of a solver run"""
    status: str
    value: float
    assignment: np.ndarray
    duality_gap: float
    eq_residual: float
    min_block_eig: float
    iterations: int
    solver: str = ''
    history: List[Dict[str, float]] = field(default_factory=list)
    time_ms: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == STATUS_OPTIMAL

    def to_dict(self, include_assignment: bool = False) -> Dict[str, Any]:
        record = {
            'status': self.status,
            'value': float(self.value),
            'duality_gap': float(self.duality_gap),
            'eq_residual': float(self.eq_residual),
            'min_block_eig': float(self.min_block_eig),
            'iterations': int(self.iterations),
            'solver': self.solver,
            'time_ms': round(float(self.time_ms), 3),
        }
        if include_assignment:
            record['assignment'] = [float(v) for v in self.assignment]
        return record


def certify(p: BlockSDP, theta: np.ndarray, gap: float, iterations: int, solver: str,
            gap_tol: float, feas_tol: float, history: Optional[List[Dict[str, float]]] = None,
            converged: bool = True) -> SolveResult:
    """
    Package an assignment as a SolveResult, downgrading the status when the
    certificate bounds are not met
    """
    eq_res = p.eq_residual(theta)
    min_eig = p.min_block_eig(theta)
    ok = converged and gap <= gap_tol and eq_res <= feas_tol and min_eig >= -feas_tol
    status = STATUS_OPTIMAL if ok else STATUS_MAX_ITER
    return SolveResult(
        status=status,
        value=p.objective_value(theta),
        assignment=np.asarray(theta, dtype=float),
        duality_gap=float(gap),
        eq_residual=eq_res,
        min_block_eig=min_eig,
        iterations=iterations,
        solver=solver,
        history=history or [],
    )
