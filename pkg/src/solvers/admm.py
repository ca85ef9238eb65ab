"""
Operator-splitting conic solver for larger BlockSDP instances

Follows the OSQP splitting for
    minimize qᵀθ  s.t.  Āθ ∈ C,   q = −c,
with Ā = [A; G₁; ...; G_K] stacking the equality rows and the vectorized
block maps, and C = {b} × {w : w + g_k ⪰ 0}. Each iteration solves one
quasi-definite linear system and projects onto C by eigenvalue clipping.
"""

import logging
import time
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import LinearOperator, cg, splu

from src.core.errors import DomainError
from src.solvers.problem import BlockSDP, SolveResult, certify

logger = logging.getLogger(__name__)

LINEAR_SOLVERS = ('direct', 'indirect')


@dataclass
class AdmmSettings:
    """Tunables of the splitting method"""
    rho: float = 0.1
    sigma: float = 1e-6
    alpha: float = 1.6
    eq_rho_scale: float = 1e3
    check_every: int = 25
    adaptive_rho: bool = True
    adapt_tolerance: float = 5.0
    linear_solver: str = 'direct'
    cg_max_iter: int = 500


class _Layout:
    """Row ranges of the stacked constraint matrix Ā"""

    def __init__(self, p: BlockSDP):
        self.num_eq = p.num_rows
        self.blocks: List[Tuple[int, int, np.ndarray]] = []
        start = self.num_eq
        for block in p.blocks:
            self.blocks.append((start, block.side, block.constant.reshape(block.side, block.side)))
            start += block.side * block.side
        self.total = start
        self.matrix = sp.vstack([p.eq_matrix] + [b.coeffs for b in p.blocks], format='csr')
        self.constant = np.concatenate([np.zeros(self.num_eq)] + [b.constant for b in p.blocks])

    def project(self, v: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        out = v.copy()
        out[:self.num_eq] = rhs
        for start, side, const in self.blocks:
            stop = start + side * side
            mat = v[start:stop].reshape(side, side) + const
            mat = 0.5 * (mat + mat.T)
            evals, evecs = eigh(mat)
            clipped = (evecs * np.maximum(evals, 0.0)) @ evecs.T
            out[start:stop] = (clipped - const).reshape(-1)
        return out


class _LinearSystem:
    """Solves the x-update; direct mode keeps a sparse LU of the KKT matrix"""

    def __init__(self, a_bar: sp.csr_matrix, sigma: float, rho_vec: np.ndarray, mode: str, cg_max_iter: int):
        if mode not in LINEAR_SOLVERS:
            raise DomainError(f"Unknown ADMM linear solver '{mode}'; expected one of {', '.join(LINEAR_SOLVERS)}")
        self.a_bar = a_bar
        self.sigma = sigma
        self.mode = mode
        self.cg_max_iter = cg_max_iter
        self.n = a_bar.shape[1]
        self._warm = np.zeros(self.n)
        self.factorizations = 0
        self.update_rho(rho_vec)

    def update_rho(self, rho_vec: np.ndarray) -> None:
        self.rho_vec = rho_vec
        if self.mode == 'direct':
            kkt = sp.bmat([
                [self.sigma * sp.identity(self.n), self.a_bar.T],
                [self.a_bar, -sp.diags(1.0 / rho_vec)],
            ], format='csc')
            self._lu = splu(kkt)
        self.factorizations += 1

    def solve(self, x: np.ndarray, z: np.ndarray, y: np.ndarray, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if self.mode == 'direct':
            rhs = np.concatenate([self.sigma * x - q, z - y / self.rho_vec])
            sol = self._lu.solve(rhs)
            x_tilde = sol[:self.n]
            z_tilde = z + (sol[self.n:] - y) / self.rho_vec
            return x_tilde, z_tilde

        a_bar, rho_vec, sigma = self.a_bar, self.rho_vec, self.sigma
        op = LinearOperator((self.n, self.n), matvec=lambda v: sigma * v + a_bar.T @ (rho_vec * (a_bar @ v)))
        rhs = sigma * x - q + a_bar.T @ (rho_vec * z - y)
        x_tilde, _ = cg(op, rhs, x0=self._warm, rtol=1e-10, atol=1e-12, maxiter=self.cg_max_iter)
        self._warm = x_tilde
        return x_tilde, a_bar @ x_tilde


def solve_admm(p: BlockSDP, tol: float = 1e-5, max_iter: int = 20000, start: Optional[np.ndarray] = None,
               settings: Optional[AdmmSettings] = None) -> SolveResult:
    """
    Maximize a BlockSDP by operator splitting

    Args:
        p: Instance
        tol: Tolerance on the primal and dual residuals and the duality gap
        max_iter: Iteration cap
        start: Optional warm start (need not be feasible)
        settings: AdmmSettings

    Returns:
        SolveResult; history holds one residual entry per check
    """
    settings = replace(settings or AdmmSettings())
    clock = time.perf_counter()
    layout = _Layout(p)
    a_bar = layout.matrix
    q = -p.objective
    n = p.num_vars

    rho_vec = np.full(layout.total, settings.rho)
    rho_vec[:layout.num_eq] *= settings.eq_rho_scale
    system = _LinearSystem(a_bar, settings.sigma, rho_vec, settings.linear_solver, settings.cg_max_iter)

    x = np.zeros(n) if start is None else np.asarray(start, dtype=float).copy()
    z = layout.project(a_bar @ x, p.eq_rhs)
    y = np.zeros(layout.total)
    history: List[Dict[str, float]] = []
    converged = False
    gap = float('inf')
    iteration = 0

    for iteration in range(1, max_iter + 1):
        x_tilde, z_tilde = system.solve(x, z, y, q)
        x_next = settings.alpha * x_tilde + (1 - settings.alpha) * x
        z_relaxed = settings.alpha * z_tilde + (1 - settings.alpha) * z
        z_next = layout.project(z_relaxed + y / system.rho_vec, p.eq_rhs)
        y = y + system.rho_vec * (z_relaxed - z_next)
        x, z = x_next, z_next

        if iteration % settings.check_every and iteration != max_iter:
            continue
        ax = a_bar @ x
        aty = a_bar.T @ y
        primal = float(np.max(np.abs(ax - z), initial=0.0))
        dual = float(np.max(np.abs(q + aty), initial=0.0))
        objective = float(q @ x)
        dual_objective = -float(p.eq_rhs @ y[:layout.num_eq]) + float(layout.constant[layout.num_eq:] @ y[layout.num_eq:])
        gap = abs(objective - dual_objective)
        scale_p = max(float(np.max(np.abs(ax), initial=0.0)), float(np.max(np.abs(z), initial=0.0)), 1.0)
        scale_d = max(float(np.max(np.abs(aty), initial=0.0)), float(np.max(np.abs(q), initial=0.0)), 1.0)
        history.append({'iteration': iteration, 'primal_residual': primal, 'dual_residual': dual,
                        'gap': gap, 'rho': settings.rho})
        logger.debug(f"admm {iteration}: primal={primal:.2e} dual={dual:.2e} gap={gap:.2e}")

        if primal <= tol * scale_p and dual <= tol * scale_d and gap <= tol * max(1.0, abs(objective)):
            converged = True
            break

        if settings.adaptive_rho and primal > 0 and dual > 0:
            ratio = np.sqrt((primal / scale_p) / (dual / scale_d))
            if ratio > settings.adapt_tolerance or ratio < 1.0 / settings.adapt_tolerance:
                settings.rho = float(np.clip(settings.rho * ratio, 1e-6, 1e6))
                new_rho = np.full(layout.total, settings.rho)
                new_rho[:layout.num_eq] *= settings.eq_rho_scale
                system.update_rho(new_rho)
                logger.debug(f"admm rho -> {settings.rho:.3e}")

    value_scale = max(1.0, abs(float(p.objective @ x)))
    result = certify(p, x, gap, iteration, 'admm', tol * value_scale, 10 * tol,
                     history=history, converged=converged)
    result.time_ms = (time.perf_counter() - clock) * 1000
    logger.info(f"admm '{p.name}': {result.status} value={result.value:.8f} gap={gap:.2e} "
                f"iterations={iteration} factorizations={system.factorizations}")
    return result
