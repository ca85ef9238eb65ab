"""
Barrier interior-point method for BlockSDP instances

Equalities are eliminated once: θ = θ₀ + N w with N an orthonormal basis of
ker A. The method then follows the central path of
    minimize  −t·gᵀw − Σ_k log det F_k(θ₀ + N w)
with damped Newton steps, increasing t by a constant factor after each
centering until the barrier bound ν/t meets the gap tolerance.
"""

import logging
import time
from collections import OrderedDict
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, eigh, solve_triangular

from src.core.errors import ContractError
from src.solvers.problem import STATUS_INFEASIBLE, BlockSDP, SolveResult, certify

logger = logging.getLogger(__name__)

SUBSPACE_CACHE_SIZE = 8
_SUBSPACE_CACHE: "OrderedDict[str, Tuple[np.ndarray, np.ndarray]]" = OrderedDict()


@dataclass
class IpmSettings:
    """Tunables of the barrier method"""
    gap_tol: float = 1e-7
    feas_tol: float = 1e-7
    max_iter: int = 400
    mu: float = 10.0
    t0: float = 1.0
    newton_tol: float = 1e-9
    armijo: float = 0.25
    backtrack: float = 0.5
    max_backtracks: int = 60
    null_tol: float = 1e-9


def clear_subspace_cache() -> None:
    _SUBSPACE_CACHE.clear()


def cached_subspaces() -> List[str]:
    """Structure keys currently held, least recently used first"""
    return list(_SUBSPACE_CACHE)


def feasible_subspace(p: BlockSDP, null_tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
    """
    Minimum-norm solution θ₀ of Aθ = b and an orthonormal basis of ker A

    Computed from the eigendecomposition of AᵀA; eigenvalues below
    null_tol times the largest count as zero. Cached by structure key; the
    SUBSPACE_CACHE_SIZE most recently used keys are kept.

    Args:
        p: Instance
        null_tol: Relative eigenvalue cutoff

    Returns:
        (θ₀, N) with N of shape (num_vars, nullity)
    """
    if p.structure_key and p.structure_key in _SUBSPACE_CACHE:
        _SUBSPACE_CACHE.move_to_end(p.structure_key)
        return _SUBSPACE_CACHE[p.structure_key]
    if p.num_rows == 0:
        result = (np.zeros(p.num_vars), np.eye(p.num_vars))
    else:
        gram = (p.eq_matrix.T @ p.eq_matrix).toarray()
        evals, evecs = eigh(gram)
        cutoff = null_tol * max(float(evals[-1]), 1.0)
        null = evals <= cutoff
        rng = ~null
        projected = evecs[:, rng].T @ (p.eq_matrix.T @ p.eq_rhs)
        theta0 = evecs[:, rng] @ (projected / evals[rng])
        result = (theta0, evecs[:, null].copy())
        logger.debug(f"feasible subspace of '{p.name}': rank {int(rng.sum())}, nullity {int(null.sum())}")
    if p.structure_key:
        _SUBSPACE_CACHE[p.structure_key] = result
        while len(_SUBSPACE_CACHE) > SUBSPACE_CACHE_SIZE:
            _SUBSPACE_CACHE.popitem(last=False)
    return result


class _ReducedBarrier:
    """Blocks F_k(w) = G_k0 + Σ_j w_j G_kj in null-space coordinates"""

    def __init__(self, p: BlockSDP, theta0: np.ndarray, basis: np.ndarray):
        self.sides = [b.side for b in p.blocks]
        self.offsets = [b.evaluate(theta0) for b in p.blocks]
        self.directions = [np.asarray(b.coeffs @ basis) for b in p.blocks]
        self.nu = float(sum(self.sides))

    def matrices(self, w: np.ndarray) -> List[np.ndarray]:
        return [g0 + (g @ w).reshape(s, s) for g0, g, s in zip(self.offsets, self.directions, self.sides)]

    def factor(self, w: np.ndarray) -> Optional[List[np.ndarray]]:
        """Lower Cholesky factors, or None if some block is not positive definite"""
        factors = []
        for mat in self.matrices(w):
            try:
                factors.append(cholesky(0.5 * (mat + mat.T), lower=True))
            except LinAlgError:
                return None
        return factors

    @staticmethod
    def log_det(factors: List[np.ndarray]) -> float:
        return float(sum(2.0 * np.sum(np.log(np.diag(l))) for l in factors))

    def gradient_hessian(self, factors: List[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        """Gradient and Hessian of Σ_k log det F_k"""
        m = self.directions[0].shape[1] if self.directions else 0
        grad = np.zeros(m)
        hess = np.zeros((m, m))
        for l, g, s in zip(factors, self.directions, self.sides):
            inv = cho_solve((l, True), np.eye(s))
            grad += g.T @ inv.reshape(-1)
            y = solve_triangular(l, g.reshape(s, s * m), lower=True)
            y = y.reshape(s, s, m).transpose(1, 0, 2).reshape(s, s * m)
            z = solve_triangular(l, y, lower=True).reshape(s * s, m)
            hess += z.T @ z
        return grad, hess


def solve_ipm(p: BlockSDP, tol: float = 1e-7, start: Optional[np.ndarray] = None,
              settings: Optional[IpmSettings] = None) -> SolveResult:
    """
    Maximize a BlockSDP from a strictly feasible start

    Args:
        p: Instance
        tol: Duality-gap tolerance (overrides settings.gap_tol)
        start: Assignment satisfying the equalities with every block
            positive definite; defaults to the minimum-norm solution
        settings: IpmSettings

    Returns:
        SolveResult with status optimal or max_iter
    """
    settings = replace(settings or IpmSettings(), gap_tol=tol)
    clock = time.perf_counter()

    theta0, basis = feasible_subspace(p, settings.null_tol)
    base_residual = p.eq_residual(theta0)
    if base_residual > max(settings.feas_tol, 1e-6):
        logger.warning(f"Equalities of '{p.name}' are inconsistent (residual {base_residual:.3e})")
        return SolveResult(status=STATUS_INFEASIBLE, value=float('nan'), assignment=theta0,
                           duality_gap=float('inf'), eq_residual=base_residual,
                           min_block_eig=p.min_block_eig(theta0), iterations=0, solver='ipm')

    w = np.zeros(basis.shape[1])
    if start is not None:
        start = np.asarray(start, dtype=float)
        w = basis.T @ (start - theta0)
        drift = float(np.max(np.abs(theta0 + basis @ w - start), initial=0.0))
        if drift > 1e-8:
            raise ContractError(f"IPM start violates the equalities (off by {drift:.3e})")

    barrier = _ReducedBarrier(p, theta0, basis)
    g = basis.T @ p.objective
    factors = barrier.factor(w)
    if factors is None:
        raise ContractError("IPM start is not strictly feasible: some block is not positive definite")

    if basis.shape[1] == 0:
        theta = theta0.copy()
        result = certify(p, theta, 0.0, 0, 'ipm', settings.gap_tol, settings.feas_tol)
        result.time_ms = (time.perf_counter() - clock) * 1000
        return result

    t = settings.t0
    history = []
    iterations = 0
    converged = False

    def phi(point_factors, point):
        return -t * float(g @ point) - barrier.log_det(point_factors)

    while iterations < settings.max_iter:
        grad_ld, hess = barrier.gradient_hessian(factors)
        grad = -t * g - grad_ld
        try:
            chol = cho_factor(hess)
        except LinAlgError:
            ridge = 1e-12 * max(float(np.trace(hess)) / len(hess), 1.0)
            chol = cho_factor(hess + ridge * np.eye(len(hess)))
        step = -cho_solve(chol, grad)
        decrement = float(-grad @ step)
        iterations += 1

        if decrement / 2 <= settings.newton_tol:
            gap = barrier.nu / t
            history.append({'iteration': iterations, 't': t, 'value': p.objective_value(theta0 + basis @ w),
                            'gap': gap})
            logger.debug(f"ipm centered: t={t:.3e} gap={gap:.3e}")
            if gap <= settings.gap_tol:
                converged = True
                break
            t *= settings.mu
            continue

        # inside the quadratic region only positivity is enforced
        quadratic = decrement < 0.25
        alpha = 1.0
        current = phi(factors, w)
        accepted = None
        for _ in range(settings.max_backtracks):
            trial = w + alpha * step
            trial_factors = barrier.factor(trial)
            if trial_factors is not None and (
                    quadratic or phi(trial_factors, trial) <= current + settings.armijo * alpha * float(grad @ step)):
                accepted = (trial, trial_factors)
                break
            alpha *= settings.backtrack
        if accepted is None:
            logger.warning(f"ipm line search stalled at t={t:.3e}")
            break
        w, factors = accepted

    theta = theta0 + basis @ w
    gap = barrier.nu / t if converged else max(barrier.nu / t, settings.gap_tol * 10)
    result = certify(p, theta, gap, iterations, 'ipm', settings.gap_tol, max(settings.feas_tol, 1e-6),
                     history=history, converged=converged)
    result.time_ms = (time.perf_counter() - clock) * 1000
    logger.info(f"ipm '{p.name}': {result.status} value={result.value:.10f} gap={result.duality_gap:.2e} "
                f"iterations={iterations}")
    return result
