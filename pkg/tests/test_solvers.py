from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse as sp

from src.core.errors import ContractError, DomainError, ShapeError
from src.solvers.admm import AdmmSettings, solve_admm
from src.solvers.ipm import SUBSPACE_CACHE_SIZE, IpmSettings, cached_subspaces, feasible_subspace, solve_ipm
from src.solvers.problem import STATUS_INFEASIBLE, STATUS_MAX_ITER, STATUS_OPTIMAL, BlockMap, BlockSDP, certify
from src.solvers.sdpa import export_sdpa, parse_sdpa


def _no_rows(num_vars: int) -> sp.csr_matrix:
    return sp.csr_matrix((0, num_vars))


@pytest.fixture
def interval_sdp():
    """maximize x  s.t.  1 − x ≥ 0, x ≥ 0"""
    blocks = [
        BlockMap.from_dense(np.array([[1.0]]), {0: np.array([[-1.0]])}, 1, label='upper'),
        BlockMap.from_dense(np.array([[0.0]]), {0: np.array([[1.0]])}, 1, label='lower'),
    ]
    return BlockSDP(num_vars=1, objective=np.array([1.0]), eq_matrix=_no_rows(1), eq_rhs=np.zeros(0),
                    blocks=blocks, name='interval')


@pytest.fixture
def correlation_sdp():
    """maximize 2x  s.t.  [[1, x], [x, 1]] ⪰ 0"""
    block = BlockMap.from_dense(np.eye(2), {0: np.array([[0.0, 1.0], [1.0, 0.0]])}, 1, label='corr')
    return BlockSDP(num_vars=1, objective=np.array([2.0]), eq_matrix=_no_rows(1), eq_rhs=np.zeros(0),
                    blocks=[block], name='correlation')


@pytest.fixture
def simplex_sdp():
    """maximize 2·x0 + x1  s.t.  x0 + x1 = 1, diag(x0, x1) ⪰ 0"""
    block = BlockMap.from_dense(np.zeros((2, 2)), {0: np.diag([1.0, 0.0]), 1: np.diag([0.0, 1.0])}, 2)
    return BlockSDP(num_vars=2, objective=np.array([2.0, 1.0]), eq_matrix=sp.csr_matrix([[1.0, 1.0]]),
                    eq_rhs=np.array([1.0]), blocks=[block], variable_labels=['x0', 'x1'], name='simplex')


def test_block_sdp_validation():
    block = BlockMap.from_dense(np.eye(2), {}, 3)
    with pytest.raises(ShapeError):
        BlockSDP(num_vars=2, objective=np.ones(2), eq_matrix=_no_rows(2), eq_rhs=np.zeros(0), blocks=[block])
    with pytest.raises(ShapeError):
        BlockSDP(num_vars=1, objective=np.ones(1), eq_matrix=sp.csr_matrix([[1.0]]), eq_rhs=np.zeros(2), blocks=[])
    with pytest.raises(ShapeError):
        BlockMap(side=2, constant=np.zeros(3), coeffs=sp.csr_matrix((4, 1)))
    with pytest.raises(ShapeError):
        BlockSDP(num_vars=1, objective=np.array([np.inf]), eq_matrix=_no_rows(1), eq_rhs=np.zeros(0), blocks=[])


def test_block_map_evaluate_and_adjoint(correlation_sdp):
    block = correlation_sdp.blocks[0]
    np.testing.assert_allclose(block.evaluate(np.array([0.5])), [[1.0, 0.5], [0.5, 1.0]])
    assert block.adjoint(np.array([[0.0, 1.0], [1.0, 0.0]]))[0] == pytest.approx(2.0)
    assert block.symmetry_defect() == 0.0


def test_ipm_interval(interval_sdp):
    """Test the barrier method on a single bounded variable."""
    result = solve_ipm(interval_sdp, tol=1e-8, start=np.array([0.5]))
    assert result.status == STATUS_OPTIMAL
    assert result.value == pytest.approx(1.0, abs=1e-7)
    assert result.solver == 'ipm'
    assert result.history


def test_ipm_correlation(correlation_sdp):
    result = solve_ipm(correlation_sdp, tol=1e-9, start=np.array([0.0]))
    assert result.optimal
    assert result.value == pytest.approx(2.0, abs=1e-7)
    assert result.min_block_eig >= -1e-7


def test_ipm_with_equalities(simplex_sdp):
    result = solve_ipm(simplex_sdp, tol=1e-9, start=np.array([0.5, 0.5]))
    assert result.optimal
    assert result.value == pytest.approx(2.0, abs=1e-7)
    np.testing.assert_allclose(result.assignment, [1.0, 0.0], atol=1e-6)
    assert result.eq_residual < 1e-12


def test_ipm_rejects_bad_start(interval_sdp, simplex_sdp):
    with pytest.raises(ContractError, match='not strictly feasible'):
        solve_ipm(interval_sdp, start=np.array([2.0]))
    with pytest.raises(ContractError, match='violates the equalities'):
        solve_ipm(simplex_sdp, start=np.array([0.2, 0.2]))


def test_ipm_detects_inconsistent_equalities():
    """Test contradictory rows end in the infeasible status without iterating."""
    block = BlockMap.from_dense(np.zeros((2, 2)), {0: np.diag([1.0, 0.0]), 1: np.diag([0.0, 1.0])}, 2)
    p = BlockSDP(num_vars=2, objective=np.ones(2), eq_matrix=sp.csr_matrix([[1.0, 1.0], [1.0, 1.0]]),
                 eq_rhs=np.array([1.0, 2.0]), blocks=[block], name='contradiction')
    result = solve_ipm(p)
    assert result.status == STATUS_INFEASIBLE
    assert result.iterations == 0
    assert np.isnan(result.value)


def test_ipm_iteration_cap(correlation_sdp):
    result = solve_ipm(correlation_sdp, tol=1e-12, start=np.array([0.0]), settings=IpmSettings(max_iter=3))
    assert result.status == STATUS_MAX_ITER
    assert result.value < 2.0


def test_feasible_subspace(simplex_sdp):
    theta0, basis = feasible_subspace(simplex_sdp)
    np.testing.assert_allclose(theta0, [0.5, 0.5], atol=1e-12)
    assert basis.shape == (2, 1)
    assert abs(basis[:, 0].sum()) < 1e-12


def test_feasible_subspace_cache_is_bounded(simplex_sdp):
    """Test the subspace cache keeps only the most recently used structures."""
    keys = [f'simplex:{k}' for k in range(SUBSPACE_CACHE_SIZE + 3)]
    for key in keys:
        feasible_subspace(replace(simplex_sdp, structure_key=key))
    assert cached_subspaces() == keys[-SUBSPACE_CACHE_SIZE:]

    feasible_subspace(replace(simplex_sdp, structure_key=keys[-SUBSPACE_CACHE_SIZE]))
    feasible_subspace(replace(simplex_sdp, structure_key='simplex:new'))
    held = cached_subspaces()
    assert len(held) == SUBSPACE_CACHE_SIZE
    assert keys[-SUBSPACE_CACHE_SIZE] in held
    assert keys[-SUBSPACE_CACHE_SIZE + 1] not in held
    assert held[-1] == 'simplex:new'


@pytest.mark.parametrize('linear_solver', ['direct', 'indirect'])
def test_admm_agrees_with_ipm(correlation_sdp, linear_solver):
    """Test the splitting method reaches the barrier optimum."""
    settings = AdmmSettings(linear_solver=linear_solver)
    result = solve_admm(correlation_sdp, tol=1e-7, max_iter=20000, settings=settings)
    assert result.solver == 'admm'
    assert result.value == pytest.approx(2.0, abs=1e-4)
    assert settings.rho == 0.1


def test_admm_with_equalities(simplex_sdp):
    result = solve_admm(simplex_sdp, tol=1e-7)
    assert result.optimal
    assert result.value == pytest.approx(2.0, abs=1e-4)
    assert all({'iteration', 'primal_residual', 'dual_residual', 'gap'} <= set(h) for h in result.history)


def test_admm_unknown_linear_solver(correlation_sdp):
    with pytest.raises(DomainError):
        solve_admm(correlation_sdp, settings=AdmmSettings(linear_solver='qr'))


def test_admm_iteration_cap_is_partial(correlation_sdp):
    result = solve_admm(correlation_sdp, tol=1e-12, max_iter=5, settings=AdmmSettings(check_every=1))
    assert result.status == STATUS_MAX_ITER
    assert result.iterations == 5
    assert len(result.history) == 5


def test_certify_downgrades(simplex_sdp):
    theta = np.array([0.7, 0.7])
    result = certify(simplex_sdp, theta, gap=0.0, iterations=1, solver='test', gap_tol=1e-6, feas_tol=1e-6)
    assert result.status == STATUS_MAX_ITER
    assert result.eq_residual == pytest.approx(0.4)
    good = certify(simplex_sdp, np.array([1.0, 0.0]), gap=0.0, iterations=1, solver='test',
                   gap_tol=1e-6, feas_tol=1e-6)
    assert good.status == STATUS_OPTIMAL
    assert good.to_dict()['value'] == pytest.approx(2.0)
    assert 'assignment' in good.to_dict(include_assignment=True)


def _sdpa_matrices(instance):
    """Dense F_0..F_m per block from parsed entries"""
    sides = [abs(b) for b in instance.block_struct]
    mats = [[np.zeros((s, s)) for s in sides] for _ in range(instance.num_vars + 1)]
    for mat, blk, i, j, value in instance.entries:
        mats[mat][blk - 1][i - 1, j - 1] = value
        mats[mat][blk - 1][j - 1, i - 1] = value
    return mats


def test_sdpa_split_export(tmp_path, simplex_sdp):
    """Test the split export is the same program in SDPA's primal form."""
    path = tmp_path / 'simplex.dat-s'
    export_sdpa(simplex_sdp, str(path))
    instance = parse_sdpa(str(path))
    assert instance.num_vars == 4
    assert instance.block_struct == [2, -(2 * 1 + 4)]
    np.testing.assert_allclose(instance.objective, [-2.0, 2.0, -1.0, 1.0])
    assert any('x1 - x2 = x0' in line for line in instance.comments)

    theta = np.array([1.0, 0.0])
    x = np.empty(4)
    x[0::2] = np.maximum(theta, 0)
    x[1::2] = np.maximum(-theta, 0)
    mats = _sdpa_matrices(instance)
    for blk in range(len(instance.block_struct)):
        slack = sum(x[k] * mats[k + 1][blk] for k in range(4)) - mats[0][blk]
        assert np.linalg.eigvalsh(slack).min() >= -1e-12
    assert float(instance.objective @ x) == pytest.approx(-2.0)


def test_sdpa_free_export(tmp_path, simplex_sdp):
    path = tmp_path / 'free.dat-s'
    export_sdpa(simplex_sdp, str(path), split_free=False)
    instance = parse_sdpa(str(path))
    assert instance.num_vars == 2
    assert instance.block_struct == [2, -2]
    assert instance.diagonal_size == 2
    assert instance.block_sides == [2]


def test_sdpa_export_is_deterministic(tmp_path, correlation_sdp):
    first, second = tmp_path / 'a.dat-s', tmp_path / 'b.dat-s'
    export_sdpa(correlation_sdp, str(first))
    export_sdpa(correlation_sdp, str(second))
    assert first.read_bytes() == second.read_bytes()


def test_parse_sdpa_accepts_punctuation(tmp_path):
    path = tmp_path / 'punct.dat-s'
    path.write_text('"a comment"\n1\n1\n{2}\n(1.0)\n0 1 1 1 1.0\n1 1 1 2 1.0\n')
    instance = parse_sdpa(str(path))
    assert instance.block_struct == [2]
    assert instance.entries == [(0, 1, 1, 1, 1.0), (1, 1, 1, 2, 1.0)]


def test_parse_sdpa_truncated(tmp_path):
    path = tmp_path / 'short.dat-s'
    path.write_text('1\n1\n')
    with pytest.raises(ShapeError):
        parse_sdpa(str(path))
