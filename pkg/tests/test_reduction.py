import json
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from src.core.channels import ChoiMatrix, builtin_channel, choi_matrix, maximally_entangled, random_channel
from src.core.errors import ChannelValidationError, DomainError
from src.core.linalg import kron
from src.core.orbitbasis import BasisElement, InvariantOperator, OrbitKey, basis_elements, enumerate_orbits
from src.core.reduction import (
    HermitianParametrization,
    assemble,
    assignment_from_parameters,
    block_consistency_check,
    manifest,
    marginal_Bn_rows,
    parameters_from_operator,
    to_block_sdp,
)
from src.core.symrep import partitions
from src.oracle.dense import dense_constraint_residuals, dense_reconstruct, evaluate_dense_objective
from src.solvers.ipm import solve_ipm


def _operator_from_dense(rho: np.ndarray, d_A: int, d_Abar: int, d_H: int) -> InvariantOperator:
    """Level-1 coefficients read off a dense matrix; every n=1 orbit is a single unit"""
    coeffs = {}
    for i in range(d_A):
        for j in range(d_A):
            for x in range(d_Abar):
                for y in range(d_Abar):
                    for h in range(d_H):
                        for g in range(d_H):
                            value = rho[(i * d_Abar + x) * d_H + h, (j * d_Abar + y) * d_H + g]
                            if value != 0:
                                coeffs[BasisElement(i, j, x, y, OrbitKey.unit(h, g, d_H))] = value
    return InvariantOperator(d_A=d_A, d_Abar=d_Abar, d_H=d_H, n=1, coeffs=coeffs)


def test_level_one_sizes(depolarizing_choi):
    """Test variable count and block layout at n=1, M=2."""
    reduced = assemble(depolarizing_choi, 2, 1)
    assert reduced.stats['orbits'] == 16
    assert reduced.stats['complex_variables'] == 256
    assert reduced.stats['real_parameters'] == 256
    assert reduced.stats['block_sides'] == [16]
    assert reduced.stats['equality_rows'] == len(reduced.equalities)


def test_level_two_sizes(depolarizing_choi):
    """Test orbit and variable counts at n=2, M=2."""
    reduced = assemble(depolarizing_choi, 2, 2)
    assert reduced.stats['orbits'] == 136
    assert reduced.stats['complex_variables'] == 2176
    assert sorted(reduced.stats['block_sides']) == [24, 40]
    assert set(reduced.stats['partitions']) == {'(2)', '(1,1)'}


@pytest.mark.slow
def test_level_three_blocks(depolarizing_choi):
    reduced = assemble(depolarizing_choi, 2, 3)
    assert reduced.stats['orbits'] == 816
    assert sorted(reduced.stats['block_sides']) == [16, 80, 80]


def test_invalid_inputs(depolarizing_choi):
    with pytest.raises(DomainError, match='level must be >= 1'):
        assemble(depolarizing_choi, 2, 0)
    with pytest.raises(DomainError):
        assemble(depolarizing_choi, 0, 1)

    broken = ChoiMatrix(matrix=2 * depolarizing_choi.matrix, d_A=2, d_B=2)
    with pytest.raises(ChannelValidationError):
        assemble(broken, 2, 1)


@pytest.mark.parametrize('n', [1, 2])
def test_start_point_is_feasible(depolarizing_choi, n):
    """Test the maximally mixed point annihilates every row and scores 1/M²."""
    reduced = assemble(depolarizing_choi, 2, n)
    point = reduced.start_point()
    assert all(isinstance(v, Fraction) for v in point.values())
    for row in reduced.equalities:
        assert row.evaluate(point) == 0, row.label
    assert reduced.objective_value(point) == pytest.approx(0.25, abs=1e-12)
    for block in reduced.blocks:
        assert np.linalg.eigvalsh(block.evaluate(point)).min() > 0


def test_start_point_reconstructs_maximally_mixed(depolarizing_choi):
    reduced = assemble(depolarizing_choi, 2, 2)
    d = reduced.dims
    op = InvariantOperator(d_A=d.d_A, d_Abar=d.d_Abar, d_H=d.d_H, n=2, coeffs=dict(reduced.start_point()))
    rho = dense_reconstruct(op)
    assert rho.shape == (64, 64)
    np.testing.assert_allclose(rho, np.eye(64) / 64, atol=1e-15)


def test_identity_channel_attains_one(identity_choi):
    """Test the objective of Φ_AĀ ⊗ Φ_BB̄ is one for the identity channel."""
    reduced = assemble(identity_choi, 2, 1)
    rho = kron(maximally_entangled(2), maximally_entangled(2))
    op = _operator_from_dense(rho, 2, 2, 4)
    assert reduced.objective_value(op.coeffs) == pytest.approx(1.0, abs=1e-12)
    for row in reduced.equalities:
        assert abs(complex(row.evaluate(op.coeffs))) < 1e-12, row.label


def test_objective_matches_dense(rng):
    """Test reduced objective against tr[W ρ] on a random invariant operator."""
    choi = choi_matrix(random_channel(2, 2, seed=3))
    reduced = assemble(choi, 2, 2)
    theta = rng.normal(size=reduced.parametrization.num_params)
    op = assignment_from_parameters(reduced, theta)
    assert op.is_hermitian()
    rho = dense_reconstruct(op)
    assert reduced.objective_value(op.coeffs) == pytest.approx(evaluate_dense_objective(choi, 2, rho), abs=1e-9)
    np.testing.assert_allclose(parameters_from_operator(reduced, op), theta, atol=1e-12)


def test_normalization_row_is_trace(rng, damping_choi):
    reduced = assemble(damping_choi, 2, 2)
    trace_row = reduced.equalities[0]
    assert trace_row.label == 'trace'
    op = assignment_from_parameters(reduced, rng.normal(size=reduced.parametrization.num_params))
    trace = np.trace(dense_reconstruct(op))
    assert complex(trace_row.evaluate(op.coeffs)) + 1 == pytest.approx(trace, abs=1e-9)


def test_marginal_row_violation_is_visible(depolarizing_choi):
    """Test a perturbation off the A-marginal shows up in the dense residuals."""
    reduced = assemble(depolarizing_choi, 2, 1)
    coeffs = {e: complex(v) for e, v in reduced.start_point().items()}
    elem = BasisElement(0, 1, 0, 0, OrbitKey.unit(0, 0, 4))
    coeffs[elem] = 0.01
    coeffs[elem.adjoint()] = 0.01
    op = InvariantOperator(d_A=2, d_Abar=2, d_H=4, n=1, coeffs=coeffs)
    residuals = dense_constraint_residuals(dense_reconstruct(op), 2, 2, 2, 2, 1)
    assert residuals['marginal_A'] > 1e-4
    assert any(abs(complex(row.evaluate(coeffs))) > 1e-4 for row in reduced.equalities if 'marginal_A' in row.label)


def test_block_sdp_structure(depolarizing_choi):
    reduced = assemble(depolarizing_choi, 2, 1)
    program = to_block_sdp(reduced)
    assert program.num_vars == 256
    assert program.block_sides == [32]
    assert program.blocks[0].symmetry_defect() == 0.0
    start = reduced.parametrization.to_parameters(reduced.start_point())
    assert program.eq_residual(start) < 1e-12
    assert program.min_block_eig(start) > 0
    assert program.objective_value(start) == pytest.approx(0.25, abs=1e-12)


def test_reduced_optimizer_satisfies_dense_constraints(damping_choi):
    """Test the level-2 optimizer reconstructs to a feasible dense matrix."""
    reduced = assemble(damping_choi, 2, 2)
    program = to_block_sdp(reduced)
    start = reduced.parametrization.to_parameters(reduced.start_point())
    result = solve_ipm(program, tol=1e-8, start=start)
    assert result.optimal
    rho = dense_reconstruct(assignment_from_parameters(reduced, result.assignment))
    residuals = dense_constraint_residuals(rho, 2, 2, 2, 2, 2)
    assert max(residuals.values()) < 1e-6
    assert np.linalg.eigvalsh(rho).min() > -1e-6
    assert evaluate_dense_objective(damping_choi, 2, rho) == pytest.approx(result.value, abs=1e-6)


def test_block_consistency(rng):
    """Test each block equals the compressed dense matrix."""
    keys = enumerate_orbits(2, 3)
    param = HermitianParametrization(basis_elements(1, 1, keys))
    op = InvariantOperator(d_A=1, d_Abar=1, d_H=2, n=3,
                           coeffs=param.to_assignment(rng.normal(size=param.num_params)))
    for shape in partitions(2, 3):
        assert block_consistency_check(op, shape) < 1e-9


def test_manifest_is_json_ready(depolarizing_choi):
    reduced = assemble(depolarizing_choi, 2, 1)
    program = to_block_sdp(reduced)
    record = manifest(reduced, program)
    text = json.dumps(record, sort_keys=True)
    assert json.loads(text)['dims'] == {'d_A': 2, 'd_Abar': 2, 'd_B': 2, 'd_Bbar': 2, 'n': 1}
    assert len(record['variables']) == 256
    assert record['blocks'] == [{'partition': [1], 'tableaux': 4, 'side': 16}]
    assert record['stats']['real_rows'] == program.num_rows
    assert record['stats']['row_rank'] <= program.num_rows
    assert record['rows'][0]['label'] == 'trace'
    assert record['rows'][0]['rhs'] == '1'


def test_channel_dimensions_flow_through():
    """Test d_Ā follows the channel input and d_B its output."""
    choi = choi_matrix(builtin_channel('erasure_like_qubit', 0.2))
    reduced = assemble(choi, 2, 1)
    assert reduced.dims.d_Abar == 2
    assert reduced.dims.d_B == 3
    assert reduced.dims.d_H == 6
    assert reduced.stats['complex_variables'] == 4 * 4 * 36


@pytest.mark.parametrize('n,expected', [(1, 64), (2, 1024), (3, 8704)])
def test_marginal_b_row_count(n, expected):
    """Test one row per (i, j, x, y, p, q) and degree-(n-1) orbit."""
    d_H = 4
    rows = marginal_Bn_rows(2, 2, 2, 2, n)
    assert len(rows) == 2 ** 2 * 2 ** 2 * 2 ** 2 * comb(n - 1 + d_H ** 2 - 1, d_H ** 2 - 1) == expected
    assert len({row.label for row in rows}) == len(rows)


def test_marginal_b_rows_vanish_for_trivial_output():
    assert marginal_Bn_rows(1, 1, 1, 2, 2) == []
