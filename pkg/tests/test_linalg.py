import numpy as np
import pytest

from src.core.channels import maximally_entangled
from src.core.errors import ContractError, ShapeError
from src.core.linalg import (
    SystemShape,
    is_hermitian,
    kron,
    kron_all,
    min_eigenvalue,
    partial_trace,
    permute_systems,
    realify,
    trace_norm,
    unrealify,
    vec,
)


def test_kron_identity_and_shift():
    """Test Kronecker products of small matrices."""
    assert np.allclose(kron(np.eye(2), np.eye(2)), np.eye(4))
    shift = np.array([[0, 1], [0, 0]])
    out = kron(shift, np.eye(2))
    expected = np.zeros((4, 4))
    expected[0, 2] = expected[1, 3] = 1
    assert np.allclose(out, expected)


def test_kron_all_matches_nested():
    a, b, c = np.diag([1, 2]), np.eye(3), np.array([[0, 1], [1, 0]])
    assert np.allclose(kron_all([a, b, c]), np.kron(np.kron(a, b), c))


def test_partial_trace_of_maximally_entangled_state():
    """Test that the marginal of |Φ><Φ| is maximally mixed."""
    phi = maximally_entangled(2)
    assert np.allclose(partial_trace(phi, (2, 2), [1]), np.eye(2) / 2)
    assert np.allclose(partial_trace(phi, (2, 2), [0]), np.eye(2) / 2)


def test_partial_trace_of_product(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3))
    assert np.allclose(partial_trace(kron(a, b), (2, 3), [1]), a * np.trace(b))
    assert np.allclose(partial_trace(kron(a, b), (2, 3), [0]), b * np.trace(a))


def test_partial_trace_rejects_wrong_shape():
    with pytest.raises(ShapeError):
        partial_trace(np.eye(5), (2, 2), [0])
    with pytest.raises(ShapeError):
        partial_trace(np.eye(4), (2, 2), [2])


def test_system_shape_validation():
    with pytest.raises(ShapeError):
        SystemShape((2, 0))
    assert SystemShape((2, 3)).total == 6
    assert SystemShape((2, 3, 4)).without([1]).dims == (2, 4)


def test_permute_systems_swaps_factors(rng):
    a = rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3))
    assert np.allclose(permute_systems(kron(a, b), (2, 3), [1, 0]), kron(b, a))


def test_permute_systems_three_factors(rng):
    a, b, c = (rng.normal(size=(d, d)) for d in (2, 3, 2))
    moved = permute_systems(kron_all([a, b, c]), (2, 3, 2), [2, 0, 1])
    assert np.allclose(moved, kron_all([c, a, b]))


def test_vec_row_major():
    assert np.allclose(vec(np.eye(2)), [1, 0, 0, 1])
    unit = np.zeros((2, 2))
    unit[0, 1] = 1
    assert np.allclose(vec(unit), [0, 1, 0, 0])


def test_min_eigenvalue():
    assert min_eigenvalue(np.eye(3)) == pytest.approx(1.0)
    assert min_eigenvalue(np.diag([2.0, -1.0])) == pytest.approx(-1.0)
    with pytest.raises(ContractError):
        min_eigenvalue(np.array([[0, 1], [0, 0]]))


def test_realify_spectrum_and_inverse():
    assert np.allclose(realify(np.eye(2)), np.eye(4))
    sigma_y = np.array([[0, -1j], [1j, 0]])
    r = realify(sigma_y)
    assert np.allclose(np.sort(np.linalg.eigvalsh(r)), [-1, -1, 1, 1])
    assert np.allclose(unrealify(r), sigma_y)
    with pytest.raises(ContractError):
        realify(np.array([[0, 1], [0, 0]]))


def test_is_hermitian_and_trace_norm():
    assert is_hermitian(np.array([[1, 1j], [-1j, 2]]))
    assert not is_hermitian(np.array([[1, 1j], [1j, 2]]))
    assert trace_norm(np.diag([1.0, -2.0])) == pytest.approx(3.0)
