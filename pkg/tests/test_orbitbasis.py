import itertools

import numpy as np
import pytest

from src.core.errors import DomainError
from src.core.linalg import kron, partial_trace
from src.core.orbitbasis import (
    BasisElement,
    OrbitKey,
    adjoint_key,
    enumerate_orbits,
    first_copy_reduction,
    orbit_count,
    orbit_of_pair,
    orbit_size,
    ptrace_last_output_pair,
    ptrace_last_outputbar,
    representative,
    trace_coefficient,
)
from src.oracle.dense import dense_orbit_matrix


def test_enumerate_orbits_counts():
    """Test orbit enumeration sizes and order."""
    assert len(enumerate_orbits(2, 2)) == 10 == orbit_count(2, 2)
    assert enumerate_orbits(1, 5) == [OrbitKey((5,), 1)]
    units = enumerate_orbits(4, 1)
    assert len(units) == 16
    assert all(sorted(k.counts) == [0] * 15 + [1] for k in units)
    assert [k.counts for k in enumerate_orbits(2, 1)] == sorted(k.counts for k in enumerate_orbits(2, 1))


@pytest.mark.parametrize('d,n', [(2, 3), (3, 2), (4, 2), (2, 5)])
def test_orbits_partition_index_pairs(d, n):
    assert sum(orbit_size(k) for k in enumerate_orbits(d, n)) == (d * d) ** n


def test_orbit_size_examples():
    assert orbit_size(OrbitKey((2, 0, 0, 0), 2)) == 1
    assert orbit_size(OrbitKey((1, 0, 0, 1), 2)) == 2
    assert orbit_size(OrbitKey((1, 1, 1, 0), 2)) == 6


def test_representative_examples_and_roundtrip():
    assert representative(OrbitKey((1, 0, 0, 1), 2)) == ((0, 1), (0, 1))
    assert representative(OrbitKey.unit(0, 1, 2)) == ((0,), (1,))
    for n in range(5):
        for key in enumerate_orbits(2, n):
            a, b = representative(key)
            assert orbit_of_pair(a, b, 2) == key


def test_adjoint_key():
    for key in enumerate_orbits(3, 3):
        assert adjoint_key(adjoint_key(key)) == key
        if key.is_diagonal:
            assert adjoint_key(key) == key
    assert adjoint_key(OrbitKey.unit(0, 1, 2)) == OrbitKey.unit(1, 0, 2)


def test_trace_coefficient():
    diag = OrbitKey((1, 0, 0, 1), 2)
    assert trace_coefficient(BasisElement(0, 0, 1, 1, diag)) == 2
    assert trace_coefficient(BasisElement(0, 1, 0, 0, diag)) == 0
    assert trace_coefficient(BasisElement(0, 0, 0, 0, OrbitKey((0, 1, 1, 0), 2))) == 0
    assert trace_coefficient(BasisElement(0, 0, 0, 0, diag)) == int(np.trace(dense_orbit_matrix(diag)))


def test_ptrace_last_outputbar_examples():
    """Test the single-copy expansion on composite symbols (c = c_B·d_B̄ + c_B̄)."""
    same_bbar = OrbitKey.unit(0, 2, 4)
    assert ptrace_last_outputbar(same_bbar, 2, 2) == [(OrbitKey((0,) * 16, 4), 0, 1)]
    assert ptrace_last_outputbar(OrbitKey.unit(0, 1, 4), 2, 2) == []
    with pytest.raises(DomainError):
        ptrace_last_outputbar(OrbitKey((0,) * 16, 4), 2, 2)
    with pytest.raises(DomainError):
        ptrace_last_outputbar(OrbitKey.unit(0, 1, 2), 2, 2)


@pytest.mark.parametrize('d_B,d_Bbar,max_n', [(2, 2, 2), (2, 1, 3), (1, 2, 3)])
def test_ptrace_last_outputbar_matches_dense(d_B, d_Bbar, max_n):
    d = d_B * d_Bbar
    for n in range(1, max_n + 1):
        for key in enumerate_orbits(d, n):
            dense = partial_trace(dense_orbit_matrix(key), (d,) * (n - 1) + (d_B, d_Bbar), [n])
            rebuilt = np.zeros_like(dense)
            for reduced, p, q in ptrace_last_outputbar(key, d_B, d_Bbar):
                unit = np.zeros((d_B, d_B))
                unit[p, q] = 1
                rebuilt += kron(dense_orbit_matrix(reduced), unit)
            assert np.array_equal(dense, rebuilt)


def test_ptrace_last_output_pair():
    assert ptrace_last_output_pair(OrbitKey.unit(0, 0, 4, n=2)) == [OrbitKey.unit(0, 0, 4, n=1)]
    assert ptrace_last_output_pair(OrbitKey((0, 2, 0, 0), 2)) == []
    for key in enumerate_orbits(2, 3):
        dense = partial_trace(dense_orbit_matrix(key), (2, 2, 2), [2])
        rebuilt = sum((dense_orbit_matrix(k) for k in ptrace_last_output_pair(key)), np.zeros((4, 4)))
        assert np.array_equal(dense, rebuilt)


def test_first_copy_reduction_examples():
    assert first_copy_reduction(OrbitKey.unit(0, 1, 2)) == {(0, 1): 1}
    assert first_copy_reduction(OrbitKey((0, 1, 0, 1), 2)) == {(0, 1): 1}
    assert first_copy_reduction(OrbitKey((1, 0, 0, 1), 2)) == {(0, 0): 1, (1, 1): 1}


@pytest.mark.parametrize('d,max_n', [(2, 4), (4, 2), (3, 3)])
def test_first_copy_reduction_matches_dense(d, max_n):
    for n in range(1, max_n + 1):
        for key in enumerate_orbits(d, n):
            dense = partial_trace(dense_orbit_matrix(key), (d,) * n, list(range(1, n)))
            expected = np.zeros((d, d))
            for (p, q), count in first_copy_reduction(key).items():
                expected[p, q] = count
            assert np.array_equal(dense, expected)
            total = sum(first_copy_reduction(key).values())
            if n == 1 or key.off_diagonal_mass == 0:
                assert total == orbit_size(key)
            else:
                assert total < orbit_size(key)


def test_dense_orbit_matrix_is_incidence():
    for key in enumerate_orbits(2, 3):
        dense = dense_orbit_matrix(key)
        count = 0
        for a in itertools.product(range(2), repeat=3):
            for b in itertools.product(range(2), repeat=3):
                inside = orbit_of_pair(a, b, 2) == key
                count += inside
                row = np.ravel_multi_index(a, (2,) * 3)
                col = np.ravel_multi_index(b, (2,) * 3)
                assert dense[row, col] == (1.0 if inside else 0.0)
        assert count == orbit_size(key)
