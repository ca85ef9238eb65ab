from math import comb

import pytest

from src.core.errors import DomainError
from src.core.orbitbasis import OrbitKey
from src.core.symrep import (
    Partition,
    Tableau,
    build_pairing_tables,
    distinct_row_rearrangements,
    gram_polynomial,
    pairing_table,
    partitions,
    row_multiplicity,
    semistandard_tableaux,
    tableau_count,
)
from src.oracle.dense import direct_gram_polynomial


def _tableau(rows, d):
    parts = tuple(len(r) for r in rows)
    return Tableau(Partition(parts), tuple(v for r in rows for v in r), d)


def test_partitions_examples():
    """Test partition enumeration order and the height bound."""
    assert [p.parts for p in partitions(2, 4)] == [(4,), (3, 1), (2, 2)]
    assert [p.parts for p in partitions(1, 5)] == [(5,)]
    assert [p.parts for p in partitions(4, 3)] == [(3,), (2, 1), (1, 1, 1)]
    assert [p.parts for p in partitions(3, 0)] == [()]


def test_partition_validation_and_conjugate():
    with pytest.raises(DomainError):
        Partition((1, 2))
    shape = Partition((3, 1))
    assert shape.conjugate() == (2, 1, 1)
    assert shape.columns() == [(0, 3), (1,), (2,)]
    assert str(shape) == '(3,1)'


def test_semistandard_tableaux_examples():
    two = semistandard_tableaux(Partition((2,)), 2)
    assert [t.entries for t in two] == [(0, 0), (0, 1), (1, 1)]
    column = semistandard_tableaux(Partition((1, 1)), 2)
    assert [t.entries for t in column] == [(0, 1)]
    assert len(semistandard_tableaux(Partition((2, 1)), 3)) == 8
    assert semistandard_tableaux(Partition((1, 1, 1)), 2) == []
    assert all(t.is_semistandard() for t in semistandard_tableaux(Partition((3, 2)), 3))


@pytest.mark.parametrize('d,n', [(2, 3), (3, 3), (2, 5), (4, 2), (3, 4)])
def test_enumeration_matches_hook_content(d, n):
    for shape in partitions(d, n):
        assert len(semistandard_tableaux(shape, d)) == tableau_count(shape, d)


@pytest.mark.parametrize('d', [2, 3, 4])
def test_dimension_identity(d):
    """Test Σ|T_λ|² against the number of orbits."""
    for n in range(0, 7):
        total = sum(tableau_count(shape, d) ** 2 for shape in partitions(d, n))
        assert total == comb(n + d * d - 1, d * d - 1)


def test_row_rearrangements_and_multiplicity():
    tau = _tableau([[0, 0, 1], [1]], 2)
    assert sorted(distinct_row_rearrangements(tau)) == [(0, 0, 1, 1), (0, 1, 0, 1), (1, 0, 0, 1)]
    assert row_multiplicity(tau) == 2


def test_gram_polynomial_single_row():
    """Test G = 4·x₁₁² for the one-row tableau [1,1]."""
    tau = _tableau([[0, 0]], 2)
    gram = gram_polynomial(tau, tau)
    assert gram.coeffs == {OrbitKey((2, 0, 0, 0), 2): 4}


def test_gram_polynomial_single_column():
    tau = _tableau([[0], [1]], 2)
    gram = gram_polynomial(tau, tau)
    assert gram.coeffs == {OrbitKey((1, 0, 0, 1), 2): 2, OrbitKey((0, 1, 1, 0), 2): -2}
    assert gram.evaluate([[1, 0], [0, 1]]) == 2


def test_gram_polynomial_shape_mismatch():
    with pytest.raises(DomainError):
        gram_polynomial(_tableau([[0, 0]], 2), _tableau([[0], [1]], 2))


@pytest.mark.parametrize('d,n', [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (3, 4)])
def test_column_factorization_matches_direct_expansion(d, n):
    for shape in partitions(d, n):
        tableaux = semistandard_tableaux(shape, d)
        for tau in tableaux:
            for gamma in tableaux:
                assert gram_polynomial(tau, gamma).coeffs == direct_gram_polynomial(tau, gamma)


def test_pairing_table_examples():
    table = pairing_table(Partition((2,)), 2)
    assert table[(0, 0, OrbitKey((2, 0, 0, 0), 2))] == 4
    column = pairing_table(Partition((1, 1)), 2)
    assert column[(0, 0, OrbitKey((1, 0, 0, 1), 2))] == 2
    assert all(key.n == 2 for _, _, key in table)


def test_pairing_table_transpose_symmetry():
    table = pairing_table(Partition((2, 1)), 3)
    for (ti, gi, key), value in table.items():
        assert table[(gi, ti, key.transpose())] == value


def test_build_pairing_tables_parallel_matches_serial():
    serial = build_pairing_tables(2, 3, workers=1)
    parallel = build_pairing_tables(2, 3, workers=2)
    assert list(serial) == list(parallel)
    for shape in serial:
        assert serial[shape] == parallel[shape]
