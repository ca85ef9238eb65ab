"""
Symmetric-group machinery for block-diagonalizing the invariant algebra

Partitions, semistandard tableaux and the Gram polynomials whose monomial
coefficients are the pairings u_τᵀ C_E u_γ. Tableau entries are 0-based and
cells are ordered by concatenating rows, top row first.
"""

import itertools
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from math import factorial, prod
from typing import Dict, Iterator, List, Sequence, Tuple

from src.core.errors import DomainError
from src.core.orbitbasis import OrbitKey

logger = logging.getLogger(__name__)

MonomialKey = OrbitKey
PairingTable = Dict[Tuple[int, int, OrbitKey], int]


@dataclass(frozen=True)
class Partition:
    """Young shape λ ⊢ n given by its non-increasing row lengths"""
    parts: Tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if any(p <= 0 for p in parts):
            raise DomainError(f"Partition parts must be positive, got {parts}")
        if any(parts[k] < parts[k + 1] for k in range(len(parts) - 1)):
            raise DomainError(f"Partition parts must be non-increasing, got {parts}")
        object.__setattr__(self, 'parts', parts)

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def height(self) -> int:
        return len(self.parts)

    def conjugate(self) -> Tuple[int, ...]:
        """Column heights, left to right"""
        if not self.parts:
            return ()
        return tuple(sum(1 for p in self.parts if p > c) for c in range(self.parts[0]))

    def row_offsets(self) -> Tuple[int, ...]:
        offsets, total = [], 0
        for p in self.parts:
            offsets.append(total)
            total += p
        return tuple(offsets)

    def columns(self) -> List[Tuple[int, ...]]:
        """Cell indices of each column, top to bottom"""
        offsets = self.row_offsets()
        return [tuple(offsets[r] + c for r in range(h)) for c, h in enumerate(self.conjugate())]

    def __str__(self) -> str:
        return '(' + ','.join(str(p) for p in self.parts) + ')'


@dataclass(frozen=True)
class Tableau:
    """Filling of a Young shape with entries in [d]"""
    shape: Partition
    entries: Tuple[int, ...]
    d: int

    def __post_init__(self):
        entries = tuple(int(v) for v in self.entries)
        if len(entries) != self.shape.n:
            raise DomainError(f"Tableau has {len(entries)} entries for a shape of size {self.shape.n}")
        if any(v < 0 or v >= self.d for v in entries):
            raise DomainError(f"Tableau entries must lie in [0, {self.d}), got {entries}")
        object.__setattr__(self, 'entries', entries)

    def rows(self) -> List[Tuple[int, ...]]:
        offsets = self.shape.row_offsets()
        return [self.entries[o:o + p] for o, p in zip(offsets, self.shape.parts)]

    def is_semistandard(self) -> bool:
        rows = self.rows()
        if any(row[k] > row[k + 1] for row in rows for k in range(len(row) - 1)):
            return False
        for r in range(len(rows) - 1):
            if any(rows[r][c] >= rows[r + 1][c] for c in range(len(rows[r + 1]))):
                return False
        return True

    def __str__(self) -> str:
        return '[' + ';'.join(','.join(str(v + 1) for v in row) for row in self.rows()) + ']'


def partitions(d: int, n: int) -> List[Partition]:
    """
    Partitions of n with at most d parts, in reverse-lexicographic order

    Args:
        d: Maximum number of parts
        n: Size

    Returns:
        List of Partition, largest first part first
    """
    if d < 1 or n < 0:
        raise DomainError(f"partitions needs d >= 1 and n >= 0, got {d}, {n}")
    result = []

    def _extend(prefix: List[int], remaining: int, max_part: int) -> None:
        if remaining == 0:
            result.append(Partition(tuple(prefix)))
            return
        if len(prefix) == d:
            return
        for part in range(min(remaining, max_part), 0, -1):
            prefix.append(part)
            _extend(prefix, remaining - part, part)
            prefix.pop()

    _extend([], n, n)
    return result


def semistandard_tableaux(shape: Partition, d: int) -> List[Tableau]:
    """
    All semistandard tableaux of a shape with entries in [d]

    Cells are filled in row-concatenated order with values tried in
    ascending order, so the result is lexicographic in the entries.
    """
    if shape.height > d:
        return []
    parts = shape.parts
    offsets = shape.row_offsets()
    conj = shape.conjugate()
    cells = [(r, c) for r, p in enumerate(parts) for c in range(p)]
    filling = [0] * shape.n
    result = []

    def _place(k: int) -> None:
        if k == len(cells):
            result.append(Tableau(shape, tuple(filling), d))
            return
        r, c = cells[k]
        low = filling[k - 1] if c > 0 else 0
        if r > 0:
            low = max(low, filling[offsets[r - 1] + c] + 1)
        # rows below still need strictly larger entries in this column
        high = d - (conj[c] - r)
        for v in range(low, high + 1):
            filling[k] = v
            _place(k + 1)

    _place(0)
    return result


def tableau_count(shape: Partition, d: int) -> int:
    """Number of semistandard tableaux by the hook-content formula"""
    if shape.height > d:
        return 0
    conj = shape.conjugate()
    numerator, denominator = 1, 1
    for r, p in enumerate(shape.parts):
        for c in range(p):
            numerator *= d + c - r
            denominator *= (p - c - 1) + (conj[c] - r - 1) + 1
    return numerator // denominator


def distinct_permutations(values: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    items = sorted(values)
    while True:
        yield tuple(items)
        i = len(items) - 2
        while i >= 0 and items[i] >= items[i + 1]:
            i -= 1
        if i < 0:
            return
        j = len(items) - 1
        while items[j] <= items[i]:
            j -= 1
        items[i], items[j] = items[j], items[i]
        items[i + 1:] = reversed(items[i + 1:])


def distinct_row_rearrangements(tableau: Tableau) -> List[Tuple[int, ...]]:
    """Distinct fillings reachable by permuting entries within each row"""
    per_row = [list(distinct_permutations(row)) for row in tableau.rows()]
    return [sum(choice, ()) for choice in itertools.product(*per_row)]


def row_multiplicity(tableau: Tableau) -> int:
    """Row permutations fixing the filling: Π over rows of Π count(value)!"""
    return prod(factorial(v) for row in tableau.rows() for v in Counter(row).values())


@lru_cache(maxsize=None)
def signed_permutations(h: int) -> Tuple[Tuple[Tuple[int, ...], int], ...]:
    signed = []
    for perm in itertools.permutations(range(h)):
        inversions = sum(1 for a in range(h) for b in range(a + 1, h) if perm[a] > perm[b])
        signed.append((perm, -1 if inversions % 2 else 1))
    return tuple(signed)


@lru_cache(maxsize=None)
def _column_polynomial(alpha: Tuple[int, ...], beta: Tuple[int, ...], d: int) -> Tuple[Tuple[Tuple[int, ...], int], ...]:
    """h!·det X[alpha, beta] as (exponent tuple, coefficient) terms"""
    h = len(alpha)
    if len(set(alpha)) < h or len(set(beta)) < h:
        return ()
    terms: Counter = Counter()
    for perm, sign in signed_permutations(h):
        exponents = [0] * (d * d)
        for m in range(h):
            exponents[alpha[m] * d + beta[perm[m]]] += 1
        terms[tuple(exponents)] += sign
    scale = factorial(h)
    return tuple((k, scale * v) for k, v in terms.items() if v)


def _multiply(left: Dict[Tuple[int, ...], int], right) -> Dict[Tuple[int, ...], int]:
    product: Counter = Counter()
    for lk, lv in left.items():
        for rk, rv in right:
            product[tuple(a + b for a, b in zip(lk, rk))] += lv * rv
    return {k: v for k, v in product.items() if v}


@dataclass
class GramPolynomial:
    """G_{τ,γ} as exact integer coefficients over degree-n monomials"""
    shape: Partition
    tau: Tableau
    gamma: Tableau
    coeffs: Dict[OrbitKey, int]

    def evaluate(self, x) -> complex:
        total = 0
        for key, coef in self.coeffs.items():
            term = coef
            for a, b, v in key.nonzero():
                term *= x[a][b] ** v
            total += term
        return total


def gram_polynomial(tau: Tableau, gamma: Tableau) -> GramPolynomial:
    """
    Gram polynomial of two tableaux of the same shape

    Each column of height h contributes h!·det X[column of τ′, column of γ′];
    the products are summed over distinct row rearrangements τ′, γ′ and
    scaled by the row multiplicities of τ and γ.

    Args:
        tau: Semistandard tableau
        gamma: Semistandard tableau of the same shape and alphabet

    Returns:
        GramPolynomial whose coefficient at E equals u_τᵀ C_E u_γ
    """
    if tau.shape != gamma.shape:
        raise DomainError(f"Tableau shapes differ: {tau.shape} vs {gamma.shape}")
    if tau.d != gamma.d:
        raise DomainError(f"Tableau alphabets differ: {tau.d} vs {gamma.d}")
    d = tau.d
    columns = tau.shape.columns()
    zero = (0,) * (d * d)

    tau_cols = [[tuple(t[c] for c in col) for col in columns] for t in distinct_row_rearrangements(tau)]
    gamma_cols = [[tuple(g[c] for c in col) for col in columns] for g in distinct_row_rearrangements(gamma)]

    total: Counter = Counter()
    for a_cols in tau_cols:
        for b_cols in gamma_cols:
            poly = {zero: 1}
            for alpha, beta in zip(a_cols, b_cols):
                poly = _multiply(poly, _column_polynomial(alpha, beta, d))
                if not poly:
                    break
            for k, v in poly.items():
                total[k] += v

    scale = row_multiplicity(tau) * row_multiplicity(gamma)
    coeffs = {OrbitKey(k, d): scale * v for k, v in total.items() if v}
    return GramPolynomial(tau.shape, tau, gamma, coeffs)


def pairing_table(shape: Partition, d: int) -> PairingTable:
    """
    Pairings u_τᵀ C_E u_γ for every pair of tableaux of one shape

    Only τ ≤ γ is expanded; the lower triangle is filled from
    table[γ, τ, Eᵀ] = table[τ, γ, E].

    Returns:
        Dict (τ index, γ index, OrbitKey) -> nonzero integer
    """
    tableaux = semistandard_tableaux(shape, d)
    table: PairingTable = {}
    for ti, tau in enumerate(tableaux):
        for gi in range(ti, len(tableaux)):
            gram = gram_polynomial(tau, tableaux[gi])
            for key, coef in gram.coeffs.items():
                table[(ti, gi, key)] = coef
                if gi != ti:
                    table[(gi, ti, key.transpose())] = coef
    logger.debug(f"pairing table {shape} d={d}: {len(tableaux)} tableaux, {len(table)} entries")
    return table


def _pairing_table_job(args: Tuple[Tuple[int, ...], int]) -> PairingTable:
    parts, d = args
    return pairing_table(Partition(parts), d)


def build_pairing_tables(d: int, n: int, workers: int = 1) -> Dict[Partition, PairingTable]:
    """
    Pairing tables for every λ ⊢_d n, keyed in partition order

    Args:
        d: Alphabet size
        n: Level
        workers: Worker processes; 1 builds serially

    Returns:
        Ordered dict Partition -> pairing table
    """
    shapes = partitions(d, n)
    if workers <= 1 or len(shapes) <= 1:
        return {shape: pairing_table(shape, d) for shape in shapes}
    logger.info(f"Building {len(shapes)} pairing tables on {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        tables = list(pool.map(_pairing_table_job, [(shape.parts, d) for shape in shapes]))
    return dict(zip(shapes, tables))
