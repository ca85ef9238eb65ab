"""
Canonical orbit basis of the permutation-invariant operator algebra

An orbit of index pairs (a, b) ∈ [d]^n × [d]^n under simultaneous
permutation of the n positions is labelled by its count matrix E, where
E[a, b] counts positions holding the pair (a, b). C_E is the 0/1 incidence
matrix of the orbit; the C_E form a basis of the invariant algebra.

A symbol c of H = B ⊗ B̄ is the pair (c_B, c_B̄) with c = c_B * d_B̄ + c_B̄.
"""

import itertools
import logging
from dataclasses import dataclass, field
from math import comb, factorial, prod
from typing import Dict, Iterator, List, NamedTuple, Sequence, Tuple

import numpy as np

from src.core.errors import DomainError

logger = logging.getLogger(__name__)


class OrbitKey(NamedTuple):
    """d x d count matrix, flattened row-major; doubles as a monomial exponent key"""
    counts: Tuple[int, ...]
    d: int

    @classmethod
    def from_matrix(cls, matrix) -> 'OrbitKey':
        matrix = np.asarray(matrix, dtype=int)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError(f"Orbit key matrix must be square, got shape {matrix.shape}")
        if (matrix < 0).any():
            raise DomainError("Orbit key entries must be nonnegative")
        return cls(tuple(int(v) for v in matrix.reshape(-1)), matrix.shape[0])

    @classmethod
    def unit(cls, a: int, b: int, d: int, n: int = 1) -> 'OrbitKey':
        counts = [0] * (d * d)
        counts[a * d + b] = n
        return cls(tuple(counts), d)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.counts, dtype=int).reshape(self.d, self.d)

    def entry(self, a: int, b: int) -> int:
        return self.counts[a * self.d + b]

    def shifted(self, a: int, b: int, delta: int) -> 'OrbitKey':
        counts = list(self.counts)
        counts[a * self.d + b] += delta
        if counts[a * self.d + b] < 0:
            raise DomainError(f"Orbit key entry ({a}, {b}) would become negative")
        return OrbitKey(tuple(counts), self.d)

    def transpose(self) -> 'OrbitKey':
        d = self.d
        return OrbitKey(tuple(self.counts[b * d + a] for a in range(d) for b in range(d)), d)

    @property
    def is_diagonal(self) -> bool:
        return self.off_diagonal_mass == 0

    @property
    def off_diagonal_mass(self) -> int:
        d = self.d
        return sum(self.counts[a * d + b] for a in range(d) for b in range(d) if a != b)

    def nonzero(self) -> Iterator[Tuple[int, int, int]]:
        d = self.d
        for idx, v in enumerate(self.counts):
            if v:
                yield idx // d, idx % d, v


class BasisElement(NamedTuple):
    """|i><j| ⊗ |x><y| ⊗ C_key on A ⊗ Ā ⊗ H^{⊗n}"""
    i: int
    j: int
    x: int
    y: int
    key: OrbitKey

    def adjoint(self) -> 'BasisElement':
        return BasisElement(self.j, self.i, self.y, self.x, self.key.transpose())

    def sort_key(self) -> Tuple:
        return (self.i, self.j, self.x, self.y, self.key.counts)


@dataclass
class InvariantOperator:
    """Element of the invariant algebra given by canonical-basis coefficients"""
    d_A: int
    d_Abar: int
    d_H: int
    n: int
    coeffs: Dict[BasisElement, complex] = field(default_factory=dict)

    @property
    def side(self) -> int:
        return self.d_A * self.d_Abar * self.d_H ** self.n

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        for elem, value in self.coeffs.items():
            partner = self.coeffs.get(elem.adjoint(), 0.0)
            if abs(partner - np.conj(value)) > tol:
                return False
        return True

    def element(self, i: int, j: int, x: int, y: int, key: OrbitKey) -> complex:
        return self.coeffs.get(BasisElement(i, j, x, y, key), 0.0)


def enumerate_orbits(d_H: int, n: int) -> List[OrbitKey]:
    """
    All orbit keys of degree n, in lexicographic order of the flattened counts

    Args:
        d_H: Alphabet size of each copy
        n: Number of copies

    Returns:
        List of C(n + d_H² - 1, d_H² - 1) keys
    """
    if d_H < 1 or n < 0:
        raise DomainError(f"enumerate_orbits needs d_H >= 1 and n >= 0, got {d_H}, {n}")
    slots = d_H * d_H
    keys = []

    def _fill(prefix: List[int], remaining: int) -> None:
        if len(prefix) == slots - 1:
            keys.append(OrbitKey(tuple(prefix + [remaining]), d_H))
            return
        for v in range(remaining + 1):
            prefix.append(v)
            _fill(prefix, remaining - v)
            prefix.pop()

    _fill([], n)
    return keys


def orbit_count(d_H: int, n: int) -> int:
    slots = d_H * d_H
    return comb(n + slots - 1, slots - 1)


def orbit_size(key: OrbitKey) -> int:
    """Number of index pairs in the orbit: n! / Π E[a, b]!"""
    return factorial(key.n) // prod(factorial(v) for v in key.counts)


def representative(key: OrbitKey) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Canonical (a, b) realizing key, positions filled in lexicographic order of pairs"""
    a, b = [], []
    for pa, pb, v in key.nonzero():
        a.extend([pa] * v)
        b.extend([pb] * v)
    return tuple(a), tuple(b)


def orbit_of_pair(a: Sequence[int], b: Sequence[int], d: int) -> OrbitKey:
    if len(a) != len(b):
        raise DomainError(f"Index sequences differ in length: {len(a)} vs {len(b)}")
    counts = [0] * (d * d)
    for pa, pb in zip(a, b):
        counts[pa * d + pb] += 1
    return OrbitKey(tuple(counts), d)


def adjoint_key(key: OrbitKey) -> OrbitKey:
    return key.transpose()


def trace_coefficient(elem: BasisElement) -> int:
    """tr Z(i, j, x, y, E)"""
    if elem.i == elem.j and elem.x == elem.y and elem.key.is_diagonal:
        return orbit_size(elem.key)
    return 0


def ptrace_last_outputbar(key: OrbitKey, d_B: int, d_Bbar: int) -> List[Tuple[OrbitKey, int, int]]:
    """
    Expand tr_{B̄_n}(C_E) in the basis {K_{E'} ⊗ |p><q|}

    Args:
        key: Orbit key over H = B ⊗ B̄
        d_B: Output dimension
        d_Bbar: Dimension of the traced factor

    Returns:
        Terms (E', p, q), each with coefficient 1
    """
    if key.n < 1:
        raise DomainError("Cannot trace a copy out of a degree-0 orbit")
    if d_B * d_Bbar != key.d:
        raise DomainError(f"d_B * d_Bbar = {d_B * d_Bbar} does not match alphabet {key.d}")
    terms = []
    for c, e, _ in key.nonzero():
        if c % d_Bbar == e % d_Bbar:
            terms.append((key.shifted(c, e, -1), c // d_Bbar, e // d_Bbar))
    return terms


def ptrace_last_output_pair(key: OrbitKey) -> List[OrbitKey]:
    """Expand tr_{B_n B̄_n}(C_E): one degree-(n-1) key per occupied diagonal symbol"""
    if key.n < 1:
        raise DomainError("Cannot trace a copy out of a degree-0 orbit")
    return [key.shifted(c, c, -1) for c, e, _ in key.nonzero() if c == e]


def first_copy_reduction(key: OrbitKey) -> Dict[Tuple[int, int], int]:
    """
    tr over copies 2..n of C_E, as counts N(p, q) of the matrix units |p><q|

    N(p, q) counts orbit members with a_1 = p, b_1 = q and a_v = b_v for
    every later position. Diagonal orbits contribute on the diagonal.

    Args:
        key: Orbit key of degree n >= 1

    Returns:
        Dict (p, q) -> N(p, q), zero entries omitted
    """
    n = key.n
    if n < 1:
        raise DomainError("first_copy_reduction needs n >= 1")
    mass = key.off_diagonal_mass
    if mass >= 2:
        return {}
    rest = factorial(n - 1)
    if mass == 1:
        (p, q, _), = [(a, b, v) for a, b, v in key.nonzero() if a != b]
        denom = prod(factorial(v) for a, b, v in key.nonzero() if (a, b) != (p, q))
        return {(p, q): rest // denom}
    denom = prod(factorial(v) for v in key.counts)
    return {(p, p): v * rest // denom for p, q, v in key.nonzero()}


def basis_elements(d_A: int, d_Abar: int, keys: Sequence[OrbitKey]) -> List[BasisElement]:
    return [
        BasisElement(i, j, x, y, key)
        for i, j, x, y in itertools.product(range(d_A), range(d_A), range(d_Abar), range(d_Abar))
        for key in keys
    ]
