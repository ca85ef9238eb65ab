"""
Dense complex linear algebra shared by every module

Operators are numpy arrays. Tensor factors always follow an explicit
SystemShape; nothing here reorders subsystems implicitly.
"""

import string
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from src.core.errors import ContractError, ShapeError

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class SystemShape:
    """Ordered subsystem dimensions of a tensor-product space"""
    dims: Tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ShapeError(f"Subsystem dimensions must be >= 1, got {self.dims}")
        object.__setattr__(self, 'dims', dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self) -> int:
        return len(self.dims)

    def without(self, traced: Iterable[int]) -> 'SystemShape':
        traced = set(traced)
        kept = [d for k, d in enumerate(self.dims) if k not in traced]
        return SystemShape(tuple(kept) or (1,))


def as_shape(shape) -> SystemShape:
    return shape if isinstance(shape, SystemShape) else SystemShape(tuple(shape))


def _check_square(m: np.ndarray, side: int) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"Expected a square matrix, got shape {m.shape}")
    if m.shape[0] != side:
        raise ShapeError(f"Matrix side {m.shape[0]} does not match subsystem product {side}")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product a ⊗ b"""
    return np.kron(np.asarray(a), np.asarray(b))


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    result = np.ones((1, 1), dtype=complex)
    for factor in factors:
        result = np.kron(result, factor)
    return result


def partial_trace(m: np.ndarray, shape, traced: Iterable[int]) -> np.ndarray:
    """
    Trace out a set of subsystems

    Args:
        m: Square operator on the space described by shape
        shape: SystemShape (or sequence of dims) of m
        traced: Indices of the subsystems to trace out

    Returns:
        Marginal on the kept subsystems, in their original order
    """
    shape = as_shape(shape)
    m = np.asarray(m)
    _check_square(m, shape.total)
    traced = sorted(set(int(k) for k in traced))
    k = len(shape)
    if any(t < 0 or t >= k for t in traced):
        raise ShapeError(f"Traced subsystems {traced} out of range for {k} systems")

    letters = string.ascii_letters
    if 2 * k > len(letters):
        raise ShapeError(f"Too many subsystems for partial_trace: {k}")
    rows = [letters[i] for i in range(k)]
    cols = [letters[k + i] for i in range(k)]
    for t in traced:
        cols[t] = rows[t]
    kept = [i for i in range(k) if i not in traced]
    out = ''.join(rows[i] for i in kept) + ''.join(cols[i] for i in kept)
    spec = ''.join(rows) + ''.join(cols) + '->' + out

    tensor = m.reshape(shape.dims * 2)
    reduced = np.einsum(spec, tensor)
    side = int(np.prod([shape.dims[i] for i in kept])) if kept else 1
    return np.asarray(reduced).reshape(side, side)


def permute_systems(m: np.ndarray, shape, order: Sequence[int]) -> np.ndarray:
    """
    Reorder the tensor factors of an operator

    Args:
        m: Operator on shape.dims in their given order
        shape: SystemShape of m
        order: New position -> old subsystem index; result lives on
            [shape.dims[o] for o in order]

    Returns:
        Operator with permuted subsystems
    """
    shape = as_shape(shape)
    m = np.asarray(m)
    _check_square(m, shape.total)
    order = list(order)
    k = len(shape)
    if sorted(order) != list(range(k)):
        raise ShapeError(f"order {order} is not a permutation of {k} systems")
    tensor = m.reshape(shape.dims * 2)
    tensor = tensor.transpose(order + [k + o for o in order])
    return tensor.reshape(shape.total, shape.total)


def vec(m: np.ndarray) -> np.ndarray:
    """Row-major vectorization: vec(|i><j|) = |i>|j>"""
    return np.asarray(m).reshape(-1)


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.linalg.norm(m, 2))) if m.size else 1.0
    return float(np.max(np.abs(m - m.conj().T), initial=0.0)) <= tol * scale


def hermitian_part(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    return 0.5 * (m + m.conj().T)


def _require_hermitian(m: np.ndarray, tol: float) -> np.ndarray:
    m = np.asarray(m)
    if not is_hermitian(m, tol):
        raise ContractError("Matrix is not Hermitian within tolerance")
    return m


def min_eigenvalue(m: np.ndarray, tol: float = 1e-10) -> float:
    """
    Smallest eigenvalue of a Hermitian matrix

    Args:
        m: Hermitian matrix
        tol: Hermiticity tolerance relative to the spectral norm

    Returns:
        Minimum eigenvalue
    """
    m = _require_hermitian(m, tol)
    if m.size == 0:
        return float('inf')
    return float(np.linalg.eigvalsh(hermitian_part(m))[0])


def realify(h: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """
    Real symmetric embedding [[Re h, -Im h], [Im h, Re h]] of a Hermitian matrix

    Every eigenvalue of h appears twice in the result, so h ⪰ 0 iff the
    result is ⪰ 0.
    """
    h = _require_hermitian(h, tol)
    re, im = np.real(h), np.imag(h)
    return np.block([[re, -im], [im, re]])


def unrealify(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] % 2:
        raise ShapeError(f"Realified matrix must be square with even side, got {r.shape}")
    s = r.shape[0] // 2
    return r[:s, :s] + 1j * r[s:, :s]


def trace_norm(m: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(np.asarray(m), compute_uv=False)))
