"""
Dense reference constructions for small levels

Everything here materializes full matrices on A ⊗ Ā ⊗ (B ⊗ B̄)^{⊗n} and is
guarded by explicit size limits. These builders certify the reduced
formulation; they are not meant to scale.
"""

import itertools
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from src.core.channels import ChoiMatrix, maximally_entangled, validate_choi
from src.core.errors import ChannelValidationError, DomainError, GuardError
from src.core.linalg import kron, partial_trace, permute_systems
from src.core.orbitbasis import InvariantOperator, OrbitKey, orbit_of_pair, representative
from src.core.symrep import (
    PairingTable,
    Partition,
    Tableau,
    distinct_permutations,
    semistandard_tableaux,
    signed_permutations,
)
from src.solvers.problem import BlockMap, BlockSDP

logger = logging.getLogger(__name__)

RECONSTRUCT_GUARD = 4096
DENSE_PROGRAM_GUARD = 64


# Permutations and orbit matrices ------------------------------------------

def permutation_operator(perm: Sequence[int], d_H: int, n: int) -> np.ndarray:
    """
    0/1 matrix sending h₁⊗…⊗hₙ to h_{π⁻¹(1)}⊗…⊗h_{π⁻¹(n)}

    Args:
        perm: π as a sequence, π[k] is the image of position k
        d_H: Local dimension
        n: Number of tensor factors
    """
    perm = list(perm)
    if sorted(perm) != list(range(n)):
        raise DomainError(f"{perm} is not a permutation of {n} positions")
    side = d_H ** n
    if side > RECONSTRUCT_GUARD:
        raise GuardError(f"permutation operator refused: side {side} exceeds guard {RECONSTRUCT_GUARD}")
    inverse = [0] * n
    for k, image in enumerate(perm):
        inverse[image] = k
    op = np.zeros((side, side))
    for src in itertools.product(range(d_H), repeat=n):
        dst = tuple(src[inverse[k]] for k in range(n))
        op[np.ravel_multi_index(dst, (d_H,) * n), np.ravel_multi_index(src, (d_H,) * n)] = 1.0
    return op


def dense_orbit_matrix(key: OrbitKey) -> np.ndarray:
    """0/1 incidence matrix C_E on (C^d)^{⊗n}"""
    d, n = key.d, key.n
    side = d ** n
    if side > RECONSTRUCT_GUARD:
        raise GuardError(f"orbit matrix refused: side {side} exceeds guard {RECONSTRUCT_GUARD}")
    a, b = representative(key)
    pairs = list(zip(a, b))
    out = np.zeros((side, side))
    if n == 0:
        out[0, 0] = 1.0
        return out
    for arrangement in distinct_permutations(pairs):
        row = np.ravel_multi_index(tuple(p[0] for p in arrangement), (d,) * n)
        col = np.ravel_multi_index(tuple(p[1] for p in arrangement), (d,) * n)
        out[row, col] = 1.0
    return out


def dense_reconstruct(op: InvariantOperator) -> np.ndarray:
    """Σ v(i,j,x,y,E)·|i><j| ⊗ |x><y| ⊗ C_E as a dense matrix"""
    if op.side > RECONSTRUCT_GUARD:
        raise GuardError(f"dense reconstruction refused: side {op.side} exceeds guard {RECONSTRUCT_GUARD}")
    inner = op.d_H ** op.n
    out = np.zeros((op.side, op.side), dtype=complex)
    cache: Dict[OrbitKey, np.ndarray] = {}
    for elem, value in op.coeffs.items():
        if value == 0:
            continue
        if elem.key not in cache:
            cache[elem.key] = dense_orbit_matrix(elem.key)
        r0 = (elem.i * op.d_Abar + elem.x) * inner
        c0 = (elem.j * op.d_Abar + elem.y) * inner
        out[r0:r0 + inner, c0:c0 + inner] += complex(value) * cache[elem.key]
    return out


# Explicit representative vectors -------------------------------------------

def _row_fillings(tau: Tableau, with_multiplicity: bool) -> List[Tuple[int, ...]]:
    if with_multiplicity:
        per_row = [list(itertools.permutations(row)) for row in tau.rows()]
    else:
        per_row = [list(distinct_permutations(row)) for row in tau.rows()]
    return [sum(choice, ()) for choice in itertools.product(*per_row)]


def _column_actions(shape: Partition) -> List[Tuple[Tuple[int, ...], int]]:
    """Column-stabilizer elements as (cell map, sign)"""
    columns = shape.columns()
    actions = []
    for choice in itertools.product(*[signed_permutations(len(col)) for col in columns]):
        cell_map = list(range(shape.n))
        sign = 1
        for col, (perm, s) in zip(columns, choice):
            for m, cell in enumerate(col):
                cell_map[cell] = col[perm[m]]
            sign *= s
        actions.append((tuple(cell_map), sign))
    return actions


def explicit_u_vector(tau: Tableau, d: int, with_multiplicity: bool = True) -> np.ndarray:
    """
    u_τ = Σ_{τ′∼τ} Σ_{c ∈ C_λ} sgn(c)·⊗_cells e_{τ′(c(cell))}

    Args:
        tau: Tableau, cells in row-concatenated order
        d: Local dimension
        with_multiplicity: Sum over all row permutations (True) or over
            distinct row rearrangements only (False)

    Returns:
        Integer vector of length d^n
    """
    n = tau.shape.n
    if d ** n > RECONSTRUCT_GUARD:
        raise GuardError(f"u vector refused: length {d ** n} exceeds guard {RECONSTRUCT_GUARD}")
    u = np.zeros(d ** n, dtype=np.int64)
    actions = _column_actions(tau.shape)
    for filling in _row_fillings(tau, with_multiplicity):
        for cell_map, sign in actions:
            index = tuple(filling[cell_map[k]] for k in range(n))
            u[np.ravel_multi_index(index, (d,) * n)] += sign
    return u


def brute_force_pairing(shape: Partition, tau: Tableau, gamma: Tableau, key: OrbitKey) -> int:
    """u_τᵀ C_E u_γ from explicit vectors; zero when E has the wrong degree"""
    if key.n != shape.n:
        return 0
    u = explicit_u_vector(tau, key.d)
    w = explicit_u_vector(gamma, key.d)
    return int(u @ dense_orbit_matrix(key).astype(np.int64) @ w)


def brute_force_pairing_table(shape: Partition, d: int, with_multiplicity: bool = True) -> PairingTable:
    """Every nonzero u_τᵀ C_E u_γ, accumulated over index pairs (a, b)"""
    n = shape.n
    tableaux = semistandard_tableaux(shape, d)
    vectors = [explicit_u_vector(t, d, with_multiplicity) for t in tableaux]
    support = [np.flatnonzero(v) for v in vectors]
    digits = np.stack(np.unravel_index(np.arange(d ** n), (d,) * n), axis=1)

    table: PairingTable = {}
    for ti, u in enumerate(vectors):
        for gi, w in enumerate(vectors):
            acc: Dict[OrbitKey, int] = {}
            for a in support[ti]:
                for b in support[gi]:
                    key = orbit_of_pair(digits[a], digits[b], d)
                    acc[key] = acc.get(key, 0) + int(u[a]) * int(w[b])
            for key, value in acc.items():
                if value:
                    table[(ti, gi, key)] = value
    return table


def direct_gram_polynomial(tau: Tableau, gamma: Tableau) -> Dict[OrbitKey, int]:
    """
    G_{τ,γ} by brute expansion over R_λ × C_λ on each side

    Σ_{r,c,r′,c′} sgn(c)sgn(c′) Π_cells x[τ(r(c(cell))), γ(r′(c′(cell)))]
    """
    if tau.shape != gamma.shape:
        raise DomainError(f"Tableau shapes differ: {tau.shape} vs {gamma.shape}")
    d, n = tau.d, tau.shape.n
    actions = _column_actions(tau.shape)
    left: Dict[Tuple[int, ...], int] = {}
    right: Dict[Tuple[int, ...], int] = {}
    for filling in _row_fillings(tau, True):
        for cell_map, sign in actions:
            word = tuple(filling[cell_map[k]] for k in range(n))
            left[word] = left.get(word, 0) + sign
    for filling in _row_fillings(gamma, True):
        for cell_map, sign in actions:
            word = tuple(filling[cell_map[k]] for k in range(n))
            right[word] = right.get(word, 0) + sign

    coeffs: Dict[OrbitKey, int] = {}
    for a, u in left.items():
        if not u:
            continue
        for b, w in right.items():
            if w:
                key = orbit_of_pair(a, b, d)
                coeffs[key] = coeffs.get(key, 0) + u * w
    return {k: v for k, v in coeffs.items() if v}


# Dense program --------------------------------------------------------------

def _system_dims(d_A: int, d_Abar: int, d_B: int, d_Bbar: int, n: int) -> Tuple[int, ...]:
    return (d_A, d_Abar) + (d_B, d_Bbar) * n


def _copy_order(perm: Sequence[int]) -> List[int]:
    order = [0, 1]
    for image in perm:
        order += [2 + 2 * image, 3 + 2 * image]
    return order


def symmetry_generators(n: int) -> List[Tuple[int, ...]]:
    """Adjacent transposition and full cycle of S_n, without duplicates or the identity"""
    identity = tuple(range(n))
    gens = []
    if n >= 2:
        gens.append((1, 0) + tuple(range(2, n)))
        gens.append(tuple(range(1, n)) + (0,))
    unique = []
    for g in gens:
        if g != identity and g not in unique:
            unique.append(g)
    return unique


def objective_operator(choi: ChoiMatrix, M: int, n: int) -> np.ndarray:
    """d_Ā·d_B·(J ⊗ Φ) in (A, Ā, B₁, B̄₁) order, padded with identity on later copies"""
    d_Abar, d_B = choi.d_A, choi.d_B
    joint = kron(choi.matrix, maximally_entangled(M))
    w = permute_systems(joint, (d_Abar, d_B, M, M), [2, 0, 1, 3])
    rest = np.eye((d_B * M) ** (n - 1))
    return d_Abar * d_B * kron(w, rest)


def evaluate_dense_objective(choi: ChoiMatrix, M: int, rho: np.ndarray) -> float:
    d_H = choi.d_B * M
    side, n = M * choi.d_A, 0
    while side < rho.shape[0]:
        side *= d_H
        n += 1
    if side != rho.shape[0] or n < 1:
        raise DomainError(f"Operator side {rho.shape[0]} is not M·d_in·d_Hⁿ for any level n >= 1")
    return float(np.real(np.trace(objective_operator(choi, M, n) @ rho)))


def dense_constraint_residuals(rho: np.ndarray, d_A: int, d_Abar: int, d_B: int, d_Bbar: int,
                               n: int) -> Dict[str, float]:
    """Largest violation of each constraint family of the level-n program"""
    dims = _system_dims(d_A, d_Abar, d_B, d_Bbar, n)
    k = len(dims)
    residuals = {'trace': abs(np.trace(rho) - 1.0)}

    sym = 0.0
    for perm in symmetry_generators(n):
        moved = permute_systems(rho, dims, _copy_order(perm))
        sym = max(sym, float(np.max(np.abs(moved - rho))))
    residuals['symmetry'] = sym

    marg_a = partial_trace(rho, dims, [1])
    rest = partial_trace(rho, dims, [0, 1])
    target_a = kron(np.eye(d_A) / d_A, rest)
    residuals['marginal_A'] = float(np.max(np.abs(marg_a - target_a)))

    marg_b = partial_trace(rho, dims, [k - 1])
    prefix = partial_trace(rho, dims, [k - 2, k - 1])
    target_b = kron(prefix, np.eye(d_B) / d_B)
    residuals['marginal_B'] = float(np.max(np.abs(marg_b - target_b)))
    residuals['hermitian'] = float(np.max(np.abs(rho - rho.conj().T)))
    return residuals


def _hermitian_basis(side: int) -> List[Tuple[str, int, int]]:
    """Real coordinates of a Hermitian matrix: diagonal, then (re, im) of the upper triangle"""
    coords = [('diag', k, k) for k in range(side)]
    for k in range(side):
        for l in range(k + 1, side):
            coords.append(('re', k, l))
            coords.append(('im', k, l))
    return coords


def _basis_matrix(kind: str, k: int, l: int, side: int) -> np.ndarray:
    m = np.zeros((side, side), dtype=complex)
    if kind == 'diag':
        m[k, k] = 1.0
    elif kind == 're':
        m[k, l] = m[l, k] = 1.0
    else:
        m[k, l] = 1j
        m[l, k] = -1j
    return m


def hermitian_from_parameters(theta: np.ndarray, side: int) -> np.ndarray:
    rho = np.zeros((side, side), dtype=complex)
    for p, (kind, k, l) in enumerate(_hermitian_basis(side)):
        if theta[p]:
            rho += theta[p] * _basis_matrix(kind, k, l, side)
    return rho


def parameters_from_hermitian(rho: np.ndarray) -> np.ndarray:
    side = rho.shape[0]
    coords = _hermitian_basis(side)
    theta = np.zeros(len(coords))
    for p, (kind, k, l) in enumerate(coords):
        if kind == 'diag':
            theta[p] = rho[k, k].real
        elif kind == 're':
            theta[p] = rho[k, l].real
        else:
            theta[p] = rho[k, l].imag
    return theta


def _constraint_maps(d_A: int, d_Abar: int, d_B: int, d_Bbar: int, n: int):
    dims = _system_dims(d_A, d_Abar, d_B, d_Bbar, n)
    k = len(dims)
    maps = []
    for perm in symmetry_generators(n):
        order = _copy_order(perm)
        maps.append((f'symmetry{perm}', lambda m, o=order: permute_systems(m, dims, o) - m))
    maps.append(('marginal_A', lambda m: partial_trace(m, dims, [1])
                 - kron(np.eye(d_A) / d_A, partial_trace(m, dims, [0, 1]))))
    maps.append(('marginal_B', lambda m: partial_trace(m, dims, [k - 1])
                 - kron(partial_trace(m, dims, [k - 2, k - 1]), np.eye(d_B) / d_B)))
    return maps


def _trace_against(w: np.ndarray, kind: str, k: int, l: int) -> float:
    """Re tr[w·B] for the Hermitian basis matrix B of one coordinate"""
    if kind == 'diag':
        return float(np.real(w[k, k]))
    if kind == 're':
        return float(np.real(w[l, k] + w[k, l]))
    return float(np.real(1j * w[l, k] - 1j * w[k, l]))


def _family_rows(f, target: Optional[np.ndarray], coords: List[Tuple[str, int, int]],
                 side: int) -> Tuple[List[sp.csr_matrix], List[np.ndarray]]:
    """Real and imaginary rows of f(ρ) = target, empty rows dropped"""
    r_idx, c_idx, re_vals, im_vals = [], [], [], []
    size = 0
    for p, (kind, k, l) in enumerate(coords):
        image = np.asarray(f(_basis_matrix(kind, k, l, side))).reshape(-1)
        size = image.size
        nz = np.flatnonzero(np.abs(image) > 1e-14)
        r_idx.extend(nz.tolist())
        c_idx.extend([p] * len(nz))
        re_vals.extend(image[nz].real.tolist())
        im_vals.extend(image[nz].imag.tolist())
    goal = np.zeros(size, dtype=complex) if target is None else np.asarray(target, dtype=complex).reshape(-1)
    parts, rhs = [], []
    for vals, goal_part in ((re_vals, goal.real), (im_vals, goal.imag)):
        family = sp.csr_matrix((vals, (r_idx, c_idx)), shape=(size, len(coords)))
        family.eliminate_zeros()
        nonempty = np.flatnonzero(np.diff(family.indptr))
        if np.any(np.abs(np.delete(goal_part, nonempty)) > 1e-12):
            raise DomainError("Constraint target is nonzero where the map vanishes identically")
        if len(nonempty):
            parts.append(family[nonempty])
            rhs.append(goal_part[nonempty])
    return parts, rhs


def hermitian_program(objective: np.ndarray, constraints: Sequence[Tuple[str, Callable, Optional[np.ndarray]]],
                      side: int, name: str, structure_key: Optional[str] = None) -> BlockSDP:
    """
    maximize Re tr[objective·ρ] over Hermitian ρ ⪰ 0 with linear constraints

    Args:
        objective: side x side Hermitian weight
        constraints: (label, f, target) with f linear; target None means zero
        side: Matrix side of ρ
        name: Instance name
        structure_key: Cache key for the constraint structure

    Returns:
        BlockSDP over the coordinates of hermitian_from_parameters, one
        realified block of side 2·side
    """
    coords = _hermitian_basis(side)
    num = len(coords)
    c = np.array([_trace_against(objective, kind, k, l) for kind, k, l in coords])

    families, rhs = [], []
    for label, f, target in constraints:
        parts, goals = _family_rows(f, target, coords, side)
        logger.debug(f"{name} constraint family {label}: {sum(p.shape[0] for p in parts)} real rows")
        families.extend(parts)
        rhs.extend(goals)
    if families:
        eq = sp.vstack(families).tocsr()
        eq_rhs = np.concatenate(rhs)
    else:
        eq = sp.csr_matrix((0, num))
        eq_rhs = np.zeros(0)

    big = 2 * side
    coefficient_rows, coefficient_cols, coefficient_vals = [], [], []
    for p, (kind, k, l) in enumerate(coords):
        if kind == 'diag':
            entries = [(k, k, 1.0), (side + k, side + k, 1.0)]
        elif kind == 're':
            entries = [(k, l, 1.0), (l, k, 1.0), (side + k, side + l, 1.0), (side + l, side + k, 1.0)]
        else:
            entries = [(k, side + l, -1.0), (l, side + k, 1.0), (side + k, l, 1.0), (side + l, k, -1.0)]
        for r, col, v in entries:
            coefficient_rows.append(r * big + col)
            coefficient_cols.append(p)
            coefficient_vals.append(v)
    coeffs = sp.csr_matrix((coefficient_vals, (coefficient_rows, coefficient_cols)), shape=(big * big, num))
    block = BlockMap(side=big, constant=np.zeros(big * big), coeffs=coeffs, label=name)

    return BlockSDP(
        num_vars=num,
        objective=c,
        eq_matrix=eq,
        eq_rhs=eq_rhs,
        blocks=[block],
        variable_labels=[f'{kind}[{k},{l}]' for kind, k, l in coords],
        structure_key=structure_key,
        name=name,
    )


def build_dense_program(choi: ChoiMatrix, M: int, n: int) -> BlockSDP:
    """
    Level-n program over a full Hermitian matrix ρ

    Constraints: trace one, invariance under the generators of S_n acting on
    the (B, B̄) copies, and both product-marginal conditions. One realified
    PSD block of side 2·d_A·d_Ā·d_Hⁿ.

    Args:
        choi: Normalized Choi matrix
        M: Code dimension
        n: Level

    Returns:
        BlockSDP in Hermitian coordinates (see hermitian_from_parameters)
    """
    report = validate_choi(choi)
    if not report.passed:
        raise ChannelValidationError('Choi matrix is not CPTP', report=report)
    if n < 1:
        raise DomainError(f"level must be >= 1, got {n}")
    d_A, d_Abar, d_B, d_Bbar = M, choi.d_A, choi.d_B, M
    side = d_A * d_Abar * (d_B * d_Bbar) ** n
    if side > DENSE_PROGRAM_GUARD:
        raise GuardError(f"dense program refused: side {side} exceeds guard {DENSE_PROGRAM_GUARD}")

    constraints = [('trace', lambda m: np.trace(m).reshape(1, 1), np.ones((1, 1)))]
    constraints += [(label, f, None) for label, f in _constraint_maps(d_A, d_Abar, d_B, d_Bbar, n)]
    program = hermitian_program(
        objective_operator(choi, M, n), constraints, side,
        name=f'dense_n{n}',
        structure_key=f'dense:dA={d_A}:dAbar={d_Abar}:dB={d_B}:dBbar={d_Bbar}:n={n}',
    )
    logger.info(f"Dense program level {n}: side {side}, {program.num_vars} parameters, {program.num_rows} rows")
    return program


def dense_start_point(side: int) -> np.ndarray:
    """Hermitian coordinates of I/side"""
    return parameters_from_hermitian(np.eye(side) / side)
