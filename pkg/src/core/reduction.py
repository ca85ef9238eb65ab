"""
Symmetry-reduced formulation of the level-n fidelity program

The variables are the canonical-basis coefficients v(i, j, x, y, E) of a
permutation-invariant operator on A ⊗ Ā ⊗ (B ⊗ B̄)^{⊗n}, system order
(A, Ā, B₁, B̄₁, ..., Bₙ, B̄ₙ) with d_A = d_B̄ = M. Equalities are stated on
coefficients; positivity is stated per partition λ through the pairing
tables of the symmetric group.
"""

import itertools
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from src.core.channels import ChoiMatrix, maximally_entangled, validate_choi
from src.core.errors import ChannelValidationError, ContractError, DomainError
from src.core.linalg import kron, permute_systems
from src.core.orbitbasis import (
    BasisElement,
    InvariantOperator,
    basis_elements,
    enumerate_orbits,
    first_copy_reduction,
    orbit_count,
    orbit_size,
)
from src.core.symrep import PairingTable, Partition, build_pairing_tables, semistandard_tableaux
from src.solvers.problem import BlockMap, BlockSDP

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dimensions:
    """Subsystem dimensions of one hierarchy level"""
    d_A: int
    d_Abar: int
    d_B: int
    d_Bbar: int
    n: int

    @classmethod
    def for_channel(cls, choi: ChoiMatrix, M: int, n: int) -> 'Dimensions':
        return cls(d_A=M, d_Abar=choi.d_A, d_B=choi.d_B, d_Bbar=M, n=n)

    @property
    def d_H(self) -> int:
        return self.d_B * self.d_Bbar

    @property
    def side(self) -> int:
        return self.d_A * self.d_Abar * self.d_H ** self.n


@dataclass
class EqualityRow:
    """Σ coeffs[v]·v = rhs with exact rational coefficients"""
    coeffs: Dict[BasisElement, Fraction]
    rhs: Fraction = Fraction(0)
    label: str = ''

    def evaluate(self, assignment: Mapping[BasisElement, Any]):
        return sum((c * assignment.get(e, 0) for e, c in self.coeffs.items()), Fraction(0)) - self.rhs


@dataclass
class PsdBlock:
    """Affine block of one partition; entry (r, c) is Σ coef·v over its elements"""
    shape: Partition
    num_tableaux: int
    d_A: int
    d_Abar: int
    entries: Dict[Tuple[int, int], Dict[BasisElement, int]] = field(default_factory=dict)

    @property
    def side(self) -> int:
        return self.d_A * self.d_Abar * self.num_tableaux

    def row_index(self, i: int, x: int, t: int) -> int:
        return (i * self.d_Abar + x) * self.num_tableaux + t

    def evaluate(self, assignment: Mapping[BasisElement, complex]) -> np.ndarray:
        block = np.zeros((self.side, self.side), dtype=complex)
        for (r, c), terms in self.entries.items():
            block[r, c] = sum(coef * complex(assignment.get(e, 0)) for e, coef in terms.items())
        return block


def objective_vector(choi: ChoiMatrix, M: int, n: int) -> Dict[BasisElement, complex]:
    """
    Objective coefficients d_Ā·d_B·tr[(J ⊗ Φ) tr_{copies 2..n} Z(i, j, x, y, E)]

    J ⊗ Φ lives on (Ā, B₁, A, B̄₁) and is permuted once into (A, Ā, B₁, B̄₁).
    Coefficients of adjoint elements are complex conjugates, so the
    objective is real on Hermitian assignments.

    Args:
        choi: Normalized Choi matrix on Ā ⊗ B
        M: Code dimension d_A = d_B̄
        n: Level

    Returns:
        Dict BasisElement -> coefficient; orbits with off-diagonal mass >= 2 are absent
    """
    if n < 1:
        raise DomainError(f"level must be >= 1, got {n}")
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    if choi.matrix.shape != (choi.side, choi.side):
        raise DomainError(f"Choi matrix shape {choi.matrix.shape} does not match dims {choi.d_A}x{choi.d_B}")
    d_Abar, d_B = choi.d_A, choi.d_B
    d_H = d_B * M
    joint = kron(choi.matrix, maximally_entangled(M))
    w = permute_systems(joint, (d_Abar, d_B, M, M), [2, 0, 1, 3])
    scale = d_Abar * d_B

    coeffs = {}
    for key in enumerate_orbits(d_H, n):
        counts = first_copy_reduction(key)
        if not counts:
            continue
        for i, j, x, y in itertools.product(range(M), range(M), range(d_Abar), range(d_Abar)):
            row0 = (j * d_Abar + y) * d_H
            col0 = (i * d_Abar + x) * d_H
            total = sum(count * w[row0 + q, col0 + p] for (p, q), count in counts.items())
            if total != 0:
                coeffs[BasisElement(i, j, x, y, key)] = complex(scale * total)
    return coeffs


def normalization_row(d_A: int, d_Abar: int, d_H: int, n: int) -> EqualityRow:
    """tr ρ = 1"""
    coeffs = {}
    for key in enumerate_orbits(d_H, n):
        if not key.is_diagonal:
            continue
        size = Fraction(orbit_size(key))
        for i in range(d_A):
            for x in range(d_Abar):
                coeffs[BasisElement(i, i, x, x, key)] = size
    return EqualityRow(coeffs=coeffs, rhs=Fraction(1), label='trace')


def marginal_A_rows(d_A: int, d_Abar: int, d_H: int, n: int) -> List[EqualityRow]:
    """
    tr_Ā ρ = I_A/d_A ⊗ tr_{AĀ} ρ, one row per (i, j, E)

    Returns:
        Rows Σ_x v(i,j,x,x,E) − δ_ij/d_A·Σ_{k,x} v(k,k,x,x,E) = 0
    """
    share = Fraction(1, d_A)
    rows = []
    for key in enumerate_orbits(d_H, n):
        for i, j in itertools.product(range(d_A), range(d_A)):
            coeffs: Dict[BasisElement, Fraction] = {}
            for x in range(d_Abar):
                elem = BasisElement(i, j, x, x, key)
                coeffs[elem] = coeffs.get(elem, Fraction(0)) + 1
            if i == j:
                for k, x in itertools.product(range(d_A), range(d_Abar)):
                    elem = BasisElement(k, k, x, x, key)
                    coeffs[elem] = coeffs.get(elem, Fraction(0)) - share
            coeffs = {e: c for e, c in coeffs.items() if c != 0}
            if coeffs:
                rows.append(EqualityRow(coeffs=coeffs, label=f'marginal_A[i={i},j={j},E={list(key.counts)}]'))
    return rows


def marginal_Bn_rows(d_A: int, d_Abar: int, d_B: int, d_Bbar: int, n: int) -> List[EqualityRow]:
    """
    tr_{B̄ₙ} ρ = tr_{BₙB̄ₙ} ρ ⊗ I_{Bₙ}/d_B

    One row per (i, j, x, y), degree-(n−1) key E′ and output pair (p, q):
    Σ_c̄ v(E′ + e[(p,c̄),(q,c̄)]) − δ_pq/d_B·Σ_c v(E′ + e[c,c]) = 0.
    """
    if n < 1:
        raise DomainError(f"level must be >= 1, got {n}")
    d_H = d_B * d_Bbar
    share = Fraction(1, d_B)
    rows = []
    for reduced in enumerate_orbits(d_H, n - 1):
        for i, j, x, y in itertools.product(range(d_A), range(d_A), range(d_Abar), range(d_Abar)):
            for p, q in itertools.product(range(d_B), range(d_B)):
                coeffs: Dict[BasisElement, Fraction] = {}
                for cbar in range(d_Bbar):
                    key = reduced.shifted(p * d_Bbar + cbar, q * d_Bbar + cbar, 1)
                    elem = BasisElement(i, j, x, y, key)
                    coeffs[elem] = coeffs.get(elem, Fraction(0)) + 1
                if p == q:
                    for c in range(d_H):
                        elem = BasisElement(i, j, x, y, reduced.shifted(c, c, 1))
                        coeffs[elem] = coeffs.get(elem, Fraction(0)) - share
                coeffs = {e: v for e, v in coeffs.items() if v != 0}
                if coeffs:
                    rows.append(EqualityRow(
                        coeffs=coeffs,
                        label=f'marginal_B[i={i},j={j},x={x},y={y},E={list(reduced.counts)},p={p},q={q}]',
                    ))
    return rows


def psd_block_map(shape: Partition, pairing: PairingTable, d_A: int, d_Abar: int,
                  num_tableaux: int) -> PsdBlock:
    """
    Block of partition λ: entry ((i,x,τ),(j,y,γ)) = Σ_E pairing[τ,γ,E]·v(i,j,x,y,E)

    Rows are ordered by (i, x, τ) with τ fastest.
    """
    block = PsdBlock(shape=shape, num_tableaux=num_tableaux, d_A=d_A, d_Abar=d_Abar)
    pairs = list(itertools.product(range(d_A), range(d_Abar)))
    for (ti, gi, key), coef in pairing.items():
        for i, x in pairs:
            r = block.row_index(i, x, ti)
            for j, y in pairs:
                c = block.row_index(j, y, gi)
                block.entries.setdefault((r, c), {})[BasisElement(i, j, x, y, key)] = coef
    return block


def strictly_feasible_point(d_A: int, d_Abar: int, d_H: int, n: int) -> Dict[BasisElement, Fraction]:
    """Coefficients of the maximally mixed state I/(d_A·d_Ā·d_Hⁿ)"""
    weight = Fraction(1, d_A * d_Abar * d_H ** n)
    point = {}
    for key in enumerate_orbits(d_H, n):
        if key.is_diagonal:
            for i, x in itertools.product(range(d_A), range(d_Abar)):
                point[BasisElement(i, i, x, x, key)] = weight
    return point


class HermitianParametrization:
    """
    Real parameters of a Hermitian coefficient assignment

    A self-adjoint element v(i,i,x,x,E=Eᵀ) is one real parameter. An adjoint
    pair {k, k*} shares (re, im) stored on the lexicographically smaller
    element: v_k = re + i·im and v_{k*} = re − i·im.
    """

    def __init__(self, elements: Sequence[BasisElement]):
        self.elements = list(elements)
        members = set(self.elements)
        self._terms: Dict[BasisElement, Tuple[Tuple[int, complex], ...]] = {}
        self._canonical: List[Tuple[BasisElement, int, bool]] = []
        self.labels: List[str] = []

        for elem in self.elements:
            if elem in self._terms:
                continue
            partner = elem.adjoint()
            if partner not in members:
                raise ContractError(f"Adjoint of {_describe(elem)} is missing from the variable set")
            p = len(self.labels)
            if partner == elem:
                self.labels.append(f'v{_describe(elem)}')
                self._terms[elem] = ((p, 1.0),)
                self._canonical.append((elem, p, False))
            else:
                canonical, other = sorted((elem, partner), key=BasisElement.sort_key)
                self.labels.extend([f're v{_describe(canonical)}', f'im v{_describe(canonical)}'])
                self._terms[canonical] = ((p, 1.0), (p + 1, 1j))
                self._terms[other] = ((p, 1.0), (p + 1, -1j))
                self._canonical.append((canonical, p, True))

    @property
    def num_params(self) -> int:
        return len(self.labels)

    def terms(self, elem: BasisElement) -> Tuple[Tuple[int, complex], ...]:
        return self._terms[elem]

    def linear_form(self, coeffs: Mapping[BasisElement, Any]) -> Dict[int, complex]:
        """Rewrite Σ a_k v_k as Σ h_p θ_p"""
        form: Dict[int, complex] = {}
        for elem, a in coeffs.items():
            a = complex(a)
            for p, factor in self._terms[elem]:
                form[p] = form.get(p, 0j) + a * factor
        return form

    def to_parameters(self, assignment: Mapping[BasisElement, Any]) -> np.ndarray:
        theta = np.zeros(self.num_params)
        for elem, p, paired in self._canonical:
            value = complex(assignment.get(elem, 0))
            theta[p] = value.real
            if paired:
                theta[p + 1] = value.imag
        return theta

    def to_assignment(self, theta: np.ndarray) -> Dict[BasisElement, complex]:
        values = {}
        for elem in self.elements:
            values[elem] = sum(theta[p] * factor for p, factor in self._terms[elem])
        return values


def _describe(elem: BasisElement) -> str:
    return f'({elem.i},{elem.j},{elem.x},{elem.y},{list(elem.key.counts)})'


@dataclass
class ReducedSDP:
    """Assembled reduced program in canonical-basis coefficients"""
    dims: Dimensions
    variables: List[BasisElement]
    objective: Dict[BasisElement, complex]
    equalities: List[EqualityRow]
    blocks: List[PsdBlock]
    parametrization: HermitianParametrization
    stats: Dict[str, Any] = field(default_factory=dict)

    def start_point(self) -> Dict[BasisElement, Fraction]:
        d = self.dims
        return strictly_feasible_point(d.d_A, d.d_Abar, d.d_H, d.n)

    def objective_value(self, assignment: Mapping[BasisElement, Any]) -> float:
        total = sum(c * complex(assignment.get(e, 0)) for e, c in self.objective.items())
        return float(np.real(total))

    @property
    def structure_key(self) -> str:
        d = self.dims
        return f'reduced:dA={d.d_A}:dAbar={d.d_Abar}:dB={d.d_B}:dBbar={d.d_Bbar}:n={d.n}'


def assemble(choi: ChoiMatrix, M: int, n: int, workers: int = 1) -> ReducedSDP:
    """
    Assemble the reduced level-n program for a channel

    Args:
        choi: Normalized Choi matrix of the channel
        M: Code dimension d_A = d_B̄
        n: Level (>= 1)
        workers: Processes used for the pairing tables

    Returns:
        ReducedSDP with assembly statistics in .stats
    """
    report = validate_choi(choi)
    if not report.passed:
        raise ChannelValidationError('Choi matrix is not CPTP', report=report)
    if n < 1:
        raise DomainError(f"level must be >= 1, got {n}")
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")

    start = time.perf_counter()
    dims = Dimensions.for_channel(choi, M, n)
    keys = enumerate_orbits(dims.d_H, n)
    variables = basis_elements(dims.d_A, dims.d_Abar, keys)

    objective = objective_vector(choi, M, n)
    equalities = [normalization_row(dims.d_A, dims.d_Abar, dims.d_H, n)]
    equalities += marginal_A_rows(dims.d_A, dims.d_Abar, dims.d_H, n)
    equalities += marginal_Bn_rows(dims.d_A, dims.d_Abar, dims.d_B, dims.d_Bbar, n)

    tables = build_pairing_tables(dims.d_H, n, workers=workers)
    blocks = []
    for shape, table in tables.items():
        count = len(semistandard_tableaux(shape, dims.d_H))
        if count:
            blocks.append(psd_block_map(shape, table, dims.d_A, dims.d_Abar, count))

    parametrization = HermitianParametrization(variables)
    elapsed = (time.perf_counter() - start) * 1000
    stats = {
        'n': n,
        'M': M,
        'd_H': dims.d_H,
        'orbits': orbit_count(dims.d_H, n),
        'complex_variables': len(variables),
        'real_parameters': parametrization.num_params,
        'equality_rows': len(equalities),
        'partitions': [str(shape) for shape in tables],
        'block_sides': [b.side for b in blocks],
        'assembly_ms': round(elapsed, 3),
    }
    logger.info(f"Assembled level {n}: {stats['orbits']} orbits, {stats['complex_variables']} variables, "
                f"{stats['equality_rows']} rows, blocks {stats['block_sides']} ({elapsed:.1f} ms)")
    return ReducedSDP(dims=dims, variables=variables, objective=objective, equalities=equalities,
                      blocks=blocks, parametrization=parametrization, stats=stats)


def _row_key(row: Dict[int, float]) -> Tuple:
    items = sorted(row.items())
    sign = 1.0 if items[0][1] > 0 else -1.0
    return tuple((p, round(sign * v, 12)) for p, v in items)


def to_block_sdp(reduced: ReducedSDP) -> BlockSDP:
    """
    Realify a reduced program into a BlockSDP over the Hermitian parameters

    Complex equality rows split into real and imaginary rows; exact duplicates
    (up to sign) are dropped. Each complex block H becomes [[Re H, −Im H], [Im H, Re H]].
    """
    param = reduced.parametrization
    num = param.num_params

    c = np.zeros(num)
    for p, h in param.linear_form(reduced.objective).items():
        c[p] = h.real

    eq_rows, eq_cols, eq_vals, rhs = [], [], [], []
    seen = set()
    for row in reduced.equalities:
        form = param.linear_form(row.coeffs)
        target = complex(row.rhs)
        for part, value in ((lambda z: z.real, target.real), (lambda z: z.imag, target.imag)):
            real_row = {p: part(h) for p, h in form.items() if abs(part(h)) > 1e-15}
            if not real_row:
                if value != 0:
                    raise ContractError(f"Equality row '{row.label}' is inconsistent")
                continue
            key = _row_key(real_row)
            if value == 0 and key in seen:
                continue
            seen.add(key)
            r = len(rhs)
            for p, v in real_row.items():
                eq_rows.append(r)
                eq_cols.append(p)
                eq_vals.append(v)
            rhs.append(value)
    eq_matrix = sp.csr_matrix((eq_vals, (eq_rows, eq_cols)), shape=(len(rhs), num))

    blocks = []
    for block in reduced.blocks:
        s = block.side
        big = 2 * s
        rows, cols, vals = [], [], []
        for (r, col), terms in block.entries.items():
            for p, h in param.linear_form(terms).items():
                if h.real:
                    rows += [r * big + col, (s + r) * big + s + col]
                    cols += [p, p]
                    vals += [h.real, h.real]
                if h.imag:
                    rows += [r * big + s + col, (s + r) * big + col]
                    cols += [p, p]
                    vals += [-h.imag, h.imag]
        coeffs = sp.csr_matrix((vals, (rows, cols)), shape=(big * big, num))
        blocks.append(BlockMap(side=big, constant=np.zeros(big * big), coeffs=coeffs,
                               label=f'lambda={block.shape}'))

    logger.debug(f"Realified program: {num} parameters, {len(rhs)} real rows, sides {[b.side for b in blocks]}")
    return BlockSDP(
        num_vars=num,
        objective=c,
        eq_matrix=eq_matrix,
        eq_rhs=np.array(rhs, dtype=float),
        blocks=blocks,
        variable_labels=list(param.labels),
        structure_key=reduced.structure_key,
        name=f'reduced_n{reduced.dims.n}',
    )


def assignment_from_parameters(reduced: ReducedSDP, theta: np.ndarray) -> InvariantOperator:
    d = reduced.dims
    coeffs = {e: v for e, v in reduced.parametrization.to_assignment(theta).items() if v != 0}
    return InvariantOperator(d_A=d.d_A, d_Abar=d.d_Abar, d_H=d.d_H, n=d.n, coeffs=coeffs)


def parameters_from_operator(reduced: ReducedSDP, op: InvariantOperator) -> np.ndarray:
    return reduced.parametrization.to_parameters(op.coeffs)


def block_consistency_check(op: InvariantOperator, shape: Partition, d_B: Optional[int] = None) -> float:
    """
    Largest deviation between the λ block of op and (I ⊗ U_λ)ᵀ ρ (I ⊗ U_λ)

    U_λ stacks the explicit vectors u_τ; ρ is the dense reconstruction of op.
    Small instances only.
    """
    from src.core.symrep import pairing_table
    from src.oracle.dense import dense_reconstruct, explicit_u_vector

    tableaux = semistandard_tableaux(shape, op.d_H)
    if not tableaux:
        return 0.0
    block = psd_block_map(shape, pairing_table(shape, op.d_H), op.d_A, op.d_Abar, len(tableaux))
    reduced = block.evaluate(op.coeffs)

    u = np.stack([explicit_u_vector(t, op.d_H) for t in tableaux], axis=1).astype(float)
    projector = kron(np.eye(op.d_A * op.d_Abar), u)
    dense = projector.T @ dense_reconstruct(op) @ projector
    return float(np.max(np.abs(dense - reduced), initial=0.0))


def row_rank(p: BlockSDP, limit: int = 4000) -> Optional[int]:
    """Rank of the realified equality matrix, or None above the size limit"""
    if p.num_rows == 0:
        return 0
    if p.num_vars > limit:
        return None
    return int(np.linalg.matrix_rank(p.eq_matrix.toarray()))


def manifest(reduced: ReducedSDP, block_sdp: Optional[BlockSDP] = None,
             include_rows: bool = True) -> Dict[str, Any]:
    """JSON-ready description: variable map, rows, block specs and statistics"""
    index = {e: k for k, e in enumerate(reduced.variables)}
    record: Dict[str, Any] = {
        'dims': {
            'd_A': reduced.dims.d_A, 'd_Abar': reduced.dims.d_Abar,
            'd_B': reduced.dims.d_B, 'd_Bbar': reduced.dims.d_Bbar, 'n': reduced.dims.n,
        },
        'variables': [
            {'index': k, 'i': e.i, 'j': e.j, 'x': e.x, 'y': e.y, 'E': e.key.matrix.tolist()}
            for k, e in enumerate(reduced.variables)
        ],
        'parameters': list(reduced.parametrization.labels),
        'blocks': [
            {'partition': list(b.shape.parts), 'tableaux': b.num_tableaux, 'side': b.side}
            for b in reduced.blocks
        ],
        'stats': {k: v for k, v in reduced.stats.items() if not k.endswith('_ms')},
    }
    if include_rows:
        record['rows'] = [
            {
                'label': row.label,
                'coeffs': [[index[e], str(c)] for e, c in sorted(row.coeffs.items(), key=lambda t: index[t[0]])],
                'rhs': str(row.rhs),
            }
            for row in reduced.equalities
        ]
    if block_sdp is not None:
        record['stats']['real_rows'] = block_sdp.num_rows
        record['stats']['row_rank'] = row_rank(block_sdp)
    return record
