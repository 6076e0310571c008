"""Hamiltonians of the blockade-constrained chain with cavity-mediated coupling.

The interacting model on the constrained space is

    H = -(1/L) * sum_{i,j} sx~_i sx~_j + delta * sum_i sz_i
      = -(1/L) * H_PXP**2 + delta * sum_i sz_i,

where sx~_i = P_{i-1} sx_i P_{i+1} is the blockade-projected flip,
H_PXP = sum_i sx~_i, and sz_i = 2 n_i - 1.  The i = j terms are kept:
(sx~_i)**2 = P_{i-1} P_{i+1} is a projector, not the identity.  Energies are
quoted in units of the cavity-mediated coupling J = g**2 / (2 omega_c).

The collective-spin (LMG) reference model drops the blockade:
H_LMG = -(1/L) * (Sx)**2 + delta * Sz on the full 2**L space.

The drive-deformed model splits H into a spin-conserving XY part and a
pair-creation part whose weight chi_drive is tunable; chi_drive = 1
reproduces H exactly.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import BoundaryCondition, ConstrainedBasis, FullBasis
from .state import StateVector


@dataclass
class ModelParameters:
    L: int
    delta: float = 0.0
    bc: BoundaryCondition = BoundaryCondition.PERIODIC
    chi_drive: float = 1.0
    epsilon_break: float = 0.0

    def __post_init__(self):
        self.bc = BoundaryCondition(self.bc)


class SparseOperator:
    """CSR matrix plus the bookkeeping the solvers need."""

    def __init__(self, matrix, basis, hermitian=True):
        matrix = matrix.tocsr()
        matrix.sum_duplicates()
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError("operator matrix must be square")
        if basis is not None and matrix.shape[0] != basis.dim:
            raise ValueError("operator dimension does not match the basis")
        self.matrix = matrix
        self.basis = basis
        self.hermitian = hermitian

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def nnz(self):
        return self.matrix.nnz

    def matvec(self, vec):
        """Matrix-vector product; real storage acts on complex vectors cheaply."""
        if np.iscomplexobj(vec) and not np.iscomplexobj(self.matrix.data):
            return self.matrix @ vec.real + 1j * (self.matrix @ vec.imag)
        return self.matrix @ vec

    def expectation(self, state):
        amps = state.amps if isinstance(state, StateVector) else state
        val = np.vdot(amps, self.matvec(amps))
        return float(val.real) if self.hermitian else complex(val)

    def to_dense(self):
        return self.matrix.toarray()

    def export(self, path):
        """Text dump: header 'dim nnz', then one 'row col real imag' per entry."""
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            fh.write(f"{self.dim} {coo.nnz}\n")
            data = coo.data.astype(np.complex128)
            for r, c, v in zip(coo.row, coo.col, data):
                fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")


def _flip_arrays(basis, i, require_empty=None):
    """Source/target basis indices for the projected flip at site i.

    require_empty narrows to raising (site empty) or lowering (site occupied)
    when set to True / False; None keeps both directions.
    """
    states = basis.states
    L = basis.L
    ok = np.ones(basis.dim, dtype=bool)
    if basis.bc == BoundaryCondition.PERIODIC:
        neighbors = ((i - 1) % L, (i + 1) % L)
    else:
        neighbors = tuple(j for j in (i - 1, i + 1) if 0 <= j < L)
    for j in neighbors:
        ok &= ((states >> j) & 1) == 0
    if require_empty is True:
        ok &= ((states >> i) & 1) == 0
    elif require_empty is False:
        ok &= ((states >> i) & 1) == 1
    src = np.nonzero(ok)[0]
    dst = basis.index_many(states[src] ^ np.int64(1 << i))
    return src, dst


def projected_sigma_x(basis, i):
    """sx~_i = P_{i-1} sx_i P_{i+1} (missing neighbors of an open edge count as empty)."""
    if not 0 <= i < basis.L:
        raise ValueError(f"site index {i} outside chain of length {basis.L}")
    src, dst = _flip_arrays(basis, i)
    mat = sp.coo_matrix(
        (np.ones(src.shape[0]), (dst, src)), shape=(basis.dim, basis.dim)
    )
    return SparseOperator(mat, basis)


def build_pxp(basis):
    """H_PXP = sum_i sx~_i."""
    rows, cols = [], []
    for i in range(basis.L):
        src, dst = _flip_arrays(basis, i)
        rows.append(dst)
        cols.append(src)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    mat = sp.coo_matrix(
        (np.ones(rows.shape[0]), (rows, cols)), shape=(basis.dim, basis.dim)
    )
    return SparseOperator(mat, basis)


def sigma_z_total(basis):
    """Diagonal of sum_i sz_i over the constrained basis."""
    return 2.0 * np.bitwise_count(basis.states).astype(np.float64) - basis.L


def sigma_z_staggered(basis):
    """Diagonal of sum_i (-1)**i sz_i; site 0 carries +1."""
    even_mask = np.int64(sum(1 << i for i in range(0, basis.L, 2)))
    odd_mask = np.int64(sum(1 << i for i in range(1, basis.L, 2)))
    even = np.bitwise_count(basis.states & even_mask).astype(np.float64)
    odd = np.bitwise_count(basis.states & odd_mask).astype(np.float64)
    stagger = 2.0 * (even - odd)
    if basis.L % 2:
        stagger -= 1.0  # open/odd chains have one more even site
    return stagger


def build_pxp2(basis, params):
    """H = -(1/L) H_PXP**2 + delta sum_i sz_i, built by squaring H_PXP."""
    if params.L != basis.L or params.bc != basis.bc:
        raise ValueError("parameters do not match the basis")
    hpxp = build_pxp(basis).matrix
    mat = hpxp @ hpxp  # integer-valued entries, exact in float64
    mat = mat * (-1.0 / basis.L)
    mat = mat + sp.diags(params.delta * sigma_z_total(basis))
    return SparseOperator(mat, basis)


def _projected_raising(basis):
    """A = sum_i s+~_i (create one excitation wherever the blockade allows)."""
    rows, cols = [], []
    for i in range(basis.L):
        src, dst = _flip_arrays(basis, i, require_empty=True)
        rows.append(dst)
        cols.append(src)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    return sp.coo_matrix(
        (np.ones(rows.shape[0]), (rows, cols)), shape=(basis.dim, basis.dim)
    ).tocsr()


def build_deformed(basis, params):
    """Drive-deformed model H_XY + chi_drive * H_pair.

    With A = sum_i s+~_i the spin-conserving part is
    H_XY = -(1/L)(A A+ + A+ A) + delta sum_i sz_i and the pair part is
    H_pair = -(1/L)(A A + A+ A+); chi_drive = 1 recovers build_pxp2 exactly.
    """
    if params.L != basis.L or params.bc != basis.bc:
        raise ValueError("parameters do not match the basis")
    a = _projected_raising(basis)
    ad = a.T.tocsr()
    xy = a @ ad + ad @ a
    pair = a @ a + ad @ ad
    mat = (xy + params.chi_drive * pair) * (-1.0 / basis.L)
    mat = mat + sp.diags(params.delta * sigma_z_total(basis))
    return SparseOperator(mat, basis)


def build_symmetry_breaking(basis, epsilon):
    """dH = -epsilon * sum_i (sx~_i + (-1)**i sz_i).

    Selects one member of each degenerate ordered pair; requires a periodic
    chain of even length so the staggered field is frustration free.
    """
    if basis.bc != BoundaryCondition.PERIODIC or basis.L % 2:
        raise ValueError("symmetry-breaking field needs a periodic even-length chain")
    mat = -epsilon * build_pxp(basis).matrix - sp.diags(
        epsilon * sigma_z_staggered(basis)
    )
    return SparseOperator(mat.tocsr(), basis)


def _lmg_core(n_sites, delta, denom):
    dim = 1 << n_sites
    if n_sites > 20:
        raise ValueError(f"full-space collective model limited to 20 sites, got {n_sites}")
    every = np.arange(dim, dtype=np.int64)
    rows = np.concatenate([every ^ np.int64(1 << i) for i in range(n_sites)])
    cols = np.tile(every, n_sites)
    sx = sp.coo_matrix(
        (np.ones(rows.shape[0]), (rows, cols)), shape=(dim, dim)
    ).tocsr()
    mat = (sx @ sx) * (-1.0 / denom)
    sz = 2.0 * np.bitwise_count(every).astype(np.float64) - n_sites
    return mat + sp.diags(delta * sz)


def build_lmg(L, delta):
    """H_LMG = -(1/L)(Sx)**2 + delta Sz on the full 2**L space."""
    return SparseOperator(_lmg_core(L, delta, L), FullBasis(L))


def build_sublattice_lmg(L, period, delta):
    """Collective model for one sublattice of a period-p density wave.

    Acts on the L/p sublattice sites but keeps the 1/L interaction
    normalization of the parent chain.
    """
    if period not in (2, 3, 4):
        raise ValueError(f"sublattice period must be 2, 3, or 4, got {period}")
    if L % period:
        raise ValueError(f"period {period} does not divide L={L}")
    n_sub = L // period
    return SparseOperator(_lmg_core(n_sub, delta, L), FullBasis(n_sub))


def effective_coupling(g, omega_c):
    """Cavity-mediated coupling J = g**2 / (2 omega_c)."""
    if omega_c <= 0:
        raise ValueError("cavity frequency must be positive")
    return g * g / (2.0 * omega_c)


def projected_polarized_state(basis):
    """The x-polarized product state projected onto the constrained space."""
    if not isinstance(basis, ConstrainedBasis):
        raise ValueError("projected polarized state lives on a constrained basis")
    return StateVector(np.ones(basis.dim), basis, normalize=True)
