"""Translation and inversion symmetry blocks of the periodic constrained chain.

Basis states are grouped into orbits of the one-site translation T1; the
orbit representative is the numerically smallest pattern.  An orbit of
period R supports the momenta k = 2 pi n_k / L with n_k * R = 0 mod L, and
contributes one column

    |rep; k> = R**-0.5 * sum_{a=0}^{R-1} exp(-i k a) |T1**a rep>

to the momentum-k sector, an eigenvector of T1 with eigenvalue exp(+i k).
Site reflection i -> L-1-i maps sector k to -k,
so it is resolved into parities +/-1 only at k = 0 and k = pi, where the
sector bases stay real.  Momentum labels n_k run over (-L/2, L/2].
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import BoundaryCondition, ConstrainedBasis
from .errors import SymmetryViolationError, UnsupportedBoundaryError
from .state import StateVector


@dataclass
class SymmetrySector:
    momentum_index: int
    inversion_parity: int | None
    representatives: list = field(repr=False)  # (orbit representative bits, period)
    basis_matrix: sp.csr_matrix = field(repr=False)  # full dim x sector dim

    @property
    def dim(self):
        return self.basis_matrix.shape[1]

    def lift(self, coeffs):
        """Sector coefficient vector -> full-basis amplitude vector."""
        return self.basis_matrix @ np.asarray(coeffs)

    def project_amplitudes(self, amps):
        """Full-basis amplitudes -> sector coefficients."""
        return self.basis_matrix.conj().T @ np.asarray(amps)


def translation_permutation(basis):
    """Index permutation tperm with (T1 psi)[tperm[m]] = psi[m]."""
    L = basis.L
    mask = np.int64((1 << L) - 1)
    shifted = ((basis.states << 1) | (basis.states >> (L - 1))) & mask
    return basis.index_many(shifted)

def reflection_permutation(basis):
    """Index permutation rperm with (P psi)[rperm[m]] = psi[m]."""
    L = basis.L
    rev = np.zeros_like(basis.states)
    for i in range(L):
        rev |= ((basis.states >> i) & 1) << (L - 1 - i)
    return basis.index_many(rev)


def momentum_labels(L):
    """Momentum indices n_k in (-L/2, L/2]."""
    return list(range(-((L - 1) // 2), L // 2 + 1))


def _orbits(basis):
    """Orbit representatives, periods, and member indices, ordered by representative."""
    L = basis.L
    dim = basis.dim
    mask = np.int64((1 << L) - 1)
    rots = np.empty((L, dim), dtype=np.int64)
    rots[0] = basis.states
    for a in range(1, L):
        rots[a] = ((rots[a - 1] << 1) | (rots[a - 1] >> (L - 1))) & mask
    reps = rots.min(axis=0)
    eq = rots[1:] == basis.states[None, :]
    period = np.where(eq.any(axis=0), eq.argmax(axis=0) + 1, L)

    is_rep = basis.states == reps
    rep_states = basis.states[is_rep]
    rep_periods = period[is_rep]
    orbit_members = []
    for bits, R in zip(rep_states, rep_periods):
        members = np.empty(R, dtype=np.int64)
        s = int(bits)
        for a in range(R):
            members[a] = s
            s = ((s << 1) | (s >> (L - 1))) & ((1 << L) - 1)
        orbit_members.append(basis.index_many(members))
    return rep_states, rep_periods, orbit_members


def build_sectors(basis):
    """All (momentum, parity) sectors of a periodic constrained basis."""
    if not isinstance(basis, ConstrainedBasis) or basis.bc != BoundaryCondition.PERIODIC:
        raise UnsupportedBoundaryError("symmetry blocking needs a periodic constrained basis")
    L = basis.L
    dim = basis.dim
    rep_states, rep_periods, orbit_members = _orbits(basis)
    rperm = reflection_permutation(basis)

    sectors = []
    for n_k in momentum_labels(L):
        sel = [
            o
            for o in range(rep_states.shape[0])
            if (n_k * rep_periods[o]) % L == 0
        ]
        if not sel:
            continue
        rows, cols, data = [], [], []
        for col, o in enumerate(sel):
            R = rep_periods[o]
            a = np.arange(R)
            rows.append(orbit_members[o])
            cols.append(np.full(R, col))
            data.append(np.exp(-2j * np.pi * n_k * a / L) / np.sqrt(R))
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        data = np.concatenate(data)
        at_real_k = n_k == 0 or 2 * n_k == L
        if at_real_k:
            data = data.real.copy()
        u = sp.csr_matrix((data, (rows, cols)), shape=(dim, len(sel)))
        reps_here = [(int(rep_states[o]), int(rep_periods[o])) for o in sel]
        if not at_real_k:
            sectors.append(SymmetrySector(n_k, None, reps_here, u))
            continue
        # resolve inversion: reflection maps each momentum column to +/- another
        pu = u[rperm]
        m = (u.T @ pu).tocoo()  # signed permutation, entries +/-1
        partner = np.full(len(sel), -1, dtype=np.int64)
        sign = np.zeros(len(sel))
        for r, c, v in zip(m.row, m.col, m.data):
            if abs(v) > 1e-9:
                partner[c] = r
                sign[c] = 1.0 if v > 0 else -1.0
        if np.any(partner < 0):
            raise SymmetryViolationError("reflection did not permute the momentum basis")
        blocks = {1: ([], [], []), -1: ([], [], [])}
        ncols = {1: 0, -1: 0}
        for j in range(len(sel)):
            i = partner[j]
            if i == j:
                par = int(round(sign[j]))
                rows_w, cols_w, data_w = blocks[par]
                rows_w.append(j)
                cols_w.append(ncols[par])
                data_w.append(1.0)
                ncols[par] += 1
            elif j < i:
                for par in (1, -1):
                    rows_w, cols_w, data_w = blocks[par]
                    rows_w.extend([j, i])
                    cols_w.extend([ncols[par], ncols[par]])
                    data_w.extend([1.0 / np.sqrt(2), par * sign[j] / np.sqrt(2)])
                    ncols[par] += 1
        for par in (1, -1):
            rows_w, cols_w, data_w = blocks[par]
            if ncols[par] == 0:
                continue
            w = sp.csr_matrix(
                (data_w, (rows_w, cols_w)), shape=(len(sel), ncols[par])
            )
            used = sorted({sel[j] for j in rows_w})
            reps_par = [(int(rep_states[o]), int(rep_periods[o])) for o in used]
            sectors.append(SymmetrySector(n_k, par, reps_par, (u @ w).tocsr()))
    return sectors


def sector_summary(sectors):
    """Rows of (momentum index, inversion parity, dimension)."""
    return [(s.momentum_index, s.inversion_parity, s.dim) for s in sectors]


def find_sector(sectors, n_k, parity=None):
    for s in sectors:
        if s.momentum_index == n_k and s.inversion_parity == parity:
            return s
    raise KeyError(f"no sector with momentum index {n_k}, parity {parity}")


def _check_translation_invariance(op, basis, tol=1e-10):
    rng = np.random.default_rng(7)
    v = rng.standard_normal(basis.dim)
    v /= np.linalg.norm(v)
    tperm = translation_permutation(basis)
    tv = np.empty_like(v)
    tv[tperm] = v
    hv = op.matvec(v)
    tHv = np.empty_like(hv)
    tHv[tperm] = hv
    scale = max(np.linalg.norm(hv), 1.0)
    return np.linalg.norm(op.matvec(tv) - tHv) <= tol * scale


def project_operator(op, sector):
    """Dense hermitian block of op in the sector basis.

    Raises SymmetryViolationError if op fails a randomized translation
    commutation check at tolerance 1e-10.
    """
    basis = op.basis
    if not _check_translation_invariance(op, basis):
        raise SymmetryViolationError("operator does not commute with translation")
    u = sector.basis_matrix
    block = (u.conj().T @ (op.matrix @ u)).toarray()
    return block


def project_state(psi, sector):
    """Sector coefficients of a full-basis state."""
    amps = psi.amps if isinstance(psi, StateVector) else np.asarray(psi)
    return sector.project_amplitudes(amps)
