"""Sparse eigensolvers and Krylov time propagation.

ground_state runs a Lanczos iteration with full reorthogonalization.  The
default start vector is the uniform superposition of all basis states: it is
translation and reflection symmetric, so in a phase with degenerate ordered
ground states the solver deterministically returns the symmetric combination.
Pass an explicit start vector (or add a symmetry-breaking field to the
operator) to select a broken branch.

evolve integrates the Schroedinger equation with an adaptive short-time
Krylov propagator; each substep exponentiates the Lanczos tridiagonal
exactly, so the norm is conserved to reorthogonalization accuracy.
"""

import os
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, ResourceLimitError, StiffnessError
from .state import StateVector

FULL_DIAG_LIMIT = 20_000
KRYLOV_DIM_LIMIT = 300_000


def max_dim_override():
    """Resource guards honor the PXP2_MAX_DIM environment variable."""
    raw = os.environ.get("PXP2_MAX_DIM")
    return int(raw) if raw else None


@dataclass
class EigenDecomposition:
    energies: np.ndarray  # ascending
    vectors: np.ndarray  # column i pairs with energies[i]


def full_spectrum(block, limit=None):
    """Dense eigendecomposition of a hermitian block.

    Parameters
    ----------
    block : (n, n) array_like or SparseOperator
        Hermitian matrix; sparse input is densified.
    limit : int, optional
        Size guard; defaults to 20000 or PXP2_MAX_DIM.
    """
    if hasattr(block, "to_dense"):
        block = block.to_dense()
    block = np.asarray(block)
    n = block.shape[0]
    cap = limit or max_dim_override() or FULL_DIAG_LIMIT
    if n > cap:
        raise ResourceLimitError("full_spectrum", n, cap)
    energies, vectors = np.linalg.eigh(block)
    return EigenDecomposition(energies, vectors)


def _uniform_start(n, dtype=np.float64):
    return np.full(n, 1.0 / np.sqrt(n), dtype=dtype)


def ground_state(op, tol=1e-10, max_iter=400, v0=None):
    """Lowest eigenpair by Lanczos with full reorthogonalization.

    Returns (energy, StateVector).  Convergence is declared when the true
    residual ||H v - E v|| drops below tol; otherwise ConvergenceError
    carries the best residual reached.
    """
    h = op.matrix
    n = h.shape[0]
    complex_h = np.iscomplexobj(h.data)
    dtype = np.complex128 if complex_h else np.float64
    if v0 is None:
        v = _uniform_start(n, dtype)
    else:
        v = np.asarray(v0, dtype=dtype).copy()
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValueError("start vector must be nonzero")
        v /= nrm
    if n == 1:
        e = float(h.toarray()[0, 0].real)
        return e, StateVector(np.ones(1), op.basis)

    m_cap = min(max_iter, n)
    vecs = np.empty((m_cap, n), dtype=dtype)
    alphas = np.empty(m_cap)
    betas = np.empty(m_cap)
    vecs[0] = v
    best = (np.inf, None, None)
    j = 0
    while j < m_cap:
        w = op.matvec(vecs[j])
        alphas[j] = np.vdot(vecs[j], w).real
        w -= alphas[j] * vecs[j]
        if j > 0:
            w -= betas[j - 1] * vecs[j - 1]
        # full reorthogonalization, two passes
        for _ in range(2):
            w -= vecs[: j + 1].T @ (vecs[: j + 1].conj() @ w)
        beta = np.linalg.norm(w)
        betas[j] = beta
        check = beta < 1e-13 or j + 1 == m_cap or (j >= 10 and (j % 10 == 0))
        if check:
            theta, s = eigh_tridiagonal(
                alphas[: j + 1], betas[:j], select="i", select_range=(0, 0)
            )
            resid_est = beta * abs(s[-1, 0])
            if resid_est <= tol or beta < 1e-13 or j + 1 == m_cap:
                x = vecs[: j + 1].T @ s[:, 0]
                x /= np.linalg.norm(x)
                resid = np.linalg.norm(op.matvec(x) - theta[0] * x)
                if resid <= tol or beta < 1e-13:
                    return float(theta[0]), StateVector(x, op.basis)
                if resid < best[0]:
                    best = (resid, float(theta[0]), x)
                if beta < 1e-13:
                    break
        if j + 1 < m_cap:
            vecs[j + 1] = w / beta
        j += 1
    raise ConvergenceError(
        f"Lanczos did not reach tol={tol} in {m_cap} iterations "
        f"(best residual {best[0]:.3e})",
        residual=best[0],
    )


def _krylov_basis(op, psi, m):
    """Lanczos tridiagonalization of the current state; returns (V, alpha, beta, m_eff, b_next)."""
    n = psi.shape[0]
    vecs = np.empty((m, n), dtype=np.complex128)
    alphas = np.empty(m)
    betas = np.empty(m)
    vecs[0] = psi
    j = 0
    while True:
        w = op.matvec(vecs[j])
        alphas[j] = np.vdot(vecs[j], w).real
        w -= alphas[j] * vecs[j]
        if j > 0:
            w -= betas[j - 1] * vecs[j - 1]
        # full reorthogonalization within the small basis
        w -= vecs[: j + 1].T @ (vecs[: j + 1].conj() @ w)
        b = np.linalg.norm(w)
        if j + 1 == m or b < 1e-13:
            return vecs[: j + 1], alphas[: j + 1], betas[:j], j + 1, b
        betas[j] = b
        vecs[j + 1] = w / b
        j += 1


def _tridiag_expm_column(alphas, betas, dt):
    """First column of exp(-i dt T) for the real symmetric tridiagonal T."""
    # stev (QR) tolerates the near-zero off-diagonals of an exhausted
    # Krylov space, where the default stemr driver can fail
    theta, s = eigh_tridiagonal(alphas, betas, lapack_driver="stev")
    return s @ (np.exp(-1j * dt * theta) * s[0, :].conj())


def evolve(op, psi0, times, krylov_dim=30, tol=1e-9):
    """Propagate psi0 through the sorted time grid under exp(-i H t).

    Returns a list of StateVector snapshots, one per grid time.  The step
    size adapts to keep the local truncation estimate below tol; a step
    below 1e-12 raises StiffnessError.
    """
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("need a one-dimensional, nonempty time grid")
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValueError("time grid must be ascending and nonnegative")
    cap = max_dim_override() or KRYLOV_DIM_LIMIT
    if op.dim > cap:
        raise ResourceLimitError("evolve", op.dim, cap)

    psi = np.asarray(psi0.amps if isinstance(psi0, StateVector) else psi0)
    psi = psi.astype(np.complex128).copy()
    basis = psi0.basis if isinstance(psi0, StateVector) else op.basis
    out = []
    t = 0.0
    dt_try = None
    for target in times:
        while target - t > 1e-14:
            span = target - t
            vecs, alphas, betas, m_eff, b_next = _krylov_basis(op, psi, krylov_dim)
            if dt_try is None:
                dt_try = span
            dt = min(dt_try, span)
            while True:
                u = _tridiag_expm_column(alphas, betas, dt)
                err = abs(b_next * dt * u[-1]) if m_eff > 1 else 0.0
                if b_next < 1e-13:
                    err = 0.0
                if err <= tol:
                    break
                dt *= 0.5
                if dt < 1e-12:
                    raise StiffnessError(
                        f"propagator step size underflowed at t={t:.6g}"
                    )
            psi = vecs.T @ u
            t += dt
            if err < 0.01 * tol and dt == dt_try:
                dt_try = dt * 2.0
            elif dt < dt_try:
                dt_try = dt
        out.append(StateVector(psi.copy(), basis))
    return out
