"""Order parameters, correlations, entanglement, spectra, and level statistics.

Entanglement entropies are reported in bits (logarithms base 2).  Spectral
densities use A(k, w) = sum_a |<a| sx_k |ground>|**2 g(w - E_a + E_0) with
sx_k = L**-0.5 sum_j exp(-i k j) sx_j and a unit-area Gaussian g of width
eta.  Within the constrained space the bare sx_j matrix elements equal the
blockade-projected ones, because flips that violate the blockade leave the
space and are orthogonal to every eigenstate.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .basis import BoundaryCondition, ConstrainedBasis, FullBasis
from .operators import _flip_arrays, sigma_z_staggered
from .state import StateVector


@dataclass
class OrderParameters:
    mx: float
    mx_projected: float
    mz_staggered: float
    cavity_field: float  # <a> in units of g sqrt(L)


def _require_constrained(psi):
    if not isinstance(psi.basis, ConstrainedBasis):
        raise ValueError("observable defined on the constrained basis")
    return psi.basis


def order_parameters(psi):
    """Uniform x-magnetization, projected flip average, staggered z order."""
    basis = _require_constrained(psi)
    amps = psi.amps
    p = np.abs(amps) ** 2
    mz_stag = float(p @ sigma_z_staggered(basis)) / basis.L

    mx = 0.0
    for i in range(basis.L):
        # bare flip: drop targets that leave the constrained space
        states = basis.states
        flipped = states ^ np.int64(1 << i)
        pos = np.searchsorted(states, flipped)
        pos = np.minimum(pos, basis.dim - 1)
        hit = states[pos] == flipped
        mx += float(
            np.real(np.sum(np.conj(amps[pos[hit]]) * amps[np.nonzero(hit)[0]]))
        )
    mx /= basis.L

    mxp = 0.0
    for i in range(basis.L):
        src, dst = _flip_arrays(basis, i)
        mxp += float(np.real(np.sum(np.conj(amps[dst]) * amps[src])))
    mxp /= basis.L
    return OrderParameters(mx, mxp, mz_stag, mxp)


def correlation(psi, anchors=None):
    """Density-density correlator C(r) = <n_i n_{i+r}>, r = 0 .. L/2.

    anchors selects the sites i to average over: an int for a single
    site-resolved anchor, a sequence for a sublattice average, or None for
    all sites.
    """
    basis = _require_constrained(psi)
    if basis.bc != BoundaryCondition.PERIODIC:
        raise ValueError("correlator distances assume a periodic chain")
    L = basis.L
    if anchors is None:
        anchors = range(L)
    elif np.isscalar(anchors):
        anchors = [int(anchors)]
    occ = basis.occupations()
    p = np.abs(psi.amps) ** 2
    pair = occ.T @ (occ * p[:, None])  # pair[i, j] = <n_i n_j>
    rs = np.arange(L // 2 + 1)
    c = np.zeros(rs.shape[0])
    for r in rs:
        c[r] = np.mean([pair[i, (i + r) % L] for i in anchors])
    return c


def staggered_contrast(c):
    """Mean of C at even r >= 2 minus mean at odd r."""
    c = np.asarray(c)
    if c.shape[0] < 3:
        raise ValueError("need correlations out to r >= 2")
    return float(np.mean(c[2::2]) - np.mean(c[1::2]))


@dataclass
class EntanglementResult:
    cut: int
    entropy_bits: float
    log_base: float = 2.0


def _constrained_cut_maps(basis, cut):
    key = ("cut", cut)
    maps = basis._caches.get(key)
    if maps is None:
        from .basis import enumerate_states

        left = enumerate_states(cut, BoundaryCondition.OPEN) if cut > 1 else np.arange(2, dtype=np.int64)
        right_len = basis.L - cut
        right = (
            enumerate_states(right_len, BoundaryCondition.OPEN)
            if right_len > 1
            else np.arange(2, dtype=np.int64)
        )
        low = basis.states & np.int64((1 << cut) - 1)
        high = basis.states >> cut
        rows = np.searchsorted(left, low)
        cols = np.searchsorted(right, high)
        maps = (left.shape[0], right.shape[0], rows, cols)
        basis._caches[key] = maps
    return maps


def entanglement_entropy(psi, cut=None):
    """Bipartite entropy in bits across sites [0, cut) | [cut, L).

    Constrained states use open-chain sub-bases with the blockade enforced
    at the junctions by construction; full-basis states use a dense
    reshape.  Default cut is L // 2.
    """
    L = psi.basis.L
    if cut is None:
        cut = L // 2
    if not 0 < cut < L:
        raise ValueError(f"cut must lie strictly inside the chain, got {cut}")
    if isinstance(psi.basis, FullBasis):
        mat = psi.amps.reshape(1 << (L - cut), 1 << cut).T
    else:
        n_left, n_right, rows, cols = _constrained_cut_maps(psi.basis, cut)
        mat = np.zeros((n_left, n_right), dtype=psi.amps.dtype)
        mat[rows, cols] = psi.amps
    sv = np.linalg.svd(mat, compute_uv=False)
    p = sv**2
    p = p[p > 1e-30]
    return EntanglementResult(cut, float(-np.sum(p * np.log2(p))))


def apply_sigma_x_k(psi, n_k):
    """sx_k |psi> with sx_k = L**-0.5 sum_j exp(-i k j) sx_j, k = 2 pi n_k / L."""
    basis = _require_constrained(psi)
    L = basis.L
    out = np.zeros(basis.dim, dtype=np.complex128)
    for j in range(L):
        src, dst = _flip_arrays(basis, j)
        out[dst] += np.exp(-2j * np.pi * n_k * j / L) * psi.amps[src]
    return out / np.sqrt(L)


@dataclass
class SpectralDensityResult:
    momentum_indices: list
    omega_grid: np.ndarray
    values: np.ndarray  # (len k, len omega)
    eta: float
    excitations: dict = field(repr=False)  # n_k -> (energies above ground, weights)
    sum_rule: dict = field(repr=False)  # n_k -> ||sx_k ground||**2


def spectral_density(sector_eigs, ground, ground_energy, omega_grid, eta=0.05):
    """Momentum-resolved excitation weight of the flip operator.

    Parameters
    ----------
    sector_eigs : dict
        n_k -> (SymmetrySector, EigenDecomposition) for each momentum.
    ground : StateVector
        Ground state on the full constrained basis.
    ground_energy : float
        Its energy (sets the excitation zero).
    omega_grid : array_like
        Frequencies at which the broadened density is evaluated.
    eta : float
        Gaussian width; each line integrates to its weight.
    """
    if eta <= 0:
        raise ValueError("broadening width must be positive")
    omega_grid = np.asarray(omega_grid, dtype=np.float64)
    ks = sorted(sector_eigs.keys())
    values = np.zeros((len(ks), omega_grid.shape[0]))
    excitations = {}
    sum_rule = {}
    norm = 1.0 / (eta * np.sqrt(2.0 * np.pi))
    for row, n_k in enumerate(ks):
        sector, eig = sector_eigs[n_k]
        v = apply_sigma_x_k(ground, n_k)
        sum_rule[n_k] = float(np.vdot(v, v).real)
        coeffs = sector.project_amplitudes(v)
        w = np.abs(eig.vectors.conj().T @ coeffs) ** 2
        de = eig.energies - ground_energy
        excitations[n_k] = (de, w)
        values[row] = norm * (
            w @ np.exp(-((omega_grid[None, :] - de[:, None]) ** 2) / (2 * eta * eta))
        )
    return SpectralDensityResult(ks, omega_grid, values, eta, excitations, sum_rule)


def lowest_excitation(de, weights, rel_cut=1e-6):
    """Smallest excitation energy carrying a non-negligible share of the weight."""
    total = float(np.sum(weights))
    if total <= 0:
        return np.nan
    keep = weights > rel_cut * total
    if not np.any(keep):
        return np.nan
    return float(np.min(de[keep]))


def eigenstate_overlaps(eig, target_coeffs):
    """(energy, |<target|alpha>|**2) pairs, ascending in energy."""
    w = np.abs(eig.vectors.conj().T @ np.asarray(target_coeffs)) ** 2
    return eig.energies.copy(), w


@dataclass
class LevelStatisticsResult:
    spacings: np.ndarray
    mean_spacing: float
    bin_edges: np.ndarray
    density: np.ndarray
    ks_distances: dict
    collapsed_levels: int  # degenerate levels merged before unfolding
    dropped_spacings: int  # nonpositive unfolded spacings discarded


def reference_spacing_cdf(name, s):
    s = np.asarray(s, dtype=np.float64)
    if name == "poisson":
        return 1.0 - np.exp(-s)
    if name == "wigner_dyson":
        return 1.0 - np.exp(-np.pi * s * s / 4.0)
    if name == "semi_poisson":
        return 1.0 - (1.0 + 2.0 * s) * np.exp(-2.0 * s)
    raise ValueError(f"unknown reference distribution {name!r}")


def reference_spacing_pdf(name, s):
    s = np.asarray(s, dtype=np.float64)
    if name == "poisson":
        return np.exp(-s)
    if name == "wigner_dyson":
        return 0.5 * np.pi * s * np.exp(-np.pi * s * s / 4.0)
    if name == "semi_poisson":
        return 4.0 * s * np.exp(-2.0 * s)
    raise ValueError(f"unknown reference distribution {name!r}")


def _ks_distance(samples, cdf):
    s = np.sort(samples)
    n = s.shape[0]
    f = cdf(s)
    lo = np.arange(n) / n
    hi = np.arange(1, n + 1) / n
    return float(np.max(np.maximum(np.abs(f - lo), np.abs(f - hi))))


def level_statistics(
    energies,
    trim_fraction=0.10,
    fit_degree=7,
    degeneracy_tol=None,
    bins=None,
):
    """Unfolded nearest-neighbor spacing statistics of one symmetry block.

    The staircase N(E) is fitted with a polynomial (default degree 7) on the
    central region after trimming trim_fraction per spectral edge, and
    spacings are s_i = (E_{i+1} - E_i) dN/dE at E_i.  Exactly degenerate
    levels (multiplets within degeneracy_tol) are collapsed to single levels
    first; their count is reported, not discarded silently.
    """
    e = np.sort(np.asarray(energies, dtype=np.float64))
    if e.shape[0] < 500:
        raise ValueError(f"need at least 500 levels, got {e.shape[0]}")
    span = float(e[-1] - e[0])
    tol = degeneracy_tol if degeneracy_tol is not None else 1e-11 * max(span, 1.0)
    gaps = np.diff(e)
    keep = np.concatenate([[True], gaps > tol])
    collapsed = int(np.sum(~keep))
    d = e[keep]

    m = d.shape[0]
    lo = int(np.floor(trim_fraction * m))
    hi = m - lo
    if hi - lo < 100:
        raise ValueError("too few levels remain after trimming")
    central = d[lo:hi]
    counts = np.arange(lo, hi, dtype=np.float64) + 0.5
    staircase = Polynomial.fit(central, counts, deg=fit_degree)
    density = staircase.deriv()
    s = np.diff(central) * density(central[:-1])
    dropped = int(np.sum(s <= 0))
    s = s[s > 0]

    if bins is None:
        bins = np.linspace(0.0, 4.0, 41)
    hist, edges = np.histogram(s, bins=bins, density=True)
    ks = {
        name: _ks_distance(s, lambda x, name=name: reference_spacing_cdf(name, x))
        for name in ("poisson", "wigner_dyson", "semi_poisson")
    }
    return LevelStatisticsResult(
        spacings=s,
        mean_spacing=float(np.mean(s)),
        bin_edges=edges,
        density=hist,
        ks_distances=ks,
        collapsed_levels=collapsed,
        dropped_spacings=dropped,
    )
