import numpy as np
import pytest
import scipy.sparse as sp

from pxp2 import (
    BoundaryCondition,
    ConstrainedBasis,
    FullBasis,
    ModelParameters,
    StateVector,
    SymmetrySector,
    apply_sigma_x_k,
    build_pxp2,
    build_sectors,
    correlation,
    eigenstate_overlaps,
    entanglement_entropy,
    find_sector,
    full_spectrum,
    ground_state,
    level_statistics,
    lowest_excitation,
    momentum_labels,
    named_state,
    order_parameters,
    project_operator,
    project_state,
    reference_spacing_cdf,
    reference_spacing_pdf,
    spectral_density,
    staggered_contrast,
)
from util_oracles import projected_flip_full, restrict


def _random_state(basis, seed, complex_amps=False):
    rng = np.random.default_rng(seed)
    amps = rng.standard_normal(basis.dim)
    if complex_amps:
        amps = amps + 1j * rng.standard_normal(basis.dim)
    return StateVector(amps, basis, normalize=True)


def test_order_parameters_on_named_states():
    basis = ConstrainedBasis(8)
    z2 = named_state(basis, "Z2")
    ops = order_parameters(z2)
    assert ops.mz_staggered == pytest.approx(1.0, abs=1e-15)
    assert ops.mx == pytest.approx(0.0, abs=1e-15)
    assert ops.mx_projected == pytest.approx(0.0, abs=1e-15)
    assert ops.cavity_field == ops.mx_projected

    assert order_parameters(named_state(basis, "Z2_shifted")).mz_staggered == pytest.approx(-1.0)
    vac = order_parameters(named_state(basis, "vacuum"))
    assert vac.mz_staggered == pytest.approx(0.0, abs=1e-15)
    assert vac.mx == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("bc", [BoundaryCondition.PERIODIC, BoundaryCondition.OPEN])
def test_mx_routes_agree_with_dense_oracle(bc):
    L = 6
    basis = ConstrainedBasis(L, bc)
    psi = _random_state(basis, 21, complex_amps=True)
    flip_sum = sum(projected_flip_full(L, i, bc == BoundaryCondition.PERIODIC) for i in range(L))
    dense = restrict(flip_sum, basis.states) / L
    expect = float(np.real(np.vdot(psi.amps, dense @ psi.amps)))
    ops = order_parameters(psi)
    assert ops.mx == pytest.approx(expect, abs=1e-12)
    assert ops.mx_projected == pytest.approx(expect, abs=1e-12)


def test_correlation_on_density_wave():
    basis = ConstrainedBasis(8)
    z2 = named_state(basis, "Z2")
    c_all = correlation(z2)
    assert np.allclose(c_all, [0.5, 0.0, 0.5, 0.0, 0.5], atol=1e-15)
    c_sub = correlation(z2, anchors=range(0, 8, 2))
    assert np.allclose(c_sub, [1.0, 0.0, 1.0, 0.0, 1.0], atol=1e-15)
    assert staggered_contrast(c_sub) == pytest.approx(1.0)
    assert np.allclose(correlation(named_state(basis, "vacuum")), 0.0)
    c_site = correlation(z2, anchors=0)
    assert np.allclose(c_site, [1.0, 0.0, 1.0, 0.0, 1.0], atol=1e-15)


def test_correlation_matches_direct_average():
    basis = ConstrainedBasis(10)
    psi = _random_state(basis, 5)
    occ = basis.occupations()
    p = np.abs(psi.amps) ** 2
    c = correlation(psi)
    for r in range(6):
        direct = np.mean([p @ (occ[:, i] * occ[:, (i + r) % 10]) for i in range(10)])
        assert c[r] == pytest.approx(direct, abs=1e-13)


def test_correlation_needs_periodic_chain():
    basis = ConstrainedBasis(8, BoundaryCondition.OPEN)
    with pytest.raises(ValueError):
        correlation(named_state(basis, "vacuum"))


def test_staggered_contrast_needs_range():
    with pytest.raises(ValueError):
        staggered_contrast([1.0, 0.5])


def test_entanglement_product_and_cat_states():
    basis = ConstrainedBasis(8)
    assert entanglement_entropy(named_state(basis, "Z2")).entropy_bits == pytest.approx(0.0, abs=1e-12)
    assert entanglement_entropy(named_state(basis, "vacuum")).entropy_bits == pytest.approx(0.0, abs=1e-12)
    z2 = named_state(basis, "Z2")
    z2s = named_state(basis, "Z2_shifted")
    cat = StateVector((z2.amps + z2s.amps) / np.sqrt(2.0), basis)
    res = entanglement_entropy(cat)
    assert res.cut == 4
    assert res.log_base == 2.0
    assert res.entropy_bits == pytest.approx(1.0, abs=1e-12)


def test_entanglement_matches_partial_trace_oracle():
    from util_oracles import entropy_by_partial_trace

    basis = ConstrainedBasis(10)
    psi = _random_state(basis, 9, complex_amps=True)
    for cut in range(1, 10):
        ours = entanglement_entropy(psi, cut=cut).entropy_bits
        ref = entropy_by_partial_trace(psi.amps, basis.states, 10, cut)
        assert ours == pytest.approx(ref, abs=1e-9)


def test_entanglement_full_basis_route():
    from util_oracles import entropy_by_partial_trace

    basis = FullBasis(8)
    psi = _random_state(basis, 2, complex_amps=True)
    for cut in (1, 3, 4, 7):
        ours = entanglement_entropy(psi, cut=cut).entropy_bits
        ref = entropy_by_partial_trace(psi.amps, np.arange(256), 8, cut)
        assert ours == pytest.approx(ref, abs=1e-9)


def test_entanglement_cut_validation():
    basis = ConstrainedBasis(6)
    psi = named_state(basis, "vacuum")
    for cut in (0, 6, -1):
        with pytest.raises(ValueError):
            entanglement_entropy(psi, cut=cut)


def _merged_momentum_sector(sectors, basis, n_k):
    """Union of inversion blocks at one momentum, as a single sector."""
    parts = [s for s in sectors if s.momentum_index == n_k]
    if len(parts) == 1:
        return parts[0]
    u = sp.hstack([s.basis_matrix for s in parts]).tocsr()
    reps = [r for s in parts for r in s.representatives]
    return SymmetrySector(n_k, None, reps, u)


def test_sigma_x_k_lands_in_matching_momentum_sector():
    # pins the Fourier sign convention against the sector construction
    L = 10
    basis = ConstrainedBasis(L)
    h = build_pxp2(basis, ModelParameters(L=L, delta=-0.3))
    _, gs = ground_state(h)
    sectors = build_sectors(basis)
    for n_k in momentum_labels(L):
        v = apply_sigma_x_k(gs, n_k)
        total = float(np.vdot(v, v).real)
        sector = _merged_momentum_sector(sectors, basis, n_k)
        captured = float(np.linalg.norm(sector.project_amplitudes(v)) ** 2)
        assert captured == pytest.approx(total, abs=1e-12)


def test_spectral_density_sum_rule_and_area():
    L = 8
    basis = ConstrainedBasis(L)
    h = build_pxp2(basis, ModelParameters(L=L, delta=-0.3))
    _, gs = ground_state(h)
    e0 = h.expectation(gs)
    sectors = build_sectors(basis)
    sector_eigs = {}
    for n_k in momentum_labels(L):
        s = _merged_momentum_sector(sectors, basis, n_k)
        sector_eigs[n_k] = (s, full_spectrum(project_operator(h, s)))
    de_max = max(np.max(eig.energies) for _, eig in sector_eigs.values()) - e0
    grid = np.linspace(-2.0, de_max + 2.0, 6001)
    res = spectral_density(sector_eigs, gs, e0, grid, eta=0.05)

    assert res.momentum_indices == sorted(sector_eigs)
    assert np.all(res.values >= 0.0)
    for row, n_k in enumerate(res.momentum_indices):
        de, w = res.excitations[n_k]
        assert float(np.sum(w)) == pytest.approx(res.sum_rule[n_k], abs=1e-10)
        area = np.trapezoid(res.values[row], grid)
        assert area == pytest.approx(res.sum_rule[n_k], abs=1e-6)
        assert np.all(de >= -1e-9)  # ground energy is the sector minimum at k = 0 only
        if n_k == 0:
            assert np.min(np.abs(de)) < 1e-9


def test_spectral_density_rejects_bad_eta():
    with pytest.raises(ValueError):
        spectral_density({}, None, 0.0, np.linspace(0, 1, 5), eta=0.0)


def test_lowest_excitation_weight_filter():
    de = np.array([0.5, 1.0, 2.0])
    assert lowest_excitation(de, np.array([1e-12, 0.3, 0.1])) == pytest.approx(1.0)
    assert lowest_excitation(de, np.array([0.2, 0.3, 0.1])) == pytest.approx(0.5)
    assert np.isnan(lowest_excitation(de, np.zeros(3)))


def test_eigenstate_overlaps_completeness():
    basis = ConstrainedBasis(8)
    h = build_pxp2(basis, ModelParameters(L=8, delta=0.0))
    sectors = build_sectors(basis)
    s = find_sector(sectors, 0, 1)
    eig = full_spectrum(project_operator(h, s))
    target = project_state(named_state(basis, "Z2"), s)
    energies, w = eigenstate_overlaps(eig, target)
    assert np.all(np.diff(energies) >= -1e-12)
    assert float(np.sum(w)) == pytest.approx(float(np.linalg.norm(target) ** 2), abs=1e-12)


def _synthetic_levels(name, n, seed):
    rng = np.random.default_rng(seed)
    if name == "poisson":
        s = rng.exponential(1.0, n)
    elif name == "semi_poisson":
        s = rng.gamma(2.0, 0.5, n)
    elif name == "wigner_dyson":
        s = np.sqrt(-4.0 * np.log1p(-rng.random(n)) / np.pi)
    return np.cumsum(s)


@pytest.mark.parametrize("name", ["poisson", "semi_poisson", "wigner_dyson"])
def test_level_statistics_identifies_ensembles(name):
    levels = _synthetic_levels(name, 5000, seed=17)
    res = level_statistics(levels)
    assert res.ks_distances[name] < 0.03
    others = [v for k, v in res.ks_distances.items() if k != name]
    assert all(res.ks_distances[name] < v for v in others)
    assert res.mean_spacing == pytest.approx(1.0, rel=0.02)
    assert res.collapsed_levels == 0
    assert res.dropped_spacings <= 2


def test_level_statistics_collapses_degeneracies():
    levels = _synthetic_levels("semi_poisson", 3000, seed=8)
    doubled = np.sort(np.concatenate([levels, levels]))
    res_single = level_statistics(levels)
    res_double = level_statistics(doubled)
    assert res_double.collapsed_levels == 3000
    assert np.allclose(res_double.spacings, res_single.spacings)


def test_level_statistics_requires_enough_levels():
    with pytest.raises(ValueError):
        level_statistics(np.arange(400))


def test_spectrum_pairing_at_zero_field():
    # the uniform spin-flip product anticommutes with the flip sum and
    # commutes with translation and reflection, so inside one symmetry
    # block the squared model shows exact double degeneracies
    L = 14
    basis = ConstrainedBasis(L)
    h = build_pxp2(basis, ModelParameters(L=L, delta=0.0))
    s = find_sector(build_sectors(basis), 0, 1)
    e = np.sort(np.linalg.eigvalsh(project_operator(h, s)))
    span = e[-1] - e[0]
    gaps = np.diff(e)
    degenerate = int(np.sum(gaps < 1e-11 * span))
    assert degenerate > 0.3 * e.shape[0]


def test_reference_distributions():
    s = np.linspace(0.0, 20.0, 20001)
    for name in ("poisson", "wigner_dyson", "semi_poisson"):
        cdf = reference_spacing_cdf(name, s)
        pdf = reference_spacing_pdf(name, s)
        assert cdf[0] == pytest.approx(0.0)
        assert cdf[-1] == pytest.approx(1.0, abs=1e-6)
        assert np.trapezoid(pdf, s) == pytest.approx(1.0, abs=1e-4)
        assert np.trapezoid(pdf * s, s) == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(ValueError):
        reference_spacing_cdf("gue", s)
    with pytest.raises(ValueError):
        reference_spacing_pdf("gue", s)
