import numpy as np
import pytest

from pxp2 import (
    ConstrainedBasis,
    ConvergenceError,
    ModelParameters,
    ResourceLimitError,
    SparseOperator,
    StateVector,
    StiffnessError,
    build_pxp2,
    evolve,
    full_spectrum,
    ground_state,
    named_state,
)


def _model(L, delta):
    basis = ConstrainedBasis(L)
    return basis, build_pxp2(basis, ModelParameters(L=L, delta=delta))


def test_ground_state_matches_dense():
    basis, h = _model(10, 0.3)
    dense = np.linalg.eigvalsh(h.to_dense())
    energy, state = ground_state(h)
    assert abs(energy - dense[0]) < 1e-10
    resid = np.linalg.norm(h.matvec(state.amps) - energy * state.amps)
    assert resid <= 1e-9


@pytest.mark.parametrize("delta", [0.0, -0.5, 1.2])
def test_ground_energy_various_fields(delta):
    basis, h = _model(12, delta)
    dense = np.linalg.eigvalsh(h.to_dense())
    energy, _ = ground_state(h)
    assert abs(energy - dense[0]) < 1e-9


def test_symmetric_branch_in_ordered_phase():
    # uniform start vector keeps translation symmetry, so deep in the
    # density-wave phase the solver returns the cat combination
    basis, h = _model(10, -3.0)
    energy, state = ground_state(h)
    z2 = named_state(basis, "Z2")
    z2s = named_state(basis, "Z2_shifted")
    a = state.overlap(z2)
    b = state.overlap(z2s)
    assert abs(a - b) < 1e-8
    assert abs(a) ** 2 + abs(b) ** 2 > 0.85


def test_explicit_start_vector():
    basis, h = _model(8, -0.4)
    rng = np.random.default_rng(3)
    v0 = rng.standard_normal(basis.dim)
    e_default, _ = ground_state(h)
    e_custom, _ = ground_state(h, v0=v0)
    assert abs(e_default - e_custom) < 1e-9
    with pytest.raises(ValueError):
        ground_state(h, v0=np.zeros(basis.dim))


def test_convergence_error_carries_residual():
    basis, h = _model(12, 0.0)
    with pytest.raises(ConvergenceError) as exc:
        ground_state(h, tol=1e-14, max_iter=3)
    assert exc.value.residual > 1e-14


def test_full_spectrum_matches_eigh_and_guards(monkeypatch):
    basis, h = _model(6, 0.5)
    ref_e, ref_v = np.linalg.eigh(h.to_dense())
    eig = full_spectrum(h)
    assert np.allclose(eig.energies, ref_e, atol=1e-12)
    assert eig.vectors.shape == (basis.dim, basis.dim)

    with pytest.raises(ResourceLimitError) as exc:
        full_spectrum(h, limit=10)
    assert "PXP2_MAX_DIM" in str(exc.value)

    monkeypatch.setenv("PXP2_MAX_DIM", "10")
    with pytest.raises(ResourceLimitError):
        full_spectrum(np.eye(18))
    monkeypatch.setenv("PXP2_MAX_DIM", "50")
    full_spectrum(np.eye(18))


def test_evolve_matches_dense_propagator():
    basis, h = _model(10, -0.2)
    psi0 = named_state(basis, "Z2")
    times = np.array([0.0, 0.5, 3.0, 10.0])
    snaps = evolve(h, psi0, times, tol=1e-10)

    e, v = np.linalg.eigh(h.to_dense())
    coeff = v.conj().T @ psi0.amps
    for t, snap in zip(times, snaps):
        exact = v @ (np.exp(-1j * e * t) * coeff)
        assert np.linalg.norm(snap.amps - exact) < 1e-7


def test_evolve_snapshot_at_zero_is_initial():
    basis, h = _model(8, 0.1)
    psi0 = named_state(basis, "vacuum")
    (snap,) = evolve(h, psi0, [0.0])
    assert np.linalg.norm(snap.amps - psi0.amps) < 1e-14


def test_evolve_conserves_norm_and_energy():
    basis, h = _model(12, -0.6)
    psi0 = named_state(basis, "Z2")
    snaps = evolve(h, psi0, np.linspace(0.0, 20.0, 9), tol=1e-9)
    e0 = h.expectation(psi0)
    for snap in snaps:
        assert abs(snap.norm() - 1.0) < 1e-8
        assert abs(h.expectation(snap) - e0) < 1e-7


def test_evolve_grid_validation():
    basis, h = _model(6, 0.0)
    psi0 = named_state(basis, "vacuum")
    with pytest.raises(ValueError):
        evolve(h, psi0, [])
    with pytest.raises(ValueError):
        evolve(h, psi0, [1.0, 0.5])
    with pytest.raises(ValueError):
        evolve(h, psi0, [-1.0, 0.5])


def test_evolve_guard_override(monkeypatch):
    basis, h = _model(6, 0.0)
    psi0 = named_state(basis, "vacuum")
    monkeypatch.setenv("PXP2_MAX_DIM", "10")
    with pytest.raises(ResourceLimitError):
        evolve(h, psi0, [0.1])
    monkeypatch.setenv("PXP2_MAX_DIM", "100")
    evolve(h, psi0, [0.1])


def test_stiffness_error_on_extreme_scale():
    basis, h = _model(8, 0.0)
    blown = SparseOperator(h.matrix * 1e18, basis)
    psi0 = named_state(basis, "Z2")
    with pytest.raises(StiffnessError):
        evolve(blown, psi0, [1.0], krylov_dim=8)


def test_evolve_plain_array_input():
    basis, h = _model(6, 0.2)
    psi0 = named_state(basis, "Z2")
    snaps = evolve(h, psi0.amps, [0.7])
    ref = evolve(h, psi0, [0.7])
    assert np.linalg.norm(snaps[0].amps - ref[0].amps) < 1e-12
