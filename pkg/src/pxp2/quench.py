"""Quantum quenches: evolve a product state and track scar diagnostics.

A quench evolves a named density-wave (or vacuum) state under one of the
models and records, per grid time, the half-chain entanglement entropy in
bits, the return probability to the initial state, the energy, and (for
constrained models) density-density correlations averaged over the
initially excited sublattice.
"""

from dataclasses import dataclass, field

import numpy as np

from .basis import BoundaryCondition, ConstrainedBasis, FullBasis, named_state
from .errors import ResourceLimitError
from .observables import correlation, entanglement_entropy
from .operators import (
    ModelParameters,
    build_deformed,
    build_lmg,
    build_pxp2,
    build_sublattice_lmg,
    build_symmetry_breaking,
)
from .solvers import evolve, max_dim_override

LMG_SITE_LIMIT = 18

_SUBLATTICE_INITIAL = {"Z2": 2, "Z3": 3, "Z4": 4}


def default_time_grid(t_min=0.1, t_max=100.0, n=200):
    """Logarithmic grid in units of 1/J."""
    return np.geomspace(t_min, t_max, n)


@dataclass
class QuenchSpec:
    model: str  # pxp2 | deformed | lmg | sublattice_lmg
    params: ModelParameters
    initial: str = "Z2"
    times: np.ndarray = field(default_factory=default_time_grid)
    period: int = 2  # sublattice_lmg only
    krylov_dim: int = 30
    krylov_tol: float = 1e-9
    with_correlations: bool = True


@dataclass
class TimeSeries:
    times: np.ndarray
    columns: dict
    metadata: dict

    def column(self, name):
        return self.columns[name]


def _build_model(spec):
    p = spec.params
    if spec.model == "pxp2":
        basis = ConstrainedBasis(p.L, p.bc)
        op = build_pxp2(basis, p)
        if p.epsilon_break:
            op = type(op)(op.matrix + build_symmetry_breaking(basis, p.epsilon_break).matrix, basis)
        return basis, op
    if spec.model == "deformed":
        basis = ConstrainedBasis(p.L, p.bc)
        return basis, build_deformed(basis, p)
    if spec.model == "lmg":
        if p.L > LMG_SITE_LIMIT and not max_dim_override():
            raise ResourceLimitError("lmg_quench", p.L, LMG_SITE_LIMIT)
        op = build_lmg(p.L, p.delta)
        return op.basis, op
    if spec.model == "sublattice_lmg":
        op = build_sublattice_lmg(p.L, spec.period, p.delta)
        return op.basis, op
    raise ValueError(f"unknown model {spec.model!r}")


def _initial_state(spec, basis):
    if spec.model == "sublattice_lmg":
        if spec.initial == "vacuum":
            return named_state(basis, "vacuum")
        if spec.initial in _SUBLATTICE_INITIAL:
            if _SUBLATTICE_INITIAL[spec.initial] != spec.period:
                raise ValueError(
                    f"initial {spec.initial} does not match sublattice period {spec.period}"
                )
            # restricted to its occupied sublattice, a density wave is fully excited
            return named_state(basis, "all_excited")
        raise ValueError(f"unknown sublattice initial state {spec.initial!r}")
    return named_state(basis, spec.initial)


def _excited_sites(initial_name, L):
    if initial_name == "vacuum":
        return None  # average anchors over all sites
    period = _SUBLATTICE_INITIAL.get(initial_name, 2)
    shift = 1 if initial_name == "Z2_shifted" else 0
    return list(range(shift, L, period))


def run_quench(spec):
    """Evolve the quench and return the recorded TimeSeries."""
    basis, op = _build_model(spec)
    psi0 = _initial_state(spec, basis)
    snapshots = evolve(op, psi0, spec.times, spec.krylov_dim, spec.krylov_tol)

    entropy = np.empty(len(snapshots))
    fidelity = np.empty(len(snapshots))
    energy = np.empty(len(snapshots))
    constrained = isinstance(basis, ConstrainedBasis)
    want_corr = spec.with_correlations and constrained and basis.bc == BoundaryCondition.PERIODIC
    corr = np.empty((len(snapshots), basis.L // 2 + 1)) if want_corr else None
    anchors = _excited_sites(spec.initial, basis.L) if want_corr else None
    for m, psi in enumerate(snapshots):
        entropy[m] = entanglement_entropy(psi).entropy_bits
        fidelity[m] = abs(psi0.overlap(psi)) ** 2
        energy[m] = op.expectation(psi)
        if want_corr:
            corr[m] = correlation(psi, anchors)
    columns = {
        "entropy_bits": entropy,
        "return_probability": fidelity,
        "energy": energy,
    }
    if want_corr:
        for r in range(corr.shape[1]):
            columns[f"C_{r}"] = corr[:, r]
    p = spec.params
    metadata = {
        "model": spec.model,
        "L": p.L,
        "delta": p.delta,
        "bc": p.bc.value,
        "chi_drive": p.chi_drive,
        "epsilon_break": p.epsilon_break,
        "initial": spec.initial,
        "entropy_base": 2,
        "period": spec.period if spec.model == "sublattice_lmg" else "",
    }
    return TimeSeries(np.asarray(spec.times, dtype=float), columns, metadata)


def log_growth_fit(times, entropy, window=(1.0, 10.0)):
    """OLS fit entropy = a ln(t) + b inside the window; returns (a, b, r2)."""
    # t = 0 is a legal sample point; the window mask drops its -inf abscissa
    with np.errstate(divide="ignore"):
        x = np.log(times)
    return _fit(x, times, entropy, window)


def linear_growth_fit(times, entropy, window=(1.0, 10.0)):
    """OLS fit entropy = a t + b inside the window; returns (a, b, r2)."""
    return _fit(times, times, entropy, window)


def _fit(x_all, times, entropy, window):
    times = np.asarray(times, dtype=float)
    entropy = np.asarray(entropy, dtype=float)
    mask = (times >= window[0]) & (times <= window[1])
    if np.sum(mask) < 3:
        raise ValueError("fit window must contain at least 3 grid points")
    x = x_all[mask]
    y = entropy[mask]
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    # a flat series (variance at rounding level) is fit perfectly by slope 0
    if ss_tot <= 1e-20 * (1.0 + float(np.max(np.abs(y))) ** 2):
        return float(a), float(b), 1.0
    return float(a), float(b), 1.0 - ss_res / ss_tot


def growth_rate_scan(
    model,
    L,
    delta_list,
    initial="Z2",
    window=(1.0, 10.0),
    chi_drive=1.0,
    times=None,
    krylov_tol=1e-9,
):
    """Entropy growth rate (slope vs ln t) per detuning; returns (rates, argmax delta).

    rates is a list of (delta, rate) in the order given.
    """
    if times is None:
        times = np.geomspace(window[0] / 2.0, window[1], 48)
    rates = []
    for delta in delta_list:
        params = ModelParameters(L=L, delta=float(delta), chi_drive=chi_drive)
        spec = QuenchSpec(
            model=model,
            params=params,
            initial=initial,
            times=times,
            krylov_tol=krylov_tol,
            with_correlations=False,
        )
        series = run_quench(spec)
        rate, _, _ = log_growth_fit(series.times, series.column("entropy_bits"), window)
        rates.append((float(delta), rate))
    best = max(rates, key=lambda pair: pair[1])
    return rates, best[0]
