"""Soft-spin field theory of the paramagnetic phase.

The quadratic theory has dispersion

    omega_k = 2 sqrt(r (r - chi - lam cos k - J delta_{k,0})),  r = 2 delta,

with momenta k = 2 pi n / L, n in (-L/2, L/2].  The multipliers enforce the
unit-spin-length and blockade constraints

    (1/L) sum_k r / omega_k = 1,      (1/L) sum_k cos k / omega_k = 0,

and are found by a damped Newton iteration with the analytic Jacobian.  Far
inside the paramagnet the closed forms chi ~ (3/2) delta and
lam ~ -(2 delta / L) (sqrt(delta / (delta - 2 J)) - 1) hold, and the k-sum
gap approaches the spin gap r = 2 delta.  Toward the ordered phase the
k = 0 mode softens (at finite L the solver follows it below delta = 2 J)
until the dispersion leaves the real domain, which raises
SoftSpinDomainError with the last iterate attached.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, SoftSpinDomainError


@dataclass
class SoftSpinSolution:
    delta: float
    coupling: float  # cavity-mediated J
    L: int
    r: float
    chi_constraint: float
    lam: float
    residual: float
    iterations: int


@dataclass
class DispersionResult:
    momenta: np.ndarray  # 2 pi n / L, n ascending in (-L/2, L/2]
    omega: np.ndarray


def momentum_grid(L):
    n = np.arange(-((L - 1) // 2), L // 2 + 1)
    return 2.0 * np.pi * n / L


def closed_form_multipliers(delta, coupling, L):
    """Deep-paramagnet asymptotics; needs delta > 2 * coupling."""
    if delta <= 2.0 * coupling:
        raise SoftSpinDomainError(
            f"closed forms need delta > 2 J, got delta={delta}, J={coupling}"
        )
    chi = 1.5 * delta
    lam = -(2.0 * delta / L) * (np.sqrt(delta / (delta - 2.0 * coupling)) - 1.0)
    return chi, lam


def _omega_sq(r, chi, lam, coupling, cos_k, k_is_zero):
    u = r - chi - lam * cos_k - coupling * k_is_zero
    return 4.0 * r * u


def solve_constraints(delta, coupling=1.0, L=24, tol=1e-12, max_iter=200):
    """Multipliers (chi, lam) satisfying both constraint sums.

    Raises SoftSpinDomainError when the dispersion leaves the real domain
    (the breakdown as delta -> 2 J) and ConvergenceError when damping
    cannot reduce the residual.
    """
    if delta <= 0:
        raise ValueError("soft-spin theory is solved in the paramagnet, delta > 0")
    if L % 2 or L < 4:
        raise ValueError("momentum grid needs an even chain length L >= 4")
    r = 2.0 * delta
    k = momentum_grid(L)
    cos_k = np.cos(k)
    k_is_zero = (np.abs(k) < 1e-14).astype(np.float64)

    if delta > 2.0 * coupling:
        chi, lam = closed_form_multipliers(delta, coupling, L)
    else:
        chi, lam = 0.75 * r - 0.5 * coupling, -r / (2.0 * L)

    def residuals(chi, lam):
        w2 = _omega_sq(r, chi, lam, coupling, cos_k, k_is_zero)
        if np.any(w2 <= 0):
            return None, None
        w = 2.0 * np.sqrt(r * (r - chi - lam * cos_k - coupling * k_is_zero))
        g1 = np.mean(r / w) - 1.0
        g2 = np.mean(cos_k / w)
        return np.array([g1, g2]), w

    g, w = residuals(chi, lam)
    if g is None:
        raise SoftSpinDomainError(
            f"dispersion not real at the starting point (delta={delta}, J={coupling}); "
            "the quadratic theory has broken down",
            chi=chi,
            lam=lam,
        )
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) <= tol:
            return SoftSpinSolution(
                delta, coupling, L, r, chi, lam, float(np.max(np.abs(g))), it - 1
            )
        w3 = w**3
        j11 = np.mean(2.0 * r * r / w3)
        j12 = np.mean(2.0 * r * r * cos_k / w3)
        j21 = np.mean(2.0 * r * cos_k / w3)
        j22 = np.mean(2.0 * r * cos_k * cos_k / w3)
        jac = np.array([[j11, j12], [j21, j22]])
        try:
            step = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Jacobian at iteration {it}") from exc
        lam_factor = 1.0
        while lam_factor > 2.0**-40:
            g_new, w_new = residuals(chi + lam_factor * step[0], lam + lam_factor * step[1])
            if g_new is not None and np.max(np.abs(g_new)) < np.max(np.abs(g)):
                chi += lam_factor * step[0]
                lam += lam_factor * step[1]
                g, w = g_new, w_new
                break
            lam_factor *= 0.5
        else:
            raise SoftSpinDomainError(
                "damped Newton step stalled at the edge of the real domain "
                f"(delta={delta}, J={coupling}, residual={np.max(np.abs(g)):.3e}); "
                "likely too close to the delta = 2 J breakdown",
                chi=chi,
                lam=lam,
            )
    raise ConvergenceError(
        f"constraint solve did not converge in {max_iter} iterations "
        f"(residual {np.max(np.abs(g)):.3e})",
        residual=float(np.max(np.abs(g))),
    )


def dispersion(solution):
    """omega_k on the momentum grid of the solved system."""
    k = momentum_grid(solution.L)
    cos_k = np.cos(k)
    k_is_zero = (np.abs(k) < 1e-14).astype(np.float64)
    w2 = _omega_sq(
        solution.r, solution.chi_constraint, solution.lam, solution.coupling, cos_k, k_is_zero
    )
    if np.any(w2 <= 0):
        raise SoftSpinDomainError("dispersion not real for these multipliers")
    return DispersionResult(k, np.sqrt(w2))


def bandwidth(result):
    """Spread of omega_k over k != 0 (the cavity-shifted k = 0 mode excluded)."""
    away = np.abs(result.momenta) > 1e-14
    return float(np.max(result.omega[away]) - np.min(result.omega[away]))


def resonance_prediction():
    """Magnon-pair resonance: epsilon_1 = -1 gives delta_res = -1/2.

    The lowest magnon of the spin-conserving XY part sits at epsilon_1 = -1;
    creating a resonant pair balances its energy 2 epsilon_1 against the
    longitudinal-field cost 4 delta of two flips, so delta_res = epsilon_1 / 2.
    """
    epsilon_1 = -1.0
    delta_res = epsilon_1 / 2.0
    return epsilon_1, delta_res
