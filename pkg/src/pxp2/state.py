"""State vectors tagged with the basis they live in."""

import numpy as np


class StateVector:
    """Amplitude vector over a known basis.

    Parameters
    ----------
    amps : array_like
        Amplitudes in basis enumeration order (real or complex).
    basis : object
        The basis the amplitudes refer to (ConstrainedBasis or FullBasis).
    normalize : bool
        Rescale to unit norm instead of requiring it.
    """

    def __init__(self, amps, basis, normalize=False):
        amps = np.asarray(amps)
        if amps.ndim != 1 or amps.shape[0] != basis.dim:
            raise ValueError(f"amplitude vector must have length {basis.dim}")
        if not np.iscomplexobj(amps):
            amps = amps.astype(np.float64)
        nrm = np.linalg.norm(amps)
        if normalize:
            if nrm == 0.0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / nrm
        elif abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"state vector norm {nrm!r} deviates from 1 beyond 1e-10")
        self.amps = amps
        self.basis = basis

    @property
    def dim(self):
        return self.amps.shape[0]

    def norm(self):
        return float(np.linalg.norm(self.amps))

    def overlap(self, other):
        """<self|other>; bases must match."""
        if other.basis is not self.basis and other.basis != self.basis:
            raise ValueError("overlap requires matching bases")
        return complex(np.vdot(self.amps, other.amps))

    def probabilities(self):
        return np.abs(self.amps) ** 2

    def copy(self):
        return StateVector(self.amps.copy(), self.basis)
