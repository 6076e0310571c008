"""Rydberg-blockade constrained spin-chain bases.

Configurations are bit patterns: bit i set means atom i is excited (n_i = 1).
The blockade forbids adjacent excitations, n_i n_{i+1} = 0, with the pair
(L-1, 0) also excluded for periodic chains.  Valid configurations are
enumerated in ascending integer order; printed strings put site 0 leftmost.

Dimension counts are Fibonacci numbers F(L+2) for open chains (F(1)=F(2)=1)
and Lucas numbers Lucas(L) for periodic chains (Lucas(1)=1, Lucas(2)=3).
"""

from enum import Enum
from typing import NamedTuple

import numpy as np

from .state import StateVector


class BoundaryCondition(str, Enum):
    OPEN = "open"
    PERIODIC = "periodic"


class SpinConfiguration(NamedTuple):
    bits: int
    length: int

    def __str__(self):
        return format(self.bits, f"0{self.length}b")[::-1]


def _check_length(L):
    if not (2 <= L <= 32):
        raise ValueError(f"chain length must satisfy 2 <= L <= 32, got {L}")


def is_valid(config, bc):
    """True if the configuration satisfies the blockade for the given bc."""
    bits, L = config.bits, config.length
    _check_length(L)
    if bits < 0 or bits >> L:
        raise ValueError("configuration bits exceed the chain length")
    if bits & (bits >> 1):
        return False
    if bc == BoundaryCondition.PERIODIC and L > 1:
        if (bits & 1) and (bits >> (L - 1)) & 1:
            return False
    return True


def dimension(L, bc):
    """Constrained dimension by integer recurrence (no enumeration)."""
    if L < 2:
        raise ValueError("need L >= 2")
    if bc == BoundaryCondition.OPEN:
        a, b = 1, 1  # F(1), F(2)
        for _ in range(L):
            a, b = b, a + b
        return b
    a, b = 1, 3  # Lucas(1), Lucas(2)
    if L == 1:
        return a
    for _ in range(L - 2):
        a, b = b, a + b
    return b


def _open_patterns(L):
    # grow the chain one site at a time, tracking the last occupied bit
    ending_0 = np.array([0], dtype=np.int64)
    ending_1 = np.array([1], dtype=np.int64)
    for n in range(1, L):
        ending_0, ending_1 = (
            np.concatenate([ending_0, ending_1]),
            ending_0 | np.int64(1 << n),
        )
    return np.sort(np.concatenate([ending_0, ending_1]))


def enumerate_states(L, bc):
    """All valid configurations as a sorted int64 array of bit patterns."""
    _check_length(L)
    pats = _open_patterns(L)
    if bc == BoundaryCondition.PERIODIC:
        wrap = (pats & 1).astype(bool) & ((pats >> (L - 1)) & 1).astype(bool)
        pats = pats[~wrap]
    return pats


class ConstrainedBasis:
    """Blockade-constrained basis for a chain of L atoms."""

    def __init__(self, L, bc=BoundaryCondition.PERIODIC):
        bc = BoundaryCondition(bc)
        self.L = L
        self.bc = bc
        self.states = enumerate_states(L, bc)
        self.dim = int(self.states.shape[0])
        self._caches = {}

    def __len__(self):
        return self.dim

    def __eq__(self, other):
        return (
            isinstance(other, ConstrainedBasis)
            and other.L == self.L
            and other.bc == self.bc
        )

    def __hash__(self):
        return hash((self.L, self.bc))

    def index(self, bits):
        """Position of a configuration in enumeration order."""
        m = int(np.searchsorted(self.states, bits))
        if m >= self.dim or self.states[m] != bits:
            raise KeyError(f"configuration {bits:#x} not in basis")
        return m

    def index_many(self, bits):
        """Vectorized index lookup; raises if any pattern is missing."""
        m = np.searchsorted(self.states, bits)
        if np.any(m >= self.dim) or np.any(self.states[np.minimum(m, self.dim - 1)] != bits):
            raise KeyError("configuration not in basis")
        return m

    def configuration(self, m):
        return SpinConfiguration(int(self.states[m]), self.L)

    def occupations(self):
        """(dim, L) float array of site occupation numbers; cached."""
        occ = self._caches.get("occ")
        if occ is None:
            occ = ((self.states[:, None] >> np.arange(self.L)[None, :]) & 1).astype(
                np.float64
            )
            self._caches["occ"] = occ
        return occ

    def dump(self, path):
        """One line per state: the L-character 0/1 string, site 0 leftmost."""
        with open(path, "w") as fh:
            for s in self.states:
                fh.write(format(int(s), f"0{self.L}b")[::-1] + "\n")


class FullBasis:
    """Unconstrained 2**L product basis (used by the collective-spin models)."""

    def __init__(self, L):
        if not (1 <= L <= 24):
            raise ValueError(f"full basis supports 1 <= L <= 24, got {L}")
        self.L = L
        self.bc = BoundaryCondition.PERIODIC
        self.dim = 1 << L

    def __eq__(self, other):
        return isinstance(other, FullBasis) and other.L == self.L

    def __hash__(self):
        return hash(("full", self.L))

    def index(self, bits):
        if bits < 0 or bits >> self.L:
            raise KeyError("configuration bits exceed the chain length")
        return bits


_PATTERN_PERIOD = {"Z2": 2, "Z2_shifted": 2, "Z3": 3, "Z4": 4}


def named_state(basis, name):
    """Product states used as quench initial conditions.

    vacuum       : no excitations
    Z2, Z3, Z4   : one excitation every 2/3/4 sites, site 0 excited
    Z2_shifted   : the Z2 pattern translated by one site
    all_excited  : every site excited (FullBasis only)
    """
    L = basis.L
    if name == "vacuum":
        bits = 0
    elif name == "all_excited":
        if not isinstance(basis, FullBasis):
            raise ValueError("all_excited violates the blockade on a constrained basis")
        bits = (1 << L) - 1
    elif name in _PATTERN_PERIOD:
        p = _PATTERN_PERIOD[name]
        if L % p:
            raise ValueError(f"{name} needs L divisible by {p}, got L={L}")
        shift = 1 if name == "Z2_shifted" else 0
        bits = 0
        for m in range(L // p):
            bits |= 1 << (m * p + shift)
    else:
        raise ValueError(f"unknown named state {name!r}")
    amps = np.zeros(basis.dim)
    amps[basis.index(bits)] = 1.0
    return StateVector(amps, basis)


def translate_bits(bits, L, steps=1):
    """Cyclic shift moving the excitation at site i to site i + steps."""
    steps %= L
    mask = (1 << L) - 1
    return ((bits << steps) | (bits >> (L - steps))) & mask


def reflect_bits(bits, L):
    """Site reflection i -> L - 1 - i."""
    out = 0
    for i in range(L):
        out |= ((bits >> i) & 1) << (L - 1 - i)
    return out
