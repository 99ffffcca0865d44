"""Discrete momentum lattice of a rectangular cavity with Dirichlet walls.

Modes are labelled by integer triples (n1, n2, n3), n_i >= 1, with wavenumbers
k_i = n_i*pi/L_i and massless dispersion omega = |k|.  The lattice also owns
the momentum-space Riemann measure dk, which distinguishes Dirac-normalised
field modes ([a, a'] = delta/dk) from Kronecker-normalised optics modes
(dk = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

# Normalisation conventions for the ladder-operator commutators.
FIELD = "field"    # Dirac-delta normalised, dk = prod_i(pi / L_i)
OPTICS = "optics"  # Kronecker normalised, dk = 1

_CONVENTIONS = (FIELD, OPTICS)


@dataclass(frozen=True)
class CavitySpec:
    """Rectangular cavity: side lengths and a per-axis mode cutoff."""

    lengths: tuple[float, float, float]
    nmax: int

    def __post_init__(self):
        if len(self.lengths) != 3:
            raise ValueError("cavity needs exactly three side lengths")
        if any(not (length > 0.0) for length in self.lengths):
            raise ValueError(f"cavity lengths must be positive, got {self.lengths}")
        if self.nmax < 1:
            raise ValueError(f"nmax must be >= 1, got {self.nmax}")

    @property
    def volume(self) -> float:
        l1, l2, l3 = self.lengths
        return l1 * l2 * l3


def mode_frequency(k: tuple[float, float, float]) -> float:
    """Massless dispersion: omega = |k| for a wavenumber triple."""
    return math.sqrt(k[0] ** 2 + k[1] ** 2 + k[2] ** 2)


@dataclass(frozen=True)
class Mode:
    """A single cavity mode; n_i >= 1 (Dirichlet modes start at n = 1)."""

    n: tuple[int, int, int]
    k: tuple[float, float, float]
    frequency: float

    def __post_init__(self):
        if any(ni < 1 for ni in self.n):
            raise ValueError(f"mode indices must satisfy n_i >= 1, got {self.n}")


@dataclass(frozen=True)
class ModeLattice:
    """All modes of a cavity up to the cutoff, in lexicographic (n1,n2,n3) order.

    Immutable after construction; the arrays are marked read-only so a lattice
    can be shared freely across parallel workers.  Heavy consumers use the
    per-axis wavenumbers and the flat ``omega`` array; ``mode(i)`` materialises
    a single Mode for desk-scale inspection.
    """

    spec: CavitySpec
    convention: str
    dk: float
    axis_wavenumbers: tuple[np.ndarray, np.ndarray, np.ndarray]
    omega: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.spec.nmax ** 3

    def mode_indices(self, i: int) -> tuple[int, int, int]:
        nmax = self.spec.nmax
        if not 0 <= i < nmax ** 3:
            raise IndexError(i)
        n1, rem = divmod(i, nmax * nmax)
        n2, n3 = divmod(rem, nmax)
        return (n1 + 1, n2 + 1, n3 + 1)

    def mode(self, i: int) -> Mode:
        n = self.mode_indices(i)
        k = tuple(self.axis_wavenumbers[ax][n[ax] - 1] for ax in range(3))
        return Mode(n=n, k=k, frequency=float(self.omega[i]))

    def modes(self) -> Iterator[Mode]:
        return (self.mode(i) for i in range(self.size))

    def k_column(self, axis: int) -> np.ndarray:
        """Flat array of the axis-``axis`` wavenumber of every mode."""
        nmax = self.spec.nmax
        shape = [1, 1, 1]
        shape[axis] = nmax
        col = np.broadcast_to(
            self.axis_wavenumbers[axis].reshape(shape), (nmax, nmax, nmax)
        )
        return col.ravel().copy()


def build_lattice(spec: CavitySpec, convention: str = FIELD) -> ModeLattice:
    """Construct the mode lattice for a cavity.

    dk = prod_i(pi / L_i) = pi^3 / V for the field convention (the 3D Riemann
    cell of the k-lattice), and exactly 1 for the optics convention.
    """
    if convention not in _CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; expected one of {_CONVENTIONS}")

    axes = tuple(
        np.arange(1, spec.nmax + 1, dtype=np.float64) * (math.pi / length)
        for length in spec.lengths
    )
    k1, k2, k3 = axes
    omega = np.sqrt(
        k1[:, None, None] ** 2 + k2[None, :, None] ** 2 + k3[None, None, :] ** 2
    ).ravel()

    if convention == FIELD:
        dk = math.pi ** 3 / spec.volume
    else:
        dk = 1.0

    for arr in (*axes, omega):
        arr.setflags(write=False)
    return ModeLattice(
        spec=spec, convention=convention, dk=dk, axis_wavenumbers=axes, omega=omega
    )
