"""Coupling matrices of a smeared quadratic detector.

A detector with position-space kernels F, G, P couples to :phi phi:,
:(pi phi + phi pi): and :pi pi: respectively.  Projected on cavity modes the
kernels become the matrices

    F_kk' =  4/(pi^3 sqrt(w w')) * Int F(x,y) prod_i sin(k_i x_i) sin(k'_i y_i)
    G_kk' = -4/pi^3 * sqrt(w'/w)  * Int G(x,y) ...
    P_kk' =  4 sqrt(w w')/pi^3    * Int P(x,y) ...

from which the generator matrices are assembled as

    A = F + iG + iG^T - P   (complex symmetric, multiplies a a)
    B = F + iG - iG^T + P   (Hermitian, multiplies a' a)

Only sums of separable Gaussian kernels F(x,y) = f(x) f(y) are supported; each
separable term contributes a rank-one slice built from per-axis sine-Gaussian
integrals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .lattice import ModeLattice

# Analytic infinite-domain value of the 1D integral is used once the Gaussian
# sits at least this many widths away from both walls.
_ANALYTIC_WALL_FACTOR = 6.0


@dataclass(frozen=True)
class GaussianSmearing:
    """Isotropic Gaussian detector profile f(x) = strength * N(x; center, sigma^2).

    The pair kernel is F(x,y) = f(x) f(y); with strength 1 this reproduces the
    1/((2 pi)^3 sigma^6) pair normalisation.
    """

    center: tuple[float, float, float]
    sigma: float
    strength: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if len(self.center) != 3:
            raise ValueError("center must be a triple")

    def validate_inside(self, lengths: Sequence[float]) -> None:
        for a, length in zip(self.center, lengths):
            if not 0.0 < a < length:
                raise ValueError(
                    f"smearing center {self.center} is not strictly inside the cavity"
                )

    def wall_clearance(self, lengths: Sequence[float]) -> float:
        return min(min(a, length - a) for a, length in zip(self.center, lengths))


@dataclass(frozen=True)
class GeneratorMatrices:
    """The (A, B) pair defining a quadratic generator."""

    a: np.ndarray
    b: np.ndarray


def sine_gaussian_integral(k: float, a: float, sigma: float, length: float) -> float:
    """Integral of sin(k x) times a unit-normalised Gaussian over the cavity axis.

    When the Gaussian is narrow compared to its wall clearance the domain can
    be extended to the whole line, giving sin(k a) exp(-k^2 sigma^2 / 2);
    otherwise adaptive quadrature on [0, L] is used.
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not 0.0 < a < length:
        raise ValueError(f"center {a} is outside the open interval (0, {length})")

    if sigma * _ANALYTIC_WALL_FACTOR <= min(a, length - a):
        return math.sin(k * a) * math.exp(-(k * sigma) ** 2 / 2.0)

    norm = 1.0 / (math.sqrt(2.0 * math.pi) * sigma)

    def integrand(x):
        return math.sin(k * x) * norm * math.exp(-((x - a) ** 2) / (2.0 * sigma ** 2))

    value, _ = quad(integrand, 0.0, length, epsabs=1e-12, epsrel=1e-12, limit=200)
    return value


def axis_integrals(smearing: GaussianSmearing, lattice: ModeLattice, axis: int) -> np.ndarray:
    """1D sine-Gaussian integrals for every mode index along one axis."""
    ks = lattice.axis_wavenumbers[axis]
    a = smearing.center[axis]
    length = lattice.spec.lengths[axis]
    if smearing.sigma * _ANALYTIC_WALL_FACTOR <= min(a, length - a):
        return np.sin(ks * a) * np.exp(-((ks * smearing.sigma) ** 2) / 2.0)
    return np.array(
        [sine_gaussian_integral(k, a, smearing.sigma, length) for k in ks]
    )


def _warn_if_near_walls(smearing: GaussianSmearing, lattice: ModeLattice) -> None:
    smearing.validate_inside(lattice.spec.lengths)
    if smearing.wall_clearance(lattice.spec.lengths) < _ANALYTIC_WALL_FACTOR * smearing.sigma:
        warnings.warn(
            "smearing support reaches the cavity walls; far-from-walls "
            "assumptions degrade and the quadrature path is used",
            stacklevel=3,
        )


def smearing_vector(smearing: GaussianSmearing, lattice: ModeLattice) -> np.ndarray:
    """Rank-one factor v with F = v v^T for a separable kernel.

    v_k = strength * (2/pi^(3/2)) * omega^(-1/2) * prod_i I_1d(k_i)
    """
    _warn_if_near_walls(smearing, lattice)
    i1, i2, i3 = (axis_integrals(smearing, lattice, ax) for ax in range(3))
    prod = (i1[:, None, None] * i2[None, :, None] * i3[None, None, :]).ravel()
    return smearing.strength * (2.0 / math.pi ** 1.5) * prod / np.sqrt(lattice.omega)


def _as_terms(smearings) -> list[GaussianSmearing]:
    if isinstance(smearings, GaussianSmearing):
        return [smearings]
    return list(smearings)


def f_matrix(smearings, lattice: ModeLattice) -> np.ndarray:
    """Dense position-position coupling matrix, sum of rank-one separable terms."""
    mat = np.zeros((lattice.size, lattice.size))
    for term in _as_terms(smearings):
        v = smearing_vector(term, lattice)
        mat += np.outer(v, v)
    return mat


def g_matrix(smearings, lattice: ModeLattice) -> np.ndarray:
    """Dense mixed phi-pi coupling matrix; weight -(4/pi^3) sqrt(w'/w)."""
    mat = np.zeros((lattice.size, lattice.size))
    for term in _as_terms(smearings):
        v = smearing_vector(term, lattice)
        mat -= np.outer(v, lattice.omega * v)
    return mat


def p_matrix(smearings, lattice: ModeLattice) -> np.ndarray:
    """Dense momentum-momentum coupling matrix; weight (4/pi^3) sqrt(w w')."""
    mat = np.zeros((lattice.size, lattice.size))
    for term in _as_terms(smearings):
        v = lattice.omega * smearing_vector(term, lattice)
        mat += np.outer(v, v)
    return mat


def build_generator(
    f: np.ndarray | None = None,
    g: np.ndarray | None = None,
    p: np.ndarray | None = None,
) -> GeneratorMatrices:
    """Assemble (A, B) from the coupling matrices.

    F and P must be symmetric (symmetric position kernels); G may be any real
    matrix.  The output satisfies A = A^T and B = B^dagger by construction, and
    both are verified to machine precision.
    """
    mats = [m for m in (f, g, p) if m is not None]
    if not mats:
        raise ValueError("at least one of f, g, p is required")
    n = mats[0].shape[0]
    for m in mats:
        if m.shape != (n, n):
            raise ValueError(f"shape mismatch: {m.shape} != {(n, n)}")
    zero = np.zeros((n, n))
    f = zero if f is None else np.asarray(f)
    g = zero if g is None else np.asarray(g)
    p = zero if p is None else np.asarray(p)
    for name, m in (("f", f), ("p", p)):
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-13 * (1.0 + np.abs(m).max())):
            raise ValueError(f"{name} matrix must be symmetric")

    a = f + 1j * g + 1j * g.T - p
    b = f + 1j * g - 1j * g.T + p
    scale = 1.0 + max(np.abs(a).max(), np.abs(b).max())
    if np.abs(a - a.T).max() > 1e-12 * scale:
        raise AssertionError("assembled A is not symmetric")
    if np.abs(b - b.conj().T).max() > 1e-12 * scale:
        raise AssertionError("assembled B is not Hermitian")
    return GeneratorMatrices(a=a, b=b)
