"""Brute-force truncated-Fock-space oracle for desk-scale validation.

Everything here works with at most 3 modes and a per-mode occupation cutoff.
States are dense vectors over the occupation basis; unitaries are applied via
dense eigendecomposition of the (Hermitian) Hamiltonian matrix.  Slowness is
the point: no step of the production engine is reused, so agreement is
evidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .engine import QuadraticGenerator

_DIMENSION_GUARD = 1_000_000


@dataclass(frozen=True)
class TruncatedFockSpace:
    """Occupation-basis space for up to 3 modes with cutoff nmax per mode.

    Ladder operators are the unit-normalised b with [b, b'] = 1; the physical
    Dirac-normalised operators are a = b / sqrt(dk), so [a, a'] = 1/dk on the
    untruncated block.
    """

    num_modes: int
    nmax: int
    dk: float
    omega: np.ndarray | None = None
    lowering: tuple = field(init=False, repr=False)
    occupations: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 1 <= self.num_modes <= 3:
            raise ValueError("oracle supports 1 to 3 modes")
        if self.nmax < 1:
            raise ValueError("nmax must be >= 1")
        if self.dimension > _DIMENSION_GUARD:
            raise ValueError(
                f"truncated space dimension {self.dimension} exceeds guard {_DIMENSION_GUARD}"
            )
        if self.omega is not None:
            omega = np.asarray(self.omega, dtype=float)
            if omega.shape != (self.num_modes,):
                raise ValueError("omega must have one frequency per mode")
            object.__setattr__(self, "omega", omega)
        single = sp.diags(np.sqrt(np.arange(1, self.nmax + 1)), offsets=1, format="csr")
        eye = sp.identity(self.nmax + 1, format="csr")
        ops = []
        for j in range(self.num_modes):
            factors = [single if i == j else eye for i in range(self.num_modes)]
            op = factors[0]
            for f in factors[1:]:
                op = sp.kron(op, f, format="csr")
            ops.append(op)
        object.__setattr__(self, "lowering", tuple(ops))
        grids = np.meshgrid(*([np.arange(self.nmax + 1)] * self.num_modes), indexing="ij")
        occ = np.stack([g.ravel() for g in grids], axis=1)
        occ.setflags(write=False)
        object.__setattr__(self, "occupations", occ)

    @property
    def dimension(self) -> int:
        return (self.nmax + 1) ** self.num_modes

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dimension, dtype=complex)
        v[0] = 1.0
        return v

    def with_nmax(self, nmax: int) -> "TruncatedFockSpace":
        return TruncatedFockSpace(num_modes=self.num_modes, nmax=nmax, dk=self.dk, omega=self.omega)


def build_hamiltonian(gen: QuadraticGenerator, space: TruncatedFockSpace) -> np.ndarray:
    """Dense matrix of the normal-ordered quadratic generator.

    In unit-normalised ladder operators the dk^2-weighted mode sums collapse to
    h = dk (b.A.b + 2 b'.B.b + b'.conj(A).b'), Hermitian by construction.
    """
    if gen.size != space.num_modes:
        raise ValueError("generator and space mode counts differ")
    n = space.num_modes
    dim = space.dimension
    h = sp.csr_matrix((dim, dim), dtype=complex)
    bs = space.lowering
    for i in range(n):
        for j in range(n):
            if gen.a[i, j] != 0.0:
                down = bs[i] @ bs[j]
                h = h + gen.a[i, j] * down
                h = h + gen.a[i, j].conjugate() * down.conj().T
            if gen.b[i, j] != 0.0:
                h = h + 2.0 * gen.b[i, j] * (bs[i].conj().T @ bs[j])
    h = gen.dk * h.toarray()
    assert np.abs(h - h.conj().T).max() == 0.0 or np.abs(h - h.conj().T).max() < 1e-14 * (
        1.0 + np.abs(h).max()
    )
    return h


def _evolve(gen: QuadraticGenerator, lam: float, space: TruncatedFockSpace, vec: np.ndarray) -> np.ndarray:
    h = build_hamiltonian(gen, space)
    w, u = np.linalg.eigh(h)
    return u @ (np.exp(-1j * lam * w) * (u.conj().T @ vec))


def oracle_state(gen: QuadraticGenerator, lam: float, space: TruncatedFockSpace) -> np.ndarray:
    """exp(-i lam h)|0> as a dense vector."""
    return _evolve(gen, lam, space, space.vacuum())


def oracle_vacuum_amplitude(
    gen: QuadraticGenerator,
    lam: float,
    space: TruncatedFockSpace,
    check_convergence: bool = True,
) -> tuple[complex, float]:
    """<0| exp(-i lam h) |0> with a truncation-convergence estimate.

    Returns (value, delta) where delta is the change when nmax is doubled;
    with ``check_convergence=False`` delta is nan and only one evaluation runs.
    """
    value = complex(oracle_state(gen, lam, space)[0])
    if not check_convergence:
        return value, float("nan")
    doubled = complex(oracle_state(gen, lam, space.with_nmax(2 * space.nmax))[0])
    return value, abs(doubled - value)


def free_evolution_phases(space: TruncatedFockSpace, t: float) -> np.ndarray:
    """Diagonal of exp(-i t H_free) over the occupation basis."""
    if space.omega is None:
        raise ValueError("space has no mode frequencies")
    energies = space.occupations @ space.omega
    return np.exp(-1j * t * energies)


def oracle_product_amplitude(
    sequence,
    space: TruncatedFockSpace,
) -> complex:
    """<0| S_m(lam_m; t_m) ... S_1(lam_1; t_1) |0> applied state-by-state.

    Entries are (generator, coupling, kick time), first applied first; a kick
    at time t acts as U(-t) S U(t) so the whole product is evaluated at t = 0.
    """
    vec = space.vacuum()
    for gen, lam, t in sequence:
        if t != 0.0:
            vec = free_evolution_phases(space, t) * vec
        vec = _evolve(gen, lam, space, vec)
        if t != 0.0:
            vec = free_evolution_phases(space, -t) * vec
    return complex(np.vdot(space.vacuum(), vec))


def oracle_nullifier_residual(state: np.ndarray, k: np.ndarray, space: TruncatedFockSpace) -> float:
    """Relative residual of the nullifier rows applied to a state vector.

    max_j || (a_j - dk (K a')_j) |state> || / || |state> || with a = b/sqrt(dk).
    """
    norm = np.linalg.norm(state)
    worst = 0.0
    scale = 1.0 / np.sqrt(space.dk)
    for j in range(space.num_modes):
        op = space.lowering[j].astype(complex)
        for m in range(space.num_modes):
            if k[j, m] != 0.0:
                op = op - space.dk * k[j, m] * space.lowering[m].conj().T
        worst = max(worst, np.linalg.norm(scale * (op @ state)))
    return worst / norm


def oracle_overlap(sv1: np.ndarray, sv2: np.ndarray) -> complex:
    """Plain inner product of two state vectors."""
    return complex(np.vdot(sv1, sv2))


def fock_gaussian_ket(k: np.ndarray, d: complex, space: TruncatedFockSpace) -> np.ndarray:
    """e^D exp(dk^2 a'.K.a'/2)|0> expanded on the truncated basis.

    The exponent is dk b'.K.b'/2 in unit-normalised operators; the series
    terminates once the cutoff truncates every term.
    """
    dim = space.dimension
    up = sp.csr_matrix((dim, dim), dtype=complex)
    for i in range(space.num_modes):
        for j in range(space.num_modes):
            if k[i, j] != 0.0:
                up = up + (0.5 * space.dk * k[i, j]) * (
                    space.lowering[i].conj().T @ space.lowering[j].conj().T
                )
    vec = space.vacuum()
    term = vec.copy()
    for order in range(1, space.nmax + 2):
        term = up @ term / order
        if np.linalg.norm(term) == 0.0:
            break
        vec = vec + term
    return np.exp(d) * vec
