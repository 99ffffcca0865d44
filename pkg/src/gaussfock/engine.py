"""Core Gaussian-state algebra: nullifier K, phase D, products, overlaps.

A quadratic generator

    h = dk^2 sum_{kk'} [ A_kk' a_k a_k' + 2 B_kk' a'_k a_k' + conj(A)_kk' a'_k a'_k' ]

acting on Dirac-normalised modes ([a, a'] = 1/dk) produces zero-mean Gaussian
states exp(-i lam h)|0> = e^D exp(dk^2 a'.K.a'/2)|0>.  Conjugating the ladder
operators through the unitary mixes (a, a') with the 2Nx2N exponential of

    M = [[-B, -conj(A)], [A, conj(B)]],

so the nullifier rows are (G1 G2) = (I 0) exp(-2i lam dk M) and
K = -G1^{-1} G2 / dk.  The complex log-amplitude D (the piece the nullifier
cannot see) follows from the ODE

    D' = c - (dk^2/2) Tr([Gamma - i Xi - i Sigma - Psi] K'),

where the bracket collects blocks of the inverse of the Gaussian-integral
kernel built from K (see ``aleph_inverse``) and c is a constant source that
vanishes for a single factor but not inside products of unitaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import DegenerateStateError, NumericalError
from .lattice import ModeLattice

ODE_RTOL = 1e-10
ODE_ATOL = 1e-12

# Gate for the end-of-leg comparison between the integrated conjugation rows
# and a directly evaluated matrix exponential.
_LEG_RESIDUAL_GATE = 1e-7
_EXPM_RESIDUAL_GATE = 1e-10


@dataclass(frozen=True)
class QuadraticGenerator:
    """The (A, B) matrix pair of a quadratic generator on a mode set.

    ``omega`` (mode frequencies) is required only for delayed factors and free
    evolution; desk-scale algebra tests can omit it.
    """

    a: np.ndarray
    b: np.ndarray
    dk: float
    omega: np.ndarray | None = None
    lattice: ModeLattice | None = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex)
        b = np.asarray(self.b, dtype=complex)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        n = a.shape[0]
        if a.shape != (n, n) or b.shape != (n, n):
            raise ValueError("A and B must be square matrices of equal size")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValueError("generator matrices must be finite")
        scale = 1.0 + max(np.abs(a).max(), np.abs(b).max())
        if np.abs(a - a.T).max() > 1e-10 * scale:
            raise ValueError("A must be symmetric")
        if np.abs(b - b.conj().T).max() > 1e-10 * scale:
            raise ValueError("B must be Hermitian")
        if self.omega is None and self.lattice is not None:
            object.__setattr__(self, "omega", self.lattice.omega)

    @classmethod
    def from_lattice(cls, mats, lattice: ModeLattice) -> "QuadraticGenerator":
        return cls(a=mats.a, b=mats.b, dk=lattice.dk, omega=lattice.omega, lattice=lattice)

    @property
    def size(self) -> int:
        return self.a.shape[0]

    def stacked(self) -> np.ndarray:
        """The 2Nx2N conjugation generator M."""
        return _stack_blocks(self.a, self.b)

    def delayed(self, t: float) -> "QuadraticGenerator":
        """Generator of the same kick happening at time ``t``.

        Free evolution conjugates a -> a e^{-i w t}, so A -> E A E and
        B -> conj(E) B E with E = diag(e^{-i w t}).
        """
        if t == 0.0:
            return self
        if self.omega is None:
            raise ValueError("delayed generator requires mode frequencies")
        e = np.exp(-1j * self.omega * t)
        a = self.a * np.outer(e, e)
        b = self.b * np.outer(e.conj(), e)
        return QuadraticGenerator(a=a, b=b, dk=self.dk, omega=self.omega, lattice=self.lattice)


def _stack_blocks(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.block([[-b, -a.conj()], [a, b.conj()]])


def _expm_checked(x: np.ndarray) -> np.ndarray:
    """Matrix exponential with an exp(X) exp(-X) = I residual contract."""
    e = expm(x)
    e_inv = expm(-x)
    n = x.shape[0]
    resid = np.abs(e @ e_inv - np.eye(n)).max()
    if not np.isfinite(resid) or resid > _EXPM_RESIDUAL_GATE * (1.0 + np.abs(e).max() ** 2):
        raise NumericalError(f"matrix exponential residual {resid:.3e} exceeds contract")
    return e


def _symplectic_inverse(c: np.ndarray) -> np.ndarray:
    """Closed-form inverse of a conjugation matrix (C J C^T = J)."""
    n = c.shape[0] // 2
    c11, c12 = c[:n, :n], c[:n, n:]
    c21, c22 = c[n:, :n], c[n:, n:]
    return np.block([[c22.T, -c12.T], [-c21.T, c11.T]])


@dataclass(frozen=True)
class BogoliubovBlocks:
    """Top block-row (G1 G2) of exp(-2i lam dk M)."""

    g1: np.ndarray
    g2: np.ndarray
    dk: float

    def bogoliubov_defect(self) -> float:
        """Max deviation of G1 G1^dag - G2 G2^dag from the identity."""
        n = self.g1.shape[0]
        return float(
            np.abs(
                self.g1 @ self.g1.conj().T - self.g2 @ self.g2.conj().T - np.eye(n)
            ).max()
        )


def conjugation_blocks(gen: QuadraticGenerator, lam: float) -> BogoliubovBlocks:
    """Bogoliubov blocks of the nullifier of exp(-i lam h)|0>."""
    n = gen.size
    if lam == 0.0:
        return BogoliubovBlocks(g1=np.eye(n, dtype=complex), g2=np.zeros((n, n), dtype=complex), dk=gen.dk)
    e = _expm_checked(-2j * lam * gen.dk * gen.stacked())
    return BogoliubovBlocks(g1=e[:n, :n], g2=e[:n, n:], dk=gen.dk)


def nullifier_k(blocks: BogoliubovBlocks) -> np.ndarray:
    """K = -G1^{-1} G2 / dk, symmetrised after an asymmetry check."""
    try:
        k = -np.linalg.solve(blocks.g1, blocks.g2) / blocks.dk
    except np.linalg.LinAlgError as exc:
        raise DegenerateStateError("singular G1: state orthogonal to the vacuum") from exc
    asym = np.abs(k - k.T).max()
    if asym > 1e-10 * (1.0 + np.abs(k).max()):
        raise NumericalError(f"nullifier matrix asymmetry {asym:.3e} out of tolerance")
    return 0.5 * (k + k.T)


@dataclass(frozen=True)
class AlephBlocks:
    """Blocks of the inverse Gaussian-integral kernel built from K."""

    gamma: np.ndarray
    sigma: np.ndarray
    xi: np.ndarray
    psi: np.ndarray

    def trace_combination(self) -> np.ndarray:
        return self.gamma - 1j * self.xi - 1j * self.sigma - self.psi


def aleph_matrix(k: np.ndarray, dk: float) -> np.ndarray:
    n = k.shape[0]
    kc = k.conj()
    eye = np.eye(n)
    plus = dk * dk * (k + kc)
    minus = 1j * dk * dk * (k - kc)
    return np.block([[2.0 * dk * eye - plus, minus], [minus, 2.0 * dk * eye + plus]])


def aleph_inverse(k: np.ndarray, dk: float) -> AlephBlocks:
    """Invert the 2Nx2N kernel and return its blocks, with a conditioning guard."""
    n = k.shape[0]
    al = aleph_matrix(k, dk)
    cond = np.linalg.cond(al)
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericalError(f"Gaussian kernel is ill-conditioned (cond ~ {cond:.3e})")
    inv = np.linalg.solve(al, np.eye(2 * n))
    return AlephBlocks(gamma=inv[:n, :n], sigma=inv[:n, n:], xi=inv[n:, :n], psi=inv[n:, n:])


def _phase_weight(k: np.ndarray, dk: float) -> np.ndarray:
    # Identity used in the ODE hot path: the block combination
    # Gamma - i Xi - i Sigma - Psi of the inverse kernel equals
    # conj(K) (I - dk^2 K conj(K))^{-1}; equality is pinned by tests.
    kc = k.conj()
    x = np.eye(k.shape[0]) - dk * dk * (k @ kc)
    return np.linalg.solve(x.T, kc.T).T


def phase_rhs(k: np.ndarray, k_prime: np.ndarray, dk: float, source: complex = 0.0) -> complex:
    """Phase derivative D' for a nullifier path K(lam) with derivative K'."""
    w = aleph_inverse(k, dk).trace_combination()
    return source - 0.5 * dk * dk * np.einsum("ij,ji->", w, k_prime)


@dataclass(frozen=True)
class GaussianKet:
    """Zero-mean Gaussian state e^D exp(dk^2 a'.K.a'/2)|0>."""

    k_matrix: np.ndarray
    log_amplitude: complex
    dk: float
    omega: np.ndarray | None = None
    lattice: ModeLattice | None = None

    def __post_init__(self):
        k = np.asarray(self.k_matrix, dtype=complex)
        object.__setattr__(self, "k_matrix", k)
        n = k.shape[0]
        if k.shape != (n, n):
            raise ValueError("K must be square")
        if np.abs(k - k.T).max() > 1e-9 * (1.0 + np.abs(k).max()):
            raise ValueError("K must be symmetric")
        if n:
            smax = np.linalg.norm(self.dk * k, 2)
            if smax >= 1.0:
                raise ValueError(f"non-normalizable state: max singular value of dk*K is {smax:.6f} >= 1")
        if self.log_amplitude.real > 1e-9:
            raise ValueError("Re D must be <= 0 for a normalised state")
        if self.omega is None and self.lattice is not None:
            object.__setattr__(self, "omega", self.lattice.omega)

    @property
    def amplitude(self) -> complex:
        """Vacuum overlap <0|state> = e^D."""
        return complex(np.exp(self.log_amplitude))

    @classmethod
    def vacuum(cls, n: int, dk: float, omega=None) -> "GaussianKet":
        return cls(k_matrix=np.zeros((n, n), dtype=complex), log_amplitude=0.0 + 0.0j, dk=dk, omega=omega)


def free_evolve(state: GaussianKet, t: float) -> GaussianKet:
    """Free field evolution for time t: K_kk' -> e^{-i(w_k + w_k') t} K_kk'.

    D is unchanged: the normal-ordered free Hamiltonian annihilates the vacuum,
    so the vacuum overlap cannot depend on t.
    """
    if t == 0.0:
        return state
    if state.omega is None:
        raise ValueError("free evolution requires mode frequencies")
    phase = np.exp(-1j * state.omega * t)
    return GaussianKet(
        k_matrix=state.k_matrix * np.outer(phase, phase),
        log_amplitude=state.log_amplitude,
        dk=state.dk,
        omega=state.omega,
        lattice=state.lattice,
    )


# ---------------------------------------------------------------------------
# Leg integration: D along one factor of a product of unitaries.
# ---------------------------------------------------------------------------


def _prefix_source(c_v: np.ndarray, a: np.ndarray, b: np.ndarray, dk: float) -> complex:
    """Constant source c = -i <0| V' h V |0> for the factor generated by (A, B).

    V is the already-applied prefix product with conjugation matrix ``c_v``
    (V' z V = c_v z for the stacked ladder vector z).  Wick contraction of the
    normal-ordered quadratic against the prefix blocks gives

        <V' h V> = dk [ Tr(A V12 V11^T) + 2 Tr(B V12 V21^T) + Tr(conj(A) V22 V21^T) ].
    """
    n = a.shape[0]
    v11, v12 = c_v[:n, :n], c_v[:n, n:]
    v21, v22 = c_v[n:, :n], c_v[n:, n:]
    expect = dk * (
        np.einsum("ij,ji->", a, v12 @ v11.T)
        + 2.0 * np.einsum("ij,ji->", b, v12 @ v21.T)
        + np.einsum("ij,ji->", a.conj(), v22 @ v21.T)
    )
    return -1j * expect


class _Degenerate(Exception):
    pass


def _integrate_leg(
    r0: np.ndarray,
    m: np.ndarray,
    lam: float,
    dk: float,
    source: complex,
    d0: complex,
    rtol: float,
    atol: float,
) -> tuple[np.ndarray, complex]:
    """Integrate the conjugation rows R and D from coupling 0 to lam.

    R(mu) = R0 exp(-2i mu dk M) satisfies R' = -2i dk R M, which is integrated
    alongside D so no matrix exponential is needed inside the stepper; the
    result is checked against one directly evaluated exponential at the end.
    """
    n = r0.shape[0]
    eye = np.eye(n)
    y0 = np.empty(2 * n * n + 1, dtype=complex)
    y0[:-1] = r0.ravel()
    y0[-1] = d0

    def rhs(_mu, y):
        z = y.view(complex)
        r = z[:-1].reshape(n, 2 * n)
        rp = -2j * dk * (r @ m)
        g1, g2 = r[:, :n], r[:, n:]
        try:
            k = -np.linalg.solve(g1, g2) / dk
        except np.linalg.LinAlgError as exc:
            raise _Degenerate from exc
        k = 0.5 * (k + k.T)
        g1p, g2p = rp[:, :n], rp[:, n:]
        kp = -np.linalg.solve(g1, g1p @ k + g2p / dk)
        kp = 0.5 * (kp + kp.T)
        w = _phase_weight(k, dk)
        dp = source - 0.5 * dk * dk * np.einsum("ij,ji->", w, kp)
        out = np.empty_like(z)
        out[:-1] = rp.ravel()
        out[-1] = dp
        return out.view(np.float64)

    sol = solve_ivp(
        rhs,
        (0.0, lam),
        y0.view(np.float64),
        method="DOP853",
        rtol=rtol,
        atol=atol,
        dense_output=False,
    )
    if not sol.success:
        raise NumericalError(f"phase integration failed: {sol.message}")
    z = sol.y[:, -1].copy().view(complex)
    d_end = complex(z[-1])

    # Accuracy contract: the integrated rows must match the exact propagator.
    r_exact = r0 @ _expm_checked(-2j * lam * dk * m)
    r_ode = z[:-1].reshape(n, 2 * n)
    scale = 1.0 + np.abs(r_exact).max()
    defect = np.abs(r_ode - r_exact).max()
    if defect > _LEG_RESIDUAL_GATE * scale:
        raise NumericalError(
            f"integration tolerance not met: propagator defect {defect:.3e} on leg"
        )
    return r_exact, d_end


@dataclass(frozen=True)
class AmplitudeResult:
    """Vacuum amplitude of a product of quadratic unitaries."""

    value: complex
    log_amplitude: complex | None
    degenerate: bool = False
    k_matrix: np.ndarray | None = field(default=None, repr=False)


def _product_amplitude(
    factors: Sequence[tuple[np.ndarray, np.ndarray, float]],
    n: int,
    dk: float,
    rtol: float,
    atol: float,
) -> AmplitudeResult:
    """<0| S_m ... S_1 |0> for factors (A_j, B_j, lam_j), first applied first.

    Integrates D factor by factor: along factor j the prefix V = S_{j-1}...S_1
    is fixed, the nullifier rows are (I 0) C_V^{-1} exp(-2i mu dk M_j), and D
    picks up the constant prefix source.
    """
    eye2 = np.eye(2 * n, dtype=complex)
    c_v = eye2.copy()
    c_v_inv = eye2.copy()
    d_total = 0.0 + 0.0j
    try:
        for a, b, lam in factors:
            if lam == 0.0:
                continue
            m = _stack_blocks(a, b)
            source = _prefix_source(c_v, a, b, dk)
            r0 = c_v_inv[:n, :].copy()
            _, d_total = _integrate_leg(r0, m, lam, dk, source, d_total, rtol, atol)
            step = _expm_checked(-2j * lam * dk * m)
            c_v_inv = c_v_inv @ step
            c_v = _symplectic_inverse(c_v_inv)
    except (_Degenerate, DegenerateStateError):
        return AmplitudeResult(value=0.0 + 0.0j, log_amplitude=None, degenerate=True)

    g1, g2 = c_v_inv[:n, :n], c_v_inv[:n, n:]
    try:
        k = nullifier_k(BogoliubovBlocks(g1=g1, g2=g2, dk=dk))
    except DegenerateStateError:
        return AmplitudeResult(value=0.0 + 0.0j, log_amplitude=None, degenerate=True)
    return AmplitudeResult(
        value=complex(np.exp(d_total)), log_amplitude=d_total, degenerate=False, k_matrix=k
    )


def phase_integrate(
    gen: QuadraticGenerator,
    lam: float,
    rtol: float = ODE_RTOL,
    atol: float = ODE_ATOL,
) -> GaussianKet:
    """Full state (K, D) of exp(-i lam h)|0> via the phase ODE."""
    res = _product_amplitude([(gen.a, gen.b, lam)], gen.size, gen.dk, rtol, atol)
    if res.degenerate:
        raise DegenerateStateError("state has vanishing vacuum overlap along the path")
    return GaussianKet(
        k_matrix=res.k_matrix,
        log_amplitude=res.log_amplitude,
        dk=gen.dk,
        omega=gen.omega,
        lattice=gen.lattice,
    )


def vacuum_amplitude_product(
    sequence: Sequence[tuple[QuadraticGenerator, float, float]],
    rtol: float = ODE_RTOL,
    atol: float = ODE_ATOL,
) -> AmplitudeResult:
    """<0| S_m(lam_m; t_m) ... S_1(lam_1; t_1) |0>.

    Each entry is (generator, coupling, kick time); the kick time folds the
    free evolution into the factor's generator.  The first entry is the first
    unitary applied to the vacuum.
    """
    if not sequence:
        return AmplitudeResult(value=1.0 + 0.0j, log_amplitude=0.0 + 0.0j)
    n = sequence[0][0].size
    dk = sequence[0][0].dk
    factors = []
    for gen, lam, t in sequence:
        if gen.size != n or gen.dk != dk:
            raise ValueError("all factors must share one mode set and measure")
        delayed = gen.delayed(t)
        factors.append((delayed.a, delayed.b, lam))
    return _product_amplitude(factors, n, dk, rtol, atol)


def phase_phi2_closed_form(f_mat: np.ndarray, lam: float, dk: float) -> complex:
    """D for a pure position-position coupling (A = B = F, F Hermitian).

    D = i lam dk Tr(F) - (1/2) sum_j log(1 + 2i lam dk mu_j) over the
    eigenvalues mu_j of F, principal branch.  Every argument has real part 1,
    so the principal branch is the one continuously connected to lam = 0.
    """
    f_mat = np.asarray(f_mat, dtype=complex)
    if np.abs(f_mat - f_mat.conj().T).max() > 1e-10 * (1.0 + np.abs(f_mat).max()):
        raise ValueError("closed form requires a Hermitian coupling matrix")
    mu = np.linalg.eigvalsh(f_mat)
    args = 1.0 + 2j * lam * dk * mu
    if np.any(args.real <= 0.0):
        raise NumericalError("logarithm argument left the right half-plane")
    return complex(1j * lam * dk * mu.sum() - 0.5 * np.log(args).sum())


def overlap(s1: GaussianKet, s2: GaussianKet) -> complex:
    """<s1|s2> = e^{conj(D1) + D2} det(I - dk^2 conj(K1) K2)^{-1/2}.

    The square-root branch is fixed by continuity along the linear homotopy
    t -> (t K1, t K2): each determinant factor 1 - t^2 mu_j moves on a straight
    segment from 1, so summing principal logarithms per eigenvalue is the
    continuous branch.
    """
    if s1.dk != s2.dk or s1.k_matrix.shape != s2.k_matrix.shape:
        raise ValueError("overlap requires states on the same lattice")
    dk = s1.dk
    mu = np.linalg.eigvals(dk * dk * (s1.k_matrix.conj() @ s2.k_matrix))
    # A factor crossing zero for some t in (0, 1] means the determinant path
    # is degenerate: real mu >= 1.
    danger = (np.abs(mu.imag) < 1e-14) & (mu.real >= 1.0 - 1e-12)
    if danger.any():
        raise NumericalError("overlap determinant path passes through zero")
    log_det = np.log(1.0 - mu).sum()
    return complex(np.exp(np.conj(s1.log_amplitude) + s2.log_amplitude - 0.5 * log_det))
