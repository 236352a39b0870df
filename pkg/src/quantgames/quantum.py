"""Density operators: construction, unitary and von Neumann evolution, entropies,
bipartite entanglement tests, and the map from population frequencies to density
matrices.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import (
    as_matrix,
    as_state,
    clamp_spectrum,
    commutator,
    hermitian_part,
    is_unitary,
    partial_trace,
    xlogx,
)
from .ode import rk4_step
from .replicator import as_frequencies, lax_decomposition

DENSITY_TOL = 1e-10
SCHMIDT_TOL = 1e-10


def as_density(rho, name="rho", tol=DENSITY_TOL):
    """Validate a density matrix and return its Hermitian part."""
    rho = as_matrix(rho, name)
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValidationError(f"{name} is not Hermitian within {tol:g}")
    rho = (rho + rho.conj().T) / 2
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise ValidationError(f"{name} has trace {tr!r}, expected 1")
    w = np.linalg.eigvalsh(rho)
    if w.min() < -tol:
        raise ValidationError(f"{name} is not positive semidefinite (min eigenvalue {w.min():.3e})")
    if np.trace(rho @ rho).real > 1 + tol:
        raise ValidationError(f"{name} has purity above 1")
    return rho


def projector(psi):
    psi = as_state(psi)
    return np.outer(psi, psi.conj())


def density_from_ensemble(members):
    """rho = sum_i p_i |psi_i><psi_i| from ``(weight, state)`` pairs."""
    members = list(members)
    if not members:
        raise ValidationError("ensemble is empty")
    weights = np.array([float(w) for w, _ in members])
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise ValidationError(f"ensemble weights must be non-negative and sum to 1: {weights}")
    states = [as_state(s, f"state[{k}]") for k, (_, s) in enumerate(members)]
    dim = states[0].size
    if any(s.size != dim for s in states):
        raise ValidationError("ensemble states have different dimensions")
    rho = sum(w * np.outer(s, s.conj()) for w, s in zip(weights, states))
    return as_density(rho)


def ensemble_average(rho, observable):
    """<A> = Tr(rho A); the imaginary residue of a Hermitian product is dropped."""
    rho = as_matrix(rho, "rho")
    obs = hermitian_part(observable, "observable")
    if obs.shape != rho.shape:
        raise ValidationError("observable and rho differ in dimension")
    return float(np.trace(rho @ obs).real)


def von_neumann_rhs(h, rho, hbar=1.0):
    """drho/dt = (-i/hbar) [H, rho]."""
    if not hbar > 0:
        raise ValidationError("hbar must be positive")
    h = hermitian_part(h, "H")
    return (-1j / hbar) * commutator(h, as_matrix(rho, "rho"))


def evolve_unitary(rho, u):
    """rho -> U rho U^dagger."""
    rho = as_density(rho)
    u = as_matrix(u, "U")
    if u.shape != rho.shape:
        raise ValidationError("U and rho differ in dimension")
    if not is_unitary(u):
        raise ValidationError("U is not unitary within 1e-10")
    out = u @ rho @ u.conj().T
    return (out + out.conj().T) / 2


def propagator(h, t, hbar=1.0):
    """exp(-i H t / hbar) by spectral decomposition."""
    h = hermitian_part(h, "H")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t / hbar)) @ v.conj().T


@dataclass(frozen=True)
class DensityTrajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), d, d) complex

    def entropy(self):
        return np.array([von_neumann_entropy(r, validate=False) for r in self.states])

    def purity(self):
        return np.einsum("tij,tji->t", self.states, self.states).real


def integrate_von_neumann(h, rho0, t_end, dt=1e-3, hbar=1.0, store_every=1):
    """Fixed-step RK4 integration of i hbar drho/dt = [H, rho]."""
    h = hermitian_part(h, "H")
    rho = as_density(rho0, "rho0")
    if h.shape != rho.shape:
        raise ValidationError("H and rho0 differ in dimension")
    if not dt > 0 or not t_end >= 0:
        raise ValidationError("need dt > 0 and t_end >= 0")
    n_steps = int(round(t_end / dt))
    gen = -1j / hbar

    def field(r):
        return gen * (h @ r - r @ h)

    times, states = [0.0], [rho]
    for k in range(1, n_steps + 1):
        rho = rk4_step(field, rho, dt)
        if k % store_every == 0 or k == n_steps:
            times.append(k * dt)
            states.append(rho)
    return DensityTrajectory(np.array(times), np.array(states))


def spectrum(rho):
    return clamp_spectrum(np.linalg.eigvalsh((rho + rho.conj().T) / 2))


def von_neumann_entropy(rho, validate=True):
    """S = -Tr(rho ln rho) in nats."""
    rho = as_density(rho) if validate else np.asarray(rho)
    return float(max(-xlogx(spectrum(rho)).sum(), 0.0))


@dataclass(frozen=True)
class EntropyRateReport:
    series_value: float  # literal series coefficients, remainder term set to zero
    exact_value: float  # -Tr(drho/dt ln rho) on the support of rho
    deviation: float

    def to_dict(self):
        return {
            "series_value": self.series_value,
            "exact_value": self.exact_value,
            "deviation": self.deviation,
        }


def entropy_rate_series(rho, rho_dot):
    """Compare the truncated-series entropy rate with the exact spectral rate.

    The series value is
    11/6 Tr(r') - 6 Tr(rho r') + 9/2 Tr(rho^2 r') - 4/3 Tr(rho^3 r'),
    reported next to -Tr(r' ln rho) without asserting they agree.
    """
    rho = as_density(rho)
    rd = as_matrix(rho_dot, "rho_dot")
    if rd.shape != rho.shape:
        raise ValidationError("rho_dot and rho differ in dimension")
    if np.max(np.abs(rd - rd.conj().T)) > DENSITY_TOL:
        raise ValidationError("rho_dot is not Hermitian")
    if abs(np.trace(rd)) > DENSITY_TOL:
        raise ValidationError("rho_dot is not traceless")
    rho2 = rho @ rho
    series = (
        11 / 6 * np.trace(rd)
        - 6 * np.trace(rho @ rd)
        + 9 / 2 * np.trace(rho2 @ rd)
        - 4 / 3 * np.trace(rho2 @ rho @ rd)
    ).real
    w, v = np.linalg.eigh(rho)
    w = clamp_spectrum(w)
    log_w = np.zeros_like(w)
    support = w > DENSITY_TOL
    log_w[support] = np.log(w[support])
    log_rho = (v * log_w) @ v.conj().T
    exact = -np.trace(rd @ log_rho).real
    return EntropyRateReport(float(series), float(exact), float(series - exact))


@dataclass(frozen=True)
class SchmidtResult:
    separable: bool
    coefficients: np.ndarray

    def __bool__(self):
        return self.separable


def separability_check(psi, dims):
    """Schmidt decomposition of a bipartite pure state; separable iff rank one."""
    psi = as_state(psi, "psi", tol=1e-10)
    da, db = (int(d) for d in dims)
    if da * db != psi.size:
        raise ValidationError(f"dims {tuple(dims)} do not factor dimension {psi.size}")
    s = np.linalg.svd(psi.reshape(da, db), compute_uv=False)
    separable = s.size < 2 or s[1] < SCHMIDT_TOL
    return SchmidtResult(bool(separable), s)


def quantum_conditional_entropy(rho_ab, dims):
    """S(A|B) = S(AB) - S(B); negative values certify entanglement."""
    rho_ab = as_density(rho_ab, "rho_ab")
    rho_b = partial_trace(rho_ab, dims, keep=1)
    return von_neumann_entropy(rho_ab, validate=False) - von_neumann_entropy(rho_b, validate=False)


def quantize_frequencies(x):
    """rho_ij = sqrt(x_i x_j): the pure state whose populations are the frequencies."""
    r = np.sqrt(np.clip(as_frequencies(x), 0.0, None)).astype(complex)
    return np.outer(r, r)


def quantum_replicator_correspondence(a, x, hbar=1.0):
    """Return ([Lambda, X], (-i/hbar)[H, X]) with H = i hbar Lambda.

    Lambda is real antisymmetric, so H is Hermitian and the second expression is the
    von Neumann generator acting on X.
    """
    xm, _, lam = lax_decomposition(a, x)
    h = 1j * hbar * lam
    lax = lam @ xm - xm @ lam
    vn = von_neumann_rhs(h, xm, hbar)
    return lax, vn
