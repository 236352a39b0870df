"""Quantum game protocols: the penny flip, the entangled prisoner's dilemma with
two-parameter strategies, and the identity/flip scheme on a shared two-qubit state.

Two-qubit basis order is (00, 01, 10, 11) with A's qubit first; 0 is C and 1 is D.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import (
    PAULI_X,
    as_matrix,
    as_state,
    is_unitary,
    matrix_function_hermitian,
)
from .quantum import as_density

# ---------------------------------------------------------------- penny flip

FLIP = np.array([[0, 1], [1, 0]], dtype=complex)
NO_FLIP = np.eye(2, dtype=complex)


def coin_move(a, b):
    """Q's move U(a, b) = [[a, b], [b*, -a*]]; U(1/sqrt2, 1/sqrt2) is the Hadamard gate."""
    return np.array([[a, b], [np.conj(b), -np.conj(a)]], dtype=complex)


def pennyflip_round(rho, q_moves, p_flip):
    """Q conjugates, P flips with probability ``p_flip``, Q conjugates again."""
    rho = as_density(rho)
    if rho.shape != (2, 2):
        raise ValidationError("the coin is a two-level system")
    if not 0 <= p_flip <= 1:
        raise ValidationError(f"flip probability must lie in [0, 1], got {p_flip}")
    u1, u3 = (as_matrix(u, "Q move") for u in q_moves)
    if not (is_unitary(u1) and is_unitary(u3)) or u1.shape != (2, 2) or u3.shape != (2, 2):
        raise ValidationError("Q's moves must be 2x2 unitaries")
    rho1 = u1 @ rho @ u1.conj().T
    rho2 = p_flip * FLIP @ rho1 @ FLIP.conj().T + (1 - p_flip) * NO_FLIP @ rho1 @ NO_FLIP.conj().T
    return u3 @ rho2 @ u3.conj().T


def heads_probability(rho):
    return float(np.real(rho[0, 0]))


# ------------------------------------------------- entangled prisoner's dilemma


@dataclass(frozen=True)
class EwlStrategy:
    theta: float
    phi: float

    def __post_init__(self):
        if not (-1e-12 <= self.theta <= np.pi + 1e-12 and -1e-12 <= self.phi <= np.pi / 2 + 1e-12):
            raise ValidationError(
                f"need 0 <= theta <= pi and 0 <= phi <= pi/2, got ({self.theta}, {self.phi})"
            )

    def matrix(self):
        return strategy_matrix(self.theta, self.phi)

    def canonical(self):
        """At theta = pi the phase drops out of the operator; pin phi to 0 there."""
        if abs(np.cos(self.theta / 2)) < 1e-12:
            return EwlStrategy(float(np.pi), 0.0)
        return self

    @property
    def name(self):
        c = self.canonical()
        for label, s in NAMED.items():
            if abs(c.theta - s.theta) < 1e-12 and abs(c.phi - s.phi) < 1e-12:
                return label
        return None


def strategy_matrix(theta, phi):
    """U(theta, phi) = [[e^{i phi} cos(theta/2), sin(theta/2)], [-sin(theta/2), e^{-i phi} cos(theta/2)]].

    Broadcasts over array arguments, returning shape (..., 2, 2).
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    out = np.empty(np.broadcast(theta, phi).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(1j * phi) * c
    out[..., 0, 1] = s
    out[..., 1, 0] = -s
    out[..., 1, 1] = np.exp(-1j * phi) * c
    return out


COOPERATE = EwlStrategy(0.0, 0.0)
DEFECT = EwlStrategy(float(np.pi), 0.0)
QUANTUM = EwlStrategy(0.0, float(np.pi / 2))
NAMED = {"C": COOPERATE, "D": DEFECT, "Q": QUANTUM}


@dataclass(frozen=True)
class EwlSpec:
    r: float = 3.0
    s: float = 0.0
    t: float = 5.0
    p: float = 1.0
    gamma: float = float(np.pi / 2)

    def __post_init__(self):
        if not -1e-12 <= self.gamma <= np.pi / 2 + 1e-12:
            raise ValidationError(f"gamma must lie in [0, pi/2], got {self.gamma}")

    @property
    def weights_a(self):
        # indexed by outcome (CC, CD, DC, DD)
        return np.array([self.r, self.s, self.t, self.p])

    @property
    def weights_b(self):
        return np.array([self.r, self.t, self.s, self.p])


def ewl_gate(gamma):
    """J = exp(i gamma D(x)D / 2)."""
    dd = np.kron(DEFECT.matrix(), DEFECT.matrix())
    return matrix_function_hermitian(dd, lambda w: np.exp(0.5j * gamma * w))


def ewl_final_state(spec, sa, sb):
    """|psi_f> = J^dagger (U_A (x) U_B) J |CC>."""
    j = ewl_gate(spec.gamma)
    cc = np.array([1, 0, 0, 0], dtype=complex)
    psi = j.conj().T @ np.kron(sa.matrix(), sb.matrix()) @ j @ cc
    return as_state(psi, "final state", tol=1e-10)


def ewl_probabilities(spec, sa, sb):
    """Outcome probabilities over (CC, CD, DC, DD)."""
    return np.abs(ewl_final_state(spec, sa, sb)) ** 2


def ewl_payoffs(spec, sa, sb):
    probs = ewl_probabilities(spec, sa, sb)
    return float(spec.weights_a @ probs), float(spec.weights_b @ probs)


def _payoff_block(gamma, weights, ua, ub):
    """P_A for every pair of strategy matrices in ``ua`` (na,2,2) x ``ub`` (nb,2,2)."""
    j = ewl_gate(gamma)
    m = (j @ np.array([1, 0, 0, 0], dtype=complex)).reshape(2, 2)
    # (U_A (x) U_B) vec(M) = vec(U_A M U_B^T)
    left = np.einsum("aij,jk->aik", ua, m)
    mid = np.einsum("aik,blk->abil", left, ub).reshape(len(ua), len(ub), 4)
    final = mid @ j.conj()  # row-vector form of J^dagger applied to each state
    return (np.abs(final) ** 2) @ weights


def strategy_grid(resolution):
    """Cartesian (theta, phi) grid including the endpoints 0, pi and 0, pi/2."""
    if resolution < 2:
        raise ValidationError("grid resolution must be at least 2")
    th, ph = np.meshgrid(
        np.linspace(0, np.pi, resolution), np.linspace(0, np.pi / 2, resolution), indexing="ij"
    )
    return th.ravel(), ph.ravel()


def ewl_payoff_matrix(spec, resolution, threads=1, chunk=256):
    """A's payoff for every pair of grid strategies, rows = A's strategy."""
    th, ph = strategy_grid(resolution)
    mats = strategy_matrix(th, ph)
    w = spec.weights_a
    starts = range(0, len(mats), chunk)

    def block(i):
        return _payoff_block(spec.gamma, w, mats[i : i + chunk], mats)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            blocks = list(pool.map(block, starts))
    else:
        blocks = [block(i) for i in starts]
    return th, ph, np.vstack(blocks)


@dataclass(frozen=True)
class EwlEquilibrium:
    a: EwlStrategy
    b: EwlStrategy
    payoff_a: float
    payoff_b: float
    cells: int  # grid cells that collapse onto this profile

    def to_dict(self):
        return {
            "theta_a": self.a.theta,
            "phi_a": self.a.phi,
            "theta_b": self.b.theta,
            "phi_b": self.b.phi,
            "name_a": self.a.name,
            "name_b": self.b.name,
            "payoff_a": self.payoff_a,
            "payoff_b": self.payoff_b,
            "cells": self.cells,
        }


def ewl_nash_scan(spec, resolution=64, tol=1e-6, threads=1):
    """Grid profiles where neither player gains more than ``tol`` by a unilateral grid move.

    Strategies at theta = pi are the same operator for every phi, so cells are merged
    onto canonical profiles; ``cells`` counts how many grid cells each one absorbs.
    """
    if resolution < 32:
        raise ValidationError("EWL scans need at least 32 points per parameter")
    th, ph, pa = ewl_payoff_matrix(spec, resolution, threads)
    # symmetric protocol: P_B(i, j) = P_A(j, i)
    best = pa.max(axis=0)
    br = pa >= best[None, :] - tol  # br[i, j]: A's i is a best reply to B's j
    rows, cols = np.nonzero(br & br.T)
    merged = {}
    for i, j in zip(rows, cols):
        sa = EwlStrategy(float(th[i]), float(ph[i])).canonical()
        sb = EwlStrategy(float(th[j]), float(ph[j])).canonical()
        key = (sa, sb)
        if key in merged:
            merged[key][2] += 1
        else:
            merged[key] = [float(pa[i, j]), float(pa[j, i]), 1]
    out = [EwlEquilibrium(sa, sb, v[0], v[1], v[2]) for (sa, sb), v in merged.items()]
    out.sort(key=lambda e: (e.a.theta, e.a.phi, e.b.theta, e.b.phi))
    return out


def is_grid_equilibrium(spec, sa, sb, resolution, tol=1e-6):
    """Check a single profile against every unilateral deviation on the grid."""
    th, ph = strategy_grid(resolution)
    mats = strategy_matrix(th, ph)
    w = spec.weights_a
    pa, pb = ewl_payoffs(spec, sa, sb)
    dev_a = _payoff_block(spec.gamma, w, mats, sb.matrix()[None]).max()
    dev_b = _payoff_block(spec.gamma, w, mats, sa.matrix()[None]).max()
    return bool(dev_a <= pa + tol and dev_b <= pb + tol)


def ewl_payoff_surface(spec, resolution, phi_a=0.0, phi_b=0.0):
    """Rows (theta_a, theta_b, P_A, P_B) over a theta grid at fixed phases."""
    thetas = np.linspace(0, np.pi, resolution)
    ua = strategy_matrix(thetas, phi_a)
    ub = strategy_matrix(thetas, phi_b)
    pa = _payoff_block(spec.gamma, spec.weights_a, ua, ub)
    pb = _payoff_block(spec.gamma, spec.weights_b, ua, ub)
    ta, tb = np.meshgrid(thetas, thetas, indexing="ij")
    return np.column_stack([ta.ravel(), tb.ravel(), pa.ravel(), pb.ravel()])


def ewl_invasion_fitness(spec, mutant, incumbent, epsilon):
    """Fitness of incumbents and mutants when a fraction ``epsilon`` of the population mutates."""
    if not 0 < epsilon < 0.5:
        raise ValidationError("mutant fraction must lie in (0, 1/2)")

    def payoff(s, opponent):
        return ewl_payoffs(spec, s, opponent)[0]

    w_inc = (1 - epsilon) * payoff(incumbent, incumbent) + epsilon * payoff(incumbent, mutant)
    w_mut = (1 - epsilon) * payoff(mutant, incumbent) + epsilon * payoff(mutant, mutant)
    return w_inc, w_mut


def invasion_threshold(spec, theta=0.0, incumbent=DEFECT, epsilon=1e-6, lo=0.0, hi=np.pi / 2, tol=1e-10):
    """Bisect on phi for the sign change of w_mutant - w_incumbent with mutant U(theta, phi)."""

    def gap(phi):
        w_inc, w_mut = ewl_invasion_fitness(spec, EwlStrategy(theta, phi), incumbent, epsilon)
        return w_mut - w_inc

    g_lo, g_hi = gap(lo), gap(hi)
    if np.sign(g_lo) == np.sign(g_hi):
        raise ValidationError(f"no sign change of the invasion gap on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if np.sign(g_mid) == np.sign(g_lo):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ------------------------------------------------------ identity / flip scheme


@dataclass(frozen=True)
class MwSpec:
    """Shared two-qubit initial state and diagonal payoff coefficients over (00, 01, 10, 11)."""

    initial: np.ndarray
    coeffs_a: tuple
    coeffs_b: tuple

    def __post_init__(self):
        psi = as_state(self.initial, "initial state", tol=1e-10)
        if psi.size != 4:
            raise ValidationError("initial state must live on two qubits")
        for name in ("coeffs_a", "coeffs_b"):
            c = tuple(float(v) for v in getattr(self, name))
            if len(c) != 4:
                raise ValidationError(f"{name} needs four coefficients")
            object.__setattr__(self, name, c)
        psi.setflags(write=False)
        object.__setattr__(self, "initial", psi)


_I2 = np.eye(2, dtype=complex)
# tactic pairs in order (I I, I X, X I, X X); weights below match this order
_TACTICS = [np.kron(a, b) for a in (_I2, PAULI_X) for b in (_I2, PAULI_X)]


def _tactic_weights(p, q):
    return np.array([p * q, p * (1 - q), (1 - p) * q, (1 - p) * (1 - q)])


def _check_prob(v, name):
    if not 0 <= v <= 1:
        raise ValidationError(f"{name} must lie in [0, 1], got {v}")


def mw_final_state(spec, p, q):
    """Mix of the four tactic pairs: A keeps its qubit with prob. p, B with prob. q."""
    _check_prob(p, "p")
    _check_prob(q, "q")
    rho0 = np.outer(spec.initial, spec.initial.conj())
    return sum(w * t @ rho0 @ t.conj().T for w, t in zip(_tactic_weights(p, q), _TACTICS))


def _tactic_payoffs(spec):
    """4x2 table: payoffs to (A, B) when each tactic pair is played for sure."""
    pops = np.array([np.abs(t @ spec.initial) ** 2 for t in _TACTICS])
    return pops @ np.column_stack([spec.coeffs_a, spec.coeffs_b])


def mw_payoffs(spec, p, q):
    rho = mw_final_state(spec, p, q)
    diag = np.real(np.diag(rho))
    return float(diag @ spec.coeffs_a), float(diag @ spec.coeffs_b)


def mw_payoff_grids(spec, resolution):
    """P_A and P_B on a ``resolution`` x ``resolution`` grid (rows: p, columns: q)."""
    ps = np.linspace(0, 1, resolution)
    table = _tactic_payoffs(spec)
    pp, qq = np.meshgrid(ps, ps, indexing="ij")
    w = _tactic_weights(pp, qq)  # (4, R, R)
    pa = np.einsum("kij,k->ij", w, table[:, 0])
    pb = np.einsum("kij,k->ij", w, table[:, 1])
    return ps, pa, pb


@dataclass(frozen=True)
class MwEquilibrium:
    p: float
    q: float
    payoff_a: float
    payoff_b: float

    def to_dict(self):
        return {"p": self.p, "q": self.q, "payoff_a": self.payoff_a, "payoff_b": self.payoff_b}


def mw_nash_scan(spec, resolution=101, tol=1e-9):
    if resolution < 101:
        raise ValidationError("identity/flip scans need at least 101 points per axis")
    ps, pa, pb = mw_payoff_grids(spec, resolution)
    ok = (pa >= pa.max(axis=0, keepdims=True) - tol) & (pb >= pb.max(axis=1, keepdims=True) - tol)
    return [
        MwEquilibrium(float(ps[i]), float(ps[j]), float(pa[i, j]), float(pb[i, j]))
        for i, j in zip(*np.nonzero(ok))
    ]
