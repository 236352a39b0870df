"""Replicator dynamics in vector form and in Lax (commutator) form.

The matrix form works with ``X_ij = sqrt(x_i x_j)``, a rank-one projector on the
simplex, and evolves as ``dX/dt = [Lambda, X]`` with ``Lambda = [Q, X]`` and
``Q = diag(A x) / 2``. Its diagonal reproduces the vector field exactly.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import IntegrationUnstable, ValidationError
from .linalg import xlogx

SIMPLEX_TOL = 1e-10
CLAMP_TOL = 1e-9
DRIFT_TOL = 1e-6


def as_payoff(a, n=None):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"payoff matrix must be square, got shape {a.shape}")
    if n is not None and a.shape[0] != n:
        raise ValidationError(f"payoff matrix is {a.shape[0]}x{a.shape[0]} but x has length {n}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("payoff matrix has non-finite entries")
    return a


def as_frequencies(x, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValidationError(f"{name} must be a non-empty vector")
    if np.any(x < -SIMPLEX_TOL) or np.any(x > 1 + SIMPLEX_TOL) or abs(x.sum() - 1) > SIMPLEX_TOL:
        raise ValidationError(f"{name} is not on the probability simplex: {x}")
    return x


def _checked(a, x):
    x = as_frequencies(x)
    return as_payoff(a, x.size), x


def fitness(a, x):
    a, x = _checked(a, x)
    return a @ x


def mean_fitness(a, x):
    a, x = _checked(a, x)
    return float(x @ a @ x)


def _rhs(a, x):
    f = a @ x
    return x * (f - x @ f)


def replicator_rhs(a, x):
    """dx_i/dt = [(Ax)_i - x^T A x] x_i."""
    a, x = _checked(a, x)
    return _rhs(a, x)


def asymmetric_rhs(a, b, x, y):
    """Two-population field: A is n x m (row payoffs vs y), B is m x n (column payoffs vs x)."""
    x = as_frequencies(x, "x")
    y = as_frequencies(y, "y")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (x.size, y.size) or b.shape != (y.size, x.size):
        raise ValidationError(
            f"need A {(x.size, y.size)} and B {(y.size, x.size)}, got {a.shape} and {b.shape}"
        )
    fa = a @ y
    fb = b @ x
    return x * (fa - x @ fa), y * (fb - y @ fb)


def shannon_entropy(x):
    """Shannon entropy in nats with 0 ln 0 = 0."""
    return float(-xlogx(x).sum())


@dataclass(frozen=True)
class ReplicatorTrajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), n)
    entropy: np.ndarray  # nats
    max_drift: float = 0.0  # largest |sum(x) - 1| seen before each projection

    @property
    def final(self):
        return self.states[-1]

    def to_dict(self):
        return {
            "entropy_unit": "nats",
            "times": self.times.tolist(),
            "states": self.states.tolist(),
            "entropy": self.entropy.tolist(),
        }


@njit(cache=True)
def _rk4_replicator(a, x, dt, n_steps, store_every, drift_tol, clamp_tol):
    n = x.size
    n_out = n_steps // store_every + (1 if n_steps % store_every else 0) + 1
    out = np.empty((n_out, n))
    steps = np.empty(n_out, dtype=np.int64)
    out[0] = x
    steps[0] = 0
    row = 1
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    y = np.empty(n)
    max_drift = 0.0
    for k in range(1, n_steps + 1):
        _field(a, x, k1)
        for i in range(n):
            y[i] = x[i] + 0.5 * dt * k1[i]
        _field(a, y, k2)
        for i in range(n):
            y[i] = x[i] + 0.5 * dt * k2[i]
        _field(a, y, k3)
        for i in range(n):
            y[i] = x[i] + dt * k3[i]
        _field(a, y, k4)
        total = 0.0
        lowest = 0.0
        for i in range(n):
            x[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            total += x[i]
            lowest = min(lowest, x[i])
        drift = abs(total - 1.0)
        if not drift <= drift_tol or lowest < -clamp_tol:
            return out[:row], steps[:row], k, drift
        max_drift = max(max_drift, drift)
        total = 0.0
        for i in range(n):
            if x[i] < 0.0:
                x[i] = 0.0
            total += x[i]
        for i in range(n):
            x[i] /= total
        if k % store_every == 0 or k == n_steps:
            out[row] = x
            steps[row] = k
            row += 1
    return out, steps, 0, max_drift


@njit(cache=True)
def _field(a, x, out):
    n = x.size
    mean = 0.0
    for i in range(n):
        f = 0.0
        for j in range(n):
            f += a[i, j] * x[j]
        out[i] = f
        mean += x[i] * f
    for i in range(n):
        out[i] = x[i] * (out[i] - mean)


def integrate(a, x0, t_end, dt=1e-3, store_every=1):
    """Fixed-step RK4 integration of the replicator equation.

    The state is projected back onto the simplex after every step (negatives above
    -1e-9 clamp to zero, then divide by the sum). A step whose pre-projection sum
    drifts more than 1e-6 from one, or with a component below -1e-9, raises
    IntegrationUnstable naming the step.
    """
    a, x = _checked(a, x0)
    if not dt > 0:
        raise ValidationError("dt must be positive")
    if not t_end >= 0:
        raise ValidationError("t_end must be non-negative")
    if store_every < 1:
        raise ValidationError("store_every must be >= 1")
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValidationError(f"t_end={t_end} is not a whole number of steps of dt={dt}")
    x = np.ascontiguousarray(np.clip(x, 0.0, None) / np.clip(x, 0.0, None).sum())
    states, steps, failed, drift = _rk4_replicator(
        np.ascontiguousarray(a), x.copy(), float(dt), n_steps, int(store_every), DRIFT_TOL, CLAMP_TOL
    )
    if failed:
        raise IntegrationUnstable(
            f"replicator state left the simplex at step {failed} (drift {drift:.3e})", int(failed)
        )
    entropy = -xlogx(states).sum(axis=1)
    return ReplicatorTrajectory(steps * dt, states, entropy, float(drift))


def frequency_matrix(x):
    """X_ij = sqrt(x_i x_j)."""
    r = np.sqrt(np.clip(as_frequencies(x), 0.0, None))
    return np.outer(r, r)


def lax_decomposition(a, x):
    """Return (X, Q, Lambda) with Q = diag(Ax)/2 and Lambda = [Q, X] (real antisymmetric)."""
    a, x = _checked(a, x)
    xm = frequency_matrix(x)
    q = np.diag(0.5 * (a @ x))
    lam = q @ xm - xm @ q
    return xm, q, lam


def lax_rhs(a, x):
    """dX/dt = [Lambda, X] = [[Q, X], X]."""
    xm, _, lam = lax_decomposition(a, x)
    return lam @ xm - xm @ lam


def game_entropy_suite(joint, base=np.e):
    """Marginal, joint, conditional and mutual entropies of a joint strategy distribution.

    ``joint[i, j]`` is the probability that A plays i and B plays j. Pass ``base=2``
    for bits; the unit is recorded in the result.
    """
    p = np.asarray(joint, dtype=float)
    if p.ndim != 2 or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
        raise ValidationError("joint distribution must be a non-negative matrix summing to 1")
    scale = 1.0 / np.log(base)
    h_ab = -xlogx(p).sum() * scale
    h_a = -xlogx(p.sum(axis=1)).sum() * scale
    h_b = -xlogx(p.sum(axis=0)).sum() * scale
    return {
        "unit": "bits" if base == 2 else "nats" if base == np.e else f"log{base:g}",
        "H(A)": float(h_a),
        "H(B)": float(h_b),
        "H(A,B)": float(h_ab),
        "H(A|B)": float(h_ab - h_b),
        "H(B|A)": float(h_ab - h_a),
        "H(A:B)": float(h_a + h_b - h_ab),
    }


def relative_entropy(x, y):
    """Relative entropy H(x||y) in bits; ``inf`` when x charges a point y does not."""
    x = as_frequencies(x, "x")
    y = as_frequencies(y, "y")
    if x.shape != y.shape:
        raise ValidationError("x and y must have the same length")
    support = x > 0
    if np.any(y[support] <= 0):
        return float("inf")
    d = float(np.sum(x[support] * np.log2(x[support] / y[support])))
    return max(d, 0.0)


def shannon_entropy_rate(a, x):
    """dH/dt along the replicator flow, -sum (ln x_i + 1) dx_i/dt, in nats per unit time."""
    a, x = _checked(a, x)
    if np.any(x <= 0):
        raise ValidationError("entropy rate needs an interior point (all x_i > 0)")
    return float(-np.sum((np.log(x) + 1.0) * _rhs(a, x)))
