"""Finite two-player games: payoffs, pure Nash and Pareto sets, ESS checks, 2x2 minimax."""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import ValidationError

SIMPLEX_TOL = 1e-12
ESS_TOL = 1e-9


@dataclass(frozen=True)
class BimatrixGame:
    """Payoffs ``a`` (n x m) for the row player A and ``b`` (m x n) for the column player B.

    Each matrix is written from its owner's side: ``b[j, i]`` is B's payoff when B plays
    ``j`` and A plays ``i``. A symmetric game therefore has ``b == a`` and a zero-sum
    game has ``b == -a.T``.
    """

    a: np.ndarray
    b: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValidationError(f"A must be a non-empty matrix, got shape {a.shape}")
        if b.shape != a.T.shape:
            raise ValidationError(f"B must have shape {a.T.shape}, got {b.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValidationError("payoffs must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "labels", tuple(self.labels))

    @classmethod
    def symmetric(cls, a, labels=()):
        return cls(a, a, labels)

    @classmethod
    def from_dict(cls, doc):
        """Build from ``{"A": [[...]], "B": [[...]], "labels": [...]}``; B defaults to A."""
        if "A" not in doc:
            raise ValidationError("game document needs an 'A' matrix")
        a = np.asarray(doc["A"], dtype=float)
        b = doc.get("B")
        b = a if b is None else np.asarray(b, dtype=float)
        return cls(a, b, doc.get("labels", ()))

    @property
    def shape(self):
        return self.a.shape

    @property
    def is_symmetric(self):
        n, m = self.a.shape
        return n == m and np.array_equal(self.b, self.a)

    @property
    def is_zero_sum(self):
        return np.array_equal(self.b, -self.a.T)

    def label(self, i):
        # one label list names strategy i for both players
        if i < len(self.labels):
            return str(self.labels[i])
        return str(i)


def as_mixed(p, n, name="strategy"):
    p = np.asarray(p, dtype=float)
    if p.shape != (n,):
        raise ValidationError(f"{name} must have length {n}, got shape {p.shape}")
    if np.any(p < -SIMPLEX_TOL) or np.any(p > 1 + SIMPLEX_TOL) or abs(p.sum() - 1) > SIMPLEX_TOL:
        raise ValidationError(f"{name} is not a probability vector: {p}")
    return p


def pure(i, n):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def expected_payoff(game, p, q, player="A"):
    """Payoff to ``player`` when A mixes ``p`` over rows and B mixes ``q`` over columns."""
    n, m = game.shape
    p = as_mixed(p, n, "p")
    q = as_mixed(q, m, "q")
    if player == "A":
        return float(p @ game.a @ q)
    if player == "B":
        return float(q @ game.b @ p)
    raise ValidationError(f"player must be 'A' or 'B', got {player!r}")


def pure_nash_equilibria(game, tol=0.0):
    """All pure profiles (i, j) where each strategy is a best reply to the other."""
    a, b = game.a, game.b
    col_best = a.max(axis=0)  # A's best payoff against each column
    row_best = b.max(axis=0)  # B's best payoff against each row
    n, m = game.shape
    return [
        (i, j)
        for i, j in product(range(n), range(m))
        if a[i, j] >= col_best[j] - tol and b[j, i] >= row_best[i] - tol
    ]


def pareto_optimal_outcomes(game):
    """Pure outcomes not weakly dominated (with one strict gain) by another pure outcome."""
    n, m = game.shape
    cells = list(product(range(n), range(m)))
    pay = {(i, j): (game.a[i, j], game.b[j, i]) for i, j in cells}
    out = []
    for c in cells:
        ua, ub = pay[c]
        dominated = any(
            va >= ua and vb >= ub and (va > ua or vb > ub) for va, vb in (pay[d] for d in cells)
        )
        if not dominated:
            out.append(c)
    return out


@dataclass(frozen=True)
class EssResult:
    is_ess: bool
    violator: np.ndarray = None
    reason: str = ""

    def __bool__(self):
        return self.is_ess


def is_ess(game, p, candidates=(), tol=ESS_TOL):
    """Check both evolutionary-stability conditions of ``p`` against a finite candidate set.

    Every pure strategy is always tested in addition to ``candidates``. For 2x2 games the
    pure candidates suffice; for larger games this is a necessary-condition check only.
    """
    if not game.is_symmetric:
        raise ValidationError("ESS is defined for symmetric games only")
    n = game.shape[0]
    p = as_mixed(p, n, "p")
    a = game.a

    def e(u, v):
        return float(u @ a @ v)

    pool = [pure(i, n) for i in range(n)] + [as_mixed(r, n, "candidate") for r in candidates]
    epp = e(p, p)
    for r in pool:
        if np.allclose(r, p, atol=1e-12, rtol=0):
            continue
        erp = e(r, p)
        if erp > epp + tol:
            return EssResult(False, r, "E(r,p) > E(p,p)")
        if abs(erp - epp) <= tol and not e(p, r) > e(r, r) + tol:
            return EssResult(False, r, "E(p,p) = E(r,p) but E(p,r) <= E(r,r)")
    return EssResult(True)


def minimax_value(game):
    """Value and optimal mixes of a 2x2 zero-sum game, seen from the row player."""
    if game.shape != (2, 2):
        raise ValidationError("minimax_value handles 2x2 games only")
    if not game.is_zero_sum:
        raise ValidationError("game is not zero-sum (B must equal -A^T)")
    a = game.a
    # pure saddle point: entry is the min of its row and the max of its column
    for i, j in product(range(2), range(2)):
        if a[i, j] == a[i].min() and a[i, j] == a[:, j].max():
            return float(a[i, j]), (pure(i, 2), pure(j, 2))
    den = a[0, 0] - a[0, 1] - a[1, 0] + a[1, 1]
    p = (a[1, 1] - a[1, 0]) / den
    q = (a[1, 1] - a[0, 1]) / den
    value = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]) / den
    return float(value), (np.array([p, 1 - p]), np.array([q, 1 - q]))


def mixed_nash_2x2(game):
    """Fully mixed equilibrium of a 2x2 bimatrix game from the indifference conditions.

    Returns ``(p, q)`` or None when no interior equilibrium exists.
    """
    if game.shape != (2, 2):
        raise ValidationError("mixed_nash_2x2 handles 2x2 games only")
    a, b = game.a, game.b
    # q makes A indifferent between rows; p makes B indifferent between columns
    den_a = a[0, 0] - a[0, 1] - a[1, 0] + a[1, 1]
    den_b = b[0, 0] - b[0, 1] - b[1, 0] + b[1, 1]
    if den_a == 0 or den_b == 0:
        return None
    q = (a[1, 1] - a[0, 1]) / den_a
    p = (b[1, 1] - b[0, 1]) / den_b
    if not (0 < p < 1 and 0 < q < 1):
        return None
    return np.array([p, 1 - p]), np.array([q, 1 - q])
