"""Canonical (Gibbs) ensembles over a finite set of energy levels."""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import xlogx


@dataclass(frozen=True)
class GibbsEnsemble:
    energies: np.ndarray
    beta: float

    def __post_init__(self):
        e = np.array(self.energies, dtype=float).ravel()
        if e.size < 1 or not np.all(np.isfinite(e)):
            raise ValidationError("need at least one finite energy level")
        if not (np.isfinite(self.beta) and self.beta >= 0):
            raise ValidationError(f"beta must be finite and >= 0, got {self.beta}")
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def temperature(self):
        return np.inf if self.beta == 0 else 1.0 / self.beta

    def at(self, beta):
        return GibbsEnsemble(self.energies, beta)


def gibbs_state(ens):
    """Boltzmann weights exp(-beta E_i) / Z, computed relative to the ground level."""
    z = np.exp(-ens.beta * (ens.energies - ens.energies.min()))
    return z / z.sum()


def partition_data(ens):
    """Return (ln Z, <E>, <dE^2>)."""
    e = ens.energies
    e0 = e.min()
    shifted = np.exp(-ens.beta * (e - e0))
    log_z = np.log(shifted.sum()) - ens.beta * e0
    p = shifted / shifted.sum()
    mean = float(p @ e)
    var = float(p @ (e - mean) ** 2)
    return float(log_z), mean, var


def entropy_identity_check(ens):
    """Return (Shannon entropy of the Gibbs state, ln Z + beta <E>)."""
    s_direct = float(-xlogx(gibbs_state(ens)).sum())
    log_z, mean, _ = partition_data(ens)
    return s_direct, log_z + ens.beta * mean


def _entropy(ens):
    log_z, mean, _ = partition_data(ens)
    return log_z + ens.beta * mean


def _third_central_moment(ens):
    p = gibbs_state(ens)
    _, mean, _ = partition_data(ens)
    return float(p @ (ens.energies - mean) ** 3)


def entropy_derivatives(ens, h=None):
    """Analytic entropy derivatives next to central finite differences in beta.

    Derivatives with respect to <E> go through beta by the chain rule and are None
    when the energy variance vanishes.
    """
    b = ens.beta
    if not b > 0:
        raise ValidationError("entropy derivatives need beta > 0")
    if h is None:
        h = 1e-4 * max(b, 1.0)
    if not 0 < h <= b / 10:
        raise ValidationError(f"step h must lie in (0, beta/10], got {h}")

    _, mean, var = partition_data(ens)
    kappa3 = _third_central_moment(ens)
    lo, hi = ens.at(b - h), ens.at(b + h)
    s_lo, s0, s_hi = _entropy(lo), _entropy(ens), _entropy(hi)
    e_lo, e_hi = partition_data(lo)[1], partition_data(hi)[1]

    rec = {
        "beta": b,
        "temperature": 1.0 / b,
        "dS_dbeta": -b * var,
        "dS_dbeta_fd": (s_hi - s_lo) / (2 * h),
        # d<E>/dbeta = -var and d var/dbeta = -kappa3
        "d2S_dbeta2": -var + b * kappa3,
        "d2S_dbeta2_fd": (s_hi - 2 * s0 + s_lo) / h**2,
        "dS_dE": None,
        "dS_dE_fd": None,
        "d2S_dE2": None,
        "d2S_dE2_fd": None,
    }
    if var > 1e-300 and e_hi != e_lo:
        rec["dS_dE"] = b
        rec["dS_dE_fd"] = (s_hi - s_lo) / (e_hi - e_lo)
        # -1/tau^2 dtau/d<E> with dtau/d<E> = 1/(beta^2 var)
        rec["d2S_dE2"] = -1.0 / var
        # slope of dS/d<E> = beta against <E>
        rec["d2S_dE2_fd"] = (2 * h) / (e_hi - e_lo)
    return rec


def beta_sweep(energies, betas):
    """Rows (beta, ln Z, <E>, <dE^2>, S) for each beta."""
    rows = []
    for b in betas:
        ens = GibbsEnsemble(energies, b)
        log_z, mean, var = partition_data(ens)
        rows.append((ens.beta, log_z, mean, var, log_z + ens.beta * mean))
    return np.array(rows)
