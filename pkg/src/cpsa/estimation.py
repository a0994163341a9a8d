"""MMSE channel estimation at the BS.

The despread observation of user k has covariance ``omega_k * I`` and
cross-covariance ``beta_k * I`` with the true channel, so the MMSE filter
collapses to the scalar ``c_k = beta_k / omega_k``. No matrix inversion is
needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import LargeScaleProfile, SystemParams

__all__ = ["ChannelEstimate", "lmmse_stats", "lmmse_stats_all", "estimate_channel"]


@dataclass
class ChannelEstimate:
    h_hat: np.ndarray  # M x K
    lam: np.ndarray  # per-element variance of the estimate
    eta: np.ndarray  # per-element variance of the error


def lmmse_stats(params: SystemParams, profile: LargeScaleProfile, theta_col, k: int = 0):
    """Return ``(c_k, lambda_k, eta_k)`` for user ``k``.

    ``theta_col`` holds the N power shares that the attackers put on pilot k.
    """
    theta_col = np.asarray(theta_col, dtype=float).reshape(-1)
    if np.any(theta_col < 0) or np.any(theta_col > 1):
        raise ValueError("theta entries must lie in [0, 1]")
    if theta_col.size != profile.N:
        raise ValueError("theta column length must equal the attacker count")
    beta = profile.beta_users[k]
    attack = float(np.dot(theta_col, profile.beta_attackers)) * params.P_A / params.P_U
    omega = beta + attack + params.sigma2 / (params.tau_p * params.P_U)
    if not omega > 0:
        raise ArithmeticError("observation variance must be positive")
    c = beta / omega
    lam = beta * c
    return c, lam, beta - lam


def lmmse_stats_all(params: SystemParams, profile: LargeScaleProfile, theta):
    """Vectorised :func:`lmmse_stats` over all users; ``theta`` is N x K."""
    theta = np.asarray(theta, dtype=float).reshape(profile.N, profile.K)
    beta = profile.beta_users
    attack = (profile.beta_attackers @ theta) * params.P_A / params.P_U
    omega = beta + attack + params.sigma2 / (params.tau_p * params.P_U)
    c = beta / omega
    lam = beta * c
    return c, lam, beta - lam


def estimate_channel(y_k, c_k):
    return c_k * np.asarray(y_k)
