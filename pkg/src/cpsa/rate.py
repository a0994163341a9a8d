"""Closed-form achievable rates under spoofed training and ZF precoding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import poch

from .airlink import AttackAllocation
from .scenario import LargeScaleProfile, SystemParams

__all__ = [
    "xi",
    "xi_unsquared",
    "RateCoefficients",
    "RateReport",
    "rate_coefficients",
    "rate_coefficients_all",
    "closed_form_rate",
    "sum_rate",
    "per_user_rates",
    "jamming_effective_allocation",
]


def xi(x):
    """Squared gamma ratio ``(Gamma(x + 1/2) / Gamma(x)) ** 2``.

    This is ``|E{h_hat^H w}|^2 / lambda`` for a ZF gain with ``x = M - K + 1``
    degrees of freedom. Evaluated through the Pochhammer symbol ``(x)_{1/2}``,
    which stays accurate where a difference of log-gammas would cancel;
    behaves like ``x - 1/4`` asymptotically.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 1):
        raise ValueError("xi is defined for x >= 1")
    out = poch(x, 0.5) ** 2
    return float(out) if out.ndim == 0 else out


def xi_unsquared(x):
    """Plain ratio ``Gamma(x + 1/2) / Gamma(x)``; kept for comparison only."""
    return np.sqrt(xi(x))


@dataclass(frozen=True)
class RateCoefficients:
    """Per-user rate is ``log(1 + A / (B + C * t))`` with attack loading t."""

    A: float
    B: float
    C: float

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError(f"A must be positive, got {self.A}")
        if self.C < 0:
            raise ValueError(f"C must be non-negative, got {self.C}")
        # B + C t is increasing in t >= 0, so B > 0 covers the whole range
        if not self.B > 0:
            raise ValueError(f"denominator B + C t must stay positive (B={self.B})")


@dataclass
class RateReport:
    per_user_rate: np.ndarray
    sum_rate: float
    source: str  # "closed_form" | "empirical"
    per_user_ci: Optional[np.ndarray] = None
    sum_ci: Optional[float] = None
    extra: dict = field(default_factory=dict)


def rate_coefficients_all(params: SystemParams, profile: LargeScaleProfile, xi_fn=xi):
    """Vectors ``A, B, C`` for all users (length K each)."""
    M, K = params.M, params.K
    x = xi_fn(M - K + 1)
    beta = profile.beta_users
    tp = params.tau_p * params.P_U
    load = K * beta + params.sigma2 / params.P_B
    A = x * tp * beta**2
    B = (M - 2 * K + 1 - x) * tp * beta**2 + load * (tp * beta + params.sigma2)
    C = load * params.tau_p * params.P_A
    if np.any(B <= 0):
        raise ValueError("rate denominator not positive; check M >= K")
    return A, B, C


def rate_coefficients(params: SystemParams, profile: LargeScaleProfile, k: int) -> RateCoefficients:
    A, B, C = rate_coefficients_all(params, profile)
    return RateCoefficients(float(A[k]), float(B[k]), float(C[k]))


def closed_form_rate(coeffs: RateCoefficients, t_k: float, log_base: float = 2.0) -> float:
    if t_k < 0:
        raise ValueError("attack loading must be non-negative")
    return math.log1p(coeffs.A / (coeffs.B + coeffs.C * t_k)) / math.log(log_base)


def per_user_rates(A, B, C, t, log_base=2.0):
    return np.log1p(A / (B + C * t)) / math.log(log_base)


def sum_rate(params: SystemParams, profile: LargeScaleProfile,
             theta: AttackAllocation | np.ndarray | None = None) -> RateReport:
    profile.check(params)
    if theta is None:
        theta = AttackAllocation.zeros(params.N, params.K)
    elif not isinstance(theta, AttackAllocation):
        theta = AttackAllocation(np.asarray(theta, dtype=float).reshape(params.N, params.K))
    if theta.shape != (params.N, params.K):
        raise ValueError(f"theta must be {params.N} x {params.K}")
    A, B, C = rate_coefficients_all(params, profile)
    r = per_user_rates(A, B, C, theta.loading(profile.beta_attackers), params.rate_log_base)
    return RateReport(per_user_rate=r, sum_rate=float(r.sum()), source="closed_form")


def jamming_effective_allocation(params: SystemParams) -> AttackAllocation:
    """Allocation whose despread second-order statistics equal Gaussian jamming."""
    return AttackAllocation(np.full((params.N, params.K), 1.0 / params.tau_p))
