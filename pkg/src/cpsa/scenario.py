"""System constants, unit conversions and the cell geometry.

All internal quantities are linear (mW for powers, dimensionless gains);
dB/dBm only appear when a configuration is read or written.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SystemParams",
    "PathLossModel",
    "LargeScaleProfile",
    "dbm_to_linear",
    "linear_to_dbm",
    "db_to_linear",
    "path_loss_beta",
    "place_uniform_annulus",
    "build_profile",
]


def dbm_to_linear(p_dbm):
    """Convert dBm to mW."""
    out = 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_dbm(p_mw):
    """Convert mW to dBm."""
    return 10.0 * np.log10(p_mw)


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """Scalar constants of one single-cell scenario.

    Powers and noise are linear mW. ``rate_log_base`` is 2 (bits) or
    ``math.e`` (nats).
    """

    M: int
    K: int
    N: int
    tau_p: int
    P_U: float
    P_A: float
    P_B: float
    sigma2: float
    rate_log_base: float = 2.0

    def __post_init__(self):
        if self.M < 1 or self.K < 1 or self.N < 0:
            raise ValueError(f"invalid counts M={self.M}, K={self.K}, N={self.N}")
        if self.M < self.K:
            raise ValueError(f"ZF needs M >= K (got M={self.M}, K={self.K})")
        if self.tau_p < self.K:
            raise ValueError(f"orthogonal pilots need tau_p >= K (got {self.tau_p} < {self.K})")
        for name in ("P_U", "P_A", "P_B", "sigma2"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if self.rate_log_base not in (2, 2.0, math.e):
            raise ValueError("rate_log_base must be 2 or e")

    @classmethod
    def from_dbm(cls, M, K, N, tau_p=None, p_u_dbm=10.0, p_a_dbm=10.0,
                 p_b_dbm=40.0, noise_dbm=-90.0, rate_log_base=2.0):
        return cls(M=M, K=K, N=N, tau_p=K if tau_p is None else tau_p,
                   P_U=float(dbm_to_linear(p_u_dbm)), P_A=float(dbm_to_linear(p_a_dbm)),
                   P_B=float(dbm_to_linear(p_b_dbm)), sigma2=float(dbm_to_linear(noise_dbm)),
                   rate_log_base=rate_log_base)

    @property
    def log_scale(self) -> float:
        """1 / ln(base): multiply a rate in nats by this."""
        return 1.0 / math.log(self.rate_log_base)

    def replace(self, **changes) -> "SystemParams":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass(frozen=True)
class PathLossModel:
    """Distance-based large-scale gain ``L0 * (d / ref_distance_m) ** -alpha``.

    ``ref_distance_m`` fixes the unit in which ``d`` enters the power law
    (1 m by default; the figure presets use 1000 m, i.e. kilometres).
    """

    L0_db: float = -45.0
    alpha: float = 3.7
    r_min: float = 50.0
    r_max_users: float = 400.0
    r_max_attackers: float = 300.0
    ref_distance_m: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not (0 <= self.r_min < self.r_max_users and self.r_min < self.r_max_attackers):
            raise ValueError("need 0 <= r_min < r_max_users and r_min < r_max_attackers")
        if not self.ref_distance_m > 0:
            raise ValueError("ref_distance_m must be positive")

    def replace(self, **changes) -> "PathLossModel":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass(frozen=True)
class LargeScaleProfile:
    beta_users: np.ndarray
    beta_attackers: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        bu = np.atleast_1d(np.asarray(self.beta_users, dtype=float))
        ba = np.atleast_1d(np.asarray(self.beta_attackers, dtype=float)).reshape(-1)
        if bu.ndim != 1 or bu.size == 0:
            raise ValueError("beta_users must be a non-empty vector")
        if np.any(bu <= 0) or np.any(ba < 0):
            raise ValueError("large-scale gains must be positive")
        object.__setattr__(self, "beta_users", bu)
        object.__setattr__(self, "beta_attackers", ba)

    @property
    def K(self) -> int:
        return self.beta_users.size

    @property
    def N(self) -> int:
        return self.beta_attackers.size

    def check(self, params: SystemParams) -> None:
        if self.K != params.K or self.N != params.N:
            raise ValueError(
                f"profile has K={self.K}, N={self.N}; params expect K={params.K}, N={params.N}")


def path_loss_beta(d, model: PathLossModel):
    """Large-scale gain at distance ``d`` metres (scalar or array)."""
    d = np.asarray(d, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("distance must be positive")
    beta = db_to_linear(model.L0_db) * (d / model.ref_distance_m) ** (-model.alpha)
    return float(beta) if beta.ndim == 0 else beta


def annulus_radius(u, r_min, r_max):
    """Map u in [0, 1] to an area-uniform radius on [r_min, r_max]."""
    return np.sqrt(r_min**2 + np.asarray(u) * (r_max**2 - r_min**2))


def place_uniform_annulus(rng: np.random.Generator, count: int, r_min: float, r_max: float):
    """Draw ``count`` BS distances uniformly over the annulus area."""
    if not (0 <= r_min < r_max):
        raise ValueError(f"need 0 <= r_min < r_max, got {r_min}, {r_max}")
    return annulus_radius(rng.random(count), r_min, r_max)


def build_profile(params: SystemParams, model: PathLossModel,
                  user_distances, attacker_distances) -> LargeScaleProfile:
    du = np.atleast_1d(np.asarray(user_distances, dtype=float))
    da = np.asarray(attacker_distances, dtype=float).reshape(-1)
    if du.size != params.K or da.size != params.N:
        raise ValueError(
            f"expected {params.K} user and {params.N} attacker distances, "
            f"got {du.size} and {da.size}")
    ba = path_loss_beta(da, model) if da.size else np.zeros(0)
    return LargeScaleProfile(np.atleast_1d(path_loss_beta(du, model)), np.atleast_1d(ba))
