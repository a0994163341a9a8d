"""Uplink training phase: pilots, channels, attack signals and despreading."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import LargeScaleProfile, SystemParams

__all__ = [
    "AttackAllocation",
    "ChannelRealization",
    "complex_normal",
    "pilot_matrix",
    "draw_channels",
    "attack_waveform",
    "attack_waveforms",
    "uplink_receive",
    "despread",
    "despread_all",
    "noise_jamming_waveform",
]

_FEAS_TOL = 1e-9


def complex_normal(rng: np.random.Generator, shape, var=1.0):
    """Circularly-symmetric complex Gaussian samples with variance ``var``.

    Real and imaginary parts each carry ``var / 2``.
    """
    z = rng.standard_normal((2,) + tuple(np.atleast_1d(shape)))
    return np.sqrt(var / 2.0) * (z[0] + 1j * z[1])


@dataclass(frozen=True)
class AttackAllocation:
    """Power-split matrix ``theta`` (N x K); row n is attacker n's budget."""

    theta: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        if th.ndim != 2:
            raise ValueError("theta must be an N x K matrix")
        if np.any(th < -_FEAS_TOL) or np.any(th > 1 + _FEAS_TOL):
            raise ValueError("theta entries must lie in [0, 1]")
        if th.size and np.any(th.sum(axis=1) > 1 + 1e-7):
            raise ValueError("each attacker row of theta must sum to at most 1")
        object.__setattr__(self, "theta", np.clip(th, 0.0, 1.0))

    @classmethod
    def zeros(cls, N, K):
        return cls(np.zeros((N, K)))

    @classmethod
    def uniform(cls, N, K):
        return cls(np.full((N, K), 1.0 / K))

    @property
    def shape(self):
        return self.theta.shape

    def loading(self, beta_attackers) -> np.ndarray:
        """Per-user attack loading ``t_k = sum_n beta_A[n] * theta[n, k]``."""
        return np.asarray(beta_attackers, dtype=float) @ self.theta


@dataclass
class ChannelRealization:
    H_B: np.ndarray  # M x K
    H_A: np.ndarray  # M x N


def pilot_matrix(tau_p: int, K: int, kind: str = "dft") -> np.ndarray:
    """Orthonormal pilot book of shape (tau_p, K); column k is ``p_k``."""
    if tau_p < K:
        raise ValueError(f"cannot fit {K} orthogonal pilots in length {tau_p}")
    if kind == "dft":
        n = np.arange(tau_p)[:, None]
        k = np.arange(K)[None, :]
        return np.exp(-2j * np.pi * n * k / tau_p) / np.sqrt(tau_p)
    if kind == "canonical":
        return np.eye(tau_p, K, dtype=complex)
    raise ValueError(f"unknown pilot kind {kind!r}")


def draw_channels(rng: np.random.Generator, M: int, profile: LargeScaleProfile) -> ChannelRealization:
    g_b = complex_normal(rng, (M, profile.K))
    g_a = complex_normal(rng, (M, profile.N))
    return ChannelRealization(g_b * np.sqrt(profile.beta_users),
                              g_a * np.sqrt(profile.beta_attackers))


def attack_waveform(theta_row, P_A: float, pilots: np.ndarray) -> np.ndarray:
    """Spoofing signal of one attacker: a weighted sum of all users' pilots."""
    theta_row = np.asarray(theta_row, dtype=float)
    if np.any(theta_row < 0):
        raise ValueError("negative power share")
    tau_p = pilots.shape[0]
    return pilots @ np.sqrt(tau_p * theta_row * P_A)


def attack_waveforms(alloc: AttackAllocation, P_A: float, pilots: np.ndarray) -> np.ndarray:
    """All N spoofing waveforms stacked as rows (N x tau_p)."""
    tau_p = pilots.shape[0]
    return np.sqrt(tau_p * alloc.theta * P_A) @ pilots.T


def noise_jamming_waveform(rng: np.random.Generator, P_A: float, tau_p: int) -> np.ndarray:
    """Gaussian jamming with per-symbol power ``P_A``."""
    if P_A < 0:
        raise ValueError("P_A must be non-negative")
    return np.sqrt(P_A) * complex_normal(rng, tau_p)


def uplink_receive(rng, channels: ChannelRealization, pilots: np.ndarray,
                   attack_signals: np.ndarray, params: SystemParams) -> np.ndarray:
    """Training block ``Y_B`` (M x tau_p) seen at the BS.

    ``attack_signals`` is N x tau_p. Pass ``rng=None`` for a noiseless block.
    """
    M, K = channels.H_B.shape
    tau_p = pilots.shape[0]
    attack_signals = np.asarray(attack_signals, dtype=complex).reshape(-1, tau_p)
    if pilots.shape[1] != K or attack_signals.shape[0] != channels.H_A.shape[1]:
        raise ValueError("dimension mismatch between channels, pilots and attack signals")
    Y = np.sqrt(tau_p * params.P_U) * channels.H_B @ pilots.T + channels.H_A @ attack_signals
    if rng is not None:
        Y = Y + complex_normal(rng, (M, tau_p), params.sigma2)
    return Y


def despread(Y_B: np.ndarray, pilot_k: np.ndarray, tau_p: int, P_U: float) -> np.ndarray:
    """Correlate the training block with ``conj(p_k)`` and undo the pilot gain."""
    return (Y_B @ np.conj(pilot_k)) / np.sqrt(tau_p * P_U)


def despread_all(Y_B: np.ndarray, pilots: np.ndarray, P_U: float) -> np.ndarray:
    """Despread every user at once; column k of the result is ``y_{B,k}``.

    Accepts a single block (M x tau_p) or a stack (T x M x tau_p).
    """
    tau_p = pilots.shape[0]
    return (Y_B @ np.conj(pilots)) / np.sqrt(tau_p * P_U)
