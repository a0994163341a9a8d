"""ZF precoding from corrupted estimates and empirical SINR moments.

The downlink rate under statistical-CSI detection needs three moments per
user: the mean and variance of the effective gain ``h_k^H w_k`` and the
leakage ``sum_{i != k} E|h_k^H w_i|^2``. :class:`MomentEstimates` keeps
running first and second moments of these per-trial quantities so that the
rate estimate comes with a delta-method confidence interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .airlink import ChannelRealization
from .rate import RateReport
from .scenario import SystemParams

__all__ = [
    "SingularGramError",
    "InsufficientDataError",
    "Precoder",
    "MomentEstimates",
    "zf_precoder",
    "downlink_observe",
    "accumulate_moments",
    "empirical_sinr",
    "qpsk_symbols",
]

Z95 = 1.959963984540054


class SingularGramError(np.linalg.LinAlgError):
    """The Gram matrix of the channel estimate is not positive definite."""


class InsufficientDataError(ValueError):
    pass


@dataclass
class Precoder:
    W: np.ndarray  # M x K, unit-norm columns
    inv_a_norm: np.ndarray  # K


def zf_precoder(h_hat: np.ndarray) -> Precoder:
    """Normalised columns of ``H_hat (H_hat^H H_hat)^{-1}``.

    The K x K Gram matrix is inverted through its Cholesky factor.
    """
    h_hat = np.asarray(h_hat, dtype=complex)
    if h_hat.ndim == 1:
        h_hat = h_hat[:, None]
    M, K = h_hat.shape
    if M < K:
        raise ValueError("ZF needs at least as many antennas as users")
    G = h_hat.conj().T @ h_hat
    try:
        factor = scipy.linalg.cho_factor(G, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularGramError(str(exc)) from exc
    A = h_hat @ scipy.linalg.cho_solve(factor, np.eye(K))
    norms = np.linalg.norm(A, axis=0)
    return Precoder(W=A / norms, inv_a_norm=1.0 / norms)


def qpsk_symbols(rng: np.random.Generator, K: int) -> np.ndarray:
    bits = rng.integers(0, 2, size=(2, K))
    return ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / math.sqrt(2)


def downlink_observe(rng, channels: ChannelRealization, precoder: Precoder,
                     params: SystemParams, symbols=None, power=None) -> np.ndarray:
    """Received scalar of every user for one downlink symbol.

    ``power`` overrides ``params.P_B``; ``rng=None`` drops the receiver noise.
    """
    K = channels.H_B.shape[1]
    if symbols is None:
        symbols = qpsk_symbols(rng, K)
    P_B = params.P_B if power is None else power
    y = math.sqrt(P_B) * (channels.H_B.conj().T @ precoder.W) @ np.asarray(symbols)
    if rng is not None:
        z = rng.standard_normal((2, K))
        y = y + math.sqrt(params.sigma2 / 2) * (z[0] + 1j * z[1])
    return y


class MomentEstimates:
    """Running moments of the per-trial features of each user.

    Features (length 4K): Re g, Im g, |g|^2 and the leakage, where
    ``g = h_k^H w_k``. Batches are merged with the pairwise co-moment update,
    so the result depends only on the order in which batches arrive.
    """

    def __init__(self, K: int):
        self.K = K
        self.count = 0
        self.singular = 0
        self._mean = np.zeros(4 * K)
        self._m2 = np.zeros((4 * K, 4 * K))

    @staticmethod
    def features(gain, leak) -> np.ndarray:
        gain = np.atleast_2d(gain)
        leak = np.atleast_2d(leak)
        return np.hstack([gain.real, gain.imag, np.abs(gain) ** 2, leak])

    def update(self, gain, leak) -> "MomentEstimates":
        F = self.features(gain, leak)
        n_b = F.shape[0]
        if n_b == 0:
            return self
        mean_b = F.mean(axis=0)
        D = F - mean_b
        m2_b = D.T @ D
        n_a = self.count
        n = n_a + n_b
        delta = mean_b - self._mean
        self._mean = self._mean + delta * (n_b / n)
        self._m2 = self._m2 + m2_b + np.outer(delta, delta) * (n_a * n_b / n)
        self.count = n
        return self

    def merge(self, other: "MomentEstimates") -> "MomentEstimates":
        if other.count:
            n_a, n_b = self.count, other.count
            n = n_a + n_b
            delta = other._mean - self._mean
            self._mean = self._mean + delta * (n_b / n)
            self._m2 = self._m2 + other._m2 + np.outer(delta, delta) * (n_a * n_b / n)
            self.count = n
        self.singular += other.singular
        return self

    @property
    def trial_count(self) -> int:
        return self.count

    @property
    def mean_gain(self) -> np.ndarray:
        K = self.K
        return self._mean[:K] + 1j * self._mean[K:2 * K]

    @property
    def var_gain(self) -> np.ndarray:
        K = self.K
        if self.count < 2:
            return np.zeros(K)
        d = np.diagonal(self._m2)
        return (d[:K] + d[K:2 * K]) / (self.count - 1)

    @property
    def interference(self) -> np.ndarray:
        return self._mean[3 * self.K:].copy()

    @property
    def mean_abs2(self) -> np.ndarray:
        return self._mean[2 * self.K:3 * self.K].copy()

    @property
    def covariance(self) -> np.ndarray:
        return self._m2 / max(self.count - 1, 1)


def accumulate_moments(channels: ChannelRealization, precoder: Precoder,
                       running: MomentEstimates) -> MomentEstimates:
    """Add one trial's effective gains to ``running``."""
    X = channels.H_B.conj().T @ precoder.W  # [k, i] = h_k^H w_i
    gain = np.diag(X).copy()
    X2 = np.abs(X) ** 2
    np.fill_diagonal(X2, 0.0)
    return running.update(gain[None, :], X2.sum(axis=1)[None, :])


def _gamma_and_grad(mean, K, P_B, sigma2):
    mr, mi = mean[:K], mean[K:2 * K]
    s, I = mean[2 * K:3 * K], mean[3 * K:]
    num = P_B * (mr**2 + mi**2)
    den = P_B * (s - mr**2 - mi**2 + I) + sigma2
    gamma = num / den
    g = np.zeros((K, 4 * K))
    idx = np.arange(K)
    common = 2 * P_B * (den + num) / den**2
    g[idx, idx] = common * mr
    g[idx, K + idx] = common * mi
    g[idx, 2 * K + idx] = -num * P_B / den**2
    g[idx, 3 * K + idx] = -num * P_B / den**2
    return gamma, g


def empirical_sinr(moments: MomentEstimates, params: SystemParams) -> RateReport:
    """Per-user SINR and rate from accumulated moments, with 95% CIs."""
    if moments.trial_count < 2:
        raise InsufficientDataError("need at least two trials for a variance estimate")
    K = moments.K
    P_B, s2 = params.P_B, params.sigma2
    num = P_B * np.abs(moments.mean_gain) ** 2
    den = P_B * moments.var_gain + P_B * moments.interference + s2
    gamma = num / den
    rate = np.log1p(gamma) * params.log_scale

    # delta method on the plug-in (biased-variance) form of gamma
    _, dgamma = _gamma_and_grad(moments._mean, K, P_B, s2)
    drate = dgamma * (params.log_scale / (1.0 + gamma))[:, None]
    cov = moments.covariance / moments.count
    per_user_var = np.einsum("kf,fg,kg->k", drate, cov, drate)
    gsum = drate.sum(axis=0)
    sum_var = float(gsum @ cov @ gsum)
    return RateReport(
        per_user_rate=rate,
        sum_rate=float(rate.sum()),
        source="empirical",
        per_user_ci=Z95 * np.sqrt(np.maximum(per_user_var, 0.0)),
        sum_ci=Z95 * math.sqrt(max(sum_var, 0.0)),
        extra={"gamma": gamma, "trial_count": moments.count, "singular": moments.singular},
    )
