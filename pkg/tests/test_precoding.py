import math

import numpy as np
import pytest

from cpsa import kernels
from cpsa.airlink import ChannelRealization, complex_normal
from cpsa.precoding import (InsufficientDataError, MomentEstimates, SingularGramError,
                            accumulate_moments, downlink_observe, empirical_sinr, zf_precoder)
from cpsa.rate import xi

from conftest import unit_params


def test_single_user(rng):
    h = complex_normal(rng, (5, 1))
    pc = zf_precoder(h)
    np.testing.assert_allclose(pc.W[:, 0], h[:, 0] / np.linalg.norm(h))
    assert pc.inv_a_norm[0] == pytest.approx(np.linalg.norm(h))


def test_orthogonal_columns():
    H = np.eye(4, 3) * np.array([2.0, 1j, -0.5])
    pc = zf_precoder(H)
    np.testing.assert_allclose(pc.W, H / np.linalg.norm(H, axis=0), atol=1e-15)


def test_explicit_inverse_oracle(rng):
    H = complex_normal(rng, (8, 3))
    A = H @ np.linalg.inv(H.conj().T @ H)
    pc = zf_precoder(H)
    np.testing.assert_allclose(pc.W, A / np.linalg.norm(A, axis=0), atol=1e-10)
    X = H.conj().T @ pc.W
    np.testing.assert_allclose(np.linalg.norm(pc.W, axis=0), 1.0, atol=1e-12)
    off = np.abs(X - np.diag(np.diag(X))) / np.linalg.norm(H, axis=0)[:, None]
    assert off.max() < 1e-10
    np.testing.assert_allclose(np.diag(X), pc.inv_a_norm, atol=1e-12)
    assert np.all(np.abs(np.diag(X).imag) < 1e-12) and np.all(np.diag(X).real > 0)


def test_singular_gram():
    H = np.ones((4, 2), dtype=complex)
    with pytest.raises(SingularGramError):
        zf_precoder(H)


def test_downlink_observe(rng):
    p = unit_params(M=4, K=2, tau_p=2, sigma2=0.5)
    H = complex_normal(rng, (4, 2))
    ch = ChannelRealization(H, np.zeros((4, 0)))
    pc = zf_precoder(H)
    y = downlink_observe(None, ch, pc, p, symbols=np.array([1, -1]))
    np.testing.assert_allclose(y, np.diag(H.conj().T @ pc.W) * [1, -1], atol=1e-12)
    z = np.array([downlink_observe(rng, ch, pc, p, power=0.0) for _ in range(50_000)]).ravel()
    v = np.abs(z) ** 2
    assert abs(v.mean() - 0.5) < 3 * v.std(ddof=1) / math.sqrt(v.size)


def test_moments_basics(rng):
    m = MomentEstimates(2)
    H = complex_normal(rng, (6, 2))
    accumulate_moments(ChannelRealization(H, np.zeros((6, 0))), zf_precoder(H), m)
    assert m.trial_count == 1
    np.testing.assert_array_equal(m.var_gain, 0.0)
    np.testing.assert_allclose(m.interference, 0.0, atol=1e-20)
    np.testing.assert_allclose(np.abs(m.mean_gain), np.abs(zf_precoder(H).inv_a_norm))
    with pytest.raises(InsufficientDataError):
        empirical_sinr(m, unit_params(M=6, K=2, tau_p=2))


def test_moments_merge_matches_batch(rng):
    g = rng.standard_normal((300, 3)) + 1j * rng.standard_normal((300, 3))
    l = rng.random((300, 3))
    a = MomentEstimates(3).update(g, l)
    b = MomentEstimates(3)
    for i in range(0, 300, 37):
        b.merge(MomentEstimates(3).update(g[i:i + 37], l[i:i + 37]))
    np.testing.assert_allclose(a._mean, b._mean, rtol=1e-12)
    np.testing.assert_allclose(a._m2, b._m2, rtol=1e-10)
    np.testing.assert_allclose(a.var_gain, g.real.var(0, ddof=1) + g.imag.var(0, ddof=1))


def test_zero_gain_gives_zero_rate():
    m = MomentEstimates(1).update(np.zeros((4, 1)), np.zeros((4, 1)))
    rep = empirical_sinr(m, unit_params())
    assert rep.sum_rate == 0.0 and rep.extra["gamma"][0] == 0.0


def test_perfect_csi_interference_vanishes(rng):
    H = complex_normal(rng, (500, 16, 4))
    gain, leak, inva, resid, ok = kernels.zf_moments(H, H, True)
    assert ok.all() and leak.max() < 1e-20 and resid.max() < 1e-10
    np.testing.assert_allclose(gain.real, inva, rtol=1e-12)


def test_gain_pins_squared_xi(rng):
    """|E{h_hat^H w}|^2 / lambda equals xi(M-K+1) within 2% (M=16, K=4, no attack)."""
    M, K, lam = 16, 4, 0.6
    Hh = complex_normal(rng, (100_000, M, K), lam)
    _, _, inva, _, _ = kernels.zf_moments(Hh, Hh, False)
    ratio = inva.mean(axis=0) ** 2 / lam
    np.testing.assert_allclose(ratio, xi(M - K + 1), rtol=0.02)


def test_delta_method_gradient(rng):
    from cpsa.precoding import _gamma_and_grad
    K = 2
    mean = np.array([0.8, 1.1, 0.1, -0.2, 1.5, 1.6, 0.3, 0.2])
    g0, G = _gamma_and_grad(mean, K, 2.0, 0.5)
    h = 1e-6
    for j in range(4 * K):
        e = np.zeros(4 * K)
        e[j] = h
        fd = (_gamma_and_grad(mean + e, K, 2.0, 0.5)[0] - _gamma_and_grad(mean - e, K, 2.0, 0.5)[0]) / (2 * h)
        np.testing.assert_allclose(G[:, j], fd, rtol=1e-6, atol=1e-9)
