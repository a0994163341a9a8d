import numpy as np
import pytest

from cpsa import kernels
from cpsa.airlink import complex_normal

BACKENDS = ["python"]
try:
    kernels.get_kernel("cython")
    BACKENDS.append("cython")
except ImportError:
    pass


def _oracle(Hh, H):
    """Per-trial explicit pseudo-inverse."""
    T, M, K = Hh.shape
    gain = np.empty((T, K), complex)
    leak = np.empty((T, K))
    for t in range(T):
        A = np.linalg.pinv(Hh[t]).conj().T
        W = A / np.linalg.norm(A, axis=0)
        X = H[t].conj().T @ W
        gain[t] = np.diag(X)
        X2 = np.abs(X) ** 2
        leak[t] = X2.sum(axis=1) - np.diag(X2)
    return gain, leak


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("M, K", [(1, 1), (3, 3), (8, 3), (16, 8), (40, 13)])
def test_against_pinv(backend, M, K, rng):
    H = complex_normal(rng, (64, M, K))
    Hh = H + 0.4 * complex_normal(rng, (64, M, K))
    gain, leak, inva, resid, ok = kernels.get_kernel(backend)(Hh, H, True)
    g0, l0 = _oracle(Hh, H)
    assert ok.all()
    np.testing.assert_allclose(gain, g0, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(leak, l0, rtol=1e-8, atol=1e-12)
    assert resid.max() < 1e-10


def test_backends_agree(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernel not built")
    H = complex_normal(rng, (300, 32, 8))
    Hh = H + complex_normal(rng, (300, 32, 8))
    a = kernels.get_kernel("python")(Hh, H, True)
    b = kernels.get_kernel("cython")(Hh, H, True)
    for x, y in zip(a[:3], b[:3]):
        np.testing.assert_allclose(x, y, rtol=1e-11, atol=1e-13)


@pytest.mark.parametrize("backend", BACKENDS)
def test_singular_trial_flagged(backend, rng):
    H = complex_normal(rng, (3, 6, 2))
    Hh = H.copy()
    Hh[1] = 1.0  # rank one
    gain, leak, inva, resid, ok = kernels.get_kernel(backend)(Hh, H, True)
    assert list(ok) == [True, False, True]
    assert gain[1].tolist() == [0, 0] and leak[1].tolist() == [0, 0]


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_kernel("fortran")


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
