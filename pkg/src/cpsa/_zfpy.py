"""Pure-numpy twin of the compiled ZF kernel (same contract as ``_zfcore``)."""

import numpy as np


def _chol_batch(G):
    ok = np.ones(G.shape[0], dtype=bool)
    try:
        return np.linalg.cholesky(G), ok
    except np.linalg.LinAlgError:
        L = np.zeros_like(G)
        for t in range(G.shape[0]):
            try:
                L[t] = np.linalg.cholesky(G[t])
            except np.linalg.LinAlgError:
                ok[t] = False
                L[t] = np.eye(G.shape[1])
        return L, ok


def zf_moments(Hh_all, H_all, check=True):
    Hh = np.asarray(Hh_all, dtype=np.complex128)
    H = np.asarray(H_all, dtype=np.complex128)
    if Hh.shape != H.shape:
        raise ValueError("estimated and true channel stacks differ in shape")
    T, M, K = Hh.shape
    HhH = np.conj(np.swapaxes(Hh, 1, 2))
    G = HhH @ Hh
    L, ok = _chol_batch(G)
    eye = np.broadcast_to(np.eye(K), (T, K, K))
    Li = np.linalg.solve(L, eye)
    A = Hh @ (np.conj(np.swapaxes(Li, 1, 2)) @ Li)
    nrm = np.linalg.norm(A, axis=1)
    inva = 1.0 / nrm
    W = A * inva[:, None, :]

    X = np.conj(np.swapaxes(H, 1, 2)) @ W  # [t, k, i] = h_k^H w_i
    gain = np.diagonal(X, axis1=1, axis2=2).copy()
    X2 = np.abs(X) ** 2
    X2[:, np.arange(K), np.arange(K)] = 0.0
    leak = X2.sum(axis=2)

    if check:
        R = np.abs(HhH @ W) / np.linalg.norm(Hh, axis=1)[:, :, None]
        R[:, np.arange(K), np.arange(K)] = 0.0
        resid = R.reshape(T, -1).max(axis=1)
    else:
        resid = np.zeros(T)

    bad = ~ok
    if bad.any():
        gain[bad] = 0
        leak[bad] = 0
        inva[bad] = 0
        resid[bad] = 0
    return gain, leak, inva, resid, ok
