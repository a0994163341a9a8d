"""Independent reference computations shared by several test modules."""

import itertools

import numpy as np

from cpsa.rate import rate_coefficients_all


def face_grid(K, step=0.01):
    """All points of {x >= 0, sum(x) = 1} on a lattice of the given step."""
    n = int(round(1 / step))
    pts = [c for c in itertools.product(range(n + 1), repeat=K - 1) if sum(c) <= n]
    return np.array([list(c) + [n - sum(c)] for c in pts], dtype=float) / n


def grid_min(params, profile, step=0.01, chunk=20_000):
    """Exhaustive minimum of the closed-form sum-rate over the product of
    full-budget faces (one per attacker)."""
    A, B, C = rate_coefficients_all(params, profile)
    nu = profile.beta_attackers
    G = face_grid(params.K, step)
    loads = [nu[0] * G]
    for n in range(1, params.N):
        prev = loads[-1]
        loads.append(None)
        # combine lazily in chunks to bound memory
        loads[-1] = (prev, nu[n] * G)
    best = np.inf
    if params.N == 1:
        t = loads[0]
        f = (np.log1p(A / (B + C * t)) / np.log(params.rate_log_base)).sum(axis=1)
        return float(f.min())
    t1, t2 = loads[1]
    for i in range(0, len(t1), max(1, chunk // len(t2))):
        t = t1[i:i + max(1, chunk // len(t2)), None, :] + t2[None, :, :]
        f = (np.log1p(A / (B + C * t)) / np.log(params.rate_log_base)).sum(axis=-1)
        best = min(best, float(f.min()))
    return best
