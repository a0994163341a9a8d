"""Attacker-side power allocation that minimises the closed-form sum-rate.

Each per-user term ``log(1 + A / (B + C t))`` is convex and decreasing in
the attack loading ``t = nu^T theta_k``, and the feasible set is a product
of capped simplices (one per attacker), so the problem is convex.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .airlink import AttackAllocation
from .rate import per_user_rates, rate_coefficients_all
from .scenario import LargeScaleProfile, SystemParams

__all__ = [
    "SolverSettings",
    "SolveResult",
    "objective_and_gradient",
    "project_feasible",
    "optimize_attack",
    "reduced_kkt_solve",
]


@dataclass(frozen=True)
class SolverSettings:
    max_iter: int = 100_000
    tol: float = 1e-8
    step_init: float = 1.0
    backtrack: float = 0.5

    def __post_init__(self):
        if self.max_iter < 1 or not self.tol > 0:
            raise ValueError("need max_iter >= 1 and tol > 0")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtracking ratio must lie in (0, 1)")
        if not self.step_init > 0:
            raise ValueError("step_init must be positive")


@dataclass
class SolveResult:
    theta_star: AttackAllocation
    objective: float
    iterations: int
    kkt_residual: float
    converged: bool = True
    no_effect: bool = False
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta_star.theta.tolist(),
            "objective": float(self.objective),
            "kkt_residual": float(self.kkt_residual),
            "iterations": int(self.iterations),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


class _Objective:
    """Closed-form sum-rate as a function of theta, with precomputed A, B, C."""

    def __init__(self, params: SystemParams, profile: LargeScaleProfile):
        profile.check(params)
        self.A, self.B, self.C = rate_coefficients_all(params, profile)
        self.nu = profile.beta_attackers
        self.base = params.rate_log_base
        self.scale = params.log_scale

    def value(self, theta):
        return float(per_user_rates(self.A, self.B, self.C, self.nu @ theta, self.base).sum())

    def delta(self, theta, cand):
        """``value(cand) - value(theta)`` without cancellation between the two."""
        d = self.B + self.C * (self.nu @ theta)
        dc = self.B + self.C * (self.nu @ cand)
        dt = self.nu @ (cand - theta)
        return float(self.scale * np.log1p(-self.A * self.C * dt / (dc * (d + self.A))).sum())

    def grad(self, theta):
        d = self.B + self.C * (self.nu @ theta)
        dk = -self.scale * self.A * self.C / (d * (self.A + d))
        return np.outer(self.nu, dk)


def _check_feasible(theta, N, K):
    theta = np.asarray(theta.theta if isinstance(theta, AttackAllocation) else theta, dtype=float)
    if theta.shape != (N, K):
        raise ValueError(f"theta must be {N} x {K}")
    AttackAllocation(theta)  # raises on entries outside [0, 1] or rows above 1
    return theta


def objective_and_gradient(params: SystemParams, profile: LargeScaleProfile, theta):
    """Sum-rate and its gradient with respect to every theta entry."""
    obj = _Objective(params, profile)
    theta = _check_feasible(theta, params.N, params.K)
    return obj.value(theta), obj.grad(theta)


def project_feasible(v):
    """Euclidean projection onto ``{x >= 0, sum(x) <= 1}``, row-wise for 2-D input."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 2:
        return np.vstack([project_feasible(row) for row in v]) if v.size else v.copy()
    x = np.maximum(v, 0.0)
    if x.sum() <= 1.0:
        return x
    # projection onto the unit simplex (sort and threshold)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(v - tau, 0.0)


def _pg_residual(theta, g):
    return float(np.linalg.norm(theta - project_feasible(theta - g)))


def optimize_attack(params: SystemParams, profile: LargeScaleProfile,
                    settings: SolverSettings | None = None) -> SolveResult:
    """Projected gradient descent from the uniform split, with Barzilai-Borwein
    trial steps and backtracking on the projected-step sufficient-decrease test.

    The stationarity measure is ``||theta - P(theta - grad)||`` (unit step).
    """
    settings = settings or SolverSettings()
    if params.N < 1:
        raise ValueError("optimisation needs at least one attacker")
    obj = _Objective(params, profile)
    N, K = params.N, params.K
    theta = np.full((N, K), 1.0 / K)
    if not np.any(obj.nu > 0) or not np.any(obj.C > 0):
        f = obj.value(theta)
        return SolveResult(AttackAllocation(theta), f, 0, 0.0, True, True, [f])

    f = obj.value(theta)
    g = obj.grad(theta)
    step = settings.step_init
    history = [f]
    converged = False
    it = 0
    for it in range(1, settings.max_iter + 1):
        if _pg_residual(theta, g) <= settings.tol:
            converged = True
            it -= 1
            break
        s = step
        while True:
            cand = project_feasible(theta - s * g)
            d = cand - theta
            df = obj.delta(theta, cand)
            if df <= float(np.sum(g * d)) + float(np.sum(d * d)) / (2 * s) or s < 1e-300:
                break
            s *= settings.backtrack
        gc = obj.grad(cand)
        dd = float(np.sum(d * d))
        if dd == 0.0:
            theta, g = cand, gc
            converged = _pg_residual(theta, g) <= settings.tol
            break
        sy = float(np.sum(d * (gc - g)))
        step = dd / sy if sy > 0 else s * 2.0
        theta, f, g = cand, f + min(df, 0.0), gc
        history.append(f)

    res = _pg_residual(theta, g)
    return SolveResult(AttackAllocation(theta), obj.value(theta), it, res,
                       converged or res <= settings.tol, False, history)


def reduced_kkt_solve(params: SystemParams, profile: LargeScaleProfile) -> SolveResult:
    """Solve the equivalent problem in the per-user loadings ``t``.

    With a common attack power every attacker reaches any loading vector with
    ``sum(t) <= S = sum(beta_A)``. The optimum equalises the marginal rate
    reduction over the attacked users; the multiplier is found by bisection.
    The lift ``theta[n, k] = t_k / S`` spreads every attacker identically.
    """
    if params.N < 1:
        raise ValueError("optimisation needs at least one attacker")
    obj = _Objective(params, profile)
    A, B, C = obj.A, obj.B, obj.C
    S = float(obj.nu.sum())
    N, K = params.N, params.K
    if S <= 0 or not np.any(C > 0):
        theta = np.full((N, K), 1.0 / K)
        return SolveResult(AttackAllocation(theta), obj.value(theta), 0, 0.0, True, True)

    scale = obj.scale

    def loads(mu):
        q = scale * A * C / mu
        u = 2.0 * q / (A + np.sqrt(A * A + 4.0 * q))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(C > 0, (u - B) / C, 0.0)
        return np.maximum(t, 0.0)

    # marginal gains at t = 0 bound the multiplier from above
    hi = float(np.max(scale * A * C / (B * (A + B))))
    lo = hi
    while loads(lo).sum() < S:
        lo *= 0.5
    it = 0
    while hi / lo - 1.0 > 1e-15 and it < 2000:
        mid = math.sqrt(lo * hi)
        if mid <= lo or mid >= hi:
            break
        if loads(mid).sum() >= S:
            lo = mid
        else:
            hi = mid
        it += 1
    t = loads(lo)
    t *= S / t.sum()
    theta = np.tile(t / S, (N, 1))
    theta = project_feasible(theta)  # absorbs rounding above 1
    res = _pg_residual(theta, obj.grad(theta))
    return SolveResult(AttackAllocation(theta), obj.value(theta), it, res)
