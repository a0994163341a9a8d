"""Seeded trial engine for the uplink-training / ZF-downlink chain.

Every fading trial owns a generator seeded from ``trial_seed(master, index)``.
Trials are processed in fixed-size chunks; chunks may run on several worker
threads, but their moments are merged strictly in trial order, so results
do not depend on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .airlink import AttackAllocation, attack_waveforms, pilot_matrix
from .attack_opt import SolverSettings, optimize_attack
from .estimation import lmmse_stats_all
from .precoding import Z95, MomentEstimates, empirical_sinr
from .rate import RateReport, jamming_effective_allocation, sum_rate
from .scenario import (LargeScaleProfile, PathLossModel, SystemParams, annulus_radius,
                       build_profile)

__all__ = [
    "SCHEMES",
    "TrialPlan",
    "trial_seed",
    "trial_seeds",
    "scheme_allocation",
    "draw_placement",
    "run_scheme",
    "run_placement_average",
    "closed_form_placement_average",
]

SCHEMES = ("none", "uniform", "optimal", "noise_jamming")

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_PLACEMENT_SALT = 0xD1B54A32D192ED03
CHUNK = 256


def trial_seed(master_seed: int, trial_index: int) -> int:
    """SplitMix64 finaliser applied to ``master ^ (index * golden)``."""
    z = ((master_seed & _MASK) ^ ((trial_index * _GOLDEN) & _MASK))
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def trial_seeds(master_seed: int, indices) -> np.ndarray:
    """Vectorised :func:`trial_seed` (uint64 arithmetic wraps modulo 2**64)."""
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(master_seed & _MASK) ^ (idx * np.uint64(_GOLDEN))
        z = z + np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class TrialPlan:
    n_fading_trials: int = 10_000
    n_placement_trials: int = 1
    master_seed: int = 20_190_101
    scheme: str = "uniform"

    def __post_init__(self):
        if self.n_fading_trials < 1 or self.n_placement_trials < 1:
            raise ValueError("trial counts must be at least 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not 0 <= self.master_seed <= _MASK:
            raise ValueError("master_seed must be an unsigned 64-bit integer")


def scheme_allocation(params: SystemParams, profile: LargeScaleProfile, scheme: str,
                      settings: SolverSettings | None = None) -> AttackAllocation:
    """Allocation used for estimation statistics and the closed form.

    For noise jamming this is the second-order equivalent split ``1 / tau_p``.
    """
    N, K = params.N, params.K
    if scheme == "none" or N == 0:
        if scheme == "optimal":
            raise ValueError("scheme 'optimal' needs at least one attacker")
        return AttackAllocation.zeros(N, K)
    if scheme == "uniform":
        return AttackAllocation.uniform(N, K)
    if scheme == "noise_jamming":
        return jamming_effective_allocation(params)
    if scheme == "optimal":
        return optimize_attack(params, profile, settings).theta_star
    raise ValueError(f"unknown scheme {scheme!r}")


class _ChunkSimulator:
    """Runs one chunk of fading trials for a fixed profile and attack."""

    def __init__(self, params, profile, alloc, scheme, check_zf, kernel):
        self.p = params
        self.profile = profile
        self.scheme = scheme
        self.check_zf = check_zf
        self.kernel = kernel
        self.pilots = pilot_matrix(params.tau_p, params.K)
        if scheme == "noise_jamming":
            # random waveforms drawn per trial; the BS sees their second-order statistics
            alloc = jamming_effective_allocation(params)
            self.S = None
        else:
            self.S = attack_waveforms(alloc, params.P_A, self.pilots)  # N x tau
        self.c, _, _ = lmmse_stats_all(params, profile, alloc.theta)
        self.sqrt_bu = np.sqrt(profile.beta_users)
        self.sqrt_ba = np.sqrt(profile.beta_attackers)

    def _draw(self, seeds):
        p = self.p
        M, K, N, tau = p.M, p.K, p.N, p.tau_p
        jam = self.scheme == "noise_jamming"
        sizes = [M * K, M * N, M * tau, N * tau if jam else 0]
        total = sum(sizes)
        Z = np.empty((len(seeds), 2 * total))
        for i, s in enumerate(seeds):
            Z[i] = np.random.Generator(np.random.PCG64(int(s))).standard_normal(2 * total)
        W = (Z[:, :total] + 1j * Z[:, total:]) * math.sqrt(0.5)
        o = np.cumsum([0] + sizes)
        T = len(seeds)
        gB = W[:, o[0]:o[1]].reshape(T, M, K)
        gA = W[:, o[1]:o[2]].reshape(T, M, N)
        U = W[:, o[2]:o[3]].reshape(T, M, tau) * math.sqrt(p.sigma2)
        S = W[:, o[3]:o[4]].reshape(T, N, tau) * math.sqrt(p.P_A) if jam else self.S
        return gB * self.sqrt_bu, gA * self.sqrt_ba, U, S

    def __call__(self, seeds):
        p = self.p
        HB, HA, U, S = self._draw(seeds)
        Y = math.sqrt(p.tau_p * p.P_U) * (HB @ self.pilots.T) + HA @ S + U
        y = (Y @ np.conj(self.pilots)) / math.sqrt(p.tau_p * p.P_U)
        Hh = y * self.c
        return self.kernel(Hh, HB, self.check_zf)


def _simulate(params, profile, alloc, scheme, n_trials, master_seed, workers=1,
              check_zf=False, kernel=None):
    kernel = kernel or kernels.zf_moments
    sim = _ChunkSimulator(params, profile, alloc, scheme, check_zf, kernel)
    seeds = trial_seeds(master_seed, np.arange(n_trials))
    chunks = [seeds[i:i + CHUNK] for i in range(0, n_trials, CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(sim, chunks))
    else:
        results = [sim(c) for c in chunks]

    moments = MomentEstimates(params.K)
    worst = 0.0
    for chunk_seeds, (gain, leak, _inva, resid, ok) in zip(chunks, results):
        if not ok.all():
            gain, leak, resid = gain.copy(), leak.copy(), resid.copy()
            for i in np.nonzero(~ok)[0]:
                g_i, l_i, r_i, tries = _resample(sim, int(chunk_seeds[i]))
                gain[i], leak[i], resid[i] = g_i, l_i, r_i
                moments.singular += tries
        moments.update(gain, leak)
        if check_zf:
            worst = max(worst, float(resid.max()))
    return moments, worst


def _resample(sim, seed, max_tries=100):
    for attempt in range(1, max_tries + 1):
        s = np.array([trial_seed(seed, attempt)], dtype=np.uint64)
        gain, leak, _inva, resid, ok = sim(s)
        if ok[0]:
            return gain[0], leak[0], resid[0], attempt
    raise np.linalg.LinAlgError("Gram matrix singular in every resampled trial")


def run_scheme(params: SystemParams, profile: LargeScaleProfile, plan: TrialPlan,
               workers: int = 1, alloc: AttackAllocation | None = None,
               settings: SolverSettings | None = None, check_zf: bool = False,
               kernel=None) -> tuple[RateReport, RateReport]:
    """Empirical and closed-form rate reports for one large-scale profile.

    ``alloc`` overrides the allocation implied by ``plan.scheme``. Under noise
    jamming the waveforms are random and ``alloc`` (default ``1 / tau_p``)
    only feeds the closed form.
    """
    profile.check(params)
    if plan.scheme == "optimal" and params.N < 1:
        raise ValueError("scheme 'optimal' needs at least one attacker")
    if alloc is None:
        alloc = scheme_allocation(params, profile, plan.scheme, settings)
    moments, worst = _simulate(params, profile, alloc, plan.scheme, plan.n_fading_trials,
                               plan.master_seed, workers, check_zf, kernel)
    emp = empirical_sinr(moments, params)
    emp.extra.update(theta=alloc.theta, zf_residual=worst, moments=moments)
    cf = sum_rate(params, profile, alloc)
    cf.extra["theta"] = alloc.theta
    return emp, cf


def draw_placement(params: SystemParams, model: PathLossModel, seed: int) -> LargeScaleProfile:
    """Large-scale profile of one random drop.

    User fractions are drawn first, then attacker fractions, from one
    generator, so drops with more attackers extend those with fewer.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    du = annulus_radius(rng.random(params.K), model.r_min, model.r_max_users)
    da = annulus_radius(rng.random(params.N), model.r_min, model.r_max_attackers)
    return build_profile(params, model, du, da)


def _placement_seed(master_seed, p):
    return trial_seed(master_seed ^ _PLACEMENT_SALT, p)


def _summarise(values, per_user, source, extra=None):
    values = np.asarray(values, dtype=float)
    n = values.size
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    rep = RateReport(per_user_rate=np.mean(per_user, axis=0), sum_rate=float(values.mean()),
                     source=source, sum_ci=Z95 * se)
    rep.extra.update(stderr=se, per_placement=values, **(extra or {}))
    return rep


def run_placement_average(params: SystemParams, model: PathLossModel, plan: TrialPlan,
                          workers: int = 1, settings: SolverSettings | None = None,
                          kernel=None) -> tuple[RateReport, RateReport]:
    """Outer loop over random drops, inner loop over fading trials.

    The optimal allocation is recomputed for every drop. Confidence
    half-widths of the returned reports come from the between-drop spread.
    """
    emp_sum, cf_sum, emp_users, cf_users = [], [], [], []
    for p in range(plan.n_placement_trials):
        seed = _placement_seed(plan.master_seed, p)
        profile = draw_placement(params, model, seed)
        sub = TrialPlan(plan.n_fading_trials, 1, seed, plan.scheme)
        emp, cf = run_scheme(params, profile, sub, workers, settings=settings, kernel=kernel)
        emp_sum.append(emp.sum_rate)
        cf_sum.append(cf.sum_rate)
        emp_users.append(emp.per_user_rate)
        cf_users.append(cf.per_user_rate)
    return (_summarise(emp_sum, emp_users, "empirical"),
            _summarise(cf_sum, cf_users, "closed_form"))


def closed_form_placement_average(params: SystemParams, model: PathLossModel, plan: TrialPlan,
                                  settings: SolverSettings | None = None) -> RateReport:
    """Placement-averaged closed-form sum-rate (no fading trials needed)."""
    sums, users = [], []
    for p in range(plan.n_placement_trials):
        profile = draw_placement(params, model, _placement_seed(plan.master_seed, p))
        rep = sum_rate(params, profile, scheme_allocation(params, profile, plan.scheme, settings))
        sums.append(rep.sum_rate)
        users.append(rep.per_user_rate)
    return _summarise(sums, users, "closed_form")
