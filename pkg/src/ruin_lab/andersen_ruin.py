"""Renewal (Sparre Andersen) model: Spitzer series, ladder heights and survival.

The claim-surplus walk is ``S_n = sum_{j<=n} (X_j - c theta_j)``. With
``A = sum_n P(S_n > 0) / n`` the probability of ever reaching a strict
ascending ladder epoch is ``1 - exp(-A)``, and survival is the compound
geometric law of ladder heights with parameter ``1 - exp(-A)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import _kernels
from .classical_ruin import compound_survival, default_grid_step, discretize_samples
from .discrete_ruin import SurvivalTable
from .dist_core import ContinuousClaim, PerturbedClaim, perturb_continuous
from .errors import CensoringTooHigh, DegenerateModel, NPCViolation
from .mc_engine import STEP_BATCH, MCConfig, map_blocks, scan_walk


@dataclass(frozen=True, eq=False)
class AndersenModel:
    c: float
    claim: ContinuousClaim
    interarrival: ContinuousClaim

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("premium rate must be positive")
        if not self.interarrival.mean > 0:
            raise DegenerateModel("inter-arrival times must have positive mean")
        x0 = self.claim.is_degenerate()
        t0 = self.interarrival.is_degenerate()
        if x0 is not None and t0 is not None and math.isclose(x0, self.c * t0, rel_tol=0.0, abs_tol=1e-12):
            raise DegenerateModel("X = c*theta almost surely: the surplus never moves")

    @property
    def drift(self) -> float:
        """``E(X - c theta)``; negative means a positive safety loading."""
        return self.claim.mean - self.c * self.interarrival.mean

    def with_claim(self, claim: ContinuousClaim) -> "AndersenModel":
        return AndersenModel(self.c, claim, self.interarrival)

    def increments(self, rng, n_paths, n_steps, step0):
        x = self.claim.sample(rng, (n_paths, n_steps))
        theta = self.interarrival.sample(rng, (n_paths, n_steps))
        return x - self.c * theta

    def coupled_increments(self, rng, n_paths, n_steps, step0):
        if not isinstance(self.claim, PerturbedClaim):
            raise TypeError("coupled simulation needs a PerturbedClaim")
        xs, x = self.claim.sample_pairs(rng, (n_paths, n_steps))
        ct = self.c * self.interarrival.sample(rng, (n_paths, n_steps))
        return xs - ct, x - ct

    def to_json(self) -> dict:
        return {
            "type": "andersen",
            "c": self.c,
            "claim": self.claim.to_json(),
            "interarrival": self.interarrival.to_json(),
        }


@dataclass
class SpitzerPartial:
    """Monte Carlo estimates of ``P(S_n > 0)`` and the partial sums ``A_n``.

    ``p_all[n-1]`` and ``a_all[n-1]`` cover every ``n`` up to ``max(n_list)``;
    the other arrays are restricted to ``n_list``. All come from one set of
    paths, so ``A_n`` is nondecreasing by construction.
    """

    n_list: np.ndarray
    p_hat: np.ndarray
    stderr: np.ndarray
    A: np.ndarray
    A_stderr: np.ndarray
    paths: int
    seed: int
    p_all: np.ndarray = field(repr=False)
    a_all: np.ndarray = field(repr=False)

    @property
    def psi0_lower(self) -> np.ndarray:
        return -np.expm1(-self.A)

    @property
    def A_max(self) -> float:
        return float(self.A[-1])

    @property
    def A_max_stderr(self) -> float:
        return float(self.A_stderr[-1])

    def rows(self):
        """``(n, p_hat, stderr, A_n, psi0_lower)`` per probed ``n``."""
        lower = self.psi0_lower
        return [
            (int(n), float(p), float(s), float(a), float(lo))
            for n, p, s, a, lo in zip(self.n_list, self.p_hat, self.stderr, self.A, lower)
        ]


def spitzer_estimate(model, n_list: Sequence[int], paths: int, seed: int, chunks: int = 1) -> SpitzerPartial:
    """Estimate ``P(S_n > 0)`` for all ``n <= max(n_list)`` from common paths."""
    n_list = np.array(sorted({int(n) for n in n_list}), dtype=np.int64)
    if n_list.size == 0 or n_list[0] < 1:
        raise ValueError("n_list must contain positive integers")
    n_max = int(n_list[-1])
    config = MCConfig(paths=paths, horizon=n_max, seed=seed, chunks=chunks)
    cuts = sorted(set(range(0, n_max, STEP_BATCH)) | {int(n) for n in n_list} | {0})

    def block(rng, n):
        csum = np.zeros(n)
        y = np.zeros(n)
        counts = np.zeros(n_max, dtype=np.int64)
        sums = np.zeros((n_list.size, 2))
        j = 0
        for t0, t1 in zip(cuts, cuts[1:] + [n_max]):
            if t1 <= t0:
                continue
            incr = np.ascontiguousarray(model.increments(rng, n, t1 - t0, t0), dtype=np.float64)
            _kernels.spitzer_accumulate(incr, csum, y, counts[t0:t1], t0)
            while j < n_list.size and n_list[j] == t1:
                sums[j] = (y.sum(), np.dot(y, y))
                j += 1
        return counts, sums

    parts = map_blocks(block, config)
    counts = np.zeros(n_max, dtype=np.int64)
    sums = np.zeros((n_list.size, 2))
    for cnt, s in parts:
        counts += cnt
        sums += s
    p_all = counts / paths
    a_all = np.cumsum(p_all / np.arange(1, n_max + 1))
    mean_y = sums[:, 0] / paths
    var_y = np.maximum(sums[:, 1] / paths - mean_y**2, 0.0)
    idx = n_list - 1
    p = p_all[idx]
    return SpitzerPartial(
        n_list=n_list,
        p_hat=p,
        stderr=np.sqrt(p * (1 - p) / paths),
        A=a_all[idx],
        A_stderr=np.sqrt(var_y / paths),
        paths=paths,
        seed=seed,
        p_all=p_all,
        a_all=a_all,
    )


def psi0_andersen(spitzer: SpitzerPartial, n: Optional[int] = None):
    """Bracket ``[1 - exp(-A_n), 1)`` for the ruin probability at zero surplus."""
    if n is None:
        a = spitzer.A_max
    else:
        a = float(spitzer.a_all[int(n) - 1])
    return (float(-math.expm1(-a)), 1.0)


@dataclass
class LadderSample:
    """First strict ascending ladder heights of simulated paths."""

    heights: np.ndarray
    censored: int
    horizon: int
    paths: int
    epochs: np.ndarray = field(repr=False)
    f_plus_inf: float = float("nan")

    @property
    def raw_fraction(self) -> float:
        """Fraction of paths with a ladder epoch within the horizon."""
        return self.heights.size / self.paths

    @property
    def raw_stderr(self) -> float:
        p = self.raw_fraction
        return math.sqrt(p * (1 - p) / self.paths)

    def cdf(self, x):
        """Empirical ladder-height CDF ``H``."""
        s = np.sort(self.heights)
        return np.searchsorted(s, np.asarray(x, dtype=float), side="right") / s.size

    def ks_distance(self, cdf) -> float:
        """Kolmogorov-Smirnov distance between ``H`` and a continuous CDF."""
        s = np.sort(self.heights)
        n = s.size
        f = np.asarray(cdf(s), dtype=float)
        i = np.arange(1, n + 1)
        return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))

    def histogram(self, bins: int = 50):
        return np.histogram(self.heights, bins=bins)


def ladder_sample(model, paths: int, horizon: int, seed: int, chunks: int = 1,
                  spitzer: Optional[SpitzerPartial] = None) -> LadderSample:
    """Simulate ``paths`` walks until the first ``S_n > 0`` or ``horizon`` steps.

    With ``spitzer`` supplied, the ladder probability is taken as
    ``1 - exp(-A)``; a raw fraction more than 3 sigma away means the horizon
    censors too many paths and ``CensoringTooHigh`` is raised.
    """
    config = MCConfig(paths=paths, horizon=horizon, seed=seed, chunks=chunks)

    def block(rng, n):
        scan = scan_walk(model.increments, rng, n, horizon, 0.0, strict=False)
        ok = scan.hit_step >= 0
        return scan.hit_value[ok], scan.hit_step[ok]

    parts = map_blocks(block, config)
    heights = np.concatenate([p[0] for p in parts])
    epochs = np.concatenate([p[1] for p in parts])
    sample = LadderSample(heights, paths - heights.size, horizon, paths, epochs)
    sample.f_plus_inf = sample.raw_fraction
    if spitzer is not None:
        target = -math.expm1(-spitzer.A_max)
        sigma = math.hypot(sample.raw_stderr, math.exp(-spitzer.A_max) * spitzer.A_max_stderr)
        if abs(sample.raw_fraction - target) > 3.0 * max(sigma, 1e-12):
            raise CensoringTooHigh(
                f"ladder fraction {sample.raw_fraction:.6f} vs 1-exp(-A) {target:.6f} "
                f"(sigma {sigma:.2e}); increase the horizon"
            )
        sample.f_plus_inf = target
    return sample


def pk_andersen_survival(model: AndersenModel, ladder: LadderSample, spitzer: SpitzerPartial,
                         u_max: float, tol: float = 1e-8, grid_step: Optional[float] = None) -> SurvivalTable:
    """Survival ``e^{-A} sum_n (1 - e^{-A})^n H^{*n}(u)`` with empirical ``H``.

    The bracket in the table covers discretisation and series truncation for
    the sampled ``H``; ``meta["mc_tolerance"]`` bounds the Monte Carlo error
    (3 sigma on ``A`` plus a Dvoretzky-Kiefer-Wolfowitz band on ``H``).
    """
    if model.drift >= 0.0:
        raise NPCViolation(f"drift E(X - c theta) = {model.drift:.6g} >= 0")
    if ladder.heights.size == 0:
        raise NPCViolation("no ladder heights sampled")
    q = -math.expm1(-spitzer.A_max)
    h = grid_step or default_grid_step(u_max)
    m = int(round(u_max / h)) + 2
    f_lo, f_hi, f_mid = discretize_samples(ladder.heights, h, m)
    n = ladder.heights.size
    dkw = math.sqrt(math.log(2.0 / 0.0027) / (2.0 * n))
    dq = 3.0 * math.exp(-spitzer.A_max) * spitzer.A_max_stderr
    mc_tol = q / (1.0 - q) * dkw + dq / (1.0 - q)
    meta = {
        "method": "ladder-heights",
        "A": spitzer.A_max,
        "A_stderr": spitzer.A_max_stderr,
        "ladder_samples": n,
        "mc_tolerance": mc_tol,
    }
    return compound_survival(f_lo, f_hi, f_mid, q, h, u_max, tol, meta=meta)


@dataclass
class AndersenSweepRow:
    epsilon: float
    A: float
    A_stderr: float
    psi0_lower: float
    u: np.ndarray
    phi: np.ndarray


def epsilon_sweep_andersen(model: AndersenModel, eps_list: Sequence[float], a: float, u_list: Sequence[float],
                           paths: int = 20000, horizon: int = 2000, seed: int = 0,
                           chunks: int = 1) -> List[AndersenSweepRow]:
    """Perturb the claim at ``a`` for each ``epsilon``; estimate ``A`` and survival."""
    u_arr = np.asarray(u_list, dtype=float)
    u_max = float(max(u_arr.max(), 1.0))
    h = default_grid_step(u_max)
    idx = np.rint(u_arr / h).astype(int)
    rows = []
    for eps in eps_list:
        star = model.with_claim(perturb_continuous(model.claim, a, eps))
        sp = spitzer_estimate(star, [horizon], paths, seed, chunks)
        lad = ladder_sample(star, paths, horizon, seed, chunks)
        tab = pk_andersen_survival(star, lad, sp, u_max, grid_step=h)
        rows.append(AndersenSweepRow(float(eps), sp.A_max, sp.A_max_stderr, float(sp.psi0_lower[-1]), u_arr, tab.phi[idx]))
    return rows
