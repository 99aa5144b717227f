"""Compound Poisson (Cramér–Lundberg) model via the Pollaczek–Khinchine series.

Survival is a compound geometric CDF,
``phi(u) = (1 - q) * sum_{n>=0} q^n F^{*n}(u)``, with ``q = lambda EX / c``
and ``F`` the integrated-tail law. ``F`` is discretised on a uniform grid
three ways: rounded down and up (giving rigorous upper/lower brackets) and
rounded to nearest (the reported estimate, accurate to O(h^2) at cell
midpoints).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import _kernels
from .discrete_ruin import SurvivalTable
from .dist_core import ContinuousClaim, PerturbedClaim, perturb_continuous
from .errors import NPCViolation

LOAD_TOL = 1e-12


class NotNeutral(UserWarning):
    """The base model of an epsilon sweep does not satisfy ``lambda EX = c``."""


@dataclass(frozen=True, eq=False)
class ClassicalModel:
    lam: float
    c: float
    claim: ContinuousClaim

    def __post_init__(self):
        if not self.lam > 0 or not self.c > 0:
            raise ValueError("lambda and c must be positive")

    @property
    def load(self) -> float:
        """``rho = lambda EX / c``."""
        return self.lam * self.claim.mean / self.c

    def with_claim(self, claim: ContinuousClaim) -> "ClassicalModel":
        return ClassicalModel(self.lam, self.c, claim)

    def integrated_tail_cdf(self, x):
        return self.claim.integrated_tail(x) / self.claim.mean

    def increments(self, rng, n_paths, n_steps, step0):
        x = self.claim.sample(rng, (n_paths, n_steps))
        theta = rng.standard_exponential((n_paths, n_steps)) / self.lam
        return x - self.c * theta

    def coupled_increments(self, rng, n_paths, n_steps, step0):
        if not isinstance(self.claim, PerturbedClaim):
            raise TypeError("coupled simulation needs a PerturbedClaim")
        xs, x = self.claim.sample_pairs(rng, (n_paths, n_steps))
        theta = rng.standard_exponential((n_paths, n_steps)) / self.lam
        ct = self.c * theta
        return xs - ct, x - ct

    def to_json(self) -> dict:
        return {"type": "classical", "lambda": self.lam, "c": self.c, "claim": self.claim.to_json()}


def pk_psi0(model: ClassicalModel) -> float:
    """Ruin probability at zero surplus, ``lambda EX / c`` (EX of the perturbed claim if any)."""
    load = model.load
    if load > 1.0 + LOAD_TOL:
        raise NPCViolation(f"load {load:.6g} > 1")
    return load


# ---------------------------------------------------------------------------
# Compound geometric machinery (shared with the renewal model)
# ---------------------------------------------------------------------------


@dataclass
class CompoundGeometric:
    """Weights ``sum_{n=0}^{N} q^n f^{*n}`` on ``m`` grid cells."""

    weights: np.ndarray
    q: float
    n_terms: int

    @property
    def truncation_bound(self) -> float:
        """``q^{N+1} / (1 - q)``: bound on the omitted weight, in units of ``phi(0)``."""
        return self.q ** (self.n_terms + 1) / (1.0 - self.q)


def terms_needed(q: float, tol: float) -> int:
    """Smallest ``N = 2^K - 1`` with ``q^{N+1} / (1 - q) < tol``."""
    if q <= 0.0:
        return 0
    need = math.log(tol * (1.0 - q)) / math.log(q)
    k = max(0, math.ceil(math.log2(max(need, 1.0))))
    while q ** (2**k) / (1.0 - q) >= tol:
        k += 1
    return 2**k - 1


def compound_geometric(f: np.ndarray, q: float, m: int, tol: float) -> CompoundGeometric:
    """Truncated geometric series of convolution powers by repeated doubling.

    With ``S_k = sum_{n<k} q^n f^{*n}`` and ``P_k = f^{*k}``:
    ``S_{2k} = S_k + q^k (P_k * S_k)`` and ``P_{2k} = P_k * P_k``.
    """
    if not 0.0 <= q < 1.0:
        raise NPCViolation(f"geometric parameter {q} must lie in [0, 1)")
    n_terms = terms_needed(q, tol)
    fm = np.zeros(m)
    fm[: min(m, f.size)] = f[:m]
    s = np.zeros(m)
    s[0] = 1.0
    p = fm
    k = 1
    while k < n_terms + 1:
        s = s + q**k * _kernels.truncated_convolve(p, s, m)
        k *= 2
        if k < n_terms + 1:
            p = _kernels.truncated_convolve(p, p, m)
    return CompoundGeometric(s, q, n_terms)


def discretize_cdf(cdf: Callable, h: float, m: int):
    """Cell masses of a continuous law: (rounded down, rounded up, rounded to nearest)."""
    k = np.arange(m + 1, dtype=float)
    F = np.asarray(cdf(k * h), dtype=float)
    lo = np.diff(F)  # [kh, (k+1)h) -> kh
    hi = np.concatenate([[F[0]], np.diff(F)[: m - 1]])  # ((k-1)h, kh] -> kh
    Fm = np.asarray(cdf((k[:m] + 0.5) * h), dtype=float)
    mid = np.concatenate([[Fm[0]], np.diff(Fm)])
    return lo, hi, mid


def discretize_samples(samples: np.ndarray, h: float, m: int):
    """Same three discretisations for an empirical law."""
    y = np.asarray(samples, dtype=float) / h
    n = y.size

    def masses(idx):
        idx = idx[idx < m].astype(np.int64)
        return np.bincount(idx, minlength=m)[:m] / n

    return masses(np.floor(y)), masses(np.ceil(y)), masses(np.floor(y + 0.5))


def compound_survival(f_lo, f_hi, f_mid, q: float, h: float, u_max: float, tol: float,
                      convention: str = "weak", meta: Optional[dict] = None) -> SurvivalTable:
    """Survival table ``(1-q) sum q^n F^{*n}`` on the grid ``0, h, ..., u_max`` with brackets."""
    n_grid = int(round(u_max / h))
    m = n_grid + 2
    lo = compound_geometric(f_lo, q, m, tol)
    hi = compound_geometric(f_hi, q, m, tol)
    mid = compound_geometric(f_mid, q, m, tol)
    trunc = q ** (lo.n_terms + 1)
    phi0 = 1.0 - q
    upper = np.minimum(phi0 * np.cumsum(lo.weights)[: n_grid + 1] + trunc, 1.0)
    lower = phi0 * np.cumsum(hi.weights)[: n_grid + 1]
    # rounded-to-nearest CDF at index j approximates phi((j + 1/2) h)
    g = phi0 * np.cumsum(mid.weights)
    est = np.empty(n_grid + 1)
    est[0] = phi0
    est[1:] = 0.5 * (g[: n_grid] + g[1 : n_grid + 1])
    est = np.clip(est, lower, upper)
    info = {
        "psi0": q,
        "phi0": phi0,
        "grid_step": h,
        "n_terms": lo.n_terms,
        "truncation_bound": lo.truncation_bound,
        "bracket_width": float(np.max(upper - lower)),
    }
    if meta:
        info.update(meta)
    return SurvivalTable(convention, est, u=np.arange(n_grid + 1) * h, phi_lower=lower, phi_upper=upper, meta=info)


def default_grid_step(u_max: float) -> float:
    return min(0.01, max(u_max, 1.0) / 1000.0)


def pk_survival(model: ClassicalModel, u_max: float, tol: float = 1e-8,
                grid_step: Optional[float] = None) -> SurvivalTable:
    """Pollaczek–Khinchine survival probabilities on ``[0, u_max]``.

    ``tol`` bounds the geometric truncation ``psi0^{N+1} / (1 - psi0)``.
    """
    q = pk_psi0(model)
    if q >= 1.0 - LOAD_TOL:
        raise NPCViolation("neutral load: the compound geometric series does not sum to a CDF")
    h = grid_step or default_grid_step(u_max)
    m = int(round(u_max / h)) + 2
    f_lo, f_hi, f_mid = discretize_cdf(model.integrated_tail_cdf, h, m)
    return compound_survival(f_lo, f_hi, f_mid, q, h, u_max, tol, meta={"method": "pollaczek-khinchine"})


def pk_survival_panjer(model: ClassicalModel, u_max: float, grid_step: Optional[float] = None) -> np.ndarray:
    """Untruncated compound geometric CDF (rounded-to-nearest cells) via Panjer's recursion.

    Independent of the series truncation; used to cross-check ``pk_survival``.
    """
    q = pk_psi0(model)
    h = grid_step or default_grid_step(u_max)
    n_grid = int(round(u_max / h))
    m = n_grid + 2
    _, _, f_mid = discretize_cdf(model.integrated_tail_cdf, h, m)
    g = np.cumsum(_kernels.panjer_geometric(f_mid, q, m))
    est = np.empty(n_grid + 1)
    est[0] = 1.0 - q
    est[1:] = 0.5 * (g[:n_grid] + g[1 : n_grid + 1])
    return est


@dataclass
class SweepRow:
    epsilon: float
    psi0: float
    u: np.ndarray
    phi: np.ndarray
    phi_lower: np.ndarray
    phi_upper: np.ndarray


def epsilon_sweep_classical(model: ClassicalModel, eps_list: Sequence[float], a: float,
                            u_list: Sequence[float], tol: float = 1e-8,
                            grid_step: Optional[float] = None) -> List[SweepRow]:
    """Perturb the claim at threshold ``a`` for each ``epsilon`` and evaluate survival."""
    if abs(model.load - 1.0) > 1e-9:
        warnings.warn(f"base load is {model.load:.6g}, not 1", NotNeutral, stacklevel=2)
    u_arr = np.asarray(u_list, dtype=float)
    u_max = float(max(u_arr.max(), 1.0))
    h = grid_step or default_grid_step(u_max)
    idx = np.rint(u_arr / h).astype(int)
    rows = []
    for eps in eps_list:
        star = model.with_claim(perturb_continuous(model.claim, a, eps))
        tab = pk_survival(star, u_max, tol, h)
        rows.append(SweepRow(float(eps), pk_psi0(star), u_arr, tab.phi[idx], tab.phi_lower[idx], tab.phi_upper[idx]))
    return rows


def exponential_claims_ruin(lam: float, c: float, mean: float, u):
    """Closed-form ``psi(u)`` for exponential claims (oracle for tests and docs)."""
    rho = lam * mean / c
    return rho * np.exp(-(1.0 / mean - lam / c) * np.asarray(u, dtype=float))
