"""Survival probabilities of the discrete-time (integer, N-seasonal) risk model.

Surplus after t periods is ``u + c t - (X_1 + ... + X_t)`` with
``X_i`` independent, ``X_i ~ X_{i+N}``. Under the weak convention ruin means
a negative surplus; under the strict one a nonpositive surplus at t >= 1,
so ``phi_weak(u) = phi_strict(u + 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import _kernels
from .dist_core import IntegerPMF, choose_site, convolve, perturb_discrete, pgf_eval
from .errors import (
    CannotInvert,
    DegenerateModel,
    InconsistentBlock,
    InsufficientPrecision,
    NeedsShift,
    NPCViolation,
    RootFailure,
    StateBudgetExceeded,
)
from .mc_engine import MCConfig, simulate_sup

NPC_TOL = 1e-12
DEFAULT_MAX_STATES = 10_000_000


@dataclass(frozen=True, eq=False)
class SeasonalModel:
    """Premium ``c`` per period and claim laws ``pmfs[0..N-1]`` repeating with period N."""

    c: int
    pmfs: tuple

    def __post_init__(self):
        if int(self.c) != self.c or self.c < 1:
            raise ValueError("premium c must be a positive integer")
        pmfs = tuple(self.pmfs)
        if not pmfs:
            raise ValueError("at least one claim distribution is required")
        object.__setattr__(self, "c", int(self.c))
        object.__setattr__(self, "pmfs", pmfs)

    @classmethod
    def homogeneous(cls, pmf: IntegerPMF, c: int = 1) -> "SeasonalModel":
        return cls(c, (pmf,))

    @property
    def N(self) -> int:
        return len(self.pmfs)

    def expected_period_claims(self) -> float:
        return float(sum(p.mean() for p in self.pmfs))

    def npc_gap(self) -> float:
        """``cN - E S_N``; positive under the net profit condition, zero when neutral."""
        return self.c * self.N - self.expected_period_claims()

    def sum_pmf(self, upto: Optional[int] = None) -> IntegerPMF:
        """Law of ``X_1 + ... + X_l`` (``l = N`` by default)."""
        upto = self.N if upto is None else upto
        out = IntegerPMF.point(0)
        for p in self.pmfs[:upto]:
            out = convolve(out, p)
        return out

    def is_degenerate(self) -> bool:
        s = self.sum_pmf()
        return s.prob(self.c * self.N) >= 1.0 - NPC_TOL

    def rotated(self, phase: int) -> "SeasonalModel":
        """Same model observed from phase ``phase`` (0-based): first claim is ``pmfs[phase]``."""
        k = phase % self.N
        return SeasonalModel(self.c, self.pmfs[k:] + self.pmfs[:k])

    def pmf_matrix(self) -> np.ndarray:
        width = max(p.probs.size for p in self.pmfs)
        out = np.zeros((self.N, width))
        for i, p in enumerate(self.pmfs):
            out[i, : p.probs.size] = p.probs
        return out

    def increments(self, rng, n_paths, n_steps, step0):
        u = rng.random((n_paths, n_steps))
        if self.N == 1:
            return self.pmfs[0].claims_minus(u, self.c)
        x = np.empty((n_paths, n_steps))
        for ph in range(self.N):
            cols = slice((ph - step0) % self.N, None, self.N)
            x[:, cols] = self.pmfs[ph].claims_minus(u[:, cols], self.c)
        return x

    def lattice_tables(self):
        """``(base, thresholds, jumps)`` describing ``increments`` as a map of uniforms.

        Row ``ph`` sends a uniform ``v`` to ``base[ph] + sum of jumps[ph, k]``
        over ``thresholds[ph, k] <= v``; padding uses threshold 2 (never hit).
        """
        rows = []
        for p in self.pmfs:
            vals = np.flatnonzero(p.probs)
            cdf = p.cdf()
            rows.append((vals[0] - self.c, cdf[vals[1:] - 1], np.diff(vals)))
        width = max(1, max(r[1].size for r in rows))
        base = np.array([float(r[0]) for r in rows])
        thr = np.full((self.N, width), 2.0)
        jump = np.zeros((self.N, width))
        for i, (_, t, j) in enumerate(rows):
            thr[i, : t.size] = t
            jump[i, : j.size] = j
        return base, thr, jump

    def coupled(self, coupling, phase: int = 0) -> "CoupledSeasonalModel":
        return CoupledSeasonalModel(self, coupling, phase)

    def to_json(self) -> dict:
        return {"type": "discrete", "c": self.c, "pmfs": [p.to_json() for p in self.pmfs]}


@dataclass(frozen=True, eq=False)
class CoupledSeasonalModel:
    """Seasonal model whose claim at ``phase`` is drawn jointly with its perturbed copy."""

    model: SeasonalModel
    coupling: object
    phase: int = 0

    def star_model(self) -> SeasonalModel:
        pmfs = list(self.model.pmfs)
        pmfs[self.phase] = self.coupling.star_marginal()
        return SeasonalModel(self.model.c, tuple(pmfs))

    def coupled_increments(self, rng, n_paths, n_steps, step0):
        u = rng.random((n_paths, n_steps))
        x = np.empty((n_paths, n_steps))
        xs = np.empty((n_paths, n_steps))
        n = self.model.N
        for ph in range(n):
            cols = slice((ph - step0) % n, None, n)
            if ph == self.phase:
                xs[:, cols], x[:, cols] = self.coupling.pairs_from_uniform(u[:, cols])
            else:
                x[:, cols] = self.model.pmfs[ph].sample_from_uniform(u[:, cols])
                xs[:, cols] = x[:, cols]
        c = self.model.c
        return xs - c, x - c

    def increments(self, rng, n_paths, n_steps, step0):
        return self.coupled_increments(rng, n_paths, n_steps, step0)[1]


@dataclass
class SurvivalTable:
    """Survival probabilities on a grid of initial surpluses.

    ``phi_lower``/``phi_upper`` are rigorous brackets when the computation
    provides them (continuous models); ``meta`` records how it was obtained.
    """

    convention: str
    phi: np.ndarray
    u: Optional[np.ndarray] = None
    phi_lower: Optional[np.ndarray] = None
    phi_upper: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        if self.u is None:
            self.u = np.arange(self.phi.size, dtype=float)
        else:
            self.u = np.asarray(self.u, dtype=float)

    @property
    def psi(self) -> np.ndarray:
        return 1.0 - self.phi

    def __len__(self):
        return self.phi.size

    def at(self, u: float) -> float:
        """Survival probability at ``u`` (exact grid point for integer tables)."""
        idx = np.flatnonzero(np.isclose(self.u, u, rtol=0, atol=1e-12))
        if idx.size:
            return float(self.phi[idx[0]])
        return float(np.interp(u, self.u, self.phi))


# ---------------------------------------------------------------------------
# c = 1 recursion
# ---------------------------------------------------------------------------


def alpha_coefficients(pmf: IntegerPMF, u_max: int) -> np.ndarray:
    """Multipliers ``alpha_u`` with ``phi(u) = alpha_u * phi(0)`` for c = 1."""
    h = pmf.probs
    h0 = h[0]
    if h0 <= 0.0:
        raise NeedsShift("P(X = 0) = 0; the recursion divides by it")
    alpha = np.empty(u_max + 1)
    alpha[0] = 1.0
    for u in range(1, u_max + 1):
        k = min(u, h.size - 1)
        # sum_{k=1}^{u} alpha_{u-k} h_k
        acc = np.dot(h[1 : k + 1], alpha[u - k : u][::-1]) if k >= 1 else 0.0
        alpha[u] = (alpha[u - 1] - acc) / h0
    return alpha


def survival_recursion(pmf: IntegerPMF, phi0: float, u_max: int) -> SurvivalTable:
    """Extend ``phi(0)`` to ``phi(0..u_max)`` for the c = 1 homogeneous model."""
    if not 0.0 <= phi0 <= 1.0:
        raise ValueError("phi0 must lie in [0, 1]")
    h = pmf.probs
    if h[0] <= 0.0:
        raise NeedsShift("P(X = 0) = 0; the recursion divides by it")
    phi = np.empty(u_max + 1)
    phi[0] = phi0
    for u in range(1, u_max + 1):
        k = min(u, h.size - 1)
        acc = np.dot(h[1 : k + 1], phi[u - k : u][::-1]) if k >= 1 else 0.0
        phi[u] = (phi[u - 1] - acc) / h[0]
    return SurvivalTable("weak", phi, meta={"method": "recursion", "phi0": phi0})


# ---------------------------------------------------------------------------
# Roots of G_{S_N}(s) = s^{cN} in the closed unit disk
# ---------------------------------------------------------------------------


@dataclass
class RootSet:
    """Distinct roots in ``|s| <= 1`` with multiplicities.

    ``count`` sums multiplicities; under a strict net profit condition it is
    ``cN``, and ``s = 1`` is always present.
    """

    roots: np.ndarray
    multiplicity: np.ndarray
    on_boundary: np.ndarray
    residual: float
    degree: int

    @property
    def count(self) -> int:
        return int(self.multiplicity.sum())

    @property
    def unit_multiplicity(self) -> int:
        idx = np.flatnonzero(self.roots == 1.0)
        return int(self.multiplicity[idx[0]]) if idx.size else 0

    def non_unit(self):
        keep = self.roots != 1.0
        return self.roots[keep], self.multiplicity[keep]

    def to_json(self) -> list:
        out = []
        for r, m, b in zip(self.roots, self.multiplicity, self.on_boundary):
            out.append({"re": float(r.real), "im": float(r.imag), "multiplicity": int(m), "boundary": bool(b)})
        return out


def characteristic_poly(model: SeasonalModel) -> np.ndarray:
    """Ascending coefficients of ``G_{S_N}(s) - s^{cN}``."""
    g = model.sum_pmf().probs
    cn = model.c * model.N
    d = np.zeros(max(g.size, cn + 1))
    d[: g.size] = g
    d[cn] -= 1.0
    nz = np.flatnonzero(np.abs(d) > 0)
    return d[: nz[-1] + 1]


def _polyval_asc(coef, s):
    acc = np.zeros_like(np.asarray(s, dtype=complex))
    for a in coef[::-1]:
        acc = acc * s + a
    return acc


def _unit_root_multiplicity(d: np.ndarray, tol: float = 1e-11) -> int:
    """Order of the zero of the polynomial at ``s = 1`` from exact derivatives."""
    coef = d.astype(float)
    m = 0
    scale = np.abs(coef).sum()
    while coef.size:
        if abs(coef.sum()) > tol * max(scale, 1.0):
            return m
        m += 1
        coef = coef[1:] * np.arange(1, coef.size)
        scale = np.abs(coef).sum()
    return m


def find_unit_disk_roots(model: SeasonalModel, polish_tol: float = 1e-12, max_iter: int = 60) -> RootSet:
    """Roots of ``G_{S_N}(s) - s^{cN}`` in ``|s| <= 1``.

    Companion-matrix eigenvalues (``numpy.roots``) are Newton-polished;
    clusters closer than 1e-5 are treated as one multiple root, and the
    multiplicity of ``s = 1`` is read off exact derivatives at 1.
    """
    if model.is_degenerate():
        raise DegenerateModel("S_N = cN almost surely; every s solves the equation")
    d = characteristic_poly(model)
    deriv = d[1:] * np.arange(1, d.size)
    raw = np.roots(d[::-1]).astype(complex)

    polished = []
    for r in raw:
        if abs(r) > 1.5:
            continue
        z = complex(r)
        for _ in range(max_iter):
            fz = _polyval_asc(d, z)
            dz = _polyval_asc(deriv, z)
            if abs(fz) < 1e-15 or abs(dz) < 1e-300:
                break
            step = fz / dz
            z_new = z - step
            if abs(_polyval_asc(d, z_new)) >= abs(fz):
                break
            z = z_new
        polished.append(z)

    m1 = _unit_root_multiplicity(d)
    # drop the m1 eigenvalues closest to 1 and reinsert s = 1 exactly
    polished.sort(key=lambda z: abs(z - 1.0))
    rest = polished[m1:]

    clusters: List[list] = []
    for z in rest:
        for cl in clusters:
            if abs(cl[0] - z) < 1e-5:
                cl.append(z)
                break
        else:
            clusters.append([z])

    roots = [1.0 + 0j] if m1 else []
    mult = [m1] if m1 else []
    for cl in clusters:
        centre = complex(np.mean(cl))
        slack = 1e-9 if len(cl) == 1 else 1e-5
        if abs(centre) <= 1.0 + slack:
            if len(cl) > 1 and abs(abs(centre) - 1.0) < 1e-5:
                centre = centre / abs(centre)
            roots.append(centre)
            mult.append(len(cl))
    roots_arr = np.array(roots, dtype=complex)
    resid = float(np.max(np.abs(_polyval_asc(d, roots_arr)))) if roots else 0.0
    simple = np.array(mult) == 1
    if roots and np.any(simple) and np.max(np.abs(_polyval_asc(d, roots_arr[simple]))) > polish_tol:
        raise RootFailure("Newton polishing did not reach the residual target", resid)
    on_boundary = np.abs(np.abs(roots_arr) - 1.0) < 1e-9
    return RootSet(roots_arr, np.array(mult, dtype=int), on_boundary, resid, d.size - 1)


# ---------------------------------------------------------------------------
# Generating-function solution for N = 1
# ---------------------------------------------------------------------------


def _shift_to_positive_h0(pmf: IntegerPMF, c: int):
    """Move the support down by its minimum so that ``P(X = 0) > 0``."""
    m = pmf.min_value()
    if m == 0:
        return pmf, c
    if m >= c:
        raise NPCViolation(f"smallest claim {m} >= premium {c}; the net profit condition fails")
    return IntegerPMF(pmf.probs[m:]), c - m


def solve_numerator(model: SeasonalModel, roots: Optional[RootSet] = None) -> np.ndarray:
    """Numerator ``P`` (ascending coefficients, degree <= c-1) of the survival PGF.

    ``P`` vanishes to full multiplicity at the non-unit roots in the closed
    disk and ``P(1) = c - EX``.
    """
    if model.N != 1:
        raise ValueError("closed-form numerator is only available for N = 1")
    gap = model.npc_gap()
    if gap <= NPC_TOL:
        raise NPCViolation(f"c - EX = {gap:.3e}; a strict net profit condition is required")
    roots = find_unit_disk_roots(model) if roots is None else roots
    others, mult = roots.non_unit()
    if int(mult.sum()) != model.c - 1:
        raise RootFailure(
            f"expected {model.c - 1} non-unit roots in the closed disk, found {int(mult.sum())}",
            roots.residual,
        )
    poly = np.array([1.0 + 0j])
    for r, m in zip(others, mult):
        for _ in range(m):
            poly = np.convolve(poly, [-r, 1.0])
    k = gap / _polyval_asc(poly, 1.0)
    p = k * poly
    if np.max(np.abs(p.imag), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(p.real))):
        raise RootFailure("numerator has a non-negligible imaginary part", float(np.max(np.abs(p.imag))))
    return p.real.copy()


def survival_pgf_coefficients(pmf: IntegerPMF, c: int, u_max: int) -> SurvivalTable:
    """Weak-convention survival ``phi(0..u_max)`` as power-series coefficients.

    The generating function is ``P(s) / (G(s) - s^c)``; the factor that
    ``P`` shares with the denominator is cancelled before dividing so the
    division stays stable for c > 1. For c = 1 nothing is cancelled and
    ``phi(0) = (1 - EX) / P(X = 0)``.
    """
    gap = c - pmf.mean()
    if gap <= NPC_TOL:
        raise NPCViolation(f"c - EX = {gap:.3e}; survival is identically zero or undefined")
    work, cw = _shift_to_positive_h0(pmf, c)
    model = SeasonalModel.homogeneous(work, cw)
    roots = find_unit_disk_roots(model)
    numer = solve_numerator(model, roots)
    d = characteristic_poly(model)

    others, mult = roots.non_unit()
    common = np.array([1.0 + 0j])
    for r, m in zip(others, mult):
        for _ in range(m):
            common = np.convolve(common, [-r, 1.0])
    if common.size > 1:
        q_desc, rem = np.polydiv(d[::-1].astype(complex), common[::-1])
        q = q_desc[::-1].real
        k = numer[-1]  # numer = k * common and common is monic
    else:
        q = d.astype(float)
        k = numer[0]
    phi = _series_divide(np.array([k]), q, u_max)
    meta = {
        "method": "pgf",
        "numerator": numer.tolist(),
        "roots": roots.to_json(),
        "root_residual": roots.residual,
        "shift": pmf.min_value(),
    }
    return SurvivalTable("weak", phi, meta=meta)


def _series_divide(num: np.ndarray, den: np.ndarray, n_terms: int) -> np.ndarray:
    """First ``n_terms + 1`` coefficients of ``num(s) / den(s)``."""
    if den[0] == 0:
        raise CannotInvert("constant term of the denominator is zero")
    out = np.zeros(n_terms + 1)
    nd = den.size
    for u in range(n_terms + 1):
        acc = num[u] if u < num.size else 0.0
        k = min(u, nd - 1)
        if k >= 1:
            acc -= np.dot(den[1 : k + 1], out[u - k : u][::-1])
        out[u] = acc / den[0]
    return out


def to_strict(table: SurvivalTable, pmf: IntegerPMF, c: int) -> SurvivalTable:
    """Convert a weak table (N = 1) to the strict convention ``phi_hat``.

    ``phi_hat(u + 1) = phi(u)`` and, by a first-step argument,
    ``phi_hat(0) = sum_{k < c} P(X = k) phi(c - 1 - k)``.
    """
    if table.convention != "weak":
        raise ValueError("expected a weak-convention table")
    phi = table.phi
    if phi.size < c:
        raise ValueError("table too short for the first-step formula")
    head = sum(pmf.prob(k) * phi[c - 1 - k] for k in range(c))
    return SurvivalTable("strict", np.concatenate([[head], phi]), meta=dict(table.meta, converted=True))


# ---------------------------------------------------------------------------
# Seasonal recurrence
# ---------------------------------------------------------------------------


def _period_weights(model: SeasonalModel, u: int) -> np.ndarray:
    """``w[t] = P(S_N = t, S_j <= u + jc for every j <= N)``."""
    w = np.array([1.0])
    for j, p in enumerate(model.pmfs, start=1):
        w = np.convolve(w, p.probs)
        limit = u + j * model.c
        if w.size > limit + 1:
            w = w[: limit + 1]
    return w


def seasonal_recurrence_step(model: SeasonalModel, phi_block: Sequence[float], u_max: int,
                             residual_tol: float = 1e-8) -> SurvivalTable:
    """Extend ``phi(0..cN-1)`` to ``phi(0..u_max)`` through the one-period relation

    ``phi(u) = sum P(X_1=i_1)...P(X_N=i_N) phi(u + cN - i_1 - ... - i_N)``

    (partial sums ``i_1 + ... + i_j <= u + jc``), solved for its all-zero-claims term.
    """
    cn = model.c * model.N
    block = np.asarray(phi_block, dtype=float)
    if block.size != cn:
        raise ValueError(f"phi_block must have cN = {cn} entries")
    p0 = float(np.prod([p.prob(0) for p in model.pmfs]))
    if p0 <= 0.0:
        raise CannotInvert("P(X_1 = 0) ... P(X_N = 0) = 0")
    n = max(u_max + 1, cn)
    phi = np.zeros(n)
    phi[:cn] = block
    for u in range(0, n - cn):
        w = _period_weights(model, u)
        # arguments u + cN - t for t = 1..len(w)-1
        tail = w[1:]
        args = u + cn - np.arange(1, w.size)
        phi[u + cn] = (phi[u] - np.dot(tail, phi[args])) / p0
    residuals = np.zeros(n - cn)
    for u in range(n - cn):
        w = _period_weights(model, u)
        args = u + cn - np.arange(w.size)
        residuals[u] = abs(phi[u] - np.dot(w, phi[args]))
    max_res = float(residuals.max(initial=0.0))
    if max_res > residual_tol:
        raise InconsistentBlock(f"relation residual {max_res:.3e} exceeds {residual_tol:.1e}")
    return SurvivalTable("weak", phi[: u_max + 1], meta={"method": "seasonal-recurrence", "residual": max_res})


def m_vector_from_tables(model: SeasonalModel, phase_tables: Sequence[Sequence[float]]) -> np.ndarray:
    """``m^{(l)}_i = phi_l(i) - phi_l(i-1)``, i < c, where ``phi_l`` starts at phase l."""
    c = model.c
    out = []
    for tab in phase_tables:
        t = np.asarray(tab, dtype=float)
        out.extend(np.diff(np.concatenate([[0.0], t[:c]])))
    return np.array(out)


def seasonal_numerator(model: SeasonalModel, m_vector: Sequence[float], s: complex) -> complex:
    """``u(s)^T v(s)``: the numerator of the seasonal survival generating function."""
    c, N = model.c, model.N
    m = np.asarray(m_vector, dtype=float).reshape(N, c)
    total = 0j
    for l in range(1, N + 1):
        g_prev = pgf_eval(model.sum_pmf(l - 1), s)
        u_l = s ** (c * (N - l)) * g_prev
        cdf = model.pmfs[l - 1].cdf()
        m_next = m[l % N]
        v_l = 0j
        for i in range(c):
            for k in range(i, c):
                F = cdf[min(k - i, cdf.size - 1)]
                v_l += m_next[i] * s**k * F
        total += u_l * v_l
    return total


def seasonal_pgf_verify(model: SeasonalModel, m_vector: Sequence[float], phi_table,
                        points: Optional[Iterable[complex]] = None) -> dict:
    """Residuals ``|Phi(s) (G_{S_N}(s) - s^{cN}) - u^T v|`` at points inside the disk."""
    phi = phi_table.phi if isinstance(phi_table, SurvivalTable) else np.asarray(phi_table, dtype=float)
    if points is None:
        angles = np.linspace(0, 2 * np.pi, 7, endpoint=False)
        points = list(0.4 * np.exp(1j * angles)) + [0.1, -0.3, 0.2 + 0.1j]
    points = [complex(p) for p in points]
    g = model.sum_pmf()
    cn = model.c * model.N
    out = []
    for s in points:
        lhs = _polyval_asc(phi, s)
        denom = pgf_eval(g, s) - s**cn
        num = seasonal_numerator(model, m_vector, s)
        out.append(abs(lhs * denom - num))
    return {"points": points, "residuals": out, "max_residual": float(max(out))}


# ---------------------------------------------------------------------------
# Finite-horizon dynamic programming oracle
# ---------------------------------------------------------------------------


def dp_ruin_curve(model: SeasonalModel, u: int, horizon: int, convention: str = "weak",
                  max_states: int = DEFAULT_MAX_STATES) -> np.ndarray:
    """``psi(u, t)`` for t = 1..horizon by forward DP over surplus states ``0..u+ct``."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if convention not in ("weak", "strict"):
        raise ValueError("convention must be 'weak' or 'strict'")
    strict = convention == "strict"
    u = int(u)
    pm = model.pmf_matrix()
    needed = u + model.c * horizon + 1
    if needed > max_states:
        achieved = max(0, (max_states - 1 - u) // model.c)
        partial = _kernels.dp_ruin_curve(pm, model.c, u, achieved, strict) if achieved else np.empty(0)
        raise StateBudgetExceeded(f"{needed} surplus states exceed the budget {max_states}", achieved, partial)
    return np.asarray(_kernels.dp_ruin_curve(pm, model.c, u, int(horizon), strict))


def dp_finite_horizon(model: SeasonalModel, u: int, horizon: int, convention: str = "weak",
                      max_states: int = DEFAULT_MAX_STATES) -> float:
    """Exact probability of ruin within ``horizon`` periods."""
    return float(dp_ruin_curve(model, u, horizon, convention, max_states)[-1])


# ---------------------------------------------------------------------------
# Initial block for N > 1 and epsilon sweeps
# ---------------------------------------------------------------------------


def initial_block(model: SeasonalModel, method: str = "mc", config: Optional[MCConfig] = None,
                  ci_width: float = 1e-3, dp_horizon: int = 20_000):
    """``phi(0..cN-1)`` from Monte Carlo (CI-width gated) or the DP oracle.

    Returns ``(values, info)``; ``info`` carries the per-entry CI widths or
    the DP convergence gap between horizons ``dp_horizon/2`` and ``dp_horizon``.
    """
    cn = model.c * model.N
    if method == "mc":
        config = config or MCConfig(paths=4_000_000, horizon=2_000)
        est = simulate_sup(model, list(range(cn)), config)
        widths = [e.ci95[1] - e.ci95[0] for e in est]
        if max(widths) >= ci_width:
            raise InsufficientPrecision(
                f"Monte Carlo CI width {max(widths):.2e} >= gate {ci_width:.1e}; increase paths"
            )
        return np.array([1.0 - e.p_hat for e in est]), {"method": "mc", "ci_width": widths}
    if method == "dp":
        vals, gaps = [], []
        for u in range(cn):
            curve = dp_ruin_curve(model, u, dp_horizon)
            vals.append(1.0 - curve[-1])
            gaps.append(float(curve[-1] - curve[dp_horizon // 2 - 1]))
        return np.array(vals), {"method": "dp", "horizon_gap": gaps}
    raise ValueError("method must be 'mc' or 'dp'")


def seasonal_survival(model: SeasonalModel, u_max: int, method: str = "mc",
                      config: Optional[MCConfig] = None, ci_width: float = 1e-3) -> SurvivalTable:
    """Survival table for any N: closed form when N = 1, seeded recurrence otherwise."""
    if model.N == 1:
        return survival_pgf_coefficients(model.pmfs[0], model.c, u_max)
    if model.npc_gap() <= NPC_TOL:
        raise NPCViolation("a strict net profit condition is required")
    block, info = initial_block(model, method, config, ci_width)
    table = seasonal_recurrence_step(model, block, u_max)
    table.meta["block"] = info
    return table


@dataclass
class SweepRow:
    epsilon: float
    h0_star: float
    phi: np.ndarray


def epsilon_sweep_discrete(pmf: IntegerPMF, c: int, eps_list: Sequence[float], u_max: int,
                           site: Optional[tuple] = None) -> List[SweepRow]:
    """Survival of the perturbed model for each ``epsilon``; ``phi*_eps -> 0`` when neutral."""
    b, s = site if site is not None else choose_site(pmf, c)
    rows = []
    for eps in eps_list:
        coupling = perturb_discrete(pmf, b, s, eps)
        star = coupling.star_marginal()
        tab = survival_pgf_coefficients(star, c, u_max)
        rows.append(SweepRow(float(eps), star.prob(0), tab.phi))
    return rows
