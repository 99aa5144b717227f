"""Reproducible path simulation of surplus processes.

Paths are grouped into fixed-size blocks and block ``b`` always draws from
the counter-based stream ``Philox(key=(seed, b))``. Chunks only decide which
worker runs which blocks, so estimates are bit-identical for any chunk count
or thread count.

Models plug in through two duck-typed methods:

``increments(rng, n_paths, n_steps, step0)``
    float64 array (n_paths, n_steps) of claim-surplus increments
    (claim minus premium earned since the previous claim/period).
``coupled_increments(rng, n_paths, n_steps, step0)``
    pair ``(incr_star, incr)`` with ``incr_star <= incr`` elementwise.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import CouplingBroken

BLOCK_PATHS = 4096
STEP_BATCH = 256
FIRST_BATCH = 4
Z95 = 1.959963984540054


@dataclass(frozen=True)
class MCConfig:
    paths: int
    horizon: int
    seed: int = 0
    chunks: int = 1

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.chunks < 1:
            raise ValueError("chunks must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def wilson_interval(hits: int, n: int, z: float = Z95):
    if n == 0:
        return (0.0, 1.0)
    p = hits / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # rounding can push a bound past p at hits = 0 or hits = n
    return (max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half)))


@dataclass(frozen=True)
class MCEstimate:
    p_hat: float
    stderr: float
    n: int
    ci95: tuple
    hits: int = 0

    @classmethod
    def from_counts(cls, hits: int, n: int) -> "MCEstimate":
        p = hits / n
        return cls(
            p_hat=p,
            stderr=math.sqrt(p * (1.0 - p) / n),
            n=n,
            ci95=wilson_interval(hits, n),
            hits=int(hits),
        )

    def complement(self) -> "MCEstimate":
        return MCEstimate.from_counts(self.n - self.hits, self.n)

    def to_json(self, config: Optional[MCConfig] = None) -> dict:
        rec = {
            "p_hat": self.p_hat,
            "stderr": self.stderr,
            "ci95": [self.ci95[0], self.ci95[1]],
            "paths": self.n,
        }
        if config is not None:
            rec["horizon"] = config.horizon
            rec["seed"] = config.seed
        return rec


def rng_substream(seed: int, chunk: int) -> np.random.Generator:
    """Independent reproducible stream for ``(seed, chunk)``; Philox keyed on both."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, chunk], dtype=np.uint64)))


def block_layout(paths: int) -> List[tuple]:
    full, rest = divmod(paths, BLOCK_PATHS)
    blocks = [(b, BLOCK_PATHS) for b in range(full)]
    if rest:
        blocks.append((full, rest))
    return blocks


def worker_count(chunks: int) -> int:
    env = os.environ.get("RUIN_LAB_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(chunks, cap))


def map_blocks(fn: Callable[[np.random.Generator, int], object], config: MCConfig) -> list:
    """Apply ``fn(rng, n_paths)`` to every block; results come back in block order."""
    blocks = block_layout(config.paths)
    n_chunks = min(config.chunks, len(blocks))
    bounds = np.linspace(0, len(blocks), n_chunks + 1).round().astype(int)
    groups = [blocks[bounds[i] : bounds[i + 1]] for i in range(n_chunks)]

    def run(group):
        return [fn(rng_substream(config.seed, b), n) for b, n in group]

    workers = worker_count(n_chunks)
    if workers == 1:
        parts = [run(g) for g in groups]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, groups))
    return [r for part in parts for r in part]


@dataclass
class WalkScan:
    """Per-path result of scanning ``Z_n = sum of increments`` up to a horizon.

    ``hit_step[p]`` is the first n with ``Z_n > cap`` (``>=`` when strict),
    or -1; ``running_max`` is ``max_{k <= n} Z_k`` up to that point.
    """

    hit_step: np.ndarray
    hit_value: np.ndarray
    running_max: np.ndarray
    horizon: int


def batch_steps(t: int, horizon: int) -> int:
    """Steps drawn at time ``t``: small first batches so early-ruined paths draw little.

    Depends only on ``t``, which keeps results independent of how blocks are
    distributed over workers.
    """
    size = FIRST_BATCH
    while size < STEP_BATCH and size <= t:
        size *= 2
    return min(size, horizon - t)


def scan_walk(sampler, rng, n_paths: int, horizon: int, cap: float, strict: bool = False,
              lattice=None) -> WalkScan:
    """Scan ``n_paths`` walks with increments from ``sampler``.

    ``lattice`` (from a model's ``lattice_tables``) replaces the sampler by a
    fused uniform-to-increment scan; it consumes the same uniforms and gives
    identical results.
    """
    csum = np.zeros(n_paths)
    cmax = np.full(n_paths, -np.inf)
    hit = np.full(n_paths, -1, dtype=np.int64)
    hit_val = np.full(n_paths, np.nan)
    active = np.arange(n_paths)
    t = 0
    while t < horizon and active.size:
        steps = batch_steps(t, horizon)
        cs, cm, hs, hv = csum[active], cmax[active], hit[active], hit_val[active]
        if lattice is None:
            incr = np.ascontiguousarray(sampler(rng, active.size, steps, t), dtype=np.float64)
            _kernels.scan_paths(incr, cs, cm, hs, hv, float(cap), bool(strict), t)
        else:
            u = rng.random((active.size, steps))
            _kernels.scan_lattice(u, *lattice, cs, cm, hs, hv, float(cap), bool(strict), t)
        csum[active], cmax[active], hit[active], hit_val[active] = cs, cm, hs, hv
        active = active[hs < 0]
        t += steps
    return WalkScan(hit, hit_val, cmax, horizon)


def ruin_curve(model, u: float, config: MCConfig, horizons: Sequence[int], convention: str = "weak") -> List[MCEstimate]:
    """Estimates of ``psi(u, T)`` for each ``T`` in ``horizons``, from one path set."""
    horizons = [int(h) for h in horizons]
    if max(horizons) > config.horizon:
        raise ValueError("probed horizon exceeds config.horizon")
    strict = _strict(convention)
    edges = np.asarray(horizons)

    def block(rng, n):
        scan = scan_walk(model.increments, rng, n, config.horizon, u, strict, _lattice(model))
        steps = scan.hit_step[scan.hit_step >= 0]
        return np.array([(steps <= h).sum() for h in edges], dtype=np.int64)

    hits = np.sum(map_blocks(block, config), axis=0)
    return [MCEstimate.from_counts(int(k), config.paths) for k in hits]


def simulate_ruin(model, u: float, config: MCConfig, convention: str = "weak") -> MCEstimate:
    """Fraction of paths ruined within ``config.horizon`` periods / claims."""
    return ruin_curve(model, u, config, [config.horizon], convention)[0]


def simulate_sup(model, u_values: Sequence[float], config: MCConfig, convention: str = "weak") -> List[MCEstimate]:
    """``psi(u, horizon)`` for several ``u`` from the running maximum of one path set."""
    u_values = np.asarray(u_values, dtype=float)
    cap = float(u_values.max())
    strict = _strict(convention)

    def block(rng, n):
        scan = scan_walk(model.increments, rng, n, config.horizon, cap, strict, _lattice(model))
        m = scan.running_max
        ruined = (m[:, None] >= u_values[None, :]) if strict else (m[:, None] > u_values[None, :])
        return ruined.sum(axis=0).astype(np.int64)

    hits = np.sum(map_blocks(block, config), axis=0)
    return [MCEstimate.from_counts(int(k), config.paths) for k in hits]


@dataclass
class CouplingReport:
    violations: int
    paths: int
    horizons: List[int]
    star: List[MCEstimate] = field(default_factory=list)
    base: List[MCEstimate] = field(default_factory=list)
    identical_paths: bool = False

    @property
    def ordering_holds(self) -> bool:
        return all(s.hits <= b.hits for s, b in zip(self.star, self.base))

    def to_json(self) -> dict:
        return {
            "violations": self.violations,
            "paths": self.paths,
            "horizons": self.horizons,
            "psi_star": [e.p_hat for e in self.star],
            "psi": [e.p_hat for e in self.base],
            "ordering_holds": self.ordering_holds,
        }


def simulate_coupled(model, u: float, config: MCConfig, horizons: Optional[Sequence[int]] = None,
                     convention: str = "weak", raise_on_violation: bool = True) -> CouplingReport:
    """Simulate coupled (starred, original) paths and check ``sum x* <= sum x`` pathwise.

    Paths run until the starred walk is ruined (the original one is ruined no
    later) or the horizon ends.
    """
    horizons = [config.horizon] if horizons is None else [int(h) for h in horizons]
    strict = _strict(convention)
    edges = np.asarray(horizons)

    def block(rng, n):
        states = [np.zeros(n), np.full(n, -np.inf), np.full(n, -1, dtype=np.int64), np.full(n, np.nan)]
        states_b = [np.zeros(n), np.full(n, -np.inf), np.full(n, -1, dtype=np.int64), np.full(n, np.nan)]
        full_s = np.zeros(n)
        full_b = np.zeros(n)
        violations = 0
        same = True
        active = np.arange(n)
        t = 0
        while t < config.horizon and active.size:
            steps = batch_steps(t, config.horizon)
            inc_s, inc_b = model.coupled_increments(rng, active.size, steps, t)
            inc_s = np.ascontiguousarray(inc_s, dtype=np.float64)
            inc_b = np.ascontiguousarray(inc_b, dtype=np.float64)
            same = same and np.array_equal(inc_s, inc_b)
            cs_s = np.cumsum(np.column_stack([full_s[active], inc_s]), axis=1)
            cs_b = np.cumsum(np.column_stack([full_b[active], inc_b]), axis=1)
            violations += int(np.count_nonzero(cs_s[:, 1:] > cs_b[:, 1:]))
            full_s[active] = cs_s[:, -1]
            full_b[active] = cs_b[:, -1]
            for st, inc in ((states, inc_s), (states_b, inc_b)):
                sub = [a[active] for a in st]
                _kernels.scan_paths(inc, sub[0], sub[1], sub[2], sub[3], float(u), strict, t)
                for a, s in zip(st, sub):
                    a[active] = s
            active = active[states[2][active] < 0]
            t += steps
        hs, hb = states[2], states_b[2]
        cnt_s = np.array([((hs >= 0) & (hs <= h)).sum() for h in edges], dtype=np.int64)
        cnt_b = np.array([((hb >= 0) & (hb <= h)).sum() for h in edges], dtype=np.int64)
        return violations, cnt_s, cnt_b, same

    parts = map_blocks(block, config)
    violations = sum(p[0] for p in parts)
    cnt_s = np.sum([p[1] for p in parts], axis=0)
    cnt_b = np.sum([p[2] for p in parts], axis=0)
    report = CouplingReport(
        violations=violations,
        paths=config.paths,
        horizons=horizons,
        star=[MCEstimate.from_counts(int(k), config.paths) for k in cnt_s],
        base=[MCEstimate.from_counts(int(k), config.paths) for k in cnt_b],
        identical_paths=all(p[3] for p in parts),
    )
    if raise_on_violation and violations:
        raise CouplingBroken(f"{violations} steps with starred partial sum above the original")
    return report


def _lattice(model):
    tables = getattr(model, "lattice_tables", None)
    return tables() if tables is not None else None


def _strict(convention: str) -> bool:
    if convention not in ("weak", "strict"):
        raise ValueError(f"convention must be 'weak' or 'strict', not {convention!r}")
    return convention == "strict"
