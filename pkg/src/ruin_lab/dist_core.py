"""Distribution primitives: integer PMFs, continuous claim laws and couplings.

Everything here is immutable after construction. Samplers take an explicit
``numpy.random.Generator``; nothing touches global random state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from .errors import (
    DegenerateAtZero,
    DegenerateModel,
    EmptySite,
    EmptyTail,
    InvalidPerturbation,
    InvalidPMF,
)

PMF_SUM_TOL = 1e-12
TRUNCATION_MASS_TOL = 1e-12


# ---------------------------------------------------------------------------
# Integer claims
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IntegerPMF:
    """Finite-support law of a nonnegative integer random variable.

    ``probs[k]`` is ``P(X = k)``; trailing zero entries are trimmed so that
    ``probs[-1] > 0`` and ``support_max`` is the largest attainable value.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64).ravel()
        if p.size == 0:
            raise InvalidPMF("empty PMF")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise InvalidPMF("probabilities must be finite and nonnegative")
        total = p.sum()
        if abs(total - 1.0) > PMF_SUM_TOL:
            raise InvalidPMF(f"probabilities sum to {total!r}, not 1")
        nz = np.flatnonzero(p)
        p = p[: nz[-1] + 1].copy()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_dict(cls, probs: Mapping[Any, float]) -> "IntegerPMF":
        items = {}
        for k, v in probs.items():
            kk = int(k)
            if kk < 0 or str(kk) != str(k).strip():
                raise InvalidPMF(f"support value {k!r} is not a nonnegative integer")
            items[kk] = items.get(kk, 0.0) + float(v)
        arr = np.zeros(max(items) + 1)
        for k, v in items.items():
            arr[k] = v
        return cls(arr)

    @classmethod
    def from_tabulated(cls, probs, tol: float = TRUNCATION_MASS_TOL) -> "IntegerPMF":
        """Build from a (possibly long) tabulated sequence, cutting the tail.

        Atoms beyond the first index whose remaining mass drops below ``tol``
        are dropped and the missing mass goes to the largest kept value.
        """
        p = np.asarray(probs, dtype=np.float64).ravel()
        if np.any(p < 0):
            raise InvalidPMF("probabilities must be nonnegative")
        # remaining[k] = mass strictly above k
        remaining = np.concatenate([np.cumsum(p[::-1])[::-1][1:], [0.0]])
        cut = int(np.argmax(remaining < tol))
        kept = p[: cut + 1].copy()
        kept[cut] += 1.0 - kept.sum()
        return cls(kept)

    @classmethod
    def point(cls, k: int) -> "IntegerPMF":
        arr = np.zeros(k + 1)
        arr[k] = 1.0
        return cls(arr)

    @property
    def support_max(self) -> int:
        return self.probs.size - 1

    def prob(self, k: int) -> float:
        return float(self.probs[k]) if 0 <= k < self.probs.size else 0.0

    def mean(self) -> float:
        return pmf_mean(self)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def tail(self) -> np.ndarray:
        """``tail[k] = P(X > k)`` for k = 0..support_max."""
        return np.concatenate([np.cumsum(self.probs[::-1])[::-1][1:], [0.0]])

    def min_value(self) -> int:
        return int(np.flatnonzero(self.probs)[0])

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.sample_from_uniform(rng.random(size))

    def sample_from_uniform(self, u: np.ndarray) -> np.ndarray:
        """Inverse-CDF transform: the number of CDF values ``<= u``, capped at the support max."""
        cdf = self.cdf()[: self.support_max]
        if cdf.size > 16:
            return np.minimum(np.searchsorted(cdf, u, side="right"), self.support_max)
        k = np.zeros(np.shape(u), dtype=np.int64)
        for thr in cdf:
            k += u >= thr
        return k

    def claims_minus(self, u: np.ndarray, premium: float) -> np.ndarray:
        """``sample_from_uniform(u) - premium`` as float64, in one pass per support atom.

        Bit-identical to the subtraction when ``premium`` is an integer.
        """
        vals = np.flatnonzero(self.probs)
        base = float(vals[0]) - premium
        if vals.size == 1:
            return np.full(np.shape(u), base)
        if vals.size > 16:
            return np.searchsorted(self.cdf()[: self.support_max], u, side="right") - premium
        cdf = self.cdf()
        out = np.where(u >= cdf[vals[1] - 1], float(vals[1]) - premium, base)
        step = np.empty(np.shape(u), dtype=bool)
        for lo, hi in zip(vals[1:-1], vals[2:]):
            np.greater_equal(u, cdf[hi - 1], out=step)
            out += step if hi - lo == 1 else step * float(hi - lo)
        return out

    def as_dict(self) -> Dict[int, float]:
        return {k: float(v) for k, v in enumerate(self.probs) if v > 0}

    def to_json(self) -> dict:
        return {"probs": {str(k): v for k, v in self.as_dict().items()}}

    @classmethod
    def from_json(cls, obj: Mapping) -> "IntegerPMF":
        return cls.from_dict(obj["probs"])

    def __eq__(self, other):
        if not isinstance(other, IntegerPMF):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def __repr__(self):
        return f"IntegerPMF({self.as_dict()})"


def pmf_mean(pmf: IntegerPMF) -> float:
    """Expected value ``sum k h_k``."""
    return float(np.dot(np.arange(pmf.probs.size), pmf.probs))


def pgf_eval(pmf: IntegerPMF, s: complex) -> complex:
    """Probability generating function at ``|s| <= 1`` by Horner's scheme."""
    if abs(s) > 1.0 + 1e-12:
        raise ValueError(f"|s| = {abs(s)} > 1 is outside the PGF domain")
    acc = 0.0
    for h in pmf.probs[::-1]:
        acc = acc * s + h
    return acc


def convolve(p: IntegerPMF, q: IntegerPMF) -> IntegerPMF:
    """Law of the sum of independent copies of ``p`` and ``q``."""
    r = np.convolve(p.probs, q.probs)
    # renormalise only the rounding drift, never a real defect
    return IntegerPMF(r / r.sum())


# ---------------------------------------------------------------------------
# Discrete coupling
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CouplingPMF:
    """Joint law of ``(X*, X)`` obtained by moving mass from ``(b, b)`` to ``(s, b)``.

    ``epsilon`` is the drop in mean, so the moved mass is ``epsilon / (b - s)``.
    """

    source: IntegerPMF
    epsilon: float
    site_from: int
    site_to: int
    joint: Dict[Tuple[int, int], float] = field(default_factory=dict)

    @property
    def moved_mass(self) -> float:
        return self.epsilon / (self.site_from - self.site_to)

    def base_marginal(self) -> IntegerPMF:
        arr = np.zeros(self.source.probs.size)
        for (_, x), p in self.joint.items():
            arr[x] += p
        return IntegerPMF(arr)

    def star_marginal(self) -> IntegerPMF:
        arr = np.zeros(self.source.probs.size)
        for (xs, _), p in self.joint.items():
            arr[xs] += p
        return IntegerPMF(arr)

    def mass_above_diagonal(self) -> float:
        return float(sum(p for (xs, x), p in self.joint.items() if xs > x))

    def sample_pairs(self, rng: np.random.Generator, size) -> Tuple[np.ndarray, np.ndarray]:
        return self.pairs_from_uniform(rng.random(size))

    def pairs_from_uniform(self, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Map uniforms to ``(x_star, x)``; ``x`` alone is the source inverse CDF."""
        cdf = self.source.cdf()
        x = self.source.sample_from_uniform(u)
        b = self.site_from
        lower = cdf[b - 1] if b > 0 else 0.0
        moved = (x == b) & (u - lower < self.moved_mass)
        x_star = np.where(moved, self.site_to, x)
        return x_star, x


def perturb_discrete(pmf: IntegerPMF, b: int, s: int, epsilon: float) -> CouplingPMF:
    """Coupling whose starred marginal has mean lowered by exactly ``epsilon``.

    Mass ``epsilon / (b - s)`` of the atom at ``b`` is reassigned to ``s`` on
    the starred side only, so ``X* <= X`` surely.
    """
    if not s < b:
        raise InvalidPerturbation(f"target {s} must be smaller than source {b}")
    if s < 0:
        raise InvalidPerturbation("target value must be nonnegative")
    hb = pmf.prob(b)
    if hb <= 0.0:
        raise EmptySite(f"P(X = {b}) = 0, nothing to move")
    limit = (b - s) * hb
    if not 0.0 < epsilon < limit:
        raise InvalidPerturbation(f"epsilon={epsilon} outside (0, {limit})")
    delta = epsilon / (b - s)
    joint = {(k, k): float(h) for k, h in enumerate(pmf.probs) if h > 0}
    joint[(b, b)] = hb - delta
    joint[(s, b)] = delta
    return CouplingPMF(source=pmf, epsilon=float(epsilon), site_from=b, site_to=s, joint=joint)


def identity_coupling(pmf: IntegerPMF) -> CouplingPMF:
    """The trivial coupling ``X* = X`` (epsilon = 0)."""
    joint = {(k, k): float(h) for k, h in enumerate(pmf.probs) if h > 0}
    return CouplingPMF(source=pmf, epsilon=0.0, site_from=pmf.support_max + 1, site_to=0, joint=joint)


def choose_site(pmf: IntegerPMF, c: int) -> Tuple[int, int]:
    """Pick ``(b, s)`` for :func:`perturb_discrete`.

    ``s`` is the smallest value in ``{0, ..., c-1}``; ``b`` is the smallest
    value ``>= c`` carrying mass, or failing that the largest value above
    ``s`` carrying mass.
    """
    nz = np.flatnonzero(pmf.probs)
    if nz.size == 1 and (nz[0] == c or nz[0] == 0):
        raise DegenerateModel(f"claim is degenerate at {nz[0]}; no perturbation exists")
    s = 0
    above = nz[nz >= c]
    if above.size:
        return int(above[0]), s
    cand = nz[nz > s]
    if cand.size == 0:
        raise DegenerateModel("no mass above the target value")
    return int(cand[-1]), s


# ---------------------------------------------------------------------------
# Continuous claims
# ---------------------------------------------------------------------------


class ContinuousClaim:
    """Nonnegative claim (or inter-arrival) law described by its tail.

    Subclasses provide ``tail``, ``integrated_tail`` (``int_0^x tail``),
    ``ppf`` and ``mean``; ``laplace`` returns ``None`` when not available.
    """

    family: str = ""

    @property
    def params(self) -> dict:
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    def tail(self, x):
        raise NotImplementedError

    def integrated_tail(self, x):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError

    def laplace(self, t: float) -> Optional[float]:
        return None

    def cdf(self, x):
        return 1.0 - self.tail(x)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.ppf(rng.random(size))

    def is_degenerate(self) -> Optional[float]:
        """The single value carrying all the mass, if there is one."""
        return None

    def to_json(self) -> dict:
        return {"family": self.family, "params": self.params}

    def __repr__(self):
        return f"{type(self).__name__}({self.params})"


class Exponential(ContinuousClaim):
    family = "exponential"

    def __init__(self, mean: float = 1.0):
        if not mean > 0:
            raise ValueError("exponential mean must be positive")
        self._mean = float(mean)

    @property
    def params(self):
        return {"mean": self._mean}

    @property
    def mean(self):
        return self._mean

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 1.0, np.exp(-np.maximum(x, 0.0) / self._mean))

    def integrated_tail(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return -self._mean * np.expm1(-x / self._mean)

    def ppf(self, u):
        return -self._mean * np.log1p(-np.asarray(u, dtype=float))

    def sample(self, rng, size):
        return self._mean * rng.standard_exponential(size)

    def laplace(self, t):
        return 1.0 / (1.0 + t * self._mean)


class Uniform(ContinuousClaim):
    family = "uniform"

    def __init__(self, low: float = 0.0, high: float = 1.0):
        if not 0.0 <= low < high:
            raise ValueError("uniform needs 0 <= low < high")
        self.low, self.high = float(low), float(high)

    @property
    def params(self):
        return {"low": self.low, "high": self.high}

    @property
    def mean(self):
        return 0.5 * (self.low + self.high)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((self.high - x) / (self.high - self.low), 0.0, 1.0)

    def integrated_tail(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        w = self.high - self.low
        y = np.clip(x, self.low, self.high)
        inside = self.low + (w * w - (self.high - y) ** 2) / (2.0 * w)
        return np.where(x <= self.low, x, inside)

    def ppf(self, u):
        return self.low + (self.high - self.low) * np.asarray(u, dtype=float)

    def laplace(self, t):
        if t == 0:
            return 1.0
        w = self.high - self.low
        return (math.exp(-t * self.low) - math.exp(-t * self.high)) / (t * w)


class ShiftedDiscrete(ContinuousClaim):
    """Finitely many atoms at ``shift + values[i]`` with weights ``probs[i]``."""

    family = "shifted-discrete"

    def __init__(self, values, probs, shift: float = 0.0):
        v = np.asarray(values, dtype=float) + float(shift)
        p = np.asarray(probs, dtype=float)
        if v.shape != p.shape or v.size == 0:
            raise ValueError("values and probs must be equal-length, nonempty")
        if np.any(v < 0) or np.any(p < 0) or abs(p.sum() - 1.0) > PMF_SUM_TOL:
            raise ValueError("atoms must be nonnegative with probabilities summing to 1")
        order = np.argsort(v, kind="stable")
        self._raw = (list(map(float, values)), list(map(float, probs)), float(shift))
        self.values = v[order]
        self.probs = p[order]
        self._cdf = np.cumsum(self.probs)

    @property
    def params(self):
        values, probs, shift = self._raw
        return {"values": values, "probs": probs, "shift": shift}

    @property
    def mean(self):
        return float(np.dot(self.values, self.probs))

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        # P(X > x) = mass of atoms strictly above x
        idx = np.searchsorted(self.values, x, side="right")
        tails = np.concatenate([[1.0], 1.0 - self._cdf])
        return np.clip(tails[idx], 0.0, 1.0)

    def integrated_tail(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return np.sum(self.probs * np.minimum(x[..., None], self.values), axis=-1)

    def ppf(self, u):
        idx = np.searchsorted(self._cdf, np.asarray(u, dtype=float), side="right")
        return self.values[np.minimum(idx, self.values.size - 1)]

    def laplace(self, t):
        return float(np.dot(self.probs, np.exp(-t * self.values)))

    def is_degenerate(self):
        nz = self.probs > 0
        vals = np.unique(self.values[nz])
        return float(vals[0]) if vals.size == 1 else None


class Tabulated(ContinuousClaim):
    """Piecewise-linear CDF through ``(x[i], cdf[i])``; ``cdf[0]`` is an atom at 0."""

    family = "user-tabulated"

    def __init__(self, x, cdf):
        xs = np.asarray(x, dtype=float)
        fs = np.asarray(cdf, dtype=float)
        if xs.shape != fs.shape or xs.size < 2:
            raise ValueError("x and cdf must be equal-length with at least two points")
        if xs[0] != 0.0 or np.any(np.diff(xs) <= 0):
            raise ValueError("x must start at 0 and increase strictly")
        if np.any(np.diff(fs) < 0) or fs[0] < 0 or abs(fs[-1] - 1.0) > PMF_SUM_TOL:
            raise ValueError("cdf must be nondecreasing from >= 0 to 1")
        self.xs, self.fs = xs, fs
        tails = 1.0 - fs
        self._cum = np.concatenate([[0.0], np.cumsum(0.5 * (tails[1:] + tails[:-1]) * np.diff(xs))])

    @property
    def params(self):
        return {"x": self.xs.tolist(), "cdf": self.fs.tolist()}

    @property
    def mean(self):
        return float(self._cum[-1])

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        t = 1.0 - np.interp(x, self.xs, self.fs)
        return np.where(x < 0, 1.0, t)

    def integrated_tail(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, None)
        xc = np.minimum(x, self.xs[-1])
        i = np.clip(np.searchsorted(self.xs, xc, side="right") - 1, 0, self.xs.size - 2)
        d = xc - self.xs[i]
        t0 = 1.0 - self.fs[i]
        t1 = 1.0 - self.fs[i + 1]
        span = self.xs[i + 1] - self.xs[i]
        return self._cum[i] + t0 * d + (t1 - t0) * d * d / (2.0 * span)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u <= self.fs[0], 0.0, np.interp(u, self.fs, self.xs))


_FAMILIES: Dict[str, Callable[..., ContinuousClaim]] = {
    "exponential": Exponential,
    "uniform": Uniform,
    "shifted-discrete": ShiftedDiscrete,
    "user-tabulated": Tabulated,
}


def claim_from_json(obj: Mapping) -> ContinuousClaim:
    """Inverse of ``to_json`` for every claim type, including perturbed ones."""
    family = obj["family"]
    params = dict(obj.get("params", {}))
    if family == "perturbed":
        return PerturbedClaim(claim_from_json(params["base"]), params["a"], params["epsilon"])
    try:
        ctor = _FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown claim family {family!r}; expected one of {sorted(_FAMILIES)}")
    return ctor(**params)


class PerturbedClaim(ContinuousClaim):
    """``X* = X - epsilon`` when ``X > a``, ``X* = X`` otherwise.

    The tail of ``X*`` is
    ``P(x < X <= a) + P(X > max(a, x + epsilon))``.
    """

    family = "perturbed"

    def __init__(self, base: ContinuousClaim, a: float, epsilon: float):
        self.base = base
        self.a = float(a)
        self.epsilon = float(epsilon)
        self.p_exceed = float(base.tail(self.a))

    @property
    def params(self):
        return {"base": self.base.to_json(), "a": self.a, "epsilon": self.epsilon}

    @property
    def mean(self):
        return self.base.mean - self.epsilon * self.p_exceed

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        a, eps = self.a, self.epsilon
        below = np.where(x < a, self.base.tail(x) - self.p_exceed, 0.0)
        return np.clip(below, 0.0, None) + self.base.tail(np.maximum(a, x + eps))

    def integrated_tail(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        a, eps, pa = self.a, self.epsilon, self.p_exceed
        xa = np.minimum(x, a)
        part = self.base.integrated_tail(xa) - pa * xa + pa * np.minimum(x, a - eps)
        upper = np.maximum(self.base.integrated_tail(x + eps) - self.base.integrated_tail(a), 0.0)
        return part + np.where(x + eps > a, upper, 0.0)

    def transform(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > self.a, x - self.epsilon, x)

    def sample(self, rng, size):
        return self.transform(self.base.sample(rng, size))

    def sample_pairs(self, rng, size) -> Tuple[np.ndarray, np.ndarray]:
        """Coupled draws ``(x_star, x)`` with ``x_star <= x``."""
        x = self.base.sample(rng, size)
        return self.transform(x), x

    def ppf(self, u):
        return self.transform(self.base.ppf(u))


def perturb_continuous(claim: ContinuousClaim, a: float, epsilon: float) -> PerturbedClaim:
    """Shift claims above ``a`` down by ``epsilon``; mean drops by ``epsilon * P(X > a)``."""
    if not epsilon < a:
        raise InvalidPerturbation(f"epsilon={epsilon} must be smaller than a={a}")
    if not epsilon > 0:
        raise InvalidPerturbation("epsilon must be positive")
    if not float(claim.tail(a)) > 0.0:
        raise EmptyTail(f"P(X > {a}) = 0")
    return PerturbedClaim(claim, a, epsilon)


def integrated_tail_cdf(claim: ContinuousClaim, u: float, grid_step: float) -> float:
    """``F_I(u) = (1/EX) int_0^u P(X > x) dx`` by the composite trapezoid rule."""
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    if u < 0:
        raise ValueError("u must be nonnegative")
    mean = claim.mean
    if not mean > 0:
        raise ValueError("claim mean must be positive")
    if math.isinf(u):
        return 1.0
    n = max(1, math.ceil(u / grid_step))
    x = np.linspace(0.0, u, n + 1)
    t = claim.tail(x)
    val = float(np.sum(0.5 * (t[1:] + t[:-1])) * (u / n)) / mean
    return min(1.0, max(0.0, val))


# ---------------------------------------------------------------------------
# Concentration bound for sums of nonnegative i.i.d. variables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncationBound:
    x: float
    t: float
    q: float
    bound: float


def truncation_bound(x: float, t: float, q: float) -> TruncationBound:
    """Bound ``sum_{n>=1} P(eta_1+...+eta_n <= x) <= e^{tx} q / (1 - q)``.

    ``q`` is the Laplace transform ``E exp(-t eta)`` at ``t``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if not q < 1.0:
        raise DegenerateAtZero(f"E exp(-t eta) = {q} >= 1; eta is degenerate at zero")
    if not q > 0.0:
        raise ValueError("q must be positive")
    return TruncationBound(x=x, t=t, q=q, bound=math.exp(t * x) * q / (1.0 - q))
