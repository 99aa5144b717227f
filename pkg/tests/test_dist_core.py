import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from ruin_lab.dist_core import (
    Exponential,
    IntegerPMF,
    PerturbedClaim,
    ShiftedDiscrete,
    Tabulated,
    Uniform,
    choose_site,
    claim_from_json,
    convolve,
    identity_coupling,
    integrated_tail_cdf,
    perturb_continuous,
    perturb_discrete,
    pgf_eval,
    pmf_mean,
    truncation_bound,
)
from ruin_lab.errors import (
    DegenerateAtZero,
    DegenerateModel,
    EmptySite,
    EmptyTail,
    InvalidPerturbation,
    InvalidPMF,
)


@st.composite
def pmfs(draw, max_support=6, min_atoms=1):
    size = draw(st.integers(min_value=max(1, min_atoms), max_value=max_support))
    w = draw(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=size, max_size=size))
    w = np.array(w)
    if w.sum() <= 1e-3 or np.count_nonzero(w) < min_atoms:
        w = np.ones(size)
    return IntegerPMF(w / w.sum())


class TestIntegerPMF:
    def test_mean_examples(self):
        assert pmf_mean(IntegerPMF.from_dict({0: 0.55, 2: 0.45})) == pytest.approx(0.9, abs=1e-15)
        assert pmf_mean(IntegerPMF.from_dict({0: 0.5, 2: 0.5})) == pytest.approx(1.0, abs=1e-15)

    def test_string_keys_and_trailing_zeros(self):
        p = IntegerPMF.from_dict({"0": 0.5, "1": 0.5, "3": 0.0})
        assert p.support_max == 1
        assert p.as_dict() == {0: 0.5, 1: 0.5}

    @pytest.mark.parametrize("probs", [{0: 0.5, 1: 0.6}, {0: -0.1, 1: 1.1}, {}])
    def test_invalid(self, probs):
        with pytest.raises((InvalidPMF, ValueError)):
            IntegerPMF.from_dict(probs)

    def test_negative_key_rejected(self):
        with pytest.raises(InvalidPMF):
            IntegerPMF.from_dict({-1: 0.5, 0: 0.5})

    def test_tabulated_truncation_keeps_mass(self):
        tab = [0.5 * 0.5**k for k in range(80)]
        tab[-1] += 1.0 - sum(tab)
        p = IntegerPMF.from_tabulated(tab)
        assert p.probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert p.support_max < 60

    def test_pgf(self):
        p = IntegerPMF.from_dict({0: 0.25, 1: 0.5, 2: 0.25})
        assert pgf_eval(p, 1.0) == pytest.approx(1.0)
        assert pgf_eval(p, -1.0) == pytest.approx(0.0, abs=1e-15)
        with pytest.raises(ValueError):
            pgf_eval(p, 1.5)

    def test_json_roundtrip(self):
        p = IntegerPMF.from_dict({0: 0.2, 3: 0.8})
        assert IntegerPMF.from_json(p.to_json()) == p

    @given(pmfs(), pmfs())
    def test_convolve_mean_adds(self, p, q):
        r = convolve(p, q)
        assert r.mean() == pytest.approx(p.mean() + q.mean(), abs=1e-10)

    @given(pmfs(max_support=20), st.integers(min_value=-3, max_value=5))
    @settings(max_examples=40)
    def test_claims_minus_matches_inverse_cdf(self, p, premium):
        u = np.random.default_rng(0).random(2000)
        u[:3] = [0.0, p.cdf()[0], np.nextafter(1.0, 0.0)]
        assert np.array_equal(p.claims_minus(u, premium), p.sample_from_uniform(u) - premium)

    def test_sampling_frequencies(self):
        p = IntegerPMF.from_dict({0: 0.2, 1: 0.3, 4: 0.5})
        x = p.sample(np.random.default_rng(1), 200_000)
        freq = np.bincount(x, minlength=5) / x.size
        assert np.allclose(freq, p.probs, atol=4e-3)


class TestDiscreteCoupling:
    @given(pmfs(min_atoms=2), st.floats(min_value=0.01, max_value=0.99))
    def test_invariants(self, pmf, frac):
        nz = np.flatnonzero(pmf.probs)
        b, s = int(nz[-1]), 0
        eps = frac * (b - s) * pmf.prob(b)
        cp = perturb_discrete(pmf, b, s, eps)
        assert cp.mass_above_diagonal() == 0.0
        assert np.array_equal(cp.base_marginal().probs, pmf.probs) or np.allclose(
            cp.base_marginal().probs, pmf.probs, atol=1e-15
        )
        assert cp.star_marginal().mean() == pytest.approx(pmf.mean() - eps, abs=1e-12)
        xs, x = cp.sample_pairs(np.random.default_rng(3), 5000)
        assert np.all(xs <= x)

    def test_example_neutral(self):
        cp = perturb_discrete(IntegerPMF.from_dict({0: 0.5, 2: 0.5}), 2, 0, 0.1)
        assert cp.star_marginal().as_dict() == pytest.approx({0: 0.55, 2: 0.45})

    def test_pairs_marginals_by_simulation(self):
        cp = perturb_discrete(IntegerPMF.from_dict({0: 0.3, 1: 0.3, 3: 0.4}), 3, 1, 0.3)
        xs, x = cp.sample_pairs(np.random.default_rng(5), 400_000)
        assert np.allclose(np.bincount(x, minlength=4) / x.size, cp.source.probs, atol=3e-3)
        assert np.allclose(np.bincount(xs, minlength=4) / xs.size, cp.star_marginal().probs, atol=3e-3)

    def test_errors(self):
        pmf = IntegerPMF.from_dict({0: 0.5, 2: 0.5})
        with pytest.raises(InvalidPerturbation):
            perturb_discrete(pmf, 2, 0, 1.0)  # limit is (b - s) * h_b = 1
        with pytest.raises(InvalidPerturbation):
            perturb_discrete(pmf, 0, 2, 0.1)
        with pytest.raises(EmptySite):
            perturb_discrete(pmf, 1, 0, 0.1)

    def test_choose_site(self):
        assert choose_site(IntegerPMF.from_dict({0: .25, 1: .25, 2: .25, 3: .25}), 2) == (2, 0)
        assert choose_site(IntegerPMF.from_dict({0: .5, 2: .5}), 1) == (2, 0)
        assert choose_site(IntegerPMF.from_dict({0: .5, 1: .5}), 3) == (1, 0)
        with pytest.raises(DegenerateModel):
            choose_site(IntegerPMF.point(1), 1)

    def test_identity_coupling(self):
        pmf = IntegerPMF.from_dict({0: 0.5, 2: 0.5})
        cp = identity_coupling(pmf)
        xs, x = cp.sample_pairs(np.random.default_rng(0), 1000)
        assert np.array_equal(xs, x)
        assert cp.epsilon == 0.0


CLAIMS = [
    Exponential(1.0),
    Exponential(2.5),
    Uniform(0.0, 2.0),
    Uniform(0.5, 1.5),
    ShiftedDiscrete([1.0, 3.0], [0.4, 0.6], shift=0.5),
    Tabulated([0.0, 1.0, 2.0, 4.0], [0.0, 0.3, 0.8, 1.0]),
    PerturbedClaim(Exponential(1.0), math.log(2), 0.3),
    PerturbedClaim(Uniform(0.0, 2.0), 1.0, 0.4),
]


@pytest.mark.parametrize("claim", CLAIMS, ids=lambda c: c.family)
class TestContinuousClaims:
    def test_tail_shape(self, claim):
        x = np.linspace(0, 20, 2001)
        t = claim.tail(x)
        assert np.all(np.diff(t) <= 1e-15)
        assert float(claim.tail(200.0)) == pytest.approx(0.0, abs=1e-12)

    def test_mean_is_tail_integral(self, claim):
        edges = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 60.0]
        total = sum(integrate.quad(lambda v: float(claim.tail(v)), a, b, limit=200, epsabs=1e-12)[0]
                    for a, b in zip(edges[:-1], edges[1:]))
        assert total == pytest.approx(claim.mean, abs=1e-8)

    def test_integrated_tail_derivative(self, claim):
        x = np.array([0.2, 0.9, 1.7, 3.3])
        h = 1e-6
        d = (claim.integrated_tail(x + h) - claim.integrated_tail(x - h)) / (2 * h)
        assert np.allclose(d, claim.tail(x), atol=1e-5)

    def test_sample_mean(self, claim):
        x = claim.sample(np.random.default_rng(9), 400_000)
        assert np.all(x >= 0)
        assert x.mean() == pytest.approx(claim.mean, abs=6 * x.std() / math.sqrt(x.size))

    def test_json_roundtrip(self, claim):
        back = claim_from_json(claim.to_json())
        x = np.linspace(0, 5, 51)
        assert np.allclose(back.tail(x), claim.tail(x))
        assert back.mean == pytest.approx(claim.mean)


class TestPerturbedClaim:
    def test_pairs(self):
        pc = perturb_continuous(Exponential(1.0), math.log(2), 0.2)
        xs, x = pc.sample_pairs(np.random.default_rng(2), 100_000)
        assert np.all(xs <= x)
        low = x <= pc.a
        assert np.array_equal(xs[low], x[low])
        assert np.allclose(x[~low] - xs[~low], 0.2)

    def test_mean_drop(self):
        pc = perturb_continuous(Exponential(1.0), math.log(2), 0.2)
        assert pc.mean == pytest.approx(1.0 - 0.2 * 0.5, abs=1e-15)

    def test_tail_against_samples(self):
        pc = perturb_continuous(Exponential(1.0), 1.0, 0.5)
        x = np.sort(pc.sample(np.random.default_rng(4), 400_000))
        grid = np.array([0.25, 0.6, 0.9, 1.0, 1.2, 2.0])
        emp = 1.0 - np.searchsorted(x, grid, side="right") / x.size
        assert np.allclose(emp, pc.tail(grid), atol=4e-3)

    def test_errors(self):
        with pytest.raises(InvalidPerturbation):
            perturb_continuous(Exponential(1.0), 0.5, 0.5)
        with pytest.raises(InvalidPerturbation):
            perturb_continuous(Exponential(1.0), 0.5, 0.0)
        with pytest.raises(EmptyTail):
            perturb_continuous(Uniform(0.0, 1.0), 2.0, 0.5)


def test_integrated_tail_cdf_exponential():
    for u in (0.0, 0.5, 2.0, 7.0):
        assert integrated_tail_cdf(Exponential(1.0), u, 1e-3) == pytest.approx(1 - math.exp(-u), abs=1e-7)
    assert integrated_tail_cdf(Exponential(1.0), math.inf, 0.1) == 1.0


class TestTruncationBound:
    def test_exponential_example(self):
        tb = truncation_bound(1.0, 1.0, 0.5)
        assert tb.bound == pytest.approx(math.e, abs=1e-14)

    def test_degenerate(self):
        with pytest.raises(DegenerateAtZero):
            truncation_bound(1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            truncation_bound(1.0, 0.0, 0.5)

    @given(st.floats(0.0, 5.0), st.floats(0.1, 3.0))
    def test_dominates_exponential_renewal(self, x, t):
        # eta ~ Exp(1): sum_n P(S_n <= x) = x exactly
        q = 1.0 / (1.0 + t)
        assert truncation_bound(x, t, q).bound >= x - 1e-12
