import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruin_lab.andersen_ruin import AndersenModel
from ruin_lab.classical_ruin import ClassicalModel
from ruin_lab.discrete_ruin import SeasonalModel, dp_ruin_curve
from ruin_lab.dist_core import Exponential, IntegerPMF, ShiftedDiscrete, identity_coupling, perturb_discrete
from ruin_lab.errors import CouplingBroken
from ruin_lab.mc_engine import (
    BLOCK_PATHS,
    MCConfig,
    MCEstimate,
    batch_steps,
    rng_substream,
    ruin_curve,
    scan_walk,
    simulate_coupled,
    simulate_ruin,
    simulate_sup,
    wilson_interval,
)

NEUTRAL = SeasonalModel.homogeneous(IntegerPMF.from_dict({0: 0.5, 2: 0.5}))


def test_config_validation():
    for bad in (dict(paths=0, horizon=1), dict(paths=1, horizon=0), dict(paths=1, horizon=1, chunks=0),
                dict(paths=1, horizon=1, seed=-1)):
        with pytest.raises(ValueError):
            MCConfig(**bad)


def test_substreams():
    a = rng_substream(42, 0).random(1000)
    assert np.array_equal(a, rng_substream(42, 0).random(1000))
    x = rng_substream(42, 0).random(100_000)
    y = rng_substream(42, 1).random(100_000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.01


@given(st.integers(0, 1000), st.integers(1, 1000))
def test_wilson_inside_unit_interval(k, n):
    k = min(k, n)
    lo, hi = wilson_interval(k, n)
    assert 0.0 <= lo <= k / n <= hi <= 1.0


def test_estimate_json():
    est = MCEstimate.from_counts(25, 100)
    rec = est.to_json(MCConfig(paths=100, horizon=7, seed=3))
    assert set(rec) == {"p_hat", "stderr", "ci95", "paths", "horizon", "seed"}
    assert rec["p_hat"] == 0.25 and rec["horizon"] == 7


def test_one_period_neutral():
    est = simulate_ruin(NEUTRAL, 0, MCConfig(paths=200_000, horizon=1, seed=1))
    assert est.ci95[0] <= 0.5 <= est.ci95[1]


def test_never_ruined_degenerate_andersen():
    model = AndersenModel(1.0, ShiftedDiscrete([1.0], [1.0]), ShiftedDiscrete([2.0], [1.0]))
    assert simulate_ruin(model, 0.0, MCConfig(paths=1000, horizon=50)).p_hat == 0.0


def test_constant_surplus_never_ruined():
    # X = 1, theta = 1, c = 1: the walk stays at 0 and the weak convention never ruins
    model = SeasonalModel.homogeneous(IntegerPMF.point(1), 1)
    for u in (0, 3):
        assert simulate_ruin(model, u, MCConfig(paths=1000, horizon=100)).p_hat == 0.0


def test_neutral_andersen_long_horizon():
    model = AndersenModel(1.0, Exponential(1.0), Exponential(1.0))
    est = simulate_ruin(model, 0.0, MCConfig(paths=4000, horizon=10_000, seed=9))
    assert est.p_hat >= 0.95


@pytest.mark.parametrize("chunks", [2, 4, 8])
def test_partition_invariance(chunks):
    cfg = MCConfig(paths=3 * BLOCK_PATHS + 17, horizon=300, seed=42)
    cfg_n = MCConfig(paths=cfg.paths, horizon=300, seed=42, chunks=chunks)
    for model in (NEUTRAL, ClassicalModel(1.0, 1.1, Exponential(1.0))):
        a = ruin_curve(model, 1, cfg, [10, 300])
        b = ruin_curve(model, 1, cfg_n, [10, 300])
        assert [e.hits for e in a] == [e.hits for e in b]


def test_thread_count_invariance(monkeypatch):
    cfg = MCConfig(paths=2 * BLOCK_PATHS, horizon=200, seed=7, chunks=2)
    monkeypatch.setenv("RUIN_LAB_THREADS", "1")
    a = simulate_sup(NEUTRAL, [0, 2], cfg)
    monkeypatch.setenv("RUIN_LAB_THREADS", "2")
    b = simulate_sup(NEUTRAL, [0, 2], cfg)
    assert [e.hits for e in a] == [e.hits for e in b]


def test_monotone_in_horizon_and_u():
    cfg = MCConfig(paths=20_000, horizon=500, seed=3)
    curve = [e.p_hat for e in ruin_curve(NEUTRAL, 0, cfg, [1, 10, 100, 500])]
    assert curve == sorted(curve)
    by_u = [e.p_hat for e in simulate_sup(NEUTRAL, [0, 1, 2, 5, 10], cfg)]
    assert by_u == sorted(by_u, reverse=True)


def test_sup_matches_single_u():
    cfg = MCConfig(paths=10_000, horizon=200, seed=5)
    multi = simulate_sup(NEUTRAL, [0, 3], cfg)
    single = simulate_ruin(NEUTRAL, 3, cfg)
    assert abs(multi[1].p_hat - single.p_hat) < 4 * single.stderr


@pytest.mark.parametrize("convention", ["weak", "strict"])
def test_mc_matches_dp(convention):
    model = SeasonalModel.homogeneous(IntegerPMF.from_dict({0: 0.3, 1: 0.3, 3: 0.4}), 1)
    dp = dp_ruin_curve(model, 2, 50, convention)
    est = ruin_curve(model, 2, MCConfig(paths=100_000, horizon=50, seed=8), [5, 50], convention)
    for T, e in zip((5, 50), est):
        assert abs(e.p_hat - dp[T - 1]) < 4 * e.stderr + 1e-12


def test_seasonal_mc_matches_dp():
    model = SeasonalModel(1, (IntegerPMF.from_dict({0: 0.6, 2: 0.4}), IntegerPMF.from_dict({0: 0.8, 1: 0.2})))
    dp = dp_ruin_curve(model, 1, 40)
    est = ruin_curve(model, 1, MCConfig(paths=100_000, horizon=40, seed=2), [3, 40])
    for T, e in zip((3, 40), est):
        assert abs(e.p_hat - dp[T - 1]) < 4 * e.stderr


def test_coupled_report():
    cp = perturb_discrete(NEUTRAL.pmfs[0], 2, 0, 0.1)
    rep = simulate_coupled(NEUTRAL.coupled(cp), 0, MCConfig(paths=20_000, horizon=100, seed=1), [1, 10, 100])
    assert rep.violations == 0 and rep.ordering_holds
    assert rep.to_json()["ordering_holds"] is True


def test_identity_coupling_identical_paths():
    coupled = NEUTRAL.coupled(identity_coupling(NEUTRAL.pmfs[0]))
    rep = simulate_coupled(coupled, 0, MCConfig(paths=10_000, horizon=100, seed=1), [10, 100])
    assert rep.identical_paths
    assert [e.hits for e in rep.star] == [e.hits for e in rep.base]


class _BrokenCoupling:
    def coupled_increments(self, rng, n, steps, step0):
        x = rng.standard_normal((n, steps))
        return x + 0.5, x


def test_broken_coupling_detected():
    with pytest.raises(CouplingBroken):
        simulate_coupled(_BrokenCoupling(), 0.0, MCConfig(paths=100, horizon=10))
    rep = simulate_coupled(_BrokenCoupling(), 0.0, MCConfig(paths=100, horizon=10), raise_on_violation=False)
    assert rep.violations > 0


def test_batch_schedule():
    t, sizes = 0, []
    while t < 1000:
        s = batch_steps(t, 1000)
        sizes.append(s)
        t += s
    assert sum(sizes) == 1000 and sizes[0] == 4 and max(sizes) == 256


def test_lattice_scan_identical_to_generic():
    model = SeasonalModel(2, (IntegerPMF.from_dict({0: 0.6, 2: 0.3, 5: 0.1}), IntegerPMF.from_dict({1: 0.7, 3: 0.3})))
    for strict in (False, True):
        a = scan_walk(model.increments, rng_substream(3, 0), 3000, 300, 2.0, strict)
        b = scan_walk(model.increments, rng_substream(3, 0), 3000, 300, 2.0, strict, model.lattice_tables())
        assert np.array_equal(a.hit_step, b.hit_step)
        assert np.array_equal(a.running_max, b.running_max)
