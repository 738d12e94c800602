import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abstain_lab.boosting import (AbstainBoost, Aggregate, Boosting, Delete, StreamConfig,
                                  aggregate_bound, boosting_abstention_bound,
                                  boosting_mistake_bound, delete_bound, num_layers, run_stream,
                                  synthetic_stream, wma_bound)
from abstain_lab.environment import (OracleLearner, Scenario, UniformBox, default_labeler)
from abstain_lab.errors import ContractError, InputError
from abstain_lab.hypothesis import Thresholds
from abstain_lab.labels import ABSTAIN

B = ABSTAIN


def test_delete_examples():
    assert Delete(3, 0, 1).predict([1, B, 1]) == 1
    d = Delete(2, 1, 1)
    assert d.predict([1, 0]) == B
    assert d.predict([1, 0]) == 1    # tie goes to 1
    assert Delete(3, 0, 3).predict([1, 0, B]) == B


def test_delete_counts_only_predictions():
    d = Delete(1, 1, 1)
    assert d.predict([B]) == B
    assert d.predict([0]) == B
    assert d.predict([0]) == 0


def test_aggregate_examples():
    agg = Aggregate(2, 1, 1)
    agg.counts[:] = 5
    assert agg.predict([1, 1]) == 1
    agg.update(1)
    assert list(agg.exponents) == [0, 0]
    fresh = Aggregate(2, 1, 1)
    assert fresh.predict([1, 1]) == B     # Delete_1 has no survivor
    fresh.update(0)
    assert list(fresh.exponents) == [0, 0]


def test_aggregate_weighted_vote_and_halving():
    agg = Aggregate(3, 1, 1)
    agg.counts[:] = [1, 0, 0]
    agg.exponents[:] = [0, 1]                 # weights (1, 1/2)
    assert agg.predict([1, 0, 0]) == 0        # Delete_0 says 0, Delete_1 says 1
    assert list(agg.sub_predictions) == [0, 1]
    agg.update(1)
    assert list(agg.weights) == [0.5, 0.5]


def test_aggregate_needs_label_when_predicting():
    agg = Aggregate(1, 0, 1)
    agg.predict([1])
    with pytest.raises(ContractError):
        agg.update(None)


def test_boosting_examples():
    b = Boosting(3, 1, 2)
    assert b.predict([B, B, B]) == B and b.consulted == []
    single = Boosting(1, 0, 1)
    assert single.predict([1]) == 1 and single.consulted == [1]
    single.update(0)
    assert single.predict([1]) == B


def test_boosting_layers_strictly_increase():
    rng = np.random.default_rng(0)
    b = Boosting(16, 2, 3)
    for _ in range(300):
        frame = rng.choice([0, 1, B], size=16, p=[0.2, 0.2, 0.6])
        b.predict(frame)
        assert all(x < y for x, y in zip(b.consulted, b.consulted[1:]))
        assert len(b.consulted) <= num_layers(16)
        b.update(int(rng.integers(0, 2)))
    assert (b.budgets >= 0).all() and (b.budgets <= 2).all()


def test_boosting_fractional_threshold():
    # L = 3: layer 1 needs ceil(3/2) = 2 surviving predictions
    b = Boosting(3, 0, 5)
    assert b.predict([1, B, B]) == 1
    assert b.consulted == [2]


def test_num_layers():
    assert [num_layers(L) for L in (1, 2, 3, 4, 5, 16, 17)] == [1, 1, 2, 2, 3, 4, 5]


def test_stream_examples():
    s = synthetic_stream(StreamConfig(8, 100, 4, 0), 1)
    active = s.preds != B
    assert (s.preds[active] == np.broadcast_to(s.labels[:, None], s.preds.shape)[active]).all()
    s = synthetic_stream(StreamConfig(8, 50, 0, 2), 1)
    assert (s.preds == B).all()
    s = synthetic_stream(StreamConfig(8, 200, 8, 3), 2)
    wrong = (s.preds != B) & (s.preds != s.labels[:, None])
    assert (wrong.sum(axis=0) == s.mistakes).all()
    assert (wrong[s.in_u].sum(axis=0) == s.mistakes_u).all()
    assert (s.mistakes_u <= 3).all()
    assert (((s.preds == B) & s.clean[:, None]).sum(axis=0) == s.abstentions).all()
    assert ((s.preds != B).sum(axis=1) <= 8).all()
    with pytest.raises(InputError):
        synthetic_stream(StreamConfig(4, 10, 5, 1), 0)


stream_cfg = st.builds(
    StreamConfig, L=st.sampled_from([4, 16, 64]), T=st.just(150), C=st.integers(1, 16),
    M=st.integers(0, 4), pattern=st.sampled_from(["uniform", "graded", "bursty"]),
    clean_fraction=st.sampled_from([1.0, 0.7]), attack_rate=st.sampled_from([0.1, 0.4]))


def _fit(cfg):
    cfg.C = min(cfg.C, cfg.L)
    return cfg


@settings(max_examples=25, deadline=None)
@given(stream_cfg, st.integers(0, 2 ** 20), st.integers(0, 6))
def test_delete_existence_and_aggregate_bounds(cfg, seed, s_max):
    cfg = _fit(cfg)
    s = synthetic_stream(cfg, seed)
    U = len(s.labels)
    half = -(-cfg.C // 2)
    best = min(run_stream(Delete(cfg.L, k, half), s).mistakes for k in range(s_max + 1))
    assert best <= delete_bound(cfg.M, cfg.L, U, s_max)
    agg = Aggregate(cfg.L, s_max, half)
    out = run_stream(agg, s)
    assert out.mistakes <= aggregate_bound(cfg.M, cfg.L, U, s_max)
    assert out.mistakes <= wma_bound(int(agg.sub_mistakes.min()), s_max + 1)


@settings(max_examples=25, deadline=None)
@given(stream_cfg, st.integers(0, 2 ** 20), st.integers(0, 6))
def test_boosting_bounds_and_censored_equivalence(cfg, seed, s_max):
    cfg = _fit(cfg)
    s = synthetic_stream(cfg, seed)
    M = cfg.M + 1
    full = run_stream(Boosting(cfg.L, s_max, M), s)
    assert full.mistakes <= boosting_mistake_bound(M, cfg.T, cfg.L, s_max)
    assert full.abstentions <= boosting_abstention_bound(s_max, cfg.L, s.mistakes,
                                                         s.abstentions, M)
    cens = run_stream(Boosting(cfg.L, s_max, M, censored=True), s)
    assert (cens.outputs == full.outputs).all()
    reveal = run_stream(Boosting(cfg.L, s_max, M, censored=True), s, reveal="predicted")
    assert reveal.mistakes <= boosting_mistake_bound(M, cfg.T, cfg.L, s_max)


def test_boosting_missing_label_in_full_mode():
    b = Boosting(2, 0, 1)
    b.predict([B, B])
    with pytest.raises(InputError):
        b.update(None)


def _oracle_scenario():
    spec = Thresholds()
    lab = default_labeler(spec)
    return Scenario(spec, UniformBox(spec), lab, 200, "fixed_fraction_replay",
                    {"fraction": 0.3}), lab


def test_abstain_boost_single_oracle():
    scen, lab = _oracle_scenario()
    res = scen.run(AbstainBoost([OracleLearner(lab)], 0, 1), 0)
    assert res.mis_err == 0 and res.abs_err == 0
    # one layer is always kept, so s_max deletions cost s_max * 1 abstentions
    res = scen.run(AbstainBoost([OracleLearner(lab)], 3, 1), 0)
    assert res.mis_err == 0 and res.abs_err <= 3 * num_layers(1)


def test_abstain_boost_identical_experts():
    scen, lab = _oracle_scenario()
    one = scen.run(AbstainBoost([OracleLearner(lab)], 2, 1), 4)
    many = scen.run(AbstainBoost([OracleLearner(lab)] * 5, 2, 1), 4)
    assert one.predictions() == many.predictions()


def test_abstain_boost_empty_pool():
    with pytest.raises(InputError):
        AbstainBoost([], 1, 1)
