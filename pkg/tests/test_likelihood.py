import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import corridor
from taskweave.generate import generate
from taskweave.likelihood import CachedModel, ConstantModel, FrequencyModel, OracleModel, oracle_model, train


def test_estimate_arithmetic():
    m = FrequencyModel({("cup", "shelf", "kitchen"): (7, 10)})
    assert m.estimate("shelf", "kitchen", "cup") == pytest.approx(8 / 12)
    assert m.estimate("bed", "bedroom", "cup") == 0.5


def test_clamp():
    m = FrequencyModel({("cup", "shelf", "kitchen"): (100, 100)}, alpha=0.01, eps=0.01)
    assert m.estimate("shelf", "kitchen", "cup") == 0.99


def test_unseen_object_is_smoothed_prior():
    m = FrequencyModel({}, alpha=1.0, kind_room_totals={("shelf", "kitchen"): 8})
    assert m.estimate("shelf", "kitchen", "cup") == pytest.approx(1 / 10)


def test_trained_pillow_on_bed_beats_countertop():
    envs = [generate(10_000 + i, ("small", "medium", "large")[i % 3]) for i in range(500)]
    m = train(envs)
    assert m.estimate("bed", "bedroom", "pillow") > m.estimate("countertop", "kitchen", "pillow")


def test_degenerate_single_home():
    env = corridor(4, {"b": 3}, {"b": ["pillow", "x", "y", "z"]})
    m = train([env], alpha=1e-9)
    assert m.estimate("shelf", "livingroom", "pillow") == pytest.approx(0.99)


def test_train_rejects_empty():
    with pytest.raises(ValueError):
        train([])
    with pytest.raises(ValueError):
        train([corridor(3, {"a": 2})])


def test_monotone_in_positive_examples():
    base = [corridor(4, {"a": 3}, {"a": ["x"]}), corridor(4, {"a": 3}, {"a": ["y"]})]
    before = train(base, vocabulary=["x", "y"]).estimate("shelf", "livingroom", "x")
    after = train(base + [corridor(4, {"a": 3}, {"a": ["x"]})], vocabulary=["x", "y"])
    assert after.estimate("shelf", "livingroom", "x") >= before


def test_model_round_trip(tmp_path):
    m = train([generate(i, "small") for i in range(5)])
    p = tmp_path / "m.json"
    m.save(p)
    back = FrequencyModel.load(p)
    assert back == m


@given(st.integers(0, 50), st.integers(0, 50), st.floats(0.01, 5), st.floats(0.001, 0.49))
def test_estimates_stay_in_clamp_range(present, extra, alpha, eps):
    m = FrequencyModel({("o", "k", "r"): (present, present + extra)}, alpha, eps)
    p = m.estimate("k", "r", "o")
    assert eps <= p <= 1 - eps


def test_oracle_model():
    env = corridor(5, {"a": 2, "b": 4}, {"a": ["cup"]})
    m = oracle_model(env)
    assert m.probability(env, "a", "cup") == 0.99
    assert m.probability(env, "b", "cup") == 0.01
    noisy = OracleModel(env, noise=0.2)
    assert noisy.probability(env, "a", "cup") == pytest.approx(0.8 * 0.99 + 0.2 * 0.01)
    with pytest.raises(ValueError):
        OracleModel(env, noise=0.5)


def test_cached_and_constant_models():
    env = corridor(5, {"a": 2})
    inner = ConstantModel({("a", "cup"): 0.3})
    m = CachedModel(inner, env)
    assert m.p_s(env, "a", "pick-cup") == 0.3
    assert m.probability(env, "a", "tea") == 0.5
