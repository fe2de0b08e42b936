import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triadic.dataset import ENEMY, FRIEND, Standardizer
from triadic.errors import ConfigurationError, TrainingError
from triadic.mlp import (
    TrainConfig, balanced_batches, crossing_point, cross_entropy, dynamical_weights, ensemble_curve,
    forward_probs, gradient, init_model, learning_rate, load_model, loss, predict, probability_curve,
    probability_surface, save_model, softmax, train,
)


def test_softmax_examples():
    assert np.allclose(softmax([0.0, 0.0]), [0.5, 0.5])
    assert np.allclose(softmax([0.0, math.log(3)]), [0.25, 0.75])
    assert np.allclose(softmax([1000.0, 0.0]), [1.0, 0.0])


@settings(max_examples=50)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=2), st.floats(-100, 100))
def test_softmax_shift_invariant(logits, c):
    a = softmax(np.array(logits))
    assert math.isclose(a.sum(), 1.0, abs_tol=1e-12)
    assert np.allclose(a, softmax(np.array(logits) + c), atol=1e-9)


def test_cross_entropy_examples():
    assert math.isclose(cross_entropy([[0.5, 0.5]], [0]), math.log(2))
    assert math.isclose(cross_entropy([[0.5, 0.5], [0.25, 0.75]], [0, 0]), math.log(2) + math.log(4))


def test_cross_entropy_clamps_zero_probability():
    assert math.isclose(cross_entropy([[0.0, 1.0]], [0]), -math.log(1e-12))


def test_cross_entropy_class_weights():
    assert math.isclose(cross_entropy([[0.5, 0.5], [0.5, 0.5]], [0, 1], (6, 2)), 8 * math.log(2))


@pytest.mark.parametrize("weights", [None, (3.0, 1.5)])
def test_gradient_matches_finite_differences(weights):
    rng = np.random.default_rng(1)
    model = init_model(3, hidden=6, rng=rng)
    X = rng.normal(size=(5, 3))
    y = np.array([0, 1, 1, 0, 1])
    grads = gradient(model, X, y, weights)
    eps = 1e-5
    for name, value in model.params().items():
        numeric = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            old = value[idx]
            value[idx] = old + eps
            up = loss(model, X, y, weights)
            value[idx] = old - eps
            down = loss(model, X, y, weights)
            value[idx] = old
            numeric[idx] = (up - down) / (2 * eps)
        assert np.allclose(grads[name], numeric, rtol=1e-4, atol=1e-6), name


def test_learning_rate_schedule():
    config = TrainConfig()
    assert learning_rate(config, 0) == 0.1
    assert math.isclose(learning_rate(config, 100), 0.1 * 0.99 ** 100)
    assert math.isclose(learning_rate(config, 100), 0.0366, abs_tol=1e-4)


def test_dynamical_weights_contract():
    assert dynamical_weights(0) == (6.0, 6.0)
    for t in range(40):
        we, wf = dynamical_weights(t)
        assert 1 <= we <= 11 and 1 <= wf <= 11
        assert math.isclose(we + wf, 12.0)
        assert np.allclose(dynamical_weights(t + 5), (we, wf))
    we, wf = dynamical_weights(1)
    assert we > wf


def test_dynamical_weights_zero_amplitude_is_plain_loss():
    assert dynamical_weights(3, amplitude=0) == (1.0, 1.0)


def test_balanced_batches_halves():
    labels = np.array([0] * 3 + [1] * 50)
    gen = balanced_batches(labels, 20, np.random.default_rng(0))
    seen = set()
    for _ in range(6):
        batch = next(gen)
        assert len(batch) == 20
        assert (labels[batch] == ENEMY).sum() == 10
        seen |= set(batch[labels[batch] == FRIEND].tolist())
    # majority class sweeps through without replacement
    assert len(seen) == 50


def test_balanced_batches_need_both_classes():
    with pytest.raises(TrainingError):
        next(balanced_batches([1, 1, 1], 2, np.random.default_rng(0)))


@pytest.mark.parametrize("kwargs", [{"lr0": 0}, {"steps": 0}, {"minibatch": 3}, {"oscillation_amplitude": -1}])
def test_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        TrainConfig(**kwargs)


def test_isolated_config():
    config = TrainConfig.for_isolated()
    assert config.steps == 1000 and config.dynamical


def test_train_learns_xor():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 10, dtype=float)
    y = np.array([0, 1, 1, 0] * 10)
    model = train((X, y), TrainConfig(steps=2000, lr0=0.3, lr_decay=0.999, minibatch=4))
    assert predict(model, X[:4]).tolist() == [0, 1, 1, 0]


def test_train_is_deterministic():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 2))
    y = (X[:, 0] > 0).astype(int)
    a = train((X, y), TrainConfig(steps=50, seed=4))
    b = train((X, y), TrainConfig(steps=50, seed=4))
    assert all(np.array_equal(a.params()[k], b.params()[k]) for k in a.params())


def test_train_needs_two_classes():
    with pytest.raises(TrainingError):
        train((np.zeros((4, 1)), np.ones(4, dtype=int)))


def test_forward_probs_single_vector_and_dim_check():
    model = init_model(2, hidden=4)
    p = forward_probs(model, [0.1, 0.2])
    assert p.shape == (2,) and math.isclose(p.sum(), 1.0)
    with pytest.raises(ValueError):
        forward_probs(model, [1.0, 2.0, 3.0])


def test_predict_tie_goes_to_enemy():
    model = init_model(1, hidden=2)
    model.W2[...] = 0
    model.b2[...] = 0
    assert predict(model, [[0.0]]).tolist() == [ENEMY]


def _threshold_model(theta=5.0):
    grid = np.linspace(-10, 30, 201)
    return train((grid[:, None], (grid > theta).astype(int)),
                 TrainConfig(steps=1500, lr0=0.3, lr_decay=0.998), predictors="influence_only")


def test_probability_curve_and_crossing():
    model = _threshold_model()
    curve = probability_curve(model)
    assert curve.shape == (81, 3)
    assert curve[0, 0] == -10 and curve[-1, 0] == 30 and curve[1, 0] - curve[0, 0] == 0.5
    assert np.allclose(curve[:, 1] + curve[:, 2], 1)
    assert abs(crossing_point(curve) - 5.0) < 1.0


def test_crossing_point_interpolates():
    curve = np.array([[0, 0.2, 0.8], [1, 0.4, 0.6], [2, 0.6, 0.4]])
    assert math.isclose(crossing_point(curve), 1.5)
    assert math.isnan(crossing_point(np.array([[0, 0.9, 0.1], [1, 0.95, 0.05]])))


def test_curve_requires_influence_model():
    model = init_model(2, hidden=3)
    with pytest.raises(ConfigurationError):
        probability_curve(model)
    model.predictors = "traits_only"
    with pytest.raises(ConfigurationError):
        probability_surface(model)


def test_probability_surface_shape():
    model = init_model(2, hidden=3)
    model.predictors = "prosociality_only"
    assert probability_surface(model).shape == (4, 4)


def test_ensemble_curve_sem():
    models = [_threshold_model(t) for t in (4.0, 6.0)]
    ens = ensemble_curve(models)
    single = [probability_curve(m)[:, 1] for m in models]
    assert np.allclose(ens[:, 1], np.mean(single, axis=0))
    assert np.allclose(ens[:, 2], np.std(single, axis=0, ddof=1) / math.sqrt(2))


def test_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    model = init_model(3, hidden=5, rng=rng, scaler=Standardizer(np.array([1.0, 2, 3]), np.array([2.0, 1, 4])))
    model.predictors = "traits_only"
    back = load_model(save_model(model, tmp_path / "m.txt"))
    X = rng.normal(size=(7, 3))
    assert np.array_equal(forward_probs(model, X), forward_probs(back, X))
    assert back.predictors == "traits_only"
