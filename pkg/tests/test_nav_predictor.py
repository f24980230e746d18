import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conformal_decision.nav.predictor import PedestrianSet, ar_forecast, fit_ar, predict
from oracles import lstsq_ar_forecast


def test_linear_history_continues_the_line():
    hist = [(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]
    out, fell_back = ar_forecast(hist, 4)
    assert fell_back  # too short for an order-3 fit: constant velocity
    assert np.allclose(out, [(4, 0), (5, 0), (6, 0), (7, 0)])


def test_long_linear_history_with_ar_fit():
    hist = [(float(k), 0.5 * k) for k in range(15)]
    out, fell_back = ar_forecast(hist, 5)
    assert not fell_back
    assert np.allclose(out, [(15 + k, 0.5 * (15 + k)) for k in range(5)], atol=1e-9)


@pytest.mark.parametrize("n", [1, 2, 8])
def test_stationary_history(n):
    out, _ = ar_forecast([(2.0, -1.0)] * n, 6)
    assert np.allclose(out, (2.0, -1.0))


def test_sinusoidal_walker_matches_least_squares_oracle():
    t = np.arange(40) * 0.2
    hist = np.stack([0.8 * t, np.sin(1.3 * t)], axis=1)
    window = 20
    out, fell_back = ar_forecast(hist, 10, order=5, window=window)
    assert not fell_back
    ref = lstsq_ar_forecast(hist[-(window + 1) :], 10, order=5)
    assert np.allclose(out, ref, atol=1e-8)


def test_fit_recovers_known_coefficients():
    rng = np.random.default_rng(0)
    a = np.array([0.6, -0.2])
    inc = np.zeros((400, 2))
    for j in range(2, 400):
        inc[j] = a[0] * inc[j - 1] + a[1] * inc[j - 2] + rng.normal(0, 0.1, 2)
    assert np.allclose(fit_ar(inc, 2), a, atol=0.05)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=20))
def test_forecast_steps_are_capped(points):
    hist = np.cumsum(np.asarray(points), axis=0)
    out, _ = ar_forecast(hist, 10)
    steps = np.linalg.norm(np.diff(np.vstack([hist[-1], out]), axis=0), axis=1)
    assert np.all(np.isfinite(out))
    assert steps.max() <= 2 * np.linalg.norm(np.diff(hist[-13:], axis=0), axis=1).max() + 1e-9


def test_pedestrian_set_tracks_and_forgets():
    peds = PedestrianSet(history_len=3)
    for k in range(5):
        peds.observe({1: (k, 0), 2: (0, k)})
    assert len(peds.history[1]) == 3
    peds.observe({2: (0, 5)})
    assert 1 not in peds.history and list(peds.tracks) == [2]
    assert peds.positions().shape == (1, 2)


def test_predict_bundle_shape_and_fallback_flags():
    peds = PedestrianSet(history_len=13)
    for k in range(10):
        frame = {7: (k * 0.3, 0.0)}
        if k >= 8:
            frame[9] = (5.0, k * 0.1)
        peds.observe(frame)
    bundle = predict(peds, 6)
    arr = bundle.array()
    assert arr.shape == (2, 7, 2)
    assert bundle.fallback == {9}
    assert np.allclose(arr[0, 0], (2.7, 0.0))
    assert predict(PedestrianSet(), 4).array().shape == (0, 5, 2)
