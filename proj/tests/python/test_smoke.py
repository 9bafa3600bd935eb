import json

import numpy as np
import pytest

import optimcorr


def logistic_data(n, slopes, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, len(slopes)))
    p = 1.0 / (1.0 + np.exp(-(x @ np.asarray(slopes))))
    y = (rng.uniform(size=n) < p).astype(float)
    return x, y


def pairs_c(scores, y):
    ev, ne = scores[y == 1], scores[y == 0]
    diff = ev[:, None] - ne[None, :]
    return ((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size


def test_c_statistic_matches_pairs():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = rng.integers(2, 40)
        s = rng.integers(0, 5, size=n).astype(float)
        y = rng.integers(0, 2, size=n).astype(float)
        y[0], y[1] = 1.0, 0.0
        assert optimcorr.c_statistic(s, y) == pairs_c(s, y)


def test_fit_ml_and_lasso():
    x, y = logistic_data(200, [1.0, -0.5, 0.0], 3)
    ml = optimcorr.fit(x, y)
    assert ml["strategy"] == "ml"
    assert len(ml["coefficients"]) == 3
    assert 0.5 < ml["apparent_c"] <= 1.0
    lasso = optimcorr.fit(x, y, strategy="lasso", seed=7)
    assert lasso == optimcorr.fit(x, y, strategy="lasso", seed=7)


def test_separation_raises_and_firth_recovers():
    x = np.arange(10, dtype=float).reshape(-1, 1)
    y = (x[:, 0] >= 5).astype(float)
    with pytest.raises(optimcorr.OptimcorrError, match="Separation"):
        optimcorr.fit(x, y)
    firth = optimcorr.fit(x, y, strategy="firth")
    assert np.isfinite(firth["intercept"])


def test_validate_report():
    x, y = logistic_data(80, [1.0, -0.7], 5)
    r = optimcorr.validate(x, y, B=30, seed=11)
    assert list(r["c_statistic"]) == ["apparent", "harrell", "632", "632plus"]
    assert r["B"] == 30 and r["seed"] == 11
    c = r["c_statistic"]
    assert c["harrell"] == pytest.approx(c["apparent"] - r["optimism"])
    assert r == optimcorr.validate(x, y, B=30, seed=11, threads=2)


def test_estimators():
    assert optimcorr.estimator_632(0.8, 0.7) == pytest.approx(0.368 * 0.8 + 0.632 * 0.7)
    plus = optimcorr.estimator_632_plus(0.9, 0.5)
    assert plus["R"] == 1.0
    assert plus["estimate"] == pytest.approx(0.5)


def test_simulate_small_cell():
    config = {"epv": 5, "event_fraction": 0.5, "n_sim": 2, "B": 3, "external_n": 1000,
              "calibration_n": 10000, "calibration_tol": 0.01, "strategies": ["ml", "lasso"]}
    r = optimcorr.simulate(config)
    assert [s["strategy"] for s in r["strategies"]] == ["ml", "lasso"]
    assert json.dumps(r, allow_nan=True)


def test_bad_config_names_field():
    with pytest.raises(optimcorr.OptimcorrError, match="event_fraction"):
        optimcorr.simulate({"event_fraction": 0.9})
