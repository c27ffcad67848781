import numpy as np
import pytest
from scipy.stats import norm

from ktdist.abc import (
    AbcConfig,
    abc_distances,
    distance_fn,
    exact_posterior,
    generate_observed,
    mse_to_target,
    observed_stream,
    posterior_density_grid,
    rejection_abc,
)
from ktdist.kernels import gaussian


def observed(seed=0):
    return generate_observed(100, 1.0, 20.0, 0.1, observed_stream(seed, 0))


def test_config_validation():
    with pytest.raises(ValueError):
        AbcConfig(tolerance=0.0)
    with pytest.raises(ValueError):
        AbcConfig(distance="nope")
    with pytest.raises(ValueError):
        AbcConfig(iterations=0)
    with pytest.raises(ValueError):
        distance_fn("kt", None)


def test_huge_tolerance_accepts_everything():
    cfg = AbcConfig(tolerance=10.0, iterations=50, distance="kt", kernel=gaussian(1.0), seed=1)
    res = rejection_abc(cfg, observed())
    assert res.accept_count == 50


def test_determinism_and_mse():
    cfg = AbcConfig(tolerance=0.5, iterations=200, distance="kt", kernel=gaussian(1.0), seed=2)
    obs = observed(2)
    r1 = rejection_abc(cfg, obs, theta_star=1.0)
    r2 = rejection_abc(cfg, obs, theta_star=1.0)
    assert r1.accepted == r2.accepted
    if r1.accepted:
        assert r1.mse == pytest.approx(mse_to_target(r1.accepted, 1.0))
    assert mse_to_target([1.0], 1.0) == 0.0
    assert mse_to_target([0.0, 2.0], 1.0) == 1.0
    with pytest.raises(ValueError):
        mse_to_target([], 1.0)


def test_tolerance_monotonicity():
    # same seed: the accepted set at a smaller tolerance is a subset of
    # the one at a larger tolerance, and both match one distance pass
    obs = observed(3)
    base = dict(iterations=300, distance="kt", kernel=gaussian(1.0), seed=3)
    small = rejection_abc(AbcConfig(tolerance=0.4, **base), obs)
    large = rejection_abc(AbcConfig(tolerance=0.8, **base), obs)
    assert set(small.accepted) <= set(large.accepted)
    pairs = abc_distances(AbcConfig(tolerance=0.4, **base), obs)
    assert sorted(pairs[pairs[:, 1] < 0.4, 0].tolist()) == sorted(small.accepted)
    assert sorted(pairs[pairs[:, 1] < 0.8, 0].tolist()) == sorted(large.accepted)


def test_all_selectors_run():
    obs = observed(4)[:30]
    for sel in ("kt", "mmd", "mmdn", "mmde", "kbw", "w1"):
        cfg = AbcConfig(
            tolerance=0.5, iterations=5, synthetic_size=30, distance=sel,
            kernel=gaussian(1.0), seed=4,
        )
        res = rejection_abc(cfg, obs)
        assert 0 <= res.accept_count <= 5


def test_mmd_selector_is_half_squared():
    # the gaussian acceptance statistic is the quadratic form 0.5*MMD^2
    f = distance_fn("mmd", gaussian(1.0))
    x = np.array([0.0, 1.0])
    y = np.array([5.0, 6.0])
    from ktdist.distances import mmd
    from ktdist.measures import DiscreteMeasure

    ref = mmd(gaussian(1.0), DiscreteMeasure.uniform(x.reshape(-1, 1)),
              DiscreteMeasure.uniform(y.reshape(-1, 1)))
    assert f(x, y) == pytest.approx(0.5 * ref**2, rel=1e-12)


def test_observed_data():
    obs = observed(5)
    assert obs.shape == (100,)
    # contaminated fraction: exactly 10 points near 20
    assert int((obs > 10.0).sum()) == 10
    o2 = generate_observed(100, 1.0, 20.0, 0.1, observed_stream(5, 0))
    assert np.array_equal(obs, o2)


def test_posterior_helpers():
    grid = np.linspace(-3, 3, 7)
    dens = posterior_density_grid([0.0], grid)
    assert dens == pytest.approx(norm.pdf(grid))
    with pytest.raises(ValueError):
        posterior_density_grid([], grid)
    mean, var = exact_posterior(np.zeros(100), 5.0)
    assert mean == pytest.approx(0.0)
    assert var == pytest.approx(1.0 / (100 + 1.0 / 25.0))
