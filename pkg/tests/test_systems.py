import math

import numpy as np
import pytest
from scipy import integrate, stats

from quantmdp.core import Box, DeterministicPolicy
from quantmdp.measures import BinnedMeasure, tv_distance
from quantmdp.simulate import estimate_average_cost, estimate_discounted_cost, rollout, simulate_states
from quantmdp.systems import (GaussianNoise, GenericNoise, make_additive_noise, make_bounded_drift,
                              make_linear_tracking, tracking_cost)

IDENT = DeterministicPolicy(lambda x: x.copy(), 1)


def test_gaussian_noise_entropy_against_quadrature():
    g = GaussianNoise(1.7, 1)
    f = lambda v: g.density(np.array([[v]]))[0]
    h, _ = integrate.quad(lambda v: -f(v) * math.log2(f(v)) if f(v) > 0 else 0.0, -40, 40)
    assert g.entropy_bits == pytest.approx(h, rel=1e-10)
    assert GaussianNoise(1.0).entropy_bits == pytest.approx(2.0471, abs=1e-4)


def test_gaussian_noise_density_and_cdf():
    g = GaussianNoise(2.0, 2)
    v = np.array([[0.3, -1.1]])
    assert g.density(v)[0] == pytest.approx(stats.norm.pdf(0.3, scale=2) * stats.norm.pdf(-1.1, scale=2))
    assert g.axis_cdf(1.3) == pytest.approx(stats.norm.cdf(1.3, scale=2), rel=1e-14)
    with pytest.raises(ValueError):
        GaussianNoise(0.0)


def test_linear_tracking_identity_has_zero_cost():
    model = make_linear_tracking(1, 1.0, 1.0, 1.0, beta=0.9)
    assert estimate_discounted_cost(model, IDENT, 100, seed=3).mean == 0.0
    tr = rollout(model, IDENT, horizon=100, seed=5)
    assert tr.costs.shape == (101,) and np.all(tr.costs == 0.0)


def test_linear_tracking_tiny_noise():
    model = make_linear_tracking(1, sigma=1e-9)
    assert estimate_discounted_cost(model, IDENT, 50).mean == 0.0


def test_linear_tracking_2d_long_run_is_exactly_zero():
    # A = I, B = -I keeps the closed loop stable (x' = v) over 10^5 stages
    model = make_linear_tracking(2, 1.0, -1.0, 1.0)
    pol = DeterministicPolicy(lambda x: x.copy(), 2)
    est = estimate_average_cost(model, pol, burn_in=0, n_steps=100_000, n_rollouts=2)
    assert est.mean < 1e-12 and est.mean == 0.0


def test_linear_tracking_validation_and_params():
    with pytest.raises(ValueError):
        make_linear_tracking(1, sigma=0.0)
    with pytest.raises(ValueError):
        make_linear_tracking(1, cost_cap=-1.0)
    with pytest.raises(ValueError):
        make_linear_tracking(2, A=np.eye(3))
    m = make_linear_tracking(2, B=[[2.0, 0.0], [0.0, 1.0]], sigma=0.5)
    assert m.cost_bound == pytest.approx(20 * 0.5 * math.sqrt(2))
    assert m.params["action_lipschitz"] == pytest.approx(2.0)


def test_bounded_drift_accepts_triangle_bound():
    box = Box.cube(-1, 1, 1)
    F = lambda x, a: np.tanh(x) + 0.5 * a
    m = make_bounded_drift(1.5, 1.0, F, box, tracking_cost(4.0), 4.0)
    assert m.state_dim == 1 and m.params["L_drift"] == 1.5


def test_bounded_drift_rejects_unbounded():
    with pytest.raises(ValueError, match=r"\(x="):
        make_bounded_drift(1e6, 1.0, lambda x, a: x, Box.cube(-1, 1, 1), tracking_cost(4.0), 4.0)
    with pytest.raises(ValueError):
        make_bounded_drift(1.0, 1.0, lambda x, a: np.tanh(x) + a, Box.cube(-1, 1, 1),
                           tracking_cost(4.0), 4.0)


def test_zero_drift_chain_is_gaussian():
    m = make_bounded_drift(1.0, 1.0, lambda x, a: np.zeros((x.shape[0], 1)), Box.cube(-1, 1, 1),
                           tracking_cost(4.0), 4.0)
    zero = DeterministicPolicy(lambda x: np.zeros_like(x), 1)
    x = simulate_states(m, zero, 100_000, 3, seed=1)
    assert abs(x.mean()) < 0.02 and abs(x.std() - 1.0) < 0.02
    assert stats.kstest(x.ravel(), "norm").pvalue > 1e-3


def test_additive_noise_reproduces_linear_tracking():
    lin = make_linear_tracking(1, 1.0, 1.0, 1.0, cost_cap=20.0)
    noise = GaussianNoise(1.0, 1)
    add = make_additive_noise(lambda x, a: x + a, noise, None, tracking_cost(20.0), 20.0, 0.9)
    pol = DeterministicPolicy(lambda x: -0.5 * x, 1)
    t1 = rollout(lin, pol, horizon=20, seed=9)
    t2 = rollout(add, pol, horizon=20, seed=9)
    assert t1.states.tobytes() == t2.states.tobytes()
    assert t1.costs.tobytes() == t2.costs.tobytes()


def test_additive_noise_variants():
    m = make_additive_noise(lambda x, a: 0.5 * x + a, GaussianNoise(1.0), Box.cube(-1, 1, 1),
                            tracking_cost(4.0), 4.0)
    assert m.action_dim == 1
    clip = make_additive_noise(lambda x, a: np.clip(x, -1, 1), GaussianNoise(1.0), Box.cube(-1, 1, 1),
                               tracking_cost(4.0), 4.0)
    x = np.zeros((5, 1))
    r1 = clip.step(x, np.full((5, 1), -1.0), np.random.default_rng(0))
    r2 = clip.step(x, np.full((5, 1), 1.0), np.random.default_rng(0))
    assert r1.tobytes() == r2.tobytes()  # action-independent kernel


def test_generic_noise_shape():
    g = GenericNoise(lambda rng, n: rng.uniform(-1, 1, n), 1)
    assert g.sample(np.random.default_rng(0), 4).shape == (4, 1)


def test_bounded_drift_forgets_start():
    """Marginals from different starts approach each other in TV."""
    m = make_bounded_drift(1.0, 1.0, lambda x, a: np.tanh(x), Box.cube(-1, 1, 1),
                           tracking_cost(4.0), 4.0)
    zero = DeterministicPolicy(lambda x: np.zeros_like(x), 1)
    box = Box.cube(-6, 6, 1)
    tvs = []
    for n in (1, 4, 12):
        ms = [BinnedMeasure.from_samples(simulate_states(m, zero, 50_000, n, 2, x0=[x0]), box, 40)
              for x0 in (-10.0, 0.0, 10.0)]
        tvs.append(max(tv_distance(ms[0], ms[2]), tv_distance(ms[0], ms[1])))
    assert tvs[0] > 0.5
    assert tvs[2] < tvs[1] < tvs[0]
