import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from quantmdp.bounds import ergodicity_constants_bounded_gaussian, gaussian_kernel_tv_lipschitz
from quantmdp.core import Box, DeterministicPolicy
from quantmdp.measures import (BinnedMeasure, GridMismatch, check_marginal_tv_bound,
                               empirical_marginal, ergodicity_profile, estimate_invariant_measure,
                               fit_geometric, gaussian_binned_measure, noise_binned_measure,
                               noise_floor, push_forward, tv_distance)
from quantmdp.quantizer import Codebook, build_uniform_net
from quantmdp.systems import (GaussianNoise, GenericNoise, make_additive_noise, make_bounded_drift,
                              make_linear_tracking, tracking_cost)

BOX = Box.cube(-5, 5, 1)
ZERO = DeterministicPolicy(lambda x: np.zeros_like(x), 1)
IDENT = DeterministicPolicy(lambda x: x.copy(), 1)


def drift_model(F, L=1.0, sigma=1.0, abox=Box.cube(-1, 1, 1)):
    return make_bounded_drift(L, sigma, F, abox, tracking_cost(4.0), 4.0)


ZERO_DRIFT = drift_model(lambda x, a: np.zeros((x.shape[0], 1)))
TANH_DRIFT = drift_model(lambda x, a: np.tanh(x))


def measure(mass, box=Box.cube(0, 1, 1)):
    return BinnedMeasure(box, len(mass) - 1, np.asarray(mass, dtype=float))


# -- BinnedMeasure and TV ------------------------------------------------------------------

def test_tv_examples():
    p = measure([0.5, 0.5, 0.0])
    q = measure([0.75, 0.25, 0.0])
    assert tv_distance(p, p) == 0.0
    assert tv_distance(p, q) == pytest.approx(0.5)
    assert tv_distance(measure([1.0, 0.0, 0.0]), measure([0.0, 0.0, 1.0])) == 2.0


def test_tv_grid_mismatch():
    with pytest.raises(GridMismatch):
        tv_distance(measure([1.0, 0.0, 0.0]), measure([1.0, 0.0, 0.0, 0.0]))
    with pytest.raises(GridMismatch):
        tv_distance(measure([1.0, 0.0, 0.0]), measure([1.0, 0.0, 0.0], Box.cube(0, 2, 1)))


def test_measure_validation():
    with pytest.raises(ValueError):
        measure([0.5, 0.4, 0.0])
    with pytest.raises(ValueError):
        measure([1.5, -0.5, 0.0])
    with pytest.raises(ValueError):
        BinnedMeasure(Box.cube(0, 1, 1), 3, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        BinnedMeasure.from_samples(np.empty((0, 1)), Box.cube(0, 1, 1), 2)


probs = st.integers(2, 9).flatmap(
    lambda n: st.lists(st.lists(st.floats(0, 1), min_size=n, max_size=n).filter(lambda v: sum(v) > 0),
                       min_size=3, max_size=3))


@settings(max_examples=300, deadline=None)
@given(probs)
def test_tv_metric_axioms(vectors):
    box = Box.cube(0, 1, 1)
    p, q, r = [BinnedMeasure.from_counts(v, box, len(v) - 1) for v in vectors]
    for m in (p, q, r):
        assert abs(m.mass.sum() - 1.0) <= 1e-12
    assert tv_distance(p, q) == tv_distance(q, p)
    assert tv_distance(p, p) == 0.0
    assert 0.0 <= tv_distance(p, q) <= 2.0 + 1e-12
    assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-12
    if tv_distance(p, q) <= 1e-12:
        np.testing.assert_allclose(p.mass, q.mass, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), st.integers(1, 8), st.integers(1, 2000), st.integers(0, 2 ** 31))
def test_histogram_normalization(d, bins, n, seed):
    rng = np.random.default_rng(seed)
    box = Box.cube(-1, 1, d)
    m = BinnedMeasure.from_samples(rng.normal(size=(n, d)), box, bins)
    assert abs(m.mass.sum() - 1.0) <= 1e-12
    assert m.n_cells == bins ** d + 1


def test_cell_edges_and_csv():
    m = BinnedMeasure.from_samples(np.array([[0.1, 0.9]]), Box.cube(0, 1, 2), 2)
    assert m.mass[1] == 1.0  # row-major: (0, 1)
    lo, hi = m.cell_edges(1)
    np.testing.assert_array_equal(lo, [0.0, 0.5])
    np.testing.assert_array_equal(hi, [0.5, 1.0])
    lines = m.to_csv().splitlines()
    assert lines[0] == "cell,lo_0,hi_0,lo_1,hi_1,mass"
    assert lines[2] == "1,0.0,0.5,0.5,1.0,1.0"
    assert lines[-1] == "overflow,,,,,0.0"


def test_sample_from_measure(rng):
    m = gaussian_binned_measure(BOX, 50)
    pts, over = m.sample(rng, 200_000)
    back = BinnedMeasure.from_samples(pts[~over], BOX, 50)
    assert tv_distance(back, BinnedMeasure(BOX, 50, np.append(m.mass[:-1], 0) / m.mass[:-1].sum())) \
        < noise_floor(50, 200_000)


def test_noise_floor():
    assert noise_floor(50, 100_000) == pytest.approx(3 * math.sqrt(50 / 100_000))


# -- exact measures ----------------------------------------------------------------------

def test_gaussian_binned_measure_oracle():
    m = gaussian_binned_measure(BOX, 10, mean=0.5, sigma=2.0)
    edges = np.linspace(-5, 5, 11)
    ref = np.diff(stats.norm.cdf(edges, 0.5, 2.0))
    np.testing.assert_allclose(m.mass[:-1], ref, rtol=1e-12)
    assert m.overflow == pytest.approx(1 - ref.sum(), rel=1e-9)


def test_noise_binned_measure_matches_gaussian():
    g = noise_binned_measure(ZERO_DRIFT, BOX, 50)
    assert tv_distance(g, gaussian_binned_measure(BOX, 50)) < 1e-12


def test_noise_measure_requires_density():
    noise = GenericNoise(lambda rng, n: rng.uniform(-1, 1, n), 1)
    m = make_additive_noise(lambda x, a: x * 0, noise, Box.cube(0, 1, 1), tracking_cost(1.0), 1.0)
    with pytest.raises(ValueError, match="density"):
        noise_binned_measure(m, BOX, 10)


# -- marginals -------------------------------------------------------------------------

def test_marginal_at_zero_is_point_mass():
    m = empirical_marginal(ZERO_DRIFT, ZERO, [0.0], 0, 1000, BOX, 50)
    assert m.mass[25] == 1.0  # cell [0, 0.2)


def test_marginal_one_step_is_gaussian():
    m = empirical_marginal(ZERO_DRIFT, ZERO, [0.0], 1, 100_000, BOX, 50, seed=1)
    assert tv_distance(m, gaussian_binned_measure(BOX, 50)) < 0.05


def test_marginal_ignores_policy_when_kernel_does():
    clip = make_additive_noise(lambda x, a: np.clip(x, -1, 1), GaussianNoise(1.0), Box.cube(-1, 1, 1),
                               tracking_cost(4.0), 4.0)
    p = empirical_marginal(clip, ZERO, [0.3], 1, 20_000, BOX, 50, seed=3)
    q = empirical_marginal(clip, DeterministicPolicy(lambda x: np.ones_like(x), 1), [0.3], 1, 20_000,
                           BOX, 50, seed=3)
    assert tv_distance(p, q) == 0.0


def test_marginal_errors():
    with pytest.raises(ValueError):
        empirical_marginal(ZERO_DRIFT, ZERO, None, -1, 10, BOX)
    with pytest.raises(ValueError):
        empirical_marginal(ZERO_DRIFT, ZERO, None, 1, 10, None)


# -- invariant measures ----------------------------------------------------------------------

def test_invariant_of_iid_chain_is_gaussian():
    nu = estimate_invariant_measure(ZERO_DRIFT, ZERO, [0.0], 100, 100_000, 1, BOX, 50, seed=2)
    assert tv_distance(nu, gaussian_binned_measure(BOX, 50)) < 0.05


def test_invariant_independent_of_start():
    a = estimate_invariant_measure(TANH_DRIFT, ZERO, [-5.0], 500, 100_000, 5, BOX, 50, seed=3)
    b = estimate_invariant_measure(TANH_DRIFT, ZERO, [5.0], 500, 100_000, 5, BOX, 50, seed=4)
    assert tv_distance(a, b) < 0.05


def test_invariant_of_contraction_is_concentrated():
    m = make_additive_noise(lambda x, a: 0.5 * x, GaussianNoise(1e-6), Box.cube(-1, 1, 1),
                            tracking_cost(1.0), 1.0)
    nu = estimate_invariant_measure(m, ZERO, [10.0], 200, 1000, 1, Box.cube(-0.1, 0.1, 1), 2, seed=0)
    assert nu.mass[0] + nu.mass[1] == 1.0


def test_invariant_parallel_chains_and_errors():
    nu = estimate_invariant_measure(TANH_DRIFT, ZERO, [0.0], 200, 50_000, 2, BOX, 50, seed=5,
                                    n_chains=100)
    ref = estimate_invariant_measure(TANH_DRIFT, ZERO, [0.0], 200, 50_000, 2, BOX, 50, seed=6)
    assert tv_distance(nu, ref) < 2 * noise_floor(50, 50_000)
    with pytest.raises(ValueError):
        estimate_invariant_measure(TANH_DRIFT, ZERO, thinning=0, box=BOX)
    with pytest.raises(ValueError):
        estimate_invariant_measure(TANH_DRIFT, ZERO, box=None)


def test_invariant_is_a_fixed_point():
    n = 100_000
    nu = estimate_invariant_measure(TANH_DRIFT, ZERO, [0.0], 500, n, 5, Box.cube(-6, 6, 1), 50,
                                    seed=7, n_chains=100)
    moved = push_forward(nu, TANH_DRIFT, ZERO, n, seed=8)
    assert tv_distance(nu, moved) <= 2 * noise_floor(50, n)


# -- ergodicity --------------------------------------------------------------------------

def test_profile_zero_drift_mixes_in_one_step():
    prof = ergodicity_profile(ZERO_DRIFT, ZERO, [0.0], 5, 50_000, BOX, 50, seed=1, n_chains=100)
    assert np.all(prof.tv_by_n <= prof.noise_floor)
    assert not prof.resolved and prof.fitted_kappa is None


def test_profile_tanh_respects_closed_form():
    erg = ergodicity_constants_bounded_gaussian(1.0, 1.0)
    box = Box.cube(-6, 6, 1)
    prof = ergodicity_profile(TANH_DRIFT, ZERO, [0.0], 40, 100_000, box, 50, seed=2,
                              bound_C=erg.C, bound_kappa=erg.kappa, n_chains=100)
    assert np.all(prof.tv_by_n <= prof.bound() + prof.noise_floor)
    assert np.all((prof.tv_by_n >= 0) & (prof.tv_by_n <= 2))
    # nonincreasing up to twice the floor
    running_min = np.minimum.accumulate(prof.tv_by_n)
    assert np.all(prof.tv_by_n <= running_min + 2 * prof.noise_floor)
    lines = prof.to_csv().splitlines()
    assert lines[0] == "n,tv,bound" and len(lines) == 41


def test_profile_far_start_fit_is_consistent():
    """Started far out the decay is resolved; the fitted rate is no slower than the bound."""
    erg = ergodicity_constants_bounded_gaussian(1.0, 1.0)
    prof = ergodicity_profile(TANH_DRIFT, ZERO, [10.0], 10, 100_000, Box.cube(-6, 6, 1), 50, seed=3,
                              n_chains=100, bound_C=erg.C, bound_kappa=erg.kappa)
    assert prof.resolved
    assert prof.fitted_kappa <= erg.kappa + 0.05
    assert np.all(prof.tv_by_n <= prof.bound() + prof.noise_floor)


def test_fit_geometric_oracle():
    ns = np.arange(1, 21)
    C, kappa = fit_geometric(ns, 1.7 * 0.8 ** ns, 1e-9)
    assert C == pytest.approx(1.7) and kappa == pytest.approx(0.8)
    assert fit_geometric(ns, np.full(20, 1e-3), 1e-2) == (None, None)
    assert fit_geometric(ns, 0.1 * 1.1 ** ns, 0.0) == (None, None)


def test_profile_needs_two_steps():
    with pytest.raises(ValueError):
        ergodicity_profile(ZERO_DRIFT, ZERO, [0.0], 1, 100, BOX)


# -- marginal TV bound -----------------------------------------------------------------------

def test_marginal_tv_exact_quantization():
    """A policy whose values are levels is reproduced exactly: TV is 0."""
    m = make_additive_noise(lambda x, a: 0.5 * x + a, GaussianNoise(1.0), Box.cube(-1, 1, 1),
                            tracking_cost(4.0), 4.0)
    cb = Codebook.from_levels([-0.5, 0.5], Box.cube(-1, 1, 1))
    sign = DeterministicPolicy(lambda x: np.where(x >= 0, 0.5, -0.5), 1)
    rows = check_marginal_tv_bound(m, sign, cb, [1, 2, 3], 20_000, BOX, 50, 2.0,
                                   gaussian_kernel_tv_lipschitz(1.0, 1.0), seed=1)
    assert all(r.tv == 0.0 and r.passed for r in rows)


def test_marginal_tv_action_independent_kernel():
    clip = make_additive_noise(lambda x, a: np.clip(x, -1, 1), GaussianNoise(1.0), Box.cube(-1, 1, 1),
                               tracking_cost(4.0), 4.0)
    cb = build_uniform_net(Box.cube(-1, 1, 1), 3)
    rows = check_marginal_tv_bound(clip, DeterministicPolicy(np.tanh, 1), cb, [1, 2, 3], 20_000,
                                   BOX, 50, 2.0, 0.0, seed=2)
    floor = noise_floor(50, 20_000)
    assert all(r.bound == 0.0 and r.tv <= floor and r.passed for r in rows)


def test_marginal_tv_linear_tracking_example():
    model = make_linear_tracking(1, 1.0, 1.0, 1.0)
    cb = build_uniform_net(Box.cube(-8, 8, 1), 16)
    K2 = gaussian_kernel_tv_lipschitz(1.0, 1.0)
    assert K2 == pytest.approx(0.7979, abs=1e-4)
    rows = check_marginal_tv_bound(model, IDENT, cb, [1, 2, 3], 100_000, Box.cube(-8, 8, 1), 50,
                                   16.0, K2, seed=3)
    floor = noise_floor(50, 100_000)
    for r in rows:
        assert r.bound == pytest.approx(16 * K2 * (2 * r.n - 1) / 16)
        assert r.tv <= r.bound + floor
