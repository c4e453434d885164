import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from liftrom.active_subspaces import ParameterDomain
from liftrom.dmd import RankSpec, fit_dmd, forecast
from liftrom.errors import InputError
from liftrom.fom_surrogate import SurrogateSpec, lift, lift_gradient, run_ensemble

SPEC = SurrogateSpec()
DOM = ParameterDomain.uniform_box()
A = np.array(SPEC.steady_weights)
G = np.array(SPEC.transient_weights)
H = np.array(SPEC.sine_weights)
Q = np.array(SPEC.coupling_weights)
FROZEN = [0, 4, 5, 9]

mu_vectors = arrays(np.float64, 10, elements=st.floats(0.0, 0.03))


def test_default_weights_vanish_at_frozen_indices():
    for w in (A, G, H, Q):
        assert not w[FROZEN].any()


def test_invalid_specs():
    with pytest.raises(InputError):
        SurrogateSpec(steady_weights=(1.0,) + SPEC.steady_weights[1:])
    with pytest.raises(InputError):
        SurrogateSpec(tau1=0.0)
    with pytest.raises(InputError):
        SurrogateSpec(steady_weights=(0.0,) * 10, transient_weights=(0.0,) * 10)


def test_steady_limit_at_reference():
    assert lift(SPEC, np.zeros(10), 1e4) == pytest.approx(0.355, abs=1e-15)


def test_initial_value():
    mu = np.random.default_rng(0).uniform(0, 0.03, 10)
    assert lift(SPEC, mu, 0.0) == pytest.approx(G @ (mu / 0.03), abs=1e-15)
    no_transient = SurrogateSpec(transient_weights=(0.0,) * 10)
    assert lift(no_transient, mu, 0.0) == 0.0


def test_triangle_bound_at_30s():
    e1, e2 = np.exp(-30 / 3), np.exp(-30 / 5)
    bound = ((0.355 + np.abs(A).sum()) * e1 + (np.abs(G).sum() + np.abs(H).sum()) * e2
             + np.abs(Q).sum() * (e1 + e2))
    samples = np.random.default_rng(1).uniform(0, 0.03, (200, 10))
    gap = lift(SPEC, samples, 30.0) - (0.355 + (samples / 0.03) @ A)
    assert np.all(np.abs(gap) <= bound)


def test_out_of_domain():
    with pytest.raises(InputError):
        lift(SPEC, np.full(10, 0.05), 1.0)
    with pytest.raises(InputError):
        lift(SPEC, np.zeros(9), 1.0)
    with pytest.raises(InputError):
        lift(SPEC, np.zeros(10), -1.0)


def test_broadcast_shapes():
    samples = np.random.default_rng(2).uniform(0, 0.03, (4, 10))
    assert lift(SPEC, samples, np.linspace(0, 1, 7)).shape == (4, 7)
    assert lift_gradient(SPEC, samples, 2.0).shape == (4, 10)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(50):
        mu = rng.uniform(2 * h, 0.03 - 2 * h, 10)
        t = rng.uniform(0, 40)
        fd = np.array([(lift(SPEC, mu + h * e, t) - lift(SPEC, mu - h * e, t)) / (2 * h) for e in np.eye(10)])
        np.testing.assert_allclose(lift_gradient(SPEC, mu, t), fd, rtol=0, atol=1e-8)


def test_gradient_steady_limit():
    np.testing.assert_allclose(lift_gradient(SPEC, np.zeros(10), 1e4), A / 0.03, rtol=1e-14)


def test_ensemble_small_and_rank():
    ens = run_ensemble(SPEC, np.full((1, 10), 0.01), [1.0, 2.0], DOM)
    np.testing.assert_array_equal(ens.values, lift(SPEC, np.full((1, 10), 0.01), np.array([1.0, 2.0])))
    samples = np.random.default_rng(4).uniform(0, 0.03, (70, 10))
    ens = run_ensemble(SPEC, samples, 12.0 + 0.01 * np.arange(1, 801), DOM)
    s = np.linalg.svd(ens.values, compute_uv=False)
    assert int(np.sum(s > 1e-10 * s[0])) <= 6


def test_discrete_eigenvalues_recovered_by_dmd():
    samples = np.random.default_rng(5).uniform(0, 0.03, (30, 10))
    ens = run_ensemble(SPEC, samples, 0.1 * np.arange(1, 81), DOM)
    lam = fit_dmd(ens, RankSpec.fixed(10)).eigenvalues
    for target in SPEC.discrete_eigenvalues(0.1):
        assert np.min(np.abs(lam - target)) < 1e-8


@settings(max_examples=50, deadline=None)
@given(mu_vectors, arrays(np.float64, 4, elements=st.floats(0.0, 0.03)), st.floats(0, 50))
def test_frozen_indices_are_invisible(mu, noise, t):
    moved = mu.copy()
    moved[FROZEN] = noise
    assert lift(SPEC, moved, t) == lift(SPEC, mu, t)
    assert not lift_gradient(SPEC, mu, t)[FROZEN].any()


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 20.0), st.floats(0.05, 0.5), st.integers(12, 40), st.floats(0.5, 20.0),
       st.integers(0, 1000))
def test_low_rank_dynamics_forecast(t_a, dt, m, ahead, seed):
    samples = np.random.default_rng(seed).uniform(0, 0.03, (20, 10))
    times = t_a + dt * np.arange(m)
    model = fit_dmd(run_ensemble(SPEC, samples, times, DOM), RankSpec.fixed(6))
    t = times[-1] + ahead
    truth = lift(SPEC, samples, t)
    assert np.linalg.norm(forecast(model, t) - truth) / np.linalg.norm(truth) < 1e-6


def test_custom_spec_round_trip():
    spec = SurrogateSpec(baseline=0.2, omega=2.0, frozen_indices=(0, 9))
    assert spec.frozen_indices == (0, 9)
    assert isinstance(spec.steady_weights, tuple)
    assert lift(spec, np.zeros(10), 1e4) == pytest.approx(0.2)
