from __future__ import annotations

import numpy as np
import pytest

from wclt.evolution import (
    IntegrationError,
    PositivityError,
    evolve,
    evolve_adjoint,
    limit_state,
    propagate_exact,
    residual,
)
from wclt.generator import Rates, build_generator, generator_from_hamiltonian, thermal_rates
from wclt.linalg import SpectralData, random_hermitian, random_state


def _random_generator(d=4, seed=0):
    rng = np.random.default_rng(seed)
    H = random_hermitian(rng, d)
    D = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return generator_from_hamiltonian(H, D, thermal_rates(1.0, 0.7, 0.2, -0.1)), rng


def _decay():
    sd = SpectralData.from_levels([0.0, 1.0], [1, 1])
    D = np.array([[0, 1], [0, 0]], dtype=complex)
    return build_generator(sd, D, {1.0: Rates(1.0, 0.0)})


def test_zero_generator_leaves_state_fixed():
    sd = SpectralData.from_levels([0.0, 1.0], [1, 2])
    gen = build_generator(sd, np.zeros((3, 3)), {})
    rho = random_state(np.random.default_rng(0), 3)
    traj = evolve(gen, rho, 2.0)
    assert np.allclose(traj.final, rho, atol=1e-15)


def test_two_level_decay_closed_form():
    gen = _decay()
    rho = np.diag([0.0, 1.0]).astype(complex)
    t = np.linspace(0, 3, 7)
    traj = evolve(gen, rho, 3.0, t_eval=t, observables={"excited": np.diag([0.0, 1.0])})
    assert np.allclose(traj.observables["excited"], np.exp(-t), atol=1e-9)


def test_evolution_matches_exact_and_preserves_trace():
    gen, rng = _random_generator()
    rho = random_state(rng, 4)
    traj = evolve(gen, rho, 1.5, t_eval=[0.5, 1.0, 1.5])
    for t, s in zip(traj.times, traj.states):
        assert abs(np.trace(s) - 1) < 1e-12
        assert np.max(np.abs(s - propagate_exact(gen, rho, t))) < 1e-8


def test_fixed_step_mode():
    gen, rng = _random_generator(seed=1)
    rho = random_state(rng, 4)
    traj = evolve(gen, rho, 0.5, dt=0.005)
    assert np.max(np.abs(traj.final - propagate_exact(gen, rho, 0.5))) < 1e-7


def test_adjoint_fixes_identity_and_is_dual():
    gen, rng = _random_generator(seed=2)
    times, ops = evolve_adjoint(gen, np.eye(4), 1.0)
    assert np.allclose(ops[-1], np.eye(4), atol=1e-12)
    x = random_hermitian(rng, 4)
    rho = random_state(rng, 4)
    _, xs = evolve_adjoint(gen, x, 0.8)
    lhs = np.trace(xs[-1] @ rho)
    rhs = np.trace(x @ propagate_exact(gen, rho, 0.8))
    assert abs(lhs - rhs) < 1e-9


def test_limit_state_returns_stationary_input_immediately():
    gen = _decay()
    res = limit_state(gen, np.diag([1.0, 0.0]))
    assert res.converged and res.time == 0.0


def test_limit_state_is_fixed_point():
    gen, rng = _random_generator(seed=3)
    res = limit_state(gen, random_state(rng, 4))
    assert res.converged
    assert residual(gen, res.state) <= 1e-9
    assert np.max(np.abs(propagate_exact(gen, res.state, 5.0) - res.state)) < 1e-8


def test_limit_state_timeout_reports_unconverged():
    gen, rng = _random_generator(seed=4)
    res = limit_state(gen, random_state(rng, 4), residual_tol=1e-30, t_max=0.01)
    assert not res.converged


def test_bad_time_grid():
    gen = _decay()
    rho = np.eye(2) / 2
    with pytest.raises(ValueError):
        evolve(gen, rho, 0.0)
    with pytest.raises(ValueError):
        evolve(gen, rho, 1.0, t_eval=[0.5, 0.2])


def test_step_size_underflow():
    gen, rng = _random_generator(seed=5)
    with pytest.raises(IntegrationError):
        evolve(gen, random_state(rng, 4), 1.0, tol=1e-40)


def test_positivity_violation_is_detected():
    # a huge fixed step makes RK4 leave the state space
    gen = _decay()
    with pytest.raises(PositivityError):
        evolve(gen, np.diag([0.0, 1.0]), 5.0, dt=5.0)
