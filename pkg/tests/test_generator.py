from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import generator_oracle, kraus_blocks_bruteforce

from wclt.generator import (
    Rates,
    apply_adjoint,
    apply_predual,
    bohr_frequencies,
    build_generator,
    gamma_from_temperature,
    generator_from_hamiltonian,
    superoperator_matrix,
    thermal_rates,
    vec,
)
from wclt.linalg import SpectralData, commutator, random_hermitian, random_state


def test_single_level_has_no_frequencies():
    assert bohr_frequencies(SpectralData.from_levels([2.0], [3])) == []


def test_equally_spaced_levels_merge_pairs():
    freqs = bohr_frequencies(SpectralData.from_levels([0.0, 1.0, 2.0], [1, 1, 1]))
    assert [f.omega for f in freqs] == [1.0, 2.0]
    assert freqs[0].pairs == ((1, 0), (2, 1))


def test_gamma_from_temperature_kms_ratio():
    gp, gm = gamma_from_temperature(1.5, 0.7, 2.0)
    assert gm / gp == pytest.approx(math.exp(0.7 * 2.0), rel=1e-14)
    assert gm - gp == pytest.approx(1.5, rel=1e-14)


def test_gamma_from_temperature_large_beta():
    gp, gm = gamma_from_temperature(1.0, 1e3, 1.0)
    assert gm == 1.0
    assert 0.0 <= gp < 1e-300


def test_kraus_blocks_sum_to_off_diagonal_part():
    rng = np.random.default_rng(1)
    sd = SpectralData.from_levels([0.0, 1.0, 2.5], [2, 1, 2])
    D = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    gen = build_generator(sd, D, thermal_rates(1.0, 1.0))
    lower = sum(ch.kraus for ch in gen.channels)
    # strictly energy-lowering part of D
    expected = sum(sd.projections[m] @ D @ sd.projections[n]
                   for n in range(3) for m in range(3) if sd.eigenvalues[n] > sd.eigenvalues[m])
    assert np.allclose(lower, expected, atol=1e-14)


def test_kraus_blocks_match_bruteforce_for_dense_h():
    rng = np.random.default_rng(2)
    H = random_hermitian(rng, 5)
    D = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    gen = generator_from_hamiltonian(H, D, thermal_rates(1.0, 1.0))
    brute = kraus_blocks_bruteforce(H, D)
    assert len(brute) == len(gen.channels)
    for om, B in brute.items():
        assert np.allclose(gen.channel(om).kraus, B, atol=1e-12)


def test_zero_interaction_gives_zero_generator():
    sd = SpectralData.from_levels([0.0, 1.0], [1, 2])
    gen = build_generator(sd, np.zeros((3, 3)), {})
    rho = random_state(np.random.default_rng(0), 3)
    assert not np.any(apply_predual(gen, rho))
    assert all(ch.trivial for ch in gen.channels)


def test_unmatched_rate_frequency_is_an_error():
    sd = SpectralData.from_levels([0.0, 1.0], [1, 1])
    D = np.array([[0, 1], [1, 0]], dtype=complex)
    with pytest.raises(ValueError, match="matches no Bohr frequency"):
        build_generator(sd, D, {1.0: Rates(1, 1), 5.0: Rates(1, 1)})


def test_missing_rates_for_active_channel_is_an_error():
    sd = SpectralData.from_levels([0.0, 1.0, 3.0], [1, 1, 1])
    D = np.ones((3, 3), dtype=complex)
    with pytest.raises(ValueError, match="no rates"):
        build_generator(sd, D, {1.0: Rates(1, 1)})


def test_commutant_term_must_commute_with_h():
    sd = SpectralData.from_levels([0.0, 1.0], [1, 1])
    D = np.array([[0, 1], [0, 0]], dtype=complex)
    with pytest.raises(ValueError, match="commute"):
        build_generator(sd, D, {1.0: Rates(1, 0.5)}, commutant_term=np.array([[0, 1], [1, 0]]))
    gen = build_generator(sd, D, {1.0: Rates(1, 0.5)}, commutant_term=np.diag([0.3, -0.1]))
    assert np.allclose(gen.effective_hamiltonian(), np.diag([0.3, -0.1]))


def test_rates_validation():
    with pytest.raises(ValueError):
        Rates(-1.0, 0.0)
    with pytest.raises(ValueError):
        Rates(float("nan"), 0.0)


def test_effective_hamiltonian_commutes_with_h():
    rng = np.random.default_rng(3)
    H = random_hermitian(rng, 6)
    D = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    gen = generator_from_hamiltonian(H, D, thermal_rates(1.0, 0.5, 0.4, -0.3))
    assert np.linalg.norm(commutator(gen.effective_hamiltonian(), H)) < 1e-10


def test_superoperator_cap():
    sd = SpectralData.from_levels([0.0, 1.0], [1, 1])
    gen = build_generator(sd, np.eye(2), {})
    with pytest.raises(ValueError):
        superoperator_matrix(gen, max_dim=1)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_generator_identities(d, seed):
    rng = np.random.default_rng(seed)
    H = random_hermitian(rng, d)
    D = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    gen = generator_from_hamiltonian(H, D, thermal_rates(rng.uniform(0.1, 2), rng.uniform(0.1, 3),
                                                          *rng.normal(size=2)))
    rho = random_state(rng, d)
    x = random_hermitian(rng, d)
    Lr = apply_predual(gen, rho)
    assert np.max(np.abs(apply_adjoint(gen, np.eye(d)))) < 1e-12
    assert abs(np.trace(Lr)) < 1e-12
    assert np.max(np.abs(Lr - Lr.conj().T)) < 1e-12
    assert abs(np.trace(apply_adjoint(gen, x) @ rho) - np.trace(x @ Lr)) < 1e-10
    assert np.max(np.abs(superoperator_matrix(gen) @ vec(rho) - vec(Lr))) < 1e-12
    chans = [(c.kraus, c.gamma_minus, c.gamma_plus, c.zeta_minus, c.zeta_plus)
             for c in gen.nontrivial_channels()]
    if chans:
        assert np.max(np.abs(generator_oracle(chans)(rho) - Lr)) < 1e-12
