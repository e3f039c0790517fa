from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import fixed_point_dim, generator_oracle

from wclt.generator import Rates, build_generator, generator_from_hamiltonian, thermal_rates
from wclt.linalg import (
    SpectralData,
    projector,
    random_hermitian,
    random_state,
    span,
    subspace_distance,
)
from wclt.stationary import (
    StructureError,
    annihilator_membership,
    decompose_state,
    detailed_balance_classify,
    interaction_free_subspace,
    is_subharmonic,
    stationary_kernel,
)


def _dark_model():
    """Three levels with a dark direction: D couples e0 to e1 + e2 only."""
    sd = SpectralData.from_levels([0.0, 1.0], [1, 3])
    D = np.zeros((4, 4), dtype=complex)
    D[0, 1] = D[0, 2] = 1.0
    return build_generator(sd, D, thermal_rates(1.0, 1.0))


def test_wd_routes_agree_on_dark_model():
    gen = _dark_model()
    a = interaction_free_subspace(gen, "kernel_pairs")
    b = interaction_free_subspace(gen, "quadratic")
    assert a.dim == b.dim == 2
    assert subspace_distance(a, b) < 1e-12
    assert subspace_distance(a, span([[0, 1, -1, 0], [0, 0, 0, 1]])) < 1e-12


def test_wd_of_zero_interaction_is_everything():
    sd = SpectralData.from_levels([0.0, 1.0], [1, 1])
    gen = build_generator(sd, np.zeros((2, 2)), {})
    assert interaction_free_subspace(gen).dim == 2
    assert stationary_kernel(gen).kernel_dim == 4


def test_unknown_route():
    with pytest.raises(ValueError):
        interaction_free_subspace(_dark_model(), "other")


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 6), st.integers(0, 2**31 - 1))
def test_wd_routes_agree_on_sparse_random_interactions(d, seed):
    rng = np.random.default_rng(seed)
    levels = rng.permutation(d)[: max(2, d - 2)].astype(float)
    mult = [1] * (len(levels) - 1)
    mult.append(d - sum(mult))
    sd = SpectralData.from_levels(levels, mult)
    mask = rng.random((d, d)) < 0.3
    D = np.where(mask, rng.normal(size=(d, d)), 0.0).astype(complex)
    gen = build_generator(sd, D, thermal_rates(1.0, 1.0))
    a = interaction_free_subspace(gen, "kernel_pairs")
    b = interaction_free_subspace(gen, "quadratic")
    assert a.dim == b.dim
    if a.dim:
        assert subspace_distance(a, b) < 1e-9
        P = projector(a)
        assert np.linalg.norm(P @ sd.hamiltonian() - sd.hamiltonian() @ P) < 1e-10
        v = a.basis[:, 0]
        assert np.linalg.norm(gen.predual(np.outer(v, v.conj()))) < 1e-10


def test_wd_support_equivalence_both_directions():
    gen = _dark_model()
    wd = interaction_free_subspace(gen)
    rng = np.random.default_rng(0)
    inside = random_state(rng, 4, support=wd.basis)
    assert all(np.allclose(inside @ ch.kraus, 0) and np.allclose(ch.kraus @ inside, 0)
               for ch in gen.channels)
    outside = random_state(rng, 4)
    assert any(not np.allclose(ch.kraus @ outside, 0) for ch in gen.channels)


def test_coherent_excited_state_is_in_annihilator_but_not_balanced():
    sd = SpectralData.from_levels([0.0, 1.0], [1, 2])
    D = np.zeros((3, 3), dtype=complex)
    D[0, 1] = D[1, 2] = 1.0
    gen = build_generator(sd, D, thermal_rates(1.0, 1.0))
    v = np.array([0, 1, np.exp(1.1j)])
    rho = 0.5 * np.diag([1, 0, 0]).astype(complex) + 0.25 * np.outer(v, v.conj())
    member, traces = annihilator_membership(gen, rho)
    assert member and all(abs(t) < 1e-15 for t in traces.values())
    assert detailed_balance_classify(gen, rho).kind == "none"


def test_gibbs_state_is_detailed_balance():
    rng = np.random.default_rng(5)
    H = random_hermitian(rng, 4)
    D = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    beta = 0.8
    gen = generator_from_hamiltonian(H, D, thermal_rates(1.0, beta))
    w, V = np.linalg.eigh(H)
    gibbs = V @ np.diag(np.exp(-beta * w)) @ V.conj().T
    gibbs /= np.trace(gibbs).real
    cls = detailed_balance_classify(gen, gibbs)
    assert cls.kind == "detailed"
    for ch in gen.nontrivial_channels():
        assert cls.c_values[ch.omega] == pytest.approx(np.exp(beta * ch.omega), rel=1e-9)


def test_local_detailed_balance_with_off_rates():
    # Gibbs-like state for beta=1 but rates with beta=2: same form, wrong constants
    sd = SpectralData.from_levels([0.0, 1.0], [1, 1])
    D = np.array([[0, 1], [0, 0]], dtype=complex)
    gen = build_generator(sd, D, thermal_rates(1.0, 2.0))
    rho = np.diag([np.e, 1.0]) / (1 + np.e)
    assert detailed_balance_classify(gen, rho).kind == "local_detailed"


def test_wd_state_is_annihilating():
    gen = _dark_model()
    wd = interaction_free_subspace(gen)
    rho = random_state(np.random.default_rng(1), 4, support=wd.basis)
    assert detailed_balance_classify(gen, rho).kind == "annihilating"


def test_kernel_dimension_matches_oracle():
    gen = _dark_model()
    chans = [(c.kraus, c.gamma_minus, c.gamma_plus, c.zeta_minus, c.zeta_plus)
             for c in gen.nontrivial_channels()]
    res = stationary_kernel(gen)
    assert res.kernel_dim == fixed_point_dim(generator_oracle(chans), 4)
    assert res.converged
    for X in res.kernel_operators():
        assert np.linalg.norm(gen.predual(X)) < 1e-9


def test_decompose_state_mixture():
    gen = _dark_model()
    wd = interaction_free_subspace(gen)
    rng = np.random.default_rng(2)
    rho_wd = random_state(rng, 4, support=wd.basis)
    rho_perp = random_state(rng, 4, support=wd.complement().basis)
    rho = 0.3 * rho_wd + 0.7 * rho_perp
    dec = decompose_state(rho, wd)
    assert dec.theta == pytest.approx(0.3, abs=1e-12)
    assert np.allclose(dec.rho_wd, rho_wd, atol=1e-12)
    assert np.allclose(dec.reconstruct(), rho, atol=1e-12)
    assert decompose_state(rho_wd, wd).theta == pytest.approx(1.0)
    assert decompose_state(rho_wd, wd).rho_perp is None


def test_decompose_state_rejects_coherences():
    gen = _dark_model()
    wd = interaction_free_subspace(gen)
    v = (wd.basis[:, 0] + np.array([1, 0, 0, 0])) / np.sqrt(2)
    with pytest.raises(StructureError):
        decompose_state(np.outer(v, v.conj()), wd)


def test_subharmonic_ground_state_projection():
    # pure decay into e0: P0 is subharmonic but not harmonic; P1 is superharmonic
    sd = SpectralData.from_levels([0.0, 1.0], [1, 1])
    D = np.array([[0, 1], [0, 0]], dtype=complex)
    gen = build_generator(sd, D, {1.0: Rates(1.0, 0.0)})
    rep = is_subharmonic(gen, np.diag([1.0, 0.0]))
    assert rep.subharmonic and not rep.harmonic
    assert rep.infinitesimal_min_eig == pytest.approx(1.0)
    assert rep.infinitesimal_diag_norm < 1e-14
    assert not is_subharmonic(gen, np.diag([0.0, 1.0])).subharmonic
    assert is_subharmonic(gen, np.eye(2)).harmonic


def test_subharmonic_rejects_non_projection():
    gen = _dark_model()
    with pytest.raises(ValueError):
        is_subharmonic(gen, np.eye(4) * 0.5)
