from __future__ import annotations

import math

import numpy as np
import pytest

from wclt.evolution import propagate_exact
from wclt.generator import apply_predual
from wclt.linalg import dagger, random_state, span
from wclt.models import (
    AkvParams,
    ModelError,
    RandomWalk,
    build_akv,
    build_kv,
    default_interference,
    kv_decompose,
)
from wclt.stationary import interaction_free_subspace


def test_default_interference_small_cases():
    assert np.allclose(default_interference(2, 1), [[1.0]])
    g = default_interference(4, 2)
    w = np.exp(2j * np.pi / 3)
    assert np.allclose(g[0], [1, 1, 1])
    assert np.allclose(g[1], [np.conj(w), 1, w])
    assert np.allclose(g @ g.conj().T / 3, np.eye(2))


def test_full_interference_makes_absz_equal_p2():
    m = build_akv(AkvParams(N=4, M=3))
    assert np.allclose(m.absZ, m.P[2], atol=1e-14)
    assert np.allclose(m.p_wd, 0, atol=1e-14)


def test_corrupted_interference_is_rejected():
    g = default_interference(4, 2).copy()
    g[1, 0] *= 1.1
    with pytest.raises(ModelError):
        AkvParams(N=4, M=2, g=g)


@pytest.mark.parametrize("kw", [dict(N=2), dict(M=0), dict(M=4), dict(eps=(1.0, 3.0, 0.5)),
                                dict(gamma_re_plus=(1.0, 1.0, 0.5)), dict(gamma_re_minus=(1.0, 0.0, 1.0))])
def test_param_validation(kw):
    with pytest.raises(ModelError):
        AkvParams(**kw)


def test_merged_frequencies_are_rejected():
    # eps1 - eps2 = eps3
    with pytest.raises(ModelError):
        build_akv(AkvParams(eps=(5.0, 4.0, 1.0)))


def test_projections_partition_identity():
    m = build_akv(AkvParams(N=6, M=4))
    assert np.allclose(sum(m.P), np.eye(m.dim))
    for P in (m.q, m.p_wd, m.p_v, m.p_recurrent_perp):
        assert np.allclose(P @ P, P, atol=1e-12)


def test_heff_is_sum_of_channel_terms():
    m = build_akv(AkvParams(N=4, M=3))
    expected = sum(ch.zeta_minus * dagger(ch.kraus) @ ch.kraus + ch.zeta_plus * ch.kraus @ dagger(ch.kraus)
                   for ch in m.generator.channels)
    assert np.allclose(m.heff(), expected, atol=1e-13)


def test_z_is_isometric_on_q():
    m = build_akv(AkvParams(N=6, M=4))
    assert np.trace(m.q).real == pytest.approx(2.0)
    assert np.allclose(dagger(m.Z) @ m.Z @ m.q, m.q, atol=1e-13)


def test_wd_matches_strict_definition():
    m = build_akv(AkvParams(N=6, M=4))
    wd = interaction_free_subspace(m.generator)
    assert wd.dim == 1
    assert np.allclose(wd.projector(), m.p_wd, atol=1e-12)


def test_limit_state_single_block_matches_expm():
    m = build_akv(AkvParams(N=4, M=3))
    rng = np.random.default_rng(0)
    sigma = random_state(rng, m.dim, support=span(m.q).basis)
    expected = m.limit_state(sigma)
    p, r = m.weights
    assert np.allclose(expected, p * sigma + r * m.Z @ sigma @ dagger(m.Z), atol=1e-13)
    assert np.allclose(propagate_exact(m.generator, sigma, 40.0), expected, atol=1e-10)


def test_limit_state_drops_cross_block_coherence():
    m = build_akv(AkvParams(N=4, M=3))
    rng = np.random.default_rng(1)
    eta = random_state(rng, m.dim, support=span(m.p_recurrent_perp).basis)
    assert np.allclose(propagate_exact(m.generator, eta, 40.0), m.limit_state(eta), atol=1e-10)


def test_limit_state_rejects_wrong_support():
    m = build_akv(AkvParams(N=4, M=3))
    with pytest.raises(ModelError):
        m.limit_state(np.diag(np.r_[1.0, np.zeros(m.dim - 1)]))


def test_invariant_validation():
    m = build_akv(AkvParams(N=4, M=3))
    sigma = random_state(np.random.default_rng(2), m.dim, support=span(m.q).basis)
    with pytest.raises(ValueError):
        m.invariant(sigma, lam=1.5)
    with pytest.raises(ValueError):
        m.invariant(sigma, lam=0.5)
    rho = m.invariant(sigma)
    assert np.linalg.norm(apply_predual(m.generator, rho)) < 1e-12


def test_random_walk_values():
    rw = build_akv(AkvParams(N=4, M=2)).random_walk()
    assert (rw.a, rw.b) == (12.0, 6.0)
    assert rw.weights(0.1)[0] == pytest.approx((6 + 12 * math.exp(-1.8)) / 18, rel=1e-14)
    assert np.allclose(rw.weights(0.0), [1, 0])
    assert np.allclose(rw.stationary @ rw.Q, 0)
    assert rw.weights(np.array([0.0, 1.0, 2.0])).shape == (3, 2)


def test_random_walk_matches_matrix_exponential():
    from scipy.linalg import expm
    rw = RandomWalk(0.7, 2.3)
    assert np.allclose(rw.weights(1.3), expm(1.3 * rw.Q)[0], atol=1e-14)


def test_energy_gain():
    assert build_akv(AkvParams(N=4, M=3)).energy_gain() == pytest.approx(2.0)
    assert build_akv(AkvParams(N=6, M=4)).energy_gain() == pytest.approx(10 / 3)
    flat = AkvParams(gamma_im_minus=(0.0, 0.0, 0.0), gamma_im_plus=(0.0, 0.0, 0.0))
    assert build_akv(flat).energy_gain() == 0.0


def test_kv_theta_does_not_change_the_generator():
    rho = random_state(np.random.default_rng(3), 6)
    a = build_kv(theta=0.0).generator
    b = build_kv(theta=1.234).generator
    assert np.allclose(apply_predual(a, rho), apply_predual(b, rho), atol=1e-13)


def test_kv_rejects_bad_input():
    with pytest.raises(ModelError):
        build_kv(eps1=1.0, eps2=2.0)
    with pytest.raises(ModelError):
        build_kv(rates={"omega9": (1, 1)})
    with pytest.raises(ModelError):
        build_kv(N=2)


def test_kv_wd_has_dimension_n_minus_2():
    m = build_kv(N=5)
    wd = interaction_free_subspace(m.generator)
    assert wd.dim == 3
    assert np.allclose(wd.projector(), m.p_wd(), atol=1e-12)


def test_kv_decomposes_gibbs_state():
    m = build_kv(N=5)
    pops = np.r_[1.0, math.exp(-1.0), np.full(4, math.exp(-3.0))]
    Zp = pops.sum()
    rho = np.diag(pops / Zp).astype(complex)
    assert np.linalg.norm(apply_predual(m.generator, rho)) < 1e-13
    dec = kv_decompose(m, rho)
    assert dec.lam == pytest.approx(math.exp(-3.0) / Zp, rel=1e-12)
    assert dec.r0 == pytest.approx(math.exp(3.0), rel=1e-12)
    assert dec.r1 == pytest.approx(math.exp(2.0), rel=1e-12)
    assert dec.weight_wd == pytest.approx(1 - dec.lam * (1 + dec.r0 + dec.r1), abs=1e-14)
    assert dec.support_residual < 1e-14
