import math

import numpy as np
import pytest

from isacsim.arrays import ChannelEstimate, hermitian_sqrt
from isacsim.chanceopt import AoState, bti_margin, build_bti_blocks
from isacsim.rates import SemanticProfile


def _random_psd(n, rng, trace=1.0):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m = x @ x.conj().T
    return trace * m / np.trace(m).real


def _setup(n=4, seed=0, omega_scale=0.01):
    rng = np.random.default_rng(seed)
    h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    est = ChannelEstimate(h_bar=h, omega=omega_scale * np.eye(n))
    w = [_random_psd(n, rng, trace=0.06)]
    r = [_random_psd(n, rng, trace=0.02), _random_psd(n, rng, trace=0.02)]
    return est, w, r


def test_zero_omega_collapses_to_deterministic_sinr_constraint():
    est, w, r = _setup(omega_scale=0.0)
    targets = AoState(lam=1.0, varrho=0.5, rho=np.array([1.0]))
    profile = SemanticProfile(iota=1.0, rho=np.array([1.0]))
    block = build_bti_blocks(0, est, w, r, targets, profile, sigma_c2=1e-3)
    assert np.allclose(block.q_mat, 0.0)
    assert np.allclose(block.r_vec, 0.0)
    # s reduces to h^H chi h - sigma^2 with chi = (1/gamma_hat) W - sum R
    gamma_hat = 2.0 ** (1.0 * 1.0 / 1.0) - 1.0
    chi = w[0] / gamma_hat - r[0] - r[1]
    expected = (est.h_bar.conj() @ chi @ est.h_bar).real - 1e-3
    assert block.s_scalar == pytest.approx(expected, rel=1e-12)
    # margin of the degenerate block is exactly s
    assert bti_margin(block) == pytest.approx(expected, rel=1e-12)


def test_unit_rate_target_gives_gamma_hat_one():
    est, w, r = _setup()
    targets = AoState(lam=1.0, varrho=0.5, rho=np.array([1.0]))
    profile = SemanticProfile(iota=1.0, rho=np.array([1.0]))
    block = build_bti_blocks(0, est, w, r, targets, profile, sigma_c2=1e-3)
    # gamma_hat = 2^1 - 1 = 1, so chi = W - sum R exactly
    sqrt_om = hermitian_sqrt(est.omega)
    chi = w[0] - r[0] - r[1]
    assert np.allclose(block.q_mat, sqrt_om @ chi @ sqrt_om, atol=1e-12)


def test_quadratic_form_oracle():
    est, w, r = _setup(seed=3)
    targets = AoState(lam=2.0, varrho=0.8, rho=np.array([0.65]))
    profile = SemanticProfile(iota=1.0, rho=np.array([0.65]))
    sigma2 = 2e-3

    block = build_bti_blocks(0, est, w, r, targets, profile, sigma_c2=sigma2)
    gamma_hat = 2.0 ** (2.0 * 0.65 / 1.0) - 1.0
    chi = w[0] / gamma_hat - r[0] - r[1]
    sq = hermitian_sqrt(est.omega)
    assert np.allclose(block.q_mat, sq @ chi @ sq, atol=1e-12)
    assert np.allclose(block.r_vec, sq @ chi @ est.h_bar, atol=1e-12)
    assert block.s_scalar == pytest.approx(
        (est.h_bar.conj() @ chi @ est.h_bar).real - sigma2, rel=1e-12)


def test_eavesdropper_block_uses_sensing_only_interference():
    est, w, r = _setup(seed=4)
    w.append(_random_psd(4, np.random.default_rng(7), trace=0.05))  # second intended beam
    targets = AoState(lam=2.0, varrho=0.8, rho=np.array([0.65, 0.65]))
    profile = SemanticProfile(iota=1.0, rho=np.array([0.65, 0.65]))
    sigma2 = 1e-3

    block = build_bti_blocks((0, 1), est, w, r, targets, profile, sigma_c2=sigma2)
    big_gamma = 2.0 ** (0.8 * 0.65 / 1.0) - 1.0
    chi = r[0] + r[1] - w[1] / big_gamma  # other intended beams do not appear
    sq = hermitian_sqrt(est.omega)
    assert np.allclose(block.q_mat, sq @ chi @ sq, atol=1e-12)
    assert block.s_scalar == pytest.approx(
        (est.h_bar.conj() @ chi @ est.h_bar).real + sigma2, rel=1e-12)


def test_margin_matches_independent_recomputation():
    rng = np.random.default_rng(11)
    for _ in range(20):
        est, w, r = _setup(seed=int(rng.integers(1 << 30)))
        targets = AoState(lam=1.5, varrho=0.6, rho=np.array([0.8]))
        profile = SemanticProfile(iota=1.0, rho=np.array([0.8]))
        eps = 0.01
        block = build_bti_blocks(0, est, w, r, targets, profile, sigma_c2=1e-3, epsilon=eps)
        # independent margin: explicit slack optimization
        q = np.asarray(block.q_mat)
        a_star = math.sqrt(sum(abs(q[i, j]) ** 2 for i in range(4) for j in range(4))
                           + 2.0 * sum(abs(x) ** 2 for x in block.r_vec))
        eigs = np.linalg.eigvalsh((q + q.conj().T) / 2)
        b_star = max(0.0, -eigs[0])
        expected = (np.trace(q).real - math.sqrt(2 * math.log(1 / eps)) * a_star
                    + math.log(eps) * b_star + block.s_scalar)
        assert bti_margin(block) == pytest.approx(expected, rel=1e-12)


def test_rejects_nonpositive_rate_exponent():
    est, w, r = _setup()
    profile = SemanticProfile(iota=1.0, rho=np.array([1.0]))
    with pytest.raises(ValueError):
        build_bti_blocks(0, est, w, r, AoState(lam=0.0, varrho=0.5, rho=np.array([1.0])),
                         profile, sigma_c2=1e-3)
    with pytest.raises(ValueError):
        build_bti_blocks((0, 0), est, w, r, AoState(lam=1.0, varrho=0.0, rho=np.array([1.0])),
                         profile, sigma_c2=1e-3)


def test_margin_certifies_monte_carlo_outage():
    # a block with nonnegative margin must violate at most eps empirically
    rng = np.random.default_rng(42)
    n = 3
    est = ChannelEstimate(h_bar=2.0 * np.ones(n), omega=0.05 * np.eye(n))
    w = [np.eye(n) * 0.5]
    r = [np.eye(n) * 0.01]
    targets = AoState(lam=0.5, varrho=0.5, rho=np.array([1.0]))
    profile = SemanticProfile(iota=1.0, rho=np.array([1.0]))
    eps = 0.05
    block = build_bti_blocks(0, est, w, r, targets, profile, sigma_c2=1e-2, epsilon=eps)
    assert bti_margin(block) >= 0.0

    draws = 20_000
    e = (rng.standard_normal((draws, n)) + 1j * rng.standard_normal((draws, n))) / np.sqrt(2)
    sq = hermitian_sqrt(est.omega)
    h = est.h_bar[None, :] + e @ sq.T
    gamma_hat = 2.0 ** 0.5 - 1.0
    chi = w[0] / gamma_hat - r[0]
    quad = np.real(np.einsum("ni,ij,nj->n", h.conj(), chi, h))
    violations = np.mean(quad - 1e-2 < 0)
    assert violations <= eps
