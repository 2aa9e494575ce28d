import math

import numpy as np
import pytest
from scipy import stats

from oracles import lognormal, ou_stats
from nlcsim.grid import Domain, inner_h
from nlcsim.noise import (
    STREAM_BROWNIAN,
    STREAM_JUMPS,
    JumpBoundary,
    MalliavinDirection,
    NoisePath,
    QState,
    ZState,
    advance_q,
    boundary_library,
    increment_index,
    make_rng,
    malliavin_q,
    malliavin_qinv,
    malliavin_z,
    step_jump_boundary,
    step_z,
    stokes_modes,
)
from nlcsim.operators import apply_a1, discretization, divergence
from nlcsim.verification import poisson_count_test


def test_streams_are_reproducible_and_distinct():
    a = make_rng(7, 3, STREAM_BROWNIAN).standard_normal(5)
    b = make_rng(7, 3, STREAM_BROWNIAN).standard_normal(5)
    c = make_rng(7, 3, STREAM_JUMPS).standard_normal(5)
    d = make_rng(7, 4, STREAM_BROWNIAN).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c) and not np.allclose(a, d)


def test_noise_path_is_deterministic_and_gaussian():
    p1 = NoisePath.generate(3, 0.01, 4000, 2, 1)
    p2 = NoisePath.generate(3, 0.01, 4000, 2, 1)
    assert np.array_equal(p1.dW, p2.dW) and np.array_equal(p1.dbeta, p2.dbeta)
    x = np.concatenate([p1.dW.ravel(), p1.dbeta.ravel()]) / math.sqrt(0.01)
    assert stats.kstest(x, "norm").pvalue > 0.01
    assert np.allclose(p1.w_path()[-1], p1.dW.sum(0))


def test_increment_index_convention():
    dt = 0.1
    assert increment_index(0.0, dt) == 0
    assert increment_index(0.1, dt) == 0
    assert increment_index(0.15, dt) == 1
    assert increment_index(0.2, dt) == 1


def test_stokes_modes_are_orthonormal_solenoidal_eigenpairs():
    dom = Domain(32)
    modes = stokes_modes(dom, 4)
    disc = discretization(dom)
    G = np.array([[inner_h(modes.field(i), modes.field(j)) for j in range(4)] for i in range(4)])
    assert np.allclose(G, np.eye(4), atol=1e-10)
    for m in range(4):
        f = modes.field(m)
        assert np.abs(divergence(f)).max() < 1e-8
        res = disc.vel_vec(apply_a1(f)) - modes.eigenvalues[m] * disc.vel_vec(f)
        assert np.abs(res).max() < 1e-8 * modes.eigenvalues[m]
    # first Stokes eigenvalue of the unit square is about 52.34
    assert modes.eigenvalues[0] == pytest.approx(52.34, rel=0.02)
    assert np.all(np.diff(modes.eigenvalues) >= -1e-9)


def test_q_is_lognormal():
    sig = (0.4, 0.3)
    T, steps, n = 0.5, 10, 20000
    r = make_rng(1)
    qT = np.empty(n)
    for i in range(n):
        qs = QState(0.0)
        for _ in range(steps):
            qs = advance_q(qs, r.standard_normal(2) * math.sqrt(T / steps), sig, T / steps)
        qT[i] = qs.q
    mean, var = lognormal(sig, T)
    assert abs(qT.mean() - mean) < 3 * math.sqrt(var / n)
    assert stats.kstest(np.log(qT), "norm", args=(0, math.sqrt(0.25 * T))).pvalue > 0.01
    with pytest.raises(ValueError):
        advance_q(QState(0.0), [0.1], sig, 0.1)


def test_ou_modes_match_discrete_and_continuous_variance():
    dom = Domain(8)
    modes = stokes_modes(dom, 2)
    mu, s0, dt, steps, n = 1.0, 0.7, 1e-3, 60, 4000
    r = make_rng(2)
    qs = QState(0.0)
    out = np.empty((n, 2))
    for i in range(n):
        zs = ZState.zero(modes)
        for _ in range(steps):
            zs = step_z(zs, qs, r.standard_normal(2) * math.sqrt(dt), np.ones(2), s0, mu, dt)
        out[i] = zs.coeffs
    a = mu * modes.eigenvalues
    decay = np.exp(-a * dt)
    var_discrete = s0 ** 2 * dt * (1 - decay ** (2 * steps)) / (1 - decay ** 2)
    _, var_cont = ou_stats(0.0, a, s0, steps * dt)
    assert np.all(np.abs(var_discrete - var_cont) <= 2 * a * dt * var_cont)
    se = var_discrete * math.sqrt(2.0 / (n - 1))
    assert np.all(np.abs(out.var(0, ddof=1) - var_discrete) < 4 * se)
    assert np.all(np.abs(out.mean(0)) < 4 * np.sqrt(var_discrete / n))


def test_malliavin_q_matches_cameron_martin_shift():
    sig = (0.8,)
    path = NoisePath.generate(4, 0.01, 50, 1, 0)
    dirn = MalliavinDirection(1, 0.2)
    eps = 1e-7
    shifted = path.shifted(1, 0.2, eps)
    qb = qs_ = QState(0.0)
    for n in range(50):
        qb = advance_q(qb, path.dW[n], sig, 0.01)
        qs_ = advance_q(qs_, shifted.dW[n], sig, 0.01)
        exact = malliavin_q(qb, dirn, sig, 0.01)
        fd = (qs_.q - qb.q) / eps
        assert fd == pytest.approx(exact, rel=1e-6, abs=1e-12)
        assert (qs_.q_inv - qb.q_inv) / eps == pytest.approx(malliavin_qinv(qb, dirn, sig, 0.01), rel=1e-6, abs=1e-12)
    assert malliavin_q(qb, MalliavinDirection(0, 0.2), sig, 0.01) == 0.0


@pytest.mark.parametrize("direction", [MalliavinDirection(1, 0.05), MalliavinDirection(0, 0.05, 1)])
def test_malliavin_z_matches_cameron_martin_shift(direction):
    dom = Domain(8)
    modes = stokes_modes(dom, 2)
    sig, s0, mu, dt, N = (0.6,), 0.9, 1.0, 0.01, 20
    path = NoisePath.generate(8, dt, N, 1, 2)

    def run(p):
        qs, zs = QState(0.0), ZState.zero(modes)
        qh, zh = [qs], [zs.coeffs]
        for n in range(N):
            zs = step_z(zs, qs, p.dbeta[n], p.rho, s0, mu, dt)
            qs = advance_q(qs, p.dW[n], sig, dt)
            qh.append(qs)
            zh.append(zs.coeffs)
        return qh, np.array(zh)

    qh, z0 = run(path)
    eps = 1e-6
    _, z1 = run(path.shifted(direction.channel, direction.v, eps, direction.mode))
    dz = malliavin_z(qh, path, direction, modes, sig, s0, mu)
    fd = (z1 - z0) / eps
    assert np.abs(fd - dz).max() <= 1e-4 * max(np.abs(dz).max(), 1e-12)
    assert np.abs(dz[: increment_index(direction.v, dt) + 1]).max() == 0.0


def test_poisson_jump_counts():
    p, counts = poisson_count_test(rate=3.0, t_end=1.0, samples=10000, seed=5)
    assert p > 0.01
    assert abs(counts.mean() - 3.0) < 3 * math.sqrt(3.0 / 10000)


def test_jump_times_uniform_and_composable():
    T, rate = 1.0, 4.0
    times, whole, split = [], [], []
    for i in range(3000):
        jb = step_jump_boundary(JumpBoundary(rate), 0.0, T, make_rng(9, i, STREAM_JUMPS))
        times.extend(jb.times)
        whole.append(jb.n_jumps)
        r = make_rng(10, i, STREAM_JUMPS)
        jb2 = step_jump_boundary(step_jump_boundary(JumpBoundary(rate), 0.0, 0.5 * T, r), 0.5 * T, T, r)
        split.append(jb2.n_jumps)
        assert list(jb2.times) == sorted(jb2.times)
    assert stats.kstest(np.array(times) / T, "uniform").pvalue > 0.01
    assert stats.ks_2samp(whole, split).pvalue > 0.01


def test_jump_boundary_process_values(dom8):
    lib = boundary_library(dom8)
    assert lib.shape == (12, 3, 9, 9)
    jb = step_jump_boundary(JumpBoundary(50.0, amplitude=0.2), 0.0, 1.0, make_rng(1, 0, STREAM_JUMPS))
    assert jb.n_jumps > 0
    t_mid = jb.times[0]
    assert np.allclose(jb.coefficients(t_mid), jb.sizes[0])
    assert np.all(np.abs(jb.coefficients(0.0)) == 0)
    assert len(jb.jumps_in(-1.0, 1.0)) == jb.n_jumps
    with pytest.raises(ValueError):
        JumpBoundary(-1.0)
    with pytest.raises(ValueError):
        step_jump_boundary(jb, 1.0, 1.0, make_rng(1))
