import math

import numpy as np
import pytest

from oracles import MAX_REFERENCE_N, reference_trajectory
from nlcsim.diagnostics import energy_law_check, record
from nlcsim.grid import DirectorField3, Domain, Params
from nlcsim.noise import JumpBoundary, NoisePath, make_rng, step_jump_boundary, stokes_modes
from nlcsim.operators import discretization, divergence
from nlcsim.solver import (
    SolverConfig,
    SolverDivergence,
    StepNoise,
    apply_boundary_jump,
    harmonic_lift,
    initial_state,
    lift_residual,
    reconstruct_v,
    run_direct,
    run_transformed,
    step_transformed,
    transform_v,
)
from nlcsim.verification import equilibrium_drift, paired_errors, tilted_director, vortex


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(0.0, 1.0)
    with pytest.raises(ValueError):
        SolverConfig(0.1, 0.01)
    with pytest.raises(ValueError):
        SolverConfig(0.1, 1.0, scheme="rk4")
    with pytest.raises(ValueError):
        SolverConfig(0.1, 1.0, boundary_mode="periodic")
    with pytest.raises(ValueError):
        SolverConfig(0.1, 1.0, theta=1.5)
    assert SolverConfig(0.1, 1.0).n_steps == 10


def test_harmonic_lift_reproduces_affine_data(dom8):
    aff = DirectorField3.from_function(dom8, lambda X, Y: (X, 2 * Y - X, 1 + 0 * X))
    noisy = aff.interior_only().with_boundary_of(aff)
    lift = harmonic_lift(noisy)
    assert np.abs(lift.values - aff.values).max() < 1e-12
    assert lift_residual(lift) < 1e-12


def test_transform_round_trip(rng, dom8):
    v = vortex(dom8, 1.3)
    z = vortex(dom8, 0.2)
    u = transform_v(v, 1.7, z)
    d = tilted_director(dom8)
    from nlcsim.grid import SimState

    s = SimState(0.0, u, d, 1.7, z, harmonic_lift(d))
    back = reconstruct_v(s)
    assert np.abs(back.u1 - v.u1).max() < 1e-14


def test_equilibrium_is_a_fixed_point():
    assert equilibrium_drift(n=8, steps=200) <= 1e-12


def test_noise_free_energy_decreases():
    dom = Domain(16)
    p = Params()
    s0 = initial_state(vortex(dom, 1.0), tilted_director(dom, 1.0))
    path = NoisePath.generate(0, 2e-3, 25, 0, 0)
    recs = []
    run_transformed(s0, path, SolverConfig(2e-3, 0.05), p, store=False, observer=lambda s, n: recs.append(record(s, p)))
    rep = energy_law_check(recs, 2e-3, p)
    assert rep.monotone and rep.passed


def test_velocity_stays_solenoidal_and_director_boundary_fixed():
    dom = Domain(12)
    p = Params(sigma0=0.5, sigmas=(0.5,))
    modes = stokes_modes(dom, 4)
    s0 = initial_state(vortex(dom), tilted_director(dom, 0.7), modes)
    path = NoisePath.generate(1, 1e-3, 20, 1, 4)
    final, traj = run_transformed(s0, path, SolverConfig(1e-3, 0.02), p, modes=modes)
    assert np.abs(divergence(reconstruct_v(final))).max() < 1e-9
    m = final.d.boundary_mask()
    assert np.array_equal(final.d.values[:, m], s0.d.values[:, m])
    assert np.allclose(traj.q, np.exp(0.5 * path.w_path()[:, 0]))


def test_single_step_matches_driver():
    dom = Domain(8)
    p = Params(sigma0=0.3, sigmas=(0.4,))
    modes = stokes_modes(dom, 2)
    cfg = SolverConfig(1e-3, 3e-3)
    path = NoisePath.generate(2, 1e-3, 3, 1, 2)
    s = initial_state(vortex(dom), tilted_director(dom), modes)
    final, _ = run_transformed(s, path, cfg, p, modes=modes)
    for n in range(3):
        s = step_transformed(s, StepNoise(path.dW[n], path.dbeta[n], path.rho), cfg, p, modes)
    assert np.abs(s.u.u1 - final.u.u1).max() < 1e-13
    assert np.abs(s.d.values - final.d.values).max() < 1e-13
    assert s.q == pytest.approx(final.q, rel=1e-14)


def test_semi_implicit_converges_to_explicit_reference():
    dom = Domain(8)
    assert dom.n <= MAX_REFERENCE_N
    disc = discretization(dom)
    p = Params()
    v0, d0 = vortex(dom, 1.0), tilted_director(dom, 1.0)
    T = 0.02
    vr, dr = reference_trajectory(disc, disc.vel_vec(v0), disc.node_arr(d0), p, T, 1e-5)
    errs = []
    for dt in (4e-3, 2e-3, 1e-3):
        n = int(round(T / dt))
        final, _ = run_transformed(initial_state(v0, d0), NoisePath.generate(0, dt, n, 0, 0), SolverConfig(dt, T), p,
                                   store=False)
        errs.append(max(np.abs(disc.vel_vec(final.u) - vr).max(), np.abs(disc.node_arr(final.d) - dr).max()))
    assert errs[0] > errs[1] > errs[2]
    assert math.log2(errs[1] / errs[2]) > 0.8


def test_reference_guard():
    with pytest.raises(ValueError):
        reference_trajectory(discretization(Domain(32)), None, None, Params(), 0.1, 0.1)


def test_direct_and_transformed_agree_as_dt_shrinks():
    dom = Domain(8)
    p = Params(sigma0=0.5, sigmas=(0.7,))
    modes = stokes_modes(dom, 4)
    base = NoisePath.generate(3, 0.1 / 64, 64, 1, 4)
    errs = paired_errors(vortex(dom, 0.5), tilted_director(dom, 0.8), p, base, (16, 32, 64), modes)
    assert errs[0] > errs[1] > errs[2]


def test_direct_solver_without_noise_matches_transformed():
    dom = Domain(8)
    p = Params()
    v0, d0 = vortex(dom), tilted_director(dom)
    path = NoisePath.generate(0, 1e-3, 10, 0, 0)
    cfg = SolverConfig(1e-3, 1e-2)
    _, traj = run_transformed(initial_state(v0, d0), path, cfg, p)
    vd, _ = run_direct(v0, d0, path, cfg, p)
    # Heun and the left-endpoint IMEX step differ at O(dt^2) per step
    assert np.abs(vd[-1] - traj.v_vec(10)).max() < 1e-2 * np.abs(vd[0]).max()


def test_explicit_scheme_warns_and_diverges():
    dom = Domain(16)
    cfg = SolverConfig(0.0123, 0.5, scheme="fully-explicit")
    path = NoisePath.generate(0, cfg.dt, cfg.n_steps, 0, 0)
    with pytest.warns(RuntimeWarning, match="stability"):
        with pytest.raises(SolverDivergence) as e:
            with np.errstate(all="ignore"):
                run_transformed(initial_state(vortex(dom), tilted_director(dom)), path, cfg, Params(), store=False)
    assert e.value.state is not None and e.value.step is not None


def test_runs_are_bitwise_reproducible():
    dom = Domain(8)
    p = Params(sigma0=0.4, sigmas=(0.3, 0.2))
    cfg = SolverConfig(1e-3, 1e-2)
    out = []
    for _ in range(2):
        path = NoisePath.generate(11, 1e-3, 10, 2, 4)
        _, traj = run_transformed(initial_state(vortex(dom), tilted_director(dom), stokes_modes(dom, 4)), path, cfg, p)
        out.append(traj)
    assert np.array_equal(out[0].u, out[1].u) and np.array_equal(out[0].d, out[1].d)


def test_boundary_jumps_apply_on_the_grid():
    dom = Domain(8)
    jb = step_jump_boundary(JumpBoundary(40.0, amplitude=0.2), 0.0, 0.1, make_rng(2, 0, 1))
    assert jb.n_jumps > 0
    cfg = SolverConfig(1e-2, 0.1, boundary_mode="jump")
    s0 = initial_state(vortex(dom), tilted_director(dom))
    final, traj = run_transformed(s0, NoisePath.generate(0, 1e-2, 10, 0, 0), cfg, Params(), jb=jb)
    expected = sorted({int(math.ceil(t / 1e-2 - 1e-9)) for t in jb.times})
    assert traj.jump_steps == expected
    m = final.d.boundary_mask()
    total = jb.value(dom, 0.1).values
    assert np.allclose(final.d.values[:, m], s0.d.values[:, m] + total[:, m])
    assert lift_residual(final.lift) < 1e-10
    # a jump outside the step window leaves the state untouched
    assert apply_boundary_jump(s0, jb, 5.0) is s0
