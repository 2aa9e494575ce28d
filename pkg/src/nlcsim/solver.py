"""Time integration of the transformed pathwise system and of the direct
Stratonovich system used to cross-check it.

The transformed unknowns are ``u = v / Q - Z`` and ``d``; with ``w = u + Z``
one step of the IMEX scheme reads

    (I + theta dt mu A1) u' = (I - (1 - theta) dt mu A1) u
                              - dt P[Q B1(w, w) + lam / Q M(d, d)]
    (I + theta dt gamma A2) d' = (I - (1 - theta) dt gamma A2) d
                              - dt [Q B2(w, d) + gamma f(d)]

with every nonlinear term frozen at the start of the step.  The velocity
solve is a Stokes saddle-point solve, which is the exact resolvent of
``A1`` on the discrete divergence-free space.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import DirectorField3, Domain, Params, SimState, VectorField2, validate_params
from .noise import (
    JumpBoundary,
    NoisePath,
    QState,
    StokesModes,
    ZState,
    advance_q,
    step_z,
    stokes_modes,
)
from .operators import NumericalError, discretization, gl_f_array, gl_fprime_array

SCHEMES = ("semi-implicit", "fully-explicit")
BOUNDARY_MODES = ("fixed", "jump")


class SolverDivergence(RuntimeError):
    """Non-finite values appeared; ``state`` is the last finite state."""

    def __init__(self, message, state=None, step=None):
        super().__init__(message)
        self.state = state
        self.step = step


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    scheme: str = "semi-implicit"
    boundary_mode: str = "fixed"
    theta: float = 1.0
    cfl_safety: float = 0.9

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= self.dt * (1 - 1e-12):
            raise ValueError("t_end must be at least dt")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.boundary_mode not in BOUNDARY_MODES:
            raise ValueError(f"boundary_mode must be one of {BOUNDARY_MODES}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def cfl_limit(self, domain: Domain, params: Params) -> float:
        return domain.h ** 2 / (4.0 * max(params.mu, params.gamma)) * self.cfl_safety


# ---------------------------------------------------------------------------
# boundary lift


def harmonic_lift(boundary: DirectorField3) -> DirectorField3:
    """Discrete-harmonic extension of the boundary nodes of ``boundary``."""
    disc = discretization(boundary.domain)
    b = disc.node_arr(boundary)
    out = np.zeros_like(b)
    bn, inn = disc.boundary_nodes, disc.interior_nodes
    out[bn] = b[bn]
    rhs = -(disc.lap_ib @ b[bn])
    from scipy.sparse.linalg import spsolve

    out[inn] = spsolve(disc.lap_ii, rhs).reshape(-1, 3)
    res = np.abs(disc.lap_ii @ out[inn] - rhs).max() * disc.h ** 2
    if res > 1e-10 * max(1.0, np.abs(b).max()):
        raise NumericalError(f"lift solve residual {res:.3e}", res)
    return disc.node_field(out)


def lift_residual(lift: DirectorField3) -> float:
    disc = discretization(lift.domain)
    return float(np.abs(disc.lap_nodes(disc.node_arr(lift))).max() * disc.h ** 2)


# ---------------------------------------------------------------------------
# state helpers


def reconstruct_v(s: SimState) -> VectorField2:
    """``v = Q (u + Z)``."""
    return (s.u + s.z) * s.q


def transform_v(v: VectorField2, q: float, z: VectorField2) -> VectorField2:
    """Inverse of :func:`reconstruct_v`: ``u = v / Q - Z``."""
    return v * (1.0 / q) - z


def initial_state(v0: VectorField2, d0: DirectorField3, modes: StokesModes | None = None) -> SimState:
    """State at ``t = 0`` (``Q = 1``, ``Z = 0``); boundary data taken from ``d0``."""
    dom = v0.domain
    M = 0 if modes is None else modes.M
    return SimState(0.0, v0, d0, 1.0, VectorField2.zeros(dom), harmonic_lift(d0), 0.0, np.zeros(M))


# ---------------------------------------------------------------------------
# core IMEX stepping on raw arrays


class Integrator:
    """Caches factorizations for one ``(domain, params, config)`` triple.

    Raw layout: ``u`` and ``z`` are interior-face vectors, ``d`` is an
    ``(nn, 3)`` node array.
    """

    def __init__(self, domain: Domain, params: Params, cfg: SolverConfig):
        validate_params(params)
        self.domain, self.params, self.cfg = domain, params, cfg
        self.disc = disc = discretization(domain)
        dt, th = cfg.dt, cfg.theta
        self.explicit = cfg.scheme == "fully-explicit"
        if self.explicit:
            lim = cfg.cfl_limit(domain, params)
            if dt > lim:
                warnings.warn(f"dt={dt:g} exceeds the explicit stability limit {lim:.3g}", RuntimeWarning)
            self.vel_solve = disc.stokes_solver(0.0)
            self.dir_solve = None
        else:
            self.vel_solve = disc.stokes_solver(th * dt * params.mu)
            self.dir_solve = disc.helmholtz_solver(th * dt * params.gamma)
        self.inn = disc.interior_nodes
        self.bn = disc.boundary_nodes

    # explicit parts -------------------------------------------------------
    def velocity_nonlinear(self, w, d, q, qinv):
        p = self.params
        return q * self.disc.b1_raw(w, w) + p.lam * qinv * self.disc.stress_div_raw(d, d)

    def director_nonlinear(self, w, d, q):
        p = self.params
        out = q * self.disc.b2_raw(w, d) + p.gamma * gl_f_array(d, p.eta)
        out[self.bn] = 0.0
        return out

    # linear implicit solves -------------------------------------------------
    def solve_velocity(self, u, forcing):
        """Advance ``u`` with explicit forcing ``forcing`` (unprojected)."""
        p, dt, th = self.params, self.cfg.dt, self.cfg.theta
        if self.explicit:
            rhs = u - dt * p.mu * (self.disc.L @ u) - dt * forcing
        else:
            rhs = u - dt * forcing
            if th < 1.0:
                rhs = rhs - (1.0 - th) * dt * p.mu * (self.disc.L @ u)
        return self.vel_solve(rhs)

    def solve_director(self, d, forcing, d_bnd_new):
        """Advance ``d``; boundary nodes of the result are ``d_bnd_new``."""
        p, dt, th = self.params, self.cfg.dt, self.cfg.theta
        disc = self.disc
        lap = disc.lap_nodes(d)[self.inn]
        di = d[self.inn]
        out = np.empty_like(d)
        out[self.bn] = d_bnd_new
        if self.explicit:
            out[self.inn] = di + dt * p.gamma * lap - dt * forcing[self.inn]
            return out
        rhs = di - dt * forcing[self.inn]
        if th < 1.0:
            rhs = rhs + (1.0 - th) * dt * p.gamma * lap
        rhs = rhs + th * dt * p.gamma * (disc.lap_ib @ d_bnd_new)
        out[self.inn] = self.dir_solve.solve(rhs)
        return out

    def step_arrays(self, u, d, q, qinv, z, d_bnd_new=None):
        """One transformed step; returns ``(u', d')``."""
        if d_bnd_new is None:
            d_bnd_new = d[self.bn]
        w = u + z
        u_new = self.solve_velocity(u, self.velocity_nonlinear(w, d, q, qinv))
        d_new = self.solve_director(d, self.director_nonlinear(w, d, q), d_bnd_new)
        return u_new, d_new

    # linearisations ---------------------------------------------------------
    def tangent_arrays(self, uh, dh, w, d, q, qinv, wh=None, dq=0.0, dqinv=0.0):
        """Linearised step about the base point ``(w = u + Z, d)``.

        ``wh`` is the perturbation of ``w`` (defaults to ``uh``); ``dq``,
        ``dqinv`` are perturbations of ``Q`` and ``1/Q``, giving the
        inhomogeneous terms of the Malliavin system.
        """
        p, disc = self.params, self.disc
        if wh is None:
            wh = uh
        fu = q * (disc.b1_raw(wh, w) + disc.b1_raw(w, wh))
        fu = fu + p.lam * qinv * (disc.stress_div_raw(dh, d) + disc.stress_div_raw(d, dh))
        fd = q * (disc.b2_raw(wh, d) + disc.b2_raw(w, dh)) + p.gamma * gl_fprime_array(d, dh, p.eta)
        if dq != 0.0:
            fu = fu + dq * disc.b1_raw(w, w)
            fd = fd + dq * disc.b2_raw(w, d)
        if dqinv != 0.0:
            fu = fu + p.lam * dqinv * disc.stress_div_raw(d, d)
        fd[self.bn] = 0.0
        uh_new = self.solve_velocity(uh, fu)
        dh_new = self.solve_director(dh, fd, np.zeros((len(self.bn), 3)))
        return uh_new, dh_new


_INTEGRATORS: dict = {}


def get_integrator(domain: Domain, params: Params, cfg: SolverConfig) -> Integrator:
    key = (domain, params, cfg)
    it = _INTEGRATORS.get(key)
    if it is None:
        if len(_INTEGRATORS) > 32:
            _INTEGRATORS.clear()
        it = _INTEGRATORS[key] = Integrator(domain, params, cfg)
    return it


@dataclass(frozen=True)
class StepNoise:
    """Increments driving a single step."""

    dW: np.ndarray
    dbeta: np.ndarray
    rho: np.ndarray


def step_transformed(s: SimState, noise: StepNoise, cfg: SolverConfig, params: Params,
                     modes: StokesModes | None = None) -> SimState:
    """One IMEX step of the transformed system, then advance ``Q`` and ``Z``."""
    dom = s.u.domain
    it = get_integrator(dom, params, cfg)
    disc = it.disc
    u, d = disc.vel_vec(s.u), disc.node_arr(s.d)
    bnd = disc.node_arr(s.lift)[it.bn]
    u1, d1 = it.step_arrays(u, d, s.q, 1.0 / s.q, disc.vel_vec(s.z), bnd)
    if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(d1))):
        raise SolverDivergence(f"non-finite values at t={s.t + cfg.dt:g}", state=s)
    qs = QState(s.t, s.w_sum)
    qs1 = advance_q(qs, noise.dW, params.sigmas, cfg.dt)
    if modes is None:
        modes = stokes_modes(dom, len(noise.dbeta))
    zc = _initial_coeffs(s, modes)
    zs1 = step_z(ZState(s.t, zc, modes), qs, noise.dbeta, noise.rho, params.sigma0, params.mu, cfg.dt)
    return SimState(s.t + cfg.dt, disc.vel_field(u1), disc.node_field(d1), qs1.q, zs1.z,
                    s.lift, qs1.w_sum, zs1.coeffs)


def apply_boundary_jump(s: SimState, jb: JumpBoundary, t_prev: float) -> SimState:
    """Add the jumps with ``t_prev < time <= s.t`` to the boundary data."""
    jumps = jb.jumps_in(t_prev, s.t)
    if not jumps:
        return s
    dom = s.d.domain
    from .noise import boundary_library

    inc = np.tensordot(sum(sz for _, sz in jumps), boundary_library(dom), axes=1)
    new_bnd = DirectorField3(dom, s.lift.values + inc)
    lift = harmonic_lift(new_bnd)
    return replace(s, d=s.d.with_boundary_of(lift), lift=lift)


# ---------------------------------------------------------------------------
# trajectories


@dataclass(eq=False)
class Trajectory:
    """Stored base path at solver resolution (raw arrays)."""

    domain: Domain
    dt: float
    u: np.ndarray  # (N+1, nf)
    d: np.ndarray  # (N+1, nn, 3)
    w_sum: np.ndarray  # (N+1,)
    z: np.ndarray  # (N+1, M) modal coefficients
    modes: StokesModes
    jump_steps: list = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.w_sum) - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def q(self) -> np.ndarray:
        return np.exp(self.w_sum)

    def q_states(self):
        return [QState(n * self.dt, float(w)) for n, w in enumerate(self.w_sum)]

    def z_vec(self, n: int) -> np.ndarray:
        return self.modes.synthesize(self.z[n])

    def v_vec(self, n: int) -> np.ndarray:
        return math.exp(self.w_sum[n]) * (self.u[n] + self.z_vec(n))


def _initial_coeffs(s: SimState, modes: StokesModes) -> np.ndarray:
    zc = s.z_coeffs
    if zc is None or len(zc) != modes.M:
        if s.z.normal_boundary_max() == 0 and not (np.any(s.z.u1) or np.any(s.z.u2)):
            return np.zeros(modes.M)
        raise ValueError("state carries a Z field that does not match the W0 modes")
    return np.array(zc, dtype=float)


def run_transformed(s0: SimState, path: NoisePath, cfg: SolverConfig, params: Params,
                    jb: JumpBoundary | None = None, store: bool = True, observer=None,
                    modes: StokesModes | None = None):
    """Integrate over ``path.n_steps`` steps.

    ``observer(state, n)`` is called at every grid time (after jumps at that
    time are applied).  Returns ``(final_state, Trajectory | None)``.
    """
    dom = s0.u.domain
    if modes is None:
        modes = stokes_modes(dom, path.M)
    it = get_integrator(dom, params, cfg)
    disc = it.disc
    N = path.n_steps
    u = disc.vel_vec(s0.u)
    d = disc.node_arr(s0.d).copy()
    w_sum = s0.w_sum
    zc = _initial_coeffs(s0, modes)
    lift = s0.lift
    bnd = disc.node_arr(lift)[it.bn]
    sig = np.asarray(params.sigmas, dtype=float)
    decay = np.exp(-params.mu * modes.eigenvalues * cfg.dt)
    rho = path.rho
    jump_mode = jb is not None and cfg.boundary_mode == "jump"
    if store:
        U = np.empty((N + 1, disc.nf))
        Dd = np.empty((N + 1,) + d.shape)
        Wsum = np.empty(N + 1)
        Zc = np.empty((N + 1, modes.M))
    jump_steps = []
    t_prev = -1.0

    def snapshot(n):
        return SimState(n * cfg.dt, disc.vel_field(u), disc.node_field(d), math.exp(w_sum),
                        disc.vel_field(modes.synthesize(zc)), lift, w_sum, zc.copy())

    for n in range(N + 1):
        t = n * cfg.dt
        if jump_mode:
            jumps = jb.jumps_in(t_prev, t)
            if jumps:
                st = apply_boundary_jump(snapshot(n), jb, t_prev)
                lift, d = st.lift, disc.node_arr(st.d).copy()
                bnd = disc.node_arr(lift)[it.bn]
                jump_steps.append(n)
        t_prev = t
        if store:
            U[n], Dd[n], Wsum[n], Zc[n] = u, d, w_sum, zc
        if observer is not None:
            observer(snapshot(n), n)
        if n == N:
            break
        q = math.exp(w_sum)
        qinv = math.exp(-w_sum)
        z = modes.synthesize(zc)
        u_new, d_new = it.step_arrays(u, d, q, qinv, z, bnd)
        if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(d_new))):
            raise SolverDivergence(f"non-finite values at t={t + cfg.dt:g}", state=snapshot(n), step=n)
        zc = decay * zc + params.sigma0 * qinv * rho * path.dbeta[n]
        w_sum = w_sum + float(sig @ path.dW[n]) if len(sig) else w_sum
        u, d = u_new, d_new
    final = snapshot(N)
    traj = Trajectory(dom, cfg.dt, U, Dd, Wsum, Zc, modes, jump_steps) if store else None
    return final, traj


# ---------------------------------------------------------------------------
# direct Stratonovich integrator


def heun_step(x, drift, resolvent, sigmas, dW, additive, dt):
    """Stochastic Heun step for ``dx = [-A x + drift(x)] dt + sum_k s_k x o dW_k + dA``.

    ``resolvent`` applies ``(I + dt A)^{-1}``; with ``drift = 0`` and the
    identity resolvent this is the classical Heun scheme for linear
    multiplicative noise.
    """
    s = float(np.dot(sigmas, dW)) if len(sigmas) else 0.0
    f0 = drift(x)
    pred = resolvent(x + dt * f0 + s * x + additive)
    return resolvent(x + 0.5 * dt * (f0 + drift(pred)) + 0.5 * s * (x + pred) + additive)


def step_stratonovich_direct(v: np.ndarray, d: np.ndarray, noise: StepNoise, it: Integrator,
                             modes: StokesModes):
    """Heun step for ``v`` and an IMEX step for ``d`` (raw arrays).

    The director step uses ``v`` at the start of the step, matching the
    transformed scheme.
    """
    p = it.params
    disc = it.disc
    additive = p.sigma0 * modes.synthesize(np.asarray(noise.rho) * np.asarray(noise.dbeta))

    def drift(x):
        return -(disc.b1_raw(x, x) + p.lam * disc.stress_div_raw(d, d))

    v_new = heun_step(v, drift, lambda y: it.solve_velocity(y, 0.0 * y), p.sigmas, noise.dW, additive, it.cfg.dt)
    d_new = it.solve_director(d, it.director_nonlinear(v, d, 1.0), d[it.bn])
    return v_new, d_new


def run_direct(v0: VectorField2, d0: DirectorField3, path: NoisePath, cfg: SolverConfig, params: Params,
               modes: StokesModes | None = None):
    """Direct Stratonovich run; returns ``v`` vectors at every grid time and the final ``d``."""
    dom = v0.domain
    if modes is None:
        modes = stokes_modes(dom, path.M)
    it = get_integrator(dom, params, cfg)
    disc = it.disc
    v = disc.vel_vec(v0)
    d = disc.node_arr(d0).copy()
    out = np.empty((path.n_steps + 1, disc.nf))
    out[0] = v
    for n in range(path.n_steps):
        v, d = step_stratonovich_direct(v, d, StepNoise(path.dW[n], path.dbeta[n], path.rho), it, modes)
        if not np.all(np.isfinite(v)):
            raise SolverDivergence(f"non-finite values in direct run at step {n + 1}", step=n)
        out[n + 1] = v
    return out, disc.node_field(d)
