"""Frechet tangent, Malliavin derivative and anticipating corrections.

All linear systems are the exact linearisation of the discrete IMEX step in
:mod:`nlcsim.solver`, replayed along a stored base :class:`Trajectory`.
Finite differences of the scheme therefore converge to the tangent at first
order in the perturbation size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import DirectorField3, Params, SimState, VectorField2, norm_hm
from .noise import MalliavinDirection, NoisePath, increment_index, malliavin_q, malliavin_qinv, malliavin_z
from .operators import discretization
from .solver import SolverConfig, Trajectory, get_integrator, initial_state, run_transformed


@dataclass(frozen=True, eq=False)
class TangentState:
    t: float
    u_hat: VectorField2
    d_hat: DirectorField3
    direction: tuple


@dataclass(frozen=True, eq=False)
class MalliavinState:
    t: float
    xi: VectorField2
    eta: DirectorField3
    direction: MalliavinDirection


def _check_direction(b0: DirectorField3):
    if np.any(b0.values[:, b0.boundary_mask()] != 0.0):
        raise ValueError("director perturbation must vanish on the boundary")


def _check_alignment(traj: Trajectory, n: int, t: float):
    if n < 0 or n >= traj.n_steps or abs(n * traj.dt - t) > 1e-9 * max(1.0, t):
        raise RuntimeError(f"base path has no step starting at t={t:g}")


def step_tangent(ts: TangentState, traj: Trajectory, cfg: SolverConfig, params: Params) -> TangentState:
    """Advance the tangent pair one step along the base path."""
    it = get_integrator(traj.domain, params, cfg)
    disc = it.disc
    n = int(round(ts.t / traj.dt))
    _check_alignment(traj, n, ts.t)
    q = float(traj.q[n])
    w = traj.u[n] + traj.z_vec(n)
    uh, dh = it.tangent_arrays(disc.vel_vec(ts.u_hat), disc.node_arr(ts.d_hat), w, traj.d[n], q, 1.0 / q)
    return TangentState(ts.t + traj.dt, disc.vel_field(uh), disc.node_field(dh), ts.direction)


def run_tangent(traj: Trajectory, u0: VectorField2, b0: DirectorField3, cfg: SolverConfig, params: Params):
    """Tangent path for direction ``(u0, b0)``; arrays of shape ``(N+1, nf)`` and ``(N+1, nn, 3)``."""
    _check_direction(b0)
    it = get_integrator(traj.domain, params, cfg)
    disc = it.disc
    N = traj.n_steps
    U = np.empty((N + 1, disc.nf))
    D = np.empty((N + 1, disc.nn, 3))
    U[0], D[0] = disc.vel_vec(u0), disc.node_arr(b0)
    q = traj.q
    for n in range(N):
        w = traj.u[n] + traj.z_vec(n)
        U[n + 1], D[n + 1] = it.tangent_arrays(U[n], D[n], w, traj.d[n], q[n], 1.0 / q[n])
    return U, D


def malliavin_inputs(traj: Trajectory, path: NoisePath, direction: MalliavinDirection, params: Params):
    """``(D_v Q, D_v Q^-1, D_v Z)`` at every grid time of the base path."""
    if direction.channel > params.K:
        raise ValueError(f"channel {direction.channel} exceeds K={params.K}")
    qh = traj.q_states()
    dq = np.array([malliavin_q(s, direction, params.sigmas, traj.dt) for s in qh])
    dqi = np.array([malliavin_qinv(s, direction, params.sigmas, traj.dt) for s in qh])
    dz = malliavin_z(qh, path, direction, traj.modes, params.sigmas, params.sigma0, params.mu)
    return dq, dqi, dz


def step_malliavin(ms: MalliavinState, traj: Trajectory, path: NoisePath, cfg: SolverConfig,
                   params: Params, inputs=None) -> MalliavinState:
    it = get_integrator(traj.domain, params, cfg)
    disc = it.disc
    n = int(round(ms.t / traj.dt))
    _check_alignment(traj, n, ms.t)
    if n < increment_index(ms.direction.v, traj.dt):
        return MalliavinState(ms.t + traj.dt, VectorField2.zeros(traj.domain),
                              DirectorField3.zeros(traj.domain), ms.direction)
    if inputs is None:
        inputs = malliavin_inputs(traj, path, ms.direction, params)
    dq, dqi, dz = inputs
    xi, eta = _malliavin_step(it, traj, n, disc.vel_vec(ms.xi), disc.node_arr(ms.eta), dq, dqi, dz)
    return MalliavinState(ms.t + traj.dt, disc.vel_field(xi), disc.node_field(eta), ms.direction)


def _malliavin_step(it, traj, n, xi, eta, dq, dqi, dz):
    q = float(traj.q[n])
    w = traj.u[n] + traj.z_vec(n)
    dzv = traj.modes.synthesize(dz[n])
    return it.tangent_arrays(xi, eta, w, traj.d[n], q, 1.0 / q, wh=xi + dzv, dq=dq[n], dqinv=dqi[n])


def run_malliavin(traj: Trajectory, path: NoisePath, direction: MalliavinDirection,
                  cfg: SolverConfig, params: Params):
    """``(D_v u, D_v d)`` at every grid time; identically zero before the direction is active."""
    it = get_integrator(traj.domain, params, cfg)
    disc = it.disc
    N = traj.n_steps
    XI = np.zeros((N + 1, disc.nf))
    ETA = np.zeros((N + 1, disc.nn, 3))
    dq, dqi, dz = malliavin_inputs(traj, path, direction, params)
    j = increment_index(direction.v, traj.dt)
    for n in range(min(j, N), N):
        XI[n + 1], ETA[n + 1] = _malliavin_step(it, traj, n, XI[n], ETA[n], dq, dqi, dz)
    return XI, ETA


def malliavin_v(traj: Trajectory, xi: np.ndarray, inputs, n: int) -> np.ndarray:
    """``D_v v = D_v Q (u + Z) + Q (D_v u + D_v Z)`` at grid time ``n``."""
    dq, _, dz = inputs
    q = traj.q[n]
    return dq[n] * (traj.u[n] + traj.z_vec(n)) + q * (xi[n] + traj.modes.synthesize(dz[n]))


# ---------------------------------------------------------------------------
# error measures


def sensitivity_norm(disc, uvec, dnodes) -> float:
    """``||u||_1 + ||d||_2`` for raw arrays."""
    return norm_hm(disc.vel_field(uvec), 1) + norm_hm(disc.node_field(dnodes), 2)


def fd_check(v0: VectorField2, d0: DirectorField3, u0: VectorField2, b0: DirectorField3,
             path: NoisePath, cfg: SolverConfig, params: Params, hs=(1e-2, 1e-3, 1e-4)):
    """Finite-difference mismatch of the tangent at ``t_end`` for each ``h``.

    Returns ``(rows, order)`` where each row is ``(h, mismatch)`` and
    ``order`` is the least-squares slope of log-mismatch against log-h.
    The direction is normalised so that ``||u0||_1 + ||b0||_2 = 1``.
    """
    _check_direction(b0)
    disc = discretization(v0.domain)
    scale = norm_hm(u0, 1) + norm_hm(b0, 2)
    if scale == 0:
        raise ValueError("zero direction")
    u0, b0 = u0 * (1.0 / scale), b0 * (1.0 / scale)
    s0 = initial_state(v0, d0)
    base, traj = run_transformed(s0, path, cfg, params)
    U, D = run_tangent(traj, u0, b0, cfg, params)
    rows = []
    for h in hs:
        sh, _ = run_transformed(initial_state(v0 + u0 * h, d0 + b0 * h), path, cfg, params, store=False)
        du = (disc.vel_vec(sh.u) - disc.vel_vec(base.u)) / h - U[-1]
        dd = (disc.node_arr(sh.d) - disc.node_arr(base.d)) / h - D[-1]
        rows.append((h, sensitivity_norm(disc, du, dd)))
    return rows, fitted_order([r[0] for r in rows], [r[1] for r in rows])


def fitted_order(hs, errs) -> float:
    """Least-squares slope of ``log err`` against ``log h``."""
    x = np.log(np.asarray(hs, dtype=float))
    y = np.log(np.maximum(np.asarray(errs, dtype=float), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def cameron_martin_check(traj: Trajectory, path: NoisePath, s0: SimState, direction: MalliavinDirection,
                         cfg: SolverConfig, params: Params, eps: float = 1e-4):
    """Relative error between the shifted-path difference quotient and ``D_v (u, d)`` at ``t_end``.

    Returns ``(rel_err, derivative_norm)``.  When the derivative vanishes
    identically the absolute difference quotient norm is returned instead.
    """
    disc = discretization(traj.domain)
    XI, ETA = run_malliavin(traj, path, direction, cfg, params)
    shifted = path.shifted(direction.channel, direction.v, eps, direction.mode)
    sh, _ = run_transformed(s0, shifted, cfg, params, store=False, modes=traj.modes)
    du = (disc.vel_vec(sh.u) - traj.u[-1]) / eps
    dd = (disc.node_arr(sh.d) - traj.d[-1]) / eps
    ref = sensitivity_norm(disc, XI[-1], ETA[-1])
    err = sensitivity_norm(disc, du - XI[-1], dd - ETA[-1])
    if ref == 0.0:
        return err, 0.0
    return err / ref, ref


# ---------------------------------------------------------------------------
# anticipating initial data

_G_KINDS = ("const", "linear", "quadratic", "sin")


def _g(kind, x):
    return {"const": 1.0, "linear": x, "quadratic": x * x, "sin": math.sin(x)}[kind]


def _gprime(kind, x):
    return {"const": 0.0, "linear": 1.0, "quadratic": 2.0 * x, "sin": math.cos(x)}[kind]


@dataclass(frozen=True, eq=False)
class AnticipatingSpec:
    """Initial velocity ``R = g(W_k(t1)) psi`` with ``g = sum c_i g_i``.

    ``terms`` is a sequence of ``(kind, c)`` with kind in
    ``const | linear | quadratic | sin``.
    """

    psi: VectorField2
    t1: float
    channel: int = 1
    terms: tuple = (("linear", 1.0),)

    def __post_init__(self):
        for kind, _ in self.terms:
            if kind not in _G_KINDS:
                raise ValueError(f"unsupported R_nu form {kind!r}; expected one of {_G_KINDS}")
        if self.channel < 1:
            raise ValueError("anticipating data must depend on a scalar channel k >= 1")
        if self.t1 < 0:
            raise ValueError("t1 must be non-negative")

    def g(self, x: float) -> float:
        return sum(c * _g(k, x) for k, c in self.terms)

    def gprime(self, x: float) -> float:
        return sum(c * _gprime(k, x) for k, c in self.terms)

    @property
    def deterministic(self) -> bool:
        return all(k == "const" for k, _ in self.terms)

    def w_at_t1(self, path: NoisePath) -> float:
        n1 = int(round(self.t1 / path.dt))
        if n1 > path.n_steps:
            raise ValueError("t1 lies beyond the noise path")
        return float(np.sum(path.dW[:n1, self.channel - 1]))

    def initial_velocity(self, path: NoisePath) -> VectorField2:
        return self.psi * self.g(self.w_at_t1(path))


def skorohod_correction(traj: Trajectory, tangent_u: np.ndarray, spec: AnticipatingSpec,
                        path: NoisePath) -> np.ndarray:
    """Running correction ``int_0^t Q(s) Du(s, R)[D_s R] ds`` as interface vectors.

    ``tangent_u`` is the tangent path in direction ``psi``; left-endpoint
    quadrature on the solver grid.  Row ``n`` is the integral up to ``t_n``.
    """
    N = traj.n_steps
    out = np.zeros((N + 1, tangent_u.shape[1]))
    if spec.deterministic:
        return out
    gp = spec.gprime(spec.w_at_t1(path))
    n1 = int(round(spec.t1 / traj.dt))
    q = traj.q
    for n in range(N):
        out[n + 1] = out[n]
        if n < n1:
            out[n + 1] += traj.dt * gp * q[n] * tangent_u[n]
    return out


def anticipating_sides(spec: AnticipatingSpec, d0: DirectorField3, path: NoisePath, cfg: SolverConfig,
                       params: Params, test_field: VectorField2 | None = None) -> dict:
    """Scalar terms of the Stratonovich / Skorohod identity at ``t_end``.

    With ``X(s) = <Q(s) u(s, R), phi>`` (``phi = psi`` by default) returns the
    Stratonovich sum, the forward (Ito-type) sum, the trace term
    ``sigma_k / 2 int X ds`` and the anticipating correction.  The Skorohod
    integral itself has mean zero, so ``E[strat] = E[trace + correction]``.
    """
    if params.K < spec.channel:
        raise ValueError("spec channel exceeds the number of noise channels")
    dom = spec.psi.domain
    disc = discretization(dom)
    phi = disc.vel_vec(test_field if test_field is not None else spec.psi)
    h2 = dom.h ** 2
    v0 = spec.initial_velocity(path)
    s0 = initial_state(v0, d0)
    _, traj = run_transformed(s0, path, cfg, params)
    q = traj.q
    X = np.array([q[n] * h2 * ((traj.u[n] + traj.z_vec(n)) @ phi) for n in range(traj.n_steps + 1)])
    dW = path.dW[:, spec.channel - 1]
    strat = float(np.sum(0.5 * (X[:-1] + X[1:]) * dW))
    forward = float(np.sum(X[:-1] * dW))
    sigma = params.sigmas[spec.channel - 1]
    trace = float(0.5 * sigma * np.sum(X[:-1]) * path.dt)
    if spec.deterministic:
        corr = 0.0
    else:
        U, _ = run_tangent(traj, spec.psi, DirectorField3.zeros(dom), cfg, params)
        corr = float(h2 * (skorohod_correction(traj, U, spec, path)[-1] @ phi))
    return {"strat": strat, "forward": forward, "trace": trace, "correction": corr,
            "rhs": trace + corr}
