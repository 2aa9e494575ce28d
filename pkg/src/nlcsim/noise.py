"""Stochastic drivers: Brownian channels, the modal additive field W0, Q, Z,
their Malliavin derivatives and the compound Poisson boundary process.

Time grid conventions
---------------------
Increment ``n`` covers ``(t_n, t_{n+1}]`` with ``t_n = n dt``.  A Malliavin
direction at time ``v`` is attached to the increment containing ``v``,
``j = max(ceil(v / dt), 1) - 1``; shifting that single increment by ``eps``
is the discrete Cameron-Martin perturbation used in the tests.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse.linalg as spla

from .grid import DirectorField3, Domain, VectorField2
from .operators import discretization

W0_DEFAULT_MODES = 4

# RNG stream identifiers inside one trajectory
STREAM_BROWNIAN = 0
STREAM_JUMPS = 1
STREAM_INITIAL = 2


def make_rng(seed: int, traj_index: int = 0, stream: int = STREAM_BROWNIAN) -> np.random.Generator:
    """Independent generator for ``(master seed, trajectory, stream)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(traj_index), int(stream)))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# W0 spatial modes


@dataclass(frozen=True, eq=False)
class StokesModes:
    """First ``M`` discrete Stokes eigenpairs, ``A1 phi_m = r_m phi_m``.

    ``vectors`` holds interior-face vectors normalised to ``inner_h = 1``.
    """

    domain: Domain
    eigenvalues: np.ndarray
    vectors: np.ndarray  # (M, nf)

    @property
    def M(self) -> int:
        return len(self.eigenvalues)

    def field(self, m: int) -> VectorField2:
        return discretization(self.domain).vel_field(self.vectors[m])

    def synthesize(self, coeffs) -> np.ndarray:
        return np.asarray(coeffs, dtype=float) @ self.vectors


@functools.lru_cache(maxsize=16)
def stokes_modes(domain: Domain, M: int = W0_DEFAULT_MODES) -> StokesModes:
    disc = discretization(domain)
    if M == 0:
        return StokesModes(domain, np.zeros(0), np.zeros((0, disc.nf)))
    solve = disc.inverse_stokes()
    op = spla.LinearOperator((disc.nf, disc.nf), matvec=solve, dtype=float)
    v0 = disc.leray().project_vec(np.cos(np.arange(disc.nf) * 0.7) + 1.0)
    vals, vecs = spla.eigsh(op, k=M, which="LA", v0=v0, tol=1e-13)
    order = np.argsort(-vals)
    vals, vecs = vals[order], vecs[:, order]
    out = np.empty((M, disc.nf))
    for m in range(M):
        x = vecs[:, m]
        x = x / (domain.h * np.linalg.norm(x))
        if x[np.argmax(np.abs(x))] < 0:
            x = -x
        out[m] = x
    ev = 1.0 / vals
    ev.setflags(write=False)
    out.setflags(write=False)
    return StokesModes(domain, ev, out)


# ---------------------------------------------------------------------------
# noise path


@dataclass(frozen=True, eq=False)
class NoisePath:
    """Per-step Gaussian increments for the ``K`` scalar channels and ``M`` W0 modes.

    ``dW`` has shape ``(n_steps, K)`` and ``dbeta`` shape ``(n_steps, M)``;
    ``rho`` are the W0 mode amplitudes.
    """

    seed: int
    dt: float
    dW: np.ndarray
    dbeta: np.ndarray
    rho: np.ndarray
    traj_index: int = 0

    def __post_init__(self):
        for name in ("dW", "dbeta", "rho"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.dW.ndim != 2 or self.dbeta.ndim != 2 or len(self.dW) != len(self.dbeta):
            raise ValueError("increment arrays must be (n_steps, K) and (n_steps, M)")
        if self.dbeta.shape[1] != len(self.rho):
            raise ValueError("one amplitude per W0 mode required")

    @classmethod
    def generate(cls, seed: int, dt: float, n_steps: int, K: int, M: int = W0_DEFAULT_MODES,
                 rho=None, traj_index: int = 0) -> "NoisePath":
        rng = make_rng(seed, traj_index, STREAM_BROWNIAN)
        z = rng.standard_normal((n_steps, K + M)) * math.sqrt(dt)
        if rho is None:
            rho = np.ones(M)
        return cls(int(seed), float(dt), z[:, :K], z[:, K:], np.asarray(rho, dtype=float), int(traj_index))

    @property
    def n_steps(self) -> int:
        return len(self.dW)

    @property
    def K(self) -> int:
        return self.dW.shape[1]

    @property
    def M(self) -> int:
        return self.dbeta.shape[1]

    def w_path(self) -> np.ndarray:
        """``W_k(t_n)`` for ``n = 0..n_steps``, shape ``(n_steps + 1, K)``."""
        out = np.zeros((self.n_steps + 1, self.K))
        np.cumsum(self.dW, axis=0, out=out[1:])
        return out

    def shifted(self, channel: int, v: float, eps: float, mode: int = 0) -> "NoisePath":
        """Path with ``eps`` added to the increment containing ``v``.

        ``channel`` 1..K shifts ``W_k``; channel 0 shifts ``beta_mode``.
        """
        j = increment_index(v, self.dt)
        if j >= self.n_steps:
            return self
        dW, db = np.array(self.dW), np.array(self.dbeta)
        if channel == 0:
            db[j, mode] += eps
        else:
            dW[j, channel - 1] += eps
        return replace(self, dW=dW, dbeta=db)

    def ramp_shifted(self, channel: int, v: float, eps: float, mode: int = 0) -> "NoisePath":
        """Shift by ``eps (t - v)^+`` evaluated on the grid (direction ``h' = 1_[v, T]``)."""
        j = increment_index(v, self.dt)
        dW, db = np.array(self.dW), np.array(self.dbeta)
        tgt = db[:, mode] if channel == 0 else dW[:, channel - 1]
        if j < self.n_steps:
            tgt[j] += eps * ((j + 1) * self.dt - v)
            tgt[j + 1:] += eps * self.dt
        return replace(self, dW=dW, dbeta=db)


def increment_index(v: float, dt: float) -> int:
    n = math.ceil(v / dt - 1e-9)
    return max(n, 1) - 1


# ---------------------------------------------------------------------------
# Q


@dataclass(frozen=True)
class QState:
    t: float
    w_sum: float = 0.0

    @property
    def q(self) -> float:
        return math.exp(self.w_sum)

    @property
    def q_inv(self) -> float:
        return math.exp(-self.w_sum)


def advance_q(qs: QState, increments, sigmas, dt: float) -> QState:
    """Add ``sum_k sigma_k dW_k`` to the exponent; ``q`` is always re-exponentiated."""
    inc = np.asarray(increments, dtype=float)
    sig = np.asarray(sigmas, dtype=float)
    if inc.shape != sig.shape:
        raise ValueError(f"expected {sig.shape[0]} increments, got {inc.shape}")
    return QState(qs.t + dt, qs.w_sum + float(sig @ inc))


@dataclass(frozen=True)
class MalliavinDirection:
    """Kernel evaluation point: ``channel`` 0 is W0 restricted to ``mode``."""

    channel: int
    v: float
    mode: int = 0

    def __post_init__(self):
        if self.channel < 0 or self.v < 0:
            raise ValueError("channel and v must be non-negative")


def _active(t: float, dt: float, direction: MalliavinDirection) -> bool:
    n = int(round(t / dt))
    return n >= increment_index(direction.v, dt) + 1


def malliavin_q(qs: QState, direction: MalliavinDirection, sigmas, dt: float) -> float:
    if direction.channel == 0 or not _active(qs.t, dt, direction):
        return 0.0
    return sigmas[direction.channel - 1] * qs.q


def malliavin_qinv(qs: QState, direction: MalliavinDirection, sigmas, dt: float) -> float:
    if direction.channel == 0 or not _active(qs.t, dt, direction):
        return 0.0
    return -sigmas[direction.channel - 1] * qs.q_inv


# ---------------------------------------------------------------------------
# Z


@dataclass(frozen=True, eq=False)
class ZState:
    t: float
    coeffs: np.ndarray
    modes: StokesModes

    @classmethod
    def zero(cls, modes: StokesModes) -> "ZState":
        return cls(0.0, np.zeros(modes.M), modes)

    def vec(self) -> np.ndarray:
        return self.modes.synthesize(self.coeffs)

    @property
    def z(self) -> VectorField2:
        return discretization(self.modes.domain).vel_field(self.vec())


def step_z(zs: ZState, qs: QState, dbeta, rho, sigma0: float, mu: float, dt: float) -> ZState:
    """Exact per-mode OU step with ``Q`` frozen at the left endpoint."""
    decay = np.exp(-mu * zs.modes.eigenvalues * dt)
    c = decay * zs.coeffs + sigma0 * qs.q_inv * np.asarray(rho) * np.asarray(dbeta)
    return ZState(zs.t + dt, c, zs.modes)


def malliavin_z(q_hist, path: NoisePath, direction: MalliavinDirection, modes: StokesModes,
                sigmas, sigma0: float, mu: float) -> np.ndarray:
    """Modal coefficients of ``D_v Z(t_n)`` for ``n = 0..n_steps``.

    ``q_hist`` holds the ``QState`` at every grid time (the base path).
    Differentiates the discrete recursion of :func:`step_z` exactly.
    """
    n_steps = path.n_steps
    if q_hist is None or len(q_hist) < n_steps + 1:
        raise RuntimeError("malliavin_z needs the full Q history")
    dt = path.dt
    out = np.zeros((n_steps + 1, modes.M))
    if sigma0 == 0.0 or modes.M == 0:
        return out
    j = increment_index(direction.v, dt)
    if j >= n_steps:
        return out
    decay = np.exp(-mu * modes.eigenvalues * dt)
    if direction.channel == 0:
        out[j + 1, direction.mode] = sigma0 * q_hist[j].q_inv * path.rho[direction.mode]
        for n in range(j + 1, n_steps):
            out[n + 1] = decay * out[n]
        return out
    for n in range(j + 1, n_steps):
        dqi = malliavin_qinv(q_hist[n], direction, sigmas, dt)
        out[n + 1] = decay * out[n] + sigma0 * dqi * path.rho * path.dbeta[n]
    return out


# ---------------------------------------------------------------------------
# compound Poisson boundary process

_TRACE_FREQS = ((0, 0), (1, 0), (0, 1), (1, 1))


def boundary_library(domain: Domain) -> np.ndarray:
    """Smooth traces ``cos(a pi x) cos(b pi y)`` per component, shape ``(12, 3, n+1, n+1)``."""
    X, Y = domain.node_coords()
    out = []
    for comp in range(3):
        for a, b in _TRACE_FREQS:
            arr = np.zeros((3,) + X.shape)
            arr[comp] = np.cos(a * np.pi * X / domain.lx) * np.cos(b * np.pi * Y / domain.lx)
            out.append(arr)
    return np.stack(out)


@dataclass(frozen=True, eq=False)
class JumpBoundary:
    """Compound Poisson process in the span of :func:`boundary_library`.

    ``sizes[i]`` is the coefficient vector of the jump at ``times[i]``;
    coefficients are uniform on ``[-amplitude, amplitude]``.
    """

    rate: float
    amplitude: float = 0.1
    times: tuple = ()
    sizes: tuple = ()

    def __post_init__(self):
        if not (self.rate >= 0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be non-negative, got {self.rate}")

    @property
    def n_jumps(self) -> int:
        return len(self.times)

    def coefficients(self, t: float) -> np.ndarray:
        """Coefficient vector of ``N(t)`` (right-continuous)."""
        c = np.zeros(len(_TRACE_FREQS) * 3)
        for tj, s in zip(self.times, self.sizes):
            if tj <= t:
                c = c + s
        return c

    def value(self, domain: Domain, t: float) -> DirectorField3:
        lib = boundary_library(domain)
        return DirectorField3(domain, np.tensordot(self.coefficients(t), lib, axes=1))

    def jumps_in(self, t0: float, t1: float):
        """Jumps with ``t0 < time <= t1``."""
        return [(t, s) for t, s in zip(self.times, self.sizes) if t0 < t <= t1]


def step_jump_boundary(jb: JumpBoundary, t0: float, t1: float, rng: np.random.Generator) -> JumpBoundary:
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    k = int(rng.poisson(jb.rate * (t1 - t0)))
    if k == 0:
        return jb
    times = np.sort(t0 + (t1 - t0) * (1.0 - rng.random(k)))
    sizes = rng.uniform(-jb.amplitude, jb.amplitude, size=(k, len(_TRACE_FREQS) * 3))
    return replace(jb, times=jb.times + tuple(float(t) for t in times),
                   sizes=jb.sizes + tuple(np.array(s) for s in sizes))
