"""Discrete domain, field containers, parameters and quadrature primitives.

Layout on the square ``[0, lx]^2`` with ``n`` cells per side and ``h = lx / n``:

* velocity (``VectorField2``) lives on a MAC staggered grid.  ``u1[i, j]`` sits
  on the vertical face ``(i h, (j + 1/2) h)`` with shape ``(n + 1, n)``;
  ``u2[i, j]`` sits on the horizontal face ``((i + 1/2) h, j h)`` with shape
  ``(n, n + 1)``.  ``u1[0]``, ``u1[n]``, ``u2[:, 0]`` and ``u2[:, n]`` are the
  wall-normal entries.
* the director (``DirectorField3``) lives on the ``(n + 1) x (n + 1)`` node
  grid, boundary nodes included, as an array of shape ``(3, n + 1, n + 1)``.

All arrays are indexed ``[i, j]`` with ``i`` along x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class FieldError(ValueError):
    """Raised for malformed or non-finite field data."""


class DimensionError(ValueError):
    """Raised when fields from different domains are combined."""


class ParameterError(ValueError):
    """Raised by :func:`validate_params`; ``fields`` names the offenders."""

    def __init__(self, fields: Sequence[str], message: str):
        super().__init__(message)
        self.fields = tuple(fields)


@dataclass(frozen=True)
class Domain:
    """Square domain with ``nx == ny`` cells per side."""

    nx: int
    lx: float = 1.0

    def __post_init__(self):
        if int(self.nx) != self.nx or self.nx < 4:
            raise ValueError(f"nx must be an integer >= 4, got {self.nx}")
        if not (math.isfinite(self.lx) and self.lx > 0):
            raise ValueError(f"lx must be positive and finite, got {self.lx}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "lx", float(self.lx))

    @property
    def ny(self) -> int:
        return self.nx

    @property
    def ly(self) -> float:
        return self.lx

    @property
    def n(self) -> int:
        return self.nx

    @property
    def h(self) -> float:
        return self.lx / self.nx

    def node_coords(self):
        """Node coordinates ``(X, Y)``, each of shape ``(n + 1, n + 1)``."""
        x = np.arange(self.n + 1) * self.h
        return np.meshgrid(x, x, indexing="ij")

    def u1_coords(self):
        x = np.arange(self.n + 1) * self.h
        y = (np.arange(self.n) + 0.5) * self.h
        return np.meshgrid(x, y, indexing="ij")

    def u2_coords(self):
        x = (np.arange(self.n) + 0.5) * self.h
        y = np.arange(self.n + 1) * self.h
        return np.meshgrid(x, y, indexing="ij")

    def cell_coords(self):
        x = (np.arange(self.n) + 0.5) * self.h
        return np.meshgrid(x, x, indexing="ij")


def _frozen(a, shape, name):
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.shape != shape:
        raise FieldError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FieldError(f"{name}: non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class VectorField2:
    """Immutable MAC velocity field."""

    domain: Domain
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        n = self.domain.n
        object.__setattr__(self, "u1", _frozen(self.u1, (n + 1, n), "u1"))
        object.__setattr__(self, "u2", _frozen(self.u2, (n, n + 1), "u2"))

    @classmethod
    def zeros(cls, domain: Domain) -> "VectorField2":
        n = domain.n
        return cls(domain, np.zeros((n + 1, n)), np.zeros((n, n + 1)))

    @classmethod
    def from_functions(cls, domain: Domain, fx, fy) -> "VectorField2":
        """Sample ``fx`` on u1 faces and ``fy`` on u2 faces."""
        return cls(domain, fx(*domain.u1_coords()), fy(*domain.u2_coords()))

    @classmethod
    def from_stream_function(cls, domain: Domain, psi) -> "VectorField2":
        """Discrete curl of a node stream function ``psi(X, Y)``.

        The result is exactly divergence-free on the MAC grid, and has zero
        wall-normal entries whenever ``psi`` vanishes on the boundary.
        """
        h = domain.h
        p = np.asarray(psi(*domain.node_coords()), dtype=float)
        u1 = (p[:, 1:] - p[:, :-1]) / h
        u2 = -(p[1:, :] - p[:-1, :]) / h
        return cls(domain, u1, u2)

    @property
    def components(self):
        return (self.u1, self.u2)

    def normal_boundary_max(self) -> float:
        return float(max(np.abs(self.u1[[0, -1], :]).max(), np.abs(self.u2[:, [0, -1]]).max()))

    def __add__(self, other):
        _check_same(self, other)
        return VectorField2(self.domain, self.u1 + other.u1, self.u2 + other.u2)

    def __sub__(self, other):
        _check_same(self, other)
        return VectorField2(self.domain, self.u1 - other.u1, self.u2 - other.u2)

    def __mul__(self, c):
        return VectorField2(self.domain, self.u1 * c, self.u2 * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


@dataclass(frozen=True, eq=False)
class DirectorField3:
    """Immutable node-based director field, array shape ``(3, n + 1, n + 1)``."""

    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        n = self.domain.n
        object.__setattr__(self, "values", _frozen(self.values, (3, n + 1, n + 1), "d"))

    @classmethod
    def zeros(cls, domain: Domain) -> "DirectorField3":
        return cls(domain, np.zeros((3, domain.n + 1, domain.n + 1)))

    @classmethod
    def constant(cls, domain: Domain, vec) -> "DirectorField3":
        vec = np.asarray(vec, dtype=float).reshape(3, 1, 1)
        return cls(domain, np.broadcast_to(vec, (3, domain.n + 1, domain.n + 1)))

    @classmethod
    def from_function(cls, domain: Domain, fn) -> "DirectorField3":
        """``fn(X, Y)`` returns a length-3 sequence of arrays."""
        X, Y = domain.node_coords()
        comps = [np.broadcast_to(np.asarray(c, dtype=float), X.shape) for c in fn(X, Y)]
        return cls(domain, np.stack(comps))

    @property
    def components(self):
        return tuple(self.values)

    def boundary_mask(self) -> np.ndarray:
        n = self.domain.n
        m = np.zeros((n + 1, n + 1), dtype=bool)
        m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
        return m

    def with_boundary_of(self, other: "DirectorField3") -> "DirectorField3":
        """Copy with boundary nodes replaced by those of ``other``."""
        _check_same(self, other)
        vals = np.array(self.values)
        m = self.boundary_mask()
        vals[:, m] = other.values[:, m]
        return DirectorField3(self.domain, vals)

    def interior_only(self) -> "DirectorField3":
        vals = np.array(self.values)
        vals[:, self.boundary_mask()] = 0.0
        return DirectorField3(self.domain, vals)

    def __add__(self, other):
        _check_same(self, other)
        return DirectorField3(self.domain, self.values + other.values)

    def __sub__(self, other):
        _check_same(self, other)
        return DirectorField3(self.domain, self.values - other.values)

    def __mul__(self, c):
        return DirectorField3(self.domain, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def _check_same(a, b):
    if type(a) is not type(b):
        raise DimensionError(f"cannot combine {type(a).__name__} with {type(b).__name__}")
    if a.domain != b.domain:
        raise DimensionError(f"domain mismatch: {a.domain} vs {b.domain}")


@dataclass(frozen=True)
class Params:
    mu: float = 1.0
    lam: float = 1.0
    gamma: float = 1.0
    eta: float = 1.0
    sigma0: float = 0.0
    sigmas: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))

    @property
    def K(self) -> int:
        return len(self.sigmas)


def validate_params(p: Params) -> Params:
    bad = []
    for name in ("mu", "lam", "gamma", "eta"):
        val = getattr(p, name)
        if not (math.isfinite(val) and val > 0):
            bad.append(name)
    if not math.isfinite(p.sigma0):
        bad.append("sigma0")
    for k, s in enumerate(p.sigmas):
        if not math.isfinite(s):
            bad.append(f"sigmas[{k}]")
    if bad:
        raise ParameterError(bad, "invalid parameters: " + ", ".join(bad))
    return p


@dataclass(frozen=True, eq=False)
class SimState:
    """Transformed state ``(u, d)`` at time ``t`` plus reconstruction data.

    ``w_sum`` is the running exponent of ``q`` so that ``q`` can always be
    recomputed by a single exponential; ``z_coeffs`` are the modal
    coefficients of ``z`` when it comes from the modal OU integrator.
    """

    t: float
    u: VectorField2
    d: DirectorField3
    q: float
    z: VectorField2
    lift: DirectorField3
    w_sum: float = 0.0
    z_coeffs: np.ndarray | None = None

    def __post_init__(self):
        if not (self.q > 0 and math.isfinite(self.q)):
            raise FieldError(f"q must be positive and finite, got {self.q}")


# ---------------------------------------------------------------------------
# quadrature

def _face_weights(domain: Domain):
    n = domain.n
    w1 = np.ones((n + 1, n))
    w1[[0, -1], :] = 0.5
    w2 = np.ones((n, n + 1))
    w2[:, [0, -1]] = 0.5
    return w1, w2


def node_weights(domain: Domain) -> np.ndarray:
    """Trapezoid weights on the node grid (1 inside, 1/2 on edges, 1/4 at corners)."""
    w = np.ones(domain.n + 1)
    w[[0, -1]] = 0.5
    return np.outer(w, w)


def inner_h(a, b) -> float:
    """Discrete L2 inner product with ``h^2`` weights.

    Wall-normal velocity faces and boundary nodes carry half weight so that
    constants integrate exactly; for admissible fields those entries vanish
    and this reduces to the plain midpoint sum.
    """
    _check_same(a, b)
    h2 = a.domain.h ** 2
    if isinstance(a, VectorField2):
        w1, w2 = _face_weights(a.domain)
        return float(h2 * (np.sum(w1 * a.u1 * b.u1) + np.sum(w2 * a.u2 * b.u2)))
    w = node_weights(a.domain)
    return float(h2 * np.sum(w * a.values * b.values))


def _derivatives(arr: np.ndarray, h: float, order: int):
    """All mixed partials of a given order (x-derivatives first)."""
    out = []
    for nx_ in range(order, -1, -1):
        ny_ = order - nx_
        g = arr
        for axis, cnt in ((0, nx_), (1, ny_)):
            for _ in range(cnt):
                g = np.gradient(g, h, axis=axis, edge_order=2)
        out.append(g)
    return out


def norm_hm(fld, m: int) -> float:
    """Discrete Sobolev ``H^m`` norm, ``m`` in ``{0, 1, 2, 3}``.

    Derivatives use centered differences inside and second-order one-sided
    differences at the array edges; quadrature matches :func:`inner_h`.
    """
    if m not in (0, 1, 2, 3):
        raise ValueError(f"unsupported Sobolev order m={m}")
    dom = fld.domain
    h = dom.h
    if isinstance(fld, VectorField2):
        w1, w2 = _face_weights(dom)
        pairs = [(fld.u1, w1), (fld.u2, w2)]
    elif isinstance(fld, DirectorField3):
        w = node_weights(dom)
        pairs = [(c, w) for c in fld.values]
    else:
        raise TypeError(f"unsupported field type {type(fld).__name__}")
    total = 0.0
    for arr, w in pairs:
        for k in range(m + 1):
            if k > 0 and min(arr.shape) < 3:
                raise ValueError("grid too small for derivatives")
            for g in _derivatives(arr, h, k):
                total += np.sum(w * g * g)
    return float(math.sqrt(total * h * h))
