"""Per-outlet physics: resistance/inertance coefficients, far-field
pressure signals, and boundary diagnostics.

Each outlet k relates its average pressure to the flux Q_k through

    pbar_k - S_k(t) = (lam_k * Q_k + gam_k * dQ_k/dt) / |Gamma_k|

which `averaged_pressure_residual` evaluates on recorded trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import reference
from .errors import (
    InsufficientHistoryError,
    InvalidParameterError,
    SignalDomainError,
)


class Signal:
    """Time signal with value and first derivative defined on [0, horizon]."""

    horizon = None

    def _check(self, t):
        t = float(t)
        if t < -1e-14 or (self.horizon is not None and t > self.horizon + 1e-14):
            raise SignalDomainError(f"t={t} outside signal domain")
        return t

    def __call__(self, t):
        return self.value(t)


@dataclass
class Constant(Signal):
    level: float

    def value(self, t):
        self._check(t)
        return self.level

    def derivative(self, t):
        self._check(t)
        return 0.0


@dataclass
class Ramp(Signal):
    offset: float
    slope: float

    def value(self, t):
        return self.offset + self.slope * self._check(t)

    def derivative(self, t):
        self._check(t)
        return self.slope


@dataclass
class Sinusoid(Signal):
    amplitude: float
    omega: float
    phase: float = 0.0

    def value(self, t):
        return self.amplitude * math.sin(self.omega * self._check(t) + self.phase)

    def derivative(self, t):
        return (
            self.amplitude
            * self.omega
            * math.cos(self.omega * self._check(t) + self.phase)
        )


@dataclass
class SmoothStep(Signal):
    """C^1 cubic transition from level0 to level1 over [t0, t1]."""

    level0: float
    level1: float
    t0: float
    t1: float

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise InvalidParameterError("smooth step needs t1 > t0")

    def value(self, t):
        t = self._check(t)
        if t <= self.t0:
            return self.level0
        if t >= self.t1:
            return self.level1
        s = (t - self.t0) / (self.t1 - self.t0)
        return self.level0 + (self.level1 - self.level0) * s * s * (3 - 2 * s)

    def derivative(self, t):
        t = self._check(t)
        if t <= self.t0 or t >= self.t1:
            return 0.0
        w = self.t1 - self.t0
        s = (t - self.t0) / w
        return (self.level1 - self.level0) * 6 * s * (1 - s) / w


@dataclass
class Sampled(Signal):
    """Cubic-spline interpolation of a sampled series with monotone knots."""

    times: tuple
    values: tuple
    _spline: object = field(init=False, repr=False, default=None)

    def __post_init__(self):
        from scipy.interpolate import CubicSpline

        t = np.asarray(self.times, dtype=float)
        if len(t) < 2 or np.any(np.diff(t) <= 0):
            raise InvalidParameterError("sampled signal needs strictly increasing knots")
        if t[0] > 1e-14:
            raise InvalidParameterError("sampled signal must start at t = 0")
        self._spline = CubicSpline(t, np.asarray(self.values, dtype=float))
        self.horizon = float(t[-1])

    def value(self, t):
        return float(self._spline(self._check(t)))

    def derivative(self, t):
        return float(self._spline(self._check(t), 1))


@dataclass(frozen=True)
class OutletSpec:
    """Outlet index plus (resistance, inertance, far-field signal)."""

    k: int
    lam: float
    gamma: float
    signal: Signal

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidParameterError(
                f"outlet {self.k}: resistance positivity violated (lambda must be > 0)"
            )
        if not self.gamma > 0:
            raise InvalidParameterError(
                f"outlet {self.k}: inertance positivity violated (gamma must be > 0)"
            )


def _time_derivative(times, values):
    """Second-order finite differences on a (possibly nonuniform) grid."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(t) < 3:
        raise InsufficientHistoryError("need at least 3 snapshots")
    return np.gradient(y, t, edge_order=2)


def averaged_pressure_residual(times, pbar, flux, spec, area):
    """Residual of the averaged-pressure flux law on a recorded series.

    r(t) = (pbar - S(t)) - (lam * Q + gamma * dQ/dt) / area
    """
    times = np.asarray(times, dtype=float)
    qdot = _time_derivative(times, flux)
    s = np.array([spec.signal.value(t) for t in times])
    return (np.asarray(pbar) - s) - (spec.lam * np.asarray(flux) + spec.gamma * qdot) / area


def tangential_traction_residual(space, vfull, k):
    """|integral over Gamma_k of tau . (grad(v) . n)| from the P2 trace."""
    s = reference.EDGE_POINTS_3
    w = reference.EDGE_WEIGHTS_3
    verts = space.mesh.vertices
    tri = space.mesh.triangles
    total = 0.0
    for i, j, _m, tag, length, n, t in space.boundary:
        if tag != k:
            continue
        tau = np.array([-n[1], n[0]])
        a, b, c = tri[t]
        p0 = verts[a]
        jac = np.column_stack([verts[b] - p0, verts[c] - p0])
        inv = np.linalg.inv(jac)
        xq = np.outer(1 - s, verts[i]) + np.outer(s, verts[j])
        ref = (xq - p0) @ inv.T
        dphi = reference.p2_grad(ref)  # (nq, 6, 2) reference gradients
        gphys = np.einsum("ab,qib->qia", inv.T, dphi)
        vdofs = vfull[(2 * space.conn[t][:, None] + np.array([0, 1]))]
        gradv = np.einsum("ic,qia->qca", vdofs, gphys)  # dv_c/dx_a
        integrand = np.einsum("c,qca,a->q", tau, gradv, n)
        total += length * float(w @ integrand)
    return abs(total)
