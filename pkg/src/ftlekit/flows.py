"""Analytic test flows and an RK4 particle advector for building flowmaps.

The flowmap of a velocity field sends each seed position at time t0 to its
advected position at t0+T.  This module fabricates such inputs for the FTLE
kernels; it is deliberately simple plumbing around four classic fields:

* ``DoubleGyre`` -- the standard time-periodic 2D benchmark flow on
  [0, 2] x [0, 1].  With the stream function
  ``f(x, t) = eps*sin(omega*t)*x^2 + (1 - 2*eps*sin(omega*t))*x`` the
  velocity is ``u = -pi*A*sin(pi*f)*cos(pi*y)`` and
  ``v = pi*A*cos(pi*f)*sin(pi*y)*df/dx``.  In 3D the gyre is extruded: the
  planar components are unchanged and the z-velocity is zero.
* ``ABCFlow`` -- the steady 3D Arnold-Beltrami-Childress field
  ``u = A sin z + C cos y``, ``v = B sin x + A cos z``,
  ``w = C sin y + B cos x``.
* ``Identity`` -- zero velocity everywhere.
* ``ConstantDrift`` -- a uniform velocity vector.

Advection is classical 4th-order Runge-Kutta with a fixed step; when the
horizon is not an integer multiple of the step, the final step is shortened
to land exactly on t0+T.  Single-particle advection and whole-field
generation share the same compiled per-particle routine, so
``generate_flowmap(mesh, ...)[p] == advect_rk4(coords[p], ...)`` bit for bit
and repeated generation is bit-identical.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import numba
from numba import njit, prange

from .core import FlowmapField, MeshTopology
from .errors import DomainError, ValidationError

# The portable threading layer is plenty for the advection loops and skips
# the noisy TBB probe; an explicit NUMBA_THREADING_LAYER still wins.
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"

# Positions may drift past the gyre walls by round-off (the wall-normal
# velocity vanishes only to machine precision); tolerate that much.
DOMAIN_SLACK = 1e-9

DOUBLE_GYRE_DOMAIN = ((0.0, 2.0), (0.0, 1.0))


@dataclass(frozen=True)
class DoubleGyre:
    """Time-periodic double gyre; defaults are the standard benchmark set."""

    amplitude: float = 0.1
    epsilon: float = 0.25
    omega: float = 2.0 * math.pi / 10.0


@dataclass(frozen=True)
class ABCFlow:
    """Steady ABC flow with the classical coefficients by default."""

    a: float = math.sqrt(3.0)
    b: float = math.sqrt(2.0)
    c: float = 1.0


@dataclass(frozen=True)
class Identity:
    """Zero velocity; the flowmap is the identity."""


@dataclass(frozen=True)
class ConstantDrift:
    """Uniform velocity; the flowmap is a rigid translation by velocity*T."""

    velocity: tuple[float, ...]


FlowSpec = Union[DoubleGyre, ABCFlow, Identity, ConstantDrift]


def default_domain(spec: FlowSpec, dim: int) -> tuple[tuple[float, float], ...]:
    """Natural axis-aligned domain for seeding a flow's grid."""
    if dim not in (2, 3):
        raise ValidationError(f"dimension must be 2 or 3, got {dim}")
    if isinstance(spec, DoubleGyre):
        return DOUBLE_GYRE_DOMAIN + (((0.0, 1.0),) if dim == 3 else ())
    if isinstance(spec, ABCFlow):
        if dim != 3:
            raise ValidationError("the ABC flow is three-dimensional")
        return ((0.0, 2.0 * math.pi),) * 3
    return ((0.0, 1.0),) * dim


# ---------------------------------------------------------------------------
# Compiled per-particle routines.
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True, error_model="numpy")
def _dg_vel(x, y, t, amp, eps, om):
    s = math.sin(om * t)
    a = eps * s
    b = 1.0 - 2.0 * a
    f = a * x * x + b * x
    dfdx = 2.0 * a * x + b
    u = -math.pi * amp * math.sin(math.pi * f) * math.cos(math.pi * y)
    v = math.pi * amp * math.cos(math.pi * f) * math.sin(math.pi * y) * dfdx
    return u, v


@njit(cache=True, nogil=True, error_model="numpy")
def _abc_vel(x, y, z, a, b, c):
    u = a * math.sin(z) + c * math.cos(y)
    v = b * math.sin(x) + a * math.cos(z)
    w = c * math.sin(y) + b * math.cos(x)
    return u, v, w


@njit(cache=True, nogil=True, error_model="numpy")
def _advect_dg2(x0, y0, t0, T, dt, nsteps, amp, eps, om):
    # Returns (x, y, exit_step); exit_step is -1 when the trajectory stayed
    # inside [0,2]x[0,1] (up to round-off slack) for every completed step.
    x = x0
    y = y0
    for i in range(nsteps):
        h = dt if i < nsteps - 1 else T - (nsteps - 1) * dt
        t = t0 + i * dt
        k1x, k1y = _dg_vel(x, y, t, amp, eps, om)
        k2x, k2y = _dg_vel(x + 0.5 * h * k1x, y + 0.5 * h * k1y, t + 0.5 * h, amp, eps, om)
        k3x, k3y = _dg_vel(x + 0.5 * h * k2x, y + 0.5 * h * k2y, t + 0.5 * h, amp, eps, om)
        k4x, k4y = _dg_vel(x + h * k3x, y + h * k3y, t + h, amp, eps, om)
        x = x + h * ((k1x + 2.0 * (k2x + k3x) + k4x) / 6.0)
        y = y + h * ((k1y + 2.0 * (k2y + k3y) + k4y) / 6.0)
        if (
            x < -DOMAIN_SLACK
            or x > 2.0 + DOMAIN_SLACK
            or y < -DOMAIN_SLACK
            or y > 1.0 + DOMAIN_SLACK
        ):
            return x, y, i
    return x, y, -1


@njit(cache=True, nogil=True, error_model="numpy")
def _advect_abc(x0, y0, z0, t0, T, dt, nsteps, a, b, c):
    x = x0
    y = y0
    z = z0
    for i in range(nsteps):
        h = dt if i < nsteps - 1 else T - (nsteps - 1) * dt
        k1x, k1y, k1z = _abc_vel(x, y, z, a, b, c)
        k2x, k2y, k2z = _abc_vel(x + 0.5 * h * k1x, y + 0.5 * h * k1y, z + 0.5 * h * k1z, a, b, c)
        k3x, k3y, k3z = _abc_vel(x + 0.5 * h * k2x, y + 0.5 * h * k2y, z + 0.5 * h * k2z, a, b, c)
        k4x, k4y, k4z = _abc_vel(x + h * k3x, y + h * k3y, z + h * k3z, a, b, c)
        x = x + h * ((k1x + 2.0 * (k2x + k3x) + k4x) / 6.0)
        y = y + h * ((k1y + 2.0 * (k2y + k3y) + k4y) / 6.0)
        z = z + h * ((k1z + 2.0 * (k2z + k3z) + k4z) / 6.0)
    return x, y, z


@njit(cache=True, nogil=True, error_model="numpy")
def _advect_drift(x0, c, T, dt, nsteps):
    # One scalar component; RK4 for a constant field reduces to x + h*c.
    x = x0
    for i in range(nsteps):
        h = dt if i < nsteps - 1 else T - (nsteps - 1) * dt
        x = x + h * ((c + 2.0 * (c + c) + c) / 6.0)
    return x


@njit(cache=True, parallel=True, error_model="numpy")
def _flowmap_dg(coords, out, exit_step, t0, T, dt, nsteps, amp, eps, om):
    # 2D and 3D (extruded) double gyre; the z column, when present, is passive.
    n = coords.shape[0]
    dim = coords.shape[1]
    for p in prange(n):
        x, y, es = _advect_dg2(coords[p, 0], coords[p, 1], t0, T, dt, nsteps, amp, eps, om)
        out[p, 0] = x
        out[p, 1] = y
        if dim == 3:
            out[p, 2] = coords[p, 2]
        exit_step[p] = es


@njit(cache=True, parallel=True, error_model="numpy")
def _flowmap_abc(coords, out, t0, T, dt, nsteps, a, b, c):
    n = coords.shape[0]
    for p in prange(n):
        x, y, z = _advect_abc(
            coords[p, 0], coords[p, 1], coords[p, 2], t0, T, dt, nsteps, a, b, c
        )
        out[p, 0] = x
        out[p, 1] = y
        out[p, 2] = z


@njit(cache=True, parallel=True, error_model="numpy")
def _flowmap_drift(coords, out, vel, T, dt, nsteps):
    n = coords.shape[0]
    dim = coords.shape[1]
    for p in prange(n):
        for a in range(dim):
            out[p, a] = _advect_drift(coords[p, a], vel[a], T, dt, nsteps)


# ---------------------------------------------------------------------------
# Public operations.
# ---------------------------------------------------------------------------


def _spec_dim(spec: FlowSpec, x_len: int) -> int:
    if isinstance(spec, ABCFlow):
        if x_len != 3:
            raise ValidationError("the ABC flow needs 3D positions")
        return 3
    if isinstance(spec, ConstantDrift):
        if len(spec.velocity) != x_len:
            raise ValidationError(
                f"drift velocity has {len(spec.velocity)} components, position has {x_len}"
            )
    if x_len not in (2, 3):
        raise ValidationError(f"position must have 2 or 3 components, got {x_len}")
    return x_len


def _check_gyre_domain(x: float, y: float) -> None:
    if not (
        -DOMAIN_SLACK <= x <= 2.0 + DOMAIN_SLACK
        and -DOMAIN_SLACK <= y <= 1.0 + DOMAIN_SLACK
    ):
        raise DomainError(
            f"position ({x}, {y}) lies outside the double-gyre domain [0,2]x[0,1]"
        )


def velocity(spec: FlowSpec, x: Sequence[float], t: float) -> np.ndarray:
    """Velocity of the flow at position ``x`` and time ``t``.

    Raises:
        DomainError: double-gyre query outside [0,2]x[0,1] (never clamped).
    """
    x = np.asarray(x, dtype=np.float64)
    dim = _spec_dim(spec, x.shape[0] if x.ndim == 1 else 0)
    if isinstance(spec, Identity):
        return np.zeros(dim)
    if isinstance(spec, ConstantDrift):
        return np.array(spec.velocity, dtype=np.float64)
    if isinstance(spec, DoubleGyre):
        _check_gyre_domain(x[0], x[1])
        u, v = _dg_vel(x[0], x[1], t, spec.amplitude, spec.epsilon, spec.omega)
        return np.array([u, v]) if dim == 2 else np.array([u, v, 0.0])
    u, v, w = _abc_vel(x[0], x[1], x[2], spec.a, spec.b, spec.c)
    return np.array([u, v, w])


def step_count(T: float, dt: float) -> int:
    """Number of RK4 steps covering the horizon; the last may be partial.

    Raises:
        ValidationError: zero step or a step whose sign disagrees with T.
    """
    if dt == 0.0 or not math.isfinite(dt):
        raise ValidationError("step dt must be nonzero and finite")
    if T == 0.0 or not math.isfinite(T):
        raise ValidationError("horizon T must be nonzero and finite")
    if (T > 0) != (dt > 0):
        raise ValidationError(f"sign of dt ({dt}) must match sign of T ({T})")
    ratio = T / dt
    full = int(math.floor(ratio + 1e-9))
    if ratio - full > 1e-9:
        full += 1
    return max(full, 1)


def advect_rk4(
    spec: FlowSpec,
    x0: Sequence[float],
    t0: float,
    T: float,
    dt: float,
) -> np.ndarray:
    """Advect one particle from ``x0`` over the horizon with RK4.

    Raises:
        DomainError: the trajectory left the double-gyre domain (the message
            carries the step index); other flows are unbounded.
        ValidationError: bad step/horizon combination.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    dim = _spec_dim(spec, x0.shape[0] if x0.ndim == 1 else 0)
    nsteps = step_count(T, dt)
    if isinstance(spec, Identity):
        return x0.copy()
    if isinstance(spec, ConstantDrift):
        return np.array(
            [_advect_drift(x0[a], spec.velocity[a], T, dt, nsteps) for a in range(dim)]
        )
    if isinstance(spec, DoubleGyre):
        _check_gyre_domain(x0[0], x0[1])
        x, y, exit_step = _advect_dg2(
            x0[0], x0[1], t0, T, dt, nsteps, spec.amplitude, spec.epsilon, spec.omega
        )
        if exit_step >= 0:
            raise DomainError(
                f"trajectory left the double-gyre domain at step {exit_step}",
                step=int(exit_step),
            )
        return np.array([x, y]) if dim == 2 else np.array([x, y, x0[2]])
    x, y, z = _advect_abc(x0[0], x0[1], x0[2], t0, T, dt, nsteps, spec.a, spec.b, spec.c)
    return np.array([x, y, z])


def generate_flowmap(
    mesh: MeshTopology,
    spec: FlowSpec,
    t0: float,
    T: float,
    dt: float,
) -> FlowmapField:
    """Advect every mesh point and package the result as a flowmap.

    Deterministic: equal inputs give bit-identical fields, and each value
    equals the corresponding single-particle :func:`advect_rk4` result.
    Points may be advected concurrently; results do not depend on scheduling.

    Raises:
        DomainError: a seed is outside, or a trajectory exits, the
            double-gyre domain (carries point index and step).
    """
    nsteps = step_count(T, dt)
    if isinstance(spec, Identity):
        return FlowmapField(
            dim=mesh.dim, npoints=mesh.npoints, values=mesh.coords.copy(), t0=t0, T=T
        )
    out = np.empty((mesh.npoints, mesh.dim), dtype=np.float64)
    if isinstance(spec, ConstantDrift):
        if len(spec.velocity) != mesh.dim:
            raise ValidationError(
                f"drift velocity has {len(spec.velocity)} components, mesh is {mesh.dim}D"
            )
        vel = np.array(spec.velocity, dtype=np.float64)
        _flowmap_drift(mesh.coords, out, vel, T, dt, nsteps)
    elif isinstance(spec, DoubleGyre):
        x = mesh.coords[:, 0]
        y = mesh.coords[:, 1]
        outside = (
            (x < -DOMAIN_SLACK)
            | (x > 2.0 + DOMAIN_SLACK)
            | (y < -DOMAIN_SLACK)
            | (y > 1.0 + DOMAIN_SLACK)
        )
        if outside.any():
            p = int(np.flatnonzero(outside)[0])
            raise DomainError(
                f"seed point {p} lies outside the double-gyre domain", point=p
            )
        exit_step = np.empty(mesh.npoints, dtype=np.int64)
        _flowmap_dg(
            mesh.coords, out, exit_step, t0, T, dt, nsteps,
            spec.amplitude, spec.epsilon, spec.omega,
        )
        exited = exit_step >= 0
        if exited.any():
            p = int(np.flatnonzero(exited)[0])
            raise DomainError(
                f"trajectory of point {p} left the double-gyre domain "
                f"at step {int(exit_step[p])}",
                point=p,
                step=int(exit_step[p]),
            )
    elif isinstance(spec, ABCFlow):
        if mesh.dim != 3:
            raise ValidationError("the ABC flow needs a 3D mesh")
        _flowmap_abc(mesh.coords, out, t0, T, dt, nsteps, spec.a, spec.b, spec.c)
    else:
        raise ValidationError(f"unknown flow spec: {spec!r}")
    return FlowmapField(dim=mesh.dim, npoints=mesh.npoints, values=out, t0=t0, T=T)
