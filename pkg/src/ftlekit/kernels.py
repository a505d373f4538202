"""FTLE extraction: gradient, Cauchy-Green tensor, max eigenvalue, exponent.

The per-point pipeline is

    jacobian (finite differences over the neighbor table)
      -> Cauchy-Green tensor C = J^T J
      -> largest eigenvalue of C (closed form, dimension-dispatched)
      -> exponent ln(lambda_max) / (2|T|)

and is compiled once as scalar machine code (numba).  Both execution
strategies call the same per-point function in the same expression order, so
the output field is bit-for-bit identical regardless of strategy, worker
count, or chunk size:

* ``SinglePass`` runs one sequential loop over all points on the calling
  thread, written at the whole-problem level.
* ``DataParallel`` partitions the index space into contiguous chunks and
  dispatches them round-robin to a pool of worker threads; every worker
  writes a disjoint slice of the output and the call returns only after all
  workers finish.  The compiled kernels release the GIL, so workers run
  concurrently.

Boundary points use one-sided differences so every point gets a value;
exactness claims (affine maps recovered to machine precision) hold for
interior points, where the stencil is central.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np
from numba import njit

from .core import FlowmapField, FtleField, Jacobian, MeshTopology
from .errors import (
    DegenerateStencilError,
    HorizonError,
    ValidationError,
)

# Below this maximal stretching, ln() is considered meaningless: the point is
# reported as the NaN sentinel and counted, not silently clamped.
DEGENERACY_FLOOR = 1e-30

DEFAULT_CHUNK = 4096


def default_workers() -> int:
    """Logical CPU count, the default data-parallel worker count."""
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SinglePass:
    """Execute the whole index space as one sequential loop."""


@dataclass(frozen=True)
class DataParallel:
    """Execute contiguous chunks of points on a pool of worker threads.

    Attributes:
        workers: thread count, at least 1.
        chunk: points per work unit, at least 1.
    """

    workers: int = 1
    chunk: int = DEFAULT_CHUNK

    def __post_init__(self):
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")
        if self.chunk < 1:
            raise ValidationError(f"chunk must be >= 1, got {self.chunk}")


ExecutionStrategy = Union[SinglePass, DataParallel]


@dataclass(frozen=True, eq=False)
class SymmetricTensor:
    """Symmetric dim x dim matrix; the upper triangle is mirrored on build."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.float64)
        if e.shape != (self.dim, self.dim):
            raise ValidationError(
                f"entries shape {e.shape} != ({self.dim}, {self.dim})"
            )
        if not np.isfinite(e).all():
            raise ValidationError("tensor entries must be finite")
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                e[j, i] = e[i, j]
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)


# ---------------------------------------------------------------------------
# Compiled per-point math.  One source of truth: the public per-point
# operations and both field executors all route through these.
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True, error_model="numpy")
def _eig2_max(a, b, c):
    # Largest root of [[a, b], [b, c]]: (a+c)/2 + sqrt(((a-c)/2)^2 + b^2).
    half_sum = 0.5 * (a + c)
    half_diff = 0.5 * (a - c)
    return half_sum + math.sqrt(half_diff * half_diff + b * b)


@njit(cache=True, nogil=True, error_model="numpy")
def _eig3_max(a00, a01, a02, a11, a12, a22):
    # Trigonometric solution of the characteristic cubic of the deviatoric
    # part.  The acos argument is clamped to [-1, 1] to absorb round-off;
    # nearly-scalar matrices short-circuit to the diagonal mean.
    q = (a00 + a11 + a22) / 3.0
    d0 = a00 - q
    d1 = a11 - q
    d2 = a22 - q
    p1 = a01 * a01 + a02 * a02 + a12 * a12
    p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1
    if p2 <= 1e-300:
        return q
    p = math.sqrt(p2 / 6.0)
    b00 = d0 / p
    b11 = d1 / p
    b22 = d2 / p
    b01 = a01 / p
    b02 = a02 / p
    b12 = a12 / p
    det_b = (
        b00 * (b11 * b22 - b12 * b12)
        - b01 * (b01 * b22 - b12 * b02)
        + b02 * (b01 * b12 - b11 * b02)
    )
    r = 0.5 * det_b
    if r <= -1.0:
        phi = math.pi / 3.0
    elif r >= 1.0:
        phi = 0.0
    else:
        phi = math.acos(r) / 3.0
    return q + 2.0 * p * math.cos(phi)


@njit(cache=True, nogil=True, error_model="numpy")
def _jac2(p, values, coords, fwd, bwd):
    f = fwd[p, 0]
    b = bwd[p, 0]
    if f >= 0 and b >= 0:
        d = coords[f, 0] - coords[b, 0]
        j00 = (values[f, 0] - values[b, 0]) / d
        j10 = (values[f, 1] - values[b, 1]) / d
    elif f >= 0:
        d = coords[f, 0] - coords[p, 0]
        j00 = (values[f, 0] - values[p, 0]) / d
        j10 = (values[f, 1] - values[p, 1]) / d
    elif b >= 0:
        d = coords[b, 0] - coords[p, 0]
        j00 = (values[b, 0] - values[p, 0]) / d
        j10 = (values[b, 1] - values[p, 1]) / d
    else:
        j00 = math.nan
        j10 = math.nan
    f = fwd[p, 1]
    b = bwd[p, 1]
    if f >= 0 and b >= 0:
        d = coords[f, 1] - coords[b, 1]
        j01 = (values[f, 0] - values[b, 0]) / d
        j11 = (values[f, 1] - values[b, 1]) / d
    elif f >= 0:
        d = coords[f, 1] - coords[p, 1]
        j01 = (values[f, 0] - values[p, 0]) / d
        j11 = (values[f, 1] - values[p, 1]) / d
    elif b >= 0:
        d = coords[b, 1] - coords[p, 1]
        j01 = (values[b, 0] - values[p, 0]) / d
        j11 = (values[b, 1] - values[p, 1]) / d
    else:
        j01 = math.nan
        j11 = math.nan
    return j00, j01, j10, j11


@njit(cache=True, nogil=True, error_model="numpy")
def _jac3(p, values, coords, fwd, bwd):
    j00 = j01 = j02 = math.nan
    j10 = j11 = j12 = math.nan
    j20 = j21 = j22 = math.nan
    for a in range(3):
        f = fwd[p, a]
        b = bwd[p, a]
        if f >= 0 and b >= 0:
            d = coords[f, a] - coords[b, a]
            c0 = (values[f, 0] - values[b, 0]) / d
            c1 = (values[f, 1] - values[b, 1]) / d
            c2 = (values[f, 2] - values[b, 2]) / d
        elif f >= 0:
            d = coords[f, a] - coords[p, a]
            c0 = (values[f, 0] - values[p, 0]) / d
            c1 = (values[f, 1] - values[p, 1]) / d
            c2 = (values[f, 2] - values[p, 2]) / d
        elif b >= 0:
            d = coords[b, a] - coords[p, a]
            c0 = (values[b, 0] - values[p, 0]) / d
            c1 = (values[b, 1] - values[p, 1]) / d
            c2 = (values[b, 2] - values[p, 2]) / d
        else:
            c0 = c1 = c2 = math.nan
        if a == 0:
            j00, j10, j20 = c0, c1, c2
        elif a == 1:
            j01, j11, j21 = c0, c1, c2
        else:
            j02, j12, j22 = c0, c1, c2
    return j00, j01, j02, j10, j11, j12, j20, j21, j22


@njit(cache=True, nogil=True, error_model="numpy")
def _ftle_point_2d(p, values, coords, fwd, bwd, two_abs_t):
    j00, j01, j10, j11 = _jac2(p, values, coords, fwd, bwd)
    c00 = j00 * j00 + j10 * j10
    c01 = j00 * j01 + j10 * j11
    c11 = j01 * j01 + j11 * j11
    lam = _eig2_max(c00, c01, c11)
    if lam >= DEGENERACY_FLOOR and lam < math.inf:
        return math.log(lam) / two_abs_t
    return math.nan


@njit(cache=True, nogil=True, error_model="numpy")
def _ftle_point_3d(p, values, coords, fwd, bwd, two_abs_t):
    j00, j01, j02, j10, j11, j12, j20, j21, j22 = _jac3(p, values, coords, fwd, bwd)
    c00 = j00 * j00 + j10 * j10 + j20 * j20
    c01 = j00 * j01 + j10 * j11 + j20 * j21
    c02 = j00 * j02 + j10 * j12 + j20 * j22
    c11 = j01 * j01 + j11 * j11 + j21 * j21
    c12 = j01 * j02 + j11 * j12 + j21 * j22
    c22 = j02 * j02 + j12 * j12 + j22 * j22
    lam = _eig3_max(c00, c01, c02, c11, c12, c22)
    if lam >= DEGENERACY_FLOOR and lam < math.inf:
        return math.log(lam) / two_abs_t
    return math.nan


@njit(cache=True, nogil=True, error_model="numpy")
def _run_chunks_2d(values, coords, fwd, bwd, two_abs_t, out, first_chunk, stride, chunk, n):
    # Processes chunks first_chunk, first_chunk+stride, ... of size `chunk`.
    # Returns the degenerate-point count for the processed range.
    ndeg = 0
    nchunks = (n + chunk - 1) // chunk
    for ci in range(first_chunk, nchunks, stride):
        start = ci * chunk
        stop = min(start + chunk, n)
        for p in range(start, stop):
            v = _ftle_point_2d(p, values, coords, fwd, bwd, two_abs_t)
            out[p] = v
            if v != v:
                ndeg += 1
    return ndeg


@njit(cache=True, nogil=True, error_model="numpy")
def _run_chunks_3d(values, coords, fwd, bwd, two_abs_t, out, first_chunk, stride, chunk, n):
    ndeg = 0
    nchunks = (n + chunk - 1) // chunk
    for ci in range(first_chunk, nchunks, stride):
        start = ci * chunk
        stop = min(start + chunk, n)
        for p in range(start, stop):
            v = _ftle_point_3d(p, values, coords, fwd, bwd, two_abs_t)
            out[p] = v
            if v != v:
                ndeg += 1
    return ndeg


# ---------------------------------------------------------------------------
# Public per-point operations.
# ---------------------------------------------------------------------------


def flowmap_gradient(field: FlowmapField, mesh: MeshTopology, point: int) -> Jacobian:
    """Finite-difference jacobian of the flowmap at one point.

    Central differences where both neighbors exist, one-sided at boundaries.
    Entry (i, j) is d(phi_i)/d(x_j).

    Raises:
        DegenerateStencilError: the point has no neighbor on some axis.
        ValidationError: field/mesh mismatch or out-of-range point.
    """
    _check_pair(field, mesh)
    if not 0 <= point < mesh.npoints:
        raise ValidationError(f"point {point} out of range [0, {mesh.npoints})")
    for axis in range(mesh.dim):
        if mesh.forward[point, axis] < 0 and mesh.backward[point, axis] < 0:
            raise DegenerateStencilError(point, axis)
    if mesh.dim == 2:
        j00, j01, j10, j11 = _jac2(
            point, field.values, mesh.coords, mesh.forward, mesh.backward
        )
        entries = np.array([[j00, j01], [j10, j11]])
    else:
        e = _jac3(point, field.values, mesh.coords, mesh.forward, mesh.backward)
        entries = np.array(e).reshape(3, 3)
    return Jacobian(dim=mesh.dim, entries=entries)


def cauchy_green(jacobian: Jacobian) -> SymmetricTensor:
    """Deformation tensor C = J^T J, exactly symmetric by construction."""
    j = jacobian.entries
    dim = jacobian.dim
    entries = np.empty((dim, dim), dtype=np.float64)
    for a in range(dim):
        for b in range(a, dim):
            s = j[0, a] * j[0, b]
            for k in range(1, dim):
                s += j[k, a] * j[k, b]
            entries[a, b] = s
            entries[b, a] = s
    return SymmetricTensor(dim=dim, entries=entries)


def max_eigenvalue_sym2(tensor: SymmetricTensor) -> float:
    """Largest eigenvalue of a symmetric 2x2 tensor (closed form, exact)."""
    if tensor.dim != 2:
        raise ValidationError(f"expected dim 2, got {tensor.dim}")
    e = tensor.entries
    return float(_eig2_max(e[0, 0], e[0, 1], e[1, 1]))


def max_eigenvalue_sym3(tensor: SymmetricTensor) -> float:
    """Largest eigenvalue of a symmetric 3x3 tensor (trigonometric form).

    The result satisfies |det(S - lam*I)| <= 1e-8 * max(1, ||S||_F^3).
    """
    if tensor.dim != 3:
        raise ValidationError(f"expected dim 3, got {tensor.dim}")
    e = tensor.entries
    return float(_eig3_max(e[0, 0], e[0, 1], e[0, 2], e[1, 1], e[1, 2], e[2, 2]))


def max_eigenvalue(tensor: SymmetricTensor) -> float:
    """Dimension-dispatched largest eigenvalue."""
    if tensor.dim == 2:
        return max_eigenvalue_sym2(tensor)
    return max_eigenvalue_sym3(tensor)


def ftle_point(lambda_max: float, T: float) -> float:
    """Exponent from one maximal stretching value: ln(lambda_max) / (2|T|).

    Backward-time fields (T < 0) use |T|, so the exponent is sign-symmetric
    in the horizon.  Below the degeneracy floor the NaN sentinel is returned
    and the caller is expected to count the point as degenerate.

    Raises:
        HorizonError: T is zero.
    """
    if T == 0.0:
        raise HorizonError("integration horizon must be nonzero")
    if lambda_max >= DEGENERACY_FLOOR and lambda_max < math.inf:
        return math.log(lambda_max) / (2.0 * abs(T))
    return math.nan


# ---------------------------------------------------------------------------
# Field executor.
# ---------------------------------------------------------------------------


def _check_pair(field: FlowmapField, mesh: MeshTopology) -> None:
    if field.dim != mesh.dim:
        raise ValidationError(
            f"dimension mismatch: field {field.dim}, mesh {mesh.dim}"
        )
    if field.npoints != mesh.npoints:
        raise ValidationError(
            f"point count mismatch: field {field.npoints}, mesh {mesh.npoints}"
        )


def compute_ftle_field(
    field: FlowmapField,
    mesh: MeshTopology,
    strategy: ExecutionStrategy = SinglePass(),
) -> FtleField:
    """Compute the full FTLE field under the chosen execution strategy.

    Every point runs gradient -> Cauchy-Green -> max eigenvalue -> exponent
    in a fixed expression order, so the output is bit-for-bit identical
    across strategies, worker counts, and chunk sizes.  Points are
    independent; workers never communicate.

    The flowmap is assumed validated (see :func:`ftlekit.core.validate_flowmap`);
    non-finite inputs propagate to NaN outputs and are counted as degenerate.

    Raises:
        HorizonError: zero horizon.
        DegenerateStencilError: some point has an axis with no neighbors.
        ValidationError: field/mesh mismatch or unknown strategy.
    """
    _check_pair(field, mesh)
    if field.T == 0.0:
        raise HorizonError("integration horizon must be nonzero")
    iso = mesh.first_isolated
    if iso is not None:
        raise DegenerateStencilError(*iso)

    n = mesh.npoints
    two_abs_t = 2.0 * abs(field.T)
    out = np.empty(n, dtype=np.float64)
    kernel = _run_chunks_2d if mesh.dim == 2 else _run_chunks_3d
    args = (field.values, mesh.coords, mesh.forward, mesh.backward, two_abs_t, out)

    if isinstance(strategy, SinglePass):
        ndeg = kernel(*args, 0, 1, max(n, 1), n)
    elif isinstance(strategy, DataParallel):
        w = strategy.workers
        if w == 1:
            ndeg = kernel(*args, 0, 1, strategy.chunk, n)
        else:
            with ThreadPoolExecutor(max_workers=w) as pool:
                futures = [
                    pool.submit(kernel, *args, first, w, strategy.chunk, n)
                    for first in range(w)
                ]
                ndeg = sum(f.result() for f in futures)
    else:
        raise ValidationError(f"unknown execution strategy: {strategy!r}")

    return FtleField(dim=mesh.dim, npoints=n, values=out, degenerate_count=int(ndeg))
