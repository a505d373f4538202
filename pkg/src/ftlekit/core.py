"""Domain types for meshes, flowmaps, and FTLE fields.

A mesh is a set of seed points plus, for every point and axis, an optional
forward and backward neighbor index.  Structured grids derive the neighbor
table from their shape; unstructured meshes carry an explicit table (for
example one loaded from a file).  Gradient stencils in :mod:`ftlekit.kernels`
are driven purely by this table, so both kinds go through the same code path.

Point ordering is canonical and row-major with the last axis fastest: on a
``(n0, n1)`` grid, point ``p`` has grid indices ``(p // n1, p % n1)``.  All
executors and file formats agree on this layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ValidationError

STRUCTURED = "structured"
UNSTRUCTURED = "unstructured"

# Central differences need at least one interior point per axis.
MIN_AXIS_POINTS = 3


def _as_readonly(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=dtype)
    if out is arr:
        out = arr.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class MeshTopology:
    """Seed-point coordinates plus the per-axis neighbor table.

    Attributes:
        dim: spatial dimension, 2 or 3.
        npoints: number of seed points.
        coords: (npoints, dim) float64 positions, read-only.
        forward: (npoints, dim) int64 forward-neighbor indices, -1 when absent.
        backward: (npoints, dim) int64 backward-neighbor indices, -1 when absent.
        kind: ``"structured"`` or ``"unstructured"``.
        dims, spacing, origin: per-axis shape parameters, structured only.

    Instances are immutable after construction (arrays are write-protected)
    and safe to share across concurrent readers.
    """

    dim: int
    npoints: int
    coords: np.ndarray
    forward: np.ndarray
    backward: np.ndarray
    kind: str = UNSTRUCTURED
    dims: tuple[int, ...] | None = None
    spacing: tuple[float, ...] | None = None
    origin: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValidationError(f"dimension must be 2 or 3, got {self.dim}")
        if self.coords.shape != (self.npoints, self.dim):
            raise ValidationError(
                f"coords shape {self.coords.shape} != ({self.npoints}, {self.dim})"
            )
        for name in ("forward", "backward"):
            nbr = getattr(self, name)
            if nbr.shape != (self.npoints, self.dim):
                raise ValidationError(
                    f"{name} shape {nbr.shape} != ({self.npoints}, {self.dim})"
                )
            if nbr.size and (nbr.max() >= self.npoints or nbr.min() < -1):
                bad = int(np.flatnonzero((nbr >= self.npoints) | (nbr < -1))[0])
                raise ValidationError(
                    f"{name} neighbor index out of range [0, {self.npoints}) "
                    f"at point {bad // self.dim}, axis {bad % self.dim}"
                )
        object.__setattr__(self, "coords", _as_readonly(self.coords, np.float64))
        object.__setattr__(self, "forward", _as_readonly(self.forward, np.int64))
        object.__setattr__(self, "backward", _as_readonly(self.backward, np.int64))

    @property
    def structured(self) -> bool:
        return self.kind == STRUCTURED

    @cached_property
    def first_isolated(self) -> tuple[int, int] | None:
        """First (point, axis) with neither neighbor, or None if none exists."""
        iso = (self.forward < 0) & (self.backward < 0)
        flat = np.flatnonzero(iso)
        if flat.size == 0:
            return None
        return int(flat[0]) // self.dim, int(flat[0]) % self.dim

    def neighbor(self, point: int, axis: int) -> tuple[int | None, int | None]:
        """(forward, backward) neighbor indices of a point along an axis."""
        f = int(self.forward[point, axis])
        b = int(self.backward[point, axis])
        return (f if f >= 0 else None, b if b >= 0 else None)

    def as_unstructured(self) -> "MeshTopology":
        """Same points and neighbor relation, without the structured metadata."""
        return MeshTopology(
            dim=self.dim,
            npoints=self.npoints,
            coords=self.coords,
            forward=self.forward,
            backward=self.backward,
            kind=UNSTRUCTURED,
        )


@dataclass(frozen=True, eq=False)
class FlowmapField:
    """Final particle positions for every seed point of a mesh.

    ``values[p]`` is the advected position of seed point ``p`` after
    integrating over the (signed) horizon ``T`` starting at ``t0``.
    Construction checks shapes only; use :func:`validate_flowmap` to check
    value finiteness and a nonzero horizon.
    """

    dim: int
    npoints: int
    values: np.ndarray
    t0: float
    T: float

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValidationError(f"dimension must be 2 or 3, got {self.dim}")
        if self.values.shape != (self.npoints, self.dim):
            raise ValidationError(
                f"values shape {self.values.shape} != ({self.npoints}, {self.dim})"
            )
        object.__setattr__(self, "values", _as_readonly(self.values, np.float64))


@dataclass(frozen=True, eq=False)
class FtleField:
    """One exponent per seed point, in units of 1/time.

    Points whose maximal stretching fell below the degeneracy floor carry the
    NaN sentinel and are counted in ``degenerate_count``.
    """

    dim: int
    npoints: int
    values: np.ndarray
    degenerate_count: int = 0

    def __post_init__(self):
        if self.values.shape != (self.npoints,):
            raise ValidationError(
                f"values shape {self.values.shape} != ({self.npoints},)"
            )
        object.__setattr__(self, "values", _as_readonly(self.values, np.float64))


@dataclass(frozen=True, eq=False)
class Jacobian:
    """Flowmap gradient at one point: entries[i, j] = d(phi_i)/d(x_j)."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        if self.entries.shape != (self.dim, self.dim):
            raise ValidationError(
                f"entries shape {self.entries.shape} != ({self.dim}, {self.dim})"
            )
        if not np.isfinite(self.entries).all():
            raise ValidationError("jacobian entries must be finite")
        object.__setattr__(self, "entries", _as_readonly(self.entries, np.float64))


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a diagnostics pass: ok flag plus human-readable violations."""

    ok: bool
    violations: tuple[str, ...] = field(default_factory=tuple)


def make_structured_grid(
    dims: Sequence[int],
    spacing: Sequence[float],
    origin: Sequence[float],
) -> MeshTopology:
    """Build a 2D or 3D structured grid with auto-derived neighbor table.

    Point ``p`` with grid indices ``(i_0, ..., i_{d-1})`` (row-major, last
    axis fastest) sits at ``origin[a] + i_a * spacing[a]`` along each axis.
    Interior points get both neighbors along every axis; points on a boundary
    face lack the neighbor that would cross it.

    Args:
        dims: per-axis point counts, each at least 3.
        spacing: per-axis step, each strictly positive and finite.
        origin: per-axis offset of point (0, ..., 0).

    Raises:
        ValidationError: dimension not 2 or 3, any count below 3, or a
            non-positive step.
    """
    dims = tuple(int(d) for d in dims)
    dim = len(dims)
    if dim not in (2, 3):
        raise ValidationError(f"dimension must be 2 or 3, got {dim}")
    if len(spacing) != dim or len(origin) != dim:
        raise ValidationError("dims, spacing, and origin must have equal length")
    if any(d < MIN_AXIS_POINTS for d in dims):
        raise ValidationError(
            f"every axis needs at least {MIN_AXIS_POINTS} points, got {dims}"
        )
    spacing = tuple(float(s) for s in spacing)
    origin = tuple(float(o) for o in origin)
    if any(not math.isfinite(s) or s <= 0.0 for s in spacing):
        raise ValidationError(f"spacing must be positive and finite, got {spacing}")
    if any(not math.isfinite(o) for o in origin):
        raise ValidationError(f"origin must be finite, got {origin}")

    npoints = 1
    for d in dims:
        npoints *= d

    index = np.unravel_index(np.arange(npoints), dims)  # C order, last axis fastest
    coords = np.empty((npoints, dim), dtype=np.float64)
    for a in range(dim):
        coords[:, a] = origin[a] + index[a] * spacing[a]

    strides = [1] * dim
    for a in range(dim - 2, -1, -1):
        strides[a] = strides[a + 1] * dims[a + 1]

    pts = np.arange(npoints, dtype=np.int64)
    forward = np.full((npoints, dim), -1, dtype=np.int64)
    backward = np.full((npoints, dim), -1, dtype=np.int64)
    for a in range(dim):
        interior_fwd = index[a] < dims[a] - 1
        interior_bwd = index[a] > 0
        forward[interior_fwd, a] = pts[interior_fwd] + strides[a]
        backward[interior_bwd, a] = pts[interior_bwd] - strides[a]

    return MeshTopology(
        dim=dim,
        npoints=npoints,
        coords=coords,
        forward=forward,
        backward=backward,
        kind=STRUCTURED,
        dims=dims,
        spacing=spacing,
        origin=origin,
    )


def make_unstructured_mesh(
    coords: np.ndarray,
    forward: np.ndarray,
    backward: np.ndarray,
) -> MeshTopology:
    """Wrap an explicit neighbor table (e.g. from a file) as a topology.

    Index-range checks happen at construction; call :func:`validate_topology`
    for the geometric checks (stencil denominators, optional symmetry).
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] not in (2, 3):
        raise ValidationError(f"coords must be (npoints, 2|3), got {coords.shape}")
    npoints, dim = coords.shape
    return MeshTopology(
        dim=dim,
        npoints=npoints,
        coords=coords,
        forward=np.asarray(forward, dtype=np.int64),
        backward=np.asarray(backward, dtype=np.int64),
        kind=UNSTRUCTURED,
    )


def validate_topology(mesh: MeshTopology, require_symmetry: bool = False) -> None:
    """Reject neighbor tables that would break gradient stencils.

    Checks, per axis: interior points (both neighbors) must satisfy
    ``coords[forward] - coords[backward] > 0`` along that axis; one-sided
    points must have a nonzero coordinate difference to their single
    neighbor.  With ``require_symmetry``, ``forward(p) = q`` must imply
    ``backward(q) = p`` and vice versa.

    Raises:
        ValidationError: first violation found, naming point and axis.
    """
    pts = np.arange(mesh.npoints, dtype=np.int64)
    for a in range(mesh.dim):
        f = mesh.forward[:, a]
        b = mesh.backward[:, a]
        both = (f >= 0) & (b >= 0)
        if both.any():
            span = mesh.coords[f[both], a] - mesh.coords[b[both], a]
            bad = np.flatnonzero(span <= 0.0)
            if bad.size:
                p = int(pts[both][bad[0]])
                raise ValidationError(
                    f"axis {a} span is not strictly positive at point {p}"
                )
        for name, nbr, only in (
            ("forward", f, (f >= 0) & (b < 0)),
            ("backward", b, (b >= 0) & (f < 0)),
        ):
            if only.any():
                diff = mesh.coords[nbr[only], a] - mesh.coords[only.nonzero()[0], a]
                bad = np.flatnonzero(diff == 0.0)
                if bad.size:
                    p = int(pts[only][bad[0]])
                    raise ValidationError(
                        f"one-sided {name} stencil has zero width at point {p}, axis {a}"
                    )
        if require_symmetry:
            for name, nbr, dual in (("forward", f, b), ("backward", b, f)):
                has = nbr >= 0
                partner = (mesh.backward if name == "forward" else mesh.forward)[
                    nbr[has], a
                ]
                bad = np.flatnonzero(partner != pts[has])
                if bad.size:
                    p = int(pts[has][bad[0]])
                    raise ValidationError(
                        f"asymmetric neighbor pair at point {p}, axis {a} "
                        f"({name} neighbor {int(nbr[has][bad[0]])} does not point back)"
                    )


def validate_flowmap(field: FlowmapField, mesh: MeshTopology) -> ValidationReport:
    """Diagnostics for a flowmap/mesh pair; never raises.

    Reports mismatched point counts or dimensions, non-finite values (with
    the offending point indices), and a zero integration horizon.
    """
    violations: list[str] = []
    if field.dim != mesh.dim:
        violations.append(f"dimension mismatch: field {field.dim}, mesh {mesh.dim}")
    if field.npoints != mesh.npoints:
        violations.append(
            f"point count mismatch: field {field.npoints}, mesh {mesh.npoints}"
        )
    finite = np.isfinite(field.values)
    if not finite.all():
        bad = np.flatnonzero(~finite.all(axis=1))
        listed = ", ".join(str(int(p)) for p in bad[:10])
        suffix = "" if bad.size <= 10 else f" (and {bad.size - 10} more)"
        violations.append(f"non-finite values at point(s) {listed}{suffix}")
    if not math.isfinite(field.t0):
        violations.append("non-finite start time")
    if field.T == 0.0:
        violations.append("zero integration horizon")
    elif not math.isfinite(field.T):
        violations.append("non-finite integration horizon")
    return ValidationReport(ok=not violations, violations=tuple(violations))


def ravel_index(dims: Sequence[int], index: Sequence[int]) -> int:
    """Grid indices -> canonical point index (row-major, last axis fastest)."""
    p = 0
    for d, i in zip(dims, index):
        if not 0 <= i < d:
            raise ValidationError(f"grid index {tuple(index)} out of range for {tuple(dims)}")
        p = p * d + i
    return p


def unravel_index(dims: Sequence[int], point: int) -> tuple[int, ...]:
    """Canonical point index -> grid indices; inverse of :func:`ravel_index`."""
    npoints = 1
    for d in dims:
        npoints *= d
    if not 0 <= point < npoints:
        raise ValidationError(f"point {point} out of range for {tuple(dims)}")
    out = []
    for d in reversed(dims):
        out.append(point % d)
        point //= d
    return tuple(reversed(out))
