"""Bit-exact serialization of flowmaps, meshes, and FTLE fields.

All on-disk formats are little-endian with fixed-width fields and explicit
magic/version, so benchmark inputs compare bit-for-bit across machines and
implementations.  Layout of a flowmap file (``.ftlm``, version 1):

    bytes  field
    4      magic "FTLM"
    4      u32 version (1)
    4      u32 dim (2 or 3)
    8      u64 npoints
    4      u32 kind (0 structured, 1 unstructured)
    -- structured only --
    8*dim  u64 per-axis point counts (product equals npoints)
    8*dim  f64 per-axis spacing
    8*dim  f64 per-axis origin
    -- always --
    8      f64 t0
    8      f64 T
    -- unstructured only --
    8*n*dim    f64 coords, canonical point order
    16*n*dim   i64 neighbor table: (forward, backward) per point per axis,
               -1 for an absent neighbor
    -- always --
    8*n*dim    f64 flowmap values, canonical point order

An FTLE field file (``.ftlf``, version 1) is: magic "FTLF", u32 version,
u32 dim, u64 npoints, u64 degenerate_count, then npoints f64 values.
Degenerate points are stored as NaN.

The CSV export is ``x,y[,z],ftle`` with 17 significant digits (lossless for
64-bit floats); the NaN sentinel is written as the literal ``nan``.

Readers never crash on garbage: any malformed byte stream raises a
:class:`~ftlekit.errors.FormatError` subclass, and well-formed files holding
invalid data (non-finite values, zero horizon, bad neighbor indices) raise
:class:`~ftlekit.errors.ValidationError`.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import (
    STRUCTURED,
    FlowmapField,
    FtleField,
    MeshTopology,
    make_structured_grid,
    make_unstructured_mesh,
    validate_flowmap,
    validate_topology,
)
from .errors import (
    BadMagicError,
    DimensionMismatchError,
    FormatError,
    TruncatedFileError,
    UnsupportedVersionError,
    ValidationError,
)

FLOWMAP_MAGIC = b"FTLM"
FTLE_MAGIC = b"FTLF"
FORMAT_VERSION = 1

_KIND_CODES = {STRUCTURED: 0}


class _Reader:
    """Cursor over a byte string; every read checks the remaining length."""

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.data):
            raise TruncatedFileError(
                f"need {size} bytes at offset {self.offset}, "
                f"have {len(self.data) - self.offset}"
            )
        out = struct.unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return out

    def take_array(self, dtype: str, count: int) -> np.ndarray:
        size = count * np.dtype(dtype).itemsize
        if self.offset + size > len(self.data):
            raise TruncatedFileError(
                f"payload of {size} bytes at offset {self.offset} exceeds file size"
            )
        arr = np.frombuffer(self.data, dtype=dtype, count=count, offset=self.offset)
        self.offset += size
        return arr.copy()

    def expect_end(self):
        if self.offset != len(self.data):
            raise FormatError(
                f"{len(self.data) - self.offset} trailing bytes after payload"
            )


def _read_header(r: _Reader, magic: bytes):
    got = r.take("<4s")[0]
    if got != magic:
        raise BadMagicError(f"expected magic {magic!r}, got {got!r}")
    (version,) = r.take("<I")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported format version {version}")
    (dim,) = r.take("<I")
    if dim not in (2, 3):
        raise DimensionMismatchError(f"dimension must be 2 or 3, got {dim}")
    (npoints,) = r.take("<Q")
    return dim, npoints


# ---------------------------------------------------------------------------
# Flowmap files.
# ---------------------------------------------------------------------------


def pack_flowmap(field: FlowmapField, mesh: MeshTopology) -> bytes:
    """Serialize a validated flowmap/mesh pair to ``.ftlm`` bytes."""
    report = validate_flowmap(field, mesh)
    if not report.ok:
        raise ValidationError("; ".join(report.violations))
    dim = mesh.dim
    parts = [
        struct.pack(
            "<4sIIQI",
            FLOWMAP_MAGIC,
            FORMAT_VERSION,
            dim,
            mesh.npoints,
            _KIND_CODES.get(mesh.kind, 1),
        )
    ]
    if mesh.structured:
        parts.append(struct.pack(f"<{dim}Q", *mesh.dims))
        parts.append(struct.pack(f"<{dim}d", *mesh.spacing))
        parts.append(struct.pack(f"<{dim}d", *mesh.origin))
    parts.append(struct.pack("<dd", field.t0, field.T))
    if not mesh.structured:
        parts.append(mesh.coords.astype("<f8").tobytes())
        table = np.stack([mesh.forward, mesh.backward], axis=-1)
        parts.append(table.astype("<i8").tobytes())
    parts.append(field.values.astype("<f8").tobytes())
    return b"".join(parts)


def _unpack_mesh_sections(r: _Reader) -> tuple[MeshTopology, float, float]:
    dim, npoints = _read_header(r, FLOWMAP_MAGIC)
    (kind,) = r.take("<I")
    if kind not in (0, 1):
        raise FormatError(f"unknown mesh kind code {kind}")
    if kind == 0:
        dims = r.take(f"<{dim}Q")
        spacing = r.take(f"<{dim}d")
        origin = r.take(f"<{dim}d")
        product = 1
        for d in dims:
            product *= d
        if product != npoints:
            raise FormatError(
                f"header dims {dims} give {product} points, header says {npoints}"
            )
        t0, horizon = r.take("<dd")
        try:
            mesh = make_structured_grid(dims, spacing, origin)
        except ValidationError as exc:
            raise FormatError(f"invalid structured-grid header: {exc}") from exc
    else:
        t0, horizon = r.take("<dd")
        coords = r.take_array("<f8", npoints * dim).reshape(npoints, dim)
        table = r.take_array("<i8", npoints * dim * 2).reshape(npoints, dim, 2)
        mesh = make_unstructured_mesh(coords, table[:, :, 0], table[:, :, 1])
    return mesh, t0, horizon


def unpack_flowmap(data: bytes) -> tuple[FlowmapField, MeshTopology]:
    """Parse ``.ftlm`` bytes; inverse of :func:`pack_flowmap`."""
    r = _Reader(data)
    mesh, t0, horizon = _unpack_mesh_sections(r)
    values = r.take_array("<f8", mesh.npoints * mesh.dim).reshape(mesh.npoints, mesh.dim)
    r.expect_end()
    field = FlowmapField(
        dim=mesh.dim, npoints=mesh.npoints, values=values, t0=t0, T=horizon
    )
    report = validate_flowmap(field, mesh)
    if not report.ok:
        raise ValidationError("; ".join(report.violations))
    return field, mesh


def write_flowmap(path, field: FlowmapField, mesh: MeshTopology) -> None:
    """Write a flowmap/mesh pair to an ``.ftlm`` file (bit-exact round trip)."""
    Path(path).write_bytes(pack_flowmap(field, mesh))


def read_flowmap(path) -> tuple[FlowmapField, MeshTopology]:
    """Read an ``.ftlm`` file written by :func:`write_flowmap`."""
    return unpack_flowmap(Path(path).read_bytes())


def read_neighbor_table(path, require_symmetry: bool = False) -> MeshTopology:
    """Load an explicit neighbor table from an unstructured ``.ftlm`` file.

    The flowmap values section may be present (it is ignored) or absent.
    The topology invariants are enforced on load; with ``require_symmetry``
    every neighbor pair must be mutual.

    Raises:
        FormatError: malformed file, or a structured file (which carries no
            explicit table).
        ValidationError: out-of-range index, zero-width stencil, or an
            asymmetric pair when symmetry is required.
    """
    data = Path(path).read_bytes()
    r = _Reader(data)
    dim, npoints = _read_header(r, FLOWMAP_MAGIC)
    (kind,) = r.take("<I")
    if kind != 1:
        raise FormatError("file is not an unstructured neighbor-table file")
    r.take("<dd")  # t0, T: not part of the topology
    coords = r.take_array("<f8", npoints * dim).reshape(npoints, dim)
    table = r.take_array("<i8", npoints * dim * 2).reshape(npoints, dim, 2)
    if r.offset != len(data):
        r.take_array("<f8", npoints * dim)
        r.expect_end()
    mesh = make_unstructured_mesh(coords, table[:, :, 0], table[:, :, 1])
    validate_topology(mesh, require_symmetry=require_symmetry)
    return mesh


# ---------------------------------------------------------------------------
# FTLE field files.
# ---------------------------------------------------------------------------


def pack_ftle_field(field: FtleField) -> bytes:
    """Serialize an FTLE field to ``.ftlf`` bytes."""
    header = struct.pack(
        "<4sIIQQ",
        FTLE_MAGIC,
        FORMAT_VERSION,
        field.dim,
        field.npoints,
        field.degenerate_count,
    )
    return header + field.values.astype("<f8").tobytes()


def unpack_ftle_field(data: bytes) -> FtleField:
    """Parse ``.ftlf`` bytes; inverse of :func:`pack_ftle_field`."""
    r = _Reader(data)
    dim, npoints = _read_header(r, FTLE_MAGIC)
    (degenerate,) = r.take("<Q")
    values = r.take_array("<f8", npoints)
    r.expect_end()
    return FtleField(
        dim=dim, npoints=npoints, values=values, degenerate_count=degenerate
    )


def write_ftle_field(path, field: FtleField) -> None:
    Path(path).write_bytes(pack_ftle_field(field))


def read_ftle_field(path) -> FtleField:
    return unpack_ftle_field(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# CSV export.
# ---------------------------------------------------------------------------


def write_ftle_csv(path, field: FtleField, mesh: MeshTopology) -> None:
    """Write ``x,y[,z],ftle`` rows in canonical point order.

    Floats carry 17 significant digits, so re-parsing reproduces every value
    exactly; degenerate points appear as ``nan``.
    """
    if field.npoints != mesh.npoints:
        raise ValidationError(
            f"point count mismatch: field {field.npoints}, mesh {mesh.npoints}"
        )
    if field.dim != mesh.dim:
        raise ValidationError(f"dimension mismatch: field {field.dim}, mesh {mesh.dim}")
    header = "x,y,ftle" if mesh.dim == 2 else "x,y,z,ftle"
    coords = mesh.coords
    values = field.values
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(header + "\n")
        if mesh.dim == 2:
            for p in range(mesh.npoints):
                fh.write(
                    f"{coords[p, 0]:.17g},{coords[p, 1]:.17g},{values[p]:.17g}\n"
                )
        else:
            for p in range(mesh.npoints):
                fh.write(
                    f"{coords[p, 0]:.17g},{coords[p, 1]:.17g},"
                    f"{coords[p, 2]:.17g},{values[p]:.17g}\n"
                )
