"""Timing harness over problem sizes, dimensions, and execution strategies.

Measures the FTLE kernel only: inputs are generated once per (size, dim)
configuration and reused across strategies, wall-clock times come from the
monotonic performance counter around the kernel call, and the summary
statistic is the median of the repetitions (robust to scheduler noise).
Configurations run strictly one at a time so they cannot contaminate each
other; any concurrency lives inside the kernel under test.

A bundled read-only reference set (``reference_table1``) carries published
execution times, in milliseconds, of naive FPGA ports of the same 2D/3D FTLE
kernels (SYCL and OpenCL, each as ND-range and single-task variants) next to
an OpenMP CPU baseline, at 200K/400K/600K points.  Label legend: S- SYCL,
O- OpenCL; -NR ND-range, -ST single-task.  Reports can place measured
data-parallel vs single-pass medians alongside it and flag whether the
expected qualitative ordering (data-parallel faster) is reproduced.
"""

from __future__ import annotations

import csv
import hashlib
import io
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .core import FlowmapField, MeshTopology, make_structured_grid
from .errors import ValidationError
from .flows import DoubleGyre, FlowSpec, default_domain, generate_flowmap
from .kernels import ExecutionStrategy, SinglePass, compute_ftle_field

SIZES = (200_000, 400_000, 600_000)

# The published sizes are totals; these factorizations pin grid shapes with a
# small boundary fraction.  Overridable via the `factors` argument.
GRID_FACTORS: Mapping[int, Mapping[int, tuple[int, ...]]] = MappingProxyType(
    {
        2: MappingProxyType({200_000: (500, 400), 400_000: (800, 500), 600_000: (1000, 600)}),
        3: MappingProxyType({200_000: (80, 50, 50), 400_000: (100, 80, 50), 600_000: (100, 100, 60)}),
    }
)

REFERENCE_LABELS = (
    "S-NR naïve",
    "O-NR naïve",
    "S-ST naïve",
    "O-ST naïve",
    "CPU 1 thread",
    "CPU 4 threads",
    "CPU 8 threads",
)

# Milliseconds, rows in REFERENCE_LABELS order; columns are
# (2D 200K, 400K, 600K, 3D 200K, 400K, 600K).
_REFERENCE_MS = (
    (11.1, 22.3, 33.7, 371.7, 803.1, 1364.9),
    (10.7, 21.5, 32.5, 359.4, 777.6, 1275.7),
    (6635.5, 13316.5, 6281.4, 26892.7, 54207.4, 34863.8),
    (2085.7, 4116.1, 20034.4, 9194.2, 18455.6, 92703.2),
    (30.1, 51.1, 75.5, 71.5, 172.6, 240.1),
    (20.7, 32.5, 39.0, 41.3, 64.0, 90.1),
    (17.2, 23.1, 31.6, 33.0, 51.3, 70.6),
)

DETAIL_COLUMNS = ("label", "dim", "npoints", "strategy", "workers", "chunk", "rep", "time_ms")
SUMMARY_COLUMNS = ("label", "dim", "npoints", "strategy", "median_ms")


@dataclass(frozen=True)
class BenchRecord:
    """One timed configuration: strategy x dimension x point count."""

    label: str
    dim: int
    npoints: int
    strategy: str
    workers: int | None
    chunk: int | None
    reps: int
    times_ms: tuple[float, ...]
    median_ms: float
    input_digest: str = ""

    def __post_init__(self):
        if self.reps != len(self.times_ms) or self.reps < 1:
            raise ValidationError("reps must equal len(times_ms) and be >= 1")
        if any(t <= 0.0 for t in self.times_ms):
            raise ValidationError("every repetition time must be positive")
        if self.median_ms != statistics.median(self.times_ms):
            raise ValidationError("median_ms is not the median of times_ms")


@dataclass(frozen=True)
class ReferenceTable:
    """Read-only (label, dim, npoints) -> milliseconds lookup."""

    rows: Mapping[tuple[str, int, int], float]
    labels: tuple[str, ...] = REFERENCE_LABELS
    dims: tuple[int, ...] = (2, 3)
    sizes: tuple[int, ...] = SIZES

    def lookup(self, label: str, dim: int, npoints: int) -> float:
        return self.rows[(label, dim, npoints)]


def reference_table1() -> ReferenceTable:
    """The bundled reference timings (7 implementations x 6 configurations)."""
    rows: dict[tuple[str, int, int], float] = {}
    for label, row in zip(REFERENCE_LABELS, _REFERENCE_MS):
        for j, ms in enumerate(row):
            dim = 2 if j < 3 else 3
            rows[(label, dim, SIZES[j % 3])] = ms
    return ReferenceTable(rows=MappingProxyType(rows))


def strategy_label(strategy: ExecutionStrategy) -> str:
    if isinstance(strategy, SinglePass):
        return "single-pass"
    return f"data-parallel(w={strategy.workers},c={strategy.chunk})"


def _strategy_fields(strategy: ExecutionStrategy) -> tuple[str, int | None, int | None]:
    if isinstance(strategy, SinglePass):
        return "single-pass", None, None
    return "data-parallel", strategy.workers, strategy.chunk


def time_computation(
    field: FlowmapField,
    mesh: MeshTopology,
    strategy: ExecutionStrategy,
    reps: int = 5,
    warmup: int = 1,
    label: str | None = None,
    input_digest: str = "",
) -> BenchRecord:
    """Time the FTLE kernel: warmup runs discarded, then ``reps`` timed runs.

    Only the kernel call sits inside the timed region; input generation and
    I/O are excluded by construction.
    """
    if reps < 1:
        raise ValidationError(f"reps must be >= 1, got {reps}")
    if warmup < 0:
        raise ValidationError(f"warmup must be >= 0, got {warmup}")
    for _ in range(warmup):
        compute_ftle_field(field, mesh, strategy)
    times_ms = []
    for _ in range(reps):
        start = time.perf_counter()
        compute_ftle_field(field, mesh, strategy)
        times_ms.append((time.perf_counter() - start) * 1e3)
    name, workers, chunk = _strategy_fields(strategy)
    return BenchRecord(
        label=label if label is not None else strategy_label(strategy),
        dim=mesh.dim,
        npoints=mesh.npoints,
        strategy=name,
        workers=workers,
        chunk=chunk,
        reps=reps,
        times_ms=tuple(times_ms),
        median_ms=statistics.median(times_ms),
        input_digest=input_digest,
    )


def grid_shape(
    npoints: int,
    dim: int,
    factors: Mapping[int, Mapping[int, tuple[int, ...]]] | None = None,
) -> tuple[int, ...]:
    """Grid dims for a requested point count: pinned factorization or search.

    Falls back to the most balanced exact factorization with every axis at
    least 3 points; raises when none exists (e.g. a prime count).
    """
    table = factors if factors is not None else GRID_FACTORS
    pinned = table.get(dim, {}).get(npoints)
    if pinned is not None:
        return tuple(pinned)
    if dim == 2:
        for a in range(int(npoints**0.5), 2, -1):
            if npoints % a == 0 and npoints // a >= 3:
                return (npoints // a, a)
        raise ValidationError(f"{npoints} points cannot form a 2D grid (axes >= 3)")
    best: tuple[int, ...] | None = None
    target = npoints ** (1.0 / 3.0)
    for a in range(3, int(npoints ** (1.0 / 3.0)) + 2):
        if npoints % a:
            continue
        rest = npoints // a
        for b in range(3, int(rest**0.5) + 1):
            if rest % b == 0 and rest // b >= 3:
                cand = tuple(sorted((rest // b, b, a), reverse=True))
                if best is None or abs(cand[0] - target) < abs(best[0] - target):
                    best = cand
    if best is None:
        raise ValidationError(f"{npoints} points cannot form a 3D grid (axes >= 3)")
    return best


def _digest(field: FlowmapField) -> str:
    h = hashlib.sha256()
    h.update(field.values.tobytes())
    h.update(repr((field.t0, field.T)).encode())
    return h.hexdigest()[:16]


def make_input(
    npoints: int,
    dim: int,
    flow: FlowSpec = DoubleGyre(),
    t0: float = 0.0,
    T: float = 5.0,
    dt: float = 0.1,
    factors=None,
) -> tuple[FlowmapField, MeshTopology]:
    """Build one benchmark input: a grid over the flow's domain, advected."""
    dims = grid_shape(npoints, dim, factors)
    domain = default_domain(flow, dim)
    spacing = tuple((hi - lo) / d for (lo, hi), d in zip(domain, dims))
    origin = tuple(lo for lo, _ in domain)
    mesh = make_structured_grid(dims, spacing, origin)
    field = generate_flowmap(mesh, flow, t0, T, dt)
    return field, mesh


def run_suite(
    sizes: Sequence[int],
    dims: Sequence[int],
    strategies: Sequence[ExecutionStrategy],
    reps: int = 5,
    warmup: int = 1,
    flow: FlowSpec = DoubleGyre(),
    t0: float = 0.0,
    T: float = 5.0,
    dt: float = 0.1,
    factors=None,
    progress=None,
) -> list[BenchRecord]:
    """One record per (size, dim, strategy), run strictly sequentially.

    Inputs are generated once per (size, dim) and shared by all strategies;
    each record carries the input digest so reports can confirm strategies
    saw identical data.
    """
    records = []
    for dim in dims:
        for npoints in sizes:
            field, mesh = make_input(npoints, dim, flow, t0, T, dt, factors)
            digest = _digest(field)
            for strategy in strategies:
                if progress is not None:
                    progress(f"{dim}D n={npoints} {strategy_label(strategy)}")
                records.append(
                    time_computation(
                        field, mesh, strategy, reps, warmup, input_digest=digest
                    )
                )
    return records


def speedup(baseline_ms: float, candidate_ms: float) -> float:
    """How many times faster the candidate is than the baseline."""
    if baseline_ms <= 0.0 or candidate_ms <= 0.0:
        raise ValueError("speedup needs positive times")
    return baseline_ms / candidate_ms


# ---------------------------------------------------------------------------
# CSV and report rendering.
# ---------------------------------------------------------------------------


def summary_path(detail_path) -> Path:
    """`out.csv` -> `out.summary.csv` (suffix replaced, same directory)."""
    p = Path(detail_path)
    return p.with_name(p.stem + ".summary.csv")


def write_bench_csv(records: Iterable[BenchRecord], path) -> Path:
    """Write per-repetition rows to ``path`` and medians to the summary file.

    Returns the summary path.  Detail schema:
    ``label,dim,npoints,strategy,workers,chunk,rep,time_ms`` (rep is
    1-based; workers/chunk are empty for single-pass; labels containing
    commas are quoted).  Summary schema:
    ``label,dim,npoints,strategy,median_ms``.
    """
    records = list(records)
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DETAIL_COLUMNS)
        for rec in records:
            w = "" if rec.workers is None else rec.workers
            c = "" if rec.chunk is None else rec.chunk
            for i, t in enumerate(rec.times_ms, start=1):
                writer.writerow(
                    [rec.label, rec.dim, rec.npoints, rec.strategy, w, c, i, f"{t:.17g}"]
                )
    out = summary_path(path)
    with open(out, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for rec in records:
            writer.writerow(
                [rec.label, rec.dim, rec.npoints, rec.strategy, f"{rec.median_ms:.17g}"]
            )
    return out


def read_bench_csv(path) -> list[BenchRecord]:
    """Rebuild records from a detail CSV written by :func:`write_bench_csv`."""
    with open(path, "r", encoding="ascii", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != list(DETAIL_COLUMNS):
        raise ValidationError(f"{path} is not a bench detail CSV")
    groups: dict[tuple, list[tuple[int, float]]] = {}
    order: list[tuple] = []
    for parts in rows[1:]:
        if not parts:
            continue
        if len(parts) != len(DETAIL_COLUMNS):
            raise ValidationError(f"malformed bench CSV row: {parts!r}")
        try:
            label, dim, npoints, strategy, w, c, rep, t = parts
            key = (label, int(dim), int(npoints), strategy, w, c)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append((int(rep), float(t)))
        except ValueError as exc:
            raise ValidationError(f"malformed bench CSV row: {parts!r}") from exc
    records = []
    for key in order:
        label, dim, npoints, strategy, w, c = key
        times = tuple(t for _, t in sorted(groups[key]))
        records.append(
            BenchRecord(
                label=label,
                dim=dim,
                npoints=npoints,
                strategy=strategy,
                workers=int(w) if w else None,
                chunk=int(c) if c else None,
                reps=len(times),
                times_ms=times,
                median_ms=statistics.median(times),
            )
        )
    return records


def _fmt_ms(ms: float) -> str:
    return f"{ms:.1f}"


def _configs(records: Sequence[BenchRecord]) -> list[tuple[int, int]]:
    seen: list[tuple[int, int]] = []
    for rec in records:
        key = (rec.dim, rec.npoints)
        if key not in seen:
            seen.append(key)
    return sorted(seen)


def render_report(
    records: Sequence[BenchRecord],
    reference: ReferenceTable | None = None,
    format: str = "md",
) -> str:
    """Render measured medians (and optionally the reference set) as text.

    Markdown output has one row per strategy label and one column per
    (dim, size) configuration.  When a reference table is given, its full
    grid is appended, followed by per-configuration data-parallel vs
    single-pass speedups and a line stating in how many configurations the
    expected ordering (data-parallel faster) was reproduced.  A
    configuration counts as reproduced only if every data-parallel record
    in it beats the single-pass record.  CSV output uses the summary schema,
    with reference rows appended under strategy ``reference``.
    """
    if format == "csv":
        lines = [",".join(SUMMARY_COLUMNS)]
        for rec in records:
            lines.append(
                f"{rec.label},{rec.dim},{rec.npoints},{rec.strategy},{rec.median_ms:.17g}"
            )
        if reference is not None:
            for label in reference.labels:
                for dim in reference.dims:
                    for size in reference.sizes:
                        ms = reference.lookup(label, dim, size)
                        lines.append(f"{label},{dim},{size},reference,{ms}")
        return "\n".join(lines) + "\n"
    if format != "md":
        raise ValidationError(f"unknown report format {format!r}")

    out: list[str] = []
    if records:
        configs = _configs(records)
        by_label: dict[str, dict[tuple[int, int], float]] = {}
        label_order: list[str] = []
        for rec in records:
            if rec.label not in by_label:
                by_label[rec.label] = {}
                label_order.append(rec.label)
            by_label[rec.label][(rec.dim, rec.npoints)] = rec.median_ms
        out.append("## Measured medians (ms)")
        out.append("")
        header = ["strategy"] + [f"{d}D {n}" for d, n in configs]
        out.append("| " + " | ".join(header) + " |")
        out.append("|" + "---|" * len(header))
        for label in label_order:
            cells = [label]
            for cfg in configs:
                ms = by_label[label].get(cfg)
                cells.append("" if ms is None else f"{ms:.3f}")
            out.append("| " + " | ".join(cells) + " |")
        out.append("")
    else:
        out.append("## Measured medians (ms)")
        out.append("")
        out.append("| strategy |")
        out.append("|---|")
        out.append("")

    if reference is not None:
        out.append("## Reference timings (ms)")
        out.append("")
        cols = [f"{d}D {s // 1000}K" for d in reference.dims for s in reference.sizes]
        out.append("| implementation | " + " | ".join(cols) + " |")
        out.append("|" + "---|" * (len(cols) + 1))
        for label in reference.labels:
            cells = [
                _fmt_ms(reference.lookup(label, d, s))
                for d in reference.dims
                for s in reference.sizes
            ]
            out.append("| " + label + " | " + " | ".join(cells) + " |")
        out.append("")

    if records:
        singles = {
            (r.dim, r.npoints): r for r in records if r.strategy == "single-pass"
        }
        parallels = [r for r in records if r.strategy == "data-parallel"]
        comparisons = [
            (r, singles[(r.dim, r.npoints)])
            for r in parallels
            if (r.dim, r.npoints) in singles
        ]
        if comparisons:
            out.append("## Data-parallel vs single-pass")
            out.append("")
            reproduced: dict[tuple[int, int], bool] = {}
            for dp, sp in comparisons:
                ratio = speedup(sp.median_ms, dp.median_ms)
                faster = dp.median_ms < sp.median_ms
                cfg = (dp.dim, dp.npoints)
                reproduced[cfg] = reproduced.get(cfg, True) and faster
                out.append(
                    f"- {dp.dim}D n={dp.npoints}: {dp.label} vs single-pass: "
                    f"{ratio:.3f}x ({'faster' if faster else 'slower'})"
                )
            total = len(reproduced)
            won = sum(reproduced.values())
            verdict = "reproduced" if won == total else "NOT reproduced"
            out.append("")
            out.append(
                f"Expected ordering (data-parallel faster) {verdict} in "
                f"{won}/{total} configurations."
            )
            out.append("")
    return "\n".join(out)
