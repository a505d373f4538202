"""Finite-time Lyapunov exponent fields from discrete 2D/3D flowmaps.

The package splits the work the way a flow-analysis pipeline does: build or
load a mesh (:mod:`ftlekit.core`), obtain a flowmap (:mod:`ftlekit.flows` or
:mod:`ftlekit.io`), extract the FTLE field under an execution strategy
(:mod:`ftlekit.kernels`), and optionally time it (:mod:`ftlekit.bench`).
"""

from .bench import (
    BenchRecord,
    ReferenceTable,
    make_input,
    read_bench_csv,
    reference_table1,
    render_report,
    run_suite,
    speedup,
    time_computation,
    write_bench_csv,
)
from .core import (
    FlowmapField,
    FtleField,
    Jacobian,
    MeshTopology,
    ValidationReport,
    make_structured_grid,
    make_unstructured_mesh,
    ravel_index,
    unravel_index,
    validate_flowmap,
    validate_topology,
)
from .errors import (
    BadMagicError,
    DegenerateStencilError,
    DimensionMismatchError,
    DomainError,
    FormatError,
    FtleError,
    HorizonError,
    TruncatedFileError,
    UnsupportedVersionError,
    ValidationError,
)
from .flows import (
    ABCFlow,
    ConstantDrift,
    DoubleGyre,
    FlowSpec,
    Identity,
    advect_rk4,
    default_domain,
    generate_flowmap,
    step_count,
    velocity,
)
from .io import (
    pack_flowmap,
    pack_ftle_field,
    read_flowmap,
    read_ftle_field,
    read_neighbor_table,
    unpack_flowmap,
    unpack_ftle_field,
    write_flowmap,
    write_ftle_csv,
    write_ftle_field,
)
from .kernels import (
    DEGENERACY_FLOOR,
    DataParallel,
    ExecutionStrategy,
    SinglePass,
    SymmetricTensor,
    cauchy_green,
    compute_ftle_field,
    flowmap_gradient,
    ftle_point,
    max_eigenvalue,
    max_eigenvalue_sym2,
    max_eigenvalue_sym3,
)

__version__ = "0.1.0"

__all__ = [
    "ABCFlow",
    "BadMagicError",
    "BenchRecord",
    "ConstantDrift",
    "DEGENERACY_FLOOR",
    "DataParallel",
    "DegenerateStencilError",
    "DimensionMismatchError",
    "DomainError",
    "DoubleGyre",
    "ExecutionStrategy",
    "FlowSpec",
    "FlowmapField",
    "FormatError",
    "FtleError",
    "FtleField",
    "HorizonError",
    "Identity",
    "Jacobian",
    "MeshTopology",
    "ReferenceTable",
    "SinglePass",
    "SymmetricTensor",
    "TruncatedFileError",
    "UnsupportedVersionError",
    "ValidationError",
    "ValidationReport",
    "advect_rk4",
    "cauchy_green",
    "compute_ftle_field",
    "default_domain",
    "flowmap_gradient",
    "ftle_point",
    "generate_flowmap",
    "make_input",
    "make_structured_grid",
    "make_unstructured_mesh",
    "max_eigenvalue",
    "max_eigenvalue_sym2",
    "max_eigenvalue_sym3",
    "pack_flowmap",
    "pack_ftle_field",
    "ravel_index",
    "read_bench_csv",
    "read_flowmap",
    "read_ftle_field",
    "read_neighbor_table",
    "reference_table1",
    "render_report",
    "run_suite",
    "speedup",
    "step_count",
    "time_computation",
    "unpack_flowmap",
    "unpack_ftle_field",
    "unravel_index",
    "validate_flowmap",
    "validate_topology",
    "velocity",
    "write_bench_csv",
    "write_flowmap",
    "write_ftle_csv",
    "write_ftle_field",
]
