import numpy as np
import pytest

from ftlekit import (
    DataParallel,
    DoubleGyre,
    SinglePass,
    compute_ftle_field,
    generate_flowmap,
    make_structured_grid,
)


def gyre_grid(nx, ny, nz=None):
    """Grid over the double-gyre domain with the high edges excluded."""
    if nz is None:
        return make_structured_grid((nx, ny), (2.0 / nx, 1.0 / ny), (0.0, 0.0))
    return make_structured_grid(
        (nx, ny, nz), (2.0 / nx, 1.0 / ny, 1.0 / nz), (0.0, 0.0, 0.0)
    )


@pytest.fixture(scope="session")
def dg_small():
    """Small double-gyre flowmap shared by gradient/equivalence tests."""
    mesh = gyre_grid(30, 20)
    field = generate_flowmap(mesh, DoubleGyre(), 0.0, 5.0, 0.1)
    return field, mesh


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the 2D/3D kernels once so timed tests measure math, not JIT."""
    for dims, spacing in (((3, 3), (0.5, 0.25)), ((3, 3, 3), (0.5, 0.25, 0.25))):
        mesh = make_structured_grid(dims, spacing, (0.0,) * len(dims))
        field = generate_flowmap(mesh, DoubleGyre(), 0.0, 1.0, 0.5)
        compute_ftle_field(field, mesh, SinglePass())
        compute_ftle_field(field, mesh, DataParallel(workers=2, chunk=4))
