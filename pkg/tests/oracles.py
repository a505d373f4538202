"""Independent reference implementations used to check the library.

Everything here is deliberately naive (plain loops, textbook formulas) and
recomputed from scratch so it shares no code path with the package.
"""

import numpy as np


def naive_jacobian(values, coords, forward, backward, point, dim):
    """Finite-difference jacobian at one point, rebuilt with plain loops."""
    j = np.empty((dim, dim), dtype=np.float64)
    for axis in range(dim):
        f = int(forward[point, axis])
        b = int(backward[point, axis])
        if f >= 0 and b >= 0:
            denom = coords[f, axis] - coords[b, axis]
            for comp in range(dim):
                j[comp, axis] = (values[f, comp] - values[b, comp]) / denom
        elif f >= 0:
            denom = coords[f, axis] - coords[point, axis]
            for comp in range(dim):
                j[comp, axis] = (values[f, comp] - values[point, comp]) / denom
        elif b >= 0:
            denom = coords[b, axis] - coords[point, axis]
            for comp in range(dim):
                j[comp, axis] = (values[b, comp] - values[point, comp]) / denom
        else:
            raise AssertionError(f"isolated axis {axis} at point {point}")
    return j


def det_shifted(s, lam):
    """det(S - lam*I) by cofactor expansion, dimension 2 or 3."""
    a = s - lam * np.eye(s.shape[0])
    if s.shape[0] == 2:
        return a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    return (
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )


def bisect_max_eig3(s, samples=4096, iterations=200):
    """Largest eigenvalue of a symmetric PD 3x3 via characteristic-polynomial
    root bracketing: scan det(S - lam*I) over [0, trace] for its rightmost
    sign change, then bisect.  Accurate when the top eigenvalue is simple and
    separated, which the test samplers guarantee."""
    hi = float(np.trace(s))
    grid = np.linspace(0.0, hi, samples + 1)
    bracket = None
    prev = det_shifted(s, grid[0])
    for i in range(1, len(grid)):
        cur = det_shifted(s, grid[i])
        if prev > 0.0 >= cur:
            bracket = (grid[i - 1], grid[i])
        prev = cur
    assert bracket is not None, "no sign change found in [0, trace]"
    lo, up = bracket
    for _ in range(iterations):
        mid = 0.5 * (lo + up)
        if det_shifted(s, mid) > 0.0:
            lo = mid
        else:
            up = mid
    return 0.5 * (lo + up)


def random_spd(rng, dim, scale_decades=(-2, 2), floor=1e-6):
    """Random symmetric positive-definite matrix (A^T A plus a small shift)."""
    a = rng.standard_normal((dim, dim)) * 10.0 ** rng.uniform(*scale_decades)
    s = a.T @ a + floor * np.trace(a.T @ a + np.eye(dim)) * np.eye(dim)
    return 0.5 * (s + s.T)


def random_spd_separated(rng, dim, min_ratio=1.3):
    """Random SPD matrix with well-separated eigenvalues (simple top root)."""
    scale = 10.0 ** rng.uniform(-2, 2)
    lam = np.sort(scale * 10.0 ** rng.uniform(0.0, 2.0, size=dim))
    for i in range(1, dim):
        lam[i] = max(lam[i], min_ratio * lam[i - 1])
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    s = (q * lam) @ q.T
    return 0.5 * (s + s.T)


def sort_median(values):
    """Median by explicit sorting: middle element, or mean of the central pair."""
    ordered = sorted(values)
    n = len(ordered)
    if n % 2:
        return ordered[n // 2]
    return (ordered[n // 2 - 1] + ordered[n // 2]) / 2.0
