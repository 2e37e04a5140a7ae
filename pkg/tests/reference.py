"""Brute-force reference implementations with explicit instruction counting.

These mirror the production kernels with plain Python loops, tallying every
addition, multiplication and division as it happens.  They are the oracle
for the counted-flop contract: one multiply and one add per inner-product
term, weight scalings counted once per point, direction results summed
pairwise.
"""

import numpy as np


class CountingTally:
    def __init__(self):
        self.additions = 0
        self.multiplications = 0
        self.divisions = 0

    @property
    def total(self):
        return self.additions + self.multiplications + self.divisions


def ref_tensor_derivative(grid, diff_matrix, axis):
    """Loop-level derivative along axis (0=x, 1=y, 2=z) of a (z,y,x) grid."""
    nz, ny, nx = grid.shape
    n_axis = (nx, ny, nz)[axis]
    out = np.zeros_like(grid)
    tally = CountingTally()
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                acc = 0.0
                for m in range(n_axis):
                    if axis == 0:
                        term = diff_matrix[i, m] * grid[k, j, m]
                    elif axis == 1:
                        term = diff_matrix[j, m] * grid[k, m, i]
                    else:
                        term = diff_matrix[k, m] * grid[m, j, i]
                    tally.multiplications += 1
                    acc += term
                    tally.additions += 1
                out[k, j, i] = acc
    return out, tally


def ref_element_laplacian(grid, bases, extents):
    """Loop-level weak Laplacian D^T W D with per-direction metric scales."""
    bx, by, bz = bases
    hx, hy, hz = extents
    jac = hx * hy * hz / 8.0
    w3 = (
        bz.weights[:, None, None]
        * by.weights[None, :, None]
        * bx.weights[None, None, :]
    )
    tally = CountingTally()
    direction_results = []
    for axis, (basis, h) in enumerate(zip((bx, by, bz), (hx, hy, hz))):
        scaled = (4.0 / (h * h)) * jac * w3
        t, t1 = ref_tensor_derivative(grid, basis.diff_matrix, axis)
        for idx in np.ndindex(t.shape):
            t[idx] = t[idx] * scaled[idx]
            tally.multiplications += 1
        r, t2 = ref_tensor_derivative(t, basis.diff_matrix.T, axis)
        tally.additions += t1.additions + t2.additions
        tally.multiplications += t1.multiplications + t2.multiplications
        direction_results.append(r)
    out = np.zeros_like(grid)
    rx, ry, rz = direction_results
    for idx in np.ndindex(out.shape):
        out[idx] = (rx[idx] + ry[idx]) + rz[idx]
        tally.additions += 2
    return out, tally


def ref_cut_faces(elements, rank_of):
    """Exhaustive scan of adjacent element pairs landing on different ranks."""
    ex, ey, ez = elements
    faces = []
    for k in range(ez):
        for j in range(ey):
            for i in range(ex):
                for axis, nxt in enumerate(
                    ((i + 1, j, k), (i, j + 1, k), (i, j, k + 1))
                ):
                    if nxt[axis] >= elements[axis]:
                        continue
                    a = rank_of(i, j, k)
                    b = rank_of(*nxt)
                    if a != b:
                        faces.append((axis, (i, j, k), a, b))
    return faces


def ref_histogram_tally(samples, edges):
    """Linear-scan bucket tally with [edge_k, edge_{k+1}) membership."""
    counts = [0] * (len(edges) - 1)
    for s in samples:
        for k in range(len(edges) - 1):
            if edges[k] <= s < edges[k + 1]:
                counts[k] += 1
                break
        else:
            counts[-1] += 1
    return counts
