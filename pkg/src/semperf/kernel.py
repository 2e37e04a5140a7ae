"""Element-level tensor-product kernels with exact operation accounting.

Counted flops are the additions, multiplications and divisions performed by
the numerical kernels themselves (operator applications, vector updates,
dot products).  Basis and geometry setup is excluded, as is the bookkeeping
arithmetic of interface summation, which is attributed to communication.
"""

from dataclasses import dataclass, field

import numpy as np

from .basis import SpectralBasis

WORD_BYTES = 8
MEGA = 1_000_000

# Equivalent 8-byte words resident per grid point, calibrated so a
# 4x4x4-element, degree-8 block costs 200 MB.
DEFAULT_WORDS_PER_POINT = 200 * MEGA / (64 * 729 * WORD_BYTES)

_AXIS_NAMES = {"x": 0, "y": 1, "z": 2}


@dataclass
class FlopCounter:
    """Running tally of counted arithmetic, split by operation kind."""

    additions: int = 0
    multiplications: int = 0
    divisions: int = 0

    def count(self, add=0, mul=0, div=0):
        if add < 0 or mul < 0 or div < 0:
            raise ValueError("flop increments must be non-negative")
        self.additions += add
        self.multiplications += mul
        self.divisions += div

    @property
    def total(self):
        return self.additions + self.multiplications + self.divisions

    def reset(self):
        self.additions = 0
        self.multiplications = 0
        self.divisions = 0


@dataclass(frozen=True)
class CaseConfig:
    """Benchmark case: element grid, polynomial degrees, work budget."""

    elements: tuple = (8, 8, 8)
    degrees: tuple = (8, 8, 8)
    n_fields: int = 1
    steps: int = 1
    cg_iters_per_step: int = 100

    def __post_init__(self):
        if len(self.elements) != 3 or any(e < 1 for e in self.elements):
            raise ValueError(f"element counts must be 3 values >= 1: {self.elements}")
        if len(self.degrees) != 3 or any(n < 2 for n in self.degrees):
            raise ValueError(f"degrees must be 3 values >= 2: {self.degrees}")
        if self.n_fields < 1:
            raise ValueError("n_fields must be >= 1")
        if self.steps < 1 or self.cg_iters_per_step < 1:
            raise ValueError("steps and cg_iters_per_step must be >= 1")

    @property
    def n_elements(self):
        ex, ey, ez = self.elements
        return ex * ey * ez

    @property
    def points_per_element(self):
        nx, ny, nz = self.degrees
        return (nx + 1) * (ny + 1) * (nz + 1)

    @property
    def dof_per_element(self):
        return self.n_fields * self.points_per_element

    @property
    def is_isotropic(self):
        return len(set(self.degrees)) == 1


def dof_count(config):
    """Total independent variables: elements x n_fields x grid points."""
    return config.n_elements * config.dof_per_element


def memory_estimate(config, words_per_point=DEFAULT_WORDS_PER_POINT):
    """Estimated resident bytes: words_per_point * grid points * 8 bytes."""
    if words_per_point <= 0:
        raise ValueError("words_per_point must be positive")
    return words_per_point * config.n_elements * config.points_per_element * WORD_BYTES


@dataclass
class ElementField:
    """Nodal values of one scalar field on one element.

    ``values`` is flat in lexicographic order with x fastest, so
    ``values.reshape(nz, ny, nx)`` recovers the grid.  Interface nodes are
    stored redundantly by every element sharing the face, edge or corner.
    """

    index: tuple
    shape: tuple  # points per direction (nx, ny, nz)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        nx, ny, nz = self.shape
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size != nx * ny * nz:
            raise ValueError(
                f"field length {self.values.size} does not match grid "
                f"{nx}x{ny}x{nz}"
            )

    def grid(self):
        nx, ny, nz = self.shape
        return self.values.reshape(nz, ny, nx)

    @classmethod
    def from_grid(cls, index, grid):
        nz, ny, nx = grid.shape
        return cls(index=index, shape=(nx, ny, nz), values=np.asarray(grid, dtype=float).reshape(-1))


def field_from_callable(fn, bases, index=(0, 0, 0)):
    """Sample fn(x, y, z) on the reference grid of the given bases."""
    bx, by, bz = _three_bases(bases)
    z, y, x = np.meshgrid(bz.nodes, by.nodes, bx.nodes, indexing="ij")
    return ElementField.from_grid(index, fn(x, y, z))


def _three_bases(bases):
    if isinstance(bases, SpectralBasis):
        return bases, bases, bases
    bx, by, bz = bases
    return bx, by, bz


def _apply_matrix_along(grid, matrix, axis):
    # out[..., i, ...] = sum_m matrix[i, m] grid[..., m, ...]
    moved = np.moveaxis(grid, axis, -1)
    out = moved @ matrix.T
    return np.moveaxis(out, -1, axis)


def _resolve_axis(axis):
    ax = _AXIS_NAMES.get(axis, axis) if isinstance(axis, str) else axis
    if ax not in (0, 1, 2):
        raise ValueError(f"axis must be x, y or z (got {axis!r})")
    return ax


def derivative_flops(shape, axis):
    """Counted flops of one derivative: 2 per inner-product term per point."""
    nx, ny, nz = shape
    return 2 * nx * ny * nz * shape[_resolve_axis(axis)]


def tensor_derivative(element_field, basis, axis, counter=None):
    """Reference-space derivative along one axis via the basis D matrix."""
    ax = _resolve_axis(axis)
    n_axis = element_field.shape[ax]
    if basis.n_points != n_axis:
        raise ValueError(
            f"basis has {basis.n_points} points but field has {n_axis} "
            f"along axis {axis!r}"
        )
    grid = element_field.grid()
    # grid axes are (z, y, x); field axis 0 is x which is grid axis -1
    out = _apply_matrix_along(grid, basis.diff_matrix, -(ax + 1))
    if counter is not None:
        npts = element_field.values.size
        counter.count(add=npts * n_axis, mul=npts * n_axis)
    return ElementField.from_grid(element_field.index, out)


def laplacian_flops(shape):
    """Counted flops of one weak-Laplacian application on one element."""
    nx, ny, nz = shape
    npts = nx * ny * nz
    total = 0
    for n_axis in shape:
        total += 2 * npts * n_axis  # D
        total += npts  # weight scaling
        total += 2 * npts * n_axis  # D^T
    total += 2 * npts  # sum of the three direction terms
    return total


class ElementOperator:
    """Weak Laplacian D^T W D on one axis-aligned box element.

    ``extents`` are the physical element sizes (hx, hy, hz); the affine map
    from the reference cube gives constant metric factors, folded into one
    weight array per direction.
    """

    def __init__(self, bases, extents=(2.0, 2.0, 2.0)):
        bx, by, bz = _three_bases(bases)
        hx, hy, hz = extents
        if hx <= 0 or hy <= 0 or hz <= 0:
            raise ValueError(f"element extents must be positive: {extents}")
        self.bases = (bx, by, bz)
        self.extents = (float(hx), float(hy), float(hz))
        self.shape = (bx.n_points, by.n_points, bz.n_points)
        jac = hx * hy * hz / 8.0
        w3 = (
            bz.weights[:, None, None]
            * by.weights[None, :, None]
            * bx.weights[None, None, :]
        )
        # (2/h_d)^2 * J folded into the quadrature weights, one array per axis
        self.scaled_weights = tuple(
            (4.0 / (h * h)) * jac * w3 for h in (hx, hy, hz)
        )
        self.mass_weights = jac * w3

    def apply_grid(self, grid, counter=None):
        """Apply the operator; grid may carry leading batch axes."""
        out = None
        for ax, (basis, sw) in enumerate(zip(self.bases, self.scaled_weights)):
            grid_axis = -(ax + 1)
            t = _apply_matrix_along(grid, basis.diff_matrix, grid_axis)
            t *= sw
            t = _apply_matrix_along(t, basis.diff_matrix.T, grid_axis)
            out = t if out is None else out + t
        if counter is not None:
            npts = grid.size
            per_axis = sum(2 * npts * b.n_points for b in self.bases)
            counter.count(add=per_axis + 2 * npts, mul=per_axis + 3 * npts)
        return out

    def diagonal_grid(self):
        """Diagonal of the element stiffness, for Jacobi preconditioning."""
        diag = np.zeros(self.shape[::-1])
        for ax, (basis, sw) in enumerate(zip(self.bases, self.scaled_weights)):
            d_sq = basis.diff_matrix**2
            # sum_m sw[..., m, ...] * D[m, i]^2 along the operated axis
            diag += _apply_matrix_along(sw, d_sq.T, -(ax + 1))
        return diag


def apply_element_laplacian(element_field, bases, extents=(2.0, 2.0, 2.0), counter=None):
    """Weak-form stiffness action on one element field.

    Symmetric positive semi-definite with constants in the null space.
    """
    op = ElementOperator(bases, extents)
    if op.shape != tuple(element_field.shape):
        raise ValueError(
            f"field grid {tuple(element_field.shape)} does not match bases "
            f"{op.shape}"
        )
    out = op.apply_grid(element_field.grid(), counter=counter)
    return ElementField.from_grid(element_field.index, out)
