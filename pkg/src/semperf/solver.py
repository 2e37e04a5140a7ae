"""Distributed conjugate-gradient work unit on the partitioned element mesh.

Each rank owns a contiguous block of elements on the unit box and holds the
nodal values of its elements redundantly at interfaces.  One work step runs
a budget of Jacobi-preconditioned CG iterations on the assembled weak
Laplacian; every operator application is followed by a gather-scatter
(direct-stiffness summation), performed as one face exchange sweep per
direction so edge and corner values ride inside the face messages.

Counted flops cover the element-local solve arithmetic: operator
applications, vector updates, dot-product partials and the alpha/beta
divisions.  Interface summation, reduction combining, masking and one-time
setup are attributed to communication/bookkeeping and are not counted,
which makes the per-step count an exact linear function of the element
count.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import build_gll_basis
from .errors import DivergenceError
from .kernel import ElementOperator, FlopCounter, laplacian_flops
from .partition import partition_elements
from .transport import allreduce_sum, loopback_transport

STALL_WINDOW = 50
STALL_IMPROVEMENT = 0.99

# Flops per stored value and CG iteration outside the operator:
# dot(p,q) 3, x update 2, r update 2, precondition 1, dot(r,z) 3,
# dot(r,r) 3, p update 2.
VECTOR_FLOPS_PER_ITER = 16
# Per-step start-up on r0 = b: precondition 1, dot(r0,z0) 3, dot(r0,r0) 3.
VECTOR_FLOPS_PER_STEP = 7
# alpha and beta divisions, performed by every rank.
DIVS_PER_ITER_PER_RANK = 2


def iteration_flops(config):
    """Counted flops of one CG iteration summed over all elements."""
    shape = tuple(n + 1 for n in config.degrees)
    npts = config.points_per_element
    per_element = config.n_fields * (
        laplacian_flops(shape) + VECTOR_FLOPS_PER_ITER * npts
    )
    return config.n_elements * per_element


def step_setup_flops(config):
    """Counted flops of the per-step CG start-up."""
    return (
        config.n_elements
        * config.n_fields
        * VECTOR_FLOPS_PER_STEP
        * config.points_per_element
    )


def step_flops(config, n_ranks=1, iters=None):
    """Exact counted flops of one work step on n_ranks."""
    if iters is None:
        iters = config.cg_iters_per_step
    return iters * (
        iteration_flops(config) + DIVS_PER_ITER_PER_RANK * n_ranks
    ) + step_setup_flops(config)


def default_forcing(x, y, z):
    """Load whose exact Dirichlet solution is sin(pi x) sin(pi y) sin(pi z)."""
    s = np.pi**2 * 3.0
    return s * np.sin(np.pi * x) * np.sin(np.pi * y) * np.sin(np.pi * z)


def default_solution(x, y, z):
    return np.sin(np.pi * x) * np.sin(np.pi * y) * np.sin(np.pi * z)


@dataclass
class StepRecord:
    """Per-step measurements of one executed work step."""

    iterations: int
    rel_residual: float
    flops: int
    halo_words_sent: int
    halo_messages: int
    reduce_words_sent: int
    walltime: float


@dataclass
class WorkUnitReport:
    """Aggregated result of one executed work unit."""

    n_ranks: int
    steps: tuple  # StepRecord per step
    per_rank_flops: tuple  # FlopCounter per rank, whole run
    per_rank_halo_words_sent: tuple
    per_rank_halo_words_received: tuple
    setup_halo_words_sent: int
    fields: dict = field(default_factory=dict, repr=False)

    @property
    def iterations(self):
        return tuple(s.iterations for s in self.steps)

    @property
    def total_flops(self):
        return sum(c.total for c in self.per_rank_flops)


class RankWorker:
    """State and kernels of one rank's block of elements."""

    def __init__(
        self,
        config,
        plan,
        endpoint,
        domain=(1.0, 1.0, 1.0),
        bc="dirichlet",
        mean_zero=False,
        forcing=None,
    ):
        if bc not in ("dirichlet", "neumann"):
            raise ValueError(f"unknown boundary condition {bc!r}")
        self.config = config
        self.plan = plan
        self.endpoint = endpoint
        self.rank = endpoint.rank
        self.bc = bc
        self.mean_zero = mean_zero
        self.counter = FlopCounter()

        (x0, x1), (y0, y1), (z0, z1) = plan.block_of(self.rank)
        self.block = ((x0, x1), (y0, y1), (z0, z1))
        self.counts = (x1 - x0, y1 - y0, z1 - z0)
        nx, ny, nz = (n + 1 for n in config.degrees)
        self.shape = (nx, ny, nz)
        self.bases = tuple(build_gll_basis(n) for n in config.degrees)
        ex, ey, ez = config.elements
        lx, ly, lz = domain
        self.extents = (lx / ex, ly / ey, lz / ez)
        self.op = ElementOperator(self.bases, self.extents)

        cx, cy, cz = self.counts
        f = config.n_fields
        self._arr_shape = (cz, cy, cx, f, nz, ny, nx)
        px, py, _ = plan.rank_grid
        bx = self.rank % px
        by = (self.rank // px) % py
        bz = self.rank // (px * py)
        grid = plan.rank_grid
        pos = (bx, by, bz)
        self.neighbors = []  # per axis: (minus_rank, plus_rank)
        strides = (1, px, px * py)
        for ax in range(3):
            minus = self.rank - strides[ax] if pos[ax] > 0 else None
            plus = self.rank + strides[ax] if pos[ax] < grid[ax] - 1 else None
            self.neighbors.append((minus, plus))

        self._build_node_tables()
        self.inv_diag = None
        self.rhs = None

    # -- geometry tables ---------------------------------------------------

    def _axis_table(self, axis, fill):
        """Per-element, per-node factors along one axis via a callback."""
        (start, stop) = self.block[axis]
        extent = self.config.elements[axis]
        npts = self.shape[axis]
        table = np.ones((stop - start, npts))
        for local, global_idx in enumerate(range(start, stop)):
            fill(table[local], global_idx, extent)
        return table

    def _build_node_tables(self):
        def mult(vec, idx, extent):
            if idx > 0:
                vec[0] = 2.0
            if idx < extent - 1:
                vec[-1] = 2.0

        def bound(vec, idx, extent):
            if idx == 0:
                vec[0] = 0.0
            if idx == extent - 1:
                vec[-1] = 0.0

        mx, my, mz = (self._axis_table(ax, mult) for ax in range(3))
        cx, cy, cz = self.counts
        nx, ny, nz = self.shape
        self.inv_mult = 1.0 / (
            mz[:, None, None, None, :, None, None]
            * my[None, :, None, None, None, :, None]
            * mx[None, None, :, None, None, None, :]
        )
        if self.bc == "dirichlet":
            dx, dy, dz = (self._axis_table(ax, bound) for ax in range(3))
            self.mask = (
                dz[:, None, None, None, :, None, None]
                * dy[None, :, None, None, None, :, None]
                * dx[None, None, :, None, None, None, :]
            )
        else:
            self.mask = None

    def _coordinates(self):
        """Broadcastable global coordinates of the block's nodes."""
        coords = []
        for ax in range(3):
            (start, stop) = self.block[ax]
            ref = (self.bases[ax].nodes + 1.0) / 2.0
            h = self.extents[ax]
            c = (np.arange(start, stop)[:, None] + ref[None, :]) * h
            coords.append(c)
        cxc, cyc, czc = coords
        x = cxc[None, None, :, None, None, None, :]
        y = cyc[None, :, None, None, None, :, None]
        z = czc[:, None, None, None, :, None, None]
        return x, y, z

    # -- gather-scatter ----------------------------------------------------

    _EL_AXIS = (2, 1, 0)  # array axis of the element index per direction
    _NODE_AXIS = (6, 5, 4)  # array axis of the node index per direction

    def dssum(self, arr):
        """Direct-stiffness summation: sum all copies of each shared node.

        One sweep per direction; every sweep exchanges full boundary planes
        with the face neighbors, so values accumulated in earlier sweeps
        carry edge and corner contributions along.  Both sides of an
        interface compute the same two-term sum, which IEEE addition makes
        bitwise identical.
        """
        for ax in range(3):
            el_ax = self._EL_AXIS[ax]
            node_ax = self._NODE_AXIS[ax]
            minus, plus = self.neighbors[ax]
            lo = _plane_index(arr.ndim, el_ax, 0, node_ax, 0)
            hi = _plane_index(arr.ndim, el_ax, -1, node_ax, -1)
            if minus is not None:
                self.endpoint.send(minus, arr[lo], tag="halo")
            if plus is not None:
                self.endpoint.send(plus, arr[hi], tag="halo")
            if arr.shape[el_ax] > 1:
                left = _plane_index(arr.ndim, el_ax, slice(None, -1), node_ax, -1)
                right = _plane_index(arr.ndim, el_ax, slice(1, None), node_ax, 0)
                shared = arr[left] + arr[right]
                arr[left] = shared
                arr[right] = shared
            if minus is not None:
                arr[lo] = arr[lo] + self.endpoint.receive(minus)
            if plus is not None:
                arr[hi] = arr[hi] + self.endpoint.receive(plus)
        return arr

    def dsavg(self, arr):
        """Idempotent coherence projection: multiplicity-weighted average."""
        self.dssum(arr)
        arr *= self.inv_mult
        return arr

    # -- counted kernels ---------------------------------------------------

    def _dot_partial(self, u, v):
        self.counter.count(add=u.size, mul=2 * u.size)
        return float(np.sum(u * v * self.inv_mult))

    def _allreduce(self, *partials):
        return allreduce_sum(self.endpoint, np.array(partials))

    def matvec(self, p):
        q = self.op.apply_grid(p, counter=self.counter)
        self.dssum(q)
        if self.mask is not None:
            q *= self.mask
        return q

    def _project_mean(self, arr):
        # remove the constant component, weighted by unique-node counts
        local = float(np.sum(arr * self.inv_mult))
        total, = self._allreduce(local)
        arr -= total / self._unique_nodes
        return arr

    # -- setup ---------------------------------------------------------------

    def setup(self, forcing=None):
        forcing = forcing or default_forcing
        nx, ny, nz = self.shape
        diag = np.broadcast_to(
            self.op.diagonal_grid(), self._arr_shape
        ).copy()
        self.dssum(diag)
        self.inv_diag = 1.0 / diag

        x, y, z = self._coordinates()
        f_vals = np.broadcast_to(
            forcing(x, y, z), self._arr_shape
        ).copy()
        b = f_vals * self.op.mass_weights
        self.dssum(b)
        if self.mask is not None:
            b *= self.mask
        ex, ey, ez = self.config.elements
        nxg = ex * (nx - 1) + 1
        nyg = ey * (ny - 1) + 1
        nzg = ez * (nz - 1) + 1
        self._unique_nodes = nxg * nyg * nzg * self.config.n_fields
        if self.bc == "neumann" and self.mean_zero:
            self._project_mean(b)
        self.rhs = b

    # -- the work step -------------------------------------------------------

    def run_step(self, rtol=None, max_iters=None):
        if max_iters is None:
            max_iters = self.config.cg_iters_per_step
        size = self.rhs.size
        x = np.zeros_like(self.rhs)
        r = self.rhs.copy()
        z = self.inv_diag * r
        self.counter.count(mul=size)
        if self.bc == "neumann" and self.mean_zero:
            self._project_mean(z)
        rho, rr = self._allreduce(
            self._dot_partial(r, z), self._dot_partial(r, r)
        )
        rr0 = rr if rr > 0 else 1.0
        threshold = (rtol * rtol) * rr0 if rtol is not None else None
        p = z.copy()
        iters = 0
        best_rr, best_iter = rr, 0
        while iters < max_iters:
            if threshold is not None and rr <= threshold:
                break
            q = self.matvec(p)
            den, = self._allreduce(self._dot_partial(p, q))
            if den == 0.0:
                break
            alpha = rho / den
            self.counter.count(div=1)
            x += alpha * p
            r -= alpha * q
            z = self.inv_diag * r
            self.counter.count(add=2 * size, mul=3 * size)
            if self.bc == "neumann" and self.mean_zero:
                self._project_mean(z)
            rho_new, rr = self._allreduce(
                self._dot_partial(r, z), self._dot_partial(r, r)
            )
            beta = rho_new / rho
            self.counter.count(div=1)
            p = z + beta * p
            self.counter.count(add=size, mul=size)
            rho = rho_new
            iters += 1
            if threshold is not None:
                if rr < STALL_IMPROVEMENT * best_rr:
                    best_rr, best_iter = rr, iters
                elif iters - best_iter >= STALL_WINDOW:
                    raise DivergenceError(
                        f"no residual progress over {STALL_WINDOW} "
                        f"iterations (relative residual "
                        f"{math.sqrt(rr / rr0):.3e}); a pure-Neumann "
                        "system needs the mean-zero projection"
                    )
        return x, iters, math.sqrt(rr / rr0)


def _plane_index(ndim, el_ax, el_sel, node_ax, node_sel):
    idx = [slice(None)] * ndim
    idx[el_ax] = el_sel
    idx[node_ax] = node_sel
    return tuple(idx)


def _rank_main(
    config,
    plan,
    endpoint,
    rtol,
    max_iters,
    bc,
    mean_zero,
    forcing,
    collect_fields,
    domain,
):
    worker = RankWorker(
        config,
        plan,
        endpoint,
        domain=domain,
        bc=bc,
        mean_zero=mean_zero,
    )
    worker.setup(forcing)
    setup_halo = endpoint.tag_words_sent["halo"]
    steps = []
    solution = None
    for _ in range(config.steps):
        endpoint.barrier()
        flops0 = worker.counter.total
        halo0 = endpoint.tag_words_sent["halo"]
        msgs0 = endpoint.tag_messages_sent["halo"]
        red0 = endpoint.tag_words_sent["reduce"]
        t0 = time.perf_counter()
        solution, iters, rel = worker.run_step(rtol=rtol, max_iters=max_iters)
        walltime = time.perf_counter() - t0
        steps.append(
            {
                "iterations": iters,
                "rel_residual": rel,
                "flops": worker.counter.total - flops0,
                "halo_words_sent": endpoint.tag_words_sent["halo"] - halo0,
                "halo_messages": endpoint.tag_messages_sent["halo"] - msgs0,
                "reduce_words_sent": endpoint.tag_words_sent["reduce"] - red0,
                "walltime": walltime,
            }
        )
    fields = {}
    if collect_fields:
        cx, cy, cz = worker.counts
        (x0, _), (y0, _), (z0, _) = worker.block
        for ez in range(cz):
            for ey in range(cy):
                for ex in range(cx):
                    fields[(x0 + ex, y0 + ey, z0 + ez)] = np.array(
                        solution[ez, ey, ex]
                    )
    return {
        "rank": endpoint.rank,
        "steps": steps,
        "counter": worker.counter,
        "halo_words_sent": endpoint.tag_words_sent["halo"],
        "halo_words_received": endpoint.tag_words_received["halo"],
        "setup_halo_words": setup_halo,
        "fields": fields,
    }


def run_work_unit(
    config,
    plan=None,
    endpoints=None,
    n_ranks=None,
    rtol=None,
    max_iters=None,
    bc="dirichlet",
    mean_zero=False,
    forcing=None,
    collect_fields=False,
    domain=(1.0, 1.0, 1.0),
):
    """Execute the CG work unit over rank workers on a loopback transport.

    With ``rtol`` unset each step runs the configured iteration budget;
    with ``rtol`` set, steps stop at the relative residual (and raise
    DivergenceError if the residual stalls first).
    """
    if plan is None:
        plan = partition_elements(config, n_ranks or 1)
    if endpoints is None:
        endpoints = loopback_transport(plan.n_ranks)
    if len(endpoints) != plan.n_ranks:
        raise ValueError("endpoint count does not match the partition plan")

    if plan.n_ranks == 1:
        results = [
            _rank_main(
                config, plan, endpoints[0], rtol, max_iters, bc,
                mean_zero, forcing, collect_fields, domain,
            )
        ]
    else:
        with ThreadPoolExecutor(max_workers=plan.n_ranks) as pool:
            futures = [
                pool.submit(
                    _rank_main,
                    config, plan, ep, rtol, max_iters, bc,
                    mean_zero, forcing, collect_fields, domain,
                )
                for ep in endpoints
            ]
            results = [f.result() for f in futures]

    results.sort(key=lambda r: r["rank"])
    n_steps = config.steps
    step_records = []
    for s in range(n_steps):
        per_rank = [r["steps"][s] for r in results]
        step_records.append(
            StepRecord(
                iterations=per_rank[0]["iterations"],
                rel_residual=per_rank[0]["rel_residual"],
                flops=sum(p["flops"] for p in per_rank),
                halo_words_sent=sum(p["halo_words_sent"] for p in per_rank),
                halo_messages=sum(p["halo_messages"] for p in per_rank),
                reduce_words_sent=sum(
                    p["reduce_words_sent"] for p in per_rank
                ),
                walltime=max(p["walltime"] for p in per_rank),
            )
        )
    fields = {}
    for r in results:
        fields.update(r["fields"])
    return WorkUnitReport(
        n_ranks=plan.n_ranks,
        steps=tuple(step_records),
        per_rank_flops=tuple(r["counter"] for r in results),
        per_rank_halo_words_sent=tuple(
            r["halo_words_sent"] for r in results
        ),
        per_rank_halo_words_received=tuple(
            r["halo_words_received"] for r in results
        ),
        setup_halo_words_sent=sum(r["setup_halo_words"] for r in results),
        fields=fields,
    )
