"""Heuristic speedup model built on the compute/communicate ratio Gamma.

Gamma compares what the application demands (operations per word moved) to
what the machine offers (flop rate per unit link bandwidth).  Equivalently
it is the ratio of per-step compute time to communication-plus-latency
time, and it fixes both the parallel efficiency E = Gamma / (1 + Gamma)
and the speedup S = P * E.  A saturated (communication-free) run is
represented by ``math.inf``.
"""

import json
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import CalibrationDegenerateError
from .kernel import MEGA, WORD_BYTES


@dataclass(frozen=True)
class MachineProfile:
    """Per-rank compute rate and interconnect characteristics.

    Rates are MFlop/s, bandwidths MB/s (1 MB = 1e6 bytes), latency seconds
    per message.  ``link_sharing`` is the number of ranks on a node sharing
    one link, so the effective per-rank bandwidth is bandwidth / sharing.
    ``rate_curvature`` parametrizes how the per-rank rate improves with the
    polynomial degree: rate(N) = effective_core_rate * (1 - c / (N + 1)).
    """

    name: str
    effective_core_rate: float
    link_bandwidth: float
    latency: float
    cores_per_node: int = 1
    link_sharing: float = 1.0
    rate_curvature: float = 0.0

    def __post_init__(self):
        if self.effective_core_rate <= 0 or self.link_bandwidth <= 0:
            raise ValueError("rates and bandwidths must be positive")
        if self.latency < 0:
            raise ValueError("latency must be >= 0")
        if self.link_sharing < 1:
            raise ValueError("link_sharing must be >= 1")
        if self.cores_per_node < 1:
            raise ValueError("cores_per_node must be >= 1")

    @property
    def per_rank_bandwidth(self):
        return self.link_bandwidth / self.link_sharing

    def rate_at_degree(self, degree):
        scale = 1.0 - self.rate_curvature / (degree + 1)
        if scale <= 0:
            raise ValueError(
                f"rate model of {self.name} degenerates at degree {degree}"
            )
        return self.effective_core_rate * scale

    def at_degree(self, degree):
        """Profile with the degree-dependent rate folded in."""
        return replace(
            self,
            effective_core_rate=self.rate_at_degree(degree),
            rate_curvature=0.0,
        )

    def to_json_dict(self):
        return {
            "name": self.name,
            "effective_core_rate_mflops": self.effective_core_rate,
            "link_bandwidth_mbs": self.link_bandwidth,
            "latency_s": self.latency,
            "cores_per_node": self.cores_per_node,
            "link_sharing": self.link_sharing,
            "rate_curvature": self.rate_curvature,
        }


@dataclass(frozen=True)
class TimeDecomposition:
    """Per-step wall time split into compute, transfer and latency parts."""

    t_p: float
    t_c: float
    t_l: float

    def __post_init__(self):
        if self.t_p < 0 or self.t_c < 0 or self.t_l < 0:
            raise ValueError("time components must be >= 0")

    @property
    def total(self):
        return self.t_p + self.t_c + self.t_l

    def to_json_dict(self):
        return {
            "t_p_s": self.t_p,
            "t_c_s": self.t_c,
            "t_l_s": self.t_l,
            "t_total_s": self.total,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_json_dict(), sort_keys=True, **kwargs)


def predict_speedup(p, gamma):
    """S = P / (1 + 1/Gamma); equals P when communication is free."""
    if p < 1:
        raise ValueError("P must be >= 1")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if math.isinf(gamma):
        return float(p)
    return p / (1.0 + 1.0 / gamma)


def efficiency(gamma):
    """E = Gamma / (1 + Gamma) = S / P."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if math.isinf(gamma):
        return 1.0
    return gamma / (1.0 + gamma)


def gamma_from_efficiency(e):
    """Invert the efficiency relation: Gamma = E / (1 - E)."""
    if not 0.0 < e < 1.0:
        raise ValueError(
            f"efficiency must lie strictly between 0 and 1 (got {e}); "
            "E = 1 means unbounded Gamma"
        )
    return e / (1.0 - e)


def gamma_from_times(decomp):
    """Gamma = T_P / (T_C + T_L); saturated when both vanish."""
    denom = decomp.t_c + decomp.t_l
    if denom == 0.0:
        return math.inf
    return decomp.t_p / denom


def predict_time(machine, app, p, messages_per_step):
    """Model the per-step time decomposition for P ranks of a machine."""
    if p < 1:
        raise ValueError("P must be >= 1")
    t_p = app.flops_per_step / (p * machine.effective_core_rate * MEGA)
    t_c = (
        app.words_per_step
        * WORD_BYTES
        / (p * machine.per_rank_bandwidth * MEGA)
    )
    t_l = messages_per_step * machine.latency
    return TimeDecomposition(t_p=t_p, t_c=t_c, t_l=t_l)


BANDWIDTH_MODELS = ("base", "scaled", "scaled_shared")


@dataclass(frozen=True)
class CalibrationInput:
    """One machine's measured point for the interconnect fit.

    ``bandwidth_model`` selects the effective link bandwidth: the base
    interconnect b1, a scaled one alpha*b1, or the scaled one divided by a
    per-node ``sharing`` factor.
    """

    name: str
    t_p: float
    gamma: float
    bandwidth_model: str
    sharing: float = 1.0

    def __post_init__(self):
        if self.bandwidth_model not in BANDWIDTH_MODELS:
            raise ValueError(
                f"unknown bandwidth model {self.bandwidth_model!r}; "
                f"expected one of {BANDWIDTH_MODELS}"
            )
        if self.t_p <= 0 or self.gamma <= 0:
            raise ValueError("t_p and gamma must be positive")
        if self.sharing < 1:
            raise ValueError("sharing must be >= 1")

    def effective_bandwidth(self, base_bandwidth, alpha):
        if self.bandwidth_model == "base":
            return base_bandwidth
        if self.bandwidth_model == "scaled":
            return alpha * base_bandwidth
        return alpha * base_bandwidth / self.sharing


@dataclass(frozen=True)
class GammaFit:
    """Calibrated communication volume, bandwidth ratio, and latency."""

    w_mb: float
    alpha: float
    t_l: float
    base_bandwidth: float
    residuals: tuple
    input_names: tuple

    @property
    def scaled_bandwidth(self):
        return self.alpha * self.base_bandwidth

    def to_json_dict(self):
        return {
            "w_mb": self.w_mb,
            "alpha": self.alpha,
            "t_l_s": self.t_l,
            "base_bandwidth_mbs": self.base_bandwidth,
            "scaled_bandwidth_mbs": self.scaled_bandwidth,
            "residuals_s": dict(zip(self.input_names, self.residuals)),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_json_dict(), sort_keys=True, **kwargs)


def _fit_residuals(inputs, base_bandwidth, w, alpha, t_l):
    return tuple(
        w / row.effective_bandwidth(base_bandwidth, alpha)
        + t_l
        - row.t_p / row.gamma
        for row in inputs
    )


def _duplicate_rows(inputs):
    seen = {}
    dupes = []
    for row in inputs:
        key = (row.bandwidth_model, row.sharing)
        if key in seen:
            dupes.append(f"{seen[key]}/{row.name}")
        else:
            seen[key] = row.name
    return dupes


def _solve_exact(inputs, base_bandwidth):
    # Unknowns (W, V, T_L) with V = W / alpha: every equation
    # W / b_eff + T_L = T_P / Gamma becomes linear.
    rows = []
    rhs = []
    for row in inputs:
        if row.bandwidth_model == "base":
            rows.append([1.0 / base_bandwidth, 0.0, 1.0])
        elif row.bandwidth_model == "scaled":
            rows.append([0.0, 1.0 / base_bandwidth, 1.0])
        else:
            rows.append([0.0, row.sharing / base_bandwidth, 1.0])
        rhs.append(row.t_p / row.gamma)
    matrix = np.array(rows)
    if abs(np.linalg.det(matrix)) < 1e-12:
        dupes = _duplicate_rows(inputs)
        detail = (
            f"duplicates: {', '.join(dupes)}"
            if dupes
            else "rows do not span the three unknowns"
        )
        raise CalibrationDegenerateError(
            f"calibration system is singular ({detail})",
            inputs=[r.name for r in inputs],
        )
    w, v, t_l = np.linalg.solve(matrix, np.array(rhs))
    return w, v, t_l


def _solve_least_squares(inputs, base_bandwidth):
    # For a fixed alpha the residuals are linear in (W, T_L); scan alpha.
    c = np.array([row.t_p / row.gamma for row in inputs])

    def solve_wtl(alpha):
        a = np.array(
            [
                [1.0 / row.effective_bandwidth(base_bandwidth, alpha), 1.0]
                for row in inputs
            ]
        )
        sol, _, rank, _ = np.linalg.lstsq(a, c, rcond=None)
        if rank < 2:
            raise CalibrationDegenerateError(
                "bandwidth columns are collinear; cannot separate W from T_L",
                inputs=[r.name for r in inputs],
            )
        resid = a @ sol - c
        return sol, float(resid @ resid)

    result = minimize_scalar(
        lambda a: solve_wtl(a)[1],
        bounds=(1.0, 100.0),
        method="bounded",
        options={"xatol": 1e-9},
    )
    alpha = float(result.x)
    (w, t_l), _ = solve_wtl(alpha)
    return w, w / alpha, t_l, alpha


def calibrate(inputs, base_bandwidth):
    """Fit (W, alpha, T_L) to measured (T_P, Gamma) points.

    Three inputs are solved in closed form; more are fit by least squares
    with a bounded 1-D search over alpha.  W is returned in MB for the
    given base bandwidth in MB/s.
    """
    inputs = list(inputs)
    if len(inputs) < 3:
        raise CalibrationDegenerateError(
            f"need at least 3 inputs, got {len(inputs)}",
            inputs=[r.name for r in inputs],
        )
    models = {row.bandwidth_model for row in inputs}
    if len(models) < 2:
        raise CalibrationDegenerateError(
            f"inputs span a single bandwidth model {models.pop()!r}; "
            "alpha cannot be identified",
            inputs=[r.name for r in inputs],
        )
    if base_bandwidth <= 0:
        raise ValueError("base_bandwidth must be positive")
    if len(inputs) == 3:
        w, v, t_l = _solve_exact(inputs, base_bandwidth)
        alpha = w / v if v != 0 else math.inf
    else:
        w, v, t_l, alpha = _solve_least_squares(inputs, base_bandwidth)
    if w <= 0 or alpha <= 0 or t_l < -1e-9:
        raise CalibrationDegenerateError(
            f"calibration produced infeasible parameters "
            f"(W={w:.4g} MB, alpha={alpha:.4g}, T_L={t_l:.4g} s)",
            inputs=[r.name for r in inputs],
        )
    t_l = max(t_l, 0.0)
    return GammaFit(
        w_mb=float(w),
        alpha=float(alpha),
        t_l=float(t_l),
        base_bandwidth=float(base_bandwidth),
        residuals=_fit_residuals(inputs, base_bandwidth, w, alpha, t_l),
        input_names=tuple(row.name for row in inputs),
    )


class NodeUsage(NamedTuple):
    value: float
    saturated: bool


def normalize_node_usage(raw_node_usage, active_ranks, cores_per_node):
    """Convert node-average CPU usage to per-active-rank usage.

    A node monitor averages over all cores, so a node running 2 ranks on 4
    cores at full tilt reads 50%; the per-rank figure is raw * cores /
    active ranks, capped at 1 with a saturation flag.
    """
    if active_ranks == 0:
        raise ValueError("active_ranks must be >= 1")
    if not 0.0 <= raw_node_usage <= 1.0:
        raise ValueError(f"raw usage must lie in [0, 1] (got {raw_node_usage})")
    if not 1 <= active_ranks <= cores_per_node:
        raise ValueError(
            f"active_ranks must lie in [1, cores_per_node]: "
            f"{active_ranks} vs {cores_per_node}"
        )
    value = raw_node_usage * cores_per_node / active_ranks
    if value >= 1.0:
        return NodeUsage(1.0, True)
    return NodeUsage(value, False)


@dataclass(frozen=True)
class UsageAnalysis:
    """Histogram of per-window efficiency samples plus mean and Gamma."""

    bin_width: float
    bin_edges: tuple
    counts: tuple
    mean: float
    gamma: float

    def nonzero_bins(self):
        return [
            (edge, count)
            for edge, count in zip(self.bin_edges, self.counts)
            if count
        ]


def analyze_usage_histogram(samples, bin_width=0.01):
    """Bin efficiency samples into [x, x + bin_width) buckets.

    Returns bucket counts over [0, 1], the arithmetic mean efficiency, and
    the implied Gamma = E / (1 - E) (inf when the mean saturates at 1).
    """
    samples = np.asarray(list(samples), dtype=float)
    if samples.size == 0:
        raise ValueError("no usage samples to analyze")
    if not 0.0 < bin_width <= 1.0:
        raise ValueError("bin_width must lie in (0, 1]")
    if np.any(samples < 0.0) or np.any(samples > 1.0):
        raise ValueError("usage samples must lie in [0, 1]")
    n_bins = math.floor(1.0 / bin_width) + 1
    edges = np.arange(n_bins + 1) * bin_width
    idx = np.searchsorted(edges, samples, side="right") - 1
    idx = np.clip(idx, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    mean = float(samples.mean())
    if mean >= 1.0:
        gamma = math.inf
    elif mean <= 0.0:
        gamma = 0.0
    else:
        gamma = mean / (1.0 - mean)
    return UsageAnalysis(
        bin_width=bin_width,
        bin_edges=tuple(float(e) for e in edges[:-1]),
        counts=tuple(int(c) for c in counts),
        mean=mean,
        gamma=gamma,
    )
