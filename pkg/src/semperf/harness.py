"""Benchmark campaigns: strong/weak scaling, degree sweeps, time budgets.

Simulated mode derives every figure from the analytic time model and the
partition-module counters, so records are exactly reproducible; executed
mode actually runs the work unit on the loopback transport and reports
measured wall clocks next to the same exact counters.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .gamma import gamma_from_times, predict_time
from .kernel import CaseConfig, MEGA
from .partition import (
    AppProfile,
    partition_elements,
    words_per_step,
)
from .solver import run_work_unit, step_flops

CAMPAIGN_KINDS = ("strong", "weak", "degree_sweep", "time_budget")
DEFAULT_WINDOW_S = 20.0
DEFAULT_JITTER = 0.02


@dataclass(frozen=True)
class CampaignSpec:
    """One benchmark campaign over a case, machine, and scaling axis."""

    kind: str
    case: CaseConfig
    machine: object
    p_list: tuple = ()
    weak_scales: tuple = ()  # ((elements, n_ranks), ...)
    degrees: tuple = ()
    budget_s: float = 0.0
    window_s: float = DEFAULT_WINDOW_S
    jitter: float = DEFAULT_JITTER
    seed: int = 0
    mode: str = "sim"

    def __post_init__(self):
        if self.kind not in CAMPAIGN_KINDS:
            raise ValueError(f"unknown campaign kind {self.kind!r}")
        if self.mode not in ("sim", "exec"):
            raise ValueError(f"mode must be sim or exec (got {self.mode!r})")
        if self.kind == "strong" and not self.p_list:
            raise ValueError("strong scaling needs a p_list")
        if self.kind == "weak":
            if not self.weak_scales:
                raise ValueError("weak scaling needs scale points")
            per_rank = {
                (ex * ey * ez) / p
                for (ex, ey, ez), p in self.weak_scales
            }
            if len(per_rank) != 1:
                raise ValueError(
                    "weak-scaling points must hold elements per rank "
                    f"constant (got loads {sorted(per_rank)})"
                )
        if self.kind == "degree_sweep":
            if not self.degrees or not self.p_list:
                raise ValueError("degree sweep needs degrees and a p_list")
            if len(self.p_list) != 1:
                raise ValueError("degree sweep runs at a single P")
        if self.kind == "time_budget":
            if self.budget_s <= 0:
                raise ValueError("time budget must be positive")
            if len(self.p_list) != 1:
                raise ValueError("time budget runs at a single P")
            if self.mode != "sim":
                raise ValueError(
                    "time_budget campaigns run in simulated mode only"
                )


@dataclass(frozen=True)
class StepTiming:
    walltime: float
    t_p: float = None
    t_c: float = None
    t_l: float = None
    flops: int = 0
    words: int = 0
    messages: int = 0
    iterations: int = 0

    def to_json_dict(self):
        return {
            "walltime_s": self.walltime,
            "t_p_s": self.t_p,
            "t_c_s": self.t_c,
            "t_l_s": self.t_l,
            "flops": self.flops,
            "words": self.words,
            "messages": self.messages,
            "iterations": self.iterations,
        }


@dataclass
class RunRecord:
    """One scaling point: configuration, per-step figures, and summaries."""

    kind: str
    mode: str
    machine_name: str
    case: CaseConfig
    n_ranks: int
    rank_grid: tuple
    cut_face_count: int
    steps: tuple
    gamma: float = None
    efficiency: float = None
    speedup: float = None
    steps_completed: int = None
    window_samples: tuple = ()
    warnings: tuple = ()
    seed: int = 0

    @property
    def step_walltime(self):
        return self.steps[0].walltime if self.steps else 0.0

    @property
    def mflops_wall(self):
        """Total rate over wall time, the figure a monitor would report."""
        if not self.steps or self.step_walltime == 0:
            return 0.0
        return self.steps[0].flops / (self.step_walltime * MEGA)

    @property
    def mflops_per_rank_compute(self):
        """Per-rank rate over compute time alone (simulated mode only)."""
        s = self.steps[0]
        if s.t_p is None or s.t_p == 0:
            return None
        return s.flops / (self.n_ranks * s.t_p * MEGA)

    def to_json_dict(self):
        return {
            "kind": self.kind,
            "mode": self.mode,
            "machine": self.machine_name,
            "case": {
                "elements": list(self.case.elements),
                "degrees": list(self.case.degrees),
                "n_fields": self.case.n_fields,
                "steps": self.case.steps,
                "cg_iters_per_step": self.case.cg_iters_per_step,
            },
            "n_ranks": self.n_ranks,
            "rank_grid": list(self.rank_grid),
            "cut_face_count": self.cut_face_count,
            "gamma": _json_num(self.gamma),
            "efficiency": self.efficiency,
            "speedup": self.speedup,
            "mflops_wall": self.mflops_wall,
            "mflops_per_rank_compute": self.mflops_per_rank_compute,
            "steps_completed": self.steps_completed,
            "window_samples": list(self.window_samples),
            "warnings": list(self.warnings),
            "seed": self.seed,
            "steps": [s.to_json_dict() for s in self.steps],
        }


def _json_num(x):
    if x is None:
        return None
    return "inf" if math.isinf(x) else x


def _simulated_point(case, machine, n_ranks, seed=0):
    plan = partition_elements(case, n_ranks)
    flops = step_flops(case, n_ranks)
    words = words_per_step(plan, case, case.cg_iters_per_step)
    messages = plan.messages_per_exchange * case.cg_iters_per_step
    eff_machine = machine.at_degree(max(case.degrees))
    td = predict_time(
        eff_machine, AppProfile(flops, words), n_ranks, messages
    )
    gamma = gamma_from_times(td)
    eff = td.t_p / td.total
    step = StepTiming(
        walltime=td.total,
        t_p=td.t_p,
        t_c=td.t_c,
        t_l=td.t_l,
        flops=flops,
        words=words,
        messages=messages,
        iterations=case.cg_iters_per_step,
    )
    return RunRecord(
        kind="point",
        mode="sim",
        machine_name=machine.name,
        case=case,
        n_ranks=n_ranks,
        rank_grid=plan.rank_grid,
        cut_face_count=len(plan.cut_faces),
        steps=(step,) * case.steps,
        gamma=gamma,
        efficiency=eff,
        speedup=n_ranks * eff,
        seed=seed,
    )


def _executed_point(case, machine, n_ranks, seed=0):
    plan = partition_elements(case, n_ranks)
    report = run_work_unit(case, plan=plan)
    steps = tuple(
        StepTiming(
            walltime=s.walltime,
            flops=s.flops,
            words=s.halo_words_sent,
            messages=s.halo_messages,
            iterations=s.iterations,
        )
        for s in report.steps
    )
    return RunRecord(
        kind="point",
        mode="exec",
        machine_name=machine.name,
        case=case,
        n_ranks=n_ranks,
        rank_grid=plan.rank_grid,
        cut_face_count=len(plan.cut_faces),
        steps=steps,
        seed=seed,
    )


def _point(case, machine, n_ranks, mode, seed=0):
    if mode == "sim":
        return _simulated_point(case, machine, n_ranks, seed=seed)
    return _executed_point(case, machine, n_ranks, seed=seed)


def _fill_executed_efficiency(records):
    """Derive executed-mode efficiency from the P=1 baseline, if present."""
    baseline = next((r for r in records if r.n_ranks == 1), None)
    if baseline is None or baseline.step_walltime == 0:
        return records
    t1 = baseline.step_walltime
    for rec in records:
        if rec.step_walltime > 0:
            rec.efficiency = t1 / (rec.n_ranks * rec.step_walltime)
            rec.speedup = rec.n_ranks * rec.efficiency
    return records


def run_strong_scaling(spec):
    """Fixed problem size, one record per rank count."""
    records = []
    for p in spec.p_list:
        rec = _point(spec.case, spec.machine, p, spec.mode, seed=spec.seed)
        rec.kind = "strong"
        records.append(rec)
    if spec.mode == "exec":
        _fill_executed_efficiency(records)
    return records


def run_weak_scaling(spec):
    """Fixed per-rank problem size, one record per scale point."""
    records = []
    for elements, p in spec.weak_scales:
        case = replace(spec.case, elements=tuple(elements))
        rec = _point(case, spec.machine, p, spec.mode, seed=spec.seed)
        rec.kind = "weak"
        records.append(rec)
    return records


def run_degree_sweep(spec):
    """Fixed mesh and rank count, one record per polynomial degree."""
    p = spec.p_list[0]
    records = []
    for degree in spec.degrees:
        case = replace(spec.case, degrees=(degree, degree, degree))
        rec = _point(case, spec.machine, p, spec.mode, seed=spec.seed)
        rec.kind = "degree_sweep"
        records.append(rec)
    return records


def run_time_budget(spec):
    """Count the steps that fit a wall-clock budget; sample usage windows."""
    p = spec.p_list[0]
    rec = _simulated_point(spec.case, spec.machine, p, seed=spec.seed)
    rec.kind = "time_budget"
    step_time = rec.step_walltime
    completed = int(spec.budget_s // step_time) if step_time > 0 else 0
    warnings = ()
    if completed == 0:
        warnings = ("budget smaller than one step: zero steps completed",)
    n_windows = int(spec.budget_s // spec.window_s)
    rng = np.random.default_rng(spec.seed)
    base = rec.efficiency
    if n_windows > 0:
        noise = rng.uniform(-spec.jitter, spec.jitter, n_windows)
        samples = np.clip(base + noise, 0.0, 1.0)
    else:
        samples = np.array([])
    rec.steps_completed = completed
    rec.window_samples = tuple(float(s) for s in samples)
    rec.warnings = warnings
    return rec


def run_campaign(spec):
    """Dispatch on the campaign kind; always returns a list of records."""
    if spec.kind == "strong":
        return run_strong_scaling(spec)
    if spec.kind == "weak":
        return run_weak_scaling(spec)
    if spec.kind == "degree_sweep":
        return run_degree_sweep(spec)
    return [run_time_budget(spec)]


# -- serialization ----------------------------------------------------------


def records_to_json(records):
    return json.dumps(
        [r.to_json_dict() for r in records], sort_keys=True, indent=2
    )


SUMMARY_COLUMNS = (
    "P",
    "elements",
    "degree",
    "mflops_wall",
    "walltime_s",
    "efficiency",
    "speedup",
    "gamma",
)


def summary_rows(records):
    rows = []
    for r in records:
        ex, ey, ez = r.case.elements
        rows.append(
            {
                "P": r.n_ranks,
                "elements": f"{ex}x{ey}x{ez}",
                "degree": max(r.case.degrees),
                "mflops_wall": _fmt(r.mflops_wall),
                "walltime_s": _fmt(r.step_walltime),
                "efficiency": _fmt(r.efficiency),
                "speedup": _fmt(r.speedup),
                "gamma": _fmt(r.gamma),
            }
        )
    return rows


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return f"{x:.6g}"
    return str(x)


def records_to_summary_csv(records):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS)
    writer.writeheader()
    for row in summary_rows(records):
        writer.writerow(row)
    return buf.getvalue()


STEP_COLUMNS = (
    "P",
    "step",
    "walltime_s",
    "t_p_s",
    "t_c_s",
    "t_l_s",
    "flops",
    "words",
    "messages",
    "iterations",
)


def records_to_steps_csv(records):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=STEP_COLUMNS)
    writer.writeheader()
    for rec in records:
        for i, s in enumerate(rec.steps):
            writer.writerow(
                {
                    "P": rec.n_ranks,
                    "step": i,
                    "walltime_s": _fmt(s.walltime),
                    "t_p_s": _fmt(s.t_p),
                    "t_c_s": _fmt(s.t_c),
                    "t_l_s": _fmt(s.t_l),
                    "flops": s.flops,
                    "words": s.words,
                    "messages": s.messages,
                    "iterations": s.iterations,
                }
            )
    return buf.getvalue()
