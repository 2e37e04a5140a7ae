"""Acceptance gate: one test per release criterion, at pinned tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to get one printed
pass line per criterion.
"""

import json
import math

import numpy as np
import pytest

from semperf.basis import build_gll_basis, gll_nodes_weights
from semperf.cli import main
from semperf.gamma import gamma_from_efficiency, gamma_from_times, TimeDecomposition
from semperf.harness import CampaignSpec, run_strong_scaling, run_weak_scaling
from semperf.kernel import (
    CaseConfig,
    ElementField,
    FlopCounter,
    apply_element_laplacian,
    tensor_derivative,
)
from semperf.partition import partition_elements, words_per_step
from semperf.profiles import REFERENCE_STRONG_CASE, builtin_profiles
from semperf.refdata import (
    INTERCONNECT_ROWS,
    STRONG_EFFICIENCY_TARGETS,
    STRONG_SCALING_ROWS,
    TOTAL_WORK_GFLOP,
    USAGE_GAMMA_PAIRS,
)
from semperf.solver import default_solution, run_work_unit

from reference import ref_element_laplacian, ref_tensor_derivative

CALIBRATION_CSV = """name,t_p,gamma,bandwidth_model,sharing
pleiades,13.58,1.44,base,1
pleiades2,7.56,3.81,scaled,1
pleiades2plus,7.93,1.60,scaled_shared,4
"""


def _report(number, text):
    print(f"ACCEPTANCE {number:2d} PASS: {text}")


def test_criterion_01_gamma_efficiency_identities():
    for name, usage, gamma in USAGE_GAMMA_PAIRS:
        assert gamma_from_efficiency(usage) == pytest.approx(
            gamma, abs=0.01
        ), name
    _report(1, "gamma/efficiency identities on the three usage pairs (+-0.01)")


def test_criterion_02_time_decomposition_rows():
    for name, t_p, t_c, t_l, expected in INTERCONNECT_ROWS:
        got = gamma_from_times(TimeDecomposition(t_p=t_p, t_c=t_c, t_l=t_l))
        assert got == pytest.approx(expected, abs=0.01), name
    _report(2, "gamma from measured time decompositions (+-0.01)")


def test_criterion_03_interconnect_calibration(tmp_path, capsys):
    table = tmp_path / "gamma.csv"
    table.write_text(CALIBRATION_CSV, encoding="utf-8")
    artifact = tmp_path / "fit.json"
    code = main(["calibrate", str(table), "--out", str(artifact)])
    assert code == 0
    capsys.readouterr()
    fit = json.loads(artifact.read_text(encoding="utf-8"))
    assert fit["t_l_s"] == pytest.approx(1.0, abs=0.05)
    assert fit["alpha"] == pytest.approx(8.4, abs=0.2)
    assert fit["scaled_bandwidth_mbs"] == pytest.approx(101.0, rel=0.02)
    assert fit["w_mb"] == pytest.approx(101.0, rel=0.02)
    _report(
        3,
        f"calibration: T_L={fit['t_l_s']:.3f} s, alpha={fit['alpha']:.3f}, "
        f"W={fit['w_mb']:.1f} MB, b2={fit['scaled_bandwidth_mbs']:.1f} MB/s",
    )


def test_criterion_04_strong_scaling_reproduction():
    machine = builtin_profiles()["pleiades2-sim"]
    spec = CampaignSpec(
        kind="strong",
        case=REFERENCE_STRONG_CASE,
        machine=machine,
        p_list=(1, 2, 8, 16, 32),
    )
    records = {r.n_ranks: r for r in run_strong_scaling(spec)}
    assert records[1].step_walltime == pytest.approx(243.59, rel=1e-6)
    for p, target in STRONG_EFFICIENCY_TARGETS.items():
        assert records[p].efficiency == pytest.approx(target, abs=0.03), p
    _report(
        4,
        "simulated strong scaling hits the measured efficiency curve "
        "(+-0.03) with the 243.59 s single-rank step",
    )


def test_criterion_05_constant_total_work():
    for p, gflops, runtime, _ in STRONG_SCALING_ROWS:
        work = gflops * runtime
        assert work == pytest.approx(TOTAL_WORK_GFLOP, rel=0.01), p
    _report(
        5,
        f"rate x runtime = {TOTAL_WORK_GFLOP} GFlop within 1% on every "
        "strong-scaling row",
    )


def test_criterion_06_weak_scaling():
    machine = builtin_profiles()["pleiades2-sim"]
    spec = CampaignSpec(
        kind="weak",
        case=REFERENCE_STRONG_CASE,
        machine=machine,
        weak_scales=(((4, 4, 4), 1), ((8, 8, 8), 8), ((16, 16, 16), 64)),
    )
    records = run_weak_scaling(spec)
    t_ps = [r.steps[0].t_p for r in records]
    assert t_ps[0] == t_ps[1] == t_ps[2]
    rates = [r.mflops_per_rank_compute for r in records]
    assert max(rates) / min(rates) <= 1.05
    _report(
        6,
        "weak scaling at 64 elem/rank: per-rank T_P exactly constant, "
        "per-rank rate within 5%",
    )


def test_criterion_07_sem_kernel_properties():
    # weight sums and quadrature exactness
    for n in (2, 4, 8, 12):
        nodes, weights = gll_nodes_weights(n)
        assert abs(weights.sum() - 2.0) < 1e-12
        for k in range(2 * n):
            exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
            approx = float(weights @ nodes**k)
            assert abs(approx - exact) <= 1e-11 * max(1.0, abs(exact))
    # differentiation exactness on polynomials up to the basis degree
    for n in (2, 4, 8, 12):
        basis = build_gll_basis(n)
        for k in range(n + 1):
            expect = (
                k * basis.nodes ** (k - 1) if k > 0 else np.zeros(n + 1)
            )
            got = basis.diff_matrix @ basis.nodes**k
            assert np.abs(got - expect).max() < 1e-9
    # operator symmetry
    basis = build_gll_basis(6)
    rng = np.random.default_rng(1)
    u = ElementField((0, 0, 0), (7, 7, 7), rng.standard_normal(343))
    v = ElementField((0, 0, 0), (7, 7, 7), rng.standard_normal(343))
    au = apply_element_laplacian(u, basis)
    av = apply_element_laplacian(v, basis)
    left, right = float(au.values @ v.values), float(u.values @ av.values)
    assert abs(left - right) <= 1e-10 * max(1.0, abs(left))
    # spectral decay of the manufactured-solution error
    errors = {}
    for degree in (4, 10):
        config = CaseConfig(
            elements=(2, 2, 2),
            degrees=(degree, degree, degree),
            cg_iters_per_step=1,
        )
        report = run_work_unit(
            config, n_ranks=1, rtol=1e-12, max_iters=2000, collect_fields=True
        )
        gll = build_gll_basis(degree)
        ref = (gll.nodes + 1.0) / 4.0
        worst = 0.0
        for (i, j, k), grid in report.fields.items():
            x = (i * 0.5 + ref)[None, None, :]
            y = (j * 0.5 + ref)[None, :, None]
            z = (k * 0.5 + ref)[:, None, None]
            worst = max(
                worst, float(np.abs(grid[0] - default_solution(x, y, z)).max())
            )
        errors[degree] = worst
    assert errors[4] / errors[10] >= 100.0
    _report(
        7,
        "SEM kernel: weight sum, quadrature/differentiation exactness, "
        f"operator symmetry, error {errors[4]:.1e} -> {errors[10]:.1e} "
        "from N=4 to N=10",
    )


def test_criterion_08_counter_oracles():
    # element-kernel flop counters against the loop-level reference
    for n in (2, 3, 4):
        basis = build_gll_basis(n)
        rng = np.random.default_rng(n)
        grid = rng.standard_normal((n + 1, n + 1, n + 1))
        f = ElementField.from_grid((0, 0, 0), grid)
        counter = FlopCounter()
        tensor_derivative(f, basis, "z", counter=counter)
        _, tally = ref_tensor_derivative(grid, basis.diff_matrix, 2)
        assert (
            counter.additions,
            counter.multiplications,
            counter.divisions,
        ) == (tally.additions, tally.multiplications, tally.divisions)
        counter = FlopCounter()
        apply_element_laplacian(
            f, basis, extents=(0.5, 0.5, 0.5), counter=counter
        )
        _, tally = ref_element_laplacian(
            grid, (basis, basis, basis), (0.5, 0.5, 0.5)
        )
        assert (
            counter.additions,
            counter.multiplications,
            counter.divisions,
        ) == (tally.additions, tally.multiplications, tally.divisions)
    # executed-mode transport word counters against partition predictions
    combos = [
        ((2, 1, 1), (1, 2)),
        ((2, 2, 2), (1, 2, 4, 8)),
        ((4, 4, 4), (1, 2, 4, 8)),
    ]
    for elements, p_values in combos:
        config = CaseConfig(
            elements=elements, degrees=(3, 3, 3), cg_iters_per_step=4
        )
        for p in p_values:
            plan = partition_elements(config, p)
            report = run_work_unit(config, plan=plan)
            predicted = words_per_step(plan, config, config.cg_iters_per_step)
            assert report.steps[0].halo_words_sent == predicted, (elements, p)
    _report(
        8,
        "flop counters match the loop-level reference exactly (N<=4); "
        "transport word counters equal partition predictions exactly",
    )


def test_criterion_09_cross_rank_solver_stability():
    config = CaseConfig(
        elements=(8, 8, 8), degrees=(8, 8, 8), cg_iters_per_step=1
    )
    counts = {}
    for p in (1, 2, 4, 8):
        report = run_work_unit(config, n_ranks=p, rtol=1e-8, max_iters=3000)
        counts[p] = report.iterations[0]
        assert report.steps[0].rel_residual < 1e-8
    assert max(counts.values()) - min(counts.values()) <= 1
    _report(
        9,
        f"CG to 1e-8 on 8^3/N=8 takes {sorted(set(counts.values()))} "
        "iterations across P in {1,2,4,8} (within +-1)",
    )


def test_criterion_10_campaign_determinism(tmp_path):
    from semperf.profiles import example_config_dict

    cfg = example_config_dict()
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    outputs = []
    for sub in ("run1", "run2"):
        for campaign in ("strong8", "usage10h"):
            code = main(
                [
                    "bench",
                    campaign,
                    "--config",
                    str(path),
                    "--mode",
                    "sim",
                    "--seed",
                    "7",
                    "--out",
                    str(tmp_path / sub),
                ]
            )
            assert code == 0
        files = {
            f.name: f.read_bytes() for f in sorted((tmp_path / sub).iterdir())
        }
        outputs.append(files)
    assert outputs[0].keys() == outputs[1].keys()
    for name in outputs[0]:
        assert outputs[0][name] == outputs[1][name], name
    _report(
        10,
        "two simulated campaign runs with identical spec and seed are "
        "byte-identical",
    )
