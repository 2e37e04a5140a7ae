import numpy as np
import pytest

from semperf.basis import build_gll_basis
from semperf.errors import DivergenceError
from semperf.kernel import CaseConfig
from semperf.partition import partition_elements, words_per_step
from semperf.solver import (
    RankWorker,
    default_solution,
    iteration_flops,
    run_work_unit,
    step_flops,
)
from semperf.transport import loopback_transport


def small_case(**overrides):
    params = dict(
        elements=(2, 2, 2), degrees=(3, 3, 3), steps=1, cg_iters_per_step=5
    )
    params.update(overrides)
    return CaseConfig(**params)


def shared_face_pairs(elements):
    ex, ey, ez = elements
    for k in range(ez):
        for j in range(ey):
            for i in range(ex):
                if i + 1 < ex:
                    yield (i, j, k), (i + 1, j, k), 0
                if j + 1 < ey:
                    yield (i, j, k), (i, j + 1, k), 1
                if k + 1 < ez:
                    yield (i, j, k), (i, j, k + 1), 2


class TestFlopAccounting:
    @pytest.mark.parametrize("n_ranks", [1, 2, 4, 8])
    def test_counters_match_closed_form(self, n_ranks):
        config = small_case()
        report = run_work_unit(config, n_ranks=n_ranks)
        assert report.steps[0].flops == step_flops(config, n_ranks)

    def test_multi_step_and_fields(self):
        config = small_case(steps=3, n_fields=2)
        report = run_work_unit(config, n_ranks=2)
        expected = step_flops(config, 2)
        for step in report.steps:
            assert step.flops == expected

    def test_total_is_sum_of_ranks(self):
        config = small_case()
        report = run_work_unit(config, n_ranks=4)
        assert report.total_flops == sum(
            c.total for c in report.per_rank_flops
        )
        assert report.total_flops == config.steps * step_flops(config, 4)

    def test_iteration_flops_scale_with_elements(self):
        base = small_case()
        doubled = small_case(elements=(4, 2, 2))
        assert iteration_flops(doubled) == 2 * iteration_flops(base)


class TestWordAccounting:
    @pytest.mark.parametrize(
        "elements,n_ranks",
        [
            ((2, 1, 1), 1),
            ((2, 1, 1), 2),
            ((2, 2, 2), 1),
            ((2, 2, 2), 2),
            ((2, 2, 2), 4),
            ((2, 2, 2), 8),
            ((4, 4, 4), 1),
            ((4, 4, 4), 2),
            ((4, 4, 4), 4),
            ((4, 4, 4), 8),
        ],
    )
    def test_halo_counters_equal_partition_prediction(self, elements, n_ranks):
        config = small_case(elements=elements)
        plan = partition_elements(config, n_ranks)
        report = run_work_unit(config, plan=plan)
        predicted = words_per_step(plan, config, config.cg_iters_per_step)
        assert report.steps[0].halo_words_sent == predicted
        assert sum(report.per_rank_halo_words_received) >= predicted

    def test_single_rank_single_element_no_words(self):
        config = CaseConfig(
            elements=(1, 1, 1), degrees=(2, 2, 2), cg_iters_per_step=1
        )
        report = run_work_unit(config, n_ranks=1)
        assert report.steps[0].halo_words_sent == 0
        assert report.setup_halo_words_sent == 0

    def test_two_rank_face_exchange_per_matvec(self):
        config = CaseConfig(
            elements=(2, 1, 1), degrees=(8, 8, 8), cg_iters_per_step=1
        )
        report = run_work_unit(config, n_ranks=2)
        # one 9x9 face each way per gather-scatter
        assert report.steps[0].halo_words_sent == 2 * 81
        assert report.per_rank_halo_words_sent[0] >= 81

    def test_messages_match_plan(self):
        config = small_case(elements=(4, 4, 4), cg_iters_per_step=3)
        plan = partition_elements(config, 8)
        report = run_work_unit(config, plan=plan)
        assert (
            report.steps[0].halo_messages
            == plan.messages_per_exchange * config.cg_iters_per_step
        )


class TestGammaARegression:
    def test_instrumented_reference_case(self):
        # frozen from the first instrumented run of the 8^3, N=8 mesh on
        # 8 ranks with a 2-iteration budget
        config = CaseConfig(
            elements=(8, 8, 8), degrees=(8, 8, 8), cg_iters_per_step=2
        )
        plan = partition_elements(config, 8)
        report = run_work_unit(config, plan=plan)
        flops = report.steps[0].flops
        words = report.steps[0].halo_words_sent
        assert flops == 98_910_752
        assert words == 62_208
        from semperf.partition import compute_gamma_a

        assert compute_gamma_a(flops, words) == pytest.approx(
            1590.0005144, abs=1e-6
        )


class TestGatherScatter:
    def run_single_rank_worker(self, config):
        (endpoint,) = loopback_transport(1)
        plan = partition_elements(config, 1)
        return RankWorker(config, plan, endpoint)

    def test_dssum_makes_copies_coherent(self):
        config = small_case()
        worker = self.run_single_rank_worker(config)
        rng = np.random.default_rng(11)
        arr = rng.standard_normal(worker._arr_shape)
        worker.dssum(arr)
        self.assert_interfaces_bitwise_equal(config, arr)

    def test_dsavg_is_idempotent(self):
        config = small_case(elements=(3, 2, 2))
        worker = self.run_single_rank_worker(config)
        rng = np.random.default_rng(5)
        arr = rng.standard_normal(worker._arr_shape)
        once = worker.dsavg(arr.copy())
        twice = worker.dsavg(once.copy())
        assert twice.tobytes() == once.tobytes()

    def test_dsavg_preserves_coherent_data(self):
        config = small_case()
        worker = self.run_single_rank_worker(config)
        arr = np.ones(worker._arr_shape)
        out = worker.dsavg(arr.copy())
        assert np.allclose(out, 1.0)

    @staticmethod
    def assert_interfaces_bitwise_equal(config, arr):
        grids = {}
        ex, ey, ez = config.elements
        for k in range(ez):
            for j in range(ey):
                for i in range(ex):
                    grids[(i, j, k)] = arr[k, j, i]
        node_axis = {0: -1, 1: -2, 2: -3}
        for a, b, axis in shared_face_pairs(config.elements):
            lo = np.take(grids[a], -1, axis=node_axis[axis])
            hi = np.take(grids[b], 0, axis=node_axis[axis])
            assert lo.tobytes() == hi.tobytes()


class TestInterfaceCoherence:
    @pytest.mark.parametrize("n_ranks", [1, 2, 4, 8])
    def test_solution_copies_agree_bitwise(self, n_ranks):
        config = small_case(degrees=(4, 4, 4), cg_iters_per_step=8)
        report = run_work_unit(config, n_ranks=n_ranks, collect_fields=True)
        node_axis = {0: -1, 1: -2, 2: -3}
        checked = 0
        for a, b, axis in shared_face_pairs(config.elements):
            lo = np.take(report.fields[a], -1, axis=node_axis[axis])
            hi = np.take(report.fields[b], 0, axis=node_axis[axis])
            assert lo.tobytes() == hi.tobytes()
            checked += 1
        assert checked == 12


class TestConvergence:
    def test_iteration_count_stable_across_ranks(self):
        config = CaseConfig(
            elements=(2, 2, 2), degrees=(6, 6, 6), cg_iters_per_step=1
        )
        counts = []
        for n_ranks in (1, 2, 4, 8):
            report = run_work_unit(
                config, n_ranks=n_ranks, rtol=1e-8, max_iters=500
            )
            counts.append(report.iterations[0])
        assert max(counts) - min(counts) <= 1

    def test_solution_matches_manufactured_field(self):
        config = CaseConfig(
            elements=(2, 2, 2), degrees=(8, 8, 8), cg_iters_per_step=1
        )
        report = run_work_unit(
            config, n_ranks=2, rtol=1e-11, max_iters=500, collect_fields=True
        )
        basis = build_gll_basis(8)
        ref = (basis.nodes + 1.0) / 4.0
        worst = 0.0
        for (i, j, k), grid in report.fields.items():
            x = (i * 0.5 + ref)[None, None, :]
            y = (j * 0.5 + ref)[None, :, None]
            z = (k * 0.5 + ref)[:, None, None]
            worst = max(
                worst, float(np.abs(grid[0] - default_solution(x, y, z)).max())
            )
        assert worst < 1e-8

    def test_residual_reported(self):
        config = small_case(cg_iters_per_step=30)
        report = run_work_unit(config, n_ranks=1, rtol=1e-6, max_iters=200)
        assert report.steps[0].rel_residual <= 1e-6


class TestNeumann:
    def test_unprojected_neumann_diverges(self):
        config = CaseConfig(
            elements=(2, 2, 2), degrees=(3, 3, 3), cg_iters_per_step=400
        )
        with pytest.raises(DivergenceError, match="mean-zero"):
            run_work_unit(
                config,
                n_ranks=1,
                rtol=1e-12,
                max_iters=400,
                bc="neumann",
                forcing=lambda x, y, z: np.ones_like(x),
            )

    def test_projected_neumann_converges(self):
        config = CaseConfig(
            elements=(2, 2, 2), degrees=(4, 4, 4), cg_iters_per_step=300
        )
        report = run_work_unit(
            config,
            n_ranks=2,
            rtol=1e-8,
            max_iters=300,
            bc="neumann",
            mean_zero=True,
            forcing=lambda x, y, z: np.cos(np.pi * x) * np.cos(np.pi * y),
        )
        assert report.steps[0].rel_residual <= 1e-8

    def test_constant_field_in_neumann_null_space(self):
        config = small_case()
        (endpoint,) = loopback_transport(1)
        plan = partition_elements(config, 1)
        worker = RankWorker(config, plan, endpoint, bc="neumann")
        arr = np.full(worker._arr_shape, 2.5)
        out = worker.matvec(arr)
        assert np.abs(out).max() < 1e-9


class TestSpectralConvergence:
    def test_error_drops_at_least_two_orders(self):
        errors = {}
        for degree in (4, 6, 8, 10):
            config = CaseConfig(
                elements=(2, 2, 2),
                degrees=(degree, degree, degree),
                cg_iters_per_step=1,
            )
            report = run_work_unit(
                config,
                n_ranks=1,
                rtol=1e-12,
                max_iters=1000,
                collect_fields=True,
            )
            basis = build_gll_basis(degree)
            ref = (basis.nodes + 1.0) / 4.0
            worst = 0.0
            for (i, j, k), grid in report.fields.items():
                x = (i * 0.5 + ref)[None, None, :]
                y = (j * 0.5 + ref)[None, :, None]
                z = (k * 0.5 + ref)[:, None, None]
                worst = max(
                    worst,
                    float(np.abs(grid[0] - default_solution(x, y, z)).max()),
                )
            errors[degree] = worst
        degrees = sorted(errors)
        for lo, hi in zip(degrees, degrees[1:]):
            assert errors[hi] < errors[lo]
        assert errors[4] / errors[10] >= 100.0
