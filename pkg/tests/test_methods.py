"""
Tests for the Nyström assembly strategies in src/methods: every strategy must return the same
matrix, entry by entry, for diagonal and anti-diagonal jump kernels.
"""
import numpy as np
import pytest

import src.utils as utils
from src.metric import c_operator_kernel, kernel_constant
from src.numerics import KernelOperator, make_grid

ATOL = 1e-12
HALF_PI = np.pi / 2

STRATEGIES = sorted(utils.create_methods_list())


def _kernels():
    return {
        "abs": KernelOperator(lambda x, y: np.abs(x - y), jump_on_diagonal=True, name="abs"),
        "constant": kernel_constant(0.5, HALF_PI),
        "c_operator": c_operator_kernel(0.5, HALF_PI),
        "smooth": KernelOperator(lambda x, y: np.exp(1j * x * y), name="smooth"),
    }


@pytest.fixture(scope="module")
def grid():
    return make_grid(HALF_PI, 4, 6)


class TestAgreement:
    @pytest.mark.parametrize("name", ["abs", "constant", "c_operator", "smooth"])
    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_matches_default(self, grid, strategy, name):
        kernel = _kernels()[name]
        methods = utils.create_methods_list()
        reference = methods[utils.DEFAULT_ASSEMBLY].process(kernel, grid)
        matrix = methods[strategy].process(kernel, grid)
        assert matrix.shape == (grid.size, grid.size)
        np.testing.assert_allclose(matrix, reference, atol=ATOL, rtol=0)

    def test_parallel_with_two_workers(self, grid, monkeypatch):
        monkeypatch.setenv(utils.THREADS_ENV, "2")
        kernel = _kernels()["constant"]
        methods = utils.create_methods_list()
        np.testing.assert_allclose(methods["parallel_method"].process(kernel, grid),
                                   methods["nested_loop_method"].process(kernel, grid),
                                   atol=ATOL, rtol=0)

    def test_cached_matrix_per_strategy(self, grid):
        kernel = _kernels()["abs"]
        first = kernel.matrix(grid, "nested_loop_method")
        second = kernel.matrix(grid)
        np.testing.assert_allclose(first, second, atol=ATOL, rtol=0)
        assert kernel.matrix(grid) is second


class TestDemo:
    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_run_demo(self, strategy):
        module = utils.create_methods_list()[strategy]
        matrix = module.run(module.setup())
        assert matrix.shape == (8, 8)
        # int |x - y| dy over (-1, 1) is x^2 + 1: the rows integrate the constant exactly
        grid = make_grid(1.0, 2, 4)
        np.testing.assert_allclose(matrix @ np.ones(8), grid.nodes ** 2 + 1.0, atol=ATOL)


class TestBenchmarkScript:
    @pytest.fixture(scope="class")
    def setting(self):
        import benchmark

        kernel = kernel_constant(benchmark.ALPHA, benchmark.HALF_WIDTH)
        return benchmark, utils.create_methods_list(), kernel, make_grid(benchmark.HALF_WIDTH, 4, 8)

    def test_strategies_agree(self, setting):
        benchmark, methods, kernel, grid = setting
        deviations = benchmark.deviation_from_default(methods, kernel, grid)
        assert set(deviations) == set(STRATEGIES)
        assert max(deviations.values()) <= benchmark.AGREEMENT_TOL

    def test_timings(self, setting):
        benchmark, methods, kernel, grid = setting
        timing = benchmark.time_strategy(methods[utils.DEFAULT_ASSEMBLY], kernel, grid)
        assert 0 < timing["best_ms"] <= timing["mean_ms"]

    def test_table(self, setting, monkeypatch):
        benchmark, methods, _, _ = setting
        monkeypatch.setattr(benchmark, "PANEL_COUNTS", (2, 4))
        monkeypatch.setattr(benchmark, "NUM_TRIALS", 1)
        frame = benchmark.run_benchmark(methods)
        assert list(frame.columns) == ["method", "nodes", "best_ms", "mean_ms", "deviation"]
        assert len(frame) == 2 * len(STRATEGIES)
        assert frame["nodes"].is_monotonic_increasing
