# benchmark.py
"""
benchmark.py: A timing script for the Nyström assembly strategies.

Every strategy in 'src/methods' assembles the corrected Nyström matrix of the constant-alpha metric
kernel on composite Gauss-Legendre grids of increasing size. Before timing, each strategy's matrix
is compared with the default strategy's matrix. The table lists, per grid, the best and mean time
of a call and the deviation from the default, fastest first. Set DEBUG to wrap each timing in
cProfile, or RESULTS_CSV to keep the table.

Strategies are discovered from the 'src/methods' directory, so a new module there is timed without
touching this script.

Example usage:

    $ python benchmark.py

    # Bound the joblib strategy to four threads
    $ QUASISPEC_THREADS=4 python benchmark.py
"""

# Modules
import cProfile
import logging
from timeit import Timer
from types import ModuleType
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

import src.utils as utils
from src.metric import kernel_constant
from src.numerics import KernelOperator, QuadratureGrid, make_grid

logger = logging.getLogger(__name__)

# Settings
DEBUG = False
RESULTS_CSV: Optional[str] = None

# constants
ALPHA = 0.5
HALF_WIDTH = np.pi / 2
PANEL_COUNTS = (8, utils.DEFAULT_PANELS, 32)

NUM_TRIALS = 5
NUM_REPEATS = 3

# largest entry difference tolerated against the default strategy
AGREEMENT_TOL = 1e-12


def time_strategy(module: ModuleType, kernel: KernelOperator,
                  grid: QuadratureGrid) -> Dict[str, float]:
    """
    Time one strategy in its own timeit namespace.

    Args:
        module (ModuleType): A strategy with `setup()` and `process(kernel, grid)`.
        kernel (KernelOperator): Kernel to assemble.
        grid (QuadratureGrid): Quadrature grid.

    Returns:
        Dict[str, float]: Best and mean milliseconds per call over NUM_REPEATS rounds.
    """
    namespace = {"kernel": kernel, "grid": grid, "process": module.process}
    timer = Timer("process(kernel, grid)", setup=module.setup(), globals=namespace)
    timer.timeit(number=1)

    profiler = cProfile.Profile() if DEBUG else None
    if profiler:
        profiler.enable()
    rounds = np.array(timer.repeat(repeat=NUM_REPEATS, number=NUM_TRIALS)) / NUM_TRIALS * 1000
    if profiler:
        profiler.disable()
        profiler.print_stats(sort="cumulative")
    return {"best_ms": float(rounds.min()), "mean_ms": float(rounds.mean())}


def deviation_from_default(methods: Dict[str, ModuleType], kernel: KernelOperator,
                           grid: QuadratureGrid) -> Dict[str, float]:
    """Max |entry difference| of every strategy's matrix to the default strategy's."""
    reference = methods[utils.DEFAULT_ASSEMBLY].process(kernel, grid)
    deviations = {}
    for name, module in methods.items():
        deviations[name] = float(np.abs(module.process(kernel, grid) - reference).max())
        if deviations[name] > AGREEMENT_TOL:
            logger.warning("%s deviates from %s by %.3e on %d nodes", name,
                           utils.DEFAULT_ASSEMBLY, deviations[name], grid.size)
    return deviations


def run_benchmark(methods: Dict[str, ModuleType]) -> pd.DataFrame:
    """
    Time every strategy on every grid of PANEL_COUNTS.

    Returns:
        DataFrame: One row per (strategy, grid) with nodes, best_ms, mean_ms and deviation.
    """
    kernel = kernel_constant(ALPHA, HALF_WIDTH)
    rows: List[dict] = []
    for panels in PANEL_COUNTS:
        grid = make_grid(HALF_WIDTH, panels, utils.DEFAULT_ORDER)
        deviations = deviation_from_default(methods, kernel, grid)
        for name, module in methods.items():
            rows.append({"method": name, "nodes": grid.size, **time_strategy(module, kernel, grid),
                         "deviation": deviations[name]})
    return pd.DataFrame(rows).sort_values(["nodes", "best_ms"], ignore_index=True)


def main() -> None:
    utils.configure_logging()
    methods = utils.create_methods_list()
    frame = run_benchmark(methods)

    separator = "-" * 80
    print(separator)
    header = f"{len(methods)} strategies | {NUM_TRIALS} calls x {NUM_REPEATS}"
    print(f"{'Nyström assembly':<40}{header:>40}")
    print(separator)
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.4g}"))
    print(separator)

    if RESULTS_CSV:
        utils.write_csv(frame, RESULTS_CSV)


if __name__ == "__main__":
    main()
