# src/methods/parallel_method.py
"""
parallel_method.py: A module that assembles Nyström matrices row by row with joblib.

This module contains three functions: `setup`, `process`, and `run`. The `setup` function returns
the import code a timeit environment needs, `process` assembles the corrected Nyström matrix of a
kernel on a quadrature grid, and `run` executes the setup code and assembles a small demo matrix.

Rows are independent, so they are split into one chunk per worker and handed to joblib's thread
backend; each chunk calls `numerics.nystrom_row`. The worker count comes from `utils.n_jobs()`,
which honours the QUASISPEC_THREADS environment variable.

Example usage:

    from src.methods import parallel_method

    matrix = parallel_method.process(kernel, grid)

    # Benchmark the performance of the parallel method (timeit)
    timer = Timer("process(kernel, grid)", setup=setup_code, globals=namespace)

Note: Threads rather than processes: kernels built from sympy branches are closures, and the heavy
lifting happens inside numpy, which releases the GIL.
"""
from joblib import Parallel, delayed
from numpy import array_split, arange, ndarray, vstack

import src.numerics as numerics
import src.utils as utils


def process_rows(kernel, grid, rows) -> ndarray:
    return vstack([numerics.nystrom_row(kernel, grid, i) for i in rows])


def setup() -> str:
    """
    Set up code for parallel method.

    Returns:
        str: Setup code as a string.
    """
    return '''
import src.numerics as numerics
import src.utils as utils
from joblib import Parallel, delayed
'''


def process(kernel: "numerics.KernelOperator", grid: "numerics.QuadratureGrid") -> ndarray:
    """
    Assemble the Nyström matrix with rows distributed over joblib workers.

    Args:
        kernel (KernelOperator): The kernel.
        grid (QuadratureGrid): Quadrature grid.

    Returns:
        ndarray: Complex matrix of shape (grid.size, grid.size).

    Time complexity: O(n^2 / n_jobs) kernel evaluations per worker.
    Benefits: Can potentially speed up assembly by leveraging multiple CPU cores.
    """
    n_jobs = min(utils.n_jobs(), grid.size)
    chunks = [c for c in array_split(arange(grid.size), n_jobs) if c.size]
    blocks = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(process_rows)(kernel, grid, rows) for rows in chunks
    )
    return vstack(blocks)


def run(setup_code: str) -> ndarray:
    """
    Run the process function with the provided setup code.

    Args:
        setup_code (str): The code to set up the test environment.
    """
    exec(setup_code)

    grid = numerics.make_grid(1.0, 2, 4)
    kernel = numerics.KernelOperator(lambda x, y: abs(x - y), jump_on_diagonal=True)
    return process(kernel, grid)


if __name__ == "__main__":
    print(run(setup()))
