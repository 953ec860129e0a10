# src/methods/broadcasting_method.py
"""
broadcasting_method.py: A module that assembles Nyström matrices with numpy broadcasting.

This module contains three functions: `setup`, `process`, and `run`. The `setup` function returns
the import code a timeit environment needs, `process` assembles the corrected Nyström matrix of a
kernel on a quadrature grid, and `run` executes the setup code and assembles a small demo matrix.

The plain part is a single kernel call on the node mesh scaled by the column weights; only the
split panels are visited row by row.

Example usage:

    from src.methods import broadcasting_method

    matrix = broadcasting_method.process(kernel, grid)

    # Benchmark the performance of the broadcasting method (timeit)
    timer = Timer("process(kernel, grid)", setup=setup_code, globals=namespace)

Note: This is the default strategy (see `utils.DEFAULT_ASSEMBLY`).
"""
from numpy import ndarray

import src.numerics as numerics


def setup() -> str:
    """
    Set up code for broadcasting method.

    Returns:
        str: Setup code as a string.
    """
    return "import src.numerics as numerics"


def process(kernel: "numerics.KernelOperator", grid: "numerics.QuadratureGrid") -> ndarray:
    """
    Assemble the Nyström matrix from one broadcast kernel evaluation.

    Args:
        kernel (KernelOperator): The kernel.
        grid (QuadratureGrid): Quadrature grid.

    Returns:
        ndarray: Complex matrix of shape (grid.size, grid.size).

    Benefits: No Python loop over the n^2 entries; memory O(n^2).
    """
    matrix = kernel.node_values(grid) * grid.weights[None, :]
    if kernel.jump_on_diagonal or kernel.jump_on_antidiagonal:
        for i in range(grid.size):
            for start, stop, block in numerics.row_corrections(kernel, grid, i):
                matrix[i, start:stop] = block
    return matrix


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
