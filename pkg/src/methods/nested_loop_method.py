# src/methods/nested_loop_method.py
"""
nested_loop_method.py: A module that assembles Nyström matrices entry by entry.

This module contains three functions: `setup`, `process`, and `run`. The `setup` function returns
the import code a timeit environment needs, `process` assembles the corrected Nyström matrix of a
kernel on a quadrature grid, and `run` executes the setup code and assembles a small demo matrix.

Every entry w_j K(x_i, x_j) is evaluated with a scalar kernel call; the rows whose node lies
inside a panel are then patched with the split-panel blocks from `numerics.row_corrections`.

Example usage:

    from src.methods import nested_loop_method

    matrix = nested_loop_method.process(kernel, grid)

    # Benchmark the performance of the nested loop method (timeit)
    timer = Timer("process(kernel, grid)", setup=setup_code, globals=namespace)

Note: The scalar kernel calls make this the slowest strategy by far. It is kept as the reference
the vectorised strategies are checked against.
"""
from numpy import ndarray, zeros

import src.numerics as numerics


def setup() -> str:
    """
    Set up code for nested loop method.

    Returns:
        str: Setup code as a string.
    """
    return "import src.numerics as numerics"


def process(kernel: "numerics.KernelOperator", grid: "numerics.QuadratureGrid") -> ndarray:
    """
    Assemble the Nyström matrix with two explicit loops.

    Args:
        kernel (KernelOperator): The kernel, evaluated one node pair at a time.
        grid (QuadratureGrid): Quadrature grid.

    Returns:
        ndarray: Complex matrix of shape (grid.size, grid.size).

    Time complexity: O(n^2) scalar kernel calls plus O(n * order^2) for the split panels.
    """
    size = grid.size
    matrix = zeros((size, size), dtype=complex)
    for i in range(size):
        for j in range(size):
            matrix[i, j] = grid.weights[j] * complex(kernel(grid.nodes[i], grid.nodes[j]))
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
