# src/utils.py
"""
utils.py: A module containing the settings and small helpers shared by the quasispec modules.

This module holds the default discretisation settings, the thread bound read from the
`QUASISPEC_THREADS` environment variable, discovery of the Nyström assembly strategies in
`src/methods`, logging setup for the command line, and CSV dumps of kernels and samples.

To use this module in your project, simply import it and call the appropriate function(s) as
needed.

Example usage:

    import src.utils as utils

    # Bound joblib workers by QUASISPEC_THREADS
    n_jobs = utils.n_jobs()

    # Import available assembly strategies from the src/methods directory
    methods = utils.create_methods_list()
"""
import logging
from importlib import import_module
from multiprocessing import cpu_count
from os import environ
from pathlib import Path
from types import ModuleType
from typing import Dict, Optional

import numpy as np
import pandas as pd

from src.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

# Settings
THREADS_ENV = "QUASISPEC_THREADS"
ASSEMBLY_ENV = "QUASISPEC_ASSEMBLY"
DEFAULT_ASSEMBLY = "broadcasting_method"

# constants
DEFAULT_PANELS = 16
DEFAULT_ORDER = 12
DEFAULT_TRUNCATION = 800
TOL_1D = 1e-10
TOL_2D = 1e-8

METHODS_DIR = Path(__file__).resolve().parent / "methods"


def n_jobs() -> int:
    """
    Number of joblib workers, bounded by the QUASISPEC_THREADS environment variable.

    Returns:
        int: At least 1, at most the CPU count unless the variable asks for more.
    """
    raw = environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return cpu_count()
    try:
        value = int(raw)
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        return cpu_count()
    return max(1, value)


def create_methods_list() -> Dict[str, ModuleType]:
    """
    Import available assembly strategies from the src/methods directory.

    Returns:
        dict: Module name -> imported module, sorted by name.
    """
    methods = {}
    method_files = sorted(f.stem for f in METHODS_DIR.glob("*.py") if f.name != "__init__.py")
    for method_file in method_files:
        methods[method_file] = import_module(f"src.methods.{method_file}")
    return methods


def assembly_method(name: Optional[str] = None) -> ModuleType:
    """
    Resolve an assembly strategy by module name.

    Args:
        name (str, optional): Module name inside src/methods. Falls back to QUASISPEC_ASSEMBLY,
        then to DEFAULT_ASSEMBLY.

    Returns:
        ModuleType: The strategy module exposing `process(kernel, grid)`.
    """
    name = name or environ.get(ASSEMBLY_ENV) or DEFAULT_ASSEMBLY
    if not (METHODS_DIR / f"{name}.py").exists():
        raise InvalidArgumentError(f"unknown assembly method {name!r}")
    return import_module(f"src.methods.{name}")


def configure_logging(verbose: bool = False) -> None:
    """
    Configure root logging for command-line use. Library modules never call this.

    Args:
        verbose (bool): DEBUG when true, WARNING otherwise.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
    )


def kernel_frame(nodes: np.ndarray, values: np.ndarray) -> pd.DataFrame:
    """
    Tabulate kernel values in row-major grid order as columns x, y, re, im.

    Args:
        nodes (ndarray): Grid nodes, length n.
        values (ndarray): Kernel values K(x_i, x_j), shape (n, n).

    Returns:
        DataFrame: n*n rows.
    """
    xx, yy = np.meshgrid(nodes, nodes, indexing="ij")
    values = np.asarray(values, dtype=complex)
    return pd.DataFrame({
        "x": xx.ravel(),
        "y": yy.ravel(),
        "re": values.real.ravel(),
        "im": values.imag.ravel(),
    })


def write_csv(frame: pd.DataFrame, path) -> None:
    """Write a frame without the index, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.debug("wrote %d rows to %s", len(frame), path)


def parse_complex(text: str) -> complex:
    """
    Parse a complex number written as `re,im` (or a bare real).

    Args:
        text (str): e.g. "0,0.5" or "1.25".

    Returns:
        complex: The parsed value.
    """
    parts = [p.strip() for p in str(text).split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise InvalidArgumentError(f"cannot read {text!r} as re,im")


def parse_range(text: str) -> np.ndarray:
    """
    Parse an inclusive `start:stop:step` range (a bare number gives a single point).

    Args:
        text (str): e.g. "0:2:0.1".

    Returns:
        ndarray: The sampled values, stop included when it lies on the lattice.
    """
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) == 3:
            start, stop, step = (float(p) for p in parts)
            if step <= 0 or stop < start:
                raise ValueError
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return start + step * np.arange(count)
    except ValueError:
        pass
    raise InvalidArgumentError(f"cannot read {text!r} as start:stop:step")
