# src/cli.py
"""
cli.py: A module providing the quasispec command line.

Subcommands compute certified spectra (`spectrum`), assemble and verify metric operators
(`metric`), check the similarity maps Omega / Omega^{-1} (`similarity`), run Galerkin studies of
H + V and the Liouville transform (`perturb`), sweep PT parameters (`sweep`) and count non-real
eigenvalues in a fixed window (`reality`). Every command prints a JSON document (to stdout or
--out) that includes the effective configuration, defaults included. Exit codes: 0 success, 1 a
requested verification missed its tolerance, 2 invalid arguments, 3 uncertified region.

Example usage:

    $ python quasispec.py spectrum --alpha 0.5 --beta 0 --a 1.5707963 --nmax 6
    $ python quasispec.py metric constant --alpha 0.5 --a 1.5707963 --verify
    $ python quasispec.py --dump-config sweep --alpha 0:2:0.1 --beta -1:1:0.1
"""
import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click
import numpy as np
import pandas as pd
import yaml
from joblib import Parallel, delayed

import src.utils as utils
from src.errors import (CertificationError, ContourError, InvalidArgumentError,
                        QuasispecError)
from src.laplacian import CoefficientSequence
from src.metric import (_check_k_degeneracy, hs_norm_closed, metric_cchoice, metric_constant,
                        metric_general, theta_series, verify_pde_system,
                        verify_quasi_hermiticity)
from src.numerics import BranchKernel, dump_kernel_csv, hs_norm, make_grid
from src.perturbation import (RhoProfile, asymptotic_gap, finite_difference_spectrum,
                              galerkin_matrix, liouville_transform, named_potential,
                              omega_v_stabilization, transformed_params)
from src.similarity import degeneracy_report, similarity_report
from src.spectrum import (BoundaryParams, PTParams, biorthonormalize, count_non_real, count_roots,
                          find_eigenvalues, find_eigenvalues_certified, symmetry_report)

logger = logging.getLogger(__name__)

# Settings
HALF_PI = float(np.pi / 2.0)
EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_UNCERTIFIED = 0, 1, 2, 3
METRIC_KINDS = ("series", "constant", "cchoice", "general")
REALITY_WINDOW = ((-10.0, 200.0), (-50.0, 50.0))
# distance of the counting contours from the real axis for constants without PT symmetry
REALITY_OFFSET = 1e-2


def _default_tolerances() -> Dict[str, float]:
    return {"spectrum": utils.TOL_1D, "kernel": utils.TOL_2D, "metric": 1e-7,
            "pde": 1e-6, "similarity": 1e-6, "biorthogonality": 1e-9, "liouville": 1e-4}


@dataclass
class RunConfig:
    """Everything a command needs; serialises to YAML without loss."""
    command: str = "spectrum"
    a: float = HALF_PI
    alpha: Optional[float] = None
    beta: Optional[float] = None
    c_minus: Optional[List[float]] = None
    c_plus: Optional[List[float]] = None
    c: float = 0.0
    kind: str = "constant"
    nmax: int = 6
    n_test: int = 10
    panels: int = utils.DEFAULT_PANELS
    order: int = utils.DEFAULT_ORDER
    truncation: int = utils.DEFAULT_TRUNCATION
    dimension: int = 40
    potential: str = "zero"
    rho: Optional[str] = None
    bound: float = 10.0
    alpha_range: str = "0:2:0.1"
    beta_range: str = "-1:1:0.1"
    verify: bool = False
    hs: bool = False
    out: Optional[str] = None
    csv: Optional[str] = None
    tolerances: Dict[str, float] = field(default_factory=_default_tolerances)

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.as_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "tolerances" in data:
            data["tolerances"] = {**_default_tolerances(), **(data["tolerances"] or {})}
        return cls(**data)

    @classmethod
    def from_yaml(cls, text: str) -> "RunConfig":
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as err:
            raise InvalidArgumentError(f"cannot parse config: {err}") from err
        if not isinstance(data, dict):
            raise InvalidArgumentError("config must be a mapping")
        return cls.from_dict(data)

    def boundary(self) -> BoundaryParams:
        """c_+- from the explicit pair or from alpha/beta (the two forms are exclusive)."""
        explicit = self.c_minus is not None or self.c_plus is not None
        if explicit and (self.alpha is not None or self.beta is not None):
            raise InvalidArgumentError("give either --alpha/--beta or --c-minus/--c-plus, not both")
        if explicit:
            if self.c_minus is None or self.c_plus is None:
                raise InvalidArgumentError("--c-minus and --c-plus go together")
            return BoundaryParams(self.a, complex(*self.c_minus), complex(*self.c_plus))
        return self.pt().boundary()

    def pt(self) -> PTParams:
        if self.c_minus is not None or self.c_plus is not None:
            return PTParams.from_boundary(self.boundary())
        return PTParams(self.alpha or 0.0, self.beta or 0.0, self.a)

    def grid(self):
        return make_grid(self.a, self.panels, self.order)


def _to_json(value: Any) -> Any:
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serialisable")


def _emit(payload: Dict[str, Any], config: RunConfig) -> None:
    text = json.dumps(payload, indent=2, default=_to_json)
    if config.out:
        Path(config.out).parent.mkdir(parents=True, exist_ok=True)
        Path(config.out).write_text(text + "\n")
        logger.debug("wrote %s", config.out)
    else:
        click.echo(text)


def _parse_pair(ctx, param, value) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        z = utils.parse_complex(value)
    except InvalidArgumentError as err:
        raise click.BadParameter(str(err)) from err
    return [z.real, z.imag]


def boundary_options(func: Callable) -> Callable:
    """Options shared by every subcommand."""
    options = [
        click.option("--a", "a", type=float, help="Half-width of the interval (-a, a)."),
        click.option("--alpha", type=float, help="PT parameter: c_+- = i alpha +- beta."),
        click.option("--beta", type=float, help="PT parameter: c_+- = i alpha +- beta."),
        click.option("--c-minus", callback=_parse_pair, help="Robin constant at -a as re,im."),
        click.option("--c-plus", callback=_parse_pair, help="Robin constant at +a as re,im."),
        click.option("--panels", type=int, help="Quadrature panels."),
        click.option("--order", type=int, help="Gauss-Legendre nodes per panel."),
        click.option("--out", type=click.Path(dir_okay=False), help="Write JSON here."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _configure(ctx: click.Context, command: str, options: Dict[str, Any]) -> RunConfig:
    base: RunConfig = ctx.obj["config"]
    given = {k: v for k, v in options.items() if v is not None and v is not False}
    config = replace(base, command=command, **given)
    if config.a <= 0 or not np.isfinite(config.a):
        raise InvalidArgumentError(f"a must be positive, got {config.a}")
    return config


def command_runner(func: Callable[[RunConfig], int]) -> Callable:
    """Merge options into the config, honour --dump-config and map errors to exit codes."""
    @wraps(func)
    def wrapper(**options):
        ctx = click.get_current_context()
        try:
            config = _configure(ctx, ctx.command.name, options)
            if ctx.obj["dump"]:
                click.echo(config.to_yaml(), nl=False)
                return
            code = func(config)
        except (CertificationError, ContourError) as err:
            logger.error("%s", err)
            click.echo(f"error: {err}", err=True)
            ctx.exit(EXIT_UNCERTIFIED)
        except QuasispecError as err:
            click.echo(f"error: {err}", err=True)
            ctx.exit(EXIT_INVALID)
        ctx.exit(code)
    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="YAML RunConfig to start from.")
@click.option("--dump-config", is_flag=True, help="Print the effective config and exit.")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging on stderr.")
@click.pass_context
def main(ctx: click.Context, config_path: Optional[str], dump_config: bool, verbose: bool) -> None:
    """Spectra, metric operators and similarity maps of -d^2/dx^2 with complex Robin conditions."""
    utils.configure_logging(verbose)
    config = RunConfig()
    if config_path:
        try:
            config = RunConfig.from_yaml(Path(config_path).read_text())
        except InvalidArgumentError as err:
            raise click.BadParameter(str(err), param_hint="--config") from err
    ctx.obj = {"config": config, "dump": dump_config}


@main.command()
@boundary_options
@click.option("--nmax", type=int, help="Highest mode index whose strip is searched.")
@command_runner
def spectrum(config: RunConfig) -> int:
    """Certified eigenvalues with their winding-number covering."""
    p = config.boundary()
    result = find_eigenvalues_certified(p, config.nmax)
    payload = {
        "config": config.as_dict(),
        "params": p.as_dict(),
        "symmetry": symmetry_report(p),
        "eigenvalues": [
            {"re": t.lam.real, "im": t.lam.imag, "multiplicity": t.multiplicity,
             "char_residual": t.char_residual}
            for t in result.triples
        ],
        "certification": {
            "rectangles": [list(r) for r in result.rectangles],
            "winding_counts": result.winding_counts,
            "certified": result.certified,
        },
    }
    _emit(payload, config)
    return EXIT_OK


@main.command()
@click.argument("kind", type=click.Choice(METRIC_KINDS))
@boundary_options
@click.option("--c", "c", type=float, help="Free constant of the general kernel.")
@click.option("--truncation", type=int, help="Series truncation N.")
@click.option("--verify", is_flag=True, help="Run the spectral and PDE checks.")
@click.option("--hs", is_flag=True, help="Report the Hilbert-Schmidt norm of K.")
@click.option("--csv", type=click.Path(dir_okay=False), help="Dump the kernel as x,y,re,im.")
@command_runner
def metric(config: RunConfig) -> int:
    """Assemble a metric operator Theta = I + K and optionally verify it."""
    alpha = config.pt().alpha
    beta = config.pt().beta if config.kind in ("general", "series") else 0.0
    a = config.a
    grid = config.grid()
    p = PTParams(alpha, beta, a).boundary()
    if config.kind == "constant":
        theta = metric_constant(alpha, a)
    elif config.kind == "cchoice":
        theta = metric_cchoice(alpha, a)
    elif config.kind == "general":
        theta = metric_general(alpha, beta, config.c, a)
    else:
        theta = theta_series(p, CoefficientSequence.unit(), config.truncation, grid)

    payload: Dict[str, Any] = {"config": config.as_dict(), "metric": theta.source,
                               "params": p.as_dict(), "claims_metric": theta.claims_metric}
    passed = True
    if config.csv and theta.kernel is not None:
        dump_kernel_csv(theta.kernel, grid, config.csv)
        payload["csv"] = config.csv
    if config.verify:
        triples = theta.triples or biorthonormalize(find_eigenvalues(p, config.n_test))
        report = verify_quasi_hermiticity(theta, p, triples, grid, config.n_test,
                                          tol=config.tolerances["metric"])
        payload["verification"] = report
        passed = report["passed"]
        if config.kind in ("constant", "general"):
            pde = verify_pde_system(theta.kernel, alpha, beta, a, grid)
            payload["pde"] = pde
            passed = passed and max(pde.values()) <= config.tolerances["pde"]
    if config.hs and isinstance(theta.kernel, BranchKernel):
        quadrature = hs_norm(theta.kernel, grid)
        hs = {"quadrature": quadrature, "quadrature_squared": quadrature ** 2}
        if config.kind == "general":
            closed = hs_norm_closed(alpha, beta, config.c, a)
            hs.update(closed=closed, closed_squared=closed ** 2)
        payload["hs"] = hs
    payload["passed"] = passed
    _emit(payload, config)
    return EXIT_OK if passed else EXIT_FAILED


@main.command()
@boundary_options
@click.option("--verify-all", "verify", is_flag=True, help="Check every similarity identity.")
@command_runner
def similarity(config: RunConfig) -> int:
    """Omega = I + L, Omega^{-1} = I + M and h = Omega H Omega^{-1} for c_+- = i alpha."""
    alpha, a = config.pt().alpha, config.a
    if _check_k_degeneracy(alpha, a) is not None:
        report = degeneracy_report(alpha, a, config.grid())
        payload = {"config": config.as_dict(), "degeneracy": report}
        _emit(payload, config)
        return EXIT_OK
    report = similarity_report(alpha, a, config.grid(), config.n_test)
    payload = {"config": config.as_dict(), **report}
    passed = True
    if config.verify:
        checked = [*report["omega_residuals"].values(), report["composition_residual"],
                   report["lm_identity_residual"], report["factorization_residual"],
                   report["galerkin_offdiagonal"], report["galerkin_spectrum_error"],
                   report["galerkin_eigenvalue_error"], report["galerkin_hermitian_residual"],
                   report["galerkin_imaginary"]]
        passed = max(checked) <= config.tolerances["similarity"]
    payload["passed"] = passed
    _emit(payload, config)
    return EXIT_OK if passed else EXIT_FAILED


@main.command()
@boundary_options
@click.option("--v", "potential",
              help="Potential: zero, constant:<v>, linear, sin3, an expression in x or a CSV.")
@click.option("--m", "dimension", type=int, help="Galerkin dimension M.")
@click.option("--rho", help="Coefficient rho for the Liouville transform (expression in x or CSV).")
@click.option("--bound", type=float, help="Positivity bound C with 1/C <= rho <= C.")
@command_runner
def perturb(config: RunConfig) -> int:
    """Galerkin study of H + V: eigenvalues, the Omega_V tail and, with --rho, a Liouville check."""
    p = config.boundary()
    V = named_potential(config.potential)
    M = config.dimension
    plain = galerkin_matrix(p, V, M)
    accurate = galerkin_matrix(p, V, M, enrich=True)
    payload: Dict[str, Any] = {
        "config": config.as_dict(),
        "params": p.as_dict(),
        "potential": V.name,
        "eigenvalues": accurate.lowest(8),
        "biorthogonality": plain.biorthogonality_residual(),
        "omega_v": omega_v_stabilization(p, V, M),
    }
    passed = payload["biorthogonality"] <= config.tolerances["biorthogonality"]
    if V.is_zero:
        gaps = asymptotic_gap(accurate)
        payload["asymptotic_gap"] = {"values": gaps, "limit": (p.c_plus - p.c_minus) / p.a}
    if config.rho:
        profile = (RhoProfile.from_csv(config.rho) if config.rho.endswith(".csv")
                   else RhoProfile.from_expression(config.rho))
        data = liouville_transform(profile, p, config.bound)
        q = transformed_params(data)
        transformed = galerkin_matrix(q, data.potential(), M, enrich=True).lowest(6)
        oracle = finite_difference_spectrum(p, profile=profile, count=6)
        mismatch = float(np.abs(transformed - oracle).max())
        payload["liouville"] = {
            "params": q.as_dict(), "eigenvalues": transformed, "oracle": oracle,
            "mismatch": mismatch,
        }
        passed = passed and mismatch <= config.tolerances["liouville"]
    payload["passed"] = passed
    _emit(payload, config)
    return EXIT_OK if passed else EXIT_FAILED


def _sweep_point(alpha: float, beta: float, a: float, nmax: int) -> Dict[str, Any]:
    p = PTParams(alpha, beta, a).boundary()
    try:
        triples = find_eigenvalues_certified(p, nmax).triples
    except (CertificationError, ContourError) as err:
        logger.warning("sweep point (%g, %g) not certified: %s", alpha, beta, err)
        return {"alpha": alpha, "beta": beta, "n_complex_pairs": -1, "min_gap": np.nan}
    lam = np.array([t.lam for t in triples])
    complex_count = int(np.sum(np.abs(lam.imag) > 1e-8 * (1.0 + np.abs(lam))))
    if len(lam) > 1:
        gaps = np.abs(lam[:, None] - lam[None, :])
        np.fill_diagonal(gaps, np.inf)
        min_gap = float(gaps.min())
    else:
        min_gap = np.inf
    if any(t.multiplicity > 1 for t in triples):
        min_gap = 0.0
    return {"alpha": alpha, "beta": beta, "n_complex_pairs": complex_count // 2, "min_gap": min_gap}


@main.command()
@click.option("--alpha", "alpha_range", help="alpha range start:stop:step.")
@click.option("--beta", "beta_range", help="beta range start:stop:step.")
@click.option("--a", "a", type=float, help="Half-width of the interval (-a, a).")
@click.option("--nmax", type=int, help="Highest mode index searched at every point.")
@click.option("--csv", type=click.Path(dir_okay=False), help="Write the sweep table here.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write JSON here.")
@command_runner
def sweep(config: RunConfig) -> int:
    """Count complex pairs and the smallest eigenvalue gap over an (alpha, beta) lattice."""
    alphas = utils.parse_range(config.alpha_range)
    betas = utils.parse_range(config.beta_range)
    points = [(float(al), float(be)) for al in alphas for be in betas]
    rows = Parallel(n_jobs=utils.n_jobs(), prefer="threads")(
        delayed(_sweep_point)(al, be, config.a, config.nmax) for al, be in points
    )
    frame = pd.DataFrame(rows, columns=["alpha", "beta", "n_complex_pairs", "min_gap"])
    if config.csv:
        utils.write_csv(frame, config.csv)
    positive = frame[frame["beta"] > 0]
    uncertified = int((frame["n_complex_pairs"] < 0).sum())
    payload = {
        "config": config.as_dict(),
        "points": len(frame),
        "uncertified": uncertified,
        "positive_beta_complex_pairs": int(positive["n_complex_pairs"].clip(lower=0).sum()),
        "rows": frame.replace({np.inf: None, np.nan: None}).to_dict(orient="records"),
    }
    _emit(payload, config)
    return EXIT_UNCERTIFIED if uncertified else EXIT_OK


@main.command()
@boundary_options
@command_runner
def reality(config: RunConfig) -> int:
    """
    Count non-real eigenvalues in Re in [-10, 200], |Im| <= 50.

    PT-symmetric constants get the exact count of `count_non_real`; other constants fall back to
    two contours held REALITY_OFFSET off the real axis.
    """
    p = config.boundary()
    (re0, re1), (im0, im1) = REALITY_WINDOW
    if p.pt_symmetric:
        counts = count_non_real(p, (re0, re1), (im0, im1))
        upper = lower = counts["non_real"] // 2
        extra = {"method": "real_axis", "real": counts["real"], "total": counts["total"]}
    else:
        upper = count_roots(p, (re0, re1), (REALITY_OFFSET, im1))
        lower = count_roots(p, (re0, re1), (im0, -REALITY_OFFSET))
        extra = {"method": "offset", "offset": REALITY_OFFSET}
    payload = {"config": config.as_dict(), "params": p.as_dict(), "window": REALITY_WINDOW,
               "non_real_upper": upper, "non_real_lower": lower, **extra}
    _emit(payload, config)
    return EXIT_OK
