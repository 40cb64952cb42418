# harness/runner.py
"""Problem construction and the command bodies behind main.py."""
import logging
import time
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from discretization.assembly import assemble_system
from discretization.models import Grid, GridFunction, interpolate
from discretization.solver import solve_system
from geometry.distance import ball_inclusion_check, ball_mask, cycloidal_inequality_check
from harness.convergence import check_consistency, convergence_study, default_half_ball, refinement_ladder
from harness.estimates import check_stabilization, estimate_ratio, first_checked_level
from harness.models import CSV_COLUMNS, EstimateKind, EstimateRegion
from harness.probe import probe_table, smoothness_probe
from heston.checks import commutator_battery, ellipticity_check
from heston.coefficients import derived_constants, validate_coefficients
from heston.fields import SeparableField, constant, manufactured_field
from heston.models import Coefficients
from heston.operator import OperatorImage
from spaces.holder import empirical_holder_exponent, evaluate_norm
from spaces.models import NormRequest, SpaceTag, WeightSpec
from spaces.sobolev import sobolev_norm, weighted_lp_norm
from utils.data_processing import RunConfig, SourceKind
from utils.errors import NumericalError

logger = logging.getLogger(__name__)

# rounding allowance on the normalised ellipticity margin
ELLIPTICITY_SLACK = 1e-12


class Problem(NamedTuple):
    grid: Grid
    u: GridFunction
    source: GridFunction
    exact: Optional[GridFunction]


def coefficients_for(config: RunConfig) -> Coefficients:
    return validate_coefficients(config.coefficients)


def weight_for(config: RunConfig, c: Coefficients) -> WeightSpec:
    """Weight of c with the config's overrides applied."""
    w = WeightSpec.from_coefficients(c)
    overrides = config.weight.model_dump(exclude_none=True)
    return w.model_copy(update=overrides) if overrides else w


def source_order(config: RunConfig) -> int:
    """Exact source derivatives the configured estimates read."""
    k = config.estimate.k
    order = 0
    for kind in config.estimate.kinds:
        if kind == EstimateKind.HK2_INTERIOR:
            order = max(order, k)
        elif kind == EstimateKind.CKALPHAS_DOMAIN:
            order = max(order, 2 * k + 2)
        elif kind == EstimateKind.SCHAUDER:
            order = max(order, 6)
    return order


def build_problem(config: RunConfig, c: Coefficients, grid: Grid, diffusion_sign: float = 1.0,
                  order: int = 0) -> Problem:
    """Assemble and solve the configured problem on one grid.

    Manufactured sources carry u* as Dirichlet data; constant and kink
    sources use zero data on the non-degenerate boundary.
    """
    src = config.source
    exact = None
    dirichlet = None
    if src.kind == SourceKind.MANUFACTURED:
        field = manufactured_field(src.field, beta=c.beta, value=src.value)
        exact = interpolate(grid, field)
        dirichlet = exact
        source = GridFunction.from_field(grid, OperatorImage(c, field), order)
    elif src.kind == SourceKind.CONSTANT:
        source = GridFunction.from_field(grid, SeparableField(constant(src.value), constant(1.0)), order)
    else:
        d = grid.domain
        x0 = 0.5 * (d.x_min + d.x_max) if src.kink_center is None else src.kink_center
        X, _ = grid.mesh()
        source = GridFunction(grid=grid, values=src.value * np.abs(X - x0))
    system = assemble_system(c, grid, dirichlet, source, diffusion_sign=diffusion_sign)
    s = config.solver
    u = solve_system(system, tol=s.tol, max_iter=s.max_iter, restart=s.restart, method=s.method)
    return Problem(grid=grid, u=u, source=source, exact=exact)


def estimate_region(config: RunConfig, kind: EstimateKind) -> EstimateRegion:
    est, d = config.estimate, config.domain
    if kind in (EstimateKind.SUPREMUM, EstimateKind.HOLDER, EstimateKind.H2_INTERIOR, EstimateKind.HK2_INTERIOR):
        z0 = est.z0 if est.z0 is not None else (0.5 * (d.x_min + d.x_max), 0.0)
        return EstimateRegion(z0=z0, R=est.R, R0=est.R0)
    return EstimateRegion(inner=d.shrink(est.d1), outer=d)


# Sweep

class SweepOutcome(NamedTuple):
    table: pd.DataFrame
    verdicts: Dict[str, bool]
    holder_exponent: Optional[float]
    failures: List[str]


class LevelResult(NamedTuple):
    rows: List[Dict[str, object]]
    failure: Optional[str]
    # weighted L2 error relative to the manufactured solution; None without one
    error: Optional[float]
    h: float


def relative_error(problem: Problem, c: Coefficients) -> Optional[float]:
    """||u - u*|| / ||u*|| in L2(w), or None when there is no exact solution."""
    if problem.exact is None:
        return None
    w = WeightSpec.from_coefficients(c)
    scale = weighted_lp_norm(problem.exact, 2.0, w)
    err = weighted_lp_norm(problem.u - problem.exact, 2.0, w)
    return err / scale if scale > 0 else err


def _sweep_level(config: RunConfig, n: int, seed: int, timings: bool) -> LevelResult:
    """CSV rows for one ladder level, or the reason the level failed."""
    c = coefficients_for(config)
    est = config.estimate
    sign = -1.0 if est.negative_control else 1.0
    grid = config.grid_for(n)
    try:
        problem = build_problem(config, c, grid, diffusion_sign=sign, order=source_order(config))
    except NumericalError as exc:
        if est.negative_control:
            return LevelResult([], f"{grid.label()}: {exc}", None, grid.hx)
        raise
    rows = []
    for kind in est.kinds:
        alphas = [est.alpha]
        if kind == EstimateKind.HOLDER and est.alpha_sweep:
            alphas = sorted(set(est.alphas) | {est.alpha})
        for alpha in alphas:
            report = estimate_ratio(kind, problem.u, problem.source, c, estimate_region(config, kind),
                                    alpha=alpha, p=est.p, k=est.k, seed=seed)
            row = report.to_row()
            if not timings:
                row["runtime_ms"] = 0
            row["sweep_alpha"] = alpha != est.alpha
            rows.append(row)
    return LevelResult(rows, None, relative_error(problem, c), grid.hx)


def run_sweep(config: RunConfig, threads: int = 1, seed: int = 0, timings: bool = False) -> SweepOutcome:
    """Estimate reports over the refinement ladder, one worker per level.

    Each kind passes when its ratio never grows beyond the configured band
    from the second ladder level on. With a manufactured source the discrete
    solutions must also approach u*; the ratios are scale invariant and
    cannot see a wrong operator on their own.
    """
    levels = list(config.grid.ladder)
    start = time.perf_counter()
    results = Parallel(n_jobs=threads)(delayed(_sweep_level)(config, n, seed, timings) for n in levels)
    logger.info("sweep over %d levels finished in %.1f s", len(levels), time.perf_counter() - start)

    first = first_checked_level(len(levels))
    failures = [r.failure for r in results if r.failure]
    solved = [r for r in results if not r.failure]
    if solved and all(r.error is not None for r in solved):
        errors = [r.error for r in solved]
        if not check_consistency(errors, [r.h for r in solved], start=first):
            failures.append(
                f"solutions do not approach the manufactured solution: relative errors "
                f"{', '.join(f'{e:.4g}' for e in errors)}"
            )

    rows = [row for r in results for row in r.rows]
    table = pd.DataFrame(rows)
    verdicts: Dict[str, bool] = {}
    exponent = None
    if not table.empty:
        primary = table[~table["sweep_alpha"]]
        for kind, group in primary.groupby("kind", sort=False):
            ratios = group.sort_values("grid_nx")["ratio"].tolist()
            verdicts[kind] = check_stabilization(ratios, config.estimate.band, start=first)
            if not verdicts[kind]:
                failures.append(f"{kind}: ratios {', '.join(f'{r:.4g}' for r in ratios)} are not non-increasing")
        holder = table[table["kind"] == EstimateKind.HOLDER.value]
        if config.estimate.alpha_sweep and not holder.empty:
            levels_by_nx = {n: i for i, n in enumerate(sorted(holder["grid_nx"].unique()))}
            exponent_table = pd.DataFrame({
                "alpha": holder["alpha"],
                "level": holder["grid_nx"].map(levels_by_nx),
                "value": holder["left"],
            })
            exponent = empirical_holder_exponent(exponent_table)
            logger.info("empirical Hölder exponent: %s", exponent)
        table = table.drop(columns=["sweep_alpha"]).reindex(columns=CSV_COLUMNS)
    elif config.estimate.negative_control:
        failures.append("negative control: no level produced a solution")
    return SweepOutcome(table=table, verdicts=verdicts, holder_exponent=exponent, failures=failures)


# Other commands

def derived_payload(c: Coefficients) -> Dict[str, object]:
    derived = derived_constants(c)
    payload = {"coefficients": c.model_dump()}
    payload.update(derived.model_dump(by_alias=True))
    return payload


def solve_command(config: RunConfig) -> Tuple[Problem, pd.DataFrame]:
    """Solve on the configured grid; the error table is empty without an exact solution."""
    c = coefficients_for(config)
    problem = build_problem(config, c, config.grid_for())
    rows = []
    if problem.exact is not None:
        w = WeightSpec.from_coefficients(c)
        err = problem.u - problem.exact
        X, Y = problem.grid.mesh()
        half = ball_mask(default_half_ball(problem.grid), X, Y, closure=True)
        rows.append({
            "grid": problem.grid.label(),
            "l2": weighted_lp_norm(err, 2.0, w),
            "h1": sobolev_norm(err, NormRequest(tag=SpaceTag.H1, weight=w)),
            "sup": float(np.max(np.abs(err.values[half]))),
            "max": float(np.max(np.abs(err.values))),
        })
    return problem, pd.DataFrame(rows)


def norms_command(config: RunConfig, seed: int = 0) -> pd.DataFrame:
    """Requested norms of the solution and of the source on the configured grid."""
    c = coefficients_for(config)
    w = weight_for(config, c)
    problem = build_problem(config, c, config.grid_for())
    nb = config.norms
    rows = []
    for name, gf in (("u", problem.u), ("f", problem.source)):
        for tag in nb.tags:
            req = NormRequest(tag=tag, weight=w, k=nb.k, p=nb.p, alpha=nb.alpha, seed=seed)
            rows.append({"function": name, "tag": tag.value, "k": nb.k, "p": nb.p, "alpha": nb.alpha,
                         "value": evaluate_norm(gf, req)})
    return pd.DataFrame(rows)


def commutators_command(config: RunConfig, seed: int = 0) -> Tuple[Dict[str, pd.DataFrame], List[str]]:
    """Ellipticity, commutator and Koch-distance property suites, with the
    names of the suites that found a violation."""
    chk = config.checks
    ellipticity = ellipticity_check(chk.ellipticity_sets, chk.ellipticity_points, seed)
    battery = commutator_battery(chk.coefficient_sets, seed, chk.ms, chk.ks)
    distance = cycloidal_inequality_check(chk.geometry_samples, seed)
    inclusions = [ball_inclusion_check(z0, r, chk.geometry_samples, seed)
                  for z0, r in (((0.0, 0.0), 0.5), ((0.3, 0.7), 0.4), ((-1.0, 2.0), 1.0))]
    geometry = pd.DataFrame(
        [{"check": "distance", "center": None, "radius": None, "violations":
          distance.symmetry_violations + distance.square_root_violations + distance.axis_violations}]
        + [{"check": "inclusion", "center": str(r.center), "radius": r.radius,
            "violations": r.inner_violations + r.outer_violations} for r in inclusions]
    )
    failures = []
    if (ellipticity["min_margin"] < -ELLIPTICITY_SLACK).any() or (ellipticity["relative_error"] > 1e-12).any():
        failures.append("ellipticity")
    if not battery["passed"].all():
        failures.append("commutators")
    if (geometry["violations"] > 0).any():
        failures.append("cycloidal geometry")
    tables = {"commutators": battery, "ellipticity": ellipticity, "geometry": geometry}
    return tables, failures


def convergence_command(config: RunConfig) -> pd.DataFrame:
    """Order table on the configured ladder; a graded ladder is repeated uniformly."""
    c = coefficients_for(config)
    field = manufactured_field(config.source.field, beta=c.beta, value=config.source.value)
    s = config.solver
    grids = config.ladder()
    tables = [convergence_study(field, c, grids, tol=s.tol, max_iter=s.max_iter, restart=s.restart,
                                method=s.method)]
    if config.grid.grading != 1.0:
        uniform = refinement_ladder(grids[0].model_copy(update={"grading": 1.0}), config.grid.ladder)
        tables.append(convergence_study(field, c, uniform, tol=s.tol, max_iter=s.max_iter,
                                        restart=s.restart, method=s.method))
    return pd.concat(tables, ignore_index=True)


def probe_command(config: RunConfig) -> Tuple[pd.DataFrame, List[str]]:
    """Derivative maxima near the degenerate boundary over the ladder."""
    c = coefficients_for(config)
    solutions = [build_problem(config, c, grid).u for grid in config.ladder()]
    pb = config.probe
    report = smoothness_probe(solutions, pb.k, pb.strip_height, pb.x_margin)
    failed = [f"{name} does not stabilise" for name, ok in report.passed_by_derivative.items() if not ok]
    return probe_table(report), failed
