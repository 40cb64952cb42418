# heston/checks.py
import logging
from typing import Iterable

import numpy as np
import pandas as pd

from heston.coefficients import ellipticity_margin, random_coefficients, smallest_eigenvalue
from heston.fields import battery
from heston.operator import commutator_terms, dx_commutator_residual, dy_commutator_residual

logger = logging.getLogger(__name__)

COMMUTATOR_TOL = 1e-10


def ellipticity_check(n_sets: int = 1000, n_points: int = 1000, seed: int = 0) -> pd.DataFrame:
    """nu0 against numpy's eigenvalues and the ellipticity margin on random
    (xi, y), one row per coefficient draw."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n_sets):
        c = random_coefficients(rng)
        nu0 = smallest_eigenvalue(c.sigma, c.rho)
        rs = c.rho * c.sigma
        brute = np.linalg.eigvalsh(np.array([[1.0, rs], [rs, c.sigma ** 2]]))[0]
        xi = rng.normal(size=(2, n_points))
        y = rng.uniform(1e-6, 10.0, size=n_points)
        # margin per unit y|xi|^2
        margin = ellipticity_margin(c, xi[0], xi[1], y) / (y * (xi[0] ** 2 + xi[1] ** 2))
        rows.append({
            "nu0": nu0,
            "eigenvalue": brute,
            "relative_error": abs(nu0 - brute) / abs(brute),
            "min_margin": float(margin.min()),
        })
    return pd.DataFrame(rows)


def commutator_battery(
    n_sets: int = 100,
    seed: int = 0,
    ms: Iterable[int] = (1, 2, 3),
    ks: Iterable[int] = (0, 1, 2, 3),
    points_per_field: int = 1,
) -> pd.DataFrame:
    """Worst scaled residual of each commutator identity over random coefficients,
    the analytic field battery and random points.

    Rows are keyed by `identity` ("A_m/B", "D_x", "D_y") and (m, k).
    """
    rng = np.random.default_rng(seed)
    ms, ks = list(ms), list(ks)
    worst = {}

    def record(key, residual, scale):
        ratio = residual / scale if scale > 0 else residual
        worst[key] = max(worst.get(key, 0.0), ratio)

    for _ in range(n_sets):
        c = random_coefficients(rng)
        for field in battery(rng):
            for _ in range(points_per_field):
                point = (rng.uniform(-1.0, 1.0), rng.uniform(0.1, 2.0))
                for m in ms:
                    for k in ks:
                        lhs, rhs, b_part, scale = commutator_terms(c, field, k, m, point)
                        record(("A_m/B", m, k), abs(lhs - rhs - b_part), scale)
                record(("D_x", 0, 0), *dx_commutator_residual(c, field, point))
                record(("D_y", 1, 0), *dy_commutator_residual(c, field, point))

    table = pd.DataFrame(
        [{"identity": key[0], "m": key[1], "k": key[2], "max_scaled_residual": value}
         for key, value in worst.items()]
    )
    table["passed"] = table["max_scaled_residual"] <= COMMUTATOR_TOL
    logger.info("commutator battery: %d identities, worst %.3e", len(table), table["max_scaled_residual"].max())
    return table.sort_values(["identity", "m", "k"]).reset_index(drop=True)
