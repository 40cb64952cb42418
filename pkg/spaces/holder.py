# spaces/holder.py
import logging
from typing import Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd

from discretization.finite_difference import derivative
from discretization.models import GridFunction
from geometry.distance import cycloidal_distance
from harness.config import EXACT_PAIR_LIMIT, EXTENSION_TOL, MONOTONICITY_BAND, PAIR_CHUNK, SUBSAMPLED_PAIRS
from spaces.models import HOLDER_TAGS, NormRequest, SpaceTag
from spaces.sobolev import region, sobolev_norm
from utils.errors import AlphaOutOfRange, MissingDerivatives, OrderTooHigh, UnsupportedTag

logger = logging.getLogger(__name__)


def _components(u: GridFunction, order: int) -> List[np.ndarray]:
    try:
        return [derivative(u, order - m, m) for m in range(order + 1)]
    except OrderTooHigh as exc:
        raise MissingDerivatives(str(exc)) from exc


def _neighbour_pairs(sel: np.ndarray) -> np.ndarray:
    """Horizontal, vertical and diagonal neighbour pairs inside the mask, as
    positions into the flattened list of selected nodes."""
    pos = -np.ones(sel.shape, dtype=np.int64)
    pos[sel] = np.arange(int(sel.sum()))
    rows, cols = pos.shape
    pairs = []
    for dj, di in ((0, 1), (1, 0), (1, 1), (1, -1)):
        lo, hi = max(0, -di), cols - max(0, di)
        a = pos[:rows - dj, lo:hi]
        b = pos[dj:, lo + di:hi + di]
        ok = (a >= 0) & (b >= 0)
        pairs.append(np.stack([a[ok], b[ok]], axis=-1))
    return np.concatenate(pairs)


def _pair_batches(n: int, sel: np.ndarray, seed: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Index pairs (first, second) into the selected nodes, in chunks."""
    if n <= EXACT_PAIR_LIMIT:
        rows = max(1, PAIR_CHUNK // max(n, 1))
        for start in range(0, n, rows):
            first = np.arange(start, min(start + rows, n))
            a, b = np.meshgrid(first, np.arange(n), indexing="ij")
            keep = b > a
            yield a[keep], b[keep]
        return
    rng = np.random.default_rng(seed)
    for start in range(0, SUBSAMPLED_PAIRS, PAIR_CHUNK):
        size = min(PAIR_CHUNK, SUBSAMPLED_PAIRS - start)
        a = rng.integers(0, n, size=size)
        b = rng.integers(0, n, size=size)
        keep = a != b
        yield a[keep], b[keep]
    nb = _neighbour_pairs(sel)
    yield nb[:, 0], nb[:, 1]


def holder_seminorm(components: List[np.ndarray], points: np.ndarray, sel: np.ndarray,
                    alpha: float, seed: int = 0) -> float:
    """sup |F(z1) - F(z2)| / s(z1, z2)^alpha over node pairs; F may be vector valued."""
    vals = np.stack([c[sel] for c in components])
    pts = points[sel]
    n = pts.shape[0]
    best = 0.0
    for a, b in _pair_batches(n, sel, seed):
        if a.size == 0:
            continue
        s = cycloidal_distance(pts[a], pts[b])
        diff = np.sqrt(np.sum((vals[:, a] - vals[:, b]) ** 2, axis=0))
        ok = s > 0
        if ok.any():
            best = max(best, float(np.max(diff[ok] / s[ok] ** alpha)))
    return best


def _points(u: GridFunction) -> np.ndarray:
    X, Y = u.grid.mesh()
    return np.stack([X, Y], axis=-1)


def _calphas(components, points, sel, alpha, seed) -> float:
    sup = float(np.max(np.sqrt(sum(c[sel] ** 2 for c in components))))
    return sup + holder_seminorm(components, points, sel, alpha, seed)


def _ckalphas(u, k, sel, alpha, seed) -> float:
    points = _points(u)
    return sum(_calphas(_components(u, j), points, sel, alpha, seed) for j in range(k + 1))


def _y_damped(u: GridFunction, j: int) -> List[np.ndarray]:
    """Components of y D^(j+2) u."""
    Y = u.grid.mesh()[1]
    return [Y * c for c in _components(u, j + 2)]


def extension_defect(u: GridFunction, k: int, mask: Optional[np.ndarray] = None) -> float:
    """Relative mismatch between y D^(j+2) u on the first row above y = 0 and its
    linear extrapolation from the next two rows, maximised over j <= k."""
    sel = region(u, mask)
    y = u.grid.y
    if len(y) < 4:
        return 0.0
    cols = sel[1] & sel[2] & sel[3]
    if not cols.any():
        return 0.0
    worst = 0.0
    for j in range(k + 1):
        for comp in _y_damped(u, j):
            r1, r2, r3 = comp[1, cols], comp[2, cols], comp[3, cols]
            predicted = r2 + (y[1] - y[2]) * (r3 - r2) / (y[3] - y[2])
            scale = max(float(np.max(np.abs(comp[sel]))), 1e-300)
            worst = max(worst, float(np.max(np.abs(r1 - predicted))) / scale)
    return worst


def holder_norm(u: GridFunction, req: NormRequest) -> float:
    """C^alpha_s, C^{k,alpha}_s and C^{k,2+alpha}_s norms over the request mask."""
    alpha = req.alpha
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange(f"Hölder exponent must lie in (0, 1), got {alpha}")
    sel = region(u, req.mask)
    if req.tag == SpaceTag.CALPHAS:
        return _calphas([u.values], _points(u), sel, alpha, req.seed)
    if req.tag == SpaceTag.CKALPHAS:
        return _ckalphas(u, req.k, sel, alpha, req.seed)
    if req.tag == SpaceTag.CK2ALPHAS:
        total = _ckalphas(u, req.k + 1, sel, alpha, req.seed)
        # y D^2 u is only evaluated above the axis
        upper = sel.copy()
        upper[0] = False
        if upper.any():
            points = _points(u)
            total += sum(_calphas(_y_damped(u, j), points, upper, alpha, req.seed) for j in range(req.k + 1))
        defect = extension_defect(u, req.k, req.mask)
        if defect > EXTENSION_TOL:
            logger.warning("y D^2 D^k u does not extend continuously to y = 0 (defect %.3g)", defect)
        return total
    raise UnsupportedTag(f"{req.tag.value} is not a Hölder norm")


def evaluate_norm(u: GridFunction, req: NormRequest) -> float:
    """Dispatch on the request tag."""
    if req.tag in HOLDER_TAGS:
        return holder_norm(u, req)
    return sobolev_norm(u, req)


def empirical_holder_exponent(table: pd.DataFrame, band: float = MONOTONICITY_BAND) -> Optional[float]:
    """Largest alpha whose estimator stays bounded across the ladder.

    `table` has columns alpha, level (refinement index) and value; an alpha
    counts as bounded when the last refinement grows the estimator by at most
    `band`.
    """
    bounded = []
    for alpha, group in table.sort_values("level").groupby("alpha"):
        values = group["value"].to_numpy()
        if len(values) < 2 or values[-1] <= values[-2] * (1.0 + band):
            bounded.append(float(alpha))
    return max(bounded) if bounded else None
