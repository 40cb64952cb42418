# geometry/distance.py
import logging
import math

import numpy as np

from geometry.models import BallKind, BallSpec, DistanceReport, InclusionReport
from utils.errors import NegativeY

logger = logging.getLogger(__name__)

# relative slack on the inclusion radii
SLACK = 1e-12


def _as_xy(z):
    z = np.asarray(z, dtype=float)
    return z[..., 0], z[..., 1]


def cycloidal_distance(z, z0):
    """Koch distance |z - z0| / sqrt(y + y0 + |z - z0|); 0 when z = z0.

    Points may be (2,) pairs or (..., 2) arrays; the result broadcasts.
    """
    x, y = _as_xy(z)
    x0, y0 = _as_xy(z0)
    if np.any(y < 0) or np.any(y0 < 0):
        raise NegativeY("Koch distance is defined on the closed upper half-plane")
    d = np.hypot(x - x0, y - y0)
    denom = np.sqrt(y + y0 + d)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(d > 0, d / np.where(denom > 0, denom, 1.0), 0.0)
    return float(s) if s.ndim == 0 else s


def ball_mask(b: BallSpec, x, y, closure: bool = False):
    """Vectorised membership; `closure` admits points on the axis y = 0."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    x0, y0 = b.center
    upper = y >= 0 if closure else y > 0
    if b.kind == BallKind.EUCLIDEAN_HALF:
        inside = np.hypot(x - x0, y - y0) < b.radius
    else:
        inside = cycloidal_distance(np.stack([x, np.maximum(y, 0.0)], axis=-1), b.center) < b.radius
    return upper & inside


def ball_membership(b: BallSpec, z) -> bool:
    x, y = z
    if not y > 0:
        return False
    return bool(ball_mask(b, x, y))


def ball_inclusion_check(z0, r: float, samples: int, seed: int = 0) -> InclusionReport:
    """Monte-Carlo check of  H n B_{r^2}(z0) in B^s_r(z0)  and
    B^s_r(z0) in H n B_{2r^2 + r sqrt(2 y0)}(z0)."""
    x0, y0 = float(z0[0]), float(z0[1])
    if y0 < 0:
        raise NegativeY(f"center must lie in the closed half-plane, got y0={y0}")
    outer = 2.0 * r * r + r * math.sqrt(2.0 * y0)
    report = InclusionReport(center=(x0, y0), radius=r, samples=samples, outer_radius=outer)
    inner = r * r
    if samples <= 0 or inner == 0.0:
        return report

    rng = np.random.default_rng(seed)

    # uniform points of the Euclidean disk of radius r^2 kept in the open half-plane
    rad = inner * np.sqrt(rng.uniform(size=samples))
    ang = rng.uniform(0.0, 2.0 * np.pi, size=samples)
    pts = np.stack([x0 + rad * np.cos(ang), y0 + rad * np.sin(ang)], axis=-1)
    pts = pts[pts[:, 1] > 0]
    if len(pts):
        s = cycloidal_distance(pts, (x0, y0))
        bad = pts[s >= r * (1.0 + SLACK)]
        report.inner_violations = int(len(bad))
        report.witnesses.extend((float(p[0]), float(p[1])) for p in bad[:5])

    # points of a box covering the cycloidal ball, kept where s < r
    box = 1.5 * outer
    pts = np.stack([
        rng.uniform(x0 - box, x0 + box, size=samples),
        rng.uniform(max(0.0, y0 - box), y0 + box, size=samples),
    ], axis=-1)
    pts = pts[pts[:, 1] > 0]
    if len(pts):
        s = cycloidal_distance(pts, (x0, y0))
        in_ball = pts[s < r]
        d = np.hypot(in_ball[:, 0] - x0, in_ball[:, 1] - y0)
        bad = in_ball[d >= outer * (1.0 + SLACK)]
        report.outer_violations = int(len(bad))
        report.witnesses.extend((float(p[0]), float(p[1])) for p in bad[:5])

    if not report.passed:
        logger.warning("ball inclusion violated at z0=%s r=%g: %s", (x0, y0), r, report.witnesses[:1])
    return report


def cycloidal_inequality_check(samples: int = 100_000, seed: int = 0, extent: float = 10.0) -> DistanceReport:
    """Symmetry, s^2 <= |z - z0| and, for centers on the axis, |z - z0| <= 2 s^2."""
    rng = np.random.default_rng(seed)
    z = np.stack([rng.uniform(-extent, extent, samples), rng.uniform(0.0, extent, samples)], axis=-1)
    z0 = np.stack([rng.uniform(-extent, extent, samples), rng.uniform(0.0, extent, samples)], axis=-1)
    s = cycloidal_distance(z, z0)
    d = np.hypot(z[:, 0] - z0[:, 0], z[:, 1] - z0[:, 1])

    report = DistanceReport(samples=samples)
    asym = s != cycloidal_distance(z0, z)
    report.symmetry_violations = int(asym.sum())
    sq = s * s > d * (1.0 + SLACK)
    report.square_root_violations = int(sq.sum())

    axis = z0.copy()
    axis[:, 1] = 0.0
    s_axis = cycloidal_distance(z, axis)
    d_axis = np.hypot(z[:, 0] - axis[:, 0], z[:, 1])
    ax = d_axis > 2.0 * s_axis ** 2 * (1.0 + SLACK)
    report.axis_violations = int(ax.sum())

    for mask, pairs in ((asym, (z, z0)), (sq, (z, z0)), (ax, (z, axis))):
        if mask.any():
            i = int(np.argmax(mask))
            report.witness = (tuple(map(float, pairs[0][i])), tuple(map(float, pairs[1][i])))
            break
    return report
