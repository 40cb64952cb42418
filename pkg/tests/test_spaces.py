import math

import numpy as np
import pandas as pd
import pytest

from discretization.models import Grid, GridFunction, interpolate
from geometry.models import HalfPlaneDomain
from heston.fields import PolynomialField, SeparableField, exponential, sine
from spaces.holder import empirical_holder_exponent, evaluate_norm, holder_norm, holder_seminorm
from spaces.models import NormRequest, SpaceTag, WeightSpec
from spaces.sobolev import c11s_norm, calhk_blocks, finite_height_inclusion_check, sobolev_norm, weighted_lp_norm
from spaces.weights import weight_value
from utils.errors import AlphaOutOfRange, EmptyMask, InvalidExponent, NonpositiveY, UnsupportedTag

UNIT = HalfPlaneDomain(x_min=0.0, x_max=1.0, y_max=1.0)
FLAT = WeightSpec.power(1.0)


def unit_grid(n=16, grading=1.0):
    return Grid(domain=UNIT, nx=n, ny=n, grading=grading)


def one(grid):
    return interpolate(grid, PolynomialField({(0, 0): 1.0}))


def test_weight_value():
    w = WeightSpec(beta=2.0, mu=1.0, gamma=0.5, m=1)
    assert weight_value(w, (0.0, 2.0)) == pytest.approx(4.0 * math.exp(-0.5 - 2.0))
    assert weight_value(w.shifted(1), (0.0, 2.0)) == pytest.approx(2.0 * weight_value(w, (0.0, 2.0)))
    with pytest.raises(NonpositiveY):
        weight_value(w, (0.0, 0.0))


def test_lp_norms_of_one():
    grid = unit_grid(8, grading=2.0)
    assert weighted_lp_norm(one(grid), 2, FLAT) == pytest.approx(1.0, rel=1e-13)
    assert weighted_lp_norm(one(grid), 2, WeightSpec.power(2.0)) == pytest.approx(1 / math.sqrt(2), rel=1e-12)


def test_lp_needs_p_at_least_one():
    with pytest.raises(InvalidExponent):
        weighted_lp_norm(one(unit_grid(4)), 0.5, FLAT)


def test_empty_mask():
    grid = unit_grid(4)
    with pytest.raises(EmptyMask):
        weighted_lp_norm(one(grid), 2, FLAT, mask=np.zeros(grid.shape, dtype=bool))


def test_h1_of_one():
    req = NormRequest(tag=SpaceTag.H1, weight=FLAT)
    assert sobolev_norm(one(unit_grid(8)), req) == pytest.approx(math.sqrt(1.5), rel=1e-12)


def test_calh2_is_h2():
    grid = unit_grid(16, grading=2.0)
    u = interpolate(grid, SeparableField(sine(), exponential(-1.0)))
    w = WeightSpec(beta=1.5, mu=2.0)
    h2 = sobolev_norm(u, NormRequest(tag=SpaceTag.H2, weight=w))
    calh2 = sobolev_norm(u, NormRequest(tag=SpaceTag.CALHK, weight=w, k=0))
    assert calh2 == pytest.approx(h2, rel=1e-14)


def test_calh3_shifted_block_of_y_cubed():
    grid = unit_grid(16)
    u = interpolate(grid, PolynomialField({(0, 3): 1.0}))
    blocks = calhk_blocks(u, 1, FLAT)
    # 36 int_0^1 y^2 * y dy
    assert blocks["y2_dy3_w1"] == pytest.approx(9.0, rel=1e-10)
    assert set(blocks) == {"y2_top", "y2_dy3_w1", "first_0", "first_1", "mixed_1_1", "zeroth"}
    total = sobolev_norm(u, NormRequest(tag=SpaceTag.CALHK, weight=FLAT, k=1))
    assert total ** 2 == pytest.approx(sum(blocks.values()))


def test_norms_are_homogeneous_and_subadditive():
    grid = unit_grid(16, grading=2.0)
    u = interpolate(grid, SeparableField(sine(2.0), exponential(0.5)))
    v = interpolate(grid, PolynomialField({(1, 1): 1.0, (0, 2): -0.3}))
    w = WeightSpec(beta=1.3, mu=0.7)
    for tag in (SpaceTag.LP, SpaceTag.H1, SpaceTag.H2, SpaceTag.WKP):
        req = NormRequest(tag=tag, weight=w, k=1, p=3.0)
        nu, nv = evaluate_norm(u, req), evaluate_norm(v, req)
        assert evaluate_norm(-2.5 * u, req) == pytest.approx(2.5 * nu, rel=1e-12)
        assert evaluate_norm(u + v, req) <= nu + nv + 1e-12


ALL_TAGS = list(SpaceTag)
HOLDER = {SpaceTag.CALPHAS, SpaceTag.CKALPHAS, SpaceTag.CK2ALPHAS}
NORM_CASES = (
    [(tag, 16, 100) for tag in ALL_TAGS]
    + [(tag, 64, 100) for tag in ALL_TAGS if tag not in HOLDER]
    + [pytest.param(tag, 64, 10, marks=pytest.mark.slow) for tag in ALL_TAGS if tag in HOLDER]
)


@pytest.mark.parametrize("tag, n, count", NORM_CASES)
def test_norm_identities_on_random_functions(tag, n, count):
    grid = unit_grid(n, grading=2.0)
    rng = np.random.default_rng(n)
    req = NormRequest(tag=tag, weight=WeightSpec(beta=1.3, mu=0.7, gamma=0.2), k=1, p=3.0, alpha=0.5)
    lower = req.model_copy(update={"mask": grid.mesh()[1] <= 0.5})
    for _ in range(count):
        u = GridFunction(grid=grid, values=rng.normal(size=grid.shape))
        v = GridFunction(grid=grid, values=rng.normal(size=grid.shape))
        c = float(rng.uniform(-3.0, 3.0))
        nu, nv = evaluate_norm(u, req), evaluate_norm(v, req)
        assert evaluate_norm(c * u, req) == pytest.approx(abs(c) * nu, rel=1e-10)
        assert evaluate_norm(u + v, req) <= (nu + nv) * (1 + 1e-12)
        assert evaluate_norm(u, lower) <= nu * (1 + 1e-12)


def test_shifted_l2_of_one():
    report = finite_height_inclusion_check(one(unit_grid(8)), FLAT, k=1, ms=(1, 2))
    assert report.l2 == pytest.approx(1.0, rel=1e-12)
    assert report.shifted_l2[1] == pytest.approx(math.sqrt(0.5), rel=1e-12)
    assert report.shifted_l2[2] == pytest.approx(math.sqrt(1 / 3), rel=1e-12)
    assert report.passed


@pytest.mark.parametrize("n, k", [(16, 1), (16, 2), (64, 1)])
@pytest.mark.parametrize("height", [0.5, 2.0])
def test_finite_height_inclusions(n, k, height):
    grid = Grid(domain=HalfPlaneDomain(x_min=0.0, x_max=1.0, y_max=height), nx=n, ny=n, grading=2.0)
    w = WeightSpec(beta=1.3, mu=0.7)
    rng = np.random.default_rng(k * n)
    for _ in range(100):
        u = GridFunction(grid=grid, values=rng.normal(size=grid.shape))
        report = finite_height_inclusion_check(u, w, k=k)
        assert report.height == height
        assert report.passed, report


def test_wkp_of_one():
    grid = unit_grid(8)
    req = NormRequest(tag=SpaceTag.WKP, weight=FLAT, k=1, p=2.0)
    assert sobolev_norm(one(grid), req) == pytest.approx(1.0, abs=1e-10)


def test_c11s_of_x():
    u = interpolate(unit_grid(8), PolynomialField({(1, 0): 1.0}))
    assert c11s_norm(u) == pytest.approx(2.0, abs=1e-10)


def test_sobolev_dispatch_rejects_holder_tags():
    with pytest.raises(UnsupportedTag):
        sobolev_norm(one(unit_grid(4)), NormRequest(tag=SpaceTag.CALPHAS, weight=FLAT))


def test_holder_norm_of_a_constant():
    grid = unit_grid(8)
    u = interpolate(grid, PolynomialField({(0, 0): 3.0}))
    assert holder_norm(u, NormRequest(tag=SpaceTag.CALPHAS, weight=FLAT)) == pytest.approx(3.0)


def test_square_root_is_half_holder_in_the_cycloidal_metric():
    grid = unit_grid(16)
    X, Y = grid.mesh()
    u = GridFunction(grid=grid, values=np.sqrt(Y))
    points = np.stack([X, Y], axis=-1)
    sel = np.ones(grid.shape, dtype=bool)
    semi = holder_seminorm([u.values], points, sel, alpha=0.5)
    assert 0 < semi <= 1.5


def test_indicator_is_not_holder_continuous():
    values = []
    for n in (16, 32):
        grid = unit_grid(n)
        X, _ = grid.mesh()
        u = GridFunction(grid=grid, values=(X > 0.51).astype(float))
        values.append(holder_norm(u, NormRequest(tag=SpaceTag.CALPHAS, weight=FLAT, alpha=0.9)))
    assert values[1] > 1.2 * values[0]


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2])
def test_alpha_out_of_range(alpha):
    with pytest.raises(AlphaOutOfRange):
        holder_norm(one(unit_grid(4)), NormRequest(tag=SpaceTag.CALPHAS, weight=FLAT, alpha=alpha))


def test_ck2alphas_of_a_polynomial_is_finite():
    grid = unit_grid(16)
    u = interpolate(grid, PolynomialField({(0, 2): 1.0, (1, 0): 1.0}))
    value = holder_norm(u, NormRequest(tag=SpaceTag.CK2ALPHAS, weight=FLAT, k=0))
    assert np.isfinite(value) and value > 0


def test_empirical_exponent():
    table = pd.DataFrame({
        "alpha": [0.3, 0.3, 0.3, 0.7, 0.7, 0.7],
        "level": [0, 1, 2, 0, 1, 2],
        "value": [1.0, 1.01, 1.02, 1.0, 2.0, 4.0],
    })
    assert empirical_holder_exponent(table) == pytest.approx(0.3)
    assert empirical_holder_exponent(table[table["alpha"] == 0.7]) is None
