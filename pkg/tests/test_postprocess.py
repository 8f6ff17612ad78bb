import numpy as np
import pytest

from faultdarcy.mesh import build_structured, refine
from faultdarcy.postprocess import postprocess
from faultdarcy.problems import error_norms
from faultdarcy.quadrature import triangle_rule
from faultdarcy.spaces import CellMaps, Family
from faultdarcy.system import solve_problem

from helpers import cell_means, synthetic_solution


@pytest.fixture
def skewed_mesh():
    return refine(build_structured(4), [0, 5, 17])


@pytest.mark.parametrize("family", list(Family))
def test_constant_pressure_zero_flux(skewed_mesh, family):
    sol = synthetic_solution(skewed_mesh, family, p=lambda x, y: 0 * x + 2.5)
    post = postprocess(sol)
    np.testing.assert_allclose(post.coef, 2.5, atol=1e-13)


@pytest.mark.parametrize("family", list(Family))
def test_constant_flux_gives_matching_gradient(skewed_mesh, family):
    u = lambda x, y: np.stack(np.broadcast_arrays(0.3 + 0 * x, -1.2 + 0 * y), -1)
    sol = synthetic_solution(skewed_mesh, family, u=u)
    post = postprocess(sol)
    rule = triangle_rule(4)
    np.testing.assert_allclose(post.gradients(rule.points), -sol.flux_values(rule.points), atol=1e-12)
    np.testing.assert_allclose(post.gradients(rule.points)[..., 0], -0.3, atol=1e-12)


def test_quadratic_pressure_recovered_from_linear_flux(skewed_mesh):
    # BDM1 holds every linear field, so grad of a quadratic is represented exactly
    p = lambda x, y: x ** 2 - 3 * x * y + 0.5 * y ** 2 + y
    u = lambda x, y: -np.stack([2 * x - 3 * y, -3 * x + y + 1], -1)
    sol = synthetic_solution(skewed_mesh, Family.BDM1, u=u, p=p)
    post = postprocess(sol)
    rule = triangle_rule(4)
    x = CellMaps.of(skewed_mesh).to_physical(rule.points)
    np.testing.assert_allclose(post.values(rule.points), p(x[..., 0], x[..., 1]), atol=1e-12)


@pytest.mark.parametrize("family", list(Family))
def test_cell_means_preserved(family, manufactured_problem):
    m = refine(build_structured(8), [1, 2, 3, 100])
    sol = solve_problem(m, manufactured_problem, family)
    post = postprocess(sol)
    np.testing.assert_allclose(post.cell_means(), sol.pressure, atol=1e-12)
    assert post.residual <= 1e-10
    assert np.isfinite(post.condition) and post.condition < 1e8


def test_postprocessed_pressure_beats_raw(manufactured_problem):
    m = build_structured(16)
    sol = solve_problem(m, manufactured_problem, Family.BDM1)
    post = postprocess(sol)
    err = error_norms(sol, post, manufactured_problem)
    rule = triangle_rule(8)
    x = CellMaps.of(m).to_physical(rule.points)
    p = manufactured_problem.exact_p(x[..., 0], x[..., 1])
    raw = np.sqrt(np.sum(((p - sol.pressure[:, None]) ** 2 @ rule.weights) * 2 * m.areas))
    assert err.postpressure_l2 < raw
    assert err.postpressure_l2 < 0.25 * raw


def test_cell_means_helper_matches_load(mesh8, manufactured_problem):
    sol = solve_problem(mesh8, manufactured_problem, Family.RT1)
    f_means = cell_means(mesh8, manufactured_problem.data.f)
    np.testing.assert_allclose(sol.divergence(), f_means, atol=1e-9)
