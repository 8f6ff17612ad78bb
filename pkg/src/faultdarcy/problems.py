"""Benchmark problems on the unit square with the fault {1/2} x [1/4, 3/4].

Exact fields are region-dispatched: ``x <= 1/2`` is the left subdomain (the
side the fault normal points out of), so evaluating exactly on the fault
returns the left trace.
"""
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .mesh import FAULT_X, FAULT_Y0, FAULT_Y1, ProblemGeometry

PROBLEM_IDS = ("manufactured", "linear-fault", "fault-flow")

# Forced by the interface condition for the manufactured pressure:
# jump = sqrt(2) cos^2, normal flux = (3 pi sqrt(2) / 4) cos^2.
MANUFACTURED_ALPHA = 4.0 / (3.0 * np.pi)


def _zero(x, y):
    return np.zeros(np.broadcast(x, y).shape)


@dataclass(frozen=True)
class ProblemData:
    alpha: float
    f: Callable = _zero
    g_D: Callable = _zero
    g_N: Callable = _zero
    kappa: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha!r}")
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError(f"kappa must be positive and finite, got {self.kappa!r}")


@dataclass(frozen=True)
class ProblemDefinition:
    name: str
    geometry: ProblemGeometry
    data: ProblemData
    exact_p: Optional[Callable] = None
    exact_u: Optional[Callable] = None
    notes: dict = field(default_factory=dict)

    @property
    def has_exact(self):
        return self.exact_p is not None and self.exact_u is not None

    def with_alpha(self, alpha):
        return replace(self, data=replace(self.data, alpha=float(alpha)))


# --- manufactured solution --------------------------------------------------

_A = 1.5 * np.pi


def _strip(y):
    return (y >= FAULT_Y0) & (y <= FAULT_Y1)


def manufactured_pressure(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    c2 = np.cos(2 * np.pi * (y - 0.5)) ** 2
    left = np.sin(_A * x) * c2
    right = -np.sin(_A * (1.0 - x)) * c2
    return np.where(_strip(y), np.where(x <= FAULT_X, left, right), 0.0)


def manufactured_flux(x, y):
    """u = -grad p, shape (..., 2)."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    th = 2 * np.pi * (y - 0.5)
    c2 = np.cos(th) ** 2
    s2 = np.sin(2 * th)
    is_left = x <= FAULT_X
    ux = np.where(is_left, -_A * np.cos(_A * x) * c2, -_A * np.cos(_A * (1.0 - x)) * c2)
    uy = np.where(is_left, 2 * np.pi * np.sin(_A * x) * s2, -2 * np.pi * np.sin(_A * (1.0 - x)) * s2)
    inside = _strip(y)
    return np.stack([np.where(inside, ux, 0.0), np.where(inside, uy, 0.0)], axis=-1)


def manufactured_source(x, y):
    """f = -Laplace p regionwise."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    th = 2 * np.pi * (y - 0.5)
    shape = (9 * np.pi ** 2 / 4) * np.cos(th) ** 2 + 8 * np.pi ** 2 * np.cos(2 * th)
    val = np.where(x <= FAULT_X, np.sin(_A * x), -np.sin(_A * (1.0 - x))) * shape
    return np.where(_strip(y), val, 0.0)


def manufactured():
    data = ProblemData(alpha=MANUFACTURED_ALPHA, f=manufactured_source)
    return ProblemDefinition("manufactured", ProblemGeometry.all_dirichlet(), data,
                             manufactured_pressure, manufactured_flux,
                             notes={"alpha_source": "forced by interface condition"})


# --- linear fault -----------------------------------------------------------

def linear_fault(alpha):
    """p = -x left of x = 1/2 and -x - alpha right of it; u = (1, 0), f = 0.

    The pressure offset runs along the whole line x = 1/2, so the fault for
    this problem spans the full height of the square. With a shorter fault
    the pressure would have to be continuous on the rest of the line and
    the linear field would not be a solution.
    """
    alpha = float(alpha)

    def p(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.where(x <= FAULT_X, -x, -x - alpha)

    def u(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.stack([np.ones_like(x), np.zeros_like(x)], axis=-1)

    data = ProblemData(alpha=alpha, g_D=p)
    return ProblemDefinition("linear-fault", ProblemGeometry.through_fault(), data, p, u)


# --- fault flow -------------------------------------------------------------

def fault_flow(alpha):
    """f = 1, no-flow on top/bottom, p = 0 on the left and p = -1 on the right."""
    def g_D(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.where(x > 0.5, -1.0, 0.0)

    def f(x, y):
        return np.ones(np.broadcast(x, y).shape)

    data = ProblemData(alpha=float(alpha), f=f, g_D=g_D)
    return ProblemDefinition("fault-flow", ProblemGeometry.fault_flow(), data)


def get_problem(problem_id, alpha=None):
    if problem_id == "manufactured":
        prob = manufactured()
        return prob if alpha is None else prob.with_alpha(alpha)
    if problem_id == "linear-fault":
        return linear_fault(1.0 if alpha is None else alpha)
    if problem_id == "fault-flow":
        return fault_flow(10.0 if alpha is None else alpha)
    raise ValueError(f"unknown problem id {problem_id!r}; expected one of {', '.join(PROBLEM_IDS)}")


# --- exact-error norms ------------------------------------------------------

@dataclass(frozen=True)
class ErrorNorms:
    flux_l2: float
    postpressure_l2: float
    tnorm: float
    cell_flux: np.ndarray = field(repr=False, default=None)


def error_norms(solution, post, problem, degree=None):
    """||u - u_h||, ||p - p*|| and the fault-weighted flux norm of u - u_h."""
    from .mesh import EdgeTag
    from .quadrature import DATA_DEGREE, edge_rule, triangle_rule

    if not problem.has_exact:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    degree = DATA_DEGREE if degree is None else degree
    rule = triangle_rule(degree)
    maps = solution.basis.maps
    x = maps.to_physical(rule.points)
    du = problem.exact_u(x[..., 0], x[..., 1]) - solution.flux_values(rule.points)
    cell_flux = np.sqrt(np.maximum((np.einsum("cqi,cqi->cq", du, du) @ rule.weights) * maps.det, 0.0))
    dp = problem.exact_p(x[..., 0], x[..., 1]) - post.values(rule.points)
    p_err = float(np.sqrt(max(float(np.sum((dp ** 2 @ rule.weights) * maps.det)), 0.0)))
    flux_l2 = float(np.sqrt(np.sum(cell_flux ** 2)))

    mesh = solution.mesh
    gamma = np.flatnonzero(mesh.edge_tags == EdgeTag.GAMMA)
    fault2 = 0.0
    if gamma.size:
        from .system import edge_traces
        tr = edge_traces(mesh, solution.dofmap, solution.basis, gamma, degree=degree)
        un_h = np.einsum("eqj,ej->eq", tr.trace, solution.flux[tr.dofs])
        normals = mesh.edge_normals[gamma]
        un = np.einsum("eqi,ei->eq", problem.exact_u(tr.points[..., 0], tr.points[..., 1]), normals)
        fault2 = float(np.sum(tr.weights * (un - un_h) ** 2))
    tnorm = float(np.sqrt(flux_l2 ** 2 / solution.data.kappa + solution.data.alpha * fault2))
    return ErrorNorms(flux_l2, p_err, tnorm, cell_flux)
