"""A posteriori error estimator built on the post-processed pressure.

    eta_T = || u_h + grad p* ||_T
    eta_E = h_E^{-1/2} || [p*] ||_E                   interior edges off the fault
    eta_E = alpha^{-1/2} || (I - P_E^m) [p*] ||_E     fault edges, m = 0 (RT) or 1 (BDM1)

Boundary edges carry no term. Jumps are taken as (value on the side the
global edge normal points out of) minus (value on the other side); on the
fault this is left minus right.
"""
from dataclasses import dataclass

import numpy as np

from .mesh import EdgeTag
from .quadrature import ASSEMBLY_DEGREE, DATA_DEGREE, edge_rule, triangle_rule
from .spaces import CellMaps, Family, legendre_onb, reference_edge_points
from .system import edge_traces


@dataclass(frozen=True, eq=False)
class EstimatorReport:
    eta_cell: np.ndarray
    eta_edge: np.ndarray
    osc: np.ndarray
    moment_order: int

    @property
    def eta_total(self):
        return float(np.sqrt(np.sum(self.eta_cell ** 2) + np.sum(self.eta_edge ** 2)))

    @property
    def osc_total(self):
        return float(np.sqrt(np.sum(self.osc ** 2)))

    def to_dict(self):
        return {"eta_cell": self.eta_cell.tolist(), "eta_edge": self.eta_edge.tolist(),
                "osc": self.osc.tolist(), "moment_order": self.moment_order,
                "eta_total": self.eta_total, "osc_total": self.osc_total}


def eta_cells(solution, post):
    rule = triangle_rule(ASSEMBLY_DEGREE)
    r = solution.flux_values(rule.points) + post.gradients(rule.points)
    sq = np.einsum("cqi,cqi->cq", r, r) @ rule.weights * solution.basis.maps.det
    return np.sqrt(np.maximum(sq, 0.0))


def interior_edges(mesh):
    """Edges with two adjacent cells, with the cell the global normal leaves first."""
    edges = np.flatnonzero(mesh.edge_cells[:, 1] >= 0)
    c0, c1 = mesh.edge_cells[edges, 0], mesh.edge_cells[edges, 1]
    local0 = np.argmax(mesh.cell_edges[c0] == edges[:, None], axis=1)
    out0 = mesh.outward_signs[c0, local0] > 0
    plus = np.where(out0, c0, c1)
    minus = np.where(out0, c1, c0)
    return edges, plus, minus


def edge_jumps(mesh, post, edges, plus, minus, t):
    """[p*] at global edge parameters t, (ne, nq)."""
    ref = reference_edge_points(mesh, t)
    lp = np.argmax(mesh.cell_edges[plus] == edges[:, None], axis=1)
    lm = np.argmax(mesh.cell_edges[minus] == edges[:, None], axis=1)
    return post.values_in(plus, ref[plus, lp]) - post.values_in(minus, ref[minus, lm])


def project_edge(values, t, weights, lengths, order):
    """L2 projection onto P_order(E) of values at edge quadrature points."""
    q = legendre_onb(t[None, :], lengths[:, None], order)          # (ne, nq, order+1)
    coef = np.einsum("q,e,eq,eqj->ej", weights, lengths, values, q)
    return np.einsum("ej,eqj->eq", coef, q)


def eta_edges(solution, post):
    mesh = solution.mesh
    family = solution.dofmap.family
    alpha = solution.data.alpha
    rule = edge_rule(ASSEMBLY_DEGREE)
    out = np.zeros(mesh.n_edges)
    edges, plus, minus = interior_edges(mesh)
    if edges.size == 0:
        return out
    jump = edge_jumps(mesh, post, edges, plus, minus, rule.points)
    L = mesh.edge_lengths[edges]
    on_gamma = mesh.edge_tags[edges] == EdgeTag.GAMMA
    jump[on_gamma] -= project_edge(jump[on_gamma], rule.points, rule.weights, L[on_gamma],
                                   family.moment_order)
    norm2 = (jump ** 2 @ rule.weights) * L
    scale = np.where(on_gamma, 1.0 / alpha, 1.0 / L)
    out[edges] = np.sqrt(np.maximum(norm2 * scale, 0.0))
    return out


def oscillation(mesh, f, degree=DATA_DEGREE):
    """h_T || f - mean_T f ||_T per cell."""
    rule = triangle_rule(degree)
    maps = CellMaps.of(mesh)
    x = maps.to_physical(rule.points)
    fx = np.asarray(f(x[..., 0], x[..., 1]), dtype=float)
    mean = 2.0 * (fx @ rule.weights)
    dev2 = ((fx - mean[:, None]) ** 2 @ rule.weights) * maps.det
    return mesh.diameters * np.sqrt(np.maximum(dev2, 0.0))


def estimate(solution, post):
    return EstimatorReport(eta_cells(solution, post), eta_edges(solution, post),
                           oscillation(solution.mesh, solution.data.f),
                           solution.dofmap.family.moment_order)


def effectivity(report, flux_error):
    """sqrt(eta^2 + osc^2 / pi^2) / ||u - u_h||; NaN when the error is zero."""
    if not flux_error > 0:
        return float("nan")
    return float(np.sqrt(report.eta_total ** 2 + report.osc_total ** 2 / np.pi ** 2) / flux_error)


def jump_means(solution, post):
    """Edge integrals behind the mean-zero jump properties.

    Returns ``(edges, integral)`` where ``integral`` is ``int_E [p*]`` on
    interior edges off the fault and ``int_E (alpha u_h.n - [p*])`` on fault
    edges.
    """
    mesh = solution.mesh
    rule = edge_rule(ASSEMBLY_DEGREE)
    edges, plus, minus = interior_edges(mesh)
    jump = edge_jumps(mesh, post, edges, plus, minus, rule.points)
    L = mesh.edge_lengths[edges]
    on_gamma = mesh.edge_tags[edges] == EdgeTag.GAMMA
    integrand = -jump
    if on_gamma.any():
        integrand[on_gamma] += solution.data.alpha * normal_flux(solution, edges[on_gamma])
    integrand[~on_gamma] = jump[~on_gamma]
    return edges, (integrand @ rule.weights) * L


def normal_flux(solution, edges):
    """u_h . n_global at the edge quadrature points, (ne, nq)."""
    tr = edge_traces(solution.mesh, solution.dofmap, solution.basis, edges)
    return np.einsum("eqj,ej->eq", tr.trace, solution.flux[tr.dofs])
