"""Builders for synthetic discrete states used by several test modules."""
import numpy as np

from faultdarcy.postprocess import PostPressure
from faultdarcy.problems import ProblemData
from faultdarcy.quadrature import triangle_rule
from faultdarcy.spaces import CellMaps, build_dofmap, interpolate_flux, p2_nodes
from faultdarcy.system import DiscreteSolution, assemble


def synthetic_solution(mesh, family, u=None, p=None, data=None):
    """A DiscreteSolution whose flux interpolates ``u`` and pressure holds cell means of ``p``."""
    dm = build_dofmap(mesh, family)
    system = assemble(mesh, dm, data or ProblemData(alpha=1.0))
    flux = np.zeros(dm.n_flux) if u is None else interpolate_flux(mesh, dm, u)
    pressure = np.zeros(mesh.n_cells) if p is None else cell_means(mesh, p)
    return DiscreteSolution(flux, pressure, 0.0, system)


def cell_means(mesh, p):
    rule = triangle_rule(8)
    x = CellMaps.of(mesh).to_physical(rule.points)
    return 2.0 * (p(x[..., 0], x[..., 1]) @ rule.weights)


def nodal_post(mesh, p):
    """P2 reconstruction holding the nodal interpolant of ``p`` on every cell."""
    nodes = p2_nodes(mesh)
    return PostPressure(p(nodes[..., 0], nodes[..., 1]), mesh, CellMaps.of(mesh), 0.0, 1.0)
