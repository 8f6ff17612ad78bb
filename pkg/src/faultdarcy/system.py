"""Assembly and solution of the mixed saddle-point system.

Unknowns are ordered ``[flux DOFs, cell pressures]``. The matrix is

    [ A   B^T ]      A_ij = (k^-1 phi_j, phi_i) + <alpha phi_j.n, phi_i.n>_Gamma
    [ B   0   ]      B_cj = -(div phi_j, 1)_T_c

and the right-hand side is ``[-<g_D, phi_i.n>_{Gamma_D}, -(f, 1)_T_c]``.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .mesh import EdgeTag
from .problems import ProblemData
from .quadrature import ASSEMBLY_DEGREE, DATA_DEGREE, edge_rule, triangle_rule
from .spaces import LocalBasis, edge_moment_basis, local_flux_basis, reference_edge_points

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    pass


class IllPosedError(SolverError):
    pass


@dataclass(frozen=True, eq=False)
class EdgeTrace:
    """Normal traces of an edge's own DOF functions, seen from one adjacent cell."""

    edges: np.ndarray     # (ne,)
    cells: np.ndarray     # (ne,)
    local: np.ndarray     # (ne,) local edge index in that cell
    dofs: np.ndarray      # (ne, npe) global DOFs of the edge
    points: np.ndarray    # (ne, nq, 2) physical points, parameter from low to high vertex
    trace: np.ndarray     # (ne, nq, npe) phi_j . n_global
    weights: np.ndarray   # (ne, nq) quadrature weights times edge length
    t: np.ndarray         # (nq,) edge parameters


def edge_traces(mesh, dofmap, basis, edges, degree=ASSEMBLY_DEGREE, side=0):
    edges = np.asarray(edges, dtype=np.int64)
    rule = edge_rule(degree)
    cells = mesh.edge_cells[edges, side]
    local = np.argmax(mesh.cell_edges[cells] == edges[:, None], axis=1)
    npe = dofmap.family.dofs_per_edge
    ref = reference_edge_points(mesh, rule.points)[cells, local]        # (ne, nq, 2)
    sub = LocalBasis(basis.family, _subset_maps(basis.maps, cells), basis.coef[cells], basis.div[cells])
    vals = sub.values(ref)                                              # (ne, nq, nloc, 2)
    normals = mesh.edge_normals[edges]
    own = local[:, None] * npe + np.arange(npe)[None, :]
    vals = np.take_along_axis(vals, own[:, None, :, None], axis=2)
    trace = np.einsum("eqji,ei->eqj", vals, normals)
    p0 = mesh.vertices[mesh.edges[edges, 0]]
    p1 = mesh.vertices[mesh.edges[edges, 1]]
    points = p0[:, None, :] + rule.points[None, :, None] * (p1 - p0)[:, None, :]
    lengths = mesh.edge_lengths[edges]
    return EdgeTrace(edges, cells, local, dofmap.edge_dofs[edges], points, trace,
                     rule.weights[None, :] * lengths[:, None], rule.points)


def _subset_maps(maps, cells):
    return type(maps)(maps.origin[cells], maps.jac[cells], maps.det[cells], maps.jac_inv_t[cells])


@dataclass(frozen=True, eq=False)
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    constrained: np.ndarray        # indices into the full unknown vector
    constrained_values: np.ndarray
    load: np.ndarray               # (f, 1)_T per cell
    mesh: object
    dofmap: object
    data: ProblemData
    basis: LocalBasis

    @property
    def n_flux(self):
        return self.dofmap.n_flux

    @property
    def size(self):
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class DiscreteSolution:
    flux: np.ndarray
    pressure: np.ndarray
    residual: float
    system: LinearSystem

    @property
    def mesh(self):
        return self.system.mesh

    @property
    def dofmap(self):
        return self.system.dofmap

    @property
    def basis(self):
        return self.system.basis

    @property
    def data(self):
        return self.system.data

    def cell_coefficients(self):
        return self.flux[self.dofmap.cell_dofs]

    def divergence(self):
        """Cellwise (constant) divergence of u_h."""
        return np.einsum("cj,cj->c", self.basis.div, self.cell_coefficients())

    def flux_values(self, xhat):
        """u_h at reference points: (nq, 2) -> (nc, nq, 2)."""
        return np.einsum("cqji,cj->cqi", self.basis.values(xhat), self.cell_coefficients())


def _cell_mass(basis, kappa):
    rule = triangle_rule(ASSEMBLY_DEGREE)
    vals = basis.values(rule.points)
    return np.einsum("q,c,cqji,cqki->cjk", rule.weights, basis.maps.det / kappa, vals, vals)


def cell_loads(mesh, f, degree=DATA_DEGREE):
    rule = triangle_rule(degree)
    from .spaces import CellMaps
    maps = CellMaps.of(mesh)
    x = maps.to_physical(rule.points)
    fx = np.asarray(f(x[..., 0], x[..., 1]), dtype=float)
    return maps.det * (fx @ rule.weights)


def assemble(mesh, dofmap, data, basis=None):
    if dofmap.mesh is not mesh or dofmap.cell_dofs.shape[0] != mesh.n_cells:
        raise ValueError("dofmap was not built for this mesh")
    if not (data.alpha > 0):
        raise ValueError("alpha must be positive")
    if basis is None:
        basis = local_flux_basis(mesh, dofmap.family)
    nf, nc = dofmap.n_flux, mesh.n_cells
    nloc = dofmap.cell_dofs.shape[1]
    cd = dofmap.cell_dofs

    mass = _cell_mass(basis, data.kappa)
    rows = [np.repeat(cd, nloc, axis=1).ravel()]
    cols = [np.tile(cd, (1, nloc)).ravel()]
    vals = [mass.ravel()]

    # interface term, once per fault edge
    gamma = np.flatnonzero(mesh.edge_tags == EdgeTag.GAMMA)
    if gamma.size:
        tr = edge_traces(mesh, dofmap, basis, gamma)
        g = data.alpha * np.einsum("eq,eqj,eqk->ejk", tr.weights, tr.trace, tr.trace)
        npe = tr.dofs.shape[1]
        rows.append(np.repeat(tr.dofs, npe, axis=1).ravel())
        cols.append(np.tile(tr.dofs, (1, npe)).ravel())
        vals.append(g.ravel())

    area = basis.maps.det / 2.0
    bvals = -basis.div * area[:, None]
    cell_ids = np.repeat(np.arange(nc), nloc)
    rows += [nf + cell_ids, cd.ravel()]
    cols += [cd.ravel(), nf + cell_ids]
    vals += [bvals.ravel(), bvals.ravel()]

    n = nf + nc
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    K.sum_duplicates()

    rhs = np.zeros(n)
    dirichlet = np.flatnonzero(mesh.edge_tags == EdgeTag.DIRICHLET)
    if dirichlet.size:
        tr = edge_traces(mesh, dofmap, basis, dirichlet, degree=DATA_DEGREE)
        gd = np.asarray(data.g_D(tr.points[..., 0], tr.points[..., 1]), dtype=float)
        gd = gd * dofmap.cell_signs[tr.cells, tr.local][:, None]
        np.add.at(rhs, tr.dofs.ravel(), -np.einsum("eq,eq,eqj->ej", tr.weights, gd, tr.trace).ravel())

    load = cell_loads(mesh, data.f)
    rhs[nf:] = -load

    neumann = np.flatnonzero(mesh.edge_tags == EdgeTag.NEUMANN)
    if neumann.size:
        rule = edge_rule(DATA_DEGREE)
        cells = mesh.edge_cells[neumann, 0]
        local = np.argmax(mesh.cell_edges[cells] == neumann[:, None], axis=1)
        sign = dofmap.cell_signs[cells, local]
        p0 = mesh.vertices[mesh.edges[neumann, 0]]
        p1 = mesh.vertices[mesh.edges[neumann, 1]]
        pts = p0[:, None, :] + rule.points[None, :, None] * (p1 - p0)[:, None, :]
        gn = np.asarray(data.g_N(pts[..., 0], pts[..., 1]), dtype=float) * sign[:, None]
        L = mesh.edge_lengths[neumann]
        q = edge_moment_basis(dofmap.family, rule.points[None, :], L[:, None])
        cvals = np.einsum("q,e,eq,eqj->ej", rule.weights, L, gn, q)
        constrained = dofmap.edge_dofs[neumann].ravel()
        cvals = cvals.ravel()
    else:
        constrained = np.zeros(0, dtype=np.int64)
        cvals = np.zeros(0)
    return LinearSystem(K, rhs, constrained, cvals, load, mesh, dofmap, data, basis)


def solve(system):
    mesh = system.mesh
    if not np.any(mesh.edge_tags == EdgeTag.DIRICHLET):
        raise IllPosedError("no Dirichlet boundary: pressure is only determined up to a constant "
                            "(pure Neumann problem)")
    n = system.size
    x = np.zeros(n)
    x[system.constrained] = system.constrained_values
    free = np.ones(n, dtype=bool)
    free[system.constrained] = False
    K = system.matrix
    Kff = K[free][:, free].tocsc()
    b = system.rhs[free] - K[free][:, ~free] @ x[~free]
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        xf = np.zeros(free.sum())
        res = 0.0
    else:
        xf = spsolve(Kff, b)
        if not np.all(np.isfinite(xf)):
            raise SolverError(f"sparse factorization failed (system size {Kff.shape[0]}); "
                              "matrix is singular or ill-posed")
        res = np.linalg.norm(Kff @ xf - b) / bnorm
        for _ in range(3):
            if res <= RESIDUAL_TOL:
                break
            xf = xf + spsolve(Kff, b - Kff @ xf)
            res = np.linalg.norm(Kff @ xf - b) / bnorm
        if res > RESIDUAL_TOL:
            raise SolverError(f"relative residual {res:.3e} exceeds {RESIDUAL_TOL:g}")
    x[free] = xf
    log.debug("solved system of size %d, relative residual %.2e", n, res)
    nf = system.n_flux
    return DiscreteSolution(x[:nf], x[nf:], float(res), system)


def solve_problem(mesh, problem, family):
    from .spaces import build_dofmap
    dofmap = build_dofmap(mesh, family)
    return solve(assemble(mesh, dofmap, problem.data))


def write_matrix(system, path):
    """Coordinate-format dump, one ``i j value`` line per stored entry."""
    K = system.matrix.tocoo()
    order = np.lexsort((K.col, K.row))
    with open(path, "w") as fh:
        for i, j, v in zip(K.row[order], K.col[order], K.data[order]):
            fh.write(f"{i} {j} {v:.17g}\n")
