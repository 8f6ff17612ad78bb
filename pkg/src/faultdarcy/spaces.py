"""Lowest-order H(div) flux spaces (RT and BDM1), DOF maps and P2 bases.

Flux DOFs are edge moments of the normal component against a basis of
P_m(E) taken with the *global* edge normal and the global edge direction
(lower vertex id to higher). Because every cell uses the same functionals
on a shared edge, the assembled field has a continuous normal component
without any per-cell sign flipping.

* RT:   one DOF per edge, ``int_E v.n ds``.
* BDM1: two DOFs per edge, ``int_E v.n q_j ds`` with the L2-orthonormal
  basis ``q_0 = 1/sqrt(L)``, ``q_1 = sqrt(3/L) (2t - 1)``.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .mesh import EdgeTag
from .quadrature import ASSEMBLY_DEGREE, edge_rule

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class Family(str, Enum):
    RT1 = "rt1"
    BDM1 = "bdm1"

    @property
    def dofs_per_edge(self):
        return 1 if self is Family.RT1 else 2

    @property
    def moment_order(self):
        """Polynomial order m of the normal trace on an edge."""
        return 0 if self is Family.RT1 else 1


def edge_moment_basis(family, t, length):
    """Edge test functions at parameters ``t``; shape (..., dofs_per_edge)."""
    t, length = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(length, dtype=float))
    if family is Family.RT1:
        return np.ones(t.shape + (1,))
    return np.stack([1.0 / np.sqrt(length), np.sqrt(3.0 / length) * (2.0 * t - 1.0)], axis=-1)


def legendre_onb(t, length, order):
    """L2(E)-orthonormal Legendre basis of P_order(E); shape (..., order + 1)."""
    t = np.asarray(t, dtype=float)
    length = np.asarray(length, dtype=float)
    s = 2.0 * t - 1.0
    cols = [np.polynomial.legendre.legval(s, np.eye(order + 1)[j]) * np.sqrt((2 * j + 1) / length)
            for j in range(order + 1)]
    return np.stack(np.broadcast_arrays(*cols), axis=-1)


def _reference_functions(family, xhat):
    """Reference-cell spanning functions; values (..., nref, 2), divergences (nref,)."""
    x, y = xhat[..., 0], xhat[..., 1]
    one, zero = np.ones_like(x), np.zeros_like(x)
    if family is Family.RT1:
        vals = [(one, zero), (zero, one), (x, y)]
        div = np.array([0.0, 0.0, 2.0])
    else:
        vals = [(one, zero), (x, zero), (y, zero), (zero, one), (zero, x), (zero, y)]
        div = np.array([0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
    return np.stack([np.stack(v, axis=-1) for v in vals], axis=-2), div


@dataclass(frozen=True, eq=False)
class CellMaps:
    """Affine maps x = v0 + J xhat for every cell."""

    origin: np.ndarray   # (nc, 2)
    jac: np.ndarray      # (nc, 2, 2)
    det: np.ndarray      # (nc,)
    jac_inv_t: np.ndarray

    @classmethod
    def of(cls, mesh):
        v = mesh.vertices[mesh.cells]
        jac = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        if np.any(det <= 0):
            raise ValueError("degenerate or clockwise cell")
        inv = np.linalg.inv(jac)
        return cls(v[:, 0], jac, det, np.transpose(inv, (0, 2, 1)))

    def to_physical(self, xhat):
        """xhat (nq, 2) or (nc, nq, 2) -> (nc, nq, 2)."""
        if xhat.ndim == 2:
            return self.origin[:, None, :] + np.einsum("cij,qj->cqi", self.jac, xhat)
        return self.origin[:, None, :] + np.einsum("cij,cqj->cqi", self.jac, xhat)

    def to_reference(self, x, cells):
        """Physical points x (n, 2) in the given cells -> reference coords."""
        inv = np.transpose(self.jac_inv_t[cells], (0, 2, 1))
        return np.einsum("nij,nj->ni", inv, x - self.origin[cells])


def reference_edge_points(mesh, t):
    """Reference coordinates of global edge parameter ``t`` on each local edge.

    Returns (nc, 3, nq, 2); parameter 0 sits at the lower global vertex id.
    """
    t = np.asarray(t, dtype=float)
    cells = mesh.cells
    out = np.empty((mesh.n_cells, 3, len(t), 2))
    for i in range(3):
        a, b = (i + 1) % 3, (i + 2) % 3
        forward = cells[:, a] < cells[:, b]
        start = np.where(forward[:, None], REF_VERTICES[a], REF_VERTICES[b])
        end = np.where(forward[:, None], REF_VERTICES[b], REF_VERTICES[a])
        out[:, i] = start[:, None, :] + t[None, :, None] * (end - start)[:, None, :]
    return out


@dataclass(frozen=True, eq=False)
class LocalBasis:
    """Piola-mapped flux shape functions dual to the global edge DOFs.

    Physical function j on cell c is ``sum_k coef[c, k, j] * J psi_k / det J``
    where ``psi_k`` spans the reference element.
    """

    family: Family
    maps: CellMaps
    coef: np.ndarray       # (nc, nref, nloc)
    div: np.ndarray        # (nc, nloc), constant per cell

    def values(self, xhat):
        """Shape-function values at reference points.

        ``xhat`` is (nq, 2) (same points on every cell) or (nc, nq, 2).
        Returns (nc, nq, nloc, 2).
        """
        psi, _ = _reference_functions(self.family, xhat)
        if xhat.ndim == 2:
            mapped = np.einsum("cij,qkj->cqki", self.maps.jac, psi)
        else:
            mapped = np.einsum("cij,cqkj->cqki", self.maps.jac, psi)
        mapped /= self.maps.det[:, None, None, None]
        return np.einsum("cqki,ckj->cqji", mapped, self.coef)


def local_flux_basis(mesh, family):
    family = Family(family)
    maps = CellMaps.of(mesh)
    rule = edge_rule(ASSEMBLY_DEGREE)
    npe = family.dofs_per_edge
    ref_pts = reference_edge_points(mesh, rule.points)
    normals = mesh.edge_normals[mesh.cell_edges]           # (nc, 3, 2)
    lengths = mesh.edge_lengths[mesh.cell_edges]           # (nc, 3)
    nref = 3 if family is Family.RT1 else 6
    moments = np.empty((mesh.n_cells, 3 * npe, nref))
    for i in range(3):
        psi, _ = _reference_functions(family, ref_pts[:, i])     # (nc, nq, nref, 2)
        phi = np.einsum("cij,cqkj->cqki", maps.jac, psi) / maps.det[:, None, None, None]
        vn = np.einsum("cqki,ci->cqk", phi, normals[:, i])
        q = edge_moment_basis(family, rule.points[None, :], lengths[:, i][:, None])   # (nc, nq, npe)
        moments[:, i * npe:(i + 1) * npe] = np.einsum(
            "q,c,cqk,cqj->cjk", rule.weights, lengths[:, i], vn, q)
    coef = np.linalg.inv(moments)                          # (nc, nref, nloc)
    _, div_ref = _reference_functions(family, np.zeros((1, 2)))
    div = np.einsum("k,ckj->cj", div_ref, coef) / maps.det[:, None]
    return LocalBasis(family, maps, coef, div)


@dataclass(frozen=True, eq=False)
class DofMap:
    family: Family
    mesh: object
    edge_dofs: np.ndarray    # (ne, dofs_per_edge)
    cell_dofs: np.ndarray    # (nc, 3 * dofs_per_edge), ordered by local edge then moment
    cell_signs: np.ndarray   # (nc, 3): +1 if the global normal is outward
    constrained: np.ndarray  # (n_flux,) bool, Neumann DOFs

    @property
    def n_flux(self):
        return self.edge_dofs.size

    @property
    def n_pressure(self):
        return self.mesh.n_cells

    @property
    def n_total(self):
        return self.n_flux + self.n_pressure


def build_dofmap(mesh, family):
    family = Family(family)
    npe = family.dofs_per_edge
    edge_dofs = np.arange(mesh.n_edges * npe).reshape(mesh.n_edges, npe)
    cell_dofs = edge_dofs[mesh.cell_edges].reshape(mesh.n_cells, 3 * npe)
    constrained = np.zeros(edge_dofs.size, dtype=bool)
    constrained[edge_dofs[mesh.edge_tags == EdgeTag.NEUMANN].ravel()] = True
    return DofMap(family, mesh, edge_dofs, cell_dofs, mesh.outward_signs, constrained)


def interpolate_flux(mesh, dofmap, u, degree=8):
    """Canonical interpolant: the edge moments of ``u(x, y) -> (..., 2)``.

    ``u`` is evaluated at interior edge quadrature points only.
    """
    rule = edge_rule(degree)
    p0 = mesh.vertices[mesh.edges[:, 0]]
    p1 = mesh.vertices[mesh.edges[:, 1]]
    pts = p0[:, None, :] + rule.points[None, :, None] * (p1 - p0)[:, None, :]
    un = np.einsum("eqi,ei->eq", u(pts[..., 0], pts[..., 1]), mesh.edge_normals)
    L = mesh.edge_lengths
    q = edge_moment_basis(dofmap.family, rule.points[None, :], L[:, None])
    vals = np.einsum("q,e,eq,eqj->ej", rule.weights, L, un, q)
    out = np.empty(dofmap.n_flux)
    out[dofmap.edge_dofs.ravel()] = vals.ravel()
    return out


# --- P2 Lagrange ----------------------------------------------------------

def barycentric(xhat):
    x, y = xhat[..., 0], xhat[..., 1]
    return np.stack([1.0 - x - y, x, y], axis=-1)


_REF_BARY_GRAD = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_MID_PAIRS = ((1, 2), (2, 0), (0, 1))


def p2_values(xhat):
    """Lagrange P2 values, (..., 6): vertices 0..2 then midpoints of local edges 0..2."""
    lam = barycentric(xhat)
    cols = [lam[..., i] * (2.0 * lam[..., i] - 1.0) for i in range(3)]
    cols += [4.0 * lam[..., i] * lam[..., j] for i, j in _MID_PAIRS]
    return np.stack(cols, axis=-1)


def p2_gradients(maps, xhat):
    """Physical gradients of the P2 basis at reference points (nq, 2) -> (nc, nq, 6, 2)."""
    lam = barycentric(xhat)                                      # (nq, 3)
    glam = np.einsum("cij,kj->cki", maps.jac_inv_t, _REF_BARY_GRAD)   # (nc, 3, 2)
    grads = []
    for i in range(3):
        grads.append((4.0 * lam[:, i] - 1.0)[None, :, None] * glam[:, None, i, :])
    for i, j in _MID_PAIRS:
        grads.append(4.0 * (lam[:, i][None, :, None] * glam[:, None, j, :]
                            + lam[:, j][None, :, None] * glam[:, None, i, :]))
    return np.stack(grads, axis=2)


def p2_nodes(mesh):
    """Physical Lagrange nodes per cell, (nc, 6, 2)."""
    v = mesh.vertices[mesh.cells]
    mids = [(v[:, i] + v[:, j]) / 2.0 for i, j in _MID_PAIRS]
    return np.concatenate([v, np.stack(mids, axis=1)], axis=1)
