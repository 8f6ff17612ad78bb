"""Cellwise P2 pressure reconstruction from (u_h, p_h).

On each cell T find p* in P2(T) with

    (grad p*, grad q)_T = -(u_h, grad q)_T   for all q in P2(T)
    (p*, 1)_T           = (p_h, 1)_T

solved as a 7x7 bordered system (6 Lagrange coefficients + multiplier).
"""
import logging
from dataclasses import dataclass

import numpy as np

from .quadrature import ASSEMBLY_DEGREE, triangle_rule
from .spaces import CellMaps, p2_gradients, p2_values

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PostPressure:
    """Lagrange P2 coefficients per cell, (nc, 6)."""

    coef: np.ndarray
    mesh: object
    maps: CellMaps
    residual: float
    condition: float

    def values(self, xhat):
        """Values at reference points shared by all cells, (nc, nq)."""
        return self.coef @ p2_values(xhat).T

    def values_in(self, cells, xhat):
        """Values at per-cell reference points xhat (n, nq, 2) -> (n, nq)."""
        return np.einsum("nqk,nk->nq", p2_values(xhat), self.coef[cells])

    def gradients(self, xhat):
        """(nc, nq, 2)."""
        return np.einsum("cqki,ck->cqi", p2_gradients(self.maps, xhat), self.coef)

    def cell_means(self):
        rule = triangle_rule(2)
        return 2.0 * (self.values(rule.points) @ rule.weights)


def postprocess(solution):
    mesh = solution.mesh
    maps = solution.basis.maps
    rule = triangle_rule(ASSEMBLY_DEGREE)
    w = rule.weights[None, :] * maps.det[:, None]                  # (nc, nq)
    grads = p2_gradients(maps, rule.points)                          # (nc, nq, 6, 2)
    stiff = np.einsum("cq,cqji,cqki->cjk", w, grads, grads)
    uh = solution.flux_values(rule.points)                           # (nc, nq, 2)
    load = -np.einsum("cq,cqi,cqji->cj", w, uh, grads)
    phi = p2_values(rule.points)                                     # (nq, 6)
    ints = w @ phi                                                   # (nc, 6)
    area = maps.det / 2.0

    nc = mesh.n_cells
    M = np.zeros((nc, 7, 7))
    M[:, :6, :6] = stiff
    M[:, :6, 6] = ints
    M[:, 6, :6] = ints
    rhs = np.empty((nc, 7))
    rhs[:, :6] = load
    rhs[:, 6] = area * solution.pressure
    sol = np.linalg.solve(M, rhs[..., None])[..., 0]
    resid = np.einsum("cij,cj->ci", M, sol) - rhs
    scale = np.maximum(np.abs(rhs).max(axis=1), 1e-300)
    residual = float(np.max(np.abs(resid).max(axis=1) / scale)) if nc else 0.0
    cond = float(np.max(np.linalg.cond(M))) if nc else 0.0
    log.debug("post-processing: max local residual %.2e, max condition %.2e", residual, cond)
    return PostPressure(sol[:, :6], mesh, maps, residual, cond)
