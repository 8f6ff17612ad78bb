"""Conforming triangle meshes of the unit square with a vertical fault.

Cells are stored as vertex triples ``(a, b, c)`` in counterclockwise order
where ``(a, b)`` is the refinement edge and ``c`` the newest vertex. Local
edge ``i`` of a cell is the edge opposite local vertex ``i``, so the
refinement edge is always local edge 2.
"""
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy.spatial import cKDTree

COORD_TOL = 1e-12

# Fault segment {1/2} x [1/4, 3/4].
FAULT_X = 0.5
FAULT_Y0 = 0.25
FAULT_Y1 = 0.75
FAULT_ENDPOINTS = np.array([[FAULT_X, FAULT_Y0], [FAULT_X, FAULT_Y1]])


class EdgeTag(IntEnum):
    INTERIOR = 0
    GAMMA = 1
    DIRICHLET = 2
    NEUMANN = 3


TAG_NAMES = {EdgeTag.INTERIOR: "int", EdgeTag.GAMMA: "gamma",
             EdgeTag.DIRICHLET: "dir", EdgeTag.NEUMANN: "neu"}


class DegenerateCellError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemGeometry:
    """Boundary condition layout and the extent of the vertical fault.

    ``neumann_sides`` names the sides (``left``, ``right``, ``bottom``,
    ``top``) carrying flux data; all other sides are Dirichlet. The fault is
    the segment {1/2} x [fault_y0, fault_y1].
    """

    neumann_sides: frozenset = frozenset()
    fault_y0: float = FAULT_Y0
    fault_y1: float = FAULT_Y1

    @classmethod
    def all_dirichlet(cls):
        return cls(frozenset())

    @classmethod
    def fault_flow(cls):
        return cls(frozenset({"top", "bottom"}))

    @classmethod
    def through_fault(cls):
        """All-Dirichlet square cut in two by a fault spanning x = 1/2."""
        return cls(frozenset(), 0.0, 1.0)

    @property
    def fault_endpoints(self):
        return np.array([[FAULT_X, self.fault_y0], [FAULT_X, self.fault_y1]])


def _boundary_side(p, q):
    for name, axis, value in (("left", 0, 0.0), ("right", 0, 1.0),
                              ("bottom", 1, 0.0), ("top", 1, 1.0)):
        if abs(p[axis] - value) < COORD_TOL and abs(q[axis] - value) < COORD_TOL:
            return name
    return None


def _on_fault(p, q, geometry):
    return (abs(p[0] - FAULT_X) < COORD_TOL and abs(q[0] - FAULT_X) < COORD_TOL
            and min(p[1], q[1]) > geometry.fault_y0 - COORD_TOL
            and max(p[1], q[1]) < geometry.fault_y1 + COORD_TOL)


def _topology(cells):
    """Edges (sorted vertex pairs), cell->edge and edge->cell maps."""
    nc = len(cells)
    local = np.stack([cells[:, [1, 2]], cells[:, [2, 0]], cells[:, [0, 1]]], axis=1)
    flat = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse = np.unique(flat, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    cell_edges = inverse.reshape(nc, 3)
    edge_cells = np.full((len(edges), 2), -1, dtype=np.int64)
    owners = np.repeat(np.arange(nc), 3)
    order = np.argsort(inverse, kind="stable")
    sorted_edges = inverse[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = sorted_edges[1:] != sorted_edges[:-1]
    edge_cells[sorted_edges[first], 0] = owners[order[first]]
    second = ~first
    if np.any(second[1:] & second[:-1]):
        raise ValueError("non-manifold mesh: an edge is shared by more than two cells")
    edge_cells[sorted_edges[second], 1] = owners[order[second]]
    return edges, cell_edges, edge_cells


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    edge_tags: np.ndarray
    cell_edges: np.ndarray
    edge_cells: np.ndarray
    generation: int = 0
    parent: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("vertices", "cells", "edges", "edge_tags", "cell_edges", "edge_cells"):
            getattr(self, name).setflags(write=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return len(self.edges)

    def __repr__(self):
        return (f"Mesh(nv={self.n_vertices}, nc={self.n_cells}, ne={self.n_edges}, "
                f"generation={self.generation})")

    @classmethod
    def from_cells(cls, vertices, cells, edge_tags_fn, generation=0, parent=None):
        vertices = np.asarray(vertices, dtype=float)
        cells = np.asarray(cells, dtype=np.int64)
        edges, cell_edges, edge_cells = _topology(cells)
        tags = np.asarray(edge_tags_fn(edges, edge_cells), dtype=np.int8)
        mesh = cls(vertices, cells, edges, tags, cell_edges, edge_cells, generation, parent)
        signed_area(mesh)
        return mesh

    # --- geometry -------------------------------------------------------

    @property
    def areas(self):
        return signed_area(self)

    @property
    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def diameters(self):
        return self.edge_lengths[self.cell_edges].max(axis=1)

    @property
    def centroids(self):
        return self.vertices[self.cells].mean(axis=1)

    @property
    def edge_midpoints(self):
        return self.vertices[self.edges].mean(axis=1)

    @property
    def edge_normals(self):
        """Unit normal per edge with a fixed global orientation.

        The normal has positive x-component, or points in +y for horizontal
        edges. On the vertical fault it is (1, 0), pointing from the left
        subdomain {x < 1/2} into the right one.
        """
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        n = np.column_stack([d[:, 1], -d[:, 0]]) / np.hypot(d[:, 0], d[:, 1])[:, None]
        flip = (n[:, 0] < -COORD_TOL) | ((np.abs(n[:, 0]) <= COORD_TOL) & (n[:, 1] < 0))
        n[flip] *= -1.0
        return n

    @property
    def outward_signs(self):
        """(nc, 3) array: +1 where the global edge normal is outward from the cell."""
        v = self.vertices
        c = self.cells
        normals = self.edge_normals[self.cell_edges]
        # Outward normal of local edge i (opposite vertex i) points away from vertex i.
        mids = np.stack([(v[c[:, 1]] + v[c[:, 2]]) / 2, (v[c[:, 2]] + v[c[:, 0]]) / 2,
                         (v[c[:, 0]] + v[c[:, 1]]) / 2], axis=1)
        away = mids - v[c]
        return np.where(np.einsum("cij,cij->ci", normals, away) > 0, 1.0, -1.0)

    def cell_min_angles(self):
        v = self.vertices[self.cells]
        angles = []
        for i in range(3):
            a = v[:, (i + 1) % 3] - v[:, i]
            b = v[:, (i + 2) % 3] - v[:, i]
            cosang = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            angles.append(np.arccos(np.clip(cosang, -1.0, 1.0)))
        return np.min(angles, axis=0)

    def is_conforming(self):
        """Every interior edge has two cells, every boundary edge one.

        A hanging node leaves an edge with a single neighbour and a mesh
        vertex strictly inside it; such vertices are searched for with a
        k-d tree around each single-neighbour edge.
        """
        boundary = (self.edge_tags == EdgeTag.DIRICHLET) | (self.edge_tags == EdgeTag.NEUMANN)
        single = self.edge_cells[:, 1] < 0
        if np.any(boundary != single):
            return False
        ids = np.flatnonzero(single)
        p = self.vertices[self.edges[ids, 0]]
        q = self.vertices[self.edges[ids, 1]]
        tree = cKDTree(self.vertices)
        hits = tree.query_ball_point((p + q) / 2, self.edge_lengths[ids] / 2 * (1 + 1e-9))
        for k, cand in enumerate(hits):
            d = q[k] - p[k]
            for v in cand:
                w = self.vertices[v] - p[k]
                t = w @ d / (d @ d)
                cross = abs(d[0] * w[1] - d[1] * w[0])
                if COORD_TOL < t < 1 - COORD_TOL and cross < COORD_TOL * (d @ d):
                    return False
        return True

    # --- refinement -----------------------------------------------------

    def refine(self, marked):
        return refine(self, marked)

    def dump(self, path):
        write_mesh(self, path)


def signed_area(mesh):
    v = mesh.vertices[mesh.cells]
    a = 0.5 * ((v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
               - (v[:, 2, 0] - v[:, 0, 0]) * (v[:, 1, 1] - v[:, 0, 1]))
    if np.any(a <= 0):
        bad = np.flatnonzero(a <= 0)
        raise DegenerateCellError(f"cells with non-positive area: {bad[:10].tolist()}")
    return a


def _geometric_tags(vertices, geometry):
    def tags(edges, edge_cells):
        out = np.empty(len(edges), dtype=np.int8)
        for k, (i, j) in enumerate(edges):
            p, q = vertices[i], vertices[j]
            if edge_cells[k, 1] < 0:
                side = _boundary_side(p, q)
                out[k] = EdgeTag.NEUMANN if side in geometry.neumann_sides else EdgeTag.DIRICHLET
            elif _on_fault(p, q, geometry):
                out[k] = EdgeTag.GAMMA
            else:
                out[k] = EdgeTag.INTERIOR
        return out
    return tags


def mesh_from_arrays(vertices, cells, geometry=None):
    """Mesh from raw arrays; tags follow from the geometry.

    Each cell row is ``(a, b, c)`` counterclockwise with ``(a, b)`` the
    refinement edge.
    """
    if geometry is None:
        geometry = ProblemGeometry.all_dirichlet()
    vertices = np.asarray(vertices, dtype=float)
    return Mesh.from_cells(vertices, np.asarray(cells), _geometric_tags(vertices, geometry))


def build_structured(n, geometry=None):
    """n x n squares, each cut along the anti-diagonal into two right triangles.

    ``n`` must be a multiple of 4 so that x = 1/2 and y = 1/4, 3/4 are mesh
    lines. The hypotenuse is the initial refinement edge of each triangle.
    """
    if geometry is None:
        geometry = ProblemGeometry.all_dirichlet()
    if not isinstance(n, (int, np.integer)) or n <= 0 or n % 4:
        raise ValueError(f"n must be a positive multiple of 4, got {n!r}")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    I, J = I.ravel(), J.ravel()
    v00, v10, v01, v11 = vid(I, J), vid(I + 1, J), vid(I, J + 1), vid(I + 1, J + 1)
    lower = np.column_stack([v10, v01, v00])
    upper = np.column_stack([v01, v10, v11])
    cells = np.empty((2 * n * n, 3), dtype=np.int64)
    cells[0::2] = lower
    cells[1::2] = upper
    return Mesh.from_cells(vertices, cells, _geometric_tags(vertices, geometry))


def _bisect(cell, midpoint, out, parent_id, parents):
    a, b, c = cell
    key = (a, b) if a < b else (b, a)
    m = midpoint.get(key)
    if m is None:
        out.append(cell)
        parents.append(parent_id)
        return
    _bisect((c, a, m), midpoint, out, parent_id, parents)
    _bisect((b, c, m), midpoint, out, parent_id, parents)


def refine(mesh, marked):
    """Newest-vertex bisection of the marked cells plus conforming closure.

    Returns a new mesh; the input is left untouched. Every marked cell is
    bisected at least once. Boundary and fault tags pass to the halves of a
    split edge.
    """
    marked = np.unique(np.asarray(list(marked) if not isinstance(marked, np.ndarray) else marked,
                                  dtype=np.int64))
    if marked.size and (marked.min() < 0 or marked.max() >= mesh.n_cells):
        raise IndexError("marked cell id out of range")
    if marked.size == 0:
        return Mesh(mesh.vertices.copy(), mesh.cells.copy(), mesh.edges.copy(),
                    mesh.edge_tags.copy(), mesh.cell_edges.copy(), mesh.edge_cells.copy(),
                    mesh.generation, np.arange(mesh.n_cells))

    ref_edge = mesh.cell_edges[:, 2]
    edge_marked = np.zeros(mesh.n_edges, dtype=bool)
    edge_marked[ref_edge[marked]] = True
    # closure: a cell with any marked edge must also split its refinement edge
    while True:
        touched = edge_marked[mesh.cell_edges].any(axis=1)
        new = touched & ~edge_marked[ref_edge]
        if not new.any():
            break
        edge_marked[ref_edge[new]] = True

    split = np.flatnonzero(edge_marked)
    nv = mesh.n_vertices
    mids = mesh.vertices[mesh.edges[split]].mean(axis=1)
    vertices = np.vstack([mesh.vertices, mids])
    new_ids = nv + np.arange(len(split))
    midpoint = {(int(i), int(j)): int(m) for (i, j), m in zip(mesh.edges[split], new_ids)}

    out, parents = [], []
    cells = mesh.cells.tolist()
    for cid, cell in enumerate(cells):
        _bisect(tuple(cell), midpoint, out, cid, parents)
    cells = np.array(out, dtype=np.int64)

    old_tag = {(int(i), int(j)): int(t) for (i, j), t in zip(mesh.edges, mesh.edge_tags)}
    half_parent = {}
    for (i, j), m in midpoint.items():
        t = old_tag[(i, j)]
        half_parent[(min(i, m), max(i, m))] = t
        half_parent[(min(j, m), max(j, m))] = t

    def tags(edges, edge_cells):
        res = np.empty(len(edges), dtype=np.int8)
        for k, (i, j) in enumerate(edges.tolist()):
            t = old_tag.get((i, j))
            if t is None:
                t = half_parent.get((i, j), EdgeTag.INTERIOR)
            res[k] = t
        return res

    return Mesh.from_cells(vertices, cells, tags, mesh.generation + 1, np.array(parents))


def uniform_refine(mesh, times=1):
    for _ in range(times):
        mesh = refine(mesh, np.arange(mesh.n_cells))
    return mesh


def gamma_edges(mesh):
    return np.flatnonzero(mesh.edge_tags == EdgeTag.GAMMA)


def write_mesh(mesh, path):
    """Text dump: ``mesh nv nc ne`` then ``v``, ``c`` and ``e`` lines."""
    with open(path, "w") as fh:
        fh.write(f"mesh {mesh.n_vertices} {mesh.n_cells} {mesh.n_edges}\n")
        for x, y in mesh.vertices:
            fh.write(f"v {x:.17g} {y:.17g}\n")
        for i, j, k in mesh.cells:
            fh.write(f"c {i} {j} {k}\n")
        for (i, j), t in zip(mesh.edges, mesh.edge_tags):
            fh.write(f"e {i} {j} {TAG_NAMES[EdgeTag(t)]}\n")


def read_mesh(path):
    """Inverse of :func:`write_mesh`; cell vertex order is preserved."""
    names = {v: k for k, v in TAG_NAMES.items()}
    verts, cells, etags = [], [], {}
    with open(path) as fh:
        header = fh.readline().split()
        if not header or header[0] != "mesh":
            raise ValueError("not a mesh dump")
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append((float(parts[1]), float(parts[2])))
            elif parts[0] == "c":
                cells.append(tuple(int(p) for p in parts[1:4]))
            elif parts[0] == "e":
                etags[(int(parts[1]), int(parts[2]))] = names[parts[3]]

    def tags(edges, edge_cells):
        return np.array([etags[(int(i), int(j))] for i, j in edges], dtype=np.int8)

    return Mesh.from_cells(np.array(verts), np.array(cells), tags)
