"""Doerfler marking and the solve-estimate-mark-refine loop."""
import logging
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from typing import Optional

import numpy as np

from .estimator import effectivity, estimate
from .mesh import build_structured, refine
from .postprocess import postprocess
from .problems import PROBLEM_IDS, error_norms, get_problem
from .spaces import Family, build_dofmap
from .system import SolverError, assemble, solve

log = logging.getLogger(__name__)

ENDPOINT_RADIUS = 0.1
# Share of an edge's squared indicator given to each adjacent cell.
EDGE_SHARE = 0.5


class Mode(str, Enum):
    UNIFORM = "uniform"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class AdaptConfig:
    problem: str = "manufactured"
    family: Family = Family.BDM1
    mode: Mode = Mode.ADAPTIVE
    theta: float = 0.5
    n: int = 8
    max_iterations: int = 5
    max_dofs: int = 200_000
    alpha: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.problem not in PROBLEM_IDS:
            raise ValueError(f"unknown problem id {self.problem!r}")
        if not (0.0 < self.theta <= 1.0):
            raise ValueError(f"theta must lie in (0, 1], got {self.theta!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.max_dofs < 1:
            raise ValueError("max_dofs must be positive")
        if self.n <= 0 or self.n % 4:
            raise ValueError(f"n must be a positive multiple of 4, got {self.n!r}")
        if self.alpha is not None and not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha!r}")

    def resolved(self):
        """Copy with ``alpha`` filled in from the problem default."""
        if self.alpha is not None:
            return self
        return replace(self, alpha=get_problem(self.problem).data.alpha)

    def to_dict(self):
        d = asdict(self)
        d["family"] = self.family.value
        d["mode"] = self.mode.value
        return d


@dataclass(frozen=True)
class StudyRecord:
    iteration: int
    n_cells: int
    n_dofs: int
    eta_total: float
    osc_total: float
    flux_error: Optional[float]
    postpressure_error: Optional[float]
    tnorm_error: Optional[float]
    effectivity: Optional[float]
    n_marked: int
    endpoint_fraction: float

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]


def cell_indicators(report, mesh):
    """eta_T^2 plus half of each adjacent edge's eta_E^2."""
    edge_sq = report.eta_edge ** 2
    return report.eta_cell ** 2 + EDGE_SHARE * edge_sq[mesh.cell_edges].sum(axis=1)


def doerfler(indicators, theta):
    """Minimal set of cells holding a theta-fraction of sum(indicators).

    Cells are taken in order of decreasing indicator, ties by cell id.
    """
    ind = np.asarray(indicators, dtype=float)
    if ind.size == 0 or not np.any(ind > 0):
        return np.zeros(0, dtype=np.int64)
    if theta >= 1.0:
        return np.flatnonzero(ind > 0)
    order = np.lexsort((np.arange(ind.size), -ind))
    csum = np.cumsum(ind[order])
    k = int(np.searchsorted(csum, theta * csum[-1], side="left")) + 1
    return np.sort(order[:k])


def mark(report, mesh, theta):
    return doerfler(cell_indicators(report, mesh), theta)


def endpoint_fraction(mesh, marked, endpoints, radius=ENDPOINT_RADIUS):
    if len(marked) == 0:
        return 0.0
    c = mesh.centroids[np.asarray(marked)]
    d = np.min(np.linalg.norm(c[:, None, :] - endpoints[None, :, :], axis=2), axis=1)
    return float(np.mean(d < radius))


def _n_dofs(mesh, family):
    return mesh.n_edges * family.dofs_per_edge + mesh.n_cells


def run_study(config, on_iteration=None):
    """Run the loop and return one :class:`StudyRecord` per solve.

    Uniform mode bisects every cell twice per iteration, so the mesh size
    halves and the cell count quadruples. ``on_iteration`` is called as
    ``on_iteration(record, mesh, solution, report)`` after each solve.
    """
    problem = get_problem(config.problem, config.alpha)
    mesh = build_structured(config.n, problem.geometry)
    endpoints = problem.geometry.fault_endpoints
    records = []
    for it in range(config.max_iterations):
        if it > 0 and _n_dofs(mesh, config.family) > config.max_dofs:
            log.info("stopping: next mesh has %d DOFs > %d", _n_dofs(mesh, config.family), config.max_dofs)
            break
        dofmap = build_dofmap(mesh, config.family)
        try:
            solution = solve(assemble(mesh, dofmap, problem.data))
        except SolverError as exc:
            raise SolverError(f"iteration {it}: {exc}") from exc
        post = postprocess(solution)
        report = estimate(solution, post)
        if config.mode is Mode.UNIFORM:
            marked = np.arange(mesh.n_cells)
        else:
            marked = mark(report, mesh, config.theta)
        if problem.has_exact:
            err = error_norms(solution, post, problem)
            flux, pp, tn = err.flux_l2, err.postpressure_l2, err.tnorm
            eff = effectivity(report, flux)
        else:
            flux = pp = tn = eff = None
        rec = StudyRecord(it, mesh.n_cells, dofmap.n_total, report.eta_total, report.osc_total,
                          flux, pp, tn, eff, int(len(marked)),
                          endpoint_fraction(mesh, marked, endpoints))
        records.append(rec)
        log.info("iter %d: cells=%d dofs=%d eta=%.4e marked=%d", it, rec.n_cells, rec.n_dofs,
                 rec.eta_total, rec.n_marked)
        if on_iteration is not None:
            on_iteration(rec, mesh, solution, report)
        if it == config.max_iterations - 1:
            break
        if config.mode is Mode.UNIFORM:
            mesh = refine(mesh, marked)
            mesh = refine(mesh, np.arange(mesh.n_cells))
        else:
            mesh = refine(mesh, marked)
    return records
