"""Adaptive mixed finite elements for Darcy flow across a Robin-type fault."""
from .adapt import AdaptConfig, Mode, StudyRecord, mark, run_study
from .estimator import EstimatorReport, effectivity, estimate
from .mesh import EdgeTag, Mesh, ProblemGeometry, build_structured, refine
from .postprocess import PostPressure, postprocess
from .problems import ProblemData, ProblemDefinition, error_norms, fault_flow, get_problem, linear_fault, manufactured
from .spaces import DofMap, Family, build_dofmap, local_flux_basis
from .system import DiscreteSolution, LinearSystem, assemble, solve, solve_problem

__version__ = "0.1.0"
