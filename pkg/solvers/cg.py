"""
Jacobi-preconditioned conjugate gradients and the Poisson solve driver.
"""

import logging
import math
from typing import Dict, List, Optional

import numpy as np
import scipy.sparse as sp

from core.errors import (ConfigurationError, ConvergenceError, NotPositiveDefiniteError,
                         PreconditionerError, SolverError)
from core.mesh import TriMesh
from solvers.assembly import FeFunction, Field, SparseSpd, assemble_load, assemble_stiffness

logger = logging.getLogger(__name__)

DEFAULT_REL_TOL = 1e-12
GALERKIN_FACTOR = 10.0


def default_max_iter(n: int) -> int:
    return int(20 * math.sqrt(n)) + 1000


class SolverConfig:
    """CG settings; max_iter None means 20*sqrt(n) + 1000"""

    def __init__(self, rel_tol: float = DEFAULT_REL_TOL, max_iter: Optional[int] = None,
                 record_energy: bool = True):
        if not isinstance(rel_tol, (int, float)) or isinstance(rel_tol, bool) or not 0.0 < rel_tol < 1.0:
            raise ConfigurationError(f"rel_tol must lie in (0, 1), got {rel_tol!r}", path="$.solver.rel_tol")
        if max_iter is not None and (isinstance(max_iter, bool) or not isinstance(max_iter, int)
                                     or max_iter < 1):
            raise ConfigurationError(f"max_iter must be a positive integer, got {max_iter!r}",
                                     path="$.solver.max_iter")
        self.rel_tol = float(rel_tol)
        self.max_iter = max_iter
        self.record_energy = record_energy

    def max_iter_for(self, n: int) -> int:
        return self.max_iter if self.max_iter is not None else default_max_iter(n)

    def to_dict(self) -> Dict:
        data: Dict = {"rel_tol": self.rel_tol}
        if self.max_iter is not None:
            data["max_iter"] = self.max_iter
        return data

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "SolverConfig":
        data = data or {}
        if not isinstance(data, dict):
            raise ConfigurationError("solver must be an object", path="$.solver")
        unknown = set(data) - {"rel_tol", "max_iter"}
        if unknown:
            raise ConfigurationError(f"unknown keys {sorted(unknown)}", path="$.solver")
        return cls(rel_tol=data.get("rel_tol", DEFAULT_REL_TOL), max_iter=data.get("max_iter"))


class CgResult:
    """Outcome of a CG solve"""

    def __init__(self, x: np.ndarray, iterations: int, converged: bool, residual_norm: float,
                 rhs_norm: float, recursive_residual: float, energy_history: List[float],
                 replacements: int = 0):
        self.x = x
        self.iterations = iterations
        self.converged = converged
        self.residual_norm = residual_norm
        self.rhs_norm = rhs_norm
        self.recursive_residual = recursive_residual
        self.energy_history = energy_history
        self.replacements = replacements

    @property
    def relative_residual(self) -> float:
        """True ||b - Ax|| / ||b||"""
        return self.residual_norm / self.rhs_norm if self.rhs_norm > 0.0 else 0.0

    def __iter__(self):
        return iter((self.x, self.iterations, self.residual_norm))

    def to_dict(self) -> Dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "residual_norm": self.residual_norm,
            "relative_residual": self.relative_residual,
            "recursive_residual": self.recursive_residual,
        }


def _as_spd(A) -> SparseSpd:
    if isinstance(A, SparseSpd):
        return A
    if sp.issparse(A):
        return SparseSpd(sp.csr_matrix(A))
    return SparseSpd.from_dense(A)


def cg_solve(A, b, rel_tol: float = DEFAULT_REL_TOL, max_iter: Optional[int] = None,
             x0: Optional[np.ndarray] = None, record_energy: bool = True) -> CgResult:
    """
    Solve A x = b for symmetric positive-definite A with Jacobi-preconditioned CG.

    Whenever the recursively updated residual satisfies ||r|| <= rel_tol ||b||
    the true residual b - Ax is recomputed. Convergence is reported only when
    the true residual meets the tolerance; otherwise r is replaced by it and
    the iteration restarts, until max_iter. energy_history tracks
    x^T A x - 2 b^T x, which is non-increasing in exact arithmetic.

    Non-positive curvature is detected only along the directions b generates:
    an indefinite A can still be solved when b avoids its negative modes.
    """
    A = _as_spd(A)
    b = np.asarray(b, dtype=float).reshape(-1)
    n = A.dimension
    if len(b) != n:
        raise SolverError(f"right-hand side has length {len(b)}, matrix dimension is {n}")
    if not 0.0 < rel_tol < 1.0:
        raise ConfigurationError(f"rel_tol must lie in (0, 1), got {rel_tol!r}", path="rel_tol")
    max_iter = default_max_iter(n) if max_iter is None else int(max_iter)

    diagonal = A.diagonal()
    bad = np.flatnonzero(~(diagonal > 0.0))
    if len(bad):
        raise PreconditionerError(int(bad[0]), float(diagonal[bad[0]]))
    inverse_diagonal = 1.0 / diagonal

    rhs_norm = float(np.linalg.norm(b))
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if rhs_norm == 0.0 and x0 is None:
        return CgResult(x, 0, True, 0.0, 0.0, 0.0, [0.0] if record_energy else [])

    target = rel_tol * rhs_norm
    r = b - A.matvec(x)
    z = inverse_diagonal * r
    p = z.copy()
    rz = float(r @ z)
    energy: List[float] = [float(-(b @ x) - (r @ x))] if record_energy else []
    replaced = 0
    converged = float(np.linalg.norm(r)) <= target
    iteration = 0

    while not converged and iteration < max_iter:
        Ap = A.matvec(p)
        curvature = float(p @ Ap)
        if curvature <= 0.0:
            raise NotPositiveDefiniteError(iteration, curvature)
        alpha = rz / curvature
        x += alpha * p
        r -= alpha * Ap
        iteration += 1
        if record_energy:
            energy.append(float(-(b @ x) - (r @ x)))

        if float(np.linalg.norm(r)) <= target:
            true_r = b - A.matvec(x)
            if float(np.linalg.norm(true_r)) <= target:
                converged = True
                break
            # residual replacement, then restart the search directions
            r = true_r
            replaced += 1
            z = inverse_diagonal * r
            p = z.copy()
            rz = float(r @ z)
            continue

        z = inverse_diagonal * r
        rz_next = float(r @ z)
        beta = rz_next / rz
        rz = rz_next
        p = z + beta * p

    recursive = float(np.linalg.norm(r))
    residual = float(np.linalg.norm(b - A.matvec(x)))
    if converged:
        logger.debug("CG converged in %d iterations (relative residual %.3e)",
                     iteration, residual / rhs_norm if rhs_norm else 0.0)
    else:
        logger.warning("CG stopped after %d iterations without converging (relative residual %.3e)",
                       iteration, residual / rhs_norm if rhs_norm else residual)
    return CgResult(x, iteration, converged, residual, rhs_norm, recursive, energy, replaced)


class PoissonSolution:
    """A discrete solution with its linear-algebra diagnostics"""

    def __init__(self, solution: FeFunction, stiffness: SparseSpd, load: np.ndarray,
                 cg: CgResult, galerkin_residual: float):
        self.solution = solution
        self.stiffness = stiffness
        self.load = load
        self.cg = cg
        self.galerkin_residual = galerkin_residual

    @property
    def load_norm(self) -> float:
        return float(np.linalg.norm(self.load))

    def to_dict(self) -> Dict:
        data = self.cg.to_dict()
        data["unknowns"] = self.stiffness.dimension
        data["galerkin_residual"] = self.galerkin_residual
        return data


def solve_poisson_system(mesh: TriMesh, f: Field, config: Optional[SolverConfig] = None,
                         quad_order: int = 2) -> PoissonSolution:
    """
    Assemble, solve and check -laplace(u) = f, u = 0 on the boundary.

    Raises ConvergenceError when CG hits its iteration cap and SolverError
    when the Galerkin residual exceeds GALERKIN_FACTOR * rel_tol * ||F||.
    """
    config = config or SolverConfig()
    stiffness = assemble_stiffness(mesh)
    load = assemble_load(mesh, f, quad_order)
    cg = cg_solve(stiffness, load, config.rel_tol, config.max_iter_for(stiffness.dimension),
                  record_energy=config.record_energy)
    if not cg.converged:
        raise ConvergenceError(cg.iterations, cg.relative_residual, config.rel_tol)

    # |(grad u_h, grad phi_i) - (f, phi_i)| for every interior basis function
    galerkin = float(np.abs(stiffness.matvec(cg.x) - load).max())
    bound = GALERKIN_FACTOR * config.rel_tol * float(np.linalg.norm(load))
    if galerkin > bound:
        raise SolverError(f"Galerkin residual {galerkin:.3e} exceeds {bound:.3e} at level {mesh.level}")

    solution = FeFunction.from_interior(mesh, stiffness.interior, cg.x)
    logger.info("solved level %d: %d unknowns, %d CG iterations", mesh.level, stiffness.dimension,
                cg.iterations)
    return PoissonSolution(solution, stiffness, load, cg, galerkin)


def solve_poisson(mesh: TriMesh, f: Field, config: Optional[SolverConfig] = None,
                  quad_order: int = 2) -> FeFunction:
    """Finite element solution of the Dirichlet Poisson problem"""
    return solve_poisson_system(mesh, f, config, quad_order).solution
