"""Implicit Euler for u_t − div(|∇u|^{p−2}∇u) = μ as a sequence of convex minimizations.

Each step minimizes

    J(v) = (h^n / 2dt) Σ_cells (v − u_prev)² + (1/p) Σ_faces |∇_h v|_ε^p h^n − Σ_cells v μ(cell)

over the interior cells, the boundary ring being held at its Dirichlet data.
∇_h is the face-normal difference quotient and |g|_ε = (g² + eps_reg²)^{1/2}.
The minimizer is found by Newton's method damped with an Armijo backtracking
line search on J.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import spsolve

from wolff_lab.errors import SolverFailure

from .grid import BoundaryCondition, GridField, InitialCondition, StepReport, boundary_mask, face_difference_matrix

log = logging.getLogger("lab")

ARMIJO = 1e-4
MIN_STEP = 2.0 ** -40
# Accepted multiple of tol once no step length decreases J.
STALL_FACTOR = 100.0


class PLaplaceEnergy:
    """Regularized discrete p-Dirichlet energy (1/p) Σ_faces |∇_h v|_ε^p h^n and its derivatives."""

    def __init__(self, domain, n, p, eps_reg):
        self.p = float(p)
        self.eps2 = float(eps_reg) ** 2
        self.weight = domain.cell_volume(n)
        self.D = face_difference_matrix(domain.cells_per_axis, n, domain.h)
        self.DT = self.D.T.tocsr()

    def _squares(self, v):
        g = self.D @ v
        return g, g * g + self.eps2

    def value(self, v) -> float:
        _, s = self._squares(v)
        return float(np.sum(s ** (0.5 * self.p))) * self.weight / self.p

    def flux(self, v) -> np.ndarray:
        """|∇_h v|_ε^{p−2} ∇_h v on every face."""
        g, s = self._squares(v)
        return s ** (0.5 * self.p - 1.0) * g

    def gradient(self, v) -> np.ndarray:
        return self.DT @ self.flux(v) * self.weight

    def hessian(self, v) -> sps.csr_matrix:
        g, s = self._squares(v)
        curvature = s ** (0.5 * self.p - 2.0) * ((self.p - 1.0) * g * g + self.eps2)
        return (self.DT @ sps.diags(curvature * self.weight) @ self.D).tocsr()


class StepProblem:
    """J and its derivatives for one step, restricted to the interior unknowns."""

    def __init__(self, energy, u_prev, masses, dt, interior):
        self.energy = energy
        self.u_prev = u_prev
        self.masses = masses
        self.mass_weight = energy.weight / dt
        self.interior = interior

    def objective(self, v) -> float:
        d = v - self.u_prev
        return (0.5 * self.mass_weight * float(d @ d) + self.energy.value(v) - float(self.masses @ v))

    def gradient(self, v) -> np.ndarray:
        grad = self.mass_weight * (v - self.u_prev) + self.energy.gradient(v) - self.masses
        return grad[self.interior]

    def hessian(self, v) -> sps.csc_matrix:
        H = self.energy.hessian(v)[self.interior][:, self.interior]
        return (H + self.mass_weight * sps.identity(H.shape[0], format="csr")).tocsc()


def _gradient_decreases(problem, trial, grad_norm, t) -> bool:
    """Acceptance test for a step whose change in J is below roundoff."""
    return float(np.linalg.norm(problem.gradient(trial))) <= (1.0 - 0.5 * t) * grad_norm


def step(u_prev, mu, params, domain, *, level=None, energy=None, masses=None):
    """One implicit Euler step from u_prev (cell array, boundary ring included).

    Returns the new cell array and its StepReport. Raises SolverFailure when
    the gradient norm does not reach tol_newton·h^n within the iteration cap,
    or the line search stalls further than STALL_FACTOR from it.
    """
    n = params.n
    shape = (domain.cells_per_axis,) * n
    u_prev = np.asarray(u_prev, dtype=float).reshape(-1)
    if energy is None:
        energy = PLaplaceEnergy(domain, n, params.p, params.eps_reg)
    if masses is None:
        masses = mu.cell_masses(domain)
    masses = np.asarray(masses, dtype=float).reshape(-1)
    interior = np.flatnonzero(~boundary_mask(domain.cells_per_axis, n).reshape(-1))
    problem = StepProblem(energy, u_prev, masses, domain.dt, interior)

    tol = params.tol_newton * energy.weight
    v = u_prev.copy()
    current = problem.objective(v)
    energies = [current]
    halvings = 0
    grad_norm = np.inf
    for iteration in range(params.max_newton_iterations + 1):
        grad = problem.gradient(v)
        grad_norm = float(np.linalg.norm(grad))
        log.debug("level %s newton %d: |∇J| = %.3e, J = %.17g", level, iteration, grad_norm, current)
        if grad_norm <= tol:
            report = StepReport(level, iteration, grad_norm, current, tuple(energies), halvings)
            return v.reshape(shape), report
        if iteration == params.max_newton_iterations:
            break
        direction = spsolve(problem.hessian(v), -grad)
        slope = float(grad @ direction)
        t = 1.0
        while t >= MIN_STEP:
            trial = v.copy()
            trial[interior] += t * direction
            value = problem.objective(trial)
            if value < current and value <= current + ARMIJO * t * slope:
                break
            if value <= current and _gradient_decreases(problem, trial, grad_norm, t):
                break
            t *= 0.5
            halvings += 1
        else:
            if grad_norm > STALL_FACTOR * tol:
                raise SolverFailure(
                    f"time level {level}: line search stalled with |∇J| = {grad_norm:.3e}",
                    time_level=level, gradient_norm=grad_norm, iterations=iteration,
                )
            log.info("level %s: no descent left at |∇J| = %.3e (tol %.3e), accepting the iterate",
                     level, grad_norm, tol)
            report = StepReport(level, iteration, grad_norm, current, tuple(energies), halvings)
            return v.reshape(shape), report
        v = trial
        current = value
        energies.append(value)

    raise SolverFailure(
        f"time level {level}: Newton did not converge in {params.max_newton_iterations} iterations, |∇J| = {grad_norm:.3e}",
        time_level=level, gradient_norm=grad_norm, iterations=params.max_newton_iterations,
    )


def initial_values(params, domain, initial: InitialCondition, boundary: BoundaryCondition) -> np.ndarray:
    centers = domain.cell_centers(params.n)
    u0 = initial.evaluate(centers)
    return boundary.apply(u0, boundary_mask(domain.cells_per_axis, params.n))


def solve(params, domain, mu, initial=None, boundary=None) -> GridField:
    """All time levels of the discrete solution, with one StepReport per step."""
    initial = initial or InitialCondition()
    boundary = boundary or BoundaryCondition()
    u = initial_values(params, domain, initial, boundary)
    energy = PLaplaceEnergy(domain, params.n, params.p, params.eps_reg)
    masses = mu.cell_masses(domain)
    levels = [u]
    reports = []
    for k in range(1, domain.n_levels):
        u, report = step(u, mu, params, domain, level=k, energy=energy, masses=masses)
        levels.append(u)
        reports.append(report)
    iterations = sum(r.iterations for r in reports)
    log.info("Solved n=%d p=%g on %d^%d cells, %d levels, %d Newton iterations",
             params.n, params.p, domain.cells_per_axis, params.n, domain.n_levels, iterations)
    return GridField(domain, params.n, np.stack(levels), tuple(reports))


def dirichlet_energy(field: GridField, params, k: int) -> float:
    """(1/p) Σ_faces |∇_h u|_ε^p h^n at time level k."""
    energy = PLaplaceEnergy(field.domain, field.n, params.p, params.eps_reg)
    return energy.value(field.level(k).reshape(-1))
