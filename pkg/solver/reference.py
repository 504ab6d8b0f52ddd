"""Comparison oracles for the implicit solver.

`explicit_reference` marches the same spatial operator with forward Euler and
stability-limited substeps; `heat_kernel_reference` is the free-space heat
kernel convolution, exact for p = 2 away from the boundary.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.integrate import quad

from wolff_lab.errors import DomainError

from .grid import BoundaryCondition, GridField, InitialCondition, boundary_mask
from .stepper import PLaplaceEnergy, initial_values

log = logging.getLogger("lab")

# Fraction of the Gershgorin stability limit used per substep.
SAFETY = 0.5


def _stable_step(energy, u, interior):
    H = energy.hessian(u)[interior][:, interior]
    bound = float(abs(H).sum(axis=1).max()) if H.shape[0] else 0.0
    return math.inf if bound == 0 else SAFETY * energy.weight / bound


def explicit_reference(params, domain, mu, initial=None, boundary=None, dt_explicit=None) -> GridField:
    """Forward Euler for h^n u_t = −∇E(u) + μ(cell), sampled at the levels of `domain`.

    Each substep is min(dt_explicit, ½·h^n/λ_max) where λ_max is the Gershgorin
    bound on the energy Hessian at the current state.
    """
    initial = initial or InitialCondition()
    boundary = boundary or BoundaryCondition()
    dt_explicit = dt_explicit or domain.dt / 100.0
    if not dt_explicit > 0:
        raise DomainError(f"explicit time step must be positive, got {dt_explicit}")
    n = params.n
    energy = PLaplaceEnergy(domain, n, params.p, params.eps_reg)
    masses = mu.cell_masses(domain).reshape(-1)
    interior = np.flatnonzero(~boundary_mask(domain.cells_per_axis, n).reshape(-1))
    shape = (domain.cells_per_axis,) * n

    u = initial_values(params, domain, initial, boundary).reshape(-1)
    levels = [u.reshape(shape).copy()]
    substeps = 0
    for _ in range(1, domain.n_levels):
        remaining = domain.dt
        while remaining > 0:
            tau = min(dt_explicit, _stable_step(energy, u, interior), remaining)
            rate = (masses - energy.gradient(u)) / energy.weight
            u = u.copy()
            u[interior] += tau * rate[interior]
            remaining -= tau
            if remaining < 1e-14 * domain.dt:
                remaining = 0.0
            substeps += 1
        levels.append(u.reshape(shape).copy())
    log.info("Explicit reference: %d substeps for %d levels", substeps, domain.n_levels - 1)
    return GridField(domain, n, np.stack(levels))


def heat_kernel_reference(u0, x, t, lower, upper) -> np.ndarray:
    """∫_lower^upper u0(ξ) exp(−(x−ξ)²/4t)/√(4πt) dξ for each x (n = 1, p = 2).

    `u0` is a scalar callable; data outside [lower, upper] is taken as zero.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    if t == 0:
        return np.array([float(u0(xi)) for xi in x])
    scale = math.sqrt(4.0 * t)
    out = np.empty_like(x)
    for i, xi in enumerate(x):
        # The kernel is negligible beyond 12 standard deviations.
        a = max(lower, xi - 12.0 * scale)
        b = min(upper, xi + 12.0 * scale)
        if a >= b:
            out[i] = 0.0
            continue

        def integrand(xs, xi=xi):
            return float(u0(xs)) * math.exp(-((xi - xs) ** 2) / (4.0 * t)) / (math.sqrt(math.pi) * scale)

        points = [xi] if a < xi < b else None
        out[i], _ = quad(integrand, a, b, points=points, epsabs=1e-13, epsrel=1e-11, limit=200)
    return out
