"""Post-hoc audit of the discrete weak identity on a space-time window."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from wolff_lab.errors import DomainError

from .stepper import PLaplaceEnergy

log = logging.getLogger("lab")


@dataclass(frozen=True)
class Window:
    """Space-time box [lower, upper]^n × [t0, t1]; lower/upper are scalars or one value per axis."""

    lower: object
    upper: object
    t0: float
    t1: float

    def bounds(self, n):
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,))
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,))
        return lo, hi


def weak_residual(field, mu, params, window: Window, domain=None) -> float:
    """Largest |residual| of the discrete identity over nodal test functions in `window`.

    For a test vector supported on interior cell i at level k ≥ 1 the residual is

        (h^n/dt)(u_k − u_{k−1})_i + (Σ_faces |∇_h u_k|_ε^{p−2} ∇_h u_k · ∇_h e_i h^n) − μ(cell i).

    Cells are in the window when their centers are; levels when their times are.
    Returns 0.0 when the window holds no admissible test function.
    """
    domain = domain or field.domain
    n = field.n
    lo, hi = window.bounds(n)
    slack = 1e-12 * domain.side_length
    if (np.any(lo < domain.lower - slack) or np.any(hi > domain.upper + slack)
            or not domain.contains_interval(window.t0, window.t1) or window.t0 > window.t1
            or np.any(lo > hi)):
        raise DomainError(f"window {window} is not inside the space-time domain")

    centers = domain.cell_centers(n)
    inside = np.all((centers >= lo) & (centers <= hi), axis=-1) & ~field.mask
    levels = [k for k, t in enumerate(domain.times) if k >= 1 and window.t0 <= t <= window.t1]
    if not levels or not inside.any():
        log.info("Weak residual window %s holds no test functions", window)
        return 0.0

    energy = PLaplaceEnergy(domain, n, params.p, params.eps_reg)
    masses = mu.cell_masses(domain).reshape(-1)
    support = inside.reshape(-1)
    mass_weight = energy.weight / domain.dt
    worst = 0.0
    for k in levels:
        u_k = field.level(k).reshape(-1)
        u_prev = field.level(k - 1).reshape(-1)
        r = mass_weight * (u_k - u_prev) + energy.gradient(u_k) - masses
        worst = max(worst, float(np.max(np.abs(r[support]))))
    log.debug("Weak residual over %d levels and %d cells: %.3e", len(levels), int(support.sum()), worst)
    return worst
