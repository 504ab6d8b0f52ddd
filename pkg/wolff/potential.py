"""Truncated Wolff potential

    W^μ_p(x, R) = ∫_0^R (μ(B_r(x)) / r^{n−p})^{1/(p−1)} dr / r

Divergence is a value, not an exception: when an atom sits at x and p ≤ n the
integral is infinite and `DIVERGENT` (= +inf) is returned, so right-hand sides
built from it compare and add like ordinary floats.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from core.params import lab_default
from wolff_lab.errors import DomainError

log = logging.getLogger("lab")

DIVERGENT = math.inf

# Uniform split of every smooth piece before adaptivity starts.
INITIAL_PANELS = 8


def is_divergent(value) -> bool:
    return math.isinf(value)


def format_value(value) -> str:
    return "DIVERGENT" if is_divergent(value) else f"{value:.17g}"


@dataclass(frozen=True)
class WolffQuery:
    center: tuple
    R: float
    p: float
    n: int

    def __post_init__(self):
        center = tuple(float(c) for c in np.atleast_1d(np.asarray(self.center, dtype=float)))
        object.__setattr__(self, "center", center)
        if not self.R > 0:
            raise DomainError(f"truncation radius must be positive, got {self.R}")
        if len(center) != self.n:
            raise DomainError(f"query center {center} does not live in dimension {self.n}")


def _antiderivative(r, p, n):
    """F with F'(r) = r^{(p−n)/(p−1) − 1}; F(0) = 0 when p > n."""
    r = np.asarray(r, dtype=float)
    if p == n:
        with np.errstate(divide="ignore"):
            return np.log(r)
    beta = (p - n) / (p - 1.0)
    with np.errstate(divide="ignore"):
        return r ** beta / beta


def wolff_closed_form_atom(m, dist, R, p, n) -> float:
    """W for a single atom of mass m at distance `dist` from the center."""
    if not R > 0:
        raise DomainError(f"truncation radius must be positive, got {R}")
    if m < 0 or dist < 0:
        raise DomainError("atom mass and distance must be nonnegative")
    if m == 0 or dist >= R:
        return 0.0
    if dist == 0 and p <= n:
        return DIVERGENT
    return float(m ** (1.0 / (p - 1.0)) * (_antiderivative(R, p, n) - _antiderivative(dist, p, n)))


def _staircase_value(profile, R, p, n) -> float:
    """Exact W when μ(B_r) is piecewise constant with jumps at the profile distances.

    A jump at distance 0 with p ≤ n can only be a density sample (the caller
    has already returned DIVERGENT for an atom there); its own panel is skipped.
    """
    jumps = profile.support_distances
    jumps = jumps[jumps < R]
    if jumps.size and jumps[0] == 0 and p <= n:
        jumps = jumps[1:]
    if jumps.size == 0:
        return 0.0
    masses = profile.mass(jumps)
    upper = np.append(jumps[1:], R)
    terms = masses ** (1.0 / (p - 1.0)) * (_antiderivative(upper, p, n) - _antiderivative(jumps, p, n))
    return math.fsum(terms.tolist())


def adaptive_midpoint(g, edges, rel_tol, max_depth, max_evaluations=None):
    """Integrate g over the consecutive panels in `edges`.

    Every panel is bisected while its two-half midpoint estimate differs from
    the whole-panel estimate by more than rel_tol times the running total.
    Accepted panels are Richardson-corrected. g must accept arrays.
    """
    if max_evaluations is None:
        max_evaluations = lab_default("wolff_max_evaluations")
    edges = np.asarray(edges, dtype=float)
    pieces = np.linspace(0.0, 1.0, INITIAL_PANELS + 1)
    lo = np.concatenate([a + (b - a) * pieces[:-1] for a, b in zip(edges[:-1], edges[1:])])
    hi = np.concatenate([a + (b - a) * pieces[1:] for a, b in zip(edges[:-1], edges[1:])])
    coarse = g(0.5 * (lo + hi)) * (hi - lo)
    evaluations = lo.size
    accepted = 0.0
    depth = 0
    while lo.size:
        mid = 0.5 * (lo + hi)
        left = g(0.5 * (lo + mid)) * (mid - lo)
        right = g(0.5 * (mid + hi)) * (hi - mid)
        evaluations += 2 * lo.size
        fine = left + right
        diff = fine - coarse
        estimate = accepted + float(np.sum(fine)) + float(np.sum(diff)) / 3.0
        done = np.abs(diff) <= rel_tol * abs(estimate)
        depth += 1
        if depth >= max_depth or evaluations >= max_evaluations:
            if evaluations >= max_evaluations and not done.all():
                log.warning("Wolff quadrature budget exhausted with %d open panels", int((~done).sum()))
            done[:] = True
        accepted += math.fsum((fine[done] + diff[done] / 3.0).tolist())
        keep = ~done
        lo, hi = np.concatenate((lo[keep], mid[keep])), np.concatenate((mid[keep], hi[keep]))
        coarse = np.concatenate((left[keep], right[keep]))
    return accepted


def wolff_potential(mu, q: WolffQuery, *, method="auto", rel_tol=None, max_depth=None, depth=None) -> float:
    """W^μ_p(q.center, q.R), or DIVERGENT.

    `method` is "auto" (exact staircase for purely atomic μ, quadrature
    otherwise), "exact" or "quadrature". `depth` is the ball-mass subdivision
    depth for densities.
    """
    if rel_tol is None:
        rel_tol = lab_default("wolff_rel_tol")
    if max_depth is None:
        max_depth = lab_default("wolff_max_depth")
    p, n, R = q.p, q.n, q.R
    profile = mu.radial_profile(q.center, depth)
    if profile.total == 0:
        return 0.0
    center_mass = mu.center_atom_mass(q.center)
    if center_mass > 0 and p <= n:
        log.info("Wolff potential at %s diverges: atom of mass %g at the center, p=%g ≤ n=%d",
                 q.center, center_mass, p, n)
        return DIVERGENT
    if method == "exact" or (method == "auto" and mu.is_atomic):
        return _staircase_value(profile, R, p, n)
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")

    start = mu.nearest_support_distance(q.center)
    if start >= R:
        return 0.0
    head = 0.0
    if profile.mass(0.0) > 0:
        # Weight at the center itself: the atom part is integrated in closed form up to
        # the next jump; a density sample there only marks the quadrature resolution.
        jumps = profile.support_distances
        r_first = min(float(jumps[jumps > 0][0]) if np.any(jumps > 0) else math.inf, R)
        if center_mass > 0:
            head = wolff_closed_form_atom(center_mass, 0.0, r_first, p, n)
        start = r_first
    if start >= R:
        return head

    atom_dist = np.linalg.norm(mu.atom_locations - np.asarray(q.center), axis=1) if mu.atoms else np.zeros(0)
    breaks = np.unique(atom_dist[(atom_dist > start) & (atom_dist < R)])
    edges = np.concatenate(([start], breaks, [R]))

    def integrand(r):
        return (profile.mass(r) * r ** (p - n)) ** (1.0 / (p - 1.0)) / r

    return head + adaptive_midpoint(integrand, edges, rel_tol, max_depth)


def dyadic_wolff_sum(mu, center, rho, p, n, terms) -> float:
    """Σ_{j=1}^{terms} (ρ_j^{p−n} μ(B_{ρ_j}))^{1/(p−1)} with ρ_j = ρ 2^{−j}.

    The discrete counterpart of W^μ_p(y, 2ρ) that the summed level recursion
    produces.
    """
    profile = mu.radial_profile(center)
    radii = rho * 2.0 ** -np.arange(1, terms + 1)
    values = (radii ** (p - n) * profile.mass(radii)) ** (1.0 / (p - 1.0))
    return math.fsum(values.tolist())
