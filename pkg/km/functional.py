"""Discrete space-time cylinders and the level functional A_j(l).

Space integrals are midpoint sums over the cells whose centers lie in the
closed ball around the center cell; time integrals weight each level by the
overlap of its interval [t_k − dt/2, t_k + dt/2] ∩ [0, T] with the window.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from wolff_lab.errors import DomainError

from .functions import G, cutoff_space, cutoff_time

log = logging.getLogger("lab")


@dataclass(frozen=True)
class Cylinder:
    """Q_ρ^{(δ)}(y, s) = B_ρ(y) × (s − δ^{2−p}ρ^p, s + δ^{2−p}ρ^p)."""

    center: tuple
    radius: float
    gap: float
    p: float

    @property
    def half_height(self) -> float:
        return self.gap ** (2.0 - self.p) * self.radius ** self.p

    def inside(self, domain) -> bool:
        y, s = self.center
        T = self.half_height
        return domain.contains_ball(y, self.radius) and domain.contains_interval(s - T, s + T)


class CylinderSample:
    """Cells of a field within `radius` of the center cell, at every time level."""

    def __init__(self, field, center, radius):
        y, s = center
        domain = field.domain
        self.field = field
        self.domain = domain
        self.radius = float(radius)
        self.y = np.atleast_1d(np.asarray(y, dtype=float))
        self.s = float(s)
        self.center_cell = domain.cell_index(self.y)
        self.center_level = domain.nearest_level(self.s)
        self.s_hat = float(domain.times[self.center_level])
        y_hat = domain.axis_centers()[list(self.center_cell)]
        centers = domain.cell_centers(field.n).reshape(-1, field.n)
        distances = np.linalg.norm(centers - y_hat, axis=1)
        inside = distances <= self.radius + 1e-12 * domain.h
        self.cells = np.flatnonzero(inside)
        self.distances = distances[inside]
        self.values = field.values.reshape(domain.n_levels, -1)[:, self.cells]
        self.cell_volume = domain.cell_volume(field.n)

    def time_weights(self, half_height) -> np.ndarray:
        """Length of (ŝ − T, ŝ + T) ∩ [t_k − dt/2, t_k + dt/2] ∩ [0, t_final] for each level k."""
        d = self.domain
        t = d.times
        lo = np.maximum(np.maximum(t - 0.5 * d.dt, 0.0), self.s_hat - half_height)
        hi = np.minimum(np.minimum(t + 0.5 * d.dt, d.t_final), self.s_hat + half_height)
        return np.maximum(hi - lo, 0.0)

    def time_offsets(self) -> np.ndarray:
        return self.domain.times - self.s_hat

    def excess_integral(self, level, half_height, exponent) -> float:
        """∬ (u − level)_+^exponent over the ball × (ŝ − T, ŝ + T)."""
        excess = np.maximum(self.values - level, 0.0) ** exponent
        return float(self.time_weights(half_height) @ excess.sum(axis=1)) * self.cell_volume

    def level_set_measure(self, level, half_height) -> float:
        """|{u > level}| within the ball × (ŝ − T, ŝ + T)."""
        counts = (self.values > level).sum(axis=1)
        return float(self.time_weights(half_height) @ counts) * self.cell_volume


@dataclass(frozen=True)
class FunctionalTerms:
    first: float
    second: float
    half_height: float
    collapsed: bool

    @property
    def value(self) -> float:
        return self.first + self.second


class LevelFunctional:
    """A_j(l) for one center, radius ρ_j and base level l_j, over the candidate window.

    For l ≥ l_j + ρ_j,

        A_j(l) = (l−l_j)^{p−2}/ρ_j^{n+p} ∬ ((u−l_j)/(l−l_j))^{(1+λ)(p−1)} ξ^{k−p}
                 + max_t ρ_j^{−n} ∫ G((u−l_j)/(l−l_j)) ξ^k,

    both over {u > l_j} in B_j × (s ± (l−l_j)^{2−p}ρ_j^p), with ξ the cutoff
    of that candidate cylinder.
    """

    def __init__(self, field, center, rho_j, l_j, params):
        self.field = field
        self.center = center
        self.rho_j = float(rho_j)
        self.l_j = float(l_j)
        self.params = params
        self.sample = CylinderSample(field, center, rho_j)
        self.excess = self.sample.values - self.l_j
        self.positive = self.excess > 0
        self.xi_space = cutoff_space(self.sample.distances, self.rho_j)
        self.evaluations = 0

    def __call__(self, l) -> float:
        return self.terms(l).value

    def cylinder(self, l) -> Cylinder:
        return Cylinder(self.center, self.rho_j, l - self.l_j, self.params.p)

    def terms(self, l, below=None) -> FunctionalTerms:
        """Both terms of A_j(l). `below` keeps only points with (u−l_j)/(l−l_j) < below in the first term."""
        p, n, k = self.params.p, self.params.n, self.params.k_cutoff
        d = float(l) - self.l_j
        if d < self.rho_j * (1.0 - 1e-12):
            raise DomainError(f"A_j(l) needs l ≥ l_j + ρ_j; got l − l_j = {d} < ρ_j = {self.rho_j}")
        cylinder = self.cylinder(l)
        if not cylinder.inside(self.sample.domain):
            raise DomainError(f"cylinder {cylinder} leaves the space-time domain")
        self.evaluations += 1
        T = cylinder.half_height
        weights = self.sample.time_weights(T)
        active = weights > 0
        xi = self.xi_space[None, :] * cutoff_time(self.sample.time_offsets(), T)[:, None]
        ratio = np.where(self.positive, self.excess / d, 0.0)
        h_n = self.sample.cell_volume

        kept = ratio if below is None else np.where(ratio < below, ratio, 0.0)
        integrand = kept ** self.params.q_exponent * xi ** (k - p)
        first = d ** (p - 2.0) / self.rho_j ** (n + p) * float(weights @ integrand.sum(axis=1)) * h_n

        slices = (G(ratio[active], self.params.lam) * xi[active] ** k).sum(axis=1) * h_n
        second = float(slices.max()) / self.rho_j ** n if slices.size else 0.0
        return FunctionalTerms(first, second, T, T <= 0.5 * self.sample.domain.dt)

    def level_set_measure(self, delta) -> float:
        """|L_j| for the cylinder of gap δ."""
        T = Cylinder(self.center, self.rho_j, delta, self.params.p).half_height
        return self.sample.level_set_measure(self.l_j, T)


def base_level(history) -> float:
    return history[-1].l_next if history else 0.0


def A_functional(field, j, l, history, params, center, rho) -> float:
    """A_j(l) with l_j read from the states already selected."""
    rho_j = rho * 2.0 ** -j
    return LevelFunctional(field, center, rho_j, base_level(history), params)(l)


def average_term(field, center, rho, params) -> float:
    """(ρ^{−(p+n)} ∬_{B_ρ(y)×(s−ρ^p, s+ρ^p)} u_+^{(1+λ)(p−1)})^{1/(1+λ(p−1))}, window clipped to [0, T]."""
    p, n = params.p, params.n
    sample = CylinderSample(field, center, rho)
    integral = sample.excess_integral(0.0, rho ** p, params.q_exponent)
    return (integral / rho ** (p + n)) ** params.root_exponent
