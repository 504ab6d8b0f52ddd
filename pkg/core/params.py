"""Problem constants and space-time geometry shared by every app.

`Params` houses the scalar constants of the equation and of the level
iteration; `Domain` houses the discretization of Ω_T = Ω × (0, T) with
Ω = [lower, lower + side_length]^n. Both are frozen value types.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings


def lab_default(name):
    """Read one entry of `settings.LAB_DEFAULTS`."""
    return getattr(settings, "LAB_DEFAULTS", {})[name]


@dataclass(frozen=True)
class Params:
    n: int
    p: float
    lam: float
    kappa: float
    eps_split: float
    c1: float
    c2: float
    k_cutoff: float
    eps_reg: float
    tol_root: float
    tol_newton: float
    max_newton_iterations: int = 100
    gamma_cap: float = 100.0
    j_max: int = 40

    @classmethod
    def from_settings(cls, n, p, lam, **overrides) -> "Params":
        """Build Params with every unspecified constant taken from LAB_DEFAULTS."""
        values = {
            "kappa": lab_default("kappa"),
            "eps_split": lab_default("eps_split"),
            "c1": 1.0,
            "c2": 1.0,
            "k_cutoff": p + 2.0,
            "eps_reg": lab_default("eps_reg"),
            "tol_root": lab_default("tol_root"),
            "tol_newton": lab_default("tol_newton"),
            "max_newton_iterations": lab_default("max_newton_iterations"),
            "gamma_cap": lab_default("gamma_cap"),
            "j_max": lab_default("j_max"),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(n=n, p=p, lam=lam, **values)

    def replace(self, **changes) -> "Params":
        return dataclasses.replace(self, **changes)

    @property
    def q_exponent(self) -> float:
        """(1+λ)(p−1), the integrability exponent of the average term."""
        return (1.0 + self.lam) * (self.p - 1.0)

    @property
    def root_exponent(self) -> float:
        """1/(1+λ(p−1)), the outer root of the average term."""
        return 1.0 / (1.0 + self.lam * (self.p - 1.0))


@dataclass(frozen=True)
class Domain:
    side_length: float
    cells_per_axis: int
    t_final: float
    dt: float
    lower: float = 0.0

    def replace(self, **changes) -> "Domain":
        return dataclasses.replace(self, **changes)

    def refined(self, cells_per_axis: int, dt: float) -> "Domain":
        """Same physical box and horizon on another rung of the refinement ladder."""
        return dataclasses.replace(self, cells_per_axis=cells_per_axis, dt=dt)

    @property
    def upper(self) -> float:
        return self.lower + self.side_length

    @property
    def h(self) -> float:
        return self.side_length / self.cells_per_axis

    @property
    def steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @property
    def n_levels(self) -> int:
        return self.steps + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_levels) * self.dt

    def cell_volume(self, n: int) -> float:
        return self.h ** n

    def axis_centers(self) -> np.ndarray:
        return self.lower + (np.arange(self.cells_per_axis) + 0.5) * self.h

    def cell_centers(self, n: int) -> np.ndarray:
        """Cell centers, shape (N,)*n + (n,), C order."""
        axes = np.meshgrid(*([self.axis_centers()] * n), indexing="ij")
        return np.stack(axes, axis=-1)

    def cell_index(self, point) -> tuple[int, ...]:
        """Index of the cell containing `point`.

        Points on a face go to the lexicographically smallest adjacent cell;
        points outside the box are clamped to the nearest boundary cell.
        """
        idx = []
        for x in np.atleast_1d(np.asarray(point, dtype=float)):
            i = math.ceil((x - self.lower) / self.h) - 1
            idx.append(min(max(i, 0), self.cells_per_axis - 1))
        return tuple(idx)

    def nearest_level(self, t: float) -> int:
        k = int(round(t / self.dt))
        return min(max(k, 0), self.steps)

    def contains_ball(self, center, radius: float) -> bool:
        c = np.atleast_1d(np.asarray(center, dtype=float))
        slack = 1e-12 * self.side_length
        return bool(np.all(c - radius >= self.lower - slack) and np.all(c + radius <= self.upper + slack))

    def contains_interval(self, t0: float, t1: float) -> bool:
        slack = 1e-12 * max(self.t_final, 1.0)
        return t0 >= -slack and t1 <= self.t_final + slack
