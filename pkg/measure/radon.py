"""Nonnegative Radon measures on the box Ω: atoms plus a piecewise-constant density.

Ball masses μ(B_r(x)) use the closed-ball convention |x − loc| ≤ r. The density
part is integrated by cell-overlap quadrature: cells entirely inside the ball
count in full, cells entirely outside count nothing, and boundary cells are
split into 2^depth subcells per axis whose midpoints decide membership. Because
the subcell weights of a cell sum to its volume, this equals summing the
weights of all subcell midpoints inside the ball, which is how `RadialProfile`
evaluates it for many radii at once.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from core.params import lab_default
from wolff_lab.errors import DomainError

log = logging.getLogger("lab")


@dataclass(frozen=True)
class Atom:
    location: tuple
    mass: float


@dataclass(frozen=True)
class DensityGrid:
    """Piecewise-constant density on [lower, lower + side_length]^n, one value per cell."""

    values: np.ndarray
    lower: float
    side_length: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, value, n, lower, side_length, cells=1) -> "DensityGrid":
        return cls(np.full((cells,) * n, float(value)), lower, side_length)

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def cells(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> float:
        return self.side_length / self.cells

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    def same_geometry(self, other) -> bool:
        return (self.values.shape == other.values.shape
                and self.lower == other.lower and self.side_length == other.side_length)

    def value_at(self, points: np.ndarray) -> np.ndarray:
        """Density at points (…, n); zero outside the box."""
        idx = np.floor((points - self.lower) / self.h).astype(int)
        inside = np.all((idx >= 0) & (idx < self.cells), axis=-1)
        idx = np.clip(idx, 0, self.cells - 1)
        return np.where(inside, self.values[tuple(np.moveaxis(idx, -1, 0))], 0.0)

    def cell_lower_corners(self) -> np.ndarray:
        axis = self.lower + np.arange(self.cells) * self.h
        return np.stack(np.meshgrid(*([axis] * self.n), indexing="ij"), axis=-1)


def _subcell_offsets(n, depth):
    """Midpoints of the 2^depth-per-axis subdivision of the unit cell, shape (m, n)."""
    k = 2 ** depth
    axis = (np.arange(k) + 0.5) / k
    return np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)


@dataclass(frozen=True)
class RadialProfile:
    """Sorted distances of the weighted points of μ seen from one center."""

    center: np.ndarray
    distances: np.ndarray
    cumulative: np.ndarray

    def mass(self, r):
        """μ(B_r(center)) for scalar or array r (closed balls)."""
        r = np.asarray(r, dtype=float)
        count = np.searchsorted(self.distances, r, side="right")
        padded = np.concatenate(([0.0], self.cumulative))
        return padded[count]

    @property
    def total(self) -> float:
        return float(self.cumulative[-1]) if self.cumulative.size else 0.0

    @property
    def support_distances(self) -> np.ndarray:
        """Distinct distances at which the ball mass jumps, ascending."""
        return np.unique(self.distances)


@dataclass(frozen=True)
class RadonMeasure:
    atoms: tuple = field(default_factory=tuple)
    density: DensityGrid | None = None
    n: int = 1

    def __post_init__(self):
        atoms = tuple(
            a if isinstance(a, Atom) else Atom(tuple(np.atleast_1d(np.asarray(a[0], dtype=float))), float(a[1]))
            for a in self.atoms
        )
        for atom in atoms:
            if not (atom.mass >= 0 and np.isfinite(atom.mass)):
                raise DomainError(f"atom masses must be finite and nonnegative, got {atom.mass}")
            if len(atom.location) != self.n:
                raise DomainError(f"atom at {atom.location} does not live in dimension {self.n}")
        object.__setattr__(self, "atoms", atoms)
        if self.density is not None:
            if self.density.n != self.n:
                raise DomainError("density grid dimension does not match the measure")
            if np.any(~np.isfinite(self.density.values)) or np.any(self.density.values < 0):
                raise DomainError("density values must be finite and nonnegative")

    @classmethod
    def zero(cls, n) -> "RadonMeasure":
        return cls(n=n)

    @classmethod
    def dirac(cls, location, mass=1.0) -> "RadonMeasure":
        loc = tuple(np.atleast_1d(np.asarray(location, dtype=float)))
        return cls(atoms=(Atom(loc, float(mass)),), n=len(loc))

    def __add__(self, other: "RadonMeasure") -> "RadonMeasure":
        if other.n != self.n:
            raise DomainError("cannot add measures of different dimensions")
        if self.density is None or other.density is None:
            density = self.density if other.density is None else other.density
        elif self.density.same_geometry(other.density):
            density = DensityGrid(self.density.values + other.density.values,
                                  self.density.lower, self.density.side_length)
        else:
            raise DomainError("density grids must share their geometry to be added")
        return RadonMeasure(atoms=self.atoms + other.atoms, density=density, n=self.n)

    def scaled(self, c: float) -> "RadonMeasure":
        if c < 0:
            raise DomainError("measures are nonnegative; scale factor must be ≥ 0")
        density = None
        if self.density is not None:
            density = DensityGrid(c * self.density.values, self.density.lower, self.density.side_length)
        return RadonMeasure(atoms=tuple(Atom(a.location, c * a.mass) for a in self.atoms),
                            density=density, n=self.n)

    @property
    def is_atomic(self) -> bool:
        return self.density is None or not np.any(self.density.values > 0)

    @property
    def atom_locations(self) -> np.ndarray:
        return np.array([a.location for a in self.atoms], dtype=float).reshape(-1, self.n)

    @property
    def atom_masses(self) -> np.ndarray:
        return np.array([a.mass for a in self.atoms], dtype=float)

    def radial_profile(self, center, depth=None) -> RadialProfile:
        """Weighted points of μ sorted by distance to `center`.

        Density cells entirely inside or outside every ball are weighted exactly
        by construction; boundary cells use the subcell midpoints at `depth`.
        """
        if depth is None:
            depth = lab_default("ball_mass_depth")
        c = np.atleast_1d(np.asarray(center, dtype=float))
        dist = [np.linalg.norm(self.atom_locations - c, axis=1)] if self.atoms else []
        weight = [self.atom_masses] if self.atoms else []
        if self.density is not None:
            d = self.density
            positive = d.values > 0
            corners = d.cell_lower_corners()[positive]
            offsets = _subcell_offsets(self.n, depth) * d.h
            samples = corners[:, None, :] + offsets[None, :, :]
            sample_weight = d.values[positive][:, None] * d.cell_volume / offsets.shape[0]
            dist.append(np.linalg.norm(samples - c, axis=-1).ravel())
            weight.append(np.broadcast_to(sample_weight, samples.shape[:2]).ravel())
        if not dist:
            empty = np.zeros(0)
            return RadialProfile(c, empty, empty)
        dist = np.concatenate(dist)
        weight = np.concatenate(weight)
        keep = weight > 0
        dist, weight = dist[keep], weight[keep]
        order = np.argsort(dist, kind="stable")
        return RadialProfile(c, dist[order], np.cumsum(weight[order]))

    def nearest_support_distance(self, center) -> float:
        """Distance from `center` to the closest point of supp μ (0 inside a positive cell)."""
        c = np.atleast_1d(np.asarray(center, dtype=float))
        best = np.inf
        masses = self.atom_masses
        if masses.size and np.any(masses > 0):
            best = float(np.min(np.linalg.norm(self.atom_locations[masses > 0] - c, axis=1)))
        if self.density is not None and np.any(self.density.values > 0):
            d = self.density
            lo = d.cell_lower_corners()[d.values > 0]
            gap = np.maximum(np.maximum(lo - c, c - (lo + d.h)), 0.0)
            best = min(best, float(np.min(np.linalg.norm(gap, axis=-1))))
        return best

    def center_atom_mass(self, center) -> float:
        """Total mass of the atoms sitting exactly at `center`."""
        if not self.atoms:
            return 0.0
        c = np.atleast_1d(np.asarray(center, dtype=float))
        at_center = np.all(self.atom_locations == c, axis=1)
        return float(self.atom_masses[at_center].sum())

    def cell_masses(self, domain, depth=None) -> np.ndarray:
        """μ lumped onto the cells of `domain`, shape (N,)*n.

        Atoms go wholly to their containing cell (ties to the lexicographically
        smallest adjacent cell); the density is integrated over each cell by
        subcell midpoints.
        """
        if depth is None:
            depth = lab_default("ball_mass_depth")
        shape = (domain.cells_per_axis,) * self.n
        masses = np.zeros(shape)
        for atom in self.atoms:
            masses[domain.cell_index(atom.location)] += atom.mass
        if self.density is not None:
            offsets = _subcell_offsets(self.n, depth)
            lower = domain.axis_centers() - 0.5 * domain.h
            corners = np.stack(np.meshgrid(*([lower] * self.n), indexing="ij"), axis=-1)
            samples = corners[..., None, :] + offsets * domain.h
            values = self.density.value_at(samples)
            masses += values.mean(axis=-1) * domain.cell_volume(self.n)
        return masses


def ball_mass(mu: RadonMeasure, center, r: float, depth=None) -> float:
    """μ(B_r(center)) with the closed-ball convention."""
    if not r >= 0:
        raise DomainError(f"ball radius must be nonnegative, got {r}")
    return float(mu.radial_profile(center, depth).mass(r))


def total_mass(mu: RadonMeasure) -> float:
    total = float(mu.atom_masses.sum()) if mu.atoms else 0.0
    if mu.density is not None:
        total += float(mu.density.values.sum()) * mu.density.cell_volume
    return total
