"""Discrete space-time fields and the data that seed them.

A `GridField` stores u on the cell centers of the uniform grid of a `Domain`,
one array per time level. The outermost ring of cells carries the Dirichlet
data at every level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from wolff_lab.errors import DomainError

INITIAL_KINDS = ("constant", "gaussian", "linear")
BOUNDARY_KINDS = ("constant", "initial")


@dataclass(frozen=True)
class InitialCondition:
    kind: str = "constant"
    value: float = 0.0
    center: tuple = ()
    width: float = 1.0
    amplitude: float = 1.0
    slope: tuple = ()
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise DomainError(f"unknown initial condition kind {self.kind!r}")

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """u0 at points of shape (…, n)."""
        if self.kind == "constant":
            return np.full(points.shape[:-1], float(self.value))
        if self.kind == "gaussian":
            r2 = np.sum((points - np.asarray(self.center, dtype=float)) ** 2, axis=-1)
            return self.amplitude * np.exp(-r2 / (2.0 * self.width ** 2))
        return self.offset + points @ np.asarray(self.slope, dtype=float)


@dataclass(frozen=True)
class BoundaryCondition:
    """Dirichlet data on the boundary ring: a constant, or the initial values frozen in time."""

    kind: str = "constant"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in BOUNDARY_KINDS:
            raise DomainError(f"unknown boundary condition kind {self.kind!r}")

    def apply(self, u0: np.ndarray, mask: np.ndarray) -> np.ndarray:
        u = np.array(u0, dtype=float)
        if self.kind == "constant":
            u[mask] = self.value
        return u


def boundary_mask(cells: int, n: int) -> np.ndarray:
    mask = np.zeros((cells,) * n, dtype=bool)
    for axis in range(n):
        index = [slice(None)] * n
        index[axis] = 0
        mask[tuple(index)] = True
        index[axis] = cells - 1
        mask[tuple(index)] = True
    return mask


def face_difference_matrix(cells: int, n: int, h: float) -> sps.csr_matrix:
    """Sparse (faces × cells) matrix of normal difference quotients (v_right − v_left)/h.

    Faces are enumerated axis by axis; cells are flattened in C order.
    """
    index = np.arange(cells ** n).reshape((cells,) * n)
    blocks = []
    for axis in range(n):
        left = np.take(index, np.arange(cells - 1), axis=axis).ravel()
        right = np.take(index, np.arange(1, cells), axis=axis).ravel()
        rows = np.arange(left.size)
        block = sps.coo_matrix(
            (np.concatenate((-np.ones(left.size), np.ones(left.size))) / h,
             (np.concatenate((rows, rows)), np.concatenate((left, right)))),
            shape=(left.size, cells ** n),
        )
        blocks.append(block)
    return sps.vstack(blocks).tocsr()


@dataclass(frozen=True)
class StepReport:
    level: int
    iterations: int
    gradient_norm: float
    energy: float
    energies: tuple = field(default_factory=tuple, repr=False)
    line_search_halvings: int = 0


@dataclass(frozen=True)
class GridField:
    domain: object
    n: int
    values: np.ndarray
    reports: tuple = field(default_factory=tuple, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        expected = (self.domain.n_levels,) + (self.domain.cells_per_axis,) * self.n
        if values.shape != expected:
            raise DomainError(f"field shape {values.shape} does not match the domain {expected}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, domain, n, value) -> "GridField":
        shape = (domain.n_levels,) + (domain.cells_per_axis,) * n
        return cls(domain, n, np.full(shape, float(value)))

    @property
    def mask(self) -> np.ndarray:
        return boundary_mask(self.domain.cells_per_axis, self.n)

    @property
    def initial(self) -> np.ndarray:
        return self.values[0]

    @property
    def boundary(self) -> np.ndarray:
        return self.values[0][self.mask]

    @property
    def times(self) -> np.ndarray:
        return self.domain.times

    def level(self, k: int) -> np.ndarray:
        return self.values[k]

    def cell_value(self, point, t: float) -> float:
        """Cell average of u in the cell containing `point`, at the level nearest to t."""
        return float(self.values[(self.domain.nearest_level(t),) + self.domain.cell_index(point)])

    def iter_rows(self):
        """(t, flat cell index, value) in level-major order."""
        flat = self.values.reshape(self.domain.n_levels, -1)
        for k, t in enumerate(self.times):
            for i, value in enumerate(flat[k]):
                yield t, i, value
