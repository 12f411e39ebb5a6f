"""Graded radial meshes, nodal fields and per-cell Gauss rules"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING, Any, Dict, Tuple

import numpy as np
from scipy import special

from .errors import ConfigurationError

if TYPE_CHECKING:
    from .problem import ProblemSpec

# studies use M >= 8; four cells stay allowed for small hand-checkable layouts
MIN_CELLS = 4


@lru_cache(maxsize=None)
def gauss_rule(npt: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights mapped to [0, 1]"""
    x, w = special.roots_legendre(npt)
    return 0.5 * (x + 1.0), 0.5 * w


# RadialMesh is a strictly increasing set of radii r_0 < ... < r_M.
@dataclass(frozen=True, eq=False)
class RadialMesh:
    nodes: np.ndarray
    grading: float
    mode: str = "ball"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or np.any(np.diff(nodes) <= 0):
            raise ConfigurationError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def cells(self) -> int:
        return self.nodes.size - 1

    @property
    def r_min(self) -> float:
        return float(self.nodes[0])

    @property
    def outer_radius(self) -> float:
        return float(self.nodes[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    def quadrature(self, npt: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(points, weights, local coordinate) arrays of shape (cells, npt)"""
        t, w = gauss_rule(npt)
        left = self.nodes[:-1, None]
        h = self.widths[:, None]
        return left + h * t[None, :], h * w[None, :], np.broadcast_to(t, (self.cells, npt))

    def to_dict(self) -> Dict[str, Any]:
        return {"cells": self.cells, "grading": self.grading, "mode": self.mode,
                "r_min": self.r_min, "outer_radius": self.outer_radius,
                "min_width": float(self.widths.min()), "max_width": float(self.widths.max())}


# NodalField is a continuous piecewise-linear function on a RadialMesh.
@dataclass(frozen=True, eq=False)
class NodalField:
    mesh: RadialMesh
    values: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.mesh.nodes.shape:
            raise ConfigurationError(
                f"field has {values.size} values for {self.mesh.nodes.size} nodes")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, mesh: RadialMesh, fn) -> "NodalField":
        return cls(mesh, fn(mesh.nodes))

    @property
    def slopes(self) -> np.ndarray:
        """Constant derivative on each cell"""
        return np.diff(self.values) / self.mesh.widths

    def cellwise(self, t: np.ndarray) -> np.ndarray:
        """Values at local coordinates t (shape (cells, k)) of every cell"""
        v = self.values
        return v[:-1, None] * (1.0 - t) + v[1:, None] * t

    def __sub__(self, other: "NodalField") -> "NodalField":
        return NodalField(self.mesh, self.values - other.values)


def build_mesh(spec: "ProblemSpec", M: int, grading: float = 3.0) -> RadialMesh:
    """Nodes r_i = r_min + (R - r_min)(i/M)^grading; grading > 1 clusters nodes at r_min"""
    if int(M) != M or M < MIN_CELLS:
        raise ConfigurationError(f"mesh needs at least {MIN_CELLS} cells, got {M}")
    if grading < 1:
        raise ConfigurationError(f"grading must be >= 1, got {grading}")
    r_min, outer = spec.r_min, spec.outer_radius
    s = np.arange(M + 1, dtype=float) / M
    nodes = r_min + (outer - r_min) * s ** grading
    nodes[-1] = outer
    return RadialMesh(nodes, float(grading), spec.mode)
