"""Interval meshes and structured triangulations of the unit square.

Geometry is floating point: it feeds the floating FEM assembly.  Exactness is
confined to :mod:`ctrldisc.exactbasis`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AffineMap",
    "SimplexMesh",
    "cell_affine_map",
    "cell_volumes",
    "unit_interval_mesh",
    "unit_square_mesh",
]


@dataclass(frozen=True)
class SimplexMesh:
    """Simplicial mesh: vertices, cells (d+1 vertex indices each), mesh size h.

    Cells have pairwise disjoint interiors and cover the unit interval/square.
    Instances are immutable (arrays are marked read-only) and safe to share.
    """

    dim: int
    vertices: np.ndarray  # (num_vertices, dim) float
    cells: np.ndarray  # (num_cells, dim + 1) int
    h: float

    def __post_init__(self):
        vertices = np.ascontiguousarray(self.vertices, dtype=float)
        cells = np.ascontiguousarray(self.cells, dtype=np.intp)
        if vertices.ndim != 2 or vertices.shape[1] != self.dim:
            raise ValueError("vertices must have shape (num_vertices, dim)")
        if cells.ndim != 2 or cells.shape[1] != self.dim + 1:
            raise ValueError("cells must have shape (num_cells, dim + 1)")
        vertices.setflags(write=False)
        cells.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "cells", cells)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    def cell_vertices(self, index: int) -> np.ndarray:
        """Coordinates of the d+1 vertices of one cell, shape (d+1, dim)."""
        return self.vertices[self.cells[index]]

    def to_json_dict(self) -> dict:
        """Debug dump (vertices, cells); not a stability-guaranteed format."""
        return {
            "dimension": self.dim,
            "h": self.h,
            "vertices": self.vertices.tolist(),
            "cells": self.cells.tolist(),
        }


@dataclass(frozen=True)
class AffineMap:
    """Affine map x_hat -> B x_hat + b from the reference simplex onto a cell."""

    matrix: np.ndarray  # (dim, dim)
    offset: np.ndarray  # (dim,)
    abs_det: float

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map reference points (nq, dim) to physical points (nq, dim)."""
        return points @ self.matrix.T + self.offset


def unit_interval_mesh(n: int) -> SimplexMesh:
    """n equal cells covering [0, 1]; h = 1/n."""
    if n < 1:
        raise ValueError(f"cell count must be >= 1, got {n}")
    vertices = (np.arange(n + 1, dtype=float) / n).reshape(-1, 1)
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return SimplexMesh(dim=1, vertices=vertices, cells=cells, h=1.0 / n)


def unit_square_mesh(n: int) -> SimplexMesh:
    """Structured triangulation of [0, 1]^2: n^2 squares, each split into 2 triangles.

    Every square is cut along the same lower-left to upper-right diagonal, so
    meshes are deterministic and reports reproducible.  Vertex (i, j) has index
    j*(n+1) + i; there are 2 n^2 cells and h = sqrt(2)/n.
    """
    if n < 1:
        raise ValueError(f"subdivision count must be >= 1, got {n}")
    side = np.arange(n + 1, dtype=float) / n
    xs, ys = np.meshgrid(side, side, indexing="xy")
    vertices = np.column_stack([xs.ravel(), ys.ravel()])

    cells = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            b = a + 1
            c = b + (n + 1)
            d = a + (n + 1)
            cells.append((a, b, c))  # lower-right triangle
            cells.append((a, c, d))  # upper-left triangle
    return SimplexMesh(dim=2, vertices=vertices, cells=np.array(cells), h=math.sqrt(2.0) / n)


def cell_affine_map(mesh: SimplexMesh, index: int) -> AffineMap:
    """Affine map sending the reference simplex onto cell `index`.

    Reference vertex 0 goes to the cell's first vertex and reference vertex e_i
    to vertex i; |det B| = d! * |T|.  Raises on a degenerate cell.
    """
    verts = mesh.cell_vertices(index)
    offset = verts[0].copy()
    matrix = (verts[1:] - verts[0]).T.copy()
    if mesh.dim == 1:
        det = matrix[0, 0]
    elif mesh.dim == 2:
        det = matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0]
    else:
        det = np.linalg.det(matrix)
    abs_det = abs(float(det))
    if abs_det == 0.0:
        raise ValueError(f"degenerate cell {index}: |det B| = 0")
    matrix.setflags(write=False)
    offset.setflags(write=False)
    return AffineMap(matrix=matrix, offset=offset, abs_det=abs_det)


def cell_volumes(mesh: SimplexMesh) -> np.ndarray:
    """|T| for every cell, via |det B| / d!."""
    fact = math.factorial(mesh.dim)
    return np.array([cell_affine_map(mesh, i).abs_det / fact for i in range(mesh.num_cells)])
