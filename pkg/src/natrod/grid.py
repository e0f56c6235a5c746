"""Uniform one-dimensional grids over the reference interval [0, L]."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InsufficientGridError, InvalidParameterError


@dataclass(frozen=True)
class RodGrid:
    """Uniform node grid on ``[0, length]`` with composite-trapezoid weights.

    Nodes are ``s_i = i * h`` for ``i = 0 .. n_nodes - 1``. The cells between
    consecutive nodes carry midpoint weights ``h`` and are used by the
    staggered torsion discretization.
    """

    n_nodes: int
    length: float = 1.0

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 2:
            raise InsufficientGridError(f"need at least 2 nodes, got {self.n_nodes}")
        if not self.length > 0:
            raise InvalidParameterError(f"grid length must be positive, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / (self.n_nodes - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_nodes)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_nodes, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    @cached_property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    @property
    def n_cells(self) -> int:
        return self.n_nodes - 1

    def integrate(self, values) -> np.ndarray:
        """Trapezoid rule over the leading axis of ``values``."""
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.n_nodes:
            raise InsufficientGridError(
                f"expected {self.n_nodes} nodal samples, got {values.shape[0]}"
            )
        return np.tensordot(self.weights, values, axes=(0, 0))
