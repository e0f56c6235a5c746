"""Independent numerical checks for the closed-form results.

Nothing here calls the closed-form constitutive or torsion formulas; the
tests compare the two routes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .errors import NonConvergenceError, PreconditionError


class MaximizationSpace(str, Enum):
    FULL_L2 = "full_l2"
    UNIFORM_NATURAL = "uniform_natural"


@dataclass(frozen=True)
class DiscreteMaximizationInstance:
    """Quadrature-discretized total dissipation rate and its constraint.

    Per-node arrays have leading dimension ``N``: tensors ``(N, 3, 3)``,
    targets ``(N, 3)``. The targets are ``m - psi_u``, ``n - psi_v``,
    ``psi_ud`` and ``psi_vd``. Under ``UNIFORM_NATURAL`` the natural
    tensors must be the same at every node.
    """

    weights: np.ndarray
    M: np.ndarray
    N: np.ndarray
    M_d: np.ndarray
    N_d: np.ndarray
    target_u: np.ndarray
    target_v: np.ndarray
    grad_ud: np.ndarray
    grad_vd: np.ndarray
    space: MaximizationSpace

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        n = w.shape[0]
        if not (1 <= n <= 16) or np.any(w <= 0):
            raise PreconditionError("need 1..16 nodes with positive weights")
        object.__setattr__(self, "space", MaximizationSpace(self.space))
        for name in ("M", "N", "M_d", "N_d"):
            T = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (n, 3, 3))
            object.__setattr__(self, name, T)
        for name in ("target_u", "target_v", "grad_ud", "grad_vd"):
            object.__setattr__(self, name, np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (n, 3)))
        object.__setattr__(self, "weights", w)

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    @property
    def dimension(self) -> int:
        n = self.n_nodes
        return 12 * n if self.space is MaximizationSpace.FULL_L2 else 6 + 6 * n

    def quadratic_matrix(self) -> np.ndarray:
        """Symmetric ``Q`` with ``F(x) = x.Q x`` for the flattened rates."""
        n, w = self.n_nodes, self.weights
        Q = np.zeros((self.dimension, self.dimension))
        if self.space is MaximizationSpace.FULL_L2:
            for k, T in enumerate((self.M_d, self.N_d, self.M, self.N)):
                for i in range(n):
                    j = 3 * (k * n + i)
                    Q[j : j + 3, j : j + 3] = w[i] * T[i]
        else:
            Q[0:3, 0:3] = np.tensordot(w, self.M_d, axes=(0, 0))
            Q[3:6, 3:6] = np.tensordot(w, self.N_d, axes=(0, 0))
            for k, T in enumerate((self.M, self.N)):
                for i in range(n):
                    j = 6 + 3 * (k * n + i)
                    Q[j : j + 3, j : j + 3] = w[i] * T[i]
        return Q

    def linear_vector(self) -> np.ndarray:
        """``l`` with ``constraint right side = l.x``."""
        w = self.weights[:, None]
        if self.space is MaximizationSpace.FULL_L2:
            parts = (-w * self.grad_ud, -w * self.grad_vd, w * self.target_u, w * self.target_v)
        else:
            parts = (
                -np.sum(w * self.grad_ud, axis=0),
                -np.sum(w * self.grad_vd, axis=0),
                w * self.target_u,
                w * self.target_v,
            )
        return np.concatenate([np.ravel(p) for p in parts])

    def split(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Flattened rates to ``(du_d, dv_d, du, dv)``."""
        n = self.n_nodes
        if self.space is MaximizationSpace.FULL_L2:
            return tuple(x[3 * k * n : 3 * (k + 1) * n].reshape(n, 3) for k in range(4))
        return x[0:3], x[3:6], x[6 : 6 + 3 * n].reshape(n, 3), x[6 + 3 * n :].reshape(n, 3)

    def flatten(self, rates) -> np.ndarray:
        return np.concatenate([np.ravel(r) for r in rates])


@dataclass
class BruteForceResult:
    rates: tuple
    x: np.ndarray
    value: float
    status: str  # "ok", "trivial" or "inconclusive"
    restart_values: list = field(default_factory=list)
    iterations: int = 0


def _orthonormal_columns(S, rtol=1e-10):
    U, sv, _ = np.linalg.svd(S, full_matrices=False)
    keep = sv > rtol * sv[0]
    return U[:, keep]


def brute_force_maximize(
    instance: DiscreteMaximizationInstance,
    restarts: int = 50,
    iters: int = 5000,
    seed: int = 0,
    rtol: float = 1e-15,
) -> BruteForceResult:
    """Maximize ``F(x) = x.Q x`` subject to ``F(x) = l.x`` by direct search.

    Every direction ``d`` meets the constraint at exactly one nonzero point,
    ``x = lambda d`` with ``lambda = l.d / d.Q d``, where ``F = (l.d)^2 / d.Q d``.
    Each restart runs projected gradient ascent of that ratio on the unit
    sphere, taking the best point in the span of the current direction, the
    gradient and the previous step (an exact subspace line search). The best
    feasible point over all restarts is returned.
    """
    Q = instance.quadratic_matrix()
    ell = instance.linear_vector()
    dim = ell.size
    if not np.any(ell):
        x = np.zeros(dim)
        return BruteForceResult(instance.split(x), x, 0.0, "trivial")

    rng = np.random.default_rng(seed)
    best_val, best_d = -np.inf, None
    values = []
    total_iters = 0
    for _ in range(restarts):
        d = rng.standard_normal(dim)
        d /= np.linalg.norm(d)
        prev_step = np.zeros(dim)
        val = -np.inf
        stall = 0
        for it in range(iters):
            Qd = Q @ d
            q = d @ Qd
            l = ell @ d
            new_val = l * l / q
            grad = 2.0 * (l / q) * ell - 2.0 * (l * l / (q * q)) * Qd
            grad -= (grad @ d) * d
            if new_val - val <= rtol * abs(new_val):
                stall += 1
                if stall >= 3:
                    break
            else:
                stall = 0
            val = new_val
            S = _orthonormal_columns(np.column_stack([d, grad, prev_step]) if np.any(prev_step) else np.column_stack([d, grad]))
            c = np.linalg.solve(S.T @ Q @ S, S.T @ ell)
            d_new = S @ c
            d_new /= np.linalg.norm(d_new)
            if d_new @ d < 0:
                d_new = -d_new
            prev_step = d_new - d
            d = d_new
        total_iters += it + 1
        if abs(ell @ d) <= 1e-300:
            values.append(np.nan)
            continue
        values.append(val)
        if val > best_val:
            best_val, best_d = val, d
    if best_d is None:
        return BruteForceResult((), np.array([]), float("nan"), "inconclusive", values, total_iters)
    lam = (ell @ best_d) / (best_d @ Q @ best_d)
    x = lam * best_d
    return BruteForceResult(instance.split(x), x, float(x @ Q @ x), "ok", values, total_iters)


def finite_difference_gradient(f, x, h: float = 1e-6) -> np.ndarray:
    """Central differences of scalar ``f`` at ``x``, one coordinate at a time."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp.flat[i] += h
        xm.flat[i] -= h
        g.flat[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


class DenseTrace:
    """Piecewise dense output stitched across integration breakpoints."""

    def __init__(self, pieces):
        self._pieces = pieces
        self.t = np.concatenate([p.t if i == 0 else p.t[1:] for i, p in enumerate(pieces)])
        self.y = np.concatenate([p.y if i == 0 else p.y[:, 1:] for i, p in enumerate(pieces)], axis=1)

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((self.y.shape[0], t.size))
        for j, tj in enumerate(t):
            for p in self._pieces:
                if tj <= p.t[-1] or p is self._pieces[-1]:
                    out[:, j] = p.sol(tj)
                    break
        return out


def reference_integrate(
    rhs, y0, t_span, tol: float = 1e-10, breakpoints=(), atol=None, max_step_fraction: float = 0.01
) -> DenseTrace:
    """Adaptive explicit 8th-order (DOP853) integration with dense output.

    ``breakpoints`` split the interval where the right-hand side loses
    smoothness, e.g. the end of an input ramp. Steps are capped at
    ``max_step_fraction`` of each piece: the dense interpolant is far less
    accurate than the step endpoints when steps grow long.
    """
    t0, t1 = map(float, t_span)
    cuts = [t0] + sorted(b for b in breakpoints if t0 < b < t1) + [t1]
    y = np.atleast_1d(np.asarray(y0, dtype=float))
    atol = tol * 1e-2 if atol is None else atol
    pieces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        sol = solve_ivp(
            rhs, (a, b), y, method="DOP853", rtol=tol, atol=atol, dense_output=True, max_step=max_step_fraction * (b - a)
        )
        if not sol.success:
            raise NonConvergenceError(f"reference integration failed: {sol.message}", {"t": sol.t[-1]})
        pieces.append(sol)
        y = sol.y[:, -1]
    return DenseTrace(pieces)


def matrix_exponential_2x2(A, t: float) -> np.ndarray:
    """``exp(-t A)`` for a real 2x2 ``A`` in closed form.

    With ``tau = tr(A)/2``, ``D = A - tau I`` and ``D^2 = delta^2 I``:
    ``exp(-tA) = exp(-tau t) [cosh(delta t) I - sinh(delta t)/delta D]``.
    Complex pairs use cos/sin; below ``delta = 1e-12`` this defers to
    scaling and squaring.
    """
    A = np.asarray(A, dtype=float)
    t = float(t)
    tau = 0.5 * np.trace(A)
    D = A - tau * np.eye(2)
    disc = -np.linalg.det(D)
    delta = np.sqrt(abs(disc))
    if delta < 1e-12:
        return scipy.linalg.expm(-t * A)
    I = np.eye(2)
    if disc > 0:
        x = delta * t
        if x <= 20.0:
            decay = np.exp(-tau * t)
            return decay * (np.cosh(x) * I - (np.sinh(x) / delta) * D)
        # split form avoids cosh overflow once exp(-2 delta t) is negligible
        P_slow = 0.5 * (I - D / delta)
        P_fast = 0.5 * (I + D / delta)
        return np.exp(-(tau - delta) * t) * P_slow + np.exp(-(tau + delta) * t) * P_fast
    return np.exp(-tau * t) * (np.cos(delta * t) * I - (np.sin(delta * t) / delta) * D)
