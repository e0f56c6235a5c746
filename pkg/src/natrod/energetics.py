"""Helmholtz free energy, dissipation tensors and dissipation rates.

Strain arguments are director components and broadcast over leading axes,
so the same functions serve a single material point (shape ``(3,)``) and a
whole grid (shape ``(N, 3)``).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import InvalidParameterError, MissingContextError, PreconditionError
from .grid import RodGrid

E3 = np.array([0.0, 0.0, 1.0])
SPD_TOL = 1e-10


class NaturalVariant(str, Enum):
    """Space in which the strain rates maximize the total dissipation rate."""

    LOCAL = "local"
    UNIFORM = "uniform"


def _diag3(x, name):
    x = np.array(x, dtype=float).reshape(-1)
    if x.size == 1:
        x = np.repeat(x, 3)
    if x.shape != (3,) or not np.all(x > 0):
        raise InvalidParameterError(f"{name} must be three positive coefficients, got {x!r}")
    x.setflags(write=False)
    return x


@dataclass(frozen=True)
class QuadraticEnergy:
    """Diagonal quadratic free energy

    ``psi = 1/2 sum_k [A_k (u_k - u_dk)^2 + B_k (v_k - v_dk)^2
    + Ad_k u_dk^2 + Bd_k (v_dk - delta_3k)^2]``.

    Scalars are broadcast to all three directions.
    """

    A: np.ndarray
    B: np.ndarray
    A_d: np.ndarray
    B_d: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "A_d", "B_d"):
            object.__setattr__(self, name, _diag3(getattr(self, name), name))

    def value(self, u_d, v_d, u, v):
        u_d, v_d, u, v = (np.asarray(x, dtype=float) for x in (u_d, v_d, u, v))
        du = u - u_d
        dv = v - v_d
        return 0.5 * np.sum(
            self.A * du**2 + self.B * dv**2 + self.A_d * u_d**2 + self.B_d * (v_d - E3) ** 2,
            axis=-1,
        )

    def grad(self, u_d, v_d, u, v):
        """``(d psi/d u_d, d psi/d v_d, d psi/d u, d psi/d v)``."""
        u_d, v_d, u, v = (np.asarray(x, dtype=float) for x in (u_d, v_d, u, v))
        g_u = self.A * (u - u_d)
        g_v = self.B * (v - v_d)
        g_ud = -g_u + self.A_d * u_d
        g_vd = -g_v + self.B_d * (v_d - E3)
        return g_ud, g_vd, g_u, g_v


@dataclass(frozen=True)
class CustomEnergy:
    """Caller-supplied energy with its own analytic gradients.

    ``value(u_d, v_d, u, v)`` returns the energy density and ``grad`` the
    four partial gradients in the same order as :meth:`QuadraticEnergy.grad`.
    Validate the pair with :func:`gradient_check` before use.
    """

    value: Callable
    grad: Callable


EnergyModel = QuadraticEnergy | CustomEnergy


def energy_eval(model: EnergyModel, u_d, v_d, u, v):
    return model.value(u_d, v_d, u, v)


def energy_grad(model: EnergyModel, u_d, v_d, u, v):
    return tuple(np.asarray(g, dtype=float) for g in model.grad(u_d, v_d, u, v))


def _random_arguments(rng, scale=1.0):
    u_d = scale * rng.standard_normal(3)
    v_d = scale * rng.standard_normal(3)
    u = scale * rng.standard_normal(3)
    v = scale * rng.standard_normal(3)
    v_d[2] = abs(v_d[2]) + 0.1
    v[2] = abs(v[2]) + 0.1
    return u_d, v_d, u, v


def gradient_check(model: EnergyModel, n_points: int = 100, h: float = 1e-6, seed: int = 0):
    """Worst relative error between analytic and central-difference gradients.

    The error of each 12-component gradient is measured in the max norm and
    scaled by ``max(1, |g|_inf)``.
    """
    from .oracle import finite_difference_gradient

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_points):
        args = _random_arguments(rng)
        x0 = np.concatenate(args)

        def f(x):
            return float(model.value(x[0:3], x[3:6], x[6:9], x[9:12]))

        fd = finite_difference_gradient(f, x0, h)
        an = np.concatenate(energy_grad(model, *args))
        err = np.max(np.abs(fd - an)) / max(1.0, np.max(np.abs(an)))
        worst = max(worst, err)
    return worst


def natural_state_check(model: EnergyModel, n_samples: int = 64, atol: float = 1e-10, seed: int = 0):
    """True iff the couple and force vanish at rest in the natural configuration.

    Samples random natural strains, sets the current strains equal to them
    and requires ``d psi/du = d psi/dv = 0`` to ``atol``.
    """
    rng = np.random.default_rng(seed)
    for _ in range(n_samples):
        u_d, v_d, _, _ = _random_arguments(rng)
        _, _, g_u, g_v = energy_grad(model, u_d, v_d, u_d, v_d)
        if np.max(np.abs(g_u)) > atol or np.max(np.abs(g_v)) > atol:
            return False
    return True


def _check_sym_tensor(T, name, allow_zero=False):
    T = np.array(T, dtype=float)
    if T.ndim == 1 and T.shape == (3,):
        T = np.diag(T)
    if T.shape[-2:] != (3, 3):
        raise InvalidParameterError(f"{name} must be 3x3 (or a stack), got shape {T.shape}")
    if np.max(np.abs(T - np.swapaxes(T, -1, -2))) > 1e-12 * max(1.0, np.max(np.abs(T))):
        raise InvalidParameterError(f"{name} is not symmetric")
    if allow_zero and not np.any(T):
        T.setflags(write=False)
        return T
    lam = np.linalg.eigvalsh(T)
    if np.min(lam) <= SPD_TOL * max(1.0, np.max(np.abs(lam))):
        raise InvalidParameterError(f"{name} is not positive definite (min eigenvalue {np.min(lam):.3e})")
    T.setflags(write=False)
    return T


@dataclass(frozen=True)
class DissipationTensors:
    """Symmetric positive-definite viscosity tensors ``M, N, M_d, N_d``.

    Each may be a single 3x3 matrix, a diagonal given as a 3-vector, or a
    per-node stack of shape ``(N, 3, 3)``. ``allow_zero_current`` admits
    ``M = N = 0``, the hyperelastic limit, which only :func:`contact_wrench`
    accepts meaningfully.
    """

    M: np.ndarray
    N: np.ndarray
    M_d: np.ndarray
    N_d: np.ndarray
    allow_zero_current: bool = False

    def __post_init__(self):
        z = self.allow_zero_current
        object.__setattr__(self, "M", _check_sym_tensor(self.M, "M", allow_zero=z))
        object.__setattr__(self, "N", _check_sym_tensor(self.N, "N", allow_zero=z))
        object.__setattr__(self, "M_d", _check_sym_tensor(self.M_d, "M_d"))
        object.__setattr__(self, "N_d", _check_sym_tensor(self.N_d, "N_d"))

    @classmethod
    def identity(cls) -> "DissipationTensors":
        eye = np.eye(3)
        return cls(eye, eye, eye, eye)


def inv_sqrt(S) -> np.ndarray:
    """``S^(-1/2)`` of an SPD matrix (or stack) by symmetric eigendecomposition."""
    lam, V = np.linalg.eigh(np.asarray(S, dtype=float))
    return (V * (1.0 / np.sqrt(lam))[..., None, :]) @ np.swapaxes(V, -1, -2)


def quad_form(x, T, y=None):
    x = np.asarray(x, dtype=float)
    y = x if y is None else np.asarray(y, dtype=float)
    return np.einsum("...i,...ij,...j->...", x, np.asarray(T, dtype=float), y)


def solve_spd(T, b) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.linalg.solve(T, b[..., None])[..., 0]


def pointwise_dissipation(
    model: EnergyModel,
    tensors: DissipationTensors,
    state,
    rates,
    variant: NaturalVariant,
    grid: RodGrid | None = None,
):
    """Pointwise rescaled entropy production ``xi``.

    Parameters
    ----------
    state : tuple
        ``(u_d, v_d, u, v)``; each ``(3,)`` or ``(N, 3)``.
    rates : tuple
        ``(du_d, dv_d, du, dv)``. Under ``UNIFORM`` the natural rates are
        implied by the evolution law and ignored (pass ``None``).
    variant : NaturalVariant
    grid : RodGrid
        Required for ``UNIFORM``; ``state`` must then hold nodal fields.
    """
    variant = NaturalVariant(variant)
    du_d, dv_d, du, dv = rates
    xi = quad_form(du, tensors.M) + quad_form(dv, tensors.N)
    if variant is NaturalVariant.LOCAL:
        return xi + quad_form(du_d, tensors.M_d) + quad_form(dv_d, tensors.N_d)
    if grid is None:
        raise MissingContextError("the uniform variant needs the grid to integrate gradients")
    g_ud, g_vd, _, _ = energy_grad(model, *state)
    if g_ud.shape != (grid.n_nodes, 3):
        raise PreconditionError("uniform dissipation needs nodal fields of shape (N, 3)")
    M_d, N_d = _uniform_tensor(tensors.M_d), _uniform_tensor(tensors.N_d)
    ud_term = solve_spd(M_d, grid.integrate(g_ud)) / grid.length
    vd_term = solve_spd(N_d, grid.integrate(g_vd)) / grid.length
    return xi + g_ud @ ud_term + g_vd @ vd_term


def _uniform_tensor(T):
    T = np.asarray(T)
    if T.ndim == 3:
        if np.max(np.abs(T - T[0])) > 1e-12 * max(1.0, np.max(np.abs(T))):
            raise PreconditionError("natural viscosity must be uniform under the uniform variant")
        return T[0]
    return T


def total_dissipation(tensors: DissipationTensors, grid: RodGrid, rates):
    """Trapezoid quadrature of ``du.M du + dv.N dv + du_d.M_d du_d + dv_d.N_d dv_d``.

    Natural rates of shape ``(3,)`` are taken as uniform along the rod, which
    is how the uniform variant is evaluated.
    """
    du_d, dv_d, du, dv = (np.asarray(r, dtype=float) for r in rates)
    shape = (grid.n_nodes, 3)
    integrand = (
        quad_form(np.broadcast_to(du, shape), tensors.M)
        + quad_form(np.broadcast_to(dv, shape), tensors.N)
        + quad_form(np.broadcast_to(du_d, shape), tensors.M_d)
        + quad_form(np.broadcast_to(dv_d, shape), tensors.N_d)
    )
    return float(grid.integrate(integrand))
