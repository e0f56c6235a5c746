"""Contact couple/force and natural-configuration evolution laws.

All relations follow from maximizing the total dissipation rate subject to
the reduced energy balance. Two admissible spaces give two evolution laws:

* ``NaturalVariant.LOCAL``: the natural strains evolve pointwise,
  ``M_d du_d/dt = -d psi/du_d``.
* ``NaturalVariant.UNIFORM``: the natural strains stay homogeneous and evolve
  with the length-averaged gradient, ``M_d du_d/dt = -(1/L) int d psi/du_d ds``.

The choice is deliberately left to the caller; there is no default.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .energetics import (
    E3,
    DissipationTensors,
    EnergyModel,
    NaturalVariant,
    _uniform_tensor,
    energy_grad,
    inv_sqrt,
    solve_spd,
)
from .errors import MissingContextError, PreconditionError
from .grid import RodGrid

CONSTRAINT_ATOL = 1e-12


class Constraint(str, Enum):
    FREE = "free"
    UNSHEARABLE = "unshearable"
    INEXTENSIBLE_UNSHEARABLE = "inextensible_unshearable"


@dataclass(frozen=True)
class ConstitutiveVariant:
    natural: NaturalVariant
    constraint: Constraint

    def __post_init__(self):
        object.__setattr__(self, "natural", NaturalVariant(self.natural))
        object.__setattr__(self, "constraint", Constraint(self.constraint))


class _Indeterminate:
    """Marker for a reaction component not fixed by the constitutive law."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INDETERMINATE"

    def __bool__(self):
        raise TypeError("an indeterminate reaction has no truth value")


INDETERMINATE = _Indeterminate()


@dataclass(frozen=True)
class WrenchComponents:
    """Director components of the contact couple ``m`` and force ``n``.

    For constrained rods some entries of ``n`` are :data:`INDETERMINATE`;
    ``m`` and ``n`` are then tuples of per-direction entries rather than
    arrays.
    """

    m: object
    n: object

    def determined(self, which: str = "n") -> tuple[bool, bool, bool]:
        comps = getattr(self, which)
        if isinstance(comps, np.ndarray):
            return (True, True, True)
        return tuple(c is not INDETERMINATE for c in comps)


def _matvec(T, x):
    return np.einsum("...ij,...j->...i", np.asarray(T, float), np.asarray(x, float))


def contact_wrench(model: EnergyModel, tensors: DissipationTensors, u_d, v_d, u, v, du_dt, dv_dt):
    """``m = d psi/du + M du/dt`` and ``n = d psi/dv + N dv/dt``."""
    _, _, g_u, g_v = energy_grad(model, u_d, v_d, u, v)
    return WrenchComponents(m=g_u + _matvec(tensors.M, du_dt), n=g_v + _matvec(tensors.N, dv_dt))


def natural_rate_local(model: EnergyModel, tensors: DissipationTensors, u_d, v_d, u, v):
    """Pointwise evolution law: solve ``M_d x = -d psi/du_d`` and ``N_d y = -d psi/dv_d``."""
    g_ud, g_vd, _, _ = energy_grad(model, u_d, v_d, u, v)
    return solve_spd(tensors.M_d, -g_ud), solve_spd(tensors.N_d, -g_vd)


def _uniform_natural(x, name, grid):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x
    if x.shape != (grid.n_nodes, 3):
        raise PreconditionError(f"{name} must be (3,) or ({grid.n_nodes}, 3)")
    if np.max(np.abs(x - x[0])) > 1e-10:
        raise PreconditionError(f"{name} is not homogeneous along the rod")
    return x[0]


def natural_rate_uniform(model: EnergyModel, tensors: DissipationTensors, grid: RodGrid, u_d, v_d, u, v):
    """Homogeneous evolution law driven by the length-averaged gradients.

    ``u_d``/``v_d`` may be single 3-vectors or nodal fields that are
    constant along the rod; ``u``/``v`` are nodal ``(N, 3)`` fields.
    """
    if grid is None:
        raise MissingContextError("the uniform law needs the grid")
    u_d = _uniform_natural(u_d, "u_d", grid)
    v_d = _uniform_natural(v_d, "v_d", grid)
    shape = (grid.n_nodes, 3)
    g_ud, g_vd, _, _ = energy_grad(model, np.broadcast_to(u_d, shape), np.broadcast_to(v_d, shape), u, v)
    M_d, N_d = _uniform_tensor(tensors.M_d), _uniform_tensor(tensors.N_d)
    return (
        solve_spd(M_d, -grid.integrate(g_ud) / grid.length),
        solve_spd(N_d, -grid.integrate(g_vd) / grid.length),
    )


def natural_rates(variant: NaturalVariant, model, tensors, u_d, v_d, u, v, grid: RodGrid | None = None):
    variant = NaturalVariant(variant)
    if variant is NaturalVariant.LOCAL:
        return natural_rate_local(model, tensors, u_d, v_d, u, v)
    return natural_rate_uniform(model, tensors, grid, u_d, v_d, u, v)


@dataclass(frozen=True)
class ConstrainedResponse:
    wrench: WrenchComponents
    du_d_dt: np.ndarray
    dv_d_dt: np.ndarray


def _require(cond, message):
    if not cond:
        raise PreconditionError(message)


def constrained_wrench_and_rates(
    variant: ConstitutiveVariant,
    model: EnergyModel,
    tensors: DissipationTensors,
    u_d,
    v_d,
    u,
    v,
    du_dt,
    dv_dt,
    grid: RodGrid | None = None,
) -> ConstrainedResponse:
    """Constitutive response of an unshearable or inextensible-unshearable rod.

    Unshearable rods (``v_1 = v_2 = v_d1 = v_d2 = 0``) have reactive shear
    forces ``n_1, n_2``; the tension is ``n_3 = d psi/dv_3 + N_33 dv_3/dt`` and
    only ``(u_d, v_d3)`` evolve. Inextensible-unshearable rods
    (``v = v_d = e_3``) have a fully reactive force and only ``u_d`` evolves.
    The reactive entries are :data:`INDETERMINATE`.
    """
    if variant.constraint is Constraint.FREE:
        wrench = contact_wrench(model, tensors, u_d, v_d, u, v, du_dt, dv_dt)
        du_d, dv_d = natural_rates(variant.natural, model, tensors, u_d, v_d, u, v, grid)
        return ConstrainedResponse(wrench, du_d, dv_d)

    v = np.asarray(v, dtype=float)
    v_d = np.asarray(v_d, dtype=float)
    dv_dt = np.zeros_like(v) if dv_dt is None else np.asarray(dv_dt, dtype=float)
    shear = np.max(np.abs(np.concatenate([v[..., :2].ravel(), v_d[..., :2].ravel()])))
    _require(shear <= CONSTRAINT_ATOL, f"unshearable constraint violated (|v_1|, |v_2| up to {shear:.3e})")
    _require(np.max(np.abs(dv_dt[..., :2])) <= CONSTRAINT_ATOL, "shear rates must vanish on an unshearable rod")

    if variant.constraint is Constraint.INEXTENSIBLE_UNSHEARABLE:
        stretch = max(np.max(np.abs(v[..., 2] - 1.0)), np.max(np.abs(v_d[..., 2] - 1.0)))
        _require(stretch <= CONSTRAINT_ATOL, f"inextensibility violated (|v_3 - 1| up to {stretch:.3e})")
        _require(np.max(np.abs(dv_dt)) <= CONSTRAINT_ATOL, "stretch rate must vanish on an inextensible rod")

    g_ud, g_vd, g_u, g_v = _constrained_gradients(variant, model, u_d, v_d, u, v, grid)
    m = g_u + _matvec(tensors.M, du_dt)
    M_d = tensors.M_d
    N_d = tensors.N_d
    if variant.natural is NaturalVariant.UNIFORM:
        M_d, N_d = _uniform_tensor(M_d), _uniform_tensor(N_d)
    du_d = solve_spd(M_d, -g_ud)
    dv_d = np.zeros(np.shape(du_d))
    if variant.constraint is Constraint.UNSHEARABLE:
        N33 = np.asarray(tensors.N)[..., 2, 2]
        n3 = g_v[..., 2] + N33 * dv_dt[..., 2]
        n = (INDETERMINATE, INDETERMINATE, n3)
        dv_d[..., 2] = -g_vd[..., 2] / np.asarray(N_d)[..., 2, 2]
    else:
        n = (INDETERMINATE, INDETERMINATE, INDETERMINATE)
    return ConstrainedResponse(WrenchComponents(m=m, n=n), du_d, dv_d)


def _constrained_gradients(variant, model, u_d, v_d, u, v, grid):
    """Energy gradients, integrated over the rod for the natural ones if uniform."""
    if variant.natural is NaturalVariant.LOCAL:
        return energy_grad(model, u_d, v_d, u, v)
    if grid is None:
        raise MissingContextError("the uniform law needs the grid")
    shape = (grid.n_nodes, 3)
    u_d = np.broadcast_to(_uniform_natural(u_d, "u_d", grid), shape)
    v_d = np.broadcast_to(_uniform_natural(v_d, "v_d", grid), shape)
    g_ud, g_vd, g_u, g_v = energy_grad(model, u_d, v_d, u, v)
    return grid.integrate(g_ud) / grid.length, grid.integrate(g_vd) / grid.length, g_u, g_v


# --- maximization of the total dissipation rate ---------------------------


def _targets(model, m, n, state):
    g_ud, g_vd, g_u, g_v = energy_grad(model, *state)
    return np.asarray(m, float) - g_u, np.asarray(n, float) - g_v, g_ud, g_vd


def maximizer_rates(model, tensors: DissipationTensors, grid: RodGrid, m, n, state, variant: NaturalVariant):
    """Strain rates selected by the maximization principle.

    Inverts the wrench relations for ``(du, dv)`` and applies the evolution
    law of ``variant`` for ``(du_d, dv_d)``. Under ``UNIFORM`` the natural
    rates are single 3-vectors.
    """
    a, b, g_ud, g_vd = _targets(model, m, n, state)
    du = solve_spd(tensors.M, a)
    dv = solve_spd(tensors.N, b)
    if NaturalVariant(variant) is NaturalVariant.LOCAL:
        return solve_spd(tensors.M_d, -g_ud), solve_spd(tensors.N_d, -g_vd), du, dv
    M_d, N_d = _uniform_tensor(tensors.M_d), _uniform_tensor(tensors.N_d)
    return (
        solve_spd(M_d, -grid.integrate(g_ud) / grid.length),
        solve_spd(N_d, -grid.integrate(g_vd) / grid.length),
        du,
        dv,
    )


def _sq_norm_inv_sqrt(T, x):
    y = np.einsum("...ij,...j->...i", inv_sqrt(T), x)
    return np.sum(y * y, axis=-1)


def maximizer_value(model, tensors: DissipationTensors, grid: RodGrid, m, n, state, variant: NaturalVariant):
    """Closed-form maximum of the total dissipation rate.

    ``LOCAL``: ``int |M^-1/2 (m - psi_u)|^2 + |N^-1/2 (n - psi_v)|^2
    + |M_d^-1/2 psi_ud|^2 + |N_d^-1/2 psi_vd|^2 ds``.

    ``UNIFORM``: the first two terms are integrated as above and the natural
    terms become ``|M_d^-1/2 int psi_ud ds|^2 / L`` (likewise for ``v_d``).
    """
    if grid is None:
        raise MissingContextError("maximizer_value integrates over the grid")
    a, b, g_ud, g_vd = _targets(model, m, n, state)
    current = _sq_norm_inv_sqrt(tensors.M, a) + _sq_norm_inv_sqrt(tensors.N, b)
    if NaturalVariant(variant) is NaturalVariant.LOCAL:
        return float(grid.integrate(current + _sq_norm_inv_sqrt(tensors.M_d, g_ud) + _sq_norm_inv_sqrt(tensors.N_d, g_vd)))
    M_d, N_d = _uniform_tensor(tensors.M_d), _uniform_tensor(tensors.N_d)
    G = grid.integrate(g_ud)
    H = grid.integrate(g_vd)
    return float(grid.integrate(current) + (_sq_norm_inv_sqrt(M_d, G) + _sq_norm_inv_sqrt(N_d, H)) / grid.length)


def constraint_rhs(model, grid: RodGrid, m, n, state, rates):
    """Right side of the energy-balance constraint,
    ``int (m - psi_u).du + (n - psi_v).dv - psi_ud.du_d - psi_vd.dv_d ds``."""
    a, b, g_ud, g_vd = _targets(model, m, n, state)
    du_d, dv_d, du, dv = (np.asarray(r, dtype=float) for r in rates)
    integrand = (
        np.sum(a * du, axis=-1)
        + np.sum(b * dv, axis=-1)
        - np.sum(g_ud * du_d, axis=-1)
        - np.sum(g_vd * dv_d, axis=-1)
    )
    return float(grid.integrate(np.broadcast_to(integrand, (grid.n_nodes,))))


def rest_state(n_nodes: int | None = None):
    """Natural and current strains of a straight, unstressed rod."""
    zero = np.zeros(3) if n_nodes is None else np.zeros((n_nodes, 3))
    e3 = E3.copy() if n_nodes is None else np.tile(E3, (n_nodes, 1))
    return zero, e3, zero.copy(), e3.copy()
