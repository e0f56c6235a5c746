"""Reusable verification scenarios shared by the command line and the tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constitutive import constraint_rhs, maximizer_rates, maximizer_value
from .energetics import (
    DissipationTensors,
    NaturalVariant,
    QuadraticEnergy,
    energy_grad,
    pointwise_dissipation,
    total_dissipation,
)
from .grid import RodGrid
from .oracle import DiscreteMaximizationInstance, MaximizationSpace, brute_force_maximize


def random_spd(rng, max_condition=1e3, size=None):
    """Random SPD 3x3 matrices with eigenvalues log-uniform in ``[1, max_condition]``."""
    from .kinematics import random_rotation

    shape = () if size is None else (size,)
    Q = random_rotation(rng, size)
    lam = np.exp(rng.uniform(0.0, np.log(max_condition), shape + (3,)))
    # pin the extremes so the condition number actually reaches the bound
    lam[..., 0] = 1.0
    lam[..., 1] = max_condition
    return (Q * lam[..., None, :]) @ np.swapaxes(Q, -1, -2)


def random_quadratic_energy(rng) -> QuadraticEnergy:
    return QuadraticEnergy(*(rng.uniform(0.5, 2.0, 3) for _ in range(4)))


def random_state(rng, n_nodes):
    u_d = rng.standard_normal((n_nodes, 3))
    v_d = rng.standard_normal((n_nodes, 3))
    u = rng.standard_normal((n_nodes, 3))
    v = rng.standard_normal((n_nodes, 3))
    v_d[:, 2] = np.abs(v_d[:, 2]) + 0.1
    v[:, 2] = np.abs(v[:, 2]) + 0.1
    return u_d, v_d, u, v


@dataclass
class MaximizerCase:
    n_nodes: int
    variant: NaturalVariant
    value_closed: float
    value_brute: float
    value_gap: float  # (brute - closed) / closed
    argmax_error: float
    constraint_residual: float
    status: str

    def passed(self) -> bool:
        return (
            self.status == "ok"
            and -1e-6 <= self.value_gap <= 1e-8
            and self.argmax_error < 1e-4
            and self.constraint_residual < 1e-10
        )


def maximizer_case(rng, n_nodes: int, variant: NaturalVariant, max_condition=1e3, restarts=50, seed=0) -> MaximizerCase:
    """Compare the closed-form maximizer against brute-force search on one random instance."""
    variant = NaturalVariant(variant)
    grid = RodGrid(n_nodes)
    model = random_quadratic_energy(rng)
    M = random_spd(rng, max_condition, n_nodes)
    N = random_spd(rng, max_condition, n_nodes)
    if variant is NaturalVariant.LOCAL:
        M_d = random_spd(rng, max_condition, n_nodes)
        N_d = random_spd(rng, max_condition, n_nodes)
    else:
        M_d = np.broadcast_to(random_spd(rng, max_condition), (n_nodes, 3, 3)).copy()
        N_d = np.broadcast_to(random_spd(rng, max_condition), (n_nodes, 3, 3)).copy()
    tensors = DissipationTensors(M, N, M_d, N_d)
    state = list(random_state(rng, n_nodes))
    # the uniform law acts on homogeneous natural strains
    if variant is NaturalVariant.UNIFORM:
        state[0] = np.broadcast_to(state[0][0], (n_nodes, 3)).copy()
        state[1] = np.broadcast_to(state[1][0], (n_nodes, 3)).copy()
    state = tuple(state)
    m = rng.standard_normal((n_nodes, 3))
    n = rng.standard_normal((n_nodes, 3))

    rates = maximizer_rates(model, tensors, grid, m, n, state, variant)
    value = maximizer_value(model, tensors, grid, m, n, state, variant)
    F = total_dissipation(tensors, grid, rates)
    rhs = constraint_rhs(model, grid, m, n, state, rates)
    residual = abs(F - rhs) / max(abs(F), 1e-300)

    g_ud, g_vd, g_u, g_v = energy_grad(model, *state)
    inst = DiscreteMaximizationInstance(
        weights=grid.weights,
        M=M,
        N=N,
        M_d=M_d,
        N_d=N_d,
        target_u=m - g_u,
        target_v=n - g_v,
        grad_ud=g_ud,
        grad_vd=g_vd,
        space=MaximizationSpace.FULL_L2 if variant is NaturalVariant.LOCAL else MaximizationSpace.UNIFORM_NATURAL,
    )
    bf = brute_force_maximize(inst, restarts=restarts, seed=seed)
    x_closed = inst.flatten(rates)
    err = float(np.linalg.norm(bf.x - x_closed) / np.linalg.norm(x_closed)) if bf.status == "ok" else np.nan
    return MaximizerCase(
        n_nodes=n_nodes,
        variant=variant,
        value_closed=value,
        value_brute=bf.value,
        value_gap=(bf.value - value) / value,
        argmax_error=err,
        constraint_residual=residual,
        status=bf.status,
    )


def maximizer_suite(seed=0, n_cases=20, restarts=50):
    """Half the cases at 4 nodes and half at 8, alternating the two natural variants."""
    rng = np.random.default_rng(seed)
    cases = []
    for k in range(n_cases):
        n_nodes = 4 if k < n_cases // 2 else 8
        variant = NaturalVariant.LOCAL if k % 2 == 0 else NaturalVariant.UNIFORM
        cases.append(maximizer_case(rng, n_nodes, variant, restarts=restarts, seed=seed + k))
    return cases


@dataclass
class CounterexampleResult:
    s: np.ndarray
    u: np.ndarray
    xi: np.ndarray
    s0_index: int
    xi_s0: float
    predicted_xi_s0: float
    integral_xi: float

    def passed(self, atol=1e-12) -> bool:
        return self.xi_s0 < 0 and self.integral_xi >= -atol


def counterexample(n_nodes=201, A33=1.0, M_d33=1.0, s0=0.1, profile=None) -> CounterexampleResult:
    """Pointwise dissipation under the uniform law can be negative.

    Rod at rest (``du/dt = dv/dt = 0``), ``u_d = 0``, ``v_d = v = e3`` and
    ``u = u(s) e3`` with ``u(s0) > 0`` but ``int u ds < 0``. Then
    ``xi(s0) = (A33^2 / M_d33) u(s0) (1/L) int u ds``. The default profile is
    ``u(s) = cos(pi s) - 0.5``.
    """
    grid = RodGrid(n_nodes)
    s = grid.nodes
    prof = profile if profile is not None else (lambda x: np.cos(np.pi * x) - 0.5)
    u_fun = np.asarray(prof(s), dtype=float)
    model = QuadraticEnergy(A=[1.0, 1.0, A33], B=1.0, A_d=1.0, B_d=1.0)
    eye = np.eye(3)
    tensors = DissipationTensors(eye, eye, np.diag([1.0, 1.0, M_d33]), eye)
    zeros = np.zeros((n_nodes, 3))
    e3 = np.tile([0.0, 0.0, 1.0], (n_nodes, 1))
    u = zeros.copy()
    u[:, 2] = u_fun
    state = (zeros, e3, u, e3)
    xi = pointwise_dissipation(model, tensors, state, (None, None, zeros, zeros), NaturalVariant.UNIFORM, grid)
    i0 = int(np.argmin(np.abs(s - s0)))
    exact_integral = _profile_integral(prof, grid.length)
    predicted = A33**2 / M_d33 * u_fun[i0] * exact_integral / grid.length
    return CounterexampleResult(
        s=s,
        u=u_fun,
        xi=xi,
        s0_index=i0,
        xi_s0=float(xi[i0]),
        predicted_xi_s0=float(predicted),
        integral_xi=float(grid.integrate(xi)),
    )


def _profile_integral(prof, L):
    from scipy.integrate import quad

    val, _ = quad(prof, 0.0, L, epsabs=1e-14, epsrel=1e-14)
    return val


def local_dissipation_min(seed=0, n_states=100, n_nodes=8):
    """Smallest pointwise dissipation under the local law over random states
    with rates from the maximizer."""
    rng = np.random.default_rng(seed)
    grid = RodGrid(n_nodes)
    worst = np.inf
    for _ in range(n_states):
        model = random_quadratic_energy(rng)
        tensors = DissipationTensors(*(random_spd(rng, 1e3, n_nodes) for _ in range(4)))
        state = random_state(rng, n_nodes)
        m = rng.standard_normal((n_nodes, 3))
        n = rng.standard_normal((n_nodes, 3))
        rates = maximizer_rates(model, tensors, grid, m, n, state, NaturalVariant.LOCAL)
        xi = pointwise_dissipation(model, tensors, state, rates, NaturalVariant.LOCAL, grid)
        worst = min(worst, float(np.min(xi)))
    return worst
