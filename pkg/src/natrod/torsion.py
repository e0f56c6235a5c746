"""Isolated torsion of a uniform rod with quadratic energy.

Everything here is dimensionless: time in units of ``T``, arclength in
units of ``L``, twist ``u = L u_phys``. The five material numbers are

``nu``       inertia ratio ``(I_11 + I_22) / (rhoA L^2)``
``mu``       viscosity of the current twist ``T M_33 / (rhoA L^4)``
``mu_d``     viscosity of the natural twist ``T M_d33 / (rhoA L^4)``
``alpha``    elastic stiffness ``T^2 A_33 / (rhoA L^4)``
``alpha_d``  stiffness of the natural twist ``T^2 A_d33 / (rhoA L^4)``
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import PchipInterpolator

from .energetics import NaturalVariant
from .errors import InvalidParameterError, NonConvergenceError, PreconditionError
from .grid import RodGrid
from .integrators import tr_bdf2


@dataclass(frozen=True)
class TorsionParams:
    nu: float
    mu: float
    mu_d: float
    alpha: float
    alpha_d: float

    def __post_init__(self):
        for name in ("nu", "mu", "mu_d", "alpha", "alpha_d"):
            val = float(getattr(self, name))
            if not np.isfinite(val):
                raise InvalidParameterError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if self.nu < 0 or self.mu < 0:
            raise InvalidParameterError(f"nu and mu must be >= 0 (nu={self.nu}, mu={self.mu})")
        for name in ("mu_d", "alpha", "alpha_d"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def relaxation_rate(self) -> float:
        """Decay rate ``(alpha + alpha_d) / mu_d`` of the natural twist at fixed twist."""
        return (self.alpha + self.alpha_d) / self.mu_d

    def creep_matrix(self) -> np.ndarray:
        """``A`` in ``d/dt (u, u_d) = -A (u, u_d) + (m/mu, 0)``."""
        if self.mu == 0:
            raise PreconditionError("the creep matrix needs mu > 0; use creep_mu_zero")
        a, ad, mu, mud = self.alpha, self.alpha_d, self.mu, self.mu_d
        return np.array([[a / mu, -a / mu], [-a / mud, (a + ad) / mud]])

    def creep_delta(self) -> float:
        """``|det(A - tr(A)/2 I)|^(1/2)``."""
        a, ad, mu, mud = self.alpha, self.alpha_d, self.mu, self.mu_d
        return float(np.sqrt((a / (2 * mu) - (a + ad) / (2 * mud)) ** 2 + a * a / (mu * mud)))


def nondimensionalize(L, T, rhoA, I11, I22, M33, M_d33, A33, A_d33) -> TorsionParams:
    """Dimensionless torsion parameters from physical rod data."""
    for name, val in (("L", L), ("T", T), ("rhoA", rhoA)):
        if not val > 0:
            raise InvalidParameterError(f"{name} must be positive, got {val}")
    L4 = rhoA * L**4
    return TorsionParams(
        nu=(I11 + I22) / (rhoA * L**2),
        mu=T * M33 / L4,
        mu_d=T * M_d33 / L4,
        alpha=T**2 * A33 / L4,
        alpha_d=T**2 * A_d33 / L4,
    )


def redimensionalize(params: TorsionParams, L, T, rhoA) -> dict:
    """Inverse of :func:`nondimensionalize` given the three scales.

    Only the sum ``I_11 + I_22`` is recoverable.
    """
    L4 = rhoA * L**4
    return {
        "I_sum": params.nu * rhoA * L**2,
        "M33": params.mu * L4 / T,
        "M_d33": params.mu_d * L4 / T,
        "A33": params.alpha * L4 / T**2,
        "A_d33": params.alpha_d * L4 / T**2,
    }


def circular_section(radius, rhoA) -> tuple[float, float]:
    """Second mass moments ``(I_11, I_22)`` of a solid circular section."""
    I = rhoA * radius**2 / 4.0
    return I, I


# --- input histories --------------------------------------------------------


class HistoryKind(str, Enum):
    TWIST = "twist"
    TORQUE = "torque"


@dataclass(frozen=True)
class SmoothedStep:
    """C^1 non-decreasing ramp ``amplitude * (3x^2 - 2x^3)``, ``x = t/ramp``.

    ``ramp_duration = 0`` is the ideal step, handled in closed form by the
    response functions and never sampled through derivatives.
    """

    amplitude: float
    ramp_duration: float = 1e-3

    def __post_init__(self):
        if self.ramp_duration < 0:
            raise InvalidParameterError("ramp_duration must be >= 0")

    @property
    def is_ideal(self) -> bool:
        return self.ramp_duration == 0

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_ideal:
            return np.where(t >= 0, self.amplitude, 0.0)
        x = np.clip(t / self.ramp_duration, 0.0, 1.0)
        return self.amplitude * x * x * (3.0 - 2.0 * x)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_ideal:
            raise PreconditionError("the ideal step has no classical derivative")
        x = np.clip(t / self.ramp_duration, 0.0, 1.0)
        return self.amplitude * 6.0 * x * (1.0 - x) / self.ramp_duration

    @property
    def breakpoints(self):
        return () if self.is_ideal else (self.ramp_duration,)


@dataclass(frozen=True)
class Tabulated:
    """Monotone-cubic (PCHIP) interpolation of samples starting at ``t = 0``.

    Held at the last sample beyond the table, zero for negative time.
    """

    times: tuple
    values: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise InvalidParameterError("tabulated history needs >= 2 matching samples")
        if t[0] != 0 or np.any(np.diff(t) <= 0):
            raise InvalidParameterError("sample times must start at 0 and increase strictly")
        object.__setattr__(self, "times", tuple(t))
        object.__setattr__(self, "values", tuple(v))
        object.__setattr__(self, "_interp", PchipInterpolator(t, v, extrapolate=False))

    def value(self, t):
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, 0.0, self.times[-1])
        return np.where(t < 0, 0.0, self._interp(tc))

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= 0) & (t <= self.times[-1])
        return np.where(inside, self._interp.derivative()(np.clip(t, 0.0, self.times[-1])), 0.0)

    @property
    def breakpoints(self):
        return tuple(self.times[1:])

    @property
    def is_ideal(self):
        return False


@dataclass(frozen=True)
class ZeroForNegativeTime:
    """Arbitrary differentiable waveform ``f`` forced to zero for ``t < 0``."""

    f: Callable
    df: Callable

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0, 0.0, self.f(np.maximum(t, 0.0)))

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0, 0.0, self.df(np.maximum(t, 0.0)))

    breakpoints = ()
    is_ideal = False


@dataclass(frozen=True)
class InputHistory:
    kind: HistoryKind
    waveform: SmoothedStep | Tabulated | ZeroForNegativeTime

    def __post_init__(self):
        object.__setattr__(self, "kind", HistoryKind(self.kind))

    def __call__(self, t):
        return self.waveform.value(t)

    @classmethod
    def twist_step(cls, u0, ramp_duration=0.0):
        return cls(HistoryKind.TWIST, SmoothedStep(u0, ramp_duration))

    @classmethod
    def torque_step(cls, m0, ramp_duration=0.0):
        return cls(HistoryKind.TORQUE, SmoothedStep(m0, ramp_duration))


def _require_kind(history, kind):
    if history.kind is not kind:
        raise PreconditionError(f"expected a {kind.value} history, got {history.kind.value}")


# --- exponential-kernel recursion -------------------------------------------


def _kernel_weights(lam, h):
    """Weights ``(w_prev, w_next)`` with
    ``int_0^h exp(-lam (h - s)) f(s) ds = w_prev f(0) + w_next f(h)`` for linear ``f``.
    """
    lam = np.asarray(lam, dtype=float)
    x = lam * h
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    # int_0^h e^{-lam(h-s)} ds and (1/h) int_0^h e^{-lam(h-s)} s ds
    c0 = np.where(small, h * (1 - x / 2 + x * x / 6 - x**3 / 24), -np.expm1(-xs) / np.where(small, 1.0, lam))
    c1 = np.where(
        small,
        h * (0.5 - x / 6 + x * x / 24 - x**3 / 120),
        (xs + np.expm1(-xs)) / (np.where(small, 1.0, lam) * xs),
    )
    return c0 - c1, c1


def _time_grid(times, history, refine=400, max_step=None):
    """Requested times merged with a fine grid over input transients."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(times < 0):
        raise PreconditionError("times must be a non-empty 1-D array of t >= 0")
    pts = [np.array([0.0]), times]
    bps = [b for b in history.waveform.breakpoints if b <= times.max()]
    prev = 0.0
    for b in bps:
        pts.append(np.linspace(prev, b, refine + 1))
        prev = b
    if isinstance(history.waveform, ZeroForNegativeTime):
        pts.append(np.linspace(0.0, times.max(), 20 * refine + 1))
    grid = np.unique(np.concatenate(pts))
    if max_step is not None:
        fill = [grid[:1]]
        for a, b in zip(grid[:-1], grid[1:]):
            k = int(np.ceil((b - a) / max_step))
            fill.append(np.linspace(a, b, k + 1)[1:])
        grid = np.concatenate(fill)
    return grid


@dataclass
class TorsionTrace:
    """Sampled response. ``m_impulse_amplitude`` is the weight of a Dirac
    impulse at ``t = 0`` carried separately from the regular samples."""

    t: np.ndarray
    u: np.ndarray
    u_d: np.ndarray
    m_regular: np.ndarray
    m_impulse_amplitude: float = 0.0


def quasistatic_rhs(params: TorsionParams, u, u_d, m):
    """Rates ``(du/dt, du_d/dt)`` of the homogeneous quasi-static problem."""
    if params.mu == 0:
        raise PreconditionError("quasistatic_rhs divides by mu; use creep_mu_zero when mu = 0")
    a, ad = params.alpha, params.alpha_d
    return (m - a * u + a * u_d) / params.mu, (a * u - (a + ad) * u_d) / params.mu_d


def relaxation_response(params: TorsionParams, history: InputHistory, times) -> TorsionTrace:
    """Torque needed to impose the twist history ``history``.

    For an ideal step of size ``u0`` the regular part is
    ``alpha alpha_d u0/(alpha+alpha_d) + alpha^2 u0 exp(-lam t)/(alpha+alpha_d)``
    with ``lam = (alpha+alpha_d)/mu_d``, and the impulse ``mu u0 delta(t)`` is
    reported through ``m_impulse_amplitude``. Smooth histories use the exact
    exponential-kernel recursion for the natural twist on a grid refined
    over the ramp; samples are returned at ``times`` only.
    """
    _require_kind(history, HistoryKind.TWIST)
    p = params
    times = np.asarray(times, dtype=float)
    lam = p.relaxation_rate
    a, ad = p.alpha, p.alpha_d
    if history.waveform.is_ideal:
        u0 = history.waveform.amplitude
        decay = np.exp(-lam * times)
        u = np.full_like(times, u0)
        u_d = a / (a + ad) * u0 * (1.0 - decay)
        m = a * ad / (a + ad) * u0 + a * a / (a + ad) * u0 * decay
        return TorsionTrace(times, u, u_d, m, p.mu * u0)

    grid = _time_grid(times, history, max_step=0.02 / lam)
    u_g = history(grid)
    integral = np.zeros_like(grid)
    for k, h in enumerate(np.diff(grid)):
        w0, w1 = _kernel_weights(lam, h)
        integral[k + 1] = np.exp(-lam * h) * integral[k] + w0 * u_g[k] + w1 * u_g[k + 1]
    idx = np.searchsorted(grid, times)
    u = u_g[idx]
    u_d = a / p.mu_d * integral[idx]
    m = p.mu * history.waveform.derivative(times) + a * u - a * u_d
    return TorsionTrace(times, u, u_d, m, 0.0)


def creep_response(params: TorsionParams, history: InputHistory, times) -> TorsionTrace:
    """Twist and natural twist under the torque history ``history`` (``mu > 0``).

    The ideal step gives ``(I - exp(-tA)) A^-1 (m0/mu, 0)`` with the 2x2
    exponential in closed form. Smooth histories use the exact recursion for
    piecewise-linear forcing through the eigen-decomposition of ``A``.
    """
    from .oracle import matrix_exponential_2x2

    _require_kind(history, HistoryKind.TORQUE)
    if params.mu == 0:
        raise PreconditionError("creep_response needs mu > 0; use creep_mu_zero")
    A = params.creep_matrix()
    times = np.asarray(times, dtype=float)
    if history.waveform.is_ideal:
        m0 = history.waveform.amplitude
        x_inf = np.linalg.solve(A, np.array([m0 / params.mu, 0.0]))
        X = np.array([x_inf - matrix_exponential_2x2(A, t) @ x_inf for t in times])
        return TorsionTrace(times, X[:, 0], X[:, 1], history(times), 0.0)

    lam, V = np.linalg.eig(A)
    if np.any(np.abs(lam.imag) > 0):
        raise PreconditionError("creep matrix has complex eigenvalues")
    lam, V = lam.real, V.real
    Vinv = np.linalg.inv(V)
    slowest = float(np.min(lam))
    grid = _time_grid(times, history, max_step=0.02 / slowest)
    b = np.zeros((grid.size, 2))
    b[:, 0] = history(grid) / params.mu
    xs = np.zeros((grid.size, 2))
    # recursion in eigen-coordinates, where each mode is a scalar kernel
    zb = b @ Vinv.T
    z = np.zeros(2)
    for k, h in enumerate(np.diff(grid)):
        w0, w1 = _kernel_weights(lam, h)
        z = np.exp(-lam * h) * z + w0 * zb[k] + w1 * zb[k + 1]
        xs[k + 1] = V @ z
    idx = np.searchsorted(grid, times)
    return TorsionTrace(times, xs[idx, 0], xs[idx, 1], history(times), 0.0)


def creep_mu_zero(params: TorsionParams, history: InputHistory, times) -> TorsionTrace:
    """Creep without current-twist viscosity.

    ``mu_d du_d/dt + alpha_d u_d = m`` and ``u = m/alpha + u_d``; for a step
    ``u_d = (m0/alpha_d)(1 - exp(-alpha_d t/mu_d))``.
    """
    _require_kind(history, HistoryKind.TORQUE)
    if params.mu != 0:
        raise PreconditionError("creep_mu_zero requires mu = 0")
    a, ad, mud = params.alpha, params.alpha_d, params.mu_d
    lam = ad / mud
    times = np.asarray(times, dtype=float)
    m = history(times)
    if history.waveform.is_ideal:
        m0 = history.waveform.amplitude
        u_d = m0 / ad * (-np.expm1(-lam * times))
        return TorsionTrace(times, m / a + u_d, u_d, m, 0.0)
    grid = _time_grid(times, history, max_step=0.02 / lam)
    m_g = history(grid)
    integral = np.zeros_like(grid)
    for k, h in enumerate(np.diff(grid)):
        w0, w1 = _kernel_weights(lam, h)
        integral[k + 1] = np.exp(-lam * h) * integral[k] + w0 * m_g[k] + w1 * m_g[k + 1]
    u_d = integral[np.searchsorted(grid, times)] / mud
    return TorsionTrace(times, m / a + u_d, u_d, m, 0.0)


# --- dynamic problem --------------------------------------------------------


@dataclass(frozen=True)
class DynamicState:
    """Nodal angle ``phi`` and angular velocity ``omega`` (both with value 0 at
    ``s = 0``) and the natural twist: one value per cell for the local law,
    a single scalar for the uniform law."""

    phi: np.ndarray
    omega: np.ndarray
    u_d: np.ndarray

    @classmethod
    def quiescent(cls, n_nodes: int, variant: NaturalVariant) -> "DynamicState":
        n_ud = n_nodes - 1 if NaturalVariant(variant) is NaturalVariant.LOCAL else 1
        return cls(np.zeros(n_nodes), np.zeros(n_nodes), np.zeros(n_ud))


@dataclass
class DynamicSolution:
    t: np.ndarray
    s: np.ndarray
    phi: np.ndarray  # (nt, N)
    omega: np.ndarray  # (nt, N)
    u_d: np.ndarray  # (nt, N-1) local, (nt, 1) uniform
    applied_torque: np.ndarray
    boundary_flux: np.ndarray  # internal torque in the last cell
    energy: np.ndarray
    dissipation: np.ndarray
    power: np.ndarray
    energy_residual: np.ndarray  # relative, from the semi-discrete rates
    step_balance_residual: np.ndarray  # relative, energy change over each step
    stats: dict = field(default_factory=dict)

    @property
    def boundary_twist(self) -> np.ndarray:
        return self.phi[:, -1]

    def u_d_at_nodes(self) -> np.ndarray:
        """Natural twist interpolated from cells to nodes (linear, end values extrapolated)."""
        if self.u_d.shape[1] == 1:
            return np.repeat(self.u_d, self.s.size, axis=1)
        c = self.u_d
        out = np.empty((c.shape[0], self.s.size))
        out[:, 1:-1] = 0.5 * (c[:, 1:] + c[:, :-1])
        if c.shape[1] > 1:
            out[:, 0] = 1.5 * c[:, 0] - 0.5 * c[:, 1]
            out[:, -1] = 1.5 * c[:, -1] - 0.5 * c[:, -2]
        else:
            out[:, 0] = out[:, -1] = c[:, 0]
        return out


class _TorsionSemiDiscretization:
    """Staggered method of lines: angles and angular velocities at nodes,
    twist and natural twist at cell midpoints.

    Node ``i`` carries lumped inertia ``nu * w_i`` (``w_i = h`` inside,
    ``h/2`` at ``s = 1``) and the balance ``nu w_i omega_i' = q_i - q_{i-1}``
    with the cell torque ``q = alpha (u - u_d) + mu du/dt``. At ``s = 1`` the
    outer flux is the applied torque ``m(t)``, and ``phi(0) = 0`` removes
    node 0 from the unknowns. The discrete energy then obeys
    ``dE/dt = m omega_end - D`` exactly.
    """

    def __init__(self, params: TorsionParams, grid: RodGrid, variant: NaturalVariant, torque: Callable):
        if grid.length != 1.0:
            raise PreconditionError("the dimensionless torsion problem lives on [0, 1]")
        p = params
        self.p, self.grid, self.variant, self.torque = p, grid, NaturalVariant(variant), torque
        n = grid.n_nodes - 1  # free nodes
        c = grid.n_cells
        h = grid.spacing
        self.n, self.c, self.h = n, c, h
        self.n_ud = c if self.variant is NaturalVariant.LOCAL else 1
        # cell strain from free-node angles; phi_0 = 0
        Dm = sp.diags([np.full(c, 1.0 / h), np.full(c - 1, -1.0 / h)], [0, -1], shape=(c, n)).tocsr()
        self.Dm = Dm
        mass = np.full(n, h)
        mass[-1] = 0.5 * h
        self.mass = mass
        inv_m = sp.diags(1.0 / (p.nu * mass))
        # nu W omega' = -h D^T q + m e_end
        DT = -h * Dm.T
        if self.variant is NaturalVariant.LOCAL:
            P = sp.identity(c, format="csr")  # u_d per cell
        else:
            P = sp.csr_matrix(np.ones((c, 1)))  # scalar u_d broadcast to cells
        Z_nn = sp.csr_matrix((n, n))
        rows = [
            [Z_nn, sp.identity(n), sp.csr_matrix((n, self.n_ud))],
            [inv_m @ DT @ (p.alpha * Dm), inv_m @ DT @ (p.mu * Dm), inv_m @ DT @ (-p.alpha * P)],
        ]
        if self.variant is NaturalVariant.LOCAL:
            rows.append([(p.alpha / p.mu_d) * Dm, sp.csr_matrix((c, n)), sp.identity(c) * (-(p.alpha + p.alpha_d) / p.mu_d)])
        else:
            # mu_d u_d' = int alpha (u - u_d) ds - alpha_d u_d, with int u ds = phi(1)
            e_end = sp.csr_matrix(([p.alpha / p.mu_d], ([0], [n - 1])), shape=(1, n))
            rows.append([e_end, sp.csr_matrix((1, n)), sp.csr_matrix([[-(p.alpha + p.alpha_d) / p.mu_d]])])
        self.J = sp.bmat(rows, format="csc")
        self.P = P
        self.size = 2 * n + self.n_ud
        self._g_index = 2 * n - 1
        self._g_scale = 1.0 / (p.nu * mass[-1])

    def forcing(self, t):
        g = np.zeros(self.size)
        g[self._g_index] = self._g_scale * float(self.torque(t))
        return g

    def pack(self, state: DynamicState) -> np.ndarray:
        phi = np.asarray(state.phi, float)
        omega = np.asarray(state.omega, float)
        u_d = np.atleast_1d(np.asarray(state.u_d, float))
        N = self.grid.n_nodes
        if phi.shape != (N,) or omega.shape != (N,):
            raise PreconditionError(f"phi and omega need {N} nodal values")
        if phi[0] != 0 or omega[0] != 0:
            raise PreconditionError("phi(0) = 0 is fixed; phi[0] and omega[0] must be 0")
        if u_d.shape != (self.n_ud,):
            raise PreconditionError(f"u_d needs {self.n_ud} value(s) for the {self.variant.value} law")
        return np.concatenate([phi[1:], omega[1:], u_d])

    def split(self, y):
        n = self.n
        return y[:n], y[n : 2 * n], y[2 * n :]

    def energy_terms(self, t, y):
        """``(E, D, P, dE/dt)`` with ``dE/dt`` taken along the semi-discrete flow."""
        p, h = self.p, self.h
        phi, omega, u_d = self.split(y)
        dy = self.J @ y + self.forcing(t)
        _, domega, du_d = self.split(dy)
        u = self.Dm @ phi
        du = self.Dm @ omega
        ud_c = self.P @ u_d
        dud_c = self.P @ du_d
        E = 0.5 * p.nu * np.sum(self.mass * omega**2) + h * np.sum(
            0.5 * p.alpha * (u - ud_c) ** 2 + 0.5 * p.alpha_d * ud_c**2
        )
        if self.variant is NaturalVariant.LOCAL:
            nat = p.mu_d * h * np.sum(du_d**2)
        else:
            nat = p.mu_d * self.grid.length * float(du_d[0] ** 2)
        D = p.mu * h * np.sum(du**2) + nat
        P = float(self.torque(t)) * omega[-1]
        dE = p.nu * np.sum(self.mass * omega * domega) + h * np.sum(
            p.alpha * (u - ud_c) * (du - dud_c) + p.alpha_d * ud_c * dud_c
        )
        return E, D, P, dE

    def boundary_flux(self, y):
        phi, omega, u_d = self.split(y)
        u_last = (phi[-1] - (phi[-2] if self.n > 1 else 0.0)) / self.h
        du_last = (omega[-1] - (omega[-2] if self.n > 1 else 0.0)) / self.h
        ud_last = u_d[-1]
        return self.p.alpha * (u_last - ud_last) + self.p.mu * du_last


def dynamic_pde_solve(
    params: TorsionParams,
    grid: RodGrid,
    torque: InputHistory,
    variant: NaturalVariant,
    t_end: float,
    initial: DynamicState,
    rtol: float = 1e-6,
    atol: float = 1e-9,
    dt_initial: float | None = None,
    fixed_step: float | None = None,
    t_eval=None,
    max_steps: int = 200_000,
) -> DynamicSolution:
    """Solve the dynamic torsion problem with inertia ratio ``nu > 0``.

    ``nu phi_tt = alpha (phi_ss - (u_d)_s) + mu phi_tss`` on ``(0, 1)`` with
    ``phi(0, t) = 0`` and the applied torque
    ``alpha (phi_s - u_d) + mu phi_ts = m(t)`` at ``s = 1``, coupled to the
    chosen natural-twist law. Time stepping is adaptive TR-BDF2; every
    accepted step is recorded unless ``t_eval`` restricts the output (those
    times are always hit exactly).
    """
    if not params.nu > 0:
        raise PreconditionError("the dynamic problem needs nu > 0; use the quasi-static solvers")
    if grid.n_nodes < 16:
        raise PreconditionError(f"dynamic solves need at least 16 nodes, got {grid.n_nodes}")
    _require_kind(torque, HistoryKind.TORQUE)
    if torque.waveform.is_ideal:
        raise PreconditionError("the dynamic solver needs a smoothed torque (ramp_duration > 0)")
    disc = _TorsionSemiDiscretization(params, grid, variant, torque)
    y0 = disc.pack(initial)

    stops = list(torque.waveform.breakpoints)
    if t_eval is not None:
        stops += list(np.asarray(t_eval, dtype=float))

    rec = tr_bdf2(
        disc.J,
        disc.forcing,
        y0,
        (0.0, float(t_end)),
        rtol=rtol,
        atol=atol,
        dt_initial=dt_initial,
        fixed_step=fixed_step,
        stops=stops,
        max_steps=max_steps,
    )
    ts, ys = rec.t, rec.y
    terms = np.array([disc.energy_terms(t, y) for t, y in zip(ts, ys)])
    E, Dis, Pow, dE = terms.T
    scale = np.maximum.reduce([np.abs(Pow), np.abs(Dis), np.abs(dE)])
    resid = np.abs(dE + Dis - Pow) / np.where(scale > 0, scale, 1.0)
    # time-discrete balance over each step (trapezoid in time), for diagnostics
    dt = np.diff(ts)
    flow = 0.5 * dt * ((Pow - Dis)[1:] + (Pow - Dis)[:-1])
    work = 0.5 * dt * ((np.abs(Pow) + Dis)[1:] + (np.abs(Pow) + Dis)[:-1])
    step_scale = np.maximum(np.abs(np.diff(E)) + work, 1e-300)
    step_resid = np.abs(np.diff(E) - flow) / step_scale
    if not np.all(np.isfinite(ys)):
        raise NonConvergenceError("dynamic solve produced non-finite values", {"t": ts[-1]})

    if t_eval is not None:
        keep = np.isin(ts, np.asarray(t_eval, dtype=float)) | (ts == 0.0)
    else:
        keep = np.ones(ts.size, dtype=bool)
    n = disc.n
    phi = np.zeros((ts.size, grid.n_nodes))
    phi[:, 1:] = ys[:, :n]
    omega = np.zeros((ts.size, grid.n_nodes))
    omega[:, 1:] = ys[:, n : 2 * n]
    flux = np.array([disc.boundary_flux(y) for y in ys])
    return DynamicSolution(
        t=ts[keep],
        s=grid.nodes,
        phi=phi[keep],
        omega=omega[keep],
        u_d=ys[keep, 2 * n :],
        applied_torque=np.asarray(torque(ts[keep]), dtype=float),
        boundary_flux=flux[keep],
        energy=E[keep],
        dissipation=Dis[keep],
        power=Pow[keep],
        energy_residual=resid[keep],
        step_balance_residual=step_resid,
        stats={
            "accepted_steps": rec.n_accepted,
            "rejected_steps": rec.n_rejected,
            "factorizations": rec.n_factorizations,
            "max_energy_residual": float(np.max(resid)),
        },
    )


def homogeneous_relaxation_torque(params: TorsionParams, u0: float, ud0: float):
    """Torque history that holds a uniform twist ``u0`` at rest while the
    natural twist relaxes from ``ud0``; both natural-twist laws then produce
    the same spatially homogeneous motion."""
    lam = params.relaxation_rate
    ud_inf = params.alpha * u0 / (params.alpha + params.alpha_d)

    def u_d(t):
        return ud_inf + (ud0 - ud_inf) * np.exp(-lam * np.asarray(t, dtype=float))

    def m(t):
        return params.alpha * (u0 - u_d(t))

    def dm(t):
        return params.alpha * lam * (ud0 - ud_inf) * np.exp(-lam * np.asarray(t, dtype=float))

    return InputHistory(HistoryKind.TORQUE, ZeroForNegativeTime(m, dm)), u_d
