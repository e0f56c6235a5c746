"""TR-BDF2 for stiff affine systems ``y' = J y + g(t)``.

One trapezoidal stage to ``t + gamma h`` followed by a BDF2 stage to
``t + h``, with ``gamma = 2 - sqrt(2)`` so both stages share the matrix
``I - (gamma/2) h J``. The method is L-stable and second order. The local
error is estimated against the third-order quadrature through the same
three stage derivatives and filtered by the stage matrix so stiff modes do
not inflate it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import NonConvergenceError

GAMMA = 2.0 - np.sqrt(2.0)
D = GAMMA / 2.0
W = np.sqrt(2.0) / 4.0
# third-order weights on the nodes (0, gamma, 1)
B2 = 1.0 / (6.0 * GAMMA * (1.0 - GAMMA))
B3 = 0.5 - 1.0 / (6.0 * (1.0 - GAMMA))
B1 = 1.0 - B2 - B3
ERR_COEF = np.array([W - B1, W - B2, D - B3])


@dataclass
class StepRecord:
    t: np.ndarray
    y: np.ndarray
    n_accepted: int = 0
    n_rejected: int = 0
    n_factorizations: int = 0
    step_sizes: list = field(default_factory=list)


def tr_bdf2(
    J,
    forcing,
    y0,
    t_span,
    rtol: float = 1e-6,
    atol: float = 1e-9,
    dt_initial: float | None = None,
    fixed_step: float | None = None,
    stops=(),
    max_steps: int = 200_000,
    callback=None,
) -> StepRecord:
    """Integrate ``y' = J y + forcing(t)`` over ``t_span``.

    Parameters
    ----------
    J : sparse or dense matrix
    forcing : callable ``t -> ndarray``
    stops : sequence of float
        Times the step sequence must land on exactly (outputs, input
        breakpoints).
    fixed_step : float, optional
        Disable adaptivity and take steps of this size (clipped at stops).
    callback : callable ``(t, y) -> None``, optional
        Called after every accepted step.

    Returns
    -------
    StepRecord
        Every accepted step, including the initial state.
    """
    J = sp.csc_matrix(J)
    n = J.shape[0]
    eye = sp.identity(n, format="csc")
    t0, t1 = map(float, t_span)
    stops = sorted({float(s) for s in stops if t0 < s < t1} | {t1})
    y = np.array(y0, dtype=float)
    if y.shape != (n,):
        raise ValueError(f"y0 has shape {y.shape}, system size is {n}")

    if fixed_step is not None:
        h = float(fixed_step)
    elif dt_initial is not None:
        h = float(dt_initial)
    else:
        h = 1e-6 * (t1 - t0)
    rec = StepRecord(t=[t0], y=[y.copy()])
    if callback is not None:
        callback(t0, y)

    lu_cache: dict[float, object] = {}

    def factor(hh):
        key = float(hh)
        lu = lu_cache.get(key)
        if lu is None:
            if len(lu_cache) > 8:
                lu_cache.clear()
            lu = splu((eye - (D * hh) * J).tocsc())
            lu_cache[key] = lu
            rec.n_factorizations += 1
        return lu

    t = t0
    f_n = J @ y + forcing(t)
    stop_idx = 0
    h_min = 1e-14 * max(1.0, abs(t1))
    steps = 0
    while t < t1:
        if steps >= max_steps:
            raise NonConvergenceError(
                f"TR-BDF2 exceeded {max_steps} steps", {"t": t, "h": h, "accepted": rec.n_accepted}
            )
        steps += 1
        while stops[stop_idx] <= t:
            stop_idx += 1
        target = stops[stop_idx]
        h_try = min(h, target - t)
        # avoid a sliver step just before a stop
        if target - t - h_try < 1e-3 * h_try:
            h_try = target - t
        lu = factor(h_try)
        t_g = t + GAMMA * h_try
        t_1 = t + h_try
        z = lu.solve(y + D * h_try * f_n + D * h_try * forcing(t_g))
        f_g = J @ z + forcing(t_g)
        g_1 = forcing(t_1)
        y_new = lu.solve(y + W * h_try * (f_n + f_g) + D * h_try * g_1)
        f_new = J @ y_new + g_1

        if fixed_step is not None:
            err = 0.0
        else:
            est = h_try * (ERR_COEF[0] * f_n + ERR_COEF[1] * f_g + ERR_COEF[2] * f_new)
            est = lu.solve(est)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.max(np.abs(est) / scale))
            if not np.isfinite(err):
                raise NonConvergenceError("non-finite error estimate", {"t": t, "h": h_try})

        if err <= 1.0:
            t = t_1 if t_1 < target else target
            y, f_n = y_new, f_new
            rec.t.append(t)
            rec.y.append(y.copy())
            rec.n_accepted += 1
            rec.step_sizes.append(h_try)
            if callback is not None:
                callback(t, y)
            if fixed_step is None:
                factor_h = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** (-1.0 / 3.0)))
                h = h_try * factor_h
        else:
            rec.n_rejected += 1
            h = h_try * max(0.2, 0.9 * err ** (-1.0 / 3.0))
            if h < h_min:
                raise NonConvergenceError(
                    "TR-BDF2 step size underflow", {"t": t, "h": h, "error_norm": err}
                )
    rec.t = np.asarray(rec.t)
    rec.y = np.asarray(rec.y)
    return rec
