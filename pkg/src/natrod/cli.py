"""Command-line scenario runner.

    natrod --config scenario.json [--out DIR] [--verify] [--quiet]

Writes ``trace.csv`` and ``report.txt`` into a new or empty output
directory. Exit status: 0 when every check passes, 1 when a check fails,
2 for configuration or I/O errors, 3 when a solver fails to converge.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import scenarios
from .energetics import NaturalVariant
from .errors import NatrodError, NonConvergenceError
from .grid import RodGrid
from .oracle import matrix_exponential_2x2, reference_integrate
from .torsion import (
    DynamicState,
    HistoryKind,
    InputHistory,
    SmoothedStep,
    Tabulated,
    TorsionParams,
    creep_mu_zero,
    creep_response,
    dynamic_pde_solve,
    relaxation_response,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

SCENARIOS = ("relaxation", "creep", "creep_mu_zero", "dynamic", "maximizer_check", "counterexample")
TORSION_SCENARIOS = SCENARIOS[:4]


class ConfigError(Exception):
    pass


# --- config schema ------------------------------------------------------------

_TOP_KEYS = {"scenario", "params", "input", "numerics", "output", "seed", "variant"}
_TORSION_PARAMS = {"nu", "mu", "mu_d", "alpha", "alpha_d"}
_INPUT_KEYS = {"kind", "waveform", "amplitude", "times", "values"}
_NUMERIC_KEYS = {"grid_nodes", "t_end", "dt_initial", "tol", "ramp_duration", "n_samples"}
_OUTPUT_KEYS = {"path", "sample_stride"}
_SCENARIO_PARAMS = {
    "maximizer_check": {"n_cases", "restarts", "max_condition"},
    "counterexample": {"A33", "M_d33", "s0"},
}


@dataclass
class Scenario:
    name: str
    seed: int
    params: dict
    history: InputHistory | None
    numerics: dict
    output_path: str | None
    stride: int
    variant: NaturalVariant | None


def _check_keys(block, allowed, where):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected an object, got {type(block).__name__}")
    for key in block:
        if key not in allowed:
            raise ConfigError(f"{where}.{key}: unknown key (allowed: {', '.join(sorted(allowed))})")


def _number(block, key, where, default=None, kind=float, positive=False, required=False):
    if key not in block or block[key] is None:
        if required:
            raise ConfigError(f"{where}.{key}: required")
        return default
    val = block[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {val!r}")
    if kind is int and val != int(val):
        raise ConfigError(f"{where}.{key}: expected an integer, got {val!r}")
    val = kind(val)
    if positive and not val > 0:
        raise ConfigError(f"{where}.{key}: must be positive, got {val!r}")
    return val


def load_config(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw)


def parse_config(raw) -> Scenario:
    _check_keys(raw, _TOP_KEYS, "config")
    name = raw.get("scenario")
    if name not in SCENARIOS:
        raise ConfigError(f"config.scenario: expected one of {', '.join(SCENARIOS)}, got {name!r}")
    seed = _number(raw, "seed", "config", default=0, kind=int)

    numerics = raw.get("numerics", {})
    _check_keys(numerics, _NUMERIC_KEYS, "numerics")
    output = raw.get("output", {})
    _check_keys(output, _OUTPUT_KEYS, "output")
    out_path = output.get("path")
    if out_path is not None and not isinstance(out_path, str):
        raise ConfigError("output.path: expected a string")
    stride = _number(output, "sample_stride", "output", default=1, kind=int, positive=True)

    variant = None
    if "variant" in raw:
        if name != "dynamic":
            raise ConfigError(f"config.variant: only used by the dynamic scenario, not {name}")
        try:
            variant = NaturalVariant(raw["variant"])
        except ValueError:
            raise ConfigError(f"config.variant: expected 'local' or 'uniform', got {raw['variant']!r}") from None
    elif name == "dynamic":
        raise ConfigError("config.variant: required for the dynamic scenario ('local' or 'uniform')")

    params_block = raw.get("params", {})
    history = None
    num = {}
    if name in TORSION_SCENARIOS:
        if "params" not in raw:
            raise ConfigError(f"config.params: required for the {name} scenario")
        _check_keys(params_block, _TORSION_PARAMS, "params")
        values = {k: _number(params_block, k, "params", required=True) for k in sorted(_TORSION_PARAMS)}
        try:
            params = TorsionParams(**values)
        except NatrodError as exc:
            raise ConfigError(f"params: {exc}") from None
        if "input" not in raw:
            raise ConfigError(f"config.input: required for the {name} scenario")
        default_ramp = 1e-3 if name == "dynamic" else 0.0
        num["ramp_duration"] = _number(numerics, "ramp_duration", "numerics", default=default_ramp)
        if num["ramp_duration"] < 0:
            raise ConfigError("numerics.ramp_duration: must be >= 0")
        history = _parse_input(raw["input"], name, num["ramp_duration"])
        num["t_end"] = _number(numerics, "t_end", "numerics", kind=float, positive=True, required=True)
        num["tol"] = _number(numerics, "tol", "numerics", default=1e-6, positive=True)
        num["dt_initial"] = _number(numerics, "dt_initial", "numerics", positive=True)
        num["n_samples"] = _number(numerics, "n_samples", "numerics", default=1001, kind=int, positive=True)
        num["grid_nodes"] = _number(numerics, "grid_nodes", "numerics", default=64, kind=int, positive=True)
        if name == "dynamic" and num["grid_nodes"] < 16:
            raise ConfigError(f"numerics.grid_nodes: the dynamic scenario needs >= 16, got {num['grid_nodes']}")
        if num["n_samples"] < 2:
            raise ConfigError("numerics.n_samples: need at least 2")
        params_out = {"torsion": params}
    else:
        _check_keys(params_block, _SCENARIO_PARAMS[name], "params")
        if "input" in raw:
            raise ConfigError(f"config.input: not used by the {name} scenario")
        for key in numerics:
            if key != "grid_nodes":
                raise ConfigError(f"numerics.{key}: not used by the {name} scenario")
        params_out = {}
        if name == "maximizer_check":
            params_out["n_cases"] = _number(params_block, "n_cases", "params", default=20, kind=int, positive=True)
            params_out["restarts"] = _number(params_block, "restarts", "params", default=50, kind=int, positive=True)
            params_out["max_condition"] = _number(params_block, "max_condition", "params", default=1e3)
            if params_out["max_condition"] < 1:
                raise ConfigError("params.max_condition: must be >= 1")
            if "grid_nodes" in numerics:
                raise ConfigError("numerics.grid_nodes: maximizer_check uses 4 and 8 nodes")
        else:
            params_out["A33"] = _number(params_block, "A33", "params", default=1.0, positive=True)
            params_out["M_d33"] = _number(params_block, "M_d33", "params", default=1.0, positive=True)
            params_out["s0"] = _number(params_block, "s0", "params", default=0.1)
            if not 0 <= params_out["s0"] <= 1:
                raise ConfigError("params.s0: must lie in [0, 1]")
            num["grid_nodes"] = _number(numerics, "grid_nodes", "numerics", default=201, kind=int, positive=True)
            if num["grid_nodes"] < 2:
                raise ConfigError("numerics.grid_nodes: need at least 2")
    return Scenario(name, seed, params_out, history, num, out_path, stride, variant)


def _parse_input(block, scenario, ramp):
    _check_keys(block, _INPUT_KEYS, "input")
    expected = HistoryKind.TWIST if scenario == "relaxation" else HistoryKind.TORQUE
    kind = block.get("kind", expected.value)
    if kind != expected.value:
        raise ConfigError(f"input.kind: the {scenario} scenario takes a {expected.value} history, got {kind!r}")
    wave = block.get("waveform", "step")
    if wave == "step":
        for key in ("times", "values"):
            if key in block:
                raise ConfigError(f"input.{key}: not used by a step waveform")
        amp = _number(block, "amplitude", "input", required=True)
        return InputHistory(expected, SmoothedStep(amp, ramp))
    if wave == "tabulated":
        if "amplitude" in block:
            raise ConfigError("input.amplitude: not used by a tabulated waveform")
        for key in ("times", "values"):
            if not isinstance(block.get(key), list):
                raise ConfigError(f"input.{key}: required list for a tabulated waveform")
        try:
            return InputHistory(expected, Tabulated(tuple(block["times"]), tuple(block["values"])))
        except (NatrodError, TypeError, ValueError) as exc:
            raise ConfigError(f"input: {exc}") from None
    raise ConfigError(f"input.waveform: expected 'step' or 'tabulated', got {wave!r}")


# --- checks and output ----------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    residual: float | None = None
    detail: str = ""


@dataclass
class Outcome:
    header: list
    rows: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    info: list = field(default_factory=list)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.17g" % float(x)


def _stride_indices(n, stride):
    idx = list(range(0, n, stride))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return idx


def _sample_times(sc):
    return np.linspace(0.0, sc.numerics["t_end"], sc.numerics["n_samples"])


def _is_step(history):
    return isinstance(history.waveform, SmoothedStep)


def run_relaxation(sc: Scenario, verify_only=False) -> Outcome:
    p = sc.params["torsion"]
    hist = sc.history
    t = _sample_times(sc)
    tr = relaxation_response(p, hist, t)
    out = Outcome(["t", "u", "u_d", "m_regular", "m_impulse_amplitude"])
    out.rows = [(t[i], tr.u[i], tr.u_d[i], tr.m_regular[i], tr.m_impulse_amplitude) for i in range(t.size)]
    a, ad = p.alpha, p.alpha_d

    def rhs(tt, y):
        uu = float(hist(tt))
        return [(a * uu - (a + ad) * y[0]) / p.mu_d]

    ref = reference_integrate(rhs, [0.0], (0.0, t[-1]), tol=1e-11, breakpoints=hist.waveform.breakpoints)
    ref_ud = ref(t)[0]
    err = float(np.max(np.abs(ref_ud - tr.u_d)) / max(1.0, np.max(np.abs(ref_ud))))
    out.checks.append(Check("natural twist matches reference integration", err < 1e-8, err))
    if _is_step(hist):
        u0 = hist.waveform.amplitude
        plateau = a * ad * u0 / (a + ad)
        if hist.waveform.is_ideal:
            r0 = abs(tr.m_regular[0] - a * u0)
            out.checks.append(Check("m(0+) = alpha u0", r0 < 1e-6 * max(1, abs(a * u0)), r0))
            ri = abs(tr.m_impulse_amplitude - p.mu * u0)
            out.checks.append(Check("impulse amplitude = mu u0", ri == 0.0, ri))
            after = t > 0
        else:
            after = t >= hist.waveform.ramp_duration
        if p.relaxation_rate * t[-1] >= 30:
            rinf = abs(tr.m_regular[-1] - plateau)
            out.checks.append(Check("m(t_end) = alpha alpha_d u0/(alpha+alpha_d)", rinf < 1e-6 * max(1, abs(plateau)), rinf))
        mm = tr.m_regular[after] * np.sign(u0 or 1.0)
        inc = float(np.max(np.diff(mm))) if mm.size > 1 else 0.0
        out.checks.append(Check("regular torque monotone after loading", inc <= 1e-12 * max(1, abs(a * u0)), max(inc, 0.0)))
    return out


def _creep_rhs(p, hist):
    def rhs(tt, y):
        m = float(hist(tt))
        return [(m - p.alpha * y[0] + p.alpha * y[1]) / p.mu, (p.alpha * y[0] - (p.alpha + p.alpha_d) * y[1]) / p.mu_d]

    return rhs


def run_creep(sc: Scenario, verify_only=False) -> Outcome:
    p = sc.params["torsion"]
    hist = sc.history
    t = _sample_times(sc)
    tr = creep_response(p, hist, t)
    out = Outcome(["t", "u", "u_d", "m_regular", "m_impulse_amplitude"])
    out.rows = [(t[i], tr.u[i], tr.u_d[i], tr.m_regular[i], 0.0) for i in range(t.size)]
    ref = reference_integrate(_creep_rhs(p, hist), [0.0, 0.0], (0.0, t[-1]), tol=1e-11, breakpoints=hist.waveform.breakpoints)
    Y = ref(t)
    err = float(np.max(np.abs(Y - np.vstack([tr.u, tr.u_d]))) / max(1.0, np.max(np.abs(Y))))
    out.checks.append(Check("closed form matches reference integration", err < 1e-8, err))
    A = p.creep_matrix()
    import scipy.linalg

    worst = max(float(np.max(np.abs(matrix_exponential_2x2(A, tt) - scipy.linalg.expm(-tt * A)))) for tt in t[:: max(1, t.size // 50)])
    out.checks.append(Check("2x2 exponential matches scaling and squaring", worst < 1e-10, worst))
    if _is_step(hist):
        m0 = hist.waveform.amplitude
        lam_min = float(np.min(np.linalg.eigvals(A).real))
        if lam_min * t[-1] >= 30:
            u_inf = (p.alpha + p.alpha_d) * m0 / (p.alpha * p.alpha_d)
            ru = abs(tr.u[-1] - u_inf)
            rd = abs(tr.u_d[-1] - m0 / p.alpha_d)
            out.checks.append(Check("u(t_end) = (alpha+alpha_d) m0/(alpha alpha_d)", ru < 1e-6 * max(1, abs(u_inf)), ru))
            out.checks.append(Check("u_d(t_end) = m0/alpha_d", rd < 1e-6 * max(1, abs(m0 / p.alpha_d)), rd))
    return out


def run_creep_mu_zero(sc: Scenario, verify_only=False) -> Outcome:
    p = sc.params["torsion"]
    hist = sc.history
    t = _sample_times(sc)
    tr = creep_mu_zero(p, hist, t)
    out = Outcome(["t", "u", "u_d", "m_regular", "m_impulse_amplitude"])
    out.rows = [(t[i], tr.u[i], tr.u_d[i], tr.m_regular[i], 0.0) for i in range(t.size)]

    def rhs(tt, y):
        return [(float(hist(tt)) - p.alpha_d * y[0]) / p.mu_d]

    ref = reference_integrate(rhs, [0.0], (0.0, t[-1]), tol=1e-12, breakpoints=hist.waveform.breakpoints)
    ud = ref(t)[0]
    scale = max(1.0, np.max(np.abs(ud)))
    e1 = float(np.max(np.abs(ud - tr.u_d)) / scale)
    e2 = float(np.max(np.abs(hist(t) / p.alpha + ud - tr.u)) / scale)
    out.checks.append(Check("u_d matches reference integration", e1 < 1e-10, e1))
    out.checks.append(Check("u = m/alpha + u_d matches reference integration", e2 < 1e-10, e2))
    return out


def run_dynamic(sc: Scenario, verify_only=False) -> Outcome:
    p = sc.params["torsion"]
    num = sc.numerics
    n = num["grid_nodes"]
    grid = RodGrid(n)
    sol = dynamic_pde_solve(
        p,
        grid,
        sc.history,
        sc.variant,
        num["t_end"],
        DynamicState.quiescent(n, sc.variant),
        rtol=num["tol"],
        atol=num["tol"] * 1e-3,
        dt_initial=num["dt_initial"],
    )
    out = Outcome(["s", "t", "phi", "u_d"])
    if not verify_only:
        ud_nodes = sol.u_d_at_nodes()
        for k in _stride_indices(sol.t.size, sc.stride):
            for j in range(n):
                out.rows.append((sol.s[j], sol.t[k], sol.phi[k, j], ud_nodes[k, j]))
    r = float(np.max(sol.energy_residual))
    out.checks.append(Check("energy balance dE/dt + D = P at every step", r < 1e-6, r))
    out.info.append(f"accepted steps: {sol.stats['accepted_steps']}, rejected: {sol.stats['rejected_steps']}")
    out.info.append(f"max per-step time-integrated balance residual: {float(np.max(sol.step_balance_residual, initial=0.0)):.3e}")
    if p.mu > 0:
        qs = creep_response(p, sc.history, sol.t)
        mask = sol.t > 0.05
        if np.any(mask):
            rel = np.abs(sol.boundary_twist[mask] - qs.u[mask]) / np.maximum(np.abs(qs.u[mask]), 1e-300)
            e = float(np.max(rel))
            out.info.append(f"boundary twist vs quasi-static creep (t > 0.05): max relative difference {e:.3e}")
            if p.nu <= 1e-3:
                out.checks.append(Check("boundary twist close to quasi-static creep", e < 1e-2, e))
    return out


def run_maximizer_check(sc: Scenario, verify_only=False) -> Outcome:
    pr = sc.params
    rng = np.random.default_rng(sc.seed)
    out = Outcome(["case", "n_nodes", "variant", "value_closed", "value_brute", "value_gap", "argmax_error", "constraint_residual", "status"])
    for k in range(pr["n_cases"]):
        n_nodes = 4 if k < pr["n_cases"] // 2 else 8
        variant = NaturalVariant.LOCAL if k % 2 == 0 else NaturalVariant.UNIFORM
        c = scenarios.maximizer_case(rng, n_nodes, variant, pr["max_condition"], pr["restarts"], seed=sc.seed + k)
        out.rows.append((k, c.n_nodes, c.variant.value, c.value_closed, c.value_brute, c.value_gap, c.argmax_error, c.constraint_residual, c.status))
        out.checks.append(Check(f"case {k} ({n_nodes} nodes, {variant.value})", c.passed(), abs(c.value_gap), f"argmax error {c.argmax_error:.3e}"))
    return out


def run_counterexample(sc: Scenario, verify_only=False) -> Outcome:
    pr = sc.params
    res = scenarios.counterexample(sc.numerics["grid_nodes"], pr["A33"], pr["M_d33"], pr["s0"])
    out = Outcome(["s", "u", "xi"])
    out.rows = [(res.s[i], res.u[i], res.xi[i]) for i in range(res.s.size)]
    out.checks.append(Check("xi(s0) < 0", res.xi_s0 < 0, res.xi_s0))
    out.checks.append(Check("integral of xi >= 0", res.integral_xi >= -1e-12, res.integral_xi))
    h = 1.0 / (res.s.size - 1)
    gap = abs(res.xi_s0 - res.predicted_xi_s0)
    bound = 10.0 * h * h * max(1.0, abs(res.predicted_xi_s0))
    out.checks.append(Check("xi(s0) matches (A33^2/M_d33) u(s0) int u ds", gap <= bound, gap))
    return out


RUNNERS = {
    "relaxation": run_relaxation,
    "creep": run_creep,
    "creep_mu_zero": run_creep_mu_zero,
    "dynamic": run_dynamic,
    "maximizer_check": run_maximizer_check,
    "counterexample": run_counterexample,
}


def _prepare_outdir(path):
    if os.path.exists(path):
        if not os.path.isdir(path):
            raise ConfigError(f"{path}: output path exists and is not a directory")
        if os.listdir(path):
            raise ConfigError(f"{path}: output directory is not empty")
    else:
        try:
            os.makedirs(path)
        except OSError as exc:
            raise ConfigError(f"{path}: cannot create output directory ({exc.strerror})") from exc


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def render_report(sc: Scenario, outcome: Outcome, verify_only: bool) -> str:
    lines = [f"scenario: {sc.name}", f"seed: {sc.seed}", f"mode: {'verify' if verify_only else 'run'}"]
    if "torsion" in sc.params:
        p = sc.params["torsion"]
        lines.append(
            "params: " + ", ".join(f"{k}={_fmt(getattr(p, k))}" for k in ("nu", "mu", "mu_d", "alpha", "alpha_d"))
        )
    if sc.variant is not None:
        lines.append(f"variant: {sc.variant.value}")
    lines.append("")
    for c in outcome.checks:
        res = "" if c.residual is None else f" residual={c.residual:.3e}"
        extra = f" ({c.detail})" if c.detail else ""
        lines.append(f"{'PASS' if c.passed else 'FAIL'}: {c.name}{res}{extra}")
    for line in outcome.info:
        lines.append(f"info: {line}")
    n_fail = sum(not c.passed for c in outcome.checks)
    lines.append("")
    lines.append(f"status: {'PASS' if n_fail == 0 else 'FAIL'} ({len(outcome.checks) - n_fail}/{len(outcome.checks)} checks passed)")
    return "\n".join(lines) + "\n"


def run(config_path, out_dir=None, verify_only=False, quiet=False) -> int:
    def err(msg):
        print(f"natrod: error: {msg}", file=sys.stderr)

    try:
        sc = load_config(config_path)
        out_dir = out_dir or sc.output_path
        if out_dir is None:
            raise ConfigError("no output directory: pass --out or set output.path")
        _prepare_outdir(out_dir)
    except ConfigError as exc:
        err(str(exc))
        return EXIT_CONFIG
    try:
        outcome = RUNNERS[sc.name](sc, verify_only)
    except NonConvergenceError as exc:
        diag = ", ".join(f"{k}={v}" for k, v in (exc.diagnostics or {}).items())
        err(f"solver did not converge: {exc} [{diag}]")
        return EXIT_SOLVER
    except NatrodError as exc:
        err(str(exc))
        return EXIT_CONFIG
    report = render_report(sc, outcome, verify_only)
    try:
        if not verify_only:
            rows = outcome.rows
            if sc.name != "dynamic" and rows:  # dynamic rows are already strided in time
                rows = [rows[i] for i in _stride_indices(len(rows), sc.stride)]
            write_csv(os.path.join(out_dir, "trace.csv"), outcome.header, rows)
        with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
            fh.write(report)
    except OSError as exc:
        err(f"cannot write output ({exc})")
        return EXIT_CONFIG
    if not quiet:
        sys.stdout.write(report)
    return EXIT_OK if all(c.passed for c in outcome.checks) else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="natrod", description="Run a rod viscoelasticity scenario from a JSON config.")
    ap.add_argument("--config", required=True, help="scenario config (JSON)")
    ap.add_argument("--out", help="output directory (new or empty); overrides output.path")
    ap.add_argument("--verify", action="store_true", help="run the invariant checks only; write report.txt but no trace")
    ap.add_argument("--quiet", action="store_true", help="do not echo the report")
    args = ap.parse_args(argv)
    return run(args.config, args.out, args.verify, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
