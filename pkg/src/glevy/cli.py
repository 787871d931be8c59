"""Batch command-line front-end.

Jobs are described by a flat key-value config file: one ``key = value`` per
line, ``#`` starts a comment, unknown or duplicate keys are fatal.  Flags:
``--config <path>`` (required), ``--seed <u64>``, ``--threads <n>``,
``--out <path>`` (the last three override the config keys of the same name).

Keys by command
---------------
common          command, out, threads, seed
scenarios       scenario.<i>.atoms   "z:w; z:w; ..."  (z comma-separated per axis)
                scenario.<i>.drift    "c1,c2,..."
                scenario.<i>.diffusion  row-major d*d comma list (scalar for d=1)
grid            grid.lower, grid.upper (comma lists), grid.spacing or grid.points
scheme          scheme.cfl_safety, scheme.final_time, scheme.tolerance,
                scheme.boundary_mode
payoff          payoff = clip-linear | indicator-ramp | quadratic-clip |
                         constant | table
                payoff.scale, payoff.clip, payoff.center, payoff.width,
                payoff.value, payoff.table ("x:y; x:y; ...")

solve           dim, scenarios, grid, scheme, payoff, output_times, eval.x
gpoisson        lambda, t, direction (increasing|decreasing), x, payoff,
                scheme.tolerance
generator       dim, scenarios, grid, scheme, payoff, delta (optional:
                present -> small-time quotient, absent -> closed form), eval.x
expect          dim, scenarios, times, scheme, payoff (applied to the summed
                increments), engine.dx, engine.node_budget, engine.tail,
                optional grid.* pinning every increment variable's box
check           seed

Outputs: ``solve`` writes CSV with header ``t,x1..xd,u`` over all snapshot
times and grid nodes; ``gpoisson``/``generator``/``expect`` write a
single-value CSV; ``check`` writes ``suite,name,measured,threshold,PASS|FAIL``
lines and exits nonzero if any suite fails.  All numbers are printed with 17
significant digits, and a given config reproduces its output bitwise.

For ``solve`` and ``generator`` the grid box must pad the evaluation points
by at least one jump range plus drift and four diffusion deviations over the
horizon (see :func:`glevy.core.min_padding`).
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from .checks import run_checks
from .core import (
    GridSpec,
    Payoff,
    Scenario,
    SchemeConfig,
    UncertaintySet,
    min_padding,
    uniform_grid,
    validate_uncertainty_set,
)
from .engine import CylinderFunctional, expectation
from .errors import ConfigError, GLevyError
from .generator import TestFunction, g_operator, small_time_quotient
from .gpoisson import gpoisson_closed_form
from .solver import solve

_SCENARIO_KEY = re.compile(r"^scenario\.(\d+)\.(atoms|drift|diffusion)$")

_COMMON = {"command", "out", "threads", "seed"}
_SCHEME = {"scheme.cfl_safety", "scheme.final_time", "scheme.tolerance", "scheme.boundary_mode"}
_GRID = {"grid.lower", "grid.upper", "grid.spacing", "grid.points"}
_PAYOFF = {
    "payoff",
    "payoff.scale",
    "payoff.clip",
    "payoff.center",
    "payoff.width",
    "payoff.value",
    "payoff.table",
}
_ALLOWED = {
    "solve": _COMMON | _SCHEME | _GRID | _PAYOFF | {"dim", "output_times", "eval.x"},
    "gpoisson": _COMMON | _PAYOFF | {"lambda", "t", "direction", "x", "scheme.tolerance"},
    "generator": _COMMON | _SCHEME | _GRID | _PAYOFF | {"dim", "delta", "eval.x"},
    "expect": _COMMON
    | _SCHEME
    | _GRID
    | _PAYOFF
    | {"dim", "times", "engine.dx", "engine.node_budget", "engine.tail"},
    "check": _COMMON,
}
_SCENARIO_COMMANDS = {"solve", "generator", "expect"}


@dataclass
class JobConfig:
    """One validated batch job."""

    command: str
    dim: int = 1
    uset: UncertaintySet | None = None
    grid: GridSpec | None = None
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    payoff_kind: str | None = None
    payoff: Payoff | None = None
    test_function: TestFunction | None = None
    output_times: list[float] | None = None
    eval_points: list[np.ndarray] | None = None
    lam: float = 0.5
    t: float = 1.0
    direction: str = "increasing"
    x: float = 0.0
    times: list[float] | None = None
    delta: float | None = None
    engine_dx: float = 0.05
    engine_node_budget: int = 400_000
    engine_tail: float = 1e-10
    seed: int = 2026
    threads: int = 1
    out: str | None = None


def _bad(key: str, why: str) -> ConfigError:
    return ConfigError("VALIDATION_ERROR", f"{key}: {why}")


def _float(kv, key, default=None):
    if key not in kv:
        if default is None:
            raise _bad(key, "required key is missing")
        return default
    try:
        return float(kv[key])
    except ValueError:
        raise _bad(key, f"not a number: {kv[key]!r}")


def _int(kv, key, default):
    if key not in kv:
        return default
    try:
        return int(kv[key])
    except ValueError:
        raise _bad(key, f"not an integer: {kv[key]!r}")


def _floats(text, key):
    try:
        return [float(p) for p in text.split(",")]
    except ValueError:
        raise _bad(key, f"not a comma-separated number list: {text!r}")


def _parse_atoms(text, key):
    atoms = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        pieces = part.rsplit(":", 1)
        if len(pieces) != 2:
            raise _bad(key, f"atom {part!r} is not 'z:w'")
        z = _floats(pieces[0], key)
        try:
            w = float(pieces[1])
        except ValueError:
            raise _bad(key, f"atom rate {pieces[1]!r} is not a number")
        atoms.append((np.array(z), w))
    return tuple(atoms)


def _x1(x):
    return np.asarray(x, dtype=float)[..., 0]


def _build_payoff(kv) -> tuple[str, Payoff]:
    kind = kv.get("payoff")
    if kind is None:
        raise _bad("payoff", "required key is missing")
    if kind == "clip-linear":
        scale = _float(kv, "payoff.scale", 1.0)
        clip = _float(kv, "payoff.clip", 1e6)
        if clip <= 0:
            raise _bad("payoff.clip", "must be positive")
        ev = lambda x: np.clip(scale * _x1(x), -clip, clip)
        return kind, Payoff(eval=ev, bound=clip, lipschitz=abs(scale))
    if kind == "indicator-ramp":
        center = _float(kv, "payoff.center", 0.0)
        width = _float(kv, "payoff.width", 1.0)
        if width <= 0:
            raise _bad("payoff.width", "must be positive")
        ev = lambda x: np.clip((_x1(x) - center) / width, 0.0, 1.0)
        return kind, Payoff(eval=ev, bound=1.0, lipschitz=1.0 / width)
    if kind == "quadratic-clip":
        scale = _float(kv, "payoff.scale", 1.0)
        clip = _float(kv, "payoff.clip", 1e6)
        if clip <= 0:
            raise _bad("payoff.clip", "must be positive")
        ev = lambda x: np.clip(
            scale * np.sum(np.asarray(x, dtype=float) ** 2, axis=-1), -clip, clip
        )
        lip = 2.0 * math.sqrt(abs(scale) * clip) if scale != 0 else 0.0
        return kind, Payoff(eval=ev, bound=clip, lipschitz=lip)
    if kind == "constant":
        value = _float(kv, "payoff.value", 0.0)
        ev = lambda x: np.full(np.asarray(x, dtype=float).shape[:-1], value)
        return kind, Payoff(eval=ev, bound=abs(value), lipschitz=0.0)
    if kind == "table":
        text = kv.get("payoff.table")
        if text is None:
            raise _bad("payoff.table", "required for payoff = table")
        xs, ys = [], []
        for part in text.split(";"):
            part = part.strip()
            if not part:
                continue
            pieces = part.split(":")
            if len(pieces) != 2:
                raise _bad("payoff.table", f"entry {part!r} is not 'x:y'")
            try:
                xs.append(float(pieces[0]))
                ys.append(float(pieces[1]))
            except ValueError:
                raise _bad("payoff.table", f"entry {part!r} has a non-number")
        if len(xs) < 2 or any(b <= a for a, b in zip(xs, xs[1:])):
            raise _bad("payoff.table", "need >= 2 entries with strictly increasing x")
        xs_a, ys_a = np.array(xs), np.array(ys)
        ev = lambda x: np.interp(_x1(x), xs_a, ys_a)
        slopes = np.abs(np.diff(ys_a) / np.diff(xs_a))
        return kind, Payoff(
            eval=ev, bound=float(np.max(np.abs(ys_a))), lipschitz=float(np.max(slopes))
        )
    raise _bad("payoff", f"unknown payoff kind {kind!r}")


def _build_test_function(kv, kind: str, pay: Payoff, dim: int) -> TestFunction:
    if kind == "clip-linear":
        scale = _float(kv, "payoff.scale", 1.0)
        grad0 = np.zeros(dim)
        grad0[0] = scale
        return TestFunction(eval=pay.eval, grad0=grad0, hess0=np.zeros((dim, dim)), bound=pay.bound)
    if kind == "quadratic-clip":
        scale = _float(kv, "payoff.scale", 1.0)
        return TestFunction(
            eval=pay.eval,
            grad0=np.zeros(dim),
            hess0=2.0 * scale * np.eye(dim),
            bound=pay.bound,
        )
    if kind == "indicator-ramp":
        if _float(kv, "payoff.center", 0.0) <= 0.0:
            raise _bad("payoff.center", "generator needs the ramp strictly right of 0")
        return TestFunction(
            eval=pay.eval, grad0=np.zeros(dim), hess0=np.zeros((dim, dim)), bound=pay.bound
        )
    if kind == "constant":
        if _float(kv, "payoff.value", 0.0) != 0.0:
            raise _bad("payoff.value", "generator needs f(0) = 0")
        return TestFunction(
            eval=pay.eval, grad0=np.zeros(dim), hess0=np.zeros((dim, dim)), bound=0.0
        )
    raise _bad("payoff", f"payoff kind {kind!r} has no generator form")


def _build_scenarios(kv, dim: int) -> UncertaintySet:
    by_index: dict[int, dict[str, str]] = {}
    for key, value in kv.items():
        m = _SCENARIO_KEY.match(key)
        if m:
            by_index.setdefault(int(m.group(1)), {})[m.group(2)] = value
    if not by_index:
        raise _bad("scenario.0.drift", "at least one scenario is required")
    if sorted(by_index) != list(range(len(by_index))):
        raise _bad(f"scenario.{max(by_index)}", "scenario indices must be 0..k without gaps")
    scenarios = []
    for i in sorted(by_index):
        fields = by_index[i]
        atoms = _parse_atoms(fields["atoms"], f"scenario.{i}.atoms") if "atoms" in fields else ()
        drift = (
            _floats(fields["drift"], f"scenario.{i}.drift")
            if "drift" in fields
            else [0.0] * dim
        )
        if len(drift) != dim:
            raise _bad(f"scenario.{i}.drift", f"need {dim} components")
        if "diffusion" in fields:
            flat = _floats(fields["diffusion"], f"scenario.{i}.diffusion")
            if len(flat) == 1 and dim == 1:
                diffusion = [[flat[0]]]
            elif len(flat) == dim * dim:
                diffusion = np.array(flat).reshape(dim, dim)
            else:
                raise _bad(f"scenario.{i}.diffusion", f"need {dim * dim} row-major entries")
        else:
            diffusion = np.zeros((dim, dim))
        try:
            scenarios.append(Scenario(atoms=atoms, drift=drift, diffusion=diffusion))
        except GLevyError as exc:
            raise _bad(f"scenario.{i}", exc.args[0])
    return validate_uncertainty_set(scenarios)


def _build_grid(kv) -> GridSpec:
    for key in ("grid.lower", "grid.upper"):
        if key not in kv:
            raise _bad(key, "required key is missing")
    lower = _floats(kv["grid.lower"], "grid.lower")
    upper = _floats(kv["grid.upper"], "grid.upper")
    if len(lower) != len(upper):
        raise _bad("grid.upper", "lower/upper length mismatch")
    if "grid.points" in kv:
        points = [int(p) for p in kv["grid.points"].split(",")]
        if len(points) == 1:
            points = points * len(lower)
        try:
            return GridSpec(lower=lower, upper=upper, points=points)
        except GLevyError as exc:
            raise _bad("grid.points", exc.args[0])
    if "grid.spacing" in kv:
        spacing = _float(kv, "grid.spacing")
        if spacing <= 0:
            raise _bad("grid.spacing", "must be positive")
        try:
            return uniform_grid(lower, upper, spacing)
        except GLevyError as exc:
            raise _bad("grid.spacing", exc.args[0])
    raise _bad("grid.spacing", "need grid.spacing or grid.points")


def _build_scheme(kv) -> SchemeConfig:
    try:
        return SchemeConfig(
            cfl_safety=_float(kv, "scheme.cfl_safety", 0.9),
            final_time=_float(kv, "scheme.final_time", 1.0),
            tolerance=_float(kv, "scheme.tolerance", 1e-8),
            boundary_mode=kv.get("scheme.boundary_mode", "clamp"),
        )
    except GLevyError as exc:
        raise _bad("scheme", exc.args[0])


def parse_config(text: str) -> JobConfig:
    """Parse and validate a config document into a JobConfig."""
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("PARSE_ERROR", f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError("PARSE_ERROR", f"line {lineno}: empty key or value")
        if key in kv:
            raise ConfigError("PARSE_ERROR", f"line {lineno}: duplicate key {key!r}")
        kv[key] = value

    command = kv.get("command")
    if command is None:
        raise _bad("command", "required key is missing")
    if command not in _ALLOWED:
        raise _bad("command", f"unknown command {command!r}")
    allowed = _ALLOWED[command]
    for key in kv:
        if key in allowed:
            continue
        if command in _SCENARIO_COMMANDS and _SCENARIO_KEY.match(key):
            continue
        raise _bad(key, "unknown key")

    job = JobConfig(command=command)
    job.out = kv.get("out")
    job.threads = _int(kv, "threads", 1)
    job.seed = _int(kv, "seed", 2026)
    if job.threads < 1:
        raise _bad("threads", "must be >= 1")
    if job.seed < 0:
        raise _bad("seed", "must be a nonnegative integer")

    if command == "check":
        return job

    if command == "gpoisson":
        job.lam = _float(kv, "lambda")
        if not (0.0 <= job.lam <= 1.0):
            raise _bad("lambda", f"{job.lam} not in [0, 1]")
        job.t = _float(kv, "t")
        if job.t < 0:
            raise _bad("t", "must be nonnegative")
        job.direction = kv.get("direction", "increasing")
        if job.direction not in ("increasing", "decreasing"):
            raise _bad("direction", f"{job.direction!r} is not increasing|decreasing")
        job.x = _float(kv, "x", 0.0)
        job.scheme = SchemeConfig(tolerance=_float(kv, "scheme.tolerance", 1e-10))
        job.payoff_kind, job.payoff = _build_payoff(kv)
        return job

    job.dim = _int(kv, "dim", 1)
    if job.dim < 1:
        raise _bad("dim", "must be >= 1")
    job.scheme = _build_scheme(kv)
    job.uset = _build_scenarios(kv, job.dim)
    job.payoff_kind, job.payoff = _build_payoff(kv)

    if "eval.x" in kv:
        pts = []
        for part in kv["eval.x"].split(";"):
            if part.strip():
                p = _floats(part, "eval.x")
                if len(p) != job.dim:
                    raise _bad("eval.x", f"point needs {job.dim} coordinates")
                pts.append(np.array(p))
        job.eval_points = pts
    else:
        job.eval_points = [np.zeros(job.dim)]

    if command == "solve":
        job.grid = _build_grid(kv)
        if job.grid.dim != job.dim:
            raise _bad("grid.lower", f"grid dimension != dim = {job.dim}")
        if "output_times" in kv:
            job.output_times = _floats(kv["output_times"], "output_times")
        else:
            job.output_times = [job.scheme.final_time]
        return job

    if command == "generator":
        job.grid = _build_grid(kv)
        if job.grid.dim != job.dim:
            raise _bad("grid.lower", f"grid dimension != dim = {job.dim}")
        if "delta" in kv:
            job.delta = _float(kv, "delta")
            if job.delta <= 0:
                raise _bad("delta", "must be positive")
        else:
            job.test_function = _build_test_function(kv, job.payoff_kind, job.payoff, job.dim)
        return job

    # expect
    if "times" not in kv:
        raise _bad("times", "required key is missing")
    job.times = _floats(kv["times"], "times")
    if any(t <= 0 for t in job.times) or any(
        b <= a for a, b in zip(job.times, job.times[1:])
    ):
        raise _bad("times", "must be strictly increasing positive reals")
    job.engine_dx = _float(kv, "engine.dx", 0.05)
    if job.engine_dx <= 0:
        raise _bad("engine.dx", "must be positive")
    job.engine_node_budget = _int(kv, "engine.node_budget", 400_000)
    job.engine_tail = _float(kv, "engine.tail", 1e-10)
    if not (0.0 < job.engine_tail < 1.0):
        raise _bad("engine.tail", "must be in (0, 1)")
    if any(k in kv for k in _GRID):
        job.grid = _build_grid(kv)
        if job.grid.dim != job.dim:
            raise _bad("grid.lower", f"grid dimension != dim = {job.dim}")
        if not (np.all(job.grid.lower < 0.0) and np.all(job.grid.upper > 0.0)):
            raise _bad("grid.lower", "expect grids must contain the origin")
    return job


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _enforce_padding(job: JobConfig, horizon: float) -> None:
    pad = min_padding(job.uset, horizon)
    lo = np.min(np.stack(job.eval_points), axis=0)
    hi = np.max(np.stack(job.eval_points), axis=0)
    if np.any(job.grid.lower > lo - pad + 1e-12) or np.any(job.grid.upper < hi + pad - 1e-12):
        raise _bad(
            "grid.lower",
            f"box must pad evaluation points by >= {pad:.6g} over horizon {horizon:.6g}",
        )


def _run_solve(job: JobConfig) -> str:
    _enforce_padding(job, job.scheme.final_time)
    result = solve(
        job.payoff, job.uset, job.grid, job.scheme, job.output_times, threads=job.threads
    )
    nodes = job.grid.nodes()
    header = "t," + ",".join(f"x{i + 1}" for i in range(job.grid.dim)) + ",u"
    lines = [header]
    for snap in result.snapshots:
        t_str = _fmt(snap.time_label)
        flat = snap.values.ravel()
        for point, value in zip(nodes, flat):
            coords = ",".join(_fmt(c) for c in point)
            lines.append(f"{t_str},{coords},{_fmt(value)}")
    return "\n".join(lines) + "\n"


def _run_value(value: float) -> str:
    return f"value\n{_fmt(value)}\n"


def run(job: JobConfig) -> tuple[int, str]:
    """Execute a job; returns (exit status, artifact text)."""
    if job.command == "solve":
        return 0, _run_solve(job)
    if job.command == "gpoisson":
        value = gpoisson_closed_form(
            job.payoff, job.direction, job.lam, job.t, job.x, tol=job.scheme.tolerance
        )
        return 0, _run_value(value)
    if job.command == "generator":
        if job.delta is not None:
            _enforce_padding(job, job.delta)
            value = small_time_quotient(
                job.payoff, job.uset, job.delta, job.grid, job.scheme, threads=job.threads
            )
        else:
            value = g_operator(job.test_function, job.uset)
        return 0, _run_value(value)
    if job.command == "expect":
        inner = job.payoff

        def summed(args):
            arr = np.asarray(args, dtype=float)
            lead = arr.shape[:-1]
            total = arr.reshape(lead + (len(job.times), job.dim)).sum(axis=-2)
            return inner.eval(total)

        xi = CylinderFunctional(
            times=tuple(job.times),
            payoff=summed,
            bound=inner.bound,
            lipschitz=inner.lipschitz,
            dim=job.dim,
        )
        var_grids = [job.grid] * len(job.times) if job.grid is not None else None
        value = expectation(
            xi,
            job.uset,
            job.scheme,
            dx=job.engine_dx,
            node_budget=job.engine_node_budget,
            tail=job.engine_tail,
            threads=job.threads,
            var_grids=var_grids,
        )
        return 0, _run_value(value)
    # check
    rows = run_checks(job.seed)
    lines = [
        f"{r.suite},{r.name},{_fmt(r.measured)},{_fmt(r.threshold)},"
        f"{'PASS' if r.passed else 'FAIL'}"
        for r in rows
    ]
    status = 0 if all(r.passed for r in rows) else 1
    return status, "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="glevy", description="Worst-case expectation batch jobs"
    )
    parser.add_argument("--config", required=True, help="path to a job config file")
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
    parser.add_argument("--threads", type=int, default=None, help="worker threads")
    parser.add_argument("--out", default=None, help="output path (default: stdout)")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error[PARSE_ERROR] cannot read config: {exc}", file=sys.stderr)
        return 1

    try:
        job = parse_config(text)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("VALIDATION_ERROR", "seed: must be a nonnegative integer")
            job.seed = args.seed
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("VALIDATION_ERROR", "threads: must be >= 1")
            job.threads = args.threads
        if args.out is not None:
            job.out = args.out
        status, artifact = run(job)
    except GLevyError as exc:
        print(f"error[{exc.code}] {exc.message}", file=sys.stderr)
        return 1

    if job.out:
        with open(job.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(artifact)
    else:
        try:
            sys.stdout.write(artifact)
            sys.stdout.flush()
        except BrokenPipeError:
            # consumer closed the pipe (e.g. head); not an error of ours
            return status
    return status


if __name__ == "__main__":
    sys.exit(main())
