"""Monotone explicit finite-difference solver for the worst-case integro-PDE

    du/dt = sup over scenarios of [ sum_k w_k (u(t, x + z_k) - u(t, x))
                                    + <q, Du(t, x)>
                                    + 1/2 tr(Q Q^T D^2 u(t, x)) ],
    u(0, .) = phi,

marched by forward Euler: u^{n+1} = u^n + dt * max_s apply_generator(u^n, s).
All spatial pieces are positive-coefficient stencils, so each step is a
monotone map of the node values once dt satisfies the step bound:

- jump terms interpolate u at x + z_k with clamped multilinear weights
  (a convex combination of node values),
- drift uses one-sided differences against the sign of each q_i,
- diagonal diffusion uses central second differences,
- cross terms use the seven-point stencil per axis pair that puts mass on
  the diagonal (a_ij > 0) or antidiagonal (a_ij < 0) corner neighbors;
  this requires a_ii / dx_i >= sum_{j != i} |a_ij| / dx_j for every axis i,
  else the scheme cannot be monotone and the solve is rejected.

Values beyond the box are clamp-extended (nearest boundary node), so the
scheme degrades to lower order near edges; callers pad the box beyond the
region of interest (see :func:`glevy.core.min_padding`).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import (
    EPSILON,
    SNAP_TOL,
    GridFunction,
    GridSpec,
    Payoff,
    Scenario,
    SchemeConfig,
    UncertaintySet,
    interpolate,
    sample_payoff,
)
from .errors import SolverError, ValidationError


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Solution snapshots plus the time stepping actually used."""

    snapshots: tuple[GridFunction, ...]
    dt_used: float
    steps: int


def _shift(values: np.ndarray, axis: int, offset: int) -> np.ndarray:
    """Translate node values by ``offset`` cells along ``axis``, clamp at edges."""
    n = values.shape[axis]
    idx = np.clip(np.arange(n) + offset, 0, n - 1)
    return np.take(values, idx, axis=axis)


def _shift2(values, i, si, j, sj):
    return _shift(_shift(values, i, si), j, sj)


def _atom_stencil(z: np.ndarray, spacing: np.ndarray) -> list[tuple[float, tuple[int, ...]]]:
    """Decompose sampling at x + z into clamped integer shifts with weights.

    Returns corner terms (weight, offsets) with weights summing to one; the
    same snap rule as point interpolation keeps lattice-aligned jumps exact.
    """
    u = z / spacing
    base = np.floor(u).astype(int)
    frac = u - base
    for a in range(len(frac)):
        if frac[a] < SNAP_TOL:
            frac[a] = 0.0
        elif frac[a] > 1.0 - SNAP_TOL:
            base[a] += 1
            frac[a] = 0.0
    terms = [(1.0, tuple())]
    for a in range(len(frac)):
        new = []
        for w, off in terms:
            if frac[a] == 0.0:
                new.append((w, off + (int(base[a]),)))
            else:
                new.append((w * (1.0 - frac[a]), off + (int(base[a]),)))
                new.append((w * frac[a], off + (int(base[a]) + 1,)))
        terms = new
    return [(w, off) for w, off in terms if w != 0.0]


def _translate(values: np.ndarray, stencil) -> np.ndarray:
    out = np.zeros_like(values)
    for w, offsets in stencil:
        shifted = values
        for axis, off in enumerate(offsets):
            if off != 0:
                shifted = _shift(shifted, axis, off)
        out += w * shifted
    return out


def apply_generator(g: GridFunction, s: Scenario) -> np.ndarray:
    """Evaluate one scenario's generator on every node of ``g``.

    Returns an array shaped like ``g.values``; boundary nodes see clamped
    (zero-difference) one-sided terms.
    """
    spec = g.spec
    if s.dim != spec.dim:
        raise ValidationError("BAD_SHAPE", f"scenario dim {s.dim} != grid dim {spec.dim}")
    v = g.values
    h = spec.spacing
    out = np.zeros_like(v)

    for z, w in s.atoms:
        out += w * (_translate(v, _atom_stencil(z, h)) - v)

    for i, qi in enumerate(s.drift):
        if qi > 0.0:
            out += qi * (_shift(v, i, +1) - v) / h[i]
        elif qi < 0.0:
            out += qi * (v - _shift(v, i, -1)) / h[i]

    a = s.diffusion_matrix
    for i in range(spec.dim):
        if a[i, i] != 0.0:
            out += 0.5 * a[i, i] * (_shift(v, i, +1) + _shift(v, i, -1) - 2.0 * v) / h[i] ** 2
    for i in range(spec.dim):
        for j in range(i + 1, spec.dim):
            if a[i, j] == 0.0:
                continue
            c = abs(a[i, j]) / (2.0 * h[i] * h[j])
            if a[i, j] > 0.0:
                corners = _shift2(v, i, +1, j, +1) + _shift2(v, i, -1, j, -1)
            else:
                corners = _shift2(v, i, +1, j, -1) + _shift2(v, i, -1, j, +1)
            out += c * (
                2.0 * v
                + corners
                - _shift(v, i, +1)
                - _shift(v, i, -1)
                - _shift(v, j, +1)
                - _shift(v, j, -1)
            )
    return out


def _check_resolvable(uset: UncertaintySet, spec: GridSpec) -> None:
    floor = float(np.min(spec.spacing)) / 2.0
    for s in uset.scenarios:
        for z, _ in s.atoms:
            if np.linalg.norm(z) < floor:
                raise SolverError(
                    "GRID_TOO_COARSE",
                    f"atom |z| = {np.linalg.norm(z):.3g} below half the finest spacing {floor:.3g}",
                )


def _check_monotone(uset: UncertaintySet, spec: GridSpec) -> None:
    h = spec.spacing
    for s in uset.scenarios:
        a = s.diffusion_matrix
        for i in range(spec.dim):
            off = sum(abs(a[i, j]) / h[j] for j in range(spec.dim) if j != i)
            if a[i, i] / h[i] < off - EPSILON:
                raise SolverError(
                    "NONMONOTONE_DIFFUSION",
                    f"axis {i}: a_ii/dx_i = {a[i, i] / h[i]:.3g} < "
                    f"sum |a_ij|/dx_j = {off:.3g}; no monotone stencil",
                )


def _scenario_rate(s: Scenario, h: np.ndarray) -> float:
    a = s.diffusion_matrix
    rate = s.total_rate
    rate += float(np.sum(np.abs(s.drift) / h))
    rate += float(np.sum(np.diag(a) / h**2))
    d = len(h)
    rate += sum(abs(a[i, j]) / (h[i] * h[j]) for i in range(d) for j in range(i + 1, d))
    return rate


def max_stable_step(uset: UncertaintySet, grid: GridSpec, cfg: SchemeConfig) -> float:
    """Largest monotone time step: cfl_safety over the worst scenario rate.

    Raises CFL_UNSATISFIABLE when the rate is non-finite or the step
    underflows to zero; returns ``inf`` when every scenario is inert.
    """
    worst = max(_scenario_rate(s, grid.spacing) for s in uset.scenarios)
    if not math.isfinite(worst):
        raise SolverError("CFL_UNSATISFIABLE", f"scenario rate {worst} is not finite")
    if worst == 0.0:
        return math.inf
    dt = cfg.cfl_safety / worst
    if dt <= 0.0:
        raise SolverError("CFL_UNSATISFIABLE", "stable step underflows to zero")
    return dt


def _sup_generator(g: GridFunction, uset: UncertaintySet, pool) -> np.ndarray:
    if pool is not None:
        parts = list(pool.map(lambda s: apply_generator(g, s), uset.scenarios))
    else:
        parts = [apply_generator(g, s) for s in uset.scenarios]
    out = parts[0]
    for p in parts[1:]:
        out = np.maximum(out, p)
    return out


def solve(
    phi: Payoff,
    uset: UncertaintySet,
    grid: GridSpec,
    cfg: SchemeConfig,
    output_times: Sequence[float] | None = None,
    threads: int = 1,
) -> SolveResult:
    """March the worst-case equation from ``phi`` and snapshot requested times.

    Parameters
    ----------
    output_times : sequence of floats in [0, cfg.final_time]
        Snapshot times; defaults to [cfg.final_time].  Steps are shortened so
        every requested time is hit exactly.
    threads : int
        Scenario generators within a step are evaluated on a thread pool when
        > 1; the reduction order is fixed, so results are identical for any
        value.
    """
    if grid.dim != uset.dim:
        raise ValidationError("BAD_SHAPE", f"grid dim {grid.dim} != scenario dim {uset.dim}")
    if output_times is None or len(output_times) == 0:
        output_times = [cfg.final_time]
    times = np.unique(np.asarray(output_times, dtype=float))
    if times.size and (times[0] < -EPSILON or times[-1] > cfg.final_time + EPSILON):
        raise ValidationError(
            "TIME_RANGE", f"output times must lie in [0, {cfg.final_time}]"
        )

    _check_resolvable(uset, grid)
    _check_monotone(uset, grid)
    dt_max = max_stable_step(uset, grid, cfg)

    values = sample_payoff(phi, grid)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    snapshots = []
    steps = 0
    t = 0.0
    try:
        for target in times:
            span = float(target) - t
            if span > EPSILON:
                n = 1 if not math.isfinite(dt_max) else max(1, math.ceil(span / dt_max - 1e-9))
                dt = span / n
                g = GridFunction(grid, values, t)
                for _ in range(n):
                    values = values + dt * _sup_generator(g, uset, pool)
                    g = GridFunction(grid, values, 0.0)
                steps += n
                t = float(target)
            snapshots.append(GridFunction(grid, values, float(target)))
    finally:
        if pool is not None:
            pool.shutdown()
    return SolveResult(snapshots=tuple(snapshots), dt_used=dt_max, steps=steps)


def evaluate(result: SolveResult, t: float, x) -> float:
    """Interpolated solution value at snapshot time ``t`` and point ``x``.

    Raises NO_SNAPSHOT unless some snapshot's time label matches ``t`` to
    1e-12.
    """
    for snap in result.snapshots:
        if abs(snap.time_label - t) <= 1e-12:
            return float(interpolate(snap, np.atleast_1d(np.asarray(x, dtype=float))))
    labels = [snap.time_label for snap in result.snapshots]
    raise SolverError("NO_SNAPSHOT", f"no snapshot at t = {t}; stored {labels}")
