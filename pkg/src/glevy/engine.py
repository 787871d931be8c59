"""Worst-case expectations of functionals of finitely many process increments.

A cylinder functional is xi = phi(D_1, ..., D_m) where D_k is the process
increment over (t_{k-1}, t_k].  Its worst-case expectation is built backward:
integrate out the last increment by solving the worst-case equation over the
last horizon with the earlier arguments frozen,

    phi_1(x_1, ..., x_{m-1}) = E*[ phi(x_1, ..., x_{m-1}, D_m) ],

then repeat on the result until a scalar phi_m remains.  Intermediate
functions are stored on tensor grids over the frozen variables with clamped
multilinear interpolation; conditional expectations are exactly those
intermediates, returned as grid functions of the first j increments.

Only horizon differences enter, so shifting every time by a constant leaves
all values unchanged.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .core import (
    GridFunction,
    GridSpec,
    Payoff,
    SchemeConfig,
    UncertaintySet,
    interpolate,
)
from .errors import EngineError, ValidationError
from .solver import evaluate, solve


@dataclass(frozen=True, eq=False)
class CylinderFunctional:
    """phi(D_1, ..., D_m) of m increments, each of dimension ``dim``.

    ``payoff`` receives the increments as one flat vector of length m*dim
    (earliest first); it may also accept an (n, m*dim) batch.  ``bound`` and
    ``lipschitz`` are sup-norm and Lipschitz constants of the payoff.
    """

    times: tuple[float, ...]
    payoff: Callable
    bound: float
    lipschitz: float
    dim: int = 1

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if len(times) == 0:
            raise ValidationError("BAD_SHAPE", "need at least one time")
        if not all(math.isfinite(t) for t in times):
            raise ValidationError("NON_FINITE", "times contain a non-finite entry")
        if times[0] <= 0.0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError("BAD_SHAPE", "times must be strictly increasing and positive")
        if not callable(self.payoff):
            raise ValidationError("BAD_SHAPE", "payoff must be callable")
        b, L = float(self.bound), float(self.lipschitz)
        if not (math.isfinite(b) and b >= 0 and math.isfinite(L) and L >= 0):
            raise ValidationError("NON_FINITE", "bound/lipschitz invalid")
        if int(self.dim) < 1:
            raise ValidationError("BAD_SHAPE", "dim must be >= 1")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "bound", b)
        object.__setattr__(self, "lipschitz", L)
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def m(self) -> int:
        return len(self.times)


def poisson_tail_quantile(mu: float, tail: float) -> int:
    """Smallest k with P(Poisson(mu) > k) < tail."""
    if mu <= 0.0:
        return 0
    p = math.exp(-mu)
    cumulative = p
    k = 0
    while 1.0 - cumulative >= tail:
        k += 1
        p *= mu / k
        cumulative += p
        if k > 10_000_000:
            raise ValidationError("NON_FINITE", "Poisson quantile failed to converge")
    return k


def increment_radius(uset: UncertaintySet, horizon: float, tail: float = 1e-10) -> float:
    """Reach of one increment: drift transport + 4 diffusion sigmas + stacked jumps.

    Jump stacking is covered to Poisson tail mass ``tail`` at the worst total
    rate; at least one jump range is always included when atoms exist.
    """
    h = float(horizon)
    r = uset.max_drift_norm() * h + 4.0 * uset.max_sigma() * math.sqrt(max(h, 0.0))
    zmax = uset.max_jump_norm()
    if zmax > 0.0:
        k = max(1, poisson_tail_quantile(uset.max_total_rate() * h, tail))
        r += zmax * k
    return r


def _centered_box(radius: float, dx: float, d: int) -> GridSpec:
    half = max(2, math.ceil(radius / dx - 1e-9))
    r = half * dx
    return GridSpec(
        lower=np.full(d, -r), upper=np.full(d, r), points=np.full(d, 2 * half + 1)
    )


def _frozen_spec(var_grids: Sequence[GridSpec], count: int) -> GridSpec:
    lower = np.concatenate([var_grids[i].lower for i in range(count)])
    upper = np.concatenate([var_grids[i].upper for i in range(count)])
    points = np.concatenate([var_grids[i].points for i in range(count)])
    return GridSpec(lower=lower, upper=upper, points=points)


def _level_payoff(current, prefix: np.ndarray, xi: CylinderFunctional) -> Payoff:
    """Payoff in the last remaining variable with all earlier ones frozen."""
    if isinstance(current, GridFunction):
        def ev(y):
            y = np.asarray(y, dtype=float)
            if y.ndim == 2:
                args = np.concatenate(
                    [np.broadcast_to(prefix, (y.shape[0], prefix.size)), y], axis=1
                )
            else:
                args = np.concatenate([prefix, y])
            return interpolate(current, args)
    else:
        def ev(y):
            y = np.asarray(y, dtype=float)
            if y.ndim == 2:
                args = np.concatenate(
                    [np.broadcast_to(prefix, (y.shape[0], prefix.size)), y], axis=1
                )
                return current(args)
            return float(current(np.concatenate([prefix, y])))
    return Payoff(eval=ev, bound=xi.bound, lipschitz=xi.lipschitz)


def _integrate_levels(
    xi: CylinderFunctional,
    uset: UncertaintySet,
    cfg: SchemeConfig,
    stop_at: int,
    dx: float,
    node_budget: int,
    tail: float,
    threads: int,
    var_grids: Sequence[GridSpec] | None,
):
    """Integrate out variables m, m-1, ..., stop_at+1; return the intermediate.

    Returns a scalar float when stop_at == 0, else a GridFunction over the
    first ``stop_at`` variables.
    """
    if uset.dim != xi.dim:
        raise ValidationError("BAD_SHAPE", f"set dim {uset.dim} != functional dim {xi.dim}")
    m, d = xi.m, xi.dim
    knots = (0.0,) + xi.times
    horizons = [knots[k + 1] - knots[k] for k in range(m)]
    if var_grids is None:
        var_grids = [_centered_box(increment_radius(uset, h, tail), dx, d) for h in horizons]
    else:
        var_grids = list(var_grids)
        if len(var_grids) != m:
            raise ValidationError("BAD_SHAPE", f"need {m} variable grids, got {len(var_grids)}")
        for g in var_grids:
            if g.dim != d:
                raise ValidationError("BAD_SHAPE", "variable grid dimension mismatch")

    current = xi.payoff
    for level in range(m, stop_at, -1):
        horizon = horizons[level - 1]
        ygrid = var_grids[level - 1]
        run_cfg = replace(cfg, final_time=horizon)
        origin = np.zeros(d)

        if level == 1:
            phi = _level_payoff(current, np.empty(0), xi)
            res = solve(phi, uset, ygrid, run_cfg, output_times=[horizon], threads=threads)
            return evaluate(res, horizon, origin)

        fspec = _frozen_spec(var_grids, level - 1)
        n_frozen = int(np.prod(fspec.shape))
        if n_frozen > node_budget:
            raise EngineError(
                "DIMENSION_OVERFLOW",
                f"frozen tensor grid has {n_frozen} nodes > budget {node_budget}",
            )
        nodes = fspec.nodes()

        def one(idx: int) -> float:
            phi = _level_payoff(current, nodes[idx], xi)
            res = solve(phi, uset, ygrid, run_cfg, output_times=[horizon])
            return evaluate(res, horizon, origin)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                vals = np.fromiter(pool.map(one, range(n_frozen)), dtype=float, count=n_frozen)
        else:
            vals = np.fromiter((one(i) for i in range(n_frozen)), dtype=float, count=n_frozen)
        current = GridFunction(fspec, vals.reshape(fspec.shape))
    return current


def expectation(
    xi: CylinderFunctional,
    uset: UncertaintySet,
    cfg: SchemeConfig,
    *,
    dx: float = 0.05,
    node_budget: int = 400_000,
    tail: float = 1e-10,
    threads: int = 1,
    var_grids: Sequence[GridSpec] | None = None,
) -> float:
    """Worst-case expectation of the cylinder functional.

    Per-variable grids default to centered boxes of radius
    :func:`increment_radius` at spacing ``dx``; pass ``var_grids`` to pin
    them (each must contain the origin).  DIMENSION_OVERFLOW is raised when
    a frozen tensor grid would exceed ``node_budget`` nodes.
    """
    return float(
        _integrate_levels(xi, uset, cfg, 0, dx, node_budget, tail, threads, var_grids)
    )


def conditional_expectation(
    xi: CylinderFunctional,
    j: int,
    uset: UncertaintySet,
    cfg: SchemeConfig,
    *,
    dx: float = 0.05,
    node_budget: int = 400_000,
    tail: float = 1e-10,
    threads: int = 1,
    var_grids: Sequence[GridSpec] | None = None,
) -> GridFunction:
    """The intermediate of the backward recursion, as a function of D_1..D_j.

    Returned on the tensor grid of the first j increment variables (axes in
    increment order, ``j * dim`` of them); evaluate with
    :func:`glevy.core.interpolate`.
    """
    j = int(j)
    if not (1 <= j < xi.m):
        raise ValidationError("BAD_SHAPE", f"conditioning index {j} not in [1, {xi.m - 1}]")
    out = _integrate_levels(xi, uset, cfg, j, dx, node_budget, tail, threads, var_grids)
    return out
