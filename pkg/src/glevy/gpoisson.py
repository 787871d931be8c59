"""Intensity-uncertain Poisson process: closed forms and the pure-jump series.

The process jumps by +1 with an intensity known only to lie in
[lambda_low, 1].  Its worst-case generator acting on the unit increment
a = u(x+1) - u(x) is

    G_lambda(a) = a+ - lambda * a-  = max(a, lambda * a),

realized exactly by the two-scenario family {lambda * delta_1, 1 * delta_1}
because the generator is linear in the intensity.  For monotone payoffs the
worst case is a classical Poisson process (intensity 1 when increasing,
lambda when decreasing), which gives the closed forms below.  For general
pure-jump uncertainty sets the series solution stacks powers of the
worst-case nonlocal operator with factorial weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GridFunction, GridSpec, Payoff, Scenario, UncertaintySet, sample_payoff
from .errors import ValidationError
from .solver import _atom_stencil, _translate

MAX_SERIES_LEVELS = 1_000_000
MAX_POISSON_TERMS = 10_000_000


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (0.0 <= lam <= 1.0) or not math.isfinite(lam):
        raise ValidationError("LAMBDA_RANGE", f"lambda {lam!r} not in [0, 1]")
    return lam


@dataclass(frozen=True)
class GPoissonSpec:
    """Intensity band [lambda_low, 1] with unit jump size."""

    lambda_low: float

    def __post_init__(self):
        object.__setattr__(self, "lambda_low", _check_lambda(self.lambda_low))

    def uncertainty_set(self) -> UncertaintySet:
        """The two extreme-intensity scenarios; they realize the sup exactly."""
        lo = Scenario(atoms=((np.array([1.0]), self.lambda_low),), drift=[0.0], diffusion=[[0.0]])
        hi = Scenario(atoms=((np.array([1.0]), 1.0),), drift=[0.0], diffusion=[[0.0]])
        if self.lambda_low == 1.0:
            return UncertaintySet((hi,))
        return UncertaintySet((lo, hi))

    def jump_measures(self) -> list[list[tuple[float, float]]]:
        """Atom lists for :func:`series_solution`: [(z, w)] per measure."""
        if self.lambda_low == 1.0:
            return [[(1.0, 1.0)]]
        return [[(1.0, self.lambda_low)], [(1.0, 1.0)]]


def g_lambda(a: float, lam: float) -> float:
    """a+ - lambda * a-, the worst case of l*a over intensities l in [lambda, 1]."""
    lam = _check_lambda(lam)
    a = float(a)
    return max(a, 0.0) - lam * max(-a, 0.0)


def suggested_clip(x: float, t: float) -> float:
    """Clip level far beyond the Poisson mass range reachable from x by time t."""
    return abs(x) + t + 40.0 * math.sqrt(max(t, 1.0))


def gpoisson_closed_form(
    phi: Payoff,
    direction: str,
    lam: float,
    t: float,
    x: float,
    tol: float = 1e-10,
) -> float:
    """Worst-case expectation of phi(x + B_t) for monotone phi.

    increasing -> sum_i (t^i / i!) phi(x + i) e^{-t}   (intensity 1 is worst)
    decreasing -> sum_i ((lam t)^i / i!) phi(x + i) e^{-lam t}

    Monotonicity in the stated direction is the caller's assertion.  The
    series stops once the remaining Poisson tail mass times ``phi.bound``
    drops below ``tol``.
    """
    lam = _check_lambda(lam)
    if direction not in ("increasing", "decreasing"):
        raise ValidationError("BAD_DIRECTION", f"direction {direction!r}")
    t = float(t)
    if not (math.isfinite(t) and t >= 0.0):
        raise ValidationError("BAD_SHAPE", f"t {t!r} must be nonnegative")
    tol = float(tol)
    if tol <= 0.0:
        raise ValidationError("BAD_TOLERANCE", f"tol {tol!r} must be positive")

    mu = t if direction == "increasing" else lam * t
    weight = math.exp(-mu)
    cumulative = 0.0
    acc = 0.0
    i = 0
    while True:
        acc += weight * float(phi.eval(np.array([x + i])))
        cumulative += weight
        if phi.bound * max(1.0 - cumulative, 0.0) < tol:
            return acc
        i += 1
        if i > MAX_POISSON_TERMS:
            raise ValidationError("NON_FINITE", "Poisson series failed to converge")
        weight *= mu / i


def _series_levels(two_lambda_t: float, bound: float, tol: float) -> int:
    """Smallest N with bound * sum_{i>N} x^i/i! < tol, x = 2*Lambda*t.

    Uses the geometric majorant sum_{i>N} x^i/i! <= x^{N+1}/(N+1)! / (1 - x/(N+2))
    once N+2 > x, so no exponential is ever formed.
    """
    x = two_lambda_t
    if bound == 0.0 or x == 0.0:
        return 0
    n = 0
    term_next = x  # x^{n+1} / (n+1)!
    while True:
        if n + 2 > x:
            tail = bound * term_next / (1.0 - x / (n + 2))
            if tail < tol:
                return n
        n += 1
        if n > MAX_SERIES_LEVELS:
            raise ValidationError("NON_FINITE", "series level count exploded")
        term_next *= x / (n + 1)


def series_solution(
    phi0: Payoff,
    grid: GridSpec,
    jump_measures,
    t: float,
    tol: float = 1e-8,
) -> GridFunction:
    """Factorial series for the worst-case pure-jump equation on a grid.

    Levels iterate the worst-case nonlocal operator on the previous iterate,

        phi_{i+1}(y) = max_v sum_k w_k (phi_i(y + z_k) - phi_i(y)),

    and the result is sum_{i<=N} (t^i / i!) phi_i with N fixed from the tail
    bound sum_{i>N} (2*Lambda*t)^i/i! * bound(phi0) < tol, Lambda the largest
    total mass.  Off-lattice jumps are sampled with the same clamped
    multilinear rule as the solver, so boundary effects stay local.
    """
    t = float(t)
    if not (math.isfinite(t) and t >= 0.0):
        raise ValidationError("BAD_SHAPE", f"t {t!r} must be nonnegative")
    tol = float(tol)
    if tol <= 0.0:
        raise ValidationError("BAD_TOLERANCE", f"tol {tol!r} must be positive")

    d = grid.dim
    measures = []
    for atoms in jump_measures:
        scen = Scenario(atoms=tuple(atoms), drift=np.zeros(d), diffusion=np.zeros((d, d)))
        stencils = [(w, _atom_stencil(z, grid.spacing)) for z, w in scen.atoms]
        measures.append((scen.total_rate, stencils))
    if not measures:
        raise ValidationError("EMPTY_SET", "no jump measures given")

    big_lambda = max(rate for rate, _ in measures)
    levels = _series_levels(2.0 * big_lambda * t, phi0.bound, tol)

    cur = sample_payoff(phi0, grid)
    total = cur.copy()
    coef = 1.0
    for i in range(1, levels + 1):
        best = None
        for rate, stencils in measures:
            val = -rate * cur
            for w, stencil in stencils:
                val += w * _translate(cur, stencil)
            best = val if best is None else np.maximum(best, val)
        cur = best
        coef *= t / i
        total += coef * cur
    return GridFunction(grid, total, t)
