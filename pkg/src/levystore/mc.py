"""Monte Carlo oracle for the reflected process.

Increment samplers are exact in distribution for every family, so the
only systematic gap between an estimate and its analytic counterpart is
time discretization: the grid supremum undershoots the continuous one,
hence exceedance probabilities and passage times are biased
conservatively and the bias shrinks with the step.

Path i is driven by its own RNG stream derived from (seed, i).  This
makes every result reproducible, independent of scheduling, and lets
`estimate` regenerate exactly the paths that `simulate_reflected_ensemble`
yields; `estimate_many` evaluates several functionals in one sweep and
returns bitwise what the one-at-a-time calls would.

Censoring conventions: TauMean extends the horizon geometrically (about
2^14-fold) and, failing that, records the reached horizon and counts the
path in `censored`, so the reported mean is a lower bound when the count
is nonzero.  TauTransform never extends; censored paths contribute zero
and the bound e^{-r T} on their true contribution is folded into the
reported standard error.  An all-censored TauMean ensemble raises
EstimationError rather than reporting a number with no content.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from functools import lru_cache
from itertools import islice
from typing import Iterator, Sequence

import numpy as np
from scipy import special as sc
from scipy.optimize import brentq

from . import stable as _stable
from .models import Family, LevyModel, Orientation
from .reflect import ReflectedPath, SamplePath, reflect

__all__ = [
    "SamplerError",
    "EstimationError",
    "SimulationConfig",
    "EstimatorResult",
    "LevelExceeds",
    "MaxExceeds",
    "TauMean",
    "TauTransform",
    "sample_increment",
    "simulate_reflected_ensemble",
    "estimate",
    "estimate_many",
    "dump_paths",
]

_Z95 = float(sc.ndtri(0.975))

# TauMean horizon extension: doubling rounds before declaring a path
# censored, and a per-chunk size cap so a single stubborn path cannot
# allocate hundreds of megabytes.
_MAX_EXTENSION_ROUNDS = 14
_MAX_CHUNK = 4_194_304

# tempered-stable rejection rounds over the shrinking remainder set
_REJECTION_ROUNDS = 200


class SamplerError(RuntimeError):
    """An increment sampler exhausted its retry budget."""


class EstimationError(RuntimeError):
    """The ensemble carries no information about the requested quantity."""


@dataclass(frozen=True)
class SimulationConfig:
    """Ensemble description: `paths` reflected paths sampled every `step`
    up to `horizon`, started at level `z0`.

    The grid is k*step for k = 0..n with n = round(horizon/step); a
    horizon that is not a multiple of the step is rounded to the nearest
    grid point.  `seed` feeds a SeedSequence and path i uses spawn key
    (i,), so any subset of the ensemble can be regenerated alone.
    """

    model: LevyModel
    horizon: float
    step: float
    paths: int
    seed: int
    z0: float = 0.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.horizon) and self.horizon > 0.0):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if not (np.isfinite(self.step) and 0.0 < self.step <= self.horizon):
            raise ValueError(
                f"step must lie in (0, horizon], got {self.step} with horizon {self.horizon}")
        if not isinstance(self.paths, (int, np.integer)) or self.paths < 1:
            raise ValueError(f"paths must be a positive integer, got {self.paths}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not (np.isfinite(self.z0) and self.z0 >= 0.0):
            raise ValueError(f"initial level must be finite and >= 0, got {self.z0}")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.horizon / self.step)))

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.step


@dataclass(frozen=True)
class EstimatorResult:
    """Point estimate with a 95% normal-approximation interval.

    `censored` counts paths whose passage never resolved (see the module
    docstring for how each functional treats them); it is zero for the
    exceedance probabilities.
    """

    estimate: float
    std_error: float
    ci_low: float
    ci_high: float
    paths: int
    censored: int = 0

    def __post_init__(self) -> None:
        if not self.ci_low <= self.estimate <= self.ci_high:
            raise ValueError(
                f"inconsistent interval [{self.ci_low}, {self.ci_high}] "
                f"around {self.estimate}")


@dataclass(frozen=True)
class LevelExceeds:
    """P(Z(t) > u); t = None means the config horizon."""

    u: float
    t: float | None = None


@dataclass(frozen=True)
class MaxExceeds:
    """P(max of Z over the grid up to t exceeds u); t = None means the
    config horizon."""

    u: float
    t: float | None = None


@dataclass(frozen=True)
class TauMean:
    """E tau(u) for tau(u) = inf{t : Z(t) > u}."""

    u: float


@dataclass(frozen=True)
class TauTransform:
    """E e^{-r tau(u)}, censored paths contributing zero."""

    u: float
    r: float


# ---------------------------------------------------------------------------
# increment samplers


def sample_increment(model: LevyModel, dt: float, rng: np.random.Generator,
                     size=None):
    """Draw X(dt), exactly in distribution.

    Gamma and compound Poisson come straight from their closed forms
    (the latter as a Poisson count feeding a gamma sum), inverse
    Gaussian uses the two-root transform of Michael, Schucany and Haas,
    stable uses Chambers-Mallows-Stuck with beta = 1 in the same
    parametrization as the density tables, and tempered stable rejects
    stable proposals against the exponential tilt.

    `size` follows numpy conventions; None returns a scalar float.
    Raises SamplerError if the tempered-stable rejection loop exhausts
    its budget, which happens only when lam * scale(dt) is large enough
    to make the tilt acceptance vanish.
    """
    if not (np.isfinite(dt) and dt > 0.0):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    p = model.param_dict
    fam = model.family
    if fam is Family.GAMMA:
        out = rng.gamma(p["a"] * dt, p["b"], size=size)
    elif fam is Family.INVERSE_GAUSSIAN:
        out = _ig_draw(p["delta"] * dt, p["gamma"], rng, size)
    elif fam is Family.STABLE:
        alpha, sigma = p["alpha"], p["sigma"]
        out = (_stable.process_scale(alpha, sigma, dt) * _cms_standard(alpha, rng, size)
               + _stable.process_shift(alpha, sigma, dt))
    elif fam is Family.TEMPERED_STABLE:
        out = _tempered_draw(p["alpha"], p["sigma"], p["lam"], dt, rng, size)
    elif fam is Family.COMPOUND_POISSON:
        counts = rng.poisson(p["rate"] * dt, size=size)
        out = rng.gamma(counts, p["mean"], size=size)  # gamma(0, m) == 0
    else:
        out = np.zeros(size) if size is not None else 0.0
    return float(out) if size is None else out


def _ig_draw(dd: float, g: float, rng: np.random.Generator, size):
    # inverse Gaussian with mean dd/g and shape dd^2; the smaller root is
    # written subtraction-free so large normal draws stay accurate
    mu = dd / g
    lam = dd * dd
    w = mu * np.square(rng.standard_normal(size))
    denom = np.square(np.sqrt(w * (w + 4.0 * lam)) + w)
    with np.errstate(divide="ignore", invalid="ignore"):
        x1 = np.where(denom > 0.0, 4.0 * mu * lam * w / denom, mu)
    second = rng.random(size) * (mu + x1) > mu
    return np.where(second, mu * mu / x1, x1)


def _cms_standard(alpha: float, rng: np.random.Generator, size):
    """Standardized S1 draw with beta = 1 (Chambers-Mallows-Stuck).

    The angle lives on (-pi/2, pi/2]: open at the left end, where the
    alpha > 1 kernel would take cos of exactly pi/2.
    """
    v = math.pi * (0.5 - rng.random(size))
    w = rng.standard_exponential(size)
    if alpha == 1.0:
        h = 0.5 * math.pi + v
        return (2.0 / math.pi) * (h * np.tan(v)
                                  - np.log(0.5 * math.pi * w * np.cos(v) / h))
    ta = math.tan(0.5 * math.pi * alpha)
    b = math.atan(ta) / alpha
    scale = (1.0 + ta * ta) ** (0.5 / alpha)
    return (scale * np.sin(alpha * (v + b)) / np.cos(v) ** (1.0 / alpha)
            * (np.cos(v - alpha * (v + b)) / w) ** ((1.0 - alpha) / alpha))


@lru_cache(maxsize=256)
def _tilt_anchor(alpha: float, sigma: float, lam: float, dt: float) -> float:
    """Leftmost proposal point the exponential tilt can see.

    The standardized proposal's left tail obeys -log f(-q) ~ c2 q^p with
    p = alpha/(alpha-1), so the anchor solves c2 q^p - lam gs q = 34,
    putting ~1e-13 of the tilted mass below it; capping the acceptance
    ratio at one there is harmless.  Large lam gs pushes the root out
    and the acceptance toward zero, which surfaces as the retry-budget
    error rather than as silent bias.
    """
    gs = float(_stable.process_scale(alpha, sigma, dt))
    p = alpha / (alpha - 1.0)
    c2 = ((alpha - 1.0) * alpha ** -p
          * abs(math.cos(0.5 * math.pi * alpha)) ** (-1.0 / (alpha - 1.0)))
    rate = lam * gs

    def gap(q):
        return c2 * q ** p - rate * q - 34.0

    hi = 2.0
    while gap(hi) < 0.0:
        hi *= 2.0
    return -gs * brentq(gap, 0.0, hi, xtol=1e-10)


def _tempered_draw(alpha: float, sigma: float, lam: float, dt: float,
                   rng: np.random.Generator, size):
    # exponential tilt of the stable increment: propose y from the
    # stable marginal at dt, accept with probability e^{-lam (y - y0)}
    # capped at one below the anchor y0
    gs = float(_stable.process_scale(alpha, sigma, dt))
    y0 = _tilt_anchor(alpha, sigma, lam, dt)
    shift = dt * sigma * math.gamma(-alpha) * alpha * lam ** (alpha - 1.0)
    out = np.empty(() if size is None else size)
    flat = out.reshape(-1)
    todo = np.arange(flat.size)
    for _ in range(_REJECTION_ROUNDS):
        if todo.size == 0:
            break
        y = gs * _cms_standard(alpha, rng, todo.size)
        keep = np.log(rng.random(todo.size)) <= -lam * (y - y0)
        flat[todo[keep]] = y[keep]
        todo = todo[~keep]
    if todo.size:
        raise SamplerError(
            f"tempered-stable rejection kept {flat.size - todo.size} of "
            f"{flat.size} draws after {_REJECTION_ROUNDS} rounds "
            f"(alpha={alpha}, lam={lam}, dt={dt}); the tilt acceptance is "
            f"too small at this step")
    out += shift
    return out


# ---------------------------------------------------------------------------
# ensembles


def _path_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _net_increments(config: SimulationConfig, rng: np.random.Generator,
                    n: int) -> np.ndarray:
    inc = sample_increment(config.model, config.step, rng, size=n)
    if config.model.orientation is Orientation.STORAGE:
        return inc - config.step
    return config.step - inc


def _net_path(config: SimulationConfig, rng: np.random.Generator,
              n: int) -> np.ndarray:
    y = np.empty(n + 1)
    y[0] = 0.0
    np.cumsum(_net_increments(config, rng, n), out=y[1:])
    return y


def simulate_reflected_ensemble(config: SimulationConfig) -> Iterator[ReflectedPath]:
    """Yield the reflected paths one at a time.

    Memory stays at a single path; path i depends only on (seed, i), so
    slicing or parallelizing the ensemble changes nothing.
    """
    times = config.times()
    for i in range(config.paths):
        rng = _path_rng(config.seed, i)
        y = _net_path(config, rng, config.n_steps)
        yield reflect(SamplePath(times, y, config.model), config.z0)


def dump_paths(config: SimulationConfig, destination, max_paths: int | None = None) -> int:
    """Write the ensemble to CSV with columns path, time, y, z.

    `destination` is a filename or an open text file; returns the number
    of data rows written.
    """
    own = isinstance(destination, (str, os.PathLike))
    fh = open(destination, "w", newline="") if own else destination
    rows = 0
    try:
        writer = csv.writer(fh)
        writer.writerow(["path", "time", "y", "z"])
        for i, rp in enumerate(islice(simulate_reflected_ensemble(config), max_paths)):
            for t, yv, zv in zip(rp.path.times, rp.path.values, rp.levels):
                writer.writerow([i, repr(float(t)), repr(float(yv)), repr(float(zv))])
                rows += 1
    finally:
        if own:
            fh.close()
    return rows


# ---------------------------------------------------------------------------
# estimators


def _grid_index(t: float, config: SimulationConfig) -> int:
    """Nearest grid index for a query time; must not exceed the horizon."""
    if not (np.isfinite(t) and t >= 0.0):
        raise ValueError(f"query time must be finite and >= 0, got {t}")
    idx = int(round(t / config.step))
    if idx > config.n_steps:
        raise ValueError(
            f"query time {t} lies beyond the simulated horizon "
            f"{config.n_steps * config.step}")
    return idx


def _prepare(functional, config: SimulationConfig):
    if isinstance(functional, (LevelExceeds, MaxExceeds)):
        if not (np.isfinite(functional.u) and functional.u >= 0.0):
            raise ValueError(f"threshold must be finite and >= 0, got {functional.u}")
        t = config.horizon if functional.t is None else functional.t
        kind = "level" if isinstance(functional, LevelExceeds) else "max"
        return (kind, functional.u, 0.0, _grid_index(t, config))
    if isinstance(functional, TauMean):
        if not (np.isfinite(functional.u) and functional.u > 0.0):
            raise ValueError(f"passage level must be finite and > 0, got {functional.u}")
        return ("tau_mean", functional.u, 0.0, config.n_steps)
    if isinstance(functional, TauTransform):
        if not (np.isfinite(functional.u) and functional.u > 0.0):
            raise ValueError(f"passage level must be finite and > 0, got {functional.u}")
        if not (np.isfinite(functional.r) and functional.r >= 0.0):
            raise ValueError(f"transform argument must be finite and >= 0, got {functional.r}")
        return ("tau_transform", functional.u, functional.r, config.n_steps)
    raise TypeError(f"unknown functional {functional!r}")


def _first_above(levels: np.ndarray, u: float) -> int:
    above = levels > u
    return int(np.argmax(above)) if above.any() else -1


def _extend_for_tau(config: SimulationConfig, rng: np.random.Generator,
                    z_end: float, specs, vals: np.ndarray, censored,
                    pending: list, i: int) -> None:
    # continue the same stream past the horizon in doubling chunks; the
    # reflection restarts exactly from the boundary state
    step = config.step
    chunk = config.n_steps
    t_base = config.n_steps * step
    z_cur = z_end
    for _ in range(_MAX_EXTENSION_ROUNDS):
        y = _net_path(config, rng, chunk)
        levels = reflect(SamplePath(np.arange(chunk + 1) * step, y, config.model),
                         z_cur).levels
        for j in list(pending):
            k = _first_above(levels[1:], specs[j][1])
            if k >= 0:
                vals[j, i] = t_base + (k + 1) * step
                pending.remove(j)
        if not pending:
            return
        z_cur = float(levels[-1])
        t_base += chunk * step
        chunk = min(chunk * 2, _MAX_CHUNK)
    for j in pending:
        vals[j, i] = t_base
        censored[j] += 1


def estimate_many(functionals: Sequence, config: SimulationConfig) -> list[EstimatorResult]:
    """Estimate several functionals from one sweep of the ensemble.

    Returns results in input order, bitwise equal to separate `estimate`
    calls; the sweep only avoids regenerating the paths per functional.
    """
    specs = [_prepare(f, config) for f in functionals]
    if not specs:
        return []
    n = config.paths
    vals = np.empty((len(specs), n))
    censored = [0] * len(specs)
    times = config.times()
    for i in range(n):
        rng = _path_rng(config.seed, i)
        y = _net_path(config, rng, config.n_steps)
        levels = reflect(SamplePath(times, y, config.model), config.z0).levels
        pending = []
        for j, (kind, u, r, idx) in enumerate(specs):
            if kind == "level":
                vals[j, i] = float(levels[idx] > u)
            elif kind == "max":
                vals[j, i] = float(np.max(levels[: idx + 1]) > u)
            else:
                k = _first_above(levels, u)
                if kind == "tau_transform":
                    if k < 0:
                        vals[j, i] = 0.0
                        censored[j] += 1
                    else:
                        vals[j, i] = math.exp(-r * k * config.step)
                elif k >= 0:
                    vals[j, i] = k * config.step
                else:
                    pending.append(j)
        if pending:
            _extend_for_tau(config, rng, float(levels[-1]), specs, vals,
                            censored, pending, i)

    horizon_eff = config.n_steps * config.step
    out = []
    for j, (kind, u, r, idx) in enumerate(specs):
        if kind == "tau_mean" and censored[j] == n:
            raise EstimationError(
                f"all {n} paths right-censored for TauMean(u={u}); no passage "
                f"observed within the extension budget")
        mean = float(vals[j].mean())
        se = float(vals[j].std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
        if kind == "tau_transform" and censored[j]:
            # censored paths enter as zero; their true contribution is at
            # most e^{-r T} each, folded into the uncertainty
            se += math.exp(-r * horizon_eff) * censored[j] / n
        out.append(EstimatorResult(mean, se, mean - _Z95 * se, mean + _Z95 * se,
                                   n, censored[j]))
    return out


def estimate(functional, config: SimulationConfig) -> EstimatorResult:
    """Monte Carlo estimate of one functional over a fresh ensemble.

    The module docstring states the censoring conventions; SamplerError
    and EstimationError propagate from the samplers and the censoring
    logic respectively.
    """
    return estimate_many((functional,), config)[0]
