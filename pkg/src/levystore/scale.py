"""Scale functions and first-passage characteristics.

Both orientations share one Laplace exponent psi(w) = w + log E e^{-w X(1)}
and therefore one family of r-scale functions

    int_0^inf e^{-wy} W^(r)(y) dy = 1 / (psi(w) - r),   w > Phi(r),

where Phi(r) is the largest root of psi(w) = r.  W^(r) grows like
e^{Phi(r) x}, which a fixed Bromwich contour cannot follow: the Euler sum
would have to cancel O(1) summands down to e^{-margin x}.  The identity
W^(r)(x) = e^{Phi(r) x} W_Phi(x), with W_Phi the bounded scale function of
the exponentially tilted exponent psi(. + Phi) - r, removes the growth
before inversion, so every value carries the inverter's full relative
accuracy uniformly in x.  The companion forms 1/(w (psi - r)) for the
antiderivative and psi/(w (psi - r)) for K^(r) = 1 + r int W^(r) are
tilted the same way.  Finite-variation exponents give originals that jump
at 0 (W(0+) = 1); the jump is split off analytically so the series is not
slowed by Gibbs oscillations near the origin.

The exceedance transforms then follow the classical two-sided exit
identities of fluctuation theory: for the level started at z in [0, u],

    storage:    E e^{-r tau(u)} = K^(r)(u-z) - r W^(r)(u-z) W^(r)(u) / W^(r)'_+(u)
    inventory:  E e^{-r tau(u)} = K^(r)(z) / K^(r)(u)

P(tau(u) < t) is recovered from the transform divided by r with the
Gaver-Stehfest inverter, which only ever needs real r and so never has to
chase Phi into the complex plane.

Grid tables are cached on disk keyed by family, parameters, r, grid and
engine settings; the directory honours the LEVYSTORE_CACHE_DIR variable.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.optimize import brentq

from .invlap import InversionConfig, euler_invert, gaver_stehfest_adaptive
from .models import (
    Family,
    LaplaceExponent,
    LevyModel,
    Orientation,
    UnsupportedModelError,
    density,
    laplace_exponent,
)
from .quad import QuadratureError, integrate

__all__ = [
    "ScaleConfig",
    "ScaleFunctionTable",
    "FirstPassageQuery",
    "ProbabilityResult",
    "phi",
    "default_grid",
    "scale_function",
    "w_point",
    "wbar_point",
    "k_point",
    "w_prime_plus",
    "fp_transform_storage",
    "fp_transform_inventory",
    "expected_tau_storage",
    "expected_tau_inventory",
    "overflow_by_time",
    "kendall_cross_check",
    "cache_dir",
    "cache_stats",
    "cache_clear",
]

_CACHE_VERSION = 2


@dataclass(frozen=True)
class ScaleConfig:
    """Engine settings shared by all scale-function operations.

    ``deriv_h`` is the base step of the one-sided derivative (scaled by
    max(1, u) when left at None)."""

    inversion: InversionConfig = field(default_factory=InversionConfig)
    stehfest_terms: int = 14
    deriv_h: float | None = None

    def __post_init__(self) -> None:
        if self.deriv_h is not None and self.deriv_h <= 0.0:
            raise ValueError("deriv_h must be positive")


DEFAULT_SCALE_CONFIG = ScaleConfig()


@dataclass(frozen=True)
class ProbabilityResult:
    """A probability together with the inverter's error estimate."""

    value: float
    error_estimate: float


@dataclass(frozen=True)
class FirstPassageQuery:
    """Exceedance-of-u question for the level started at z, 0 <= z <= u."""

    model: LevyModel
    z: float
    u: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.z) and np.isfinite(self.u)):
            raise ValueError("z and u must be finite")
        if not 0.0 <= self.z <= self.u:
            raise ValueError(f"need 0 <= z <= u, got z={self.z}, u={self.u}")
        if self.u <= 0.0:
            raise ValueError("threshold u must be positive")


def _as_exponent(model) -> LaplaceExponent:
    if isinstance(model, LaplaceExponent):
        return model
    if isinstance(model, LevyModel):
        return laplace_exponent(model)
    raise TypeError(f"expected LevyModel or LaplaceExponent, got {type(model)!r}")


# ---------------------------------------------------------------------------
# Phi and pointwise inversions


def phi(model, r: float) -> float:
    """Largest nonnegative root of psi(w) = r.

    psi is convex with psi(0) = 0, so for r > 0 the root is unique and
    positive; for r = 0 it is 0 unless the drift psi'(0+) is negative, in
    which case the second zero of psi is returned.
    """
    psi = _as_exponent(model)
    if not np.isfinite(r) or r < 0.0:
        raise ValueError(f"r must be finite and >= 0, got {r}")
    if r == 0.0 and psi.psi_prime0 >= 0.0:
        return 0.0
    if r == 0.0:
        # start just right of 0 where psi < 0 by the negative drift
        lo = 1e-12
        if psi(lo).real >= 0.0:
            return 0.0
    else:
        lo = 0.0
    hi = max(1.0, 2.0 * r)
    for _ in range(200):
        if psi(hi).real > r:
            break
        hi *= 2.0
    else:
        raise ValueError("could not bracket Phi(r); exponent does not grow")
    return float(brentq(lambda w: psi(w).real - r, lo, hi,
                        xtol=1e-15, rtol=8.9e-16))


def _invert_tilted(transform, x: np.ndarray, phi_r: float,
                   config: ScaleConfig,
                   jump: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Invert a tilted (bounded-original) transform, then restore growth.

    ``transform`` must already be the tilted form, i.e. the Laplace
    transform of e^{-phi_r x} f(x) with all singularities in Re w <= 0;
    inversion runs at zero contour shift and the result is scaled back by
    e^{phi_r x}.  A nonzero ``jump`` declares the original's value at 0+;
    the discontinuity is removed as jump/(w+1) before inversion and its
    original jump * e^{-x} restored after, which sidesteps the Gibbs-slow
    convergence the plain series has near the origin.  Entries with
    x = 0 are left untouched for the caller to fill exactly."""
    x = np.asarray(x, dtype=float)
    vals = np.empty_like(x)
    errs = np.zeros_like(x)
    pos = x > 0.0
    if np.any(pos):
        xp = x[pos]
        if jump != 0.0:
            smooth = lambda w: transform(w) - jump / (w + 1.0)
            v, e = euler_invert(smooth, xp, config=config.inversion)
            v = v + jump * np.exp(-xp)
        else:
            v, e = euler_invert(transform, xp, config=config.inversion)
        grow = np.exp(phi_r * xp)
        vals[pos] = v * grow
        errs[pos] = e * grow
    return vals, errs


def _k_hat(psi: LaplaceExponent, r: float, ph: float, x: np.ndarray,
           config: ScaleConfig) -> np.ndarray:
    """e^{-Phi(r) x} K^(r)(x): bounded, equal to 1 at x = 0."""
    xa = np.asarray(x, dtype=float)
    vals = np.ones_like(xa)
    pos = xa > 0.0
    if np.any(pos):
        tilted = lambda w: (psi(w + ph) / ((w + ph) * (psi(w + ph) - r))
                            - 1.0 / (w + 1.0))
        v, _ = euler_invert(tilted, xa[pos], config=config.inversion)
        vals[pos] = v + np.exp(-xa[pos])
    return vals


def w_point(model, r: float, x,
            config: ScaleConfig = DEFAULT_SCALE_CONFIG):
    """W^(r)(x) via tilted inversion of 1/(psi(. + Phi) - r).

    W^(r)(0) is exact: 1 for the unit-drift finite-variation families,
    0 under infinite variation."""
    psi = _as_exponent(model)
    ph = phi(model, r)
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0.0):
        raise ValueError("scale functions live on [0, inf)")
    w0 = 1.0 if psi.finite_variation else 0.0
    vals, _ = _invert_tilted(lambda w: 1.0 / (psi(w + ph) - r), xa, ph,
                             config, jump=w0)
    vals[xa == 0.0] = w0
    return float(vals[0]) if scalar else vals


def wbar_point(model, r: float, x,
               config: ScaleConfig = DEFAULT_SCALE_CONFIG):
    """Wbar^(r)(x) = int_0^x W^(r), inverted from 1/(w (psi - r))."""
    psi = _as_exponent(model)
    ph = phi(model, r)
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0.0):
        raise ValueError("scale functions live on [0, inf)")
    vals, _ = _invert_tilted(
        lambda w: 1.0 / ((w + ph) * (psi(w + ph) - r)), xa, ph, config)
    vals[xa == 0.0] = 0.0
    return float(vals[0]) if scalar else vals


def k_point(model, r: float, x,
            config: ScaleConfig = DEFAULT_SCALE_CONFIG):
    """K^(r)(x) = 1 + r Wbar^(r)(x) via its own transform psi/(w (psi - r)).

    K^(0) is identically 1 and K^(r)(0) = 1, both returned exactly."""
    psi = _as_exponent(model)
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0.0):
        raise ValueError("scale functions live on [0, inf)")
    if r == 0.0:
        vals = np.ones_like(xa)
    else:
        ph = phi(model, r)
        vals = np.exp(ph * xa) * _k_hat(psi, r, ph, xa, config)
    return float(vals[0]) if scalar else vals


def w_prime_plus(model, r: float, u: float,
                 config: ScaleConfig = DEFAULT_SCALE_CONFIG) -> float:
    """Right derivative of W^(r) at u > 0.

    One-sided differences at steps h, h/2, h/4 extrapolated twice; the
    base step trades the O(h^3) truncation of the extrapolant against the
    inversion noise amplified by 1/h."""
    if u <= 0.0:
        raise ValueError("derivative point must be positive")
    psi = _as_exponent(model)
    ph = phi(model, r)
    h = config.deriv_h if config.deriv_h is not None else 0.02 * max(1.0, u)
    pts = np.array([u, u + h, u + h / 2.0, u + h / 4.0])
    w0 = 1.0 if psi.finite_variation else 0.0
    vals, _ = _invert_tilted(lambda w: 1.0 / (psi(w + ph) - r), pts, ph,
                             config, jump=w0)
    d1 = (vals[1] - vals[0]) / h
    d2 = (vals[2] - vals[0]) / (h / 2.0)
    d3 = (vals[3] - vals[0]) / (h / 4.0)
    r12 = 2.0 * d2 - d1
    r23 = 2.0 * d3 - d2
    out = (4.0 * r23 - r12) / 3.0
    return float(out)


# ---------------------------------------------------------------------------
# Grid tables and the disk cache


@dataclass(frozen=True)
class ScaleFunctionTable:
    """W^(r), its antiderivative and K^(r) sampled on a grid.

    The table depends on the exponent only, never on the orientation;
    storage and inventory queries against the same model share it
    verbatim.  ``inversion_error`` is the largest pointwise error
    estimate the inverter reported on the grid."""

    label: str
    r: float
    phi_r: float
    grid: np.ndarray
    w_values: np.ndarray
    wbar_values: np.ndarray
    k_values: np.ndarray
    inversion_error: float
    model: LevyModel | None = None


def cache_dir() -> Path:
    env = os.environ.get("LEVYSTORE_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "levystore"


def cache_stats() -> tuple[int, int, Path]:
    """(number of cached tables, total bytes, directory)."""
    d = cache_dir()
    if not d.is_dir():
        return 0, 0, d
    files = sorted(d.glob("scale-*.npz"))
    return len(files), sum(f.stat().st_size for f in files), d


def cache_clear() -> int:
    d = cache_dir()
    if not d.is_dir():
        return 0
    n = 0
    for f in d.glob("scale-*.npz"):
        f.unlink()
        n += 1
    return n


def _cache_key(model: LevyModel, r: float, grid: np.ndarray,
               config: ScaleConfig) -> str:
    # orientation deliberately left out: the exponent is shared
    inv = config.inversion
    parts = [
        f"v{_CACHE_VERSION}",
        model.family.value,
        repr(tuple((k, float(v).hex()) for k, v in model.params)),
        float(r).hex(),
        hashlib.sha256(np.ascontiguousarray(grid, dtype=float).tobytes()).hexdigest(),
        float(inv.a_param).hex(),
        str(inv.n_pre),
        str(inv.n_euler),
    ]
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:32]


def default_grid(upper: float, n: int = 2001, x_small: float = 1e-8,
                 x_mid: float | None = None) -> np.ndarray:
    """Geometric-then-linear grid from 0 for scale-function tables.

    Infinite-activity exponents give W a vertical tangent at 0; geometric
    spacing below ``x_mid`` keeps the table's interpolation error in check
    there, linear spacing covers the rest."""
    if not np.isfinite(upper) or upper <= 0.0:
        raise ValueError("grid upper end must be positive")
    if n < 8:
        raise ValueError("need at least 8 grid points")
    mid = x_mid if x_mid is not None else min(0.5, upper / 4.0)
    if not 0.0 < x_small < mid < upper:
        raise ValueError("need 0 < x_small < x_mid < upper")
    n_log = n // 4
    head = np.geomspace(x_small, mid, n_log, endpoint=False)
    tail = np.linspace(mid, upper, n - n_log - 1)
    return np.concatenate([[0.0], head, tail])


def scale_function(model, r: float, grid,
                   config: ScaleConfig = DEFAULT_SCALE_CONFIG,
                   cache: bool = True) -> ScaleFunctionTable:
    """Tabulate W^(r), Wbar^(r) and K^(r) on an increasing grid from 0.

    Wbar is the cumulative Simpson integral of the tabulated W, so its
    quality is tied to the grid supplied; the pointwise operations
    (wbar_point, k_point) invert their own transforms instead and serve
    as an independent consistency check.  Tables for proper models are
    cached on disk; custom exponents are always rebuilt.
    """
    psi = _as_exponent(model)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 5:
        raise ValueError("grid must be one-dimensional with at least 5 points")
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0.0):
        raise ValueError("grid must start at 0 and increase strictly")
    if not np.isfinite(r) or r < 0.0:
        raise ValueError(f"r must be finite and >= 0, got {r}")

    is_model = isinstance(model, LevyModel)
    key = _cache_key(model, r, grid, config) if (cache and is_model) else None
    if key is not None:
        path = cache_dir() / f"scale-{key}.npz"
        if path.is_file():
            try:
                with np.load(path) as data:
                    return ScaleFunctionTable(
                        label=str(data["label"]),
                        r=float(data["r"]),
                        phi_r=float(data["phi_r"]),
                        grid=data["grid"],
                        w_values=data["w"],
                        wbar_values=data["wbar"],
                        k_values=data["k"],
                        inversion_error=float(data["err"]),
                        model=model,
                    )
            except (OSError, KeyError, ValueError):
                pass  # unreadable cache entry; rebuild and overwrite

    phi_r = phi(model, r)
    w0 = 1.0 if psi.finite_variation else 0.0
    w_vals, w_errs = _invert_tilted(lambda w: 1.0 / (psi(w + phi_r) - r),
                                    grid, phi_r, config, jump=w0)
    w_vals[grid == 0.0] = w0
    wbar_vals = cumulative_simpson(w_vals, x=grid, initial=0.0)
    k_vals = 1.0 + r * wbar_vals
    # scale functions grow exponentially, so the scalar quality figure is
    # the worst error relative to 1 + |W|
    err = float((w_errs / (1.0 + np.abs(w_vals))).max()) if grid.size else 0.0

    table = ScaleFunctionTable(
        label=psi.label, r=float(r), phi_r=phi_r, grid=grid,
        w_values=w_vals, wbar_values=wbar_vals, k_values=k_vals,
        inversion_error=err, model=model if is_model else None,
    )
    if key is not None:
        d = cache_dir()
        d.mkdir(parents=True, exist_ok=True)
        # written under a temp name ending in .npz (savez appends it
        # otherwise), then moved into place atomically
        tmp = d / f"scale-{key}.tmp-{os.getpid()}.npz"
        np.savez(tmp, label=np.str_(table.label), r=table.r, phi_r=table.phi_r,
                 grid=table.grid, w=table.w_values, wbar=table.wbar_values,
                 k=table.k_values, err=table.inversion_error)
        tmp.replace(d / f"scale-{key}.npz")
    return table


# ---------------------------------------------------------------------------
# First-passage transforms and expectations


def _require_orientation(model: LevyModel, wanted: Orientation, what: str) -> None:
    if model.orientation is not wanted:
        raise UnsupportedModelError(
            f"{what} applies to {wanted.value}-oriented models; "
            f"this model is {model.orientation.value}-oriented")


def _fp_storage_raw(query: FirstPassageQuery, r: float,
                    config: ScaleConfig) -> float:
    u, z = query.u, query.z
    k_uz = k_point(query.model, r, u - z, config)
    w_uz = w_point(query.model, r, u - z, config)
    w_u = w_point(query.model, r, u, config)
    wp_u = w_prime_plus(query.model, r, u, config)
    # ratio before product: W/W' stays O(1/Phi) while the bare product
    # of two scale values can overflow long before the result would
    return float(k_uz - r * w_uz * (w_u / wp_u))


def _fp_inventory_raw(query: FirstPassageQuery, r: float,
                      config: ScaleConfig) -> float:
    k_z = k_point(query.model, r, query.z, config)
    k_u = k_point(query.model, r, query.u, config)
    return float(k_z / k_u)


def _checked_transform(val: float, r: float) -> float:
    # transform of a nonnegative variable lives in [0, 1]; tiny excursions
    # are inversion fuzz, anything further means the subtraction in the
    # storage formula has lost its significant digits
    if not -1e-6 <= val <= 1.0 + 1e-6:
        raise ArithmeticError(
            f"first-passage transform out of range ({val} at r={r}); "
            "the scale-function subtraction cancelled; r is too large "
            "for these parameters")
    return float(min(max(val, 0.0), 1.0))


def fp_transform_storage(query: FirstPassageQuery, r: float,
                         config: ScaleConfig = DEFAULT_SCALE_CONFIG) -> float:
    """E e^{-r tau(u)} for the storage level started at z.

    At r = 0 this is P(tau(u) < infinity): 1 for every jump family (the
    input process climbs past any level eventually) and 0 for the
    degenerate model, whose level only decays.  The degenerate case is
    exact for all r: the formula collapses to K - K = 0.
    """
    _require_orientation(query.model, Orientation.STORAGE, "fp_transform_storage")
    if not np.isfinite(r) or r < 0.0:
        raise ValueError(f"r must be finite and >= 0, got {r}")
    if query.model.family is Family.DEGENERATE:
        return 0.0
    if r == 0.0:
        return 1.0
    return _checked_transform(_fp_storage_raw(query, r, config), r)


def fp_transform_inventory(query: FirstPassageQuery, r: float,
                           config: ScaleConfig = DEFAULT_SCALE_CONFIG) -> float:
    """E e^{-r tau(u)} = K^(r)(z) / K^(r)(u) for the inventory level.

    The reflected inventory level is recurrent whatever the demand rate,
    so r = 0 gives exactly 1."""
    _require_orientation(query.model, Orientation.INVENTORY, "fp_transform_inventory")
    if not np.isfinite(r) or r < 0.0:
        raise ValueError(f"r must be finite and >= 0, got {r}")
    if r == 0.0:
        return 1.0
    return _checked_transform(_fp_inventory_raw(query, r, config), r)


def expected_tau_storage(query: FirstPassageQuery,
                         config: ScaleConfig = DEFAULT_SCALE_CONFIG) -> float:
    """E tau(u) = W(u-z) W(u) / W'_+(u) - Wbar(u-z) with r = 0 scale
    functions; infinity for the degenerate model."""
    _require_orientation(query.model, Orientation.STORAGE, "expected_tau_storage")
    if query.model.family is Family.DEGENERATE:
        return math.inf
    u, z = query.u, query.z
    w_uz = w_point(query.model, 0.0, u - z, config)
    w_u = w_point(query.model, 0.0, u, config)
    wp_u = w_prime_plus(query.model, 0.0, u, config)
    wbar_uz = wbar_point(query.model, 0.0, u - z, config)
    if wp_u <= 0.0:
        return math.inf
    return float(w_uz * (w_u / wp_u) - wbar_uz)


def expected_tau_inventory(query: FirstPassageQuery,
                           config: ScaleConfig = DEFAULT_SCALE_CONFIG) -> float:
    """E tau(u) = Wbar(u) - Wbar(z) with r = 0 scale functions."""
    _require_orientation(query.model, Orientation.INVENTORY, "expected_tau_inventory")
    wbar_u = wbar_point(query.model, 0.0, query.u, config)
    wbar_z = wbar_point(query.model, 0.0, query.z, config)
    return float(wbar_u - wbar_z)


# ---------------------------------------------------------------------------
# Distribution of the passage time


def overflow_by_time(query: FirstPassageQuery, t: float,
                     config: ScaleConfig = DEFAULT_SCALE_CONFIG) -> ProbabilityResult:
    """P(tau(u) < t) = P(sup_{s<=t} Z(s) > u) by Gaver-Stehfest inversion
    of E e^{-r tau(u)} / r in r.

    The degenerate model is answered exactly (the passage time is u - z
    deterministically for the inventory and never happens for storage);
    the rational inverter would ring around that jump.  The inventory
    level climbs at most at unit speed, so tau >= u - z pathwise; the
    transform of tau - (u - z) is inverted instead, which keeps that hard
    zero exact and spares the inverter the kink it causes.  The error
    estimate is the inverter's order sensitivity and degrades for t far
    below the passage-time scale, where the transform must be sampled at
    large r.
    """
    if not np.isfinite(t) or t <= 0.0:
        raise ValueError(f"time horizon must be positive, got {t}")
    model = query.model
    u, z = query.u, query.z
    if model.family is Family.DEGENERATE:
        if model.orientation is Orientation.STORAGE:
            return ProbabilityResult(0.0, 0.0)
        return ProbabilityResult(1.0 if t > u - z else 0.0, 0.0)
    psi = _as_exponent(model)

    if model.orientation is Orientation.INVENTORY:
        lag = u - z
        tp = t - lag
        if tp <= 0.0:
            return ProbabilityResult(0.0, 0.0)

        # assembled in log space: with K = e^{Phi x} khat the lag-removed
        # transform is e^{r lag} K(z)/K(u) = e^{(r-Phi) lag} khat(z)/khat(u),
        # and r <= Phi(r) because psi(w) <= w for subordinator input, so
        # nothing here can overflow no matter how large the nodes get
        def transform(rv: np.ndarray) -> np.ndarray:
            out = np.empty(rv.shape)
            for i, r in enumerate(np.asarray(rv, dtype=float)):
                ph = phi(model, r)
                kz, ku = _k_hat(psi, r, ph, np.array([z, u]), config)
                out[i] = math.exp((r - ph) * lag) * (kz / ku) / r
            return out

        val, err = gaver_stehfest_adaptive(transform, tp,
                                           n_max=config.stehfest_terms)
    else:
        if z == u and not psi.finite_variation:
            # unbounded variation crosses any level it starts at instantly
            return ProbabilityResult(1.0, 0.0)

        # raw transform values: at the inverter's largest nodes the
        # storage formula may have cancelled to noise, which the order
        # selection absorbs into the error estimate rather than raising.
        # Nodes where the building blocks overflow double precision
        # (Phi(r) u beyond exp range) answer 0, the limit of the transform.
        def transform(rv: np.ndarray) -> np.ndarray:
            out = np.empty(rv.shape)
            for i, r in enumerate(np.asarray(rv, dtype=float)):
                if phi(model, r) * u > 600.0:
                    out[i] = 0.0
                else:
                    out[i] = _fp_storage_raw(query, float(r), config) / r
            return out

        val, err = gaver_stehfest_adaptive(transform, t,
                                           n_max=config.stehfest_terms)
    clipped = float(min(max(val, 0.0), 1.0))
    return ProbabilityResult(clipped, float(err + abs(val - clipped)))


def kendall_cross_check(model: LevyModel, u: float, t: float,
                        tol: float = 1e-8) -> ProbabilityResult:
    """P(Z(t) > u) for the inventory level started at z = 0, through the
    passage identity of the free process.

    With z = 0 the reflected level at a fixed time has the law of the
    running supremum of the net input Y(s) = s - X(s), and Y is
    spectrally negative, so Kendall's identity applies to its first
    passage over u:

        P(Z(t) > u) = P(sup_{s<=t} Y(s) > u) = int_0^t (u/s) f_{Y(s)}(u) ds

    with f_{Y(s)}(u) = f_X(s - u, s).  Note the left side is the level AT
    t, not the running supremum OF the reflected level; the identity
    lower-bounds overflow_by_time(z=0, u, t), with equality only for
    paths that never touch the empty state before passing u.  It is kept
    as an independent consistency probe for the transform machinery and
    the Monte Carlo level estimator.
    """
    _require_orientation(model, Orientation.INVENTORY, "kendall_cross_check")
    if u <= 0.0 or t <= 0.0:
        raise ValueError("need u > 0 and t > 0")
    if model.family is Family.DEGENERATE:
        # f_X(ds) collapses to a point mass at 0; the integral becomes
        # the deterministic statement Z(t) = t
        return ProbabilityResult(1.0 if t > u else 0.0, 0.0)
    if not model.has_density:
        raise UnsupportedModelError(
            f"kendall_cross_check needs a marginal density; "
            f"{model.family.value} has an atom")

    if model.family in (Family.GAMMA, Family.INVERSE_GAUSSIAN):
        # subordinator demand: Y(s) <= s, so passage needs s > u
        if t <= u:
            return ProbabilityResult(0.0, 0.0)
        lo, hi = u, t
        exponents = (None, None)
        if model.family is Family.GAMMA:
            a = model.param_dict["a"]
            if a * u < 1.0:
                # f_X(s-u, s) ~ (s-u)^{a s - 1} at the left end
                exponents = (min(a * u - 1.0, 0.0), None)
        breakpoints = ()
    else:
        lo, hi = 0.0, t
        exponents = (None, None)
        breakpoints = (u,) if u < t else ()

    def integrand(s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        ok = s > 0.0
        out[ok] = (u / s[ok]) * density(model, s[ok] - u, s[ok])
        return out

    try:
        res = integrate(integrand, lo, hi, tol=tol,
                        breakpoints=breakpoints, endpoint_exponents=exponents)
    except QuadratureError as e:
        res = e.result
    return ProbabilityResult(float(min(max(res.value, 0.0), 1.0)), res.error)
