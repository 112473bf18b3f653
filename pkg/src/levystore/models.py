"""Driving-process models for storage and inventory systems.

A `LevyModel` is a nondecreasing (or spectrally positive) input process
X together with an orientation: storage nets out a unit release rate,
Y(t) = X(t) - t, inventory feeds a unit rate against demand,
Y(t) = t - X(t).  The content process is the reflection of Y at zero.

Supported families and their parameter records:

    gamma                 a (shape rate), b (scale)
    inverse_gaussian      delta, gamma; X(s) ~ IG(mean delta*s/gamma,
                          shape (delta*s)^2)
    stable                alpha in [1, 2), sigma (jump density
                          sigma * x^{-1-alpha}), zero-mean version;
                          alpha = 1 admits density/cdf/sampling only
                          (E X(1) diverges there, so no exponent).  The
                          Gaussian boundary N(0, 2 sigma^2 s) stays
                          reachable through stable_density(alpha=2) as
                          a reference curve.
    tempered_stable       alpha in (1, 2), sigma, lam (tempering rate),
                          zero-mean version
    compound_poisson_exp  rate, mean; exponential jumps, atom at zero
    degenerate            X identically 0

The Laplace exponent is taken in the spectrally-negative convention for
-Y: psi(w) = w + log E exp(-w X(1)).  It is the same function for both
orientations, which is why first-passage machinery downstream never
looks at the orientation except to decide which boundary is being hit.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Mapping

import numpy as np
from scipy import special as sc

from . import stable as _stable

__all__ = [
    "Family",
    "Orientation",
    "LevyModel",
    "LaplaceExponent",
    "UnsupportedModelError",
    "density",
    "cdf",
    "stable_density",
    "laplace_exponent",
]


class UnsupportedModelError(ValueError):
    """An operation was asked of a family that cannot provide it."""


class Family(str, Enum):
    GAMMA = "gamma"
    INVERSE_GAUSSIAN = "inverse_gaussian"
    STABLE = "stable"
    TEMPERED_STABLE = "tempered_stable"
    COMPOUND_POISSON = "compound_poisson_exp"
    DEGENERATE = "degenerate"


class Orientation(str, Enum):
    STORAGE = "storage"      # Y(t) = X(t) - t, content fed by X
    INVENTORY = "inventory"  # Y(t) = t - X(t), content drained by X


_PARAM_KEYS = {
    Family.GAMMA: ("a", "b"),
    Family.INVERSE_GAUSSIAN: ("delta", "gamma"),
    Family.STABLE: ("alpha", "sigma"),
    Family.TEMPERED_STABLE: ("alpha", "sigma", "lam"),
    Family.COMPOUND_POISSON: ("rate", "mean"),
    Family.DEGENERATE: (),
}


@dataclass(frozen=True)
class LevyModel:
    """Family tag, parameter record and orientation.

    Instances are immutable and hashable so they can serve as cache
    keys.  Use the per-family constructors rather than building the
    parameter tuple by hand.
    """

    family: Family
    params: tuple[tuple[str, float], ...]
    orientation: Orientation = Orientation.STORAGE

    def __post_init__(self):
        if not isinstance(self.family, Family):
            object.__setattr__(self, "family", Family(self.family))
        if not isinstance(self.orientation, Orientation):
            object.__setattr__(self, "orientation", Orientation(self.orientation))
        keys = _PARAM_KEYS[self.family]
        got = tuple(k for k, _ in self.params)
        if got != keys:
            raise ValueError(f"{self.family.value} expects params {keys}, got {got}")
        p = dict(self.params)
        for k, v in p.items():
            if not math.isfinite(v):
                raise ValueError(f"parameter {k} must be finite")
            if k != "alpha" and v <= 0:
                raise ValueError(f"parameter {k} must be positive")
        if self.family is Family.STABLE:
            if not (1.0 <= p["alpha"] < 2.0):
                raise ValueError(
                    f"stable alpha must lie in [1, 2), got {p['alpha']}")
        if self.family is Family.TEMPERED_STABLE:
            if not (1.0 < p["alpha"] < 2.0):
                raise ValueError(
                    f"tempered stable alpha must lie in (1, 2), got {p['alpha']}; "
                    "the alpha = 1 boundary has no zero-mean tilt representation")

    # -- constructors ---------------------------------------------------

    @classmethod
    def gamma(cls, a: float, b: float,
              orientation: Orientation = Orientation.STORAGE) -> "LevyModel":
        return cls(Family.GAMMA, (("a", float(a)), ("b", float(b))), orientation)

    @classmethod
    def inverse_gaussian(cls, delta: float, gamma: float,
                         orientation: Orientation = Orientation.STORAGE) -> "LevyModel":
        return cls(Family.INVERSE_GAUSSIAN,
                   (("delta", float(delta)), ("gamma", float(gamma))), orientation)

    @classmethod
    def stable(cls, alpha: float, sigma: float,
               orientation: Orientation = Orientation.STORAGE) -> "LevyModel":
        return cls(Family.STABLE,
                   (("alpha", float(alpha)), ("sigma", float(sigma))), orientation)

    @classmethod
    def tempered_stable(cls, alpha: float, sigma: float, lam: float,
                        orientation: Orientation = Orientation.STORAGE) -> "LevyModel":
        return cls(Family.TEMPERED_STABLE,
                   (("alpha", float(alpha)), ("sigma", float(sigma)),
                    ("lam", float(lam))), orientation)

    @classmethod
    def compound_poisson(cls, rate: float, mean: float,
                         orientation: Orientation = Orientation.STORAGE) -> "LevyModel":
        return cls(Family.COMPOUND_POISSON,
                   (("rate", float(rate)), ("mean", float(mean))), orientation)

    @classmethod
    def degenerate(cls, orientation: Orientation = Orientation.STORAGE) -> "LevyModel":
        return cls(Family.DEGENERATE, (), orientation)

    # -- accessors ------------------------------------------------------

    def param(self, name: str) -> float:
        for k, v in self.params:
            if k == name:
                return v
        raise KeyError(name)

    @property
    def param_dict(self) -> Mapping[str, float]:
        return dict(self.params)

    def with_orientation(self, orientation: Orientation) -> "LevyModel":
        return replace(self, orientation=orientation)

    # -- structural facts -----------------------------------------------

    @property
    def mean_rate(self) -> float:
        """E X(1); infinite at the stable alpha = 1 boundary."""
        p = self.param_dict
        if self.family is Family.GAMMA:
            return p["a"] * p["b"]
        if self.family is Family.INVERSE_GAUSSIAN:
            return p["delta"] / p["gamma"]
        if self.family is Family.STABLE:
            if p["alpha"] == 1.0:
                return math.inf
            return 0.0
        if self.family is Family.TEMPERED_STABLE:
            return 0.0
        if self.family is Family.COMPOUND_POISSON:
            return p["rate"] * p["mean"]
        return 0.0

    @property
    def variance_rate(self) -> float:
        """Var X(1); inf for the stable family."""
        p = self.param_dict
        if self.family is Family.GAMMA:
            return p["a"] * p["b"] ** 2
        if self.family is Family.INVERSE_GAUSSIAN:
            return p["delta"] / p["gamma"] ** 3
        if self.family is Family.STABLE:
            if p["alpha"] == 2.0:
                return 2.0 * p["sigma"] ** 2
            return math.inf
        if self.family is Family.TEMPERED_STABLE:
            a, s, lam = p["alpha"], p["sigma"], p["lam"]
            return s * math.gamma(-a) * a * (a - 1.0) * lam ** (a - 2.0)
        if self.family is Family.COMPOUND_POISSON:
            return 2.0 * p["rate"] * p["mean"] ** 2
        return 0.0

    @property
    def finite_variation(self) -> bool:
        if self.family in (Family.GAMMA, Family.INVERSE_GAUSSIAN,
                           Family.COMPOUND_POISSON, Family.DEGENERATE):
            return True
        return False

    @property
    def has_density(self) -> bool:
        return self.family not in (Family.COMPOUND_POISSON, Family.DEGENERATE)


# ---------------------------------------------------------------------------
# Laplace exponents


@dataclass(frozen=True)
class LaplaceExponent:
    """psi(w) = w + log E exp(-w X(1)), complex-safe for Re w > 0.

    `drift` is the limit psi(w)/w at infinity (1 for the finite-variation
    families, None when the limit diverges), `psi_prime0` is psi'(0+),
    both of which the scale-function machinery needs.  `label` is a
    human-readable tag used in cache keys and error messages.
    """

    fn: Callable
    psi_prime0: float
    finite_variation: bool
    label: str
    orientation: Orientation = Orientation.STORAGE
    params: tuple[tuple[str, float], ...] = ()

    def __call__(self, w):
        return self.fn(w)

    @property
    def drift(self) -> float | None:
        return 1.0 if self.finite_variation else None

    @classmethod
    def from_callable(cls, fn: Callable, finite_variation: bool = False,
                      psi_prime0: float | None = None,
                      label: str = "custom") -> "LaplaceExponent":
        if psi_prime0 is None:
            h = 1e-7
            psi_prime0 = float(np.real(fn(h)) / h)
        return cls(fn, psi_prime0, finite_variation, label)


def laplace_exponent(model: LevyModel) -> LaplaceExponent:
    """Build the Laplace exponent for a model.

    Raises for the stable family at alpha = 1: E X(1) diverges there, so
    no zero-mean version exists and neither do the scale functions.
    """
    p = model.param_dict
    fam = model.family
    if fam is Family.GAMMA:
        a, b = p["a"], p["b"]
        fn = lambda w: w - a * np.log(1.0 + b * np.asarray(w))
        prime0 = 1.0 - a * b
    elif fam is Family.INVERSE_GAUSSIAN:
        d, g = p["delta"], p["gamma"]
        fn = lambda w: np.asarray(w) + d * (g - np.sqrt(g * g + 2.0 * np.asarray(w)))
        prime0 = 1.0 - d / g
    elif fam is Family.STABLE:
        alpha, sigma = p["alpha"], p["sigma"]
        if alpha == 1.0:
            raise UnsupportedModelError(
                "stable alpha=1 has no finite-mean version; overflow and "
                "scale operations need alpha in (1, 2)")
        c = sigma * math.gamma(-alpha)   # positive on (1, 2)
        fn = lambda w: np.asarray(w) + c * np.asarray(w) ** alpha
        prime0 = 1.0
    elif fam is Family.TEMPERED_STABLE:
        alpha, sigma, lam = p["alpha"], p["sigma"], p["lam"]
        c = sigma * math.gamma(-alpha)
        la = lam ** alpha
        slope = alpha * lam ** (alpha - 1.0)
        fn = lambda w: (np.asarray(w)
                        + c * ((lam + np.asarray(w)) ** alpha - la
                               - slope * np.asarray(w)))
        prime0 = 1.0
    elif fam is Family.COMPOUND_POISSON:
        rho, m = p["rate"], p["mean"]
        fn = lambda w: np.asarray(w) - rho * m * np.asarray(w) / (1.0 + m * np.asarray(w))
        prime0 = 1.0 - rho * m
    else:
        fn = lambda w: np.asarray(w)
        prime0 = 1.0
    return LaplaceExponent(fn, prime0, model.finite_variation,
                           label=f"{fam.value}{dict(model.params)}",
                           orientation=model.orientation,
                           params=model.params)


# ---------------------------------------------------------------------------
# Marginal densities and distribution functions


def _broadcast_xs(x, s):
    """Flatten x and s to a common shape; times must all be positive."""
    xa = np.asarray(x, dtype=float)
    sa = np.asarray(s, dtype=float)
    if np.any(sa <= 0.0):
        raise ValueError("time s must be positive")
    shape = np.broadcast_shapes(xa.shape, sa.shape)
    xf = np.broadcast_to(xa, shape).reshape(-1)
    sf = np.broadcast_to(sa, shape).reshape(-1)
    return xf, sf, shape, xa.ndim == 0 and sa.ndim == 0


def _restore(out: np.ndarray, shape, scalar: bool):
    out = out.reshape(shape)
    return out.item() if scalar else out


def density(model: LevyModel, x, s, method: str = "auto"):
    """Marginal density of X(s) at x; x and s broadcast elementwise.

    `method` is forwarded to the stable evaluator ('auto' uses cached
    tables, 'zolotarev' and 'fourier' force a direct route).  Families
    with an atom (compound Poisson, degenerate) have no density and
    raise.
    """
    if not model.has_density:
        raise UnsupportedModelError(
            f"{model.family.value} has no density (atom at zero)")
    xf, sf, shape, scalar = _broadcast_xs(x, s)
    p = model.param_dict
    fam = model.family

    if fam is Family.GAMMA:
        a, b = p["a"] * sf, p["b"]
        out = np.zeros_like(xf)
        pos = xf > 0
        ap = a[pos]
        out[pos] = np.exp(sc.xlogy(ap - 1.0, xf[pos]) - xf[pos] / b
                          - sc.gammaln(ap) - ap * math.log(b))
        zero = xf == 0.0
        out[zero & (a < 1.0)] = np.inf
        out[zero & (a == 1.0)] = 1.0 / b
    elif fam is Family.INVERSE_GAUSSIAN:
        d, g = p["delta"], p["gamma"]
        out = np.zeros_like(xf)
        pos = xf > 0
        xp, ds = xf[pos], d * sf[pos]
        out[pos] = (ds / math.sqrt(2.0 * math.pi)
                    * np.exp(g * ds - 0.5 * (ds * ds / xp + g * g * xp))
                    * xp ** -1.5)
    elif fam is Family.STABLE:
        out = _stable.process_pdf(p["alpha"], p["sigma"], xf, sf, method=method)
    else:  # tempered stable via exponential tilting of the stable density
        alpha, sigma, lam = p["alpha"], p["sigma"], p["lam"]
        c = sigma * math.gamma(-alpha)
        y = xf - sf * c * alpha * lam ** (alpha - 1.0)
        out = (np.exp(-lam * y - sf * c * lam ** alpha)
               * _stable.process_pdf(alpha, sigma, y, sf, method=method))
    return _restore(out, shape, scalar)


def cdf(model: LevyModel, x, s):
    """P(X(s) <= x) for every family, atoms included; x and s broadcast
    elementwise."""
    xf, sf, shape, scalar = _broadcast_xs(x, s)
    p = model.param_dict
    fam = model.family

    if fam is Family.GAMMA:
        out = np.where(xf > 0, sc.gammainc(p["a"] * sf, np.maximum(xf, 0.0) / p["b"]), 0.0)
    elif fam is Family.INVERSE_GAUSSIAN:
        d, g = p["delta"], p["gamma"]
        out = np.zeros_like(xf)
        pos = xf > 0
        xp, ds = xf[pos], d * sf[pos]
        mu = ds / g
        z1 = ds / np.sqrt(xp) * (xp / mu - 1.0)
        z2 = ds / np.sqrt(xp) * (xp / mu + 1.0)
        # second term is exp(huge) * ndtr(-huge); combine in log space
        out[pos] = sc.ndtr(z1) + np.exp(2.0 * ds * g + sc.log_ndtr(-z2))
    elif fam is Family.STABLE:
        out = _stable.process_cdf(p["alpha"], p["sigma"], xf, sf)
    elif fam is Family.TEMPERED_STABLE:
        out = _tempered_cdf(model, xf, sf)
    elif fam is Family.COMPOUND_POISSON:
        out = _cp_cdf_pairs(p["rate"], p["mean"], xf, sf)
    else:
        out = (xf >= 0).astype(float)
    out = np.clip(out, 0.0, 1.0)
    return _restore(out, shape, scalar)


def _cp_cdf(nu: float, m: float, x: np.ndarray) -> np.ndarray:
    """Poisson(nu) mixture of Gamma(k, m) distribution functions."""
    k_max = int(nu + 12.0 * math.sqrt(nu) + 35.0)
    k = np.arange(1, k_max + 1)
    log_pois = -nu + k * math.log(nu) - sc.gammaln(k + 1.0)
    out = np.full(x.shape, math.exp(-nu))  # k = 0 atom
    pos = x > 0
    if np.any(pos):
        # (k, nx) block; fine at the sizes used here
        gk = sc.gammainc(k[:, None], x[pos][None, :] / m)
        out[pos] += (np.exp(log_pois)[:, None] * gk).sum(axis=0)
    out[x < 0] = 0.0
    return out


def _cp_cdf_pairs(rate: float, m: float, x: np.ndarray, s: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    for nu in np.unique(rate * s):
        sel = rate * s == nu
        out[sel] = _cp_cdf(float(nu), m, x[sel])
    return out


def _tempered_cdf(model: LevyModel, x: np.ndarray, s: np.ndarray) -> np.ndarray:
    from .quad import integrate_semi_infinite
    p = model.param_dict
    lam = p["lam"]
    out = np.empty_like(x)
    for i in range(x.size):
        xi, si = float(x[i]), float(s[i])
        scale = _stable.process_scale(p["alpha"], p["sigma"], si)
        if xi <= -60.0 * scale:  # stable left tail is long gone by here
            out[i] = 0.0
            continue
        # survival integral; integrand <= exp(-lam y) * sup f roughly
        f = lambda y: density(model, y, si)
        bound = lambda T: math.exp(-lam * (T - 1.0) if lam * T < 700 else -700.0)
        res = integrate_semi_infinite(f, xi, tol=1e-9, tail_bound=bound)
        out[i] = 1.0 - res.value
    return out


def stable_density(alpha: float, sigma: float, x, s: float,
                   method: str = "zolotarev"):
    """Density of the zero-mean spectrally positive stable X(s).

    Two independent evaluation routes are kept alive on purpose:
    'zolotarev' integrates the real theta-representation, 'fourier'
    inverts the characteristic function.  'auto' uses the cached table
    built from both.
    """
    xf, sf, shape, scalar = _broadcast_xs(x, s)
    out = _stable.process_pdf(alpha, sigma, xf, sf, method=method)
    return _restore(out, shape, scalar)
