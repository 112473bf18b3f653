"""Fixed-time overflow probabilities for the storage level started empty.

With Z(0) = 0 the reflected storage level satisfies
Z(t) = sup_{s<=t} (X(s) - s), and P(Z(t) > u) splits by the path
variation of the input X into two quadrature routes:

finite variation (gamma, inverse Gaussian)

    P(Z(t) > u) = P(X(t) - t > u) + int_0^t f(u+s, s) A(t-s) ds,
    A(v) = (1/v) int_0^v P(X(v) <= x) dx,        P(Z(t) > 0) = 1 - A(t),

where f(x, s) is the density of X(s).

infinite variation (stable and tempered stable, alpha in (1, 2))

    the same outer integral with the inner one extended over the whole
    left half line, which for the centred inputs used here collapses to

    Atilde(v) = 1 + E (X(v) - v)^+ / v,          P(Z(t) > 0) = 1.

    Atilde blows up like v^{1/alpha - 1} as v -> 0, so the outer
    quadrature gets the matching endpoint exponent.

The gamma and inverse Gaussian single-family reductions (incomplete
gamma weights, and the Gaussian-kernel double integral) are implemented
as independent second routes; the generic evaluator never consults them
and the test suite holds the two against each other.

Compound Poisson input has an atom at zero, so the density the outer
integral needs does not exist; only the busy probability is available
for that family.  Everything here is storage-oriented: the inventory
level's fixed-time exceedance goes through the first-passage identity
in the scale module instead (kendall_cross_check).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special as sc

from . import stable as _stable
from .models import (
    Family,
    LevyModel,
    Orientation,
    UnsupportedModelError,
    cdf,
    density,
)
from .quad import integrate, integrate_semi_infinite

__all__ = [
    "OverflowMethod",
    "OverflowQuery",
    "OverflowResult",
    "overflow_at_t",
    "overflow_finite_variation",
    "overflow_infinite_variation",
    "gamma_closed_form",
    "ig_closed_form",
    "prob_busy",
]


class OverflowMethod(Enum):
    FINITE_VARIATION = "fv-quadrature"
    INFINITE_VARIATION = "iv-quadrature"
    GAMMA_CLOSED_FORM = "gamma-closed-form"
    IG_CLOSED_FORM = "ig-closed-form"


@dataclass(frozen=True)
class OverflowQuery:
    """P(Z(t) > u) question for the storage level started at 0."""

    model: LevyModel
    t: float
    u: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.t) and np.isfinite(self.u)):
            raise ValueError("t and u must be finite")
        if self.t <= 0.0:
            raise ValueError(f"time must be positive, got t={self.t}")
        if self.u < 0.0:
            raise ValueError(f"threshold must be nonnegative, got u={self.u}")


@dataclass(frozen=True)
class OverflowResult:
    value: float
    error_estimate: float
    method: OverflowMethod


def _require_storage(model: LevyModel, what: str) -> None:
    if model.orientation is not Orientation.STORAGE:
        raise UnsupportedModelError(
            f"{what} answers storage-level questions; for the inventory "
            "orientation use the first-passage identities in the scale "
            "module (kendall_cross_check)")


def _clip(value: float, err: float, method: OverflowMethod) -> OverflowResult:
    c = min(max(value, 0.0), 1.0)
    return OverflowResult(float(c), float(err + abs(value - c)), method)


# ---------------------------------------------------------------------------
# Finite variation


def _inner_weight_fv(model: LevyModel, v: float, tol: float) -> tuple[float, float]:
    """A(v) = (1/v) int_0^v P(X(v) <= x) dx, with A(0) = 1."""
    if v <= 0.0:
        return 1.0, 0.0
    res = integrate(lambda x: cdf(model, x, v), 0.0, v, tol=tol * v)
    return res.value / v, res.error / v


def prob_busy(model: LevyModel, t: float, tol: float = 1e-9) -> OverflowResult:
    """P(Z(t) > 0) for the storage level started empty.

    Finite-variation input leaves the level at zero with positive
    probability, 1 - A(t); under infinite variation the level is
    strictly positive at every fixed time and the answer is exactly 1.
    The compound Poisson family keeps its atom at zero, so this works
    for it even though the u > 0 overflow quadrature does not.
    """
    _require_storage(model, "prob_busy")
    if not np.isfinite(t) or t <= 0.0:
        raise ValueError(f"time must be positive, got t={t}")
    if not model.finite_variation:
        return OverflowResult(1.0, 0.0, OverflowMethod.INFINITE_VARIATION)
    a_t, a_err = _inner_weight_fv(model, t, tol)
    return _clip(1.0 - a_t, a_err, OverflowMethod.FINITE_VARIATION)


def overflow_finite_variation(query: OverflowQuery,
                              tol: float = 1e-7) -> OverflowResult:
    """P(Z(t) > u) for finite-variation input with a marginal density.

    The free term P(X(t) - t > u) is evaluated from the family's exact
    survival function; the correction integrates the marginal density
    against the stay-positive weight A.  Requires u > 0 (the u = 0
    boundary is prob_busy, reachable through overflow_at_t).
    """
    model, t, u = query.model, query.t, query.u
    _require_storage(model, "overflow_finite_variation")
    if not model.finite_variation:
        raise UnsupportedModelError(
            f"{model.family.value} input has unbounded variation; use "
            "overflow_infinite_variation")
    if not model.has_density:
        raise UnsupportedModelError(
            f"{model.family.value} has an atom at zero so the overflow "
            "integrand does not exist; prob_busy still works")
    if u <= 0.0:
        raise ValueError("overflow_finite_variation needs u > 0")

    free, free_err = _free_term(model, t, u)

    inner_tol = tol / 4.0

    def integrand(s: np.ndarray) -> np.ndarray:
        f = np.atleast_1d(density(model, u + s, s))
        w = np.array([_inner_weight_fv(model, t - si, inner_tol)[0]
                      for si in np.atleast_1d(s)])
        return f * w

    res = integrate(integrand, 0.0, t, tol=tol / 2.0)
    return _clip(free + res.value, free_err + res.error + inner_tol,
                 OverflowMethod.FINITE_VARIATION)


def _free_term(model: LevyModel, t: float, u: float) -> tuple[float, float]:
    """P(X(t) - t > u) and a rough error figure for it."""
    p = model.param_dict
    if model.family is Family.GAMMA:
        return float(sc.gammaincc(p["a"] * t, (u + t) / p["b"])), 1e-14
    if model.family is Family.STABLE:
        return float(_stable.process_sf(p["alpha"], p["sigma"], u + t, t)[0]), 1e-9
    # inverse Gaussian and tempered stable go through the distribution
    # function; the values at play are far from 1 so nothing cancels
    return float(1.0 - cdf(model, u + t, t)), 1e-9


# ---------------------------------------------------------------------------
# Infinite variation


def _std_pdf_max(alpha: float) -> float:
    probe = np.linspace(-4.0, 4.0, 801)
    return float(_stable.table_for(alpha).pdf(probe).max())


def _mean_excess_at_v(model: LevyModel, v: float, tol: float) -> tuple[float, float]:
    """B(v) = E (X(v) - v)^+ for the centred infinite-variation families."""
    p = model.param_dict
    if model.family is Family.STABLE:
        b = float(_stable.process_mean_excess(p["alpha"], p["sigma"], v, v)[0])
        return b, 1e-7 * b
    alpha, sigma, lam = p["alpha"], p["sigma"], p["lam"]
    c = sigma * math.gamma(-alpha)
    shift = v * c * alpha * lam ** (alpha - 1.0)
    fmax = (_std_pdf_max(alpha)
            / float(_stable.process_scale(alpha, sigma, v)))
    damp = math.exp(-v * c * lam ** alpha)

    def tail(bound_at: float) -> float:
        # (x - v) e^{-lam (x - shift)} integrated beyond the cut, times
        # the largest the tilted stable density can be
        e = math.exp(-lam * (bound_at - shift)) if lam * (bound_at - shift) < 700 else 0.0
        return fmax * damp * e * ((bound_at - v) / lam + 1.0 / lam ** 2)

    res = integrate_semi_infinite(
        lambda x: (x - v) * density(model, x, v), v, tol=tol, tail_bound=tail)
    return res.value, res.error


def overflow_infinite_variation(query: OverflowQuery,
                                tol: float = 1e-7) -> OverflowResult:
    """P(Z(t) > u) for centred infinite-variation input, alpha in (1, 2).

    The stay-positive weight Atilde(v) = 1 + E(X(v)-v)^+ / v diverges
    like v^{1/alpha - 1} at v = 0, handled by the quadrature's endpoint
    substitution.  The stable alpha = 1 boundary has no mean, so Atilde
    in this form is unavailable there.
    """
    model, t, u = query.model, query.t, query.u
    _require_storage(model, "overflow_infinite_variation")
    if model.finite_variation:
        raise UnsupportedModelError(
            f"{model.family.value} input has finite variation; use "
            "overflow_finite_variation")
    alpha = model.param("alpha")
    if not alpha > 1.0:
        raise UnsupportedModelError(
            "the stay-positive weight needs a finite mean, alpha > 1")
    if u <= 0.0:
        raise ValueError("overflow_infinite_variation needs u > 0")

    free, free_err = _free_term(model, t, u)

    inner_tol = tol / 4.0

    def integrand(s: np.ndarray) -> np.ndarray:
        sa = np.atleast_1d(s)
        f = np.atleast_1d(density(model, u + sa, sa))
        w = np.empty_like(sa)
        for i, si in enumerate(sa):
            v = t - si
            b, _ = _mean_excess_at_v(model, v, inner_tol)
            w[i] = 1.0 + b / v
        return f * w

    res = integrate(integrand, 0.0, t, tol=tol / 2.0,
                    endpoint_exponents=(None, 1.0 / alpha - 1.0))
    return _clip(free + res.value, free_err + res.error + inner_tol,
                 OverflowMethod.INFINITE_VARIATION)


# ---------------------------------------------------------------------------
# Single-family reductions, kept independent of the generic routes


def gamma_closed_form(query: OverflowQuery, tol: float = 1e-7) -> OverflowResult:
    """Gamma-input overflow through the incomplete-gamma weights.

    The stay-positive weight for gamma input reduces to
    P(X(v) <= v) - a b P(X(v + 1/a) <= v), leaving one free term plus
    two density-weighted quadratures.
    """
    model, t, u = query.model, query.t, query.u
    _require_storage(model, "gamma_closed_form")
    if model.family is not Family.GAMMA:
        raise UnsupportedModelError("gamma_closed_form is gamma-only")
    if u <= 0.0:
        raise ValueError("gamma_closed_form needs u > 0")
    a, b = model.param("a"), model.param("b")

    free = float(sc.gammaincc(a * t, (u + t) / b))

    def dens(s: np.ndarray) -> np.ndarray:
        return np.atleast_1d(density(model, u + s, s))

    r1 = integrate(lambda s: dens(s) * sc.gammainc(a * (t - s), (t - s) / b),
                   0.0, t, tol=tol / 2.0)
    r2 = integrate(lambda s: dens(s) * sc.gammainc(a * (t - s) + 1.0, (t - s) / b),
                   0.0, t, tol=tol / 2.0)
    value = free + r1.value - a * b * r2.value
    return _clip(value, r1.error + a * b * r2.error + 1e-14,
                 OverflowMethod.GAMMA_CLOSED_FORM)


def ig_closed_form(query: OverflowQuery, tol: float = 1e-7) -> OverflowResult:
    """Inverse Gaussian overflow through the Gaussian-kernel integrals.

    Free term: (delta t e^{gamma delta t}/sqrt(2 pi)) int_{u+t}^inf
    x^{-3/2} exp{-(delta^2 t^2 / x + gamma^2 x)/2} dx.  Correction: the
    density factor at u+s against the kernel

        I(v) = int_0^v x^{-3/2} (v - x) exp{-(delta^2 v^2/x + gamma^2 x)/2} dx

    at v = t - s.  All exponents are negative, so plain arithmetic is
    safe for any parameter values with gamma delta t in a sane range.
    """
    model, t, u = query.model, query.t, query.u
    _require_storage(model, "ig_closed_form")
    if model.family is not Family.INVERSE_GAUSSIAN:
        raise UnsupportedModelError("ig_closed_form is inverse-Gaussian-only")
    if u <= 0.0:
        raise ValueError("ig_closed_form needs u > 0")
    d, g = model.param("delta"), model.param("gamma")

    c1 = d * t * math.exp(g * d * t) / math.sqrt(2.0 * math.pi)

    def kern_free(x: np.ndarray) -> np.ndarray:
        return x ** -1.5 * np.exp(-0.5 * (d * d * t * t / x + g * g * x))

    def free_tail(bound_at: float) -> float:
        return bound_at ** -1.5 * 2.0 / (g * g) * math.exp(-0.5 * g * g * bound_at)

    rf = integrate_semi_infinite(kern_free, u + t, tol=tol / (4.0 * c1),
                                 tail_bound=free_tail)

    def inner(v: float) -> float:
        if v <= 0.0:
            return 0.0
        res = integrate(
            lambda x: x ** -1.5 * (v - x)
            * np.exp(-0.5 * (d * d * v * v / x + g * g * x)),
            0.0, v, tol=tol * 1e-2)
        return res.value

    c2 = d * d * math.exp(g * d * t) / (2.0 * math.pi)

    def outer(s: np.ndarray) -> np.ndarray:
        sa = np.atleast_1d(s)
        head = (sa * (u + sa) ** -1.5
                * np.exp(-0.5 * (d * d * sa * sa / (u + sa) + g * g * (u + sa))))
        return head * np.array([inner(t - si) for si in sa])

    ro = integrate(outer, 0.0, t, tol=tol / (4.0 * c2))
    value = c1 * rf.value + c2 * ro.value
    return _clip(value, c1 * rf.error + c2 * ro.error,
                 OverflowMethod.IG_CLOSED_FORM)


# ---------------------------------------------------------------------------
# Dispatch


def overflow_at_t(query: OverflowQuery, tol: float = 1e-7) -> OverflowResult:
    """P(Z(t) > u) routed by family: the generic quadrature for either
    variation class, prob_busy at the u = 0 boundary, exact 0 for the
    degenerate drift (the level never leaves the empty state)."""
    model = query.model
    _require_storage(model, "overflow_at_t")
    if model.family is Family.DEGENERATE:
        return OverflowResult(0.0, 0.0, OverflowMethod.FINITE_VARIATION)
    if query.u == 0.0:
        return prob_busy(model, query.t, tol=min(tol, 1e-9))
    if model.finite_variation:
        return overflow_finite_variation(query, tol=tol)
    return overflow_infinite_variation(query, tol=tol)
