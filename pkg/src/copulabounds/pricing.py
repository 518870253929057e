"""Model-free pricing of two-asset European payoffs.

The price of a payoff under fixed marginals is a functional of the
copula alone.  For payoffs whose second differences have one sign it is
computed through the representation

    price = -f(0, 0) + E[f(X, 0)] + E[f(0, Y)]
            + integral of (1 - F_X(x) - F_Y(y) + C(F_X(x), F_Y(y)))
              against the curvature measure of f,

which needs only pointwise values of C and therefore accepts
quasi-copula bound surfaces.  For the shipped payoff catalog the
curvature measure lives on a line, so the double integral collapses to a
one-dimensional one; the product payoff x*y is the exception (Lebesgue
measure on the quadrant, priced by tensor quadrature).

Quadrature nodes depend only on the payoff, the marginals, and the panel
count, never on the copula, so prices of pointwise-ordered surfaces are
ordered exactly as computed.  Discounting is assumed absorbed into the
payoff; the scenario rate is zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .marginals import Marginal
from .quadrature import (
    DEFAULT_EPS,
    DEFAULT_ORDER,
    DEFAULT_PANELS,
    QuadratureError,
    interval_rule,
    refine_sign_changes,
    unit_rule,
)
from .surfaces import CopulaSurface

__all__ = [
    "PayoffSpec",
    "PriceInterval",
    "InconsistentIntervalError",
    "basket",
    "spread",
    "call_on_min",
    "put_on_min",
    "call_on_max",
    "put_on_max",
    "worst_off_call",
    "worst_off_put",
    "best_off_call",
    "best_off_put",
    "product_xy",
    "log_product",
    "payoff_value",
    "payoff_sign",
    "survival_weight",
    "price",
    "price_under_M",
    "price_under_W",
    "price_interval",
    "digital_default_prices",
]

_KINDS_ONE_STRIKE = ("call-on-min", "put-on-min", "call-on-max", "put-on-max")
_KINDS_TWO_STRIKE = ("worst-off-call", "worst-off-put", "best-off-call", "best-off-put")


class InconsistentIntervalError(RuntimeError):
    """Computed price interval is crossed beyond tolerance."""


@dataclass(frozen=True)
class PayoffSpec:
    """Payoff identifier plus parameters; build via the module constructors."""

    kind: str
    alpha: float = 0.0
    beta: float = 0.0
    strike: float = 0.0
    strike1: float = 0.0
    strike2: float = 0.0


def basket(alpha: float, beta: float, strike: float) -> PayoffSpec:
    """(alpha*X + beta*Y - K)^+; spreads are alpha/beta of opposite sign.

    Either coefficient sign is accepted and so are negative strikes (the
    curvature-measure support is resolved per sign quadrant).
    """
    if alpha == 0.0 or beta == 0.0:
        raise ValueError("basket weights must be nonzero (payoff degenerates to one asset)")
    return PayoffSpec("basket", alpha=float(alpha), beta=float(beta), strike=float(strike))


def spread(strike: float) -> PayoffSpec:
    """(X - Y - K)^+."""
    return basket(1.0, -1.0, strike)


def _one_strike(kind: str, strike: float) -> PayoffSpec:
    if strike < 0.0:
        raise ValueError(f"{kind} strike must be nonnegative")
    return PayoffSpec(kind, strike=float(strike))


def call_on_min(strike: float) -> PayoffSpec:
    return _one_strike("call-on-min", strike)


def put_on_min(strike: float) -> PayoffSpec:
    return _one_strike("put-on-min", strike)


def call_on_max(strike: float) -> PayoffSpec:
    return _one_strike("call-on-max", strike)


def put_on_max(strike: float) -> PayoffSpec:
    return _one_strike("put-on-max", strike)


def _two_strike(kind: str, k1: float, k2: float) -> PayoffSpec:
    if k1 < 0.0 or k2 < 0.0:
        raise ValueError(f"{kind} strikes must be nonnegative")
    return PayoffSpec(kind, strike1=float(k1), strike2=float(k2))


def worst_off_call(k1: float, k2: float) -> PayoffSpec:
    return _two_strike("worst-off-call", k1, k2)


def worst_off_put(k1: float, k2: float) -> PayoffSpec:
    return _two_strike("worst-off-put", k1, k2)


def best_off_call(k1: float, k2: float) -> PayoffSpec:
    return _two_strike("best-off-call", k1, k2)


def best_off_put(k1: float, k2: float) -> PayoffSpec:
    return _two_strike("best-off-put", k1, k2)


def product_xy() -> PayoffSpec:
    return PayoffSpec("product-xy")


def log_product() -> PayoffSpec:
    return PayoffSpec("log-product")


def payoff_value(p: PayoffSpec, x, y):
    """Vectorized payoff evaluation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = p.kind
    if k == "basket":
        return np.maximum(p.alpha * x + p.beta * y - p.strike, 0.0)
    if k == "call-on-min":
        return np.maximum(np.minimum(x, y) - p.strike, 0.0)
    if k == "put-on-min":
        return np.maximum(p.strike - np.minimum(x, y), 0.0)
    if k == "call-on-max":
        return np.maximum(np.maximum(x, y) - p.strike, 0.0)
    if k == "put-on-max":
        return np.maximum(p.strike - np.maximum(x, y), 0.0)
    if k == "worst-off-call":
        return np.minimum(np.maximum(x - p.strike1, 0.0), np.maximum(y - p.strike2, 0.0))
    if k == "worst-off-put":
        return np.minimum(np.maximum(p.strike1 - x, 0.0), np.maximum(p.strike2 - y, 0.0))
    if k == "best-off-call":
        return np.maximum(np.maximum(x - p.strike1, 0.0), np.maximum(y - p.strike2, 0.0))
    if k == "best-off-put":
        return np.maximum(np.maximum(p.strike1 - x, 0.0), np.maximum(p.strike2 - y, 0.0))
    if k == "product-xy":
        return x * y
    if k == "log-product":
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(x) * np.log(y)
    raise ValueError(f"unknown payoff kind {k!r}")


def payoff_sign(p: PayoffSpec) -> int:
    """+1 for supermodular (2-increasing) payoffs, -1 for submodular.

    Note the puts: a put on the minimum decreases when dependence
    increases, a put on the maximum increases (second differences have
    the opposite signs of the corresponding calls).
    """
    k = p.kind
    if k == "basket":
        return 1 if p.alpha * p.beta > 0 else -1
    if k in ("call-on-min", "put-on-max", "worst-off-call", "worst-off-put",
             "product-xy", "log-product"):
        return 1
    if k in ("call-on-max", "put-on-min", "best-off-call", "best-off-put"):
        return -1
    raise ValueError(f"unknown payoff kind {k!r}")


def survival_weight(surface: CopulaSurface, m_x: Marginal, m_y: Marginal, x, y):
    """Joint survival weight 1 - F_X(x) - F_Y(y) + C(F_X(x), F_Y(y)) in [0, 1]."""
    u = m_x.cdf(np.maximum(np.asarray(x, dtype=float), 0.0))
    v = m_y.cdf(np.maximum(np.asarray(y, dtype=float), 0.0))
    out = np.clip(1.0 - u - v + surface(u, v), 0.0, 1.0)
    return out if np.ndim(out) else float(out)


def _strike_candidates(p: PayoffSpec) -> list[float]:
    vals = []
    if p.kind == "basket":
        vals += [p.strike / p.alpha, p.strike / p.beta]
    vals += [p.strike, p.strike1, p.strike2, p.strike1 - p.strike2, p.strike2 - p.strike1]
    return [v for v in vals if np.isfinite(v) and v > 0.0]


def _edge_expectation(m: Marginal, fn, kink_xs, panels, order, eps) -> float:
    breaks = [float(m.cdf(k)) for k in kink_xs]
    rule = unit_rule(panels=panels, order=order, eps=eps, breakpoints=breaks)
    return rule.integrate_checked(lambda u: np.asarray(fn(m.quantile(u)), dtype=float))


def _path_crossings(m_x, m_y, x_of_z, y_of_z, lo, hi) -> np.ndarray:
    # Split panels where F_X(x(z)) crosses F_Y(y(z)) or their sum crosses 1;
    # these are the kink curves of the Frechet surfaces along the path.
    def fx(z):
        return m_x.cdf(np.maximum(x_of_z(z), 0.0))

    def fy(z):
        return m_y.cdf(np.maximum(y_of_z(z), 0.0))

    r1 = refine_sign_changes(lambda z: fx(z) - fy(z), lo, hi)
    r2 = refine_sign_changes(lambda z: fx(z) + fy(z) - 1.0, lo, hi)
    return np.concatenate([r1, r2])


def _mu_segment(p: PayoffSpec, m_x: Marginal, m_y: Marginal, eps: float):
    """Support of the payoff curvature measure as (lo, hi, x_of_z, y_of_z, sign).

    Infinite upper limits are truncated where either marginal's survival
    drops below ``eps``; the integrand is dominated by those survivals.
    """
    cx = m_x.upper_cutoff(eps)
    cy = m_y.upper_cutoff(eps)
    k = p.kind
    if k == "basket":
        a, b, K = p.alpha, p.beta, p.strike
        sign = 1 if a * b > 0 else -1
        x_of = lambda z: z / a
        y_of = lambda z: (K - z) / b
        if a > 0 and b > 0:
            lo, hi = max(0.0, K - b * cy), min(K, a * cx)
        elif a > 0 and b < 0:
            lo, hi = max(0.0, K), min(a * cx, K - b * cy)
        elif a < 0 and b > 0:
            lo, hi = max(a * cx, K - b * cy), min(0.0, K)
        else:  # a < 0 and b < 0: the support line meets the quadrant only if K < 0
            lo, hi = max(K, a * cx), min(0.0, K - b * cy)
        return lo, hi, x_of, y_of, sign
    if k in _KINDS_ONE_STRIKE:
        x_of = y_of = lambda z: z
        diag_hi = min(cx, cy)
        if k == "call-on-min":
            return p.strike, diag_hi, x_of, y_of, 1
        if k == "call-on-max":
            return p.strike, diag_hi, x_of, y_of, -1
        if k == "put-on-max":
            return 0.0, min(p.strike, diag_hi), x_of, y_of, 1
        return 0.0, min(p.strike, diag_hi), x_of, y_of, -1  # put-on-min
    if k in _KINDS_TWO_STRIKE:
        if k in ("worst-off-call", "best-off-call"):
            x_of = lambda z: z + p.strike1
            y_of = lambda z: z + p.strike2
            hi = min(cx - p.strike1, cy - p.strike2)
            sign = 1 if k == "worst-off-call" else -1
            return 0.0, max(hi, 0.0), x_of, y_of, sign
        x_of = lambda z: p.strike1 - z
        y_of = lambda z: p.strike2 - z
        sign = 1 if k == "worst-off-put" else -1
        return 0.0, min(p.strike1, p.strike2), x_of, y_of, sign
    raise ValueError(f"no one-dimensional reduction for payoff kind {k!r}")


def price(
    p: PayoffSpec,
    surface: CopulaSurface,
    m_x: Marginal,
    m_y: Marginal,
    *,
    panels: int = DEFAULT_PANELS,
    order: int = DEFAULT_ORDER,
    eps: float = DEFAULT_EPS,
    panels_2d: int = 100,
    extra_breakpoints=(),
) -> float:
    """Price through the quasi-copula-compatible representation.

    Works for any surface (copula or quasi-copula); only pointwise values
    of the surface enter.  ``extra_breakpoints`` adds panel splits to the
    curvature integral (money space) so that several calls share one node
    set.  Raises QuadratureError on boundary-integrability violations.
    """
    if p.kind == "log-product":
        raise QuadratureError(
            "log-product payoff has divergent boundary expectations E[f(X,0)]; "
            "price it only under the comonotone/countermonotone couplings"
        )
    f00 = float(payoff_value(p, 0.0, 0.0))
    kinks = _strike_candidates(p)
    ex = _edge_expectation(m_x, lambda x: payoff_value(p, x, 0.0), kinks, panels, order, eps)
    ey = _edge_expectation(m_y, lambda y: payoff_value(p, 0.0, y), kinks, panels, order, eps)

    if p.kind == "product-xy":
        rx = interval_rule(0.0, m_x.upper_cutoff(eps), panels_2d, order)
        ry = interval_rule(0.0, m_y.upper_cutoff(eps), panels_2d, order)
        u = m_x.cdf(rx.nodes)
        v = m_y.cdf(ry.nodes)
        G = 1.0 - u[:, None] - v[None, :] + surface(u[:, None], v[None, :])
        mu_term = float(rx.weights @ G @ ry.weights)
    else:
        lo, hi, x_of, y_of, sign = _mu_segment(p, m_x, m_y, eps)
        if hi <= lo:
            mu_term = 0.0
        else:
            breaks = list(_path_crossings(m_x, m_y, x_of, y_of, lo, hi))
            breaks += [float(z) for z in extra_breakpoints]
            rule = interval_rule(lo, hi, panels, order, breakpoints=breaks)
            G = survival_weight(surface, m_x, m_y, x_of(rule.nodes), y_of(rule.nodes))
            mu_term = sign * float(rule.weights @ G)
    return -f00 + ex + ey + mu_term


def _diag_breakpoints(p: PayoffSpec, m_x, m_y, direction: str, eps: float) -> list[float]:
    breaks = []
    for k in _strike_candidates(p):
        fx = float(m_x.cdf(k))
        breaks.append(1.0 - fx if direction == "counter" else fx)
        breaks.append(float(m_y.cdf(k)))

    def gap(u):
        xu = m_x.quantile(1.0 - u) if direction == "counter" else m_x.quantile(u)
        return xu - m_y.quantile(u)

    breaks.extend(refine_sign_changes(gap, eps, 1.0 - eps).tolist())
    return breaks


def price_under_M(
    p: PayoffSpec,
    m_x: Marginal,
    m_y: Marginal,
    *,
    panels: int = DEFAULT_PANELS,
    order: int = DEFAULT_ORDER,
    eps: float = DEFAULT_EPS,
) -> float:
    """Comonotone price by direct quadrature of the payoff on the diagonal."""
    from .marginals import expect_on_diagonal

    return expect_on_diagonal(
        m_x, m_y, lambda x, y: payoff_value(p, x, y), "co",
        panels=panels, order=order, eps=eps,
        breakpoints=_diag_breakpoints(p, m_x, m_y, "co", eps),
    )


def price_under_W(
    p: PayoffSpec,
    m_x: Marginal,
    m_y: Marginal,
    *,
    panels: int = DEFAULT_PANELS,
    order: int = DEFAULT_ORDER,
    eps: float = DEFAULT_EPS,
) -> float:
    """Countermonotone price by direct quadrature on the antidiagonal."""
    from .marginals import expect_on_diagonal

    return expect_on_diagonal(
        m_x, m_y, lambda x, y: payoff_value(p, x, y), "counter",
        panels=panels, order=order, eps=eps,
        breakpoints=_diag_breakpoints(p, m_x, m_y, "counter", eps),
    )


@dataclass(frozen=True)
class PriceInterval:
    """Model-free price interval with the surfaces that produced each end.

    ``sharp_lower``/``sharp_upper`` record whether the producing surface
    is a copula, in which case that end of the interval is attained.
    """

    lower: float
    upper: float
    lower_surface: CopulaSurface
    upper_surface: CopulaSurface
    sharp_lower: bool
    sharp_upper: bool

    @property
    def width(self) -> float:
        return self.upper - self.lower


def price_interval(
    p: PayoffSpec,
    lower_surface: CopulaSurface,
    upper_surface: CopulaSurface,
    m_x: Marginal,
    m_y: Marginal,
    **quad,
) -> PriceInterval:
    """Price interval from pointwise bound surfaces (lower <= upper).

    For supermodular payoffs the lower surface prices the lower end; for
    submodular payoffs the surfaces swap roles.
    """
    pl = price(p, lower_surface, m_x, m_y, **quad)
    pu = price(p, upper_surface, m_x, m_y, **quad)
    if payoff_sign(p) >= 0:
        lo, hi = pl, pu
        s_lo, s_hi = lower_surface, upper_surface
    else:
        lo, hi = pu, pl
        s_lo, s_hi = upper_surface, lower_surface
    tol = 1e-6 * max(1.0, abs(lo), abs(hi))
    if lo > hi + tol:
        raise InconsistentIntervalError(
            f"price interval crossed: [{lo}, {hi}] for {p.kind}"
        )
    return PriceInterval(
        lower=min(lo, hi),
        upper=max(lo, hi),
        lower_surface=s_lo,
        upper_surface=s_hi,
        sharp_lower=s_lo.is_copula,
        sharp_upper=s_hi.is_copula,
    )


def digital_default_prices(
    surface: CopulaSurface, m_x: Marginal, m_y: Marginal, T: float
) -> tuple[float, float]:
    """Prices of the digital first- and second-to-default claims at horizon T.

    first  = F_X(T) + F_Y(T) - C(F_X(T), F_Y(T))
    second = C(F_X(T), F_Y(T))
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    u = float(m_x.cdf(T))
    v = float(m_y.cdf(T))
    second = float(surface(u, v))
    return u + v - second, second
