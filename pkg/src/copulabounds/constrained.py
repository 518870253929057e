"""Best-possible quasi-copula bounds from copula values on a point set.

Given the values of an unknown copula on a finite set of points, the
pointwise envelope of all quasi-copulas matching those values is
computable in closed form.  The upper envelope adds the one-sided
Lipschitz cone to each constraint and takes the minimum; the lower
envelope subtracts it and takes the maximum.  When the point set is
decreasing the upper envelope is itself a copula (and hence sharp for
copulas too); when it is increasing the lower envelope is.

Evaluation cost is O(|S|) numpy operations per call; the shipped
scenarios use at most a few hundred constraints, so no spatial indexing
is attempted.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .marginals import Marginal
from .surfaces import CopulaSurface, frechet_lower, frechet_upper

__all__ = [
    "ConstraintError",
    "ConstraintSet",
    "classify",
    "upper_bound",
    "lower_bound",
    "bounds_from_second_to_default",
    "bounds_from_max_options",
    "constraints_from_csv",
    "constraints_from_price_csv",
]

_TOL = 1e-12


class ConstraintError(ValueError):
    """Constraint values cannot come from any quasi-copula."""


@dataclass(frozen=True)
class ConstraintSet:
    """Finite set of (a, b, theta) point constraints on a copula.

    Construction verifies that each value respects the Frechet bounds at
    its point and that every pair satisfies the directed Lipschitz
    inequality ``theta_j - theta_i <= (a_j - a_i)^+ + (b_j - b_i)^+``,
    which is exactly quasi-copula compatibility for point data.
    Inconsistent data is rejected, never projected.
    """

    a: np.ndarray
    b: np.ndarray
    theta: np.ndarray

    @classmethod
    def from_points(cls, points: Iterable[tuple[float, float, float]]) -> "ConstraintSet":
        pts = [(float(a), float(b), float(t)) for a, b, t in points]
        if pts:
            a, b, t = (np.asarray(col, dtype=float) for col in zip(*pts))
        else:
            a = b = t = np.empty(0)
        obj = cls(a, b, t)
        obj._validate()
        return obj

    def _validate(self) -> None:
        a, b, t = self.a, self.b, self.theta
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(t))):
            raise ConstraintError("constraints must be finite")
        if np.any(a < 0) or np.any(a > 1) or np.any(b < 0) or np.any(b > 1):
            raise ConstraintError("constraint points must lie in the unit square")
        lo = frechet_lower(a, b)
        hi = frechet_upper(a, b)
        bad = (t < lo - _TOL) | (t > hi + _TOL)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ConstraintError(
                f"constraint {i}: value {t[i]} at ({a[i]}, {b[i]}) outside "
                f"Frechet bounds [{lo[i]}, {hi[i]}]"
            )
        # Pairwise directed Lipschitz: theta_j - theta_i <= (da)^+ + (db)^+.
        da = a[None, :] - a[:, None]
        db = b[None, :] - b[:, None]
        dt = t[None, :] - t[:, None]
        excess = dt - np.maximum(da, 0.0) - np.maximum(db, 0.0)
        if np.any(excess > _TOL):
            i, j = np.unravel_index(int(np.argmax(excess)), excess.shape)
            raise ConstraintError(
                f"constraints {i} and {j} are incompatible: no quasi-copula takes "
                f"value {t[i]} at ({a[i]}, {b[i]}) and {t[j]} at ({a[j]}, {b[j]})"
            )

    def __len__(self) -> int:
        return int(self.a.size)

    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.a.tolist(), self.b.tolist(), self.theta.tolist()))

    @property
    def is_increasing(self) -> bool:
        da = self.a[None, :] - self.a[:, None]
        db = self.b[None, :] - self.b[:, None]
        return bool(np.all(da * db >= 0.0))

    @property
    def is_decreasing(self) -> bool:
        da = self.a[None, :] - self.a[:, None]
        db = self.b[None, :] - self.b[:, None]
        return bool(np.all(da * db <= 0.0))

    def reflected(self) -> "ConstraintSet":
        """Image under (a, b, theta) -> (a, 1-b, a-theta); swaps the roles of
        increasing and decreasing sets and of the two envelopes."""
        return ConstraintSet.from_points(
            zip(self.a.tolist(), (1.0 - self.b).tolist(), (self.a - self.theta).tolist())
        )


def classify(constraints: ConstraintSet) -> str:
    """'increasing', 'decreasing', or 'neither'.

    Pairs sharing a coordinate count as both ordered ways, so chains with
    ties classify as increasing whenever that is consistent.
    """
    if constraints.is_increasing:
        return "increasing"
    if constraints.is_decreasing:
        return "decreasing"
    return "neither"


def _as_constraints(constraints) -> ConstraintSet:
    if isinstance(constraints, ConstraintSet):
        return constraints
    return ConstraintSet.from_points(constraints)


def upper_bound(constraints) -> CopulaSurface:
    """Pointwise largest quasi-copula matching the constraint values.

    A copula (tagged ``known-copula``) when the point set is decreasing;
    in general only a quasi-copula.
    """
    cs = _as_constraints(constraints)
    a, b, t = cs.a, cs.b, cs.theta

    def fn(u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        out = frechet_upper(u, v)
        for ak, bk, tk in zip(a, b, t):
            out = np.minimum(
                out, tk + np.maximum(u - ak, 0.0) + np.maximum(v - bk, 0.0)
            )
        return out

    tag = "known-copula" if cs.is_decreasing else "quasi-copula"
    return CopulaSurface(
        fn, tag=tag, name=f"constrained-upper(n={len(cs)})", structure=("point-set-upper", cs)
    )


def lower_bound(constraints) -> CopulaSurface:
    """Pointwise smallest quasi-copula matching the constraint values.

    A copula (tagged ``known-copula``) when the point set is increasing.
    """
    cs = _as_constraints(constraints)
    a, b, t = cs.a, cs.b, cs.theta

    def fn(u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        out = frechet_lower(u, v)
        for ak, bk, tk in zip(a, b, t):
            out = np.maximum(
                out, tk - np.maximum(ak - u, 0.0) - np.maximum(bk - v, 0.0)
            )
        return out

    tag = "known-copula" if cs.is_increasing else "quasi-copula"
    return CopulaSurface(
        fn, tag=tag, name=f"constrained-lower(n={len(cs)})", structure=("point-set-lower", cs)
    )


def bounds_from_second_to_default(
    prices: Sequence[tuple[float, float]], m_x: Marginal, m_y: Marginal
) -> tuple[CopulaSurface, CopulaSurface]:
    """Bound surfaces from digital both-default prices at known maturities.

    Each quote (T_k, P_k) pins the copula at (F_X(T_k), F_Y(T_k)) to P_k.
    The induced point set is increasing (CDFs are nondecreasing in T), so
    the lower bound is a copula and the price bound it yields is sharp.
    Returns ``(lower, upper)``.
    """
    pts = [
        (float(m_x.cdf(T)), float(m_y.cdf(T)), float(P)) for T, P in prices
    ]
    cs = ConstraintSet.from_points(pts)
    return lower_bound(cs), upper_bound(cs)


def bounds_from_max_options(
    curve: Callable[[float], float],
    m_x: Marginal,
    m_y: Marginal,
    strike_grid: Sequence[float],
) -> tuple[CopulaSurface, CopulaSurface]:
    """Bound surfaces from the joint CDF diagonal K -> F(K, K).

    Prices of options on the maximum (or minimum) of the two assets at all
    strikes determine F(K, K); sampling that curve on ``strike_grid`` pins
    the copula on the increasing set (F_X(K), F_Y(K)).  Returns
    ``(lower, upper)`` with the lower bound a copula.
    """
    pts = [
        (float(m_x.cdf(K)), float(m_y.cdf(K)), float(curve(K))) for K in strike_grid
    ]
    cs = ConstraintSet.from_points(pts)
    return lower_bound(cs), upper_bound(cs)


def constraints_from_csv(path) -> ConstraintSet:
    """Read an ``a,b,theta`` CSV into a ConstraintSet."""
    rows = _read_csv(path, ("a", "b", "theta"))
    return ConstraintSet.from_points(rows)


def constraints_from_price_csv(path, m_x: Marginal, m_y: Marginal) -> ConstraintSet:
    """Read a ``T,price`` CSV of both-default quotes into a ConstraintSet."""
    rows = _read_csv(path, ("t", "price"))
    return ConstraintSet.from_points(
        (float(m_x.cdf(T)), float(m_y.cdf(T)), P) for T, P in rows
    )


def _read_csv(path, expected: tuple[str, ...]) -> list[tuple[float, ...]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip().lower() for h in header[: len(expected)]) != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)!r}, got {header!r}")
        return [
            tuple(float(c) for c in row[: len(expected)])
            for row in reader
            if row and row[0].strip()
        ]
