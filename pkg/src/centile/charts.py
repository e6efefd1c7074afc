"""Marginal growth charts: quantile curves of a measurement against age.

A chart is a grid of quantile levels with one spline coefficient row per
level, fitted by pooling every in-domain measurement of one kind within
one cohort stratum. Charts evaluate to measurement values, invert to
percentiles, and — because per-level fits are independent — can exhibit
quantile crossing, which is detected and repaired by monotone
rearrangement on an evaluation grid (sorted curves generally leave the
spline span, so the repair is stored as a value table next to the
coefficients, never folded back into them).
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import qr_solver
from .splines import KnotVector, basis_at, design_matrix

if TYPE_CHECKING:
    from .cohort_io import Cohort

#: Quantile levels fitted by default; brackets the commonly quoted
#: screening percentiles (3rd through 97th).
DEFAULT_TAU_GRID = (0.03, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.97)

#: Two curves are considered crossed when the higher level evaluates
#: strictly below the lower one by more than this.
CROSSING_TOL = 1e-9

#: Fraction of out-of-domain measurements tolerated before fitting fails.
MAX_SKIP_FRACTION = 0.10

MEASUREMENT_KINDS = ("weight", "height")


class CrossingError(ValueError):
    """Quantile curves cross where a monotone lookup was required."""


@dataclass(frozen=True)
class RepairedGrid:
    """Monotone value table: one row per grid age, sorted across levels."""

    ages: np.ndarray
    values: np.ndarray  # shape (len(ages), len(taus))


@dataclass(frozen=True)
class Crossing:
    age: float
    tau_low: float
    tau_high: float


@dataclass(frozen=True)
class MarginalChart:
    kind: str
    stratum: str
    kv: KnotVector
    taus: tuple[float, ...]
    coef: np.ndarray  # shape (len(taus), kv.dimension)
    fitted_n: int
    repaired: RepairedGrid | None = None

    @property
    def label(self) -> str:
        """Stable identifier used when other models reference this chart."""
        return f"{self.kind}:{self.stratum}"


def _validate_taus(taus: Sequence[float]) -> tuple[float, ...]:
    taus = tuple(float(t) for t in taus)
    if not taus:
        raise ValueError("tau grid must be nonempty")
    for t in taus:
        if not 0.0 < t < 1.0:
            raise ValueError(f"tau {t} outside (0, 1)")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError(f"tau grid must be strictly increasing: {taus}")
    return taus


def fit_marginal(
    cohort: "Cohort",
    kind: str,
    stratum: str,
    kv: KnotVector,
    taus: Sequence[float] = DEFAULT_TAU_GRID,
) -> MarginalChart:
    """Fit one quantile curve per grid level by pooled quantile regression.

    All observations of ``kind`` in ``stratum`` are pooled across
    subjects; ages outside the knot domain are skipped (warned, with a
    count), and more than ``MAX_SKIP_FRACTION`` of them is an error.
    """
    if kind not in MEASUREMENT_KINDS:
        raise ValueError(f"unknown measurement kind {kind!r}")
    taus = _validate_taus(taus)

    ages, values = cohort.collect(kind, stratum)
    total = ages.size
    if total == 0:
        raise ValueError(f"no {kind} measurements in stratum {stratum!r}")
    keep = (ages >= kv.t_min) & (ages <= kv.t_max)
    skipped = int(total - np.count_nonzero(keep))
    if skipped > MAX_SKIP_FRACTION * total:
        raise ValueError(
            f"{skipped} of {total} {kind} measurements fall outside the "
            f"knot domain [{kv.t_min}, {kv.t_max}]"
        )
    if skipped:
        warnings.warn(
            f"skipped {skipped} of {total} {kind} measurements outside "
            f"[{kv.t_min}, {kv.t_max}]",
            stacklevel=2,
        )
    ages = ages[keep]
    values = values[keep]
    if ages.size < kv.dimension:
        raise ValueError(
            f"insufficient data: {ages.size} in-domain observations for a "
            f"{kv.dimension}-dimensional basis"
        )

    X = design_matrix(kv, ages)
    coef = np.empty((len(taus), kv.dimension))
    for i, tau in enumerate(taus):
        coef[i] = qr_solver.fit(X, values, tau).coefficients
    coef.flags.writeable = False
    return MarginalChart(kind, stratum, kv, taus, coef, int(ages.size))


def curve_values(chart: MarginalChart, t: float) -> np.ndarray:
    """Raw fitted curve values at one age, one entry per grid level."""
    return chart.coef @ basis_at(chart.kv, t)


def values_on_grid(chart: MarginalChart, ages: Sequence[float]) -> np.ndarray:
    """Raw fitted curve values, shape ``(len(ages), len(taus))``."""
    return design_matrix(chart.kv, ages) @ chart.coef.T


def eval_quantile(chart: MarginalChart, t: float, tau: float) -> float:
    """Curve value at age ``t`` and level ``tau``.

    Exact basis expansion at grid levels; linear interpolation between
    adjacent grid curves otherwise. Levels outside the grid range raise
    ``ValueError`` (no extrapolation across quantile levels).
    """
    taus = chart.taus
    tau = float(tau)
    vals = curve_values(chart, t)
    if tau in taus:
        return float(vals[taus.index(tau)])
    if tau < taus[0] or tau > taus[-1]:
        raise ValueError(
            f"tau {tau} outside fitted grid range [{taus[0]}, {taus[-1]}]"
        )
    hi = int(np.searchsorted(taus, tau))
    lo = hi - 1
    frac = (tau - taus[lo]) / (taus[hi] - taus[lo])
    return float(vals[lo] + frac * (vals[hi] - vals[lo]))


@dataclass(frozen=True)
class PercentileReport:
    """Where a value sits among the chart's curves at one age.

    ``percentile`` is interpolated when the value falls inside the fitted
    band; when the value is outside, ``clipped`` is ``"below"``/``"above"``
    and ``percentile`` holds the bounding grid percentile.
    """

    percentile: float
    clipped: str | None = None

    def __str__(self) -> str:
        if self.clipped == "below":
            return f"< {self.percentile:g}"
        if self.clipped == "above":
            return f"> {self.percentile:g}"
        return f"{self.percentile:g}"


def percentile_of(chart: MarginalChart, t: float, value: float) -> PercentileReport:
    """Invert the chart at age ``t``: which percentile does ``value`` sit at?

    Uses the repaired value table when the chart carries one and ``t``
    matches one of its grid ages; otherwise evaluates the raw curves and
    refuses (``CrossingError``) if they are non-monotone at ``t``.
    """
    value = float(value)
    vals = None
    if chart.repaired is not None:
        match = np.nonzero(np.abs(chart.repaired.ages - t) <= 1e-12)[0]
        if match.size:
            vals = chart.repaired.values[int(match[0])]
    if vals is None:
        vals = curve_values(chart, t)
        if np.any(np.diff(vals) < -CROSSING_TOL):
            raise CrossingError(
                f"quantile curves cross at age {t}; run repair_crossings "
                "before inverting percentiles"
            )
        vals = np.maximum.accumulate(vals)  # absorb sub-tolerance wiggle

    taus = np.asarray(chart.taus)
    if value < vals[0]:
        return PercentileReport(100.0 * float(taus[0]), clipped="below")
    if value > vals[-1]:
        return PercentileReport(100.0 * float(taus[-1]), clipped="above")
    i = int(np.searchsorted(vals, value, side="left"))
    if vals[i] == value:
        return PercentileReport(100.0 * float(taus[i]))
    frac = (value - vals[i - 1]) / (vals[i] - vals[i - 1])
    tau = taus[i - 1] + frac * (taus[i] - taus[i - 1])
    return PercentileReport(100.0 * float(tau))


def detect_crossings(
    chart: MarginalChart, ages: Sequence[float] | None = None
) -> list[Crossing]:
    """List every (age, adjacent level pair) where curve order inverts.

    With explicit ``ages`` the raw coefficient curves are inspected; with
    ``ages=None`` the chart's stored repaired table is checked at its own
    grid (useful as a post-repair assertion).
    """
    if ages is None:
        if chart.repaired is None:
            raise ValueError("no repaired grid stored; pass explicit ages")
        grid = np.asarray(chart.repaired.ages, dtype=np.float64)
        table = chart.repaired.values
    else:
        grid = np.asarray(ages, dtype=np.float64)
        table = values_on_grid(chart, grid)

    out: list[Crossing] = []
    for i, age in enumerate(grid):
        row = table[i]
        drops = np.nonzero(np.diff(row) < -CROSSING_TOL)[0]
        for j in drops:
            out.append(Crossing(float(age), chart.taus[j], chart.taus[j + 1]))
    return out


def repair_crossings(
    chart: MarginalChart, ages: Sequence[float]
) -> MarginalChart:
    """Monotone rearrangement on an evaluation grid.

    At each grid age the level-indexed values are replaced by their
    sorted order, preserving the marginal distribution of values at that
    age. Returns a copy of the chart carrying the repaired table; the
    coefficient rows are untouched.
    """
    grid = np.asarray(ages, dtype=np.float64)
    table = np.sort(values_on_grid(chart, grid), axis=1)
    grid = grid.copy()
    grid.flags.writeable = False
    table.flags.writeable = False
    return dataclasses.replace(chart, repaired=RepairedGrid(grid, table))
