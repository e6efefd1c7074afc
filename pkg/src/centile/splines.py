"""Clamped B-spline bases on an age axis.

A chart's age effect is expanded in B-splines over a clamped knot vector:
both boundary knots are repeated ``degree + 1`` times so the curve is
controlled all the way to the domain ends, and interior knots are placed
by the user to reflect known growth phases (dense in infancy, sparse
later). Evaluation uses the Cox-de Boor recurrence, which is numerically
stable where truncated-power bases are not.

Conventions:

* the domain is ``[t_min, t_max]``; evaluation outside raises
  :class:`DomainError` (callers decide whether clamping is appropriate);
* basis intervals are half-open on the right except the last, so
  ``t = t_max`` evaluates the final basis function to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels

#: Interior knots used by default for weight charts over ages 0-2 years.
#: Config-overridable; dense early to track infancy growth velocity.
DEFAULT_INFANCY_INTERIOR = (0.25, 0.5, 1.0, 1.5)
DEFAULT_INFANCY_BOUNDARY = (0.0, 2.0)


class DomainError(ValueError):
    """An age falls outside a knot vector's domain."""


@dataclass(frozen=True)
class KnotVector:
    """Degree plus clamped knot sequence; construct via :func:`make_knots`."""

    degree: int
    boundary: tuple[float, float]
    interior: tuple[float, ...]
    full_knots: np.ndarray = field(repr=False)

    @property
    def t_min(self) -> float:
        return self.boundary[0]

    @property
    def t_max(self) -> float:
        return self.boundary[1]

    @property
    def dimension(self) -> int:
        """Number of basis functions: interior count + degree + 1."""
        return len(self.interior) + self.degree + 1

    def contains(self, t: float) -> bool:
        return self.t_min <= t <= self.t_max

    def __eq__(self, other) -> bool:
        if not isinstance(other, KnotVector):
            return NotImplemented
        return (
            self.degree == other.degree
            and self.boundary == other.boundary
            and self.interior == other.interior
        )

    def __hash__(self) -> int:
        return hash((self.degree, self.boundary, self.interior))


def make_knots(
    degree: int,
    boundary: tuple[float, float],
    interior: Sequence[float] = (),
) -> KnotVector:
    """Build a clamped knot vector.

    ``boundary`` must be ordered, ``interior`` strictly increasing and
    strictly inside the boundary. The full sequence repeats each boundary
    knot ``degree + 1`` times.
    """
    if not isinstance(degree, (int, np.integer)) or degree < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {degree!r}")
    t_min, t_max = float(boundary[0]), float(boundary[1])
    if not np.isfinite(t_min) or not np.isfinite(t_max):
        raise ValueError("boundary ages must be finite")
    if not t_min < t_max:
        raise ValueError(f"boundary must be ordered, got ({t_min}, {t_max})")
    interior = tuple(float(u) for u in interior)
    for u in interior:
        if not t_min < u < t_max:
            raise ValueError(
                f"interior knot {u} outside open boundary ({t_min}, {t_max})"
            )
    if any(b <= a for a, b in zip(interior, interior[1:])):
        raise ValueError(f"interior knots must be strictly increasing: {interior}")

    full = np.concatenate(
        [
            np.full(degree + 1, t_min),
            np.asarray(interior, dtype=np.float64),
            np.full(degree + 1, t_max),
        ]
    )
    full.flags.writeable = False
    return KnotVector(int(degree), (t_min, t_max), interior, full)


def default_infancy_knots(degree: int = 3) -> KnotVector:
    return make_knots(degree, DEFAULT_INFANCY_BOUNDARY, DEFAULT_INFANCY_INTERIOR)


def basis_at(kv: KnotVector, t: float) -> np.ndarray:
    """Basis function values at a single age.

    Length equals ``kv.dimension``; entries are nonnegative, sum to 1,
    and at most ``degree + 1`` are nonzero.
    """
    t = float(t)
    if not kv.contains(t):
        raise DomainError(
            f"age {t} outside spline domain [{kv.t_min}, {kv.t_max}]"
        )
    return _kernels.bspline_design(kv.full_knots, kv.degree, np.array([t]))[0]


def design_matrix(kv: KnotVector, ages: Sequence[float]) -> np.ndarray:
    """Stack of basis rows, one per age; all ages must be in-domain."""
    ages = np.asarray(ages, dtype=np.float64)
    if ages.ndim != 1:
        raise ValueError("ages must be one-dimensional")
    bad = np.nonzero(~((ages >= kv.t_min) & (ages <= kv.t_max)))[0]
    if bad.size:
        i = int(bad[0])
        raise DomainError(
            f"row {i}: age {ages[i]} outside spline domain "
            f"[{kv.t_min}, {kv.t_max}]"
        )
    return _kernels.bspline_design(kv.full_knots, kv.degree, ages)
