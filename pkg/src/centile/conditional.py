"""Conditional growth model: weight quantiles given a child's own history.

The global model regresses current weight on an age spline, the child's
most recent prior weight(s), and current height entered linearly:

    Q_tau(W | history) = sum_k beta_k B_k(t) + gamma(t) * W_prev (+ more
    lags) + alpha * H (+ optional H^2 and inter-visit gap)

with ``gamma`` either a constant or itself expanded in the age basis.
Because the prior path is an explicit covariate, predictions accept a
*selected* path: substituting a counterfactual prior weight answers
"what would this child's conditional quantile be had the earlier visit
tracked differently". Screening compares an observed weight against the
0.90/0.97 conditional quantiles.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from . import qr_solver
from .splines import KnotVector, basis_at, design_matrix

if TYPE_CHECKING:
    from .cohort_io import Cohort, Measurement

#: Recognized extra covariates, in canonical design order.
COVARIATE_CHOICES = ("height_linear", "height_squared", "age_gap")

#: Default screening levels.
SCREEN_TAUS = (0.90, 0.97)


@dataclass(frozen=True)
class ConditionalModelSpec:
    """What enters the regression besides the age spline.

    ``n_lags`` prior weights are used (most recent first);
    ``time_varying_lag`` expands every lag coefficient in the age basis
    instead of keeping it constant. Covariates are stored in canonical
    order regardless of the order given.
    """

    tau: float
    n_lags: int = 1
    covariates: tuple[str, ...] = ("height_linear",)
    time_varying_lag: bool = False

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if self.n_lags < 1:
            raise ValueError("n_lags must be at least 1")
        covs = tuple(self.covariates)
        unknown = [c for c in covs if c not in COVARIATE_CHOICES]
        if unknown:
            raise ValueError(
                f"unknown covariates {unknown}; choose from {COVARIATE_CHOICES}"
            )
        if len(set(covs)) != len(covs):
            raise ValueError(f"duplicate covariates: {covs}")
        object.__setattr__(
            self,
            "covariates",
            tuple(c for c in COVARIATE_CHOICES if c in covs),
        )

    @property
    def needs_height(self) -> bool:
        return bool(
            {"height_linear", "height_squared"} & set(self.covariates)
        )

    def coefficient_length(self, kv: KnotVector) -> int:
        per_lag = kv.dimension if self.time_varying_lag else 1
        return kv.dimension + self.n_lags * per_lag + len(self.covariates)


@dataclass(frozen=True)
class RowOrigin:
    """Which (subject, visit) produced a design row."""

    subject_id: str
    visit_index: int
    age: float


@dataclass(frozen=True)
class ConditionalModel:
    spec: ConditionalModelSpec
    kv: KnotVector
    coefficients: np.ndarray  # [age-basis block | lag blocks | covariate block]
    training_rows: int

    def __post_init__(self):
        expect = self.spec.coefficient_length(self.kv)
        if len(self.coefficients) != expect:
            raise ValueError(
                f"coefficient vector has length {len(self.coefficients)}, "
                f"expected {expect}"
            )

    def lag_block(self, lag: int) -> np.ndarray:
        """Coefficients of prior-weight lag ``lag`` (1 = most recent)."""
        if not 1 <= lag <= self.spec.n_lags:
            raise ValueError(f"lag must be in 1..{self.spec.n_lags}")
        width = self.kv.dimension if self.spec.time_varying_lag else 1
        start = self.kv.dimension + (lag - 1) * width
        return self.coefficients[start : start + width]

    def covariate_coefficient(self, name: str) -> float:
        if name not in self.spec.covariates:
            raise ValueError(f"model has no covariate {name!r}")
        i = self.spec.covariates.index(name)
        width = self.kv.dimension if self.spec.time_varying_lag else 1
        start = self.kv.dimension + self.spec.n_lags * width
        return float(self.coefficients[start + i])


def _covariate_values(
    spec: ConditionalModelSpec, height: float | None, gap: float
) -> list[float]:
    out = []
    for name in spec.covariates:
        if name == "height_linear":
            out.append(float(height))
        elif name == "height_squared":
            out.append(float(height) ** 2)
        else:  # age_gap
            out.append(float(gap))
    return out


def _assemble_row(
    spec: ConditionalModelSpec,
    kv: KnotVector,
    t: float,
    prior_weights: Sequence[float],
    height: float | None,
    gap: float,
) -> np.ndarray:
    base = basis_at(kv, t)
    parts = [base]
    for w in prior_weights:  # most recent first
        parts.append(w * base if spec.time_varying_lag else np.array([w]))
    cov = _covariate_values(spec, height, gap)
    if cov:
        parts.append(np.asarray(cov))
    return np.concatenate(parts)


def build_conditional_design(
    cohort: "Cohort", spec: ConditionalModelSpec, kv: KnotVector
) -> tuple[np.ndarray, np.ndarray, list[RowOrigin]]:
    """One design row per visit with ``n_lags`` prior weight measurements.

    A subject's weight path is its weight-bearing visits in age order; a
    visit is eligible when it has ``n_lags`` immediate predecessors on
    that path and its own age lies in the basis domain. Rows needing
    height fail loudly when height is missing rather than silently
    shrinking the sample.
    """
    rows: list[np.ndarray] = []
    response: list[float] = []
    origins: list[RowOrigin] = []
    for sid in cohort.subject_ids():
        path = cohort.weight_visits(sid)
        for j in range(spec.n_lags, len(path)):
            m = path[j]
            if not kv.contains(m.age):
                continue
            if spec.needs_height and m.height is None:
                raise ValueError(
                    f"subject {sid} at age {m.age}: height required by the "
                    "model covariates but missing"
                )
            prior = [path[j - k].weight for k in range(1, spec.n_lags + 1)]
            gap = m.age - path[j - 1].age
            rows.append(_assemble_row(spec, kv, m.age, prior, m.height, gap))
            response.append(m.weight)
            origins.append(RowOrigin(sid, j, m.age))
    if not rows:
        raise ValueError(
            f"no eligible rows: every visit needs {spec.n_lags} prior weight "
            f"measurement(s) and an age inside [{kv.t_min}, {kv.t_max}]"
        )
    return np.vstack(rows), np.asarray(response), origins


def _block_layout(spec: ConditionalModelSpec, kv: KnotVector) -> list[tuple[str, int]]:
    width = kv.dimension if spec.time_varying_lag else 1
    blocks = [("age-basis", kv.dimension)]
    blocks += [(f"lag-{k}", width) for k in range(1, spec.n_lags + 1)]
    blocks += [(name, 1) for name in spec.covariates]
    return blocks


def _diagnose_rank(X: np.ndarray, blocks: list[tuple[str, int]]) -> str:
    """Name the first block whose columns fail to extend the design rank."""
    stop = 0
    rank = 0
    for name, width in blocks:
        sub = X[:, : stop + width]
        new_rank = np.linalg.matrix_rank(sub, tol=qr_solver.RANK_TOL * max(1.0, float(np.abs(sub).max())))
        if new_rank < rank + width:
            return name
        rank = new_rank
        stop += width
    return blocks[-1][0]


def fit_conditional(
    cohort: "Cohort",
    spec: ConditionalModelSpec,
    kv: KnotVector,
    *,
    min_rows_per_column: float = 10.0,
) -> ConditionalModel:
    """Fit the global model at ``spec.tau`` by quantile regression."""
    X, y, _ = build_conditional_design(cohort, spec, kv)
    n, p = X.shape
    if n < min_rows_per_column * p:
        raise ValueError(
            f"{n} training rows for {p} coefficients; need at least "
            f"{min_rows_per_column:g} rows per column"
        )
    try:
        result = qr_solver.fit(X, y, spec.tau)
    except qr_solver.RankDeficiencyError as exc:
        block = _diagnose_rank(X, _block_layout(spec, kv))
        raise qr_solver.RankDeficiencyError(
            f"{exc} (first degenerate block: {block})"
        ) from exc
    return ConditionalModel(spec, kv, result.coefficients, n)


def predict_conditional(
    model: ConditionalModel,
    t: float,
    prior_path: Sequence[tuple[float, float]],
    height: float | None = None,
) -> float:
    """Conditional quantile for a (possibly counterfactual) prior path.

    ``prior_path`` holds the ``n_lags`` prior ``(age, weight)`` pairs in
    chronological order; substituting hypothetical weights evaluates the
    model under a selected path. All path ages must precede ``t``.
    """
    spec = model.spec
    path = [(float(a), float(w)) for a, w in prior_path]
    if len(path) != spec.n_lags:
        raise ValueError(
            f"prior path has {len(path)} entries, model uses {spec.n_lags}"
        )
    if any(b[0] <= a[0] for a, b in zip(path, path[1:])):
        raise ValueError("prior path ages must be strictly increasing")
    if path and path[-1][0] >= t:
        raise ValueError(
            f"prior path ages must precede the prediction age {t}"
        )
    if spec.needs_height:
        if height is None:
            raise ValueError("model includes height; pass the current height")
        if height <= 0:
            raise ValueError(f"height must be positive, got {height}")
    prior = [w for _, w in reversed(path)]  # most recent first
    gap = t - path[-1][0]
    row = _assemble_row(spec, model.kv, float(t), prior, height, gap)
    return float(row @ model.coefficients)


class ScreenLevel(str, Enum):
    NONE = "none"
    WATCH = "watch"
    ALERT = "alert"


@dataclass(frozen=True)
class ScreeningFlag:
    """Outcome of comparing an observed weight to conditional quantiles.

    ``watch``: above the 0.90 threshold but not the 0.97 one;
    ``alert``: above the 0.97 threshold. If the two thresholds cross
    (possible at extreme covariates, since the models are fitted
    independently), ``warning`` says so and the level is decided by the
    0.97 threshold alone.
    """

    level: ScreenLevel
    observed: float
    thresholds: Mapping[float, float]
    warning: str | None = None


def screen(
    models: Mapping[float, ConditionalModel],
    visit: "Measurement",
    prior_path: Sequence[tuple[float, float]],
    height: float | None = None,
) -> ScreeningFlag:
    """Flag an observed visit against the 0.90/0.97 conditional quantiles."""
    picked = {}
    for tau in SCREEN_TAUS:
        found = [m for k, m in models.items() if abs(k - tau) < 1e-9]
        if not found:
            raise ValueError(f"missing conditional model for tau={tau}")
        picked[tau] = found[0]
    m90, m97 = picked[SCREEN_TAUS[0]], picked[SCREEN_TAUS[1]]
    spec90 = dataclasses.replace(m90.spec, tau=0.5)
    spec97 = dataclasses.replace(m97.spec, tau=0.5)
    if spec90 != spec97 or m90.kv != m97.kv:
        raise ValueError(
            "screening models must share their specification apart from tau"
        )
    if visit.weight is None:
        raise ValueError(
            f"subject {visit.subject_id} at age {visit.age}: no weight to screen"
        )
    if height is None:
        height = visit.height

    thresholds = {
        tau: predict_conditional(picked[tau], visit.age, prior_path, height)
        for tau in SCREEN_TAUS
    }
    t90, t97 = thresholds[SCREEN_TAUS[0]], thresholds[SCREEN_TAUS[1]]
    observed = float(visit.weight)
    warning = None
    if t97 < t90:
        warning = (
            f"conditional quantiles cross here ({SCREEN_TAUS[1]:g} threshold "
            f"{t97:.4g} below {SCREEN_TAUS[0]:g} threshold {t90:.4g}); "
            "level decided by the upper threshold alone"
        )
        level = ScreenLevel.ALERT if observed > t97 else ScreenLevel.NONE
    elif observed > t97:
        level = ScreenLevel.ALERT
    elif observed > t90:
        level = ScreenLevel.WATCH
    else:
        level = ScreenLevel.NONE
    return ScreeningFlag(level, observed, thresholds, warning)
