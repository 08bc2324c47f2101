"""
Weighted log-rank family and censored Kolmogorov-Smirnov / Cramer-von Mises
statistics built on variance-stabilised cumulative hazard differences.
"""
import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats

from core.data_manager import order_with_censoring
from core.errors import NoEventsError, ZeroVarianceError, DegenerateVarianceError, InvalidParameterError
from core.km import nelson_aalen
from core.models import TwoSampleData, StepCurve, SurvivalSample

logger = logging.getLogger(__name__)


# --- Risk table ---

@dataclass(frozen=True)
class RiskTable:
    """Per pooled distinct event time: risk-set sizes and death counts by group."""
    event_times: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    d0: np.ndarray
    d1: np.ndarray

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.y1

    @property
    def d(self) -> np.ndarray:
        return self.d0 + self.d1

    @property
    def k(self) -> int:
        return int(self.event_times.size)

    def pooled_survival(self) -> np.ndarray:
        """Pooled Kaplan-Meier value at each event time (right-continuous)."""
        return np.cumprod(1.0 - self.d / self.y)

    def pooled_survival_before(self) -> np.ndarray:
        """Pooled Kaplan-Meier value just before each event time."""
        s = self.pooled_survival()
        return np.concatenate([[1.0], s[:-1]])


def _at_risk(times: np.ndarray, tau: np.ndarray) -> np.ndarray:
    ordered = np.sort(times)
    return (ordered.size - np.searchsorted(ordered, tau, side='left')).astype(np.float64)


def _deaths(sample: SurvivalSample, tau: np.ndarray) -> np.ndarray:
    event_times = sample.times[sample.events == 1]
    counts = np.zeros(tau.size, dtype=np.float64)
    np.add.at(counts, np.searchsorted(tau, event_times), 1.0)
    return counts


def build_risk_table(data: TwoSampleData) -> RiskTable:
    times, events, _ = data.pooled()
    tau = np.unique(times[events == 1])
    if tau.size == 0:
        raise NoEventsError("pooled sample has no events")
    return RiskTable(
        event_times=tau,
        y0=_at_risk(data.group0.times, tau),
        y1=_at_risk(data.group1.times, tau),
        d0=_deaths(data.group0, tau),
        d1=_deaths(data.group1, tau),
    )


# --- Weighted log-rank ---

class WeightKind(enum.Enum):
    LOGRANK = "logrank"
    GEHAN = "gehan"
    TARONE_WARE = "tarone-ware"
    PETO_PETO = "peto-peto"
    FLEMING_HARRINGTON = "fleming-harrington"


@dataclass(frozen=True)
class WeightRule:
    kind: WeightKind = WeightKind.LOGRANK
    rho: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("rho", "gamma"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise InvalidParameterError(f"{name} must be >= 0, got {value}")
            object.__setattr__(self, name, value)

    def descriptor(self) -> str:
        if self.kind is WeightKind.FLEMING_HARRINGTON:
            return f"fleming-harrington:rho={self.rho:g},gamma={self.gamma:g}"
        return self.kind.value

    def weights(self, at_risk: np.ndarray, survival: np.ndarray, survival_before: np.ndarray) -> np.ndarray:
        """
        Weight per event time from the pooled risk set Y and pooled KM.
        Fleming-Harrington uses S(t_{j-1}) in both factors.
        """
        if self.kind is WeightKind.LOGRANK:
            return np.ones_like(at_risk)
        if self.kind is WeightKind.GEHAN:
            return at_risk.astype(np.float64)
        if self.kind is WeightKind.TARONE_WARE:
            return np.sqrt(at_risk)
        if self.kind is WeightKind.PETO_PETO:
            return survival.copy()
        return np.power(survival_before, self.rho) * np.power(1.0 - survival_before, self.gamma)

    def table_weights(self, table: RiskTable) -> np.ndarray:
        return self.weights(table.y, table.pooled_survival(), table.pooled_survival_before())


def _logrank_terms(d, y, d1, y1):
    """Observed-minus-expected and hypergeometric variance per event time (variance 0 where Y = 1)."""
    share = y1 / y
    diff = d1 - d * share
    with np.errstate(divide='ignore', invalid='ignore'):
        var = np.where(y > 1, d * share * (1.0 - share) * (y - d) / (y - 1.0), 0.0)
    return diff, var


def weighted_logrank(table: RiskTable, rule: WeightRule) -> float:
    """Z^2 = [sum w (d1 - d Y1/Y)]^2 / sum w^2 Var(d1)."""
    w = rule.table_weights(table)
    diff, var = _logrank_terms(table.d, table.y, table.d1, table.y1)
    numerator = float(np.sum(w * diff))
    denominator = float(np.sum(w * w * var))
    if not denominator > 0:
        raise ZeroVarianceError(f"{rule.descriptor()}: weighted variance is zero")
    return numerator * numerator / denominator


def logrank_asymptotic_pvalue(z2: float) -> float:
    """Reference chi-square(1) tail probability."""
    return float(stats.chi2.sf(z2, df=1))


class PooledLogRank:
    """
    Batch evaluator of a weighted log-rank statistic over label splits.

    Pooled risk sets, pooled KM and hence the weights do not depend on the
    labels, so only d1 and Y1 change between splits: d1 = L @ E and
    Y1 = L @ R with E (n x K) the event indicator and R (n x K) the at-risk
    indicator of each observation at each pooled event time.
    """

    def __init__(self, rule: WeightRule, times: np.ndarray, events: np.ndarray):
        times = np.asarray(times, dtype=np.float64)
        events = np.asarray(events)
        self.tau = np.unique(times[events == 1])
        if self.tau.size == 0:
            raise NoEventsError("pooled sample has no events")

        self.event_matrix = ((events[:, None] == 1) & (times[:, None] == self.tau[None, :])).astype(np.float64)
        self.risk_matrix = (times[:, None] >= self.tau[None, :]).astype(np.float64)
        self.d = self.event_matrix.sum(axis=0)
        self.y = self.risk_matrix.sum(axis=0)

        survival = np.cumprod(1.0 - self.d / self.y)
        survival_before = np.concatenate([[1.0], survival[:-1]])
        self.w = rule.weights(self.y, survival, survival_before)

    def __call__(self, labels: np.ndarray) -> np.ndarray:
        group1 = (np.atleast_2d(labels) == 1).astype(np.float64)
        d1 = group1 @ self.event_matrix
        y1 = group1 @ self.risk_matrix
        diff, var = _logrank_terms(self.d, self.y, d1, y1)
        numerator = (diff * self.w).sum(axis=1)
        denominator = (var * (self.w * self.w)).sum(axis=1)
        with np.errstate(divide='ignore', invalid='ignore'):
            values = numerator * numerator / denominator
        return np.where(denominator > 0, values, -np.inf)


# --- Censored KS / CvM ---

@dataclass(frozen=True)
class SchumacherProcesses:
    """
    Step processes on [0, tau]: A0, A1, their combination A, H = A / (1 + A),
    psi = A(tau) ** -1/2 and psi0(t) = 1 / (1 + A(t)), plus the group
    Nelson-Aalen curves whose difference is the test process.
    """
    tau: float
    a0: StepCurve
    a1: StepCurve
    a: StepCurve
    h: StepCurve
    psi: float
    psi0: StepCurve
    hazard0: StepCurve
    hazard1: StepCurve
    n: int

    @property
    def jump_points(self) -> np.ndarray:
        """Pooled jump points of A, H and the hazard difference within [0, tau]."""
        points = np.union1d(self.hazard0.knots, self.hazard1.knots)
        return points[points <= self.tau]

    def difference(self, t):
        return self.hazard1(t) - self.hazard0(t)

    def difference_before(self, t):
        return self.hazard1.left_limit(t) - self.hazard0.left_limit(t)


def _stabilised_hazard(sample: SurvivalSample) -> StepCurve:
    """A_j(t) = n_j sum_{X <= t} delta / (Y_j(X) (Y_j(X) + 1))."""
    ordered = order_with_censoring(sample)
    times = ordered.sorted_times
    at_risk = (times.size - np.searchsorted(times, times, side='left')).astype(np.float64)
    increments = sample.n * ordered.sorted_events / (at_risk * (at_risk + 1.0))

    tau, first = np.unique(times, return_index=True)
    cumulative = np.cumsum(increments)
    last = np.concatenate([first[1:], [times.size]]) - 1
    keep = np.add.reduceat(increments, first) > 0
    return StepCurve(tau[keep], cumulative[last][keep], initial=0.0)


def _combine_curves(knots: np.ndarray, curves, coefs, transform=None) -> StepCurve:
    values = sum(c * curve(knots) for c, curve in zip(coefs, curves))
    values = np.asarray(values, dtype=np.float64)
    if transform is not None:
        values = transform(values)
    return StepCurve(knots, values, initial=transform(0.0) if transform is not None else 0.0)


def schumacher_processes(data: TwoSampleData) -> SchumacherProcesses:
    n0, n1 = data.n0, data.n1
    n = n0 + n1
    tau = float(min(data.group0.times.max(), data.group1.times.max()))

    a0 = _stabilised_hazard(data.group0)
    a1 = _stabilised_hazard(data.group1)
    knots = np.union1d(a0.knots, a1.knots)
    knots = knots[knots <= tau]

    a = _combine_curves(knots, (a0, a1), (n / n0, n / n1))
    a_tau = a(tau)
    if not a_tau > 0:
        raise DegenerateVarianceError("combined stabilised hazard is zero on [0, tau]")

    h = _combine_curves(knots, (a0, a1), (n / n0, n / n1), transform=lambda v: v / (1.0 + v))
    psi0 = _combine_curves(knots, (a0, a1), (n / n0, n / n1), transform=lambda v: 1.0 / (1.0 + v))

    return SchumacherProcesses(
        tau=tau, a0=a0, a1=a1, a=a, h=h,
        psi=float(1.0 / np.sqrt(a_tau)), psi0=psi0,
        hazard0=nelson_aalen(order_with_censoring(data.group0)),
        hazard1=nelson_aalen(order_with_censoring(data.group1)),
        n=n,
    )


def ks_censored(data: TwoSampleData):
    """(Q_KS, Q0_KS): n * sup over jump points in [0, tau] of |eps psi| and |eps psi0|."""
    proc = schumacher_processes(data)
    points = proc.jump_points
    if points.size == 0:
        return 0.0, 0.0
    eps = proc.difference(points)
    q = proc.n * float(np.max(np.abs(eps * proc.psi)))
    q0 = proc.n * float(np.max(np.abs(eps * proc.psi0(points))))
    return q, q0


def _jumps(curve: StepCurve, tau: float):
    inside = curve.knots <= tau
    knots = curve.knots[inside]
    levels = np.concatenate([[curve.initial], curve.values[inside]])
    return knots, np.diff(levels)


def cvm_censored(data: TwoSampleData):
    """
    (Q_CM, Q0_CM) with the Stieltjes integrals taken as sums over the jumps of
    A (resp. H), integrands evaluated just before each jump.
    """
    proc = schumacher_processes(data)
    a_tau = proc.a(proc.tau)

    knots, da = _jumps(proc.a, proc.tau)
    eps = proc.difference_before(knots)
    q = proc.n / a_tau * float(np.sum(np.square(eps * proc.psi) * da))

    knots, dh = _jumps(proc.h, proc.tau)
    eps = proc.difference_before(knots)
    q0 = proc.n * float(np.sum(np.square(eps * proc.psi0.left_limit(knots)) * dh))
    return q, q0
