"""
Energy-distance and kernel MMD statistics for right-censored two-sample data.

Each statistic combines three weighted double sums over a pairwise function h
(the alpha-power distance for energy, a kernel for MMD):

    between  = sum_ij w0_i w1_j h(x0_i, x1_j)
    within_g = sum_ij wg_i wg_j h(xg_i, xg_j)

Energy is 2*between - within_0 - within_1; MMD is within_0 + within_1 - 2*between.
Weights are Kaplan-Meier integral weights (censoring aware) or 1/n.
"""
import enum
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core.data_manager import order_with_censoring
from core.errors import DegenerateWeightsError
from core.kernels import PairwiseSpec, SemimetricSpec
from core.km import km_weights, km_weights_batch
from core.models import TwoSampleData, StatisticValue, SurvivalSample

logger = logging.getLogger(__name__)


class StatisticForm(enum.Enum):
    V = "v"
    # V form with each group's weights rescaled to total mass 1
    V_NORMALIZED = "vn"
    U_NORMALIZED = "u"


@dataclass(frozen=True)
class StatisticKind:
    spec: PairwiseSpec
    form: StatisticForm = StatisticForm.U_NORMALIZED
    censoring_aware: bool = True

    @property
    def is_energy(self) -> bool:
        return isinstance(self.spec, SemimetricSpec)

    def combine(self, between: float, within0: float, within1: float):
        if self.is_energy:
            return 2.0 * between - within0 - within1
        return within0 + within1 - 2.0 * between


def t_scale(raw: float, n0: int, n1: int) -> float:
    """raw * n0 n1 / (n0 + n1)"""
    return raw * (n0 * n1) / (n0 + n1)


def _value(raw: float, data: TwoSampleData) -> StatisticValue:
    raw = float(raw)
    return StatisticValue(raw, t_scale(raw, data.n0, data.n1))


def _km_weighted(sample: SurvivalSample) -> Tuple[np.ndarray, np.ndarray]:
    ordered = order_with_censoring(sample)
    return ordered.sorted_times, km_weights(ordered).weights


def _uniform_weighted(sample: SurvivalSample) -> Tuple[np.ndarray, np.ndarray]:
    return sample.times, np.full(sample.n, 1.0 / sample.n)


def _double_sum(w_a: np.ndarray, w_b: np.ndarray, h: np.ndarray, drop_diagonal: bool = False) -> Tuple[float, float]:
    """(sum w_a w_b h, sum w_a w_b), both pairwise-summed."""
    ww = np.outer(w_a, w_b)
    if drop_diagonal:
        np.fill_diagonal(ww, 0.0)
    return float(np.sum(ww * h)), float(np.sum(ww))


def _log_unequal_windows(data: TwoSampleData) -> None:
    last0 = int(np.argmax(data.group0.times))
    last1 = int(np.argmax(data.group1.times))
    if (data.group0.times[last0] != data.group1.times[last1]
            and data.group0.events[last0] == 0 and data.group1.events[last1] == 0):
        logger.debug("Groups end at different censored times; KM masses may not reach 1 in either group")


def _v_raw(kind: StatisticKind, x0, w0, x1, w1, normalize: bool) -> float:
    for g, w in enumerate((w0, w1)):
        if not np.sum(w) > 0:
            raise DegenerateWeightsError(f"group {g} has zero total weight (no events)")
    if normalize:
        w0 = w0 / np.sum(w0)
        w1 = w1 / np.sum(w1)

    h = kind.spec.matrix
    between, _ = _double_sum(w0, w1, h(x0, x1))
    within0, _ = _double_sum(w0, w0, h(x0, x0))
    within1, _ = _double_sum(w1, w1, h(x1, x1))
    return kind.combine(between, within0, within1)


def _u_raw(kind: StatisticKind, x0, w0, x1, w1) -> float:
    h = kind.spec.matrix
    num_b, den_b = _double_sum(w0, w1, h(x0, x1))
    num_0, den_0 = _double_sum(w0, w0, h(x0, x0), drop_diagonal=True)
    num_1, den_1 = _double_sum(w1, w1, h(x1, x1), drop_diagonal=True)

    if not den_0 > 0:
        raise DegenerateWeightsError("group 0 needs at least two weighted observations")
    if not den_1 > 0:
        raise DegenerateWeightsError("group 1 needs at least two weighted observations")
    if not den_b > 0:
        raise DegenerateWeightsError("between-group weight sum is zero")

    return kind.combine(num_b / den_b, num_0 / den_0, num_1 / den_1)


def v_statistic_censored(kind: StatisticKind, data: TwoSampleData) -> StatisticValue:
    """V-type double sums with KM integral weights, diagonal pairs included.

    With kind.form == V_NORMALIZED the weights of each group are rescaled to total mass 1.
    """
    _log_unequal_windows(data)
    x0, w0 = _km_weighted(data.group0)
    x1, w1 = _km_weighted(data.group1)
    raw = _v_raw(kind, x0, w0, x1, w1, normalize=kind.form is StatisticForm.V_NORMALIZED)
    return _value(raw, data)


def u_statistic_censored_normalized(kind: StatisticKind, data: TwoSampleData) -> StatisticValue:
    """Weighted means of h: within-group sums exclude i = j, between-group sums use all pairs."""
    _log_unequal_windows(data)
    x0, w0 = _km_weighted(data.group0)
    x1, w1 = _km_weighted(data.group1)
    return _value(_u_raw(kind, x0, w0, x1, w1), data)


def statistic_uncensored(kind: StatisticKind, data: TwoSampleData) -> StatisticValue:
    """Classical empirical statistic with weights 1/n; event flags are ignored."""
    x0, w0 = _uniform_weighted(data.group0)
    x1, w1 = _uniform_weighted(data.group1)
    if kind.form is StatisticForm.U_NORMALIZED:
        raw = _u_raw(kind, x0, w0, x1, w1)
    else:
        raw = _v_raw(kind, x0, w0, x1, w1, normalize=False)
    return _value(raw, data)


def compute_statistic(kind: StatisticKind, data: TwoSampleData) -> StatisticValue:
    if not kind.censoring_aware:
        return statistic_uncensored(kind, data)
    if kind.form is StatisticForm.U_NORMALIZED:
        return u_statistic_censored_normalized(kind, data)
    return v_statistic_censored(kind, data)


class PooledStatistic:
    """
    Batch evaluator over label splits of a fixed pooled sample.

    The pooled sample must be in time order with events first at ties; the
    pairwise matrix is built once and reused for every split. Rows whose split
    is degenerate evaluate to -inf.
    """

    def __init__(self, kind: StatisticKind, times: np.ndarray, events: np.ndarray):
        self.kind = kind
        self.events = np.asarray(events)
        self.h = kind.spec.matrix(times, times)
        self.h_diag = np.diag(self.h).copy()

    def _weights(self, membership: np.ndarray) -> np.ndarray:
        if self.kind.censoring_aware:
            return km_weights_batch(self.events, membership)
        size = membership.sum(axis=1, keepdims=True)
        return np.where(membership, 1.0 / np.maximum(size, 1), 0.0)

    def __call__(self, labels: np.ndarray) -> np.ndarray:
        labels = np.atleast_2d(labels)
        w0 = self._weights(labels == 0)
        w1 = self._weights(labels == 1)

        hw0 = w0 @ self.h
        between = np.einsum('bi,bi->b', hw0, w1)
        within0 = np.einsum('bi,bi->b', hw0, w0)
        within1 = np.einsum('bi,bi->b', w1 @ self.h, w1)
        mass0 = w0.sum(axis=1)
        mass1 = w1.sum(axis=1)

        with np.errstate(divide='ignore', invalid='ignore'):
            if self.kind.form is StatisticForm.U_NORMALIZED:
                sq0 = w0 * w0
                sq1 = w1 * w1
                den0 = mass0 * mass0 - sq0.sum(axis=1)
                den1 = mass1 * mass1 - sq1.sum(axis=1)
                within0 = (within0 - sq0 @ self.h_diag) / den0
                within1 = (within1 - sq1 @ self.h_diag) / den1
                between = between / (mass0 * mass1)
                # a weighted within-group mean needs two positive weights
                ok = (np.count_nonzero(w0, axis=1) >= 2) & (np.count_nonzero(w1, axis=1) >= 2)
            else:
                if self.kind.form is StatisticForm.V_NORMALIZED:
                    within0 = within0 / (mass0 * mass0)
                    within1 = within1 / (mass1 * mass1)
                    between = between / (mass0 * mass1)
                ok = (mass0 > 0) & (mass1 > 0)

            values = self.kind.combine(between, within0, within1)
        return np.where(ok, values, -np.inf)
