"""Kaplan-Meier integral weights, product-limit survival and Nelson-Aalen hazard."""
import logging
from typing import Tuple

import numpy as np

from core.models import OrderedSample, KMWeights, StepCurve

logger = logging.getLogger(__name__)


def km_weights(ordered: OrderedSample) -> KMWeights:
    """
    Kaplan-Meier integral weights of an ordered sample.

    W_i = d_i / (n - i + 1) * prod_{j < i} ((n - j) / (n - j + 1)) ** d_j

    Censored observations get weight 0; without censoring every weight is 1/n.
    Tied observations are handled sequentially in the given order.
    """
    n = ordered.n
    d = ordered.sorted_events.astype(np.float64)
    remaining = n - np.arange(n, dtype=np.float64)  # n - i + 1 for i = 1..n

    factor = np.where(d == 1.0, (remaining - 1.0) / remaining, 1.0)
    survivor = np.ones(n, dtype=np.float64)
    if n > 1:
        survivor[1:] = np.cumprod(factor[:-1])

    weights = d / remaining * survivor
    return KMWeights(weights, float(np.sum(weights)))


def km_weights_batch(events: np.ndarray, membership: np.ndarray) -> np.ndarray:
    """
    KM weights for many groups at once.

    `events` are the pooled event flags in time order (events first at ties) and
    `membership` is a (B, n) boolean matrix selecting one group per row. The
    group's ordered sample is the pooled order restricted to its members, so the
    result equals km_weights on that subsequence, scattered back into pooled
    positions (zeros elsewhere).
    """
    mask = np.asarray(membership, dtype=bool)
    is_event = mask & (np.asarray(events) == 1)[None, :]

    size = mask.sum(axis=1, keepdims=True).astype(np.float64)
    rank = np.cumsum(mask, axis=1, dtype=np.float64)
    remaining = size - rank + 1.0
    with np.errstate(divide='ignore', invalid='ignore'):
        factor = np.where(is_event, (remaining - 1.0) / remaining, 1.0)
        survivor = np.ones_like(factor)
        survivor[:, 1:] = np.cumprod(factor[:, :-1], axis=1)
        return np.where(is_event, survivor / remaining, 0.0)


def risk_table(sorted_times: np.ndarray, sorted_events: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct event times with their death counts d and risk-set sizes Y."""
    event_times = sorted_times[sorted_events == 1]
    if event_times.size == 0:
        empty = np.empty(0, dtype=np.float64)
        return empty, empty, empty
    tau, deaths = np.unique(event_times, return_counts=True)
    at_risk = sorted_times.size - np.searchsorted(sorted_times, tau, side='left')
    return tau, deaths.astype(np.float64), at_risk.astype(np.float64)


def km_survival(ordered: OrderedSample) -> StepCurve:
    """Product-limit curve S(t) = prod over event times tau <= t of (1 - d/Y)."""
    tau, deaths, at_risk = risk_table(ordered.sorted_times, ordered.sorted_events)
    values = np.cumprod(1.0 - deaths / at_risk) if tau.size else tau
    return StepCurve(tau, values, initial=1.0)


def nelson_aalen(ordered: OrderedSample) -> StepCurve:
    """Cumulative hazard Lambda(t) = sum over event times tau <= t of d/Y."""
    tau, deaths, at_risk = risk_table(ordered.sorted_times, ordered.sorted_events)
    values = np.cumsum(deaths / at_risk) if tau.size else tau
    return StepCurve(tau, values, initial=0.0)
