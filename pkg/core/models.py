from dataclasses import dataclass, field
from typing import Optional, Dict, Any, List, Tuple

import numpy as np

from core.errors import EmptySampleError


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SurvivalSample:
    """Observed times X = min(T, C) and event flags (1 = death observed, 0 = censored) for one group."""
    times: np.ndarray
    events: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'times', _frozen(self.times, np.float64))
        object.__setattr__(self, 'events', _frozen(self.events, np.int8))

    @property
    def n(self) -> int:
        return int(self.times.shape[0])

    @property
    def n_events(self) -> int:
        return int(self.events.sum())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "times": self.times.tolist(),
            "events": self.events.tolist(),
        }


@dataclass(frozen=True)
class OrderedSample:
    """A sample sorted by time, events before censorings at ties.

    original_indices[i] is the position in the input sample of the i-th ordered observation.
    """
    sorted_times: np.ndarray
    sorted_events: np.ndarray
    original_indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'sorted_times', _frozen(self.sorted_times, np.float64))
        object.__setattr__(self, 'sorted_events', _frozen(self.sorted_events, np.int8))
        object.__setattr__(self, 'original_indices', _frozen(self.original_indices, np.intp))

    @property
    def n(self) -> int:
        return int(self.sorted_times.shape[0])

    def restore(self) -> SurvivalSample:
        """Undoes the ordering and returns the input sample."""
        times = np.empty(self.n, dtype=np.float64)
        events = np.empty(self.n, dtype=np.int8)
        times[self.original_indices] = self.sorted_times
        events[self.original_indices] = self.sorted_events
        return SurvivalSample(times, events)


@dataclass(frozen=True)
class TwoSampleData:
    group0: SurvivalSample
    group1: SurvivalSample

    def __post_init__(self):
        if self.group0.n < 1 or self.group1.n < 1:
            raise EmptySampleError("both groups must contain at least one observation")

    @property
    def n0(self) -> int:
        return self.group0.n

    @property
    def n1(self) -> int:
        return self.group1.n

    @property
    def n(self) -> int:
        return self.n0 + self.n1

    def swapped(self) -> "TwoSampleData":
        return TwoSampleData(self.group1, self.group0)

    def pooled(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Pooled (times, events, labels) with group0 first."""
        times = np.concatenate([self.group0.times, self.group1.times])
        events = np.concatenate([self.group0.events, self.group1.events])
        labels = np.concatenate([np.zeros(self.n0, dtype=np.int8), np.ones(self.n1, dtype=np.int8)])
        return times, events, labels

    @classmethod
    def from_pooled(cls, times: np.ndarray, events: np.ndarray, labels: np.ndarray) -> "TwoSampleData":
        labels = np.asarray(labels)
        mask = labels == 1
        return cls(
            SurvivalSample(times[~mask], events[~mask]),
            SurvivalSample(times[mask], events[mask]),
        )


@dataclass(frozen=True)
class KMWeights:
    """Kaplan-Meier integral weights, one per ordered observation."""
    weights: np.ndarray
    total_mass: float

    def __post_init__(self):
        object.__setattr__(self, 'weights', _frozen(self.weights, np.float64))
        object.__setattr__(self, 'total_mass', float(self.total_mass))


@dataclass(frozen=True)
class StepCurve:
    """Right-continuous step function.

    values[i] is the level on [knots[i], knots[i+1]); before knots[0] the curve sits at `initial`.
    """
    knots: np.ndarray
    values: np.ndarray
    initial: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'knots', _frozen(self.knots, np.float64))
        object.__setattr__(self, 'values', _frozen(self.values, np.float64))
        object.__setattr__(self, 'initial', float(self.initial))

    def _lookup(self, t, side: str):
        t_arr = np.asarray(t, dtype=np.float64)
        levels = np.concatenate([[self.initial], self.values])
        out = levels[np.searchsorted(self.knots, t_arr, side=side)]
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        return self._lookup(t, 'right')

    def left_limit(self, t):
        """Value just before t, i.e. lim_{s -> t-} f(s)."""
        return self._lookup(t, 'left')

    @property
    def final(self) -> float:
        return float(self.values[-1]) if self.values.size else self.initial

    def to_rows(self) -> List[Tuple[float, float]]:
        """(t, value) rows starting at t = 0 with the initial level."""
        rows = [(0.0, self.initial)]
        rows.extend(zip(self.knots.tolist(), self.values.tolist()))
        return rows


@dataclass(frozen=True)
class StatisticValue:
    raw: float
    scaled: float

    def to_dict(self) -> Dict[str, float]:
        return {"raw": self.raw, "scaled": self.scaled}


@dataclass(frozen=True)
class LabelVector:
    """Group labels Z over the pooled sample: 0 for group0, 1 for group1."""
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'z', _frozen(self.z, np.int8))

    @property
    def n0(self) -> int:
        return int((self.z == 0).sum())

    @property
    def n1(self) -> int:
        return int((self.z == 1).sum())


@dataclass(frozen=True)
class TestResult:
    method: str
    statistic: float
    p_value: float
    replications: int
    seed: int
    n_degenerate: int = 0
    exhaustive: bool = False
    asymptotic_p_value: Optional[float] = None
    extra: Dict[str, float] = field(default_factory=dict)

    # Keeps pytest from collecting this dataclass as a test class
    __test__ = False

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready record: method, statistic, p_value, R, seed plus diagnostics."""
        record = {
            "method": self.method,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "R": self.replications,
            "seed": self.seed,
            "n_degenerate": self.n_degenerate,
            "exhaustive": self.exhaustive,
        }
        if self.asymptotic_p_value is not None:
            record["asymptotic_p_value"] = self.asymptotic_p_value
        record.update(self.extra)
        return record
