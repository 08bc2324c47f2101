"""
Method registry: turns descriptors such as `energy:alpha=1` or
`fleming-harrington:rho=1,gamma=1` into test methods that can compute the
observed statistic and evaluate batches of permuted label splits.
"""
import logging
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from core.classical import (
    WeightKind, WeightRule, PooledLogRank, build_risk_table, weighted_logrank,
    logrank_asymptotic_pvalue, ks_censored, cvm_censored,
)
from core.errors import DegenerateStatisticError, InvalidParameterError, UnknownMethodError
from core.kernels import PAIRWISE_NAMES, build_pairwise_spec
from core.models import TwoSampleData
from core.statistics import StatisticForm, StatisticKind, PooledStatistic, compute_statistic

logger = logging.getLogger(__name__)

BatchEvaluator = Callable[[np.ndarray], np.ndarray]

FAMILIES = ("energy", "kernel", "logrank", "schumacher")

# Roster used by every built-in study
STUDY_ROSTER = (
    "energy:alpha=0.4",
    "energy:alpha=0.8",
    "energy:alpha=1",
    "energy:alpha=1.2",
    "energy:alpha=1.6",
    "gaussian:sigma=1",
    "laplacian:sigma=1",
    "ratquad:c=1,beta=1",
    "ratquad:c=2,beta=2",
    "logrank",
    "gehan",
    "tarone-ware",
    "peto-peto",
    "fleming-harrington:rho=1,gamma=1",
)

EXTRA_METHODS = (
    "matern:sigma=1,nu=1.5",
    "ks-censored",
    "ks-censored:form=bridge",
    "cvm-censored",
    "cvm-censored:form=bridge",
)


def split_descriptor(text: str) -> Tuple[str, Dict[str, str]]:
    """'name:k=v,k=v' -> ('name', {'k': 'v', ...})"""
    if not isinstance(text, str) or not text.strip():
        raise UnknownMethodError("empty method descriptor")
    name, _, rest = text.strip().partition(":")
    params: Dict[str, str] = {}
    for chunk in filter(None, (c.strip() for c in rest.split(","))):
        key, sep, value = chunk.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise InvalidParameterError(f"malformed parameter '{chunk}' in '{text}'")
        params[key.strip().lower()] = value.strip()
    return name.strip().lower(), params


class Method:
    """A two-sample test statistic, larger values meaning stronger evidence against equality."""

    family = ""

    def __init__(self, descriptor: str):
        self.descriptor = descriptor

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.descriptor}>"

    def compute(self, data: TwoSampleData) -> float:
        raise NotImplementedError

    def bind(self, times: np.ndarray, events: np.ndarray) -> BatchEvaluator:
        """
        Evaluator over label splits of a pooled sample given in time order with
        events first at ties. Degenerate splits evaluate to -inf.
        """
        return RowwiseEvaluator(self, times, events)

    def asymptotic_pvalue(self, statistic: float) -> Optional[float]:
        return None


class RowwiseEvaluator:
    """Recomputes the statistic for every split; used where no batched form exists."""

    def __init__(self, method: Method, times: np.ndarray, events: np.ndarray):
        self.method = method
        self.times = np.asarray(times, dtype=np.float64)
        self.events = np.asarray(events)

    def __call__(self, labels: np.ndarray) -> np.ndarray:
        labels = np.atleast_2d(labels)
        out = np.empty(labels.shape[0], dtype=np.float64)
        for i, row in enumerate(labels):
            try:
                out[i] = self.method.compute(TwoSampleData.from_pooled(self.times, self.events, row))
            except DegenerateStatisticError:
                out[i] = -np.inf
        return out


class PairwiseMethod(Method):
    """Energy distance or kernel MMD with KM (or uniform) weights."""

    def __init__(self, descriptor: str, kind: StatisticKind):
        super().__init__(descriptor)
        self.kind = kind
        self.family = "energy" if kind.is_energy else "kernel"

    def compute(self, data: TwoSampleData) -> float:
        return compute_statistic(self.kind, data).raw

    def bind(self, times, events) -> BatchEvaluator:
        return PooledStatistic(self.kind, times, events)


class LogRankMethod(Method):
    family = "logrank"

    def __init__(self, descriptor: str, rule: WeightRule):
        super().__init__(descriptor)
        self.rule = rule

    def compute(self, data: TwoSampleData) -> float:
        return weighted_logrank(build_risk_table(data), self.rule)

    def bind(self, times, events) -> BatchEvaluator:
        return PooledLogRank(self.rule, times, events)

    def asymptotic_pvalue(self, statistic: float) -> Optional[float]:
        return logrank_asymptotic_pvalue(statistic)


class SchumacherMethod(Method):
    """Censored KS or CvM; `bridge` selects the psi0-weighted variant."""
    family = "schumacher"

    def __init__(self, descriptor: str, test: str, bridge: bool):
        super().__init__(descriptor)
        self._fn = ks_censored if test == "ks" else cvm_censored
        self.bridge = bridge

    def compute(self, data: TwoSampleData) -> float:
        q, q0 = self._fn(data)
        return q0 if self.bridge else q


_FORMS = {"u": StatisticForm.U_NORMALIZED, "v": StatisticForm.V, "vn": StatisticForm.V_NORMALIZED}
_WEIGHTS = {"km": True, "uniform": False}

_LOGRANK_NAMES = {kind.value: kind for kind in WeightKind}


def _pop_choice(params: Dict[str, str], key: str, choices: Dict, default: str, descriptor: str) -> str:
    value = params.pop(key, default).lower()
    if value not in choices:
        raise InvalidParameterError(f"{descriptor}: {key} must be one of {', '.join(choices)}, got '{value}'")
    return value


def _parse_pairwise(name: str, params: Dict[str, str], text: str) -> Method:
    form = _pop_choice(params, "form", _FORMS, "u", text)
    weights = _pop_choice(params, "weights", _WEIGHTS, "km", text)
    spec = build_pairwise_spec(name, params)
    kind = StatisticKind(spec, _FORMS[form], _WEIGHTS[weights])

    descriptor = spec.descriptor()
    if form != "u":
        descriptor += f",form={form}"
    if weights != "km":
        descriptor += f",weights={weights}"
    return PairwiseMethod(descriptor, kind)


def _parse_logrank(name: str, params: Dict[str, str], text: str) -> Method:
    kind = _LOGRANK_NAMES[name]
    if kind is not WeightKind.FLEMING_HARRINGTON:
        if params:
            raise InvalidParameterError(f"{name} takes no parameters")
        return LogRankMethod(name, WeightRule(kind))

    unknown = set(params) - {"rho", "gamma"}
    if unknown:
        raise InvalidParameterError(f"{name} does not take parameter(s): {', '.join(sorted(unknown))}")
    try:
        rule = WeightRule(kind, float(params.get("rho", 1)), float(params.get("gamma", 1)))
    except ValueError as e:
        raise InvalidParameterError(f"{text}: {e}") from e
    return LogRankMethod(rule.descriptor(), rule)


def _parse_schumacher(name: str, params: Dict[str, str], text: str) -> Method:
    form = _pop_choice(params, "form", {"brownian": 0, "bridge": 1}, "brownian", text)
    if params:
        raise InvalidParameterError(f"{name} does not take parameter(s): {', '.join(sorted(params))}")
    descriptor = name if form == "brownian" else f"{name}:form=bridge"
    return SchumacherMethod(descriptor, name.split("-")[0], form == "bridge")


def parse_method(text: str) -> Method:
    """Parses a method descriptor. Raises UnknownMethodError or InvalidParameterError."""
    name, params = split_descriptor(text)
    if name in PAIRWISE_NAMES:
        return _parse_pairwise(name, params, text)
    if name in _LOGRANK_NAMES:
        return _parse_logrank(name, params, text)
    if name in ("ks-censored", "cvm-censored"):
        return _parse_schumacher(name, params, text)
    raise UnknownMethodError(f"unknown method '{name}' (see `scenarios --list-methods`)")


def list_methods() -> List[str]:
    return list(STUDY_ROSTER) + list(EXTRA_METHODS)


def method_family(descriptor: str) -> str:
    return parse_method(descriptor).family

