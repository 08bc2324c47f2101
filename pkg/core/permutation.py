import math
import logging
import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from config import DEFAULT_REPLICATIONS, DEFAULT_SEED, ENUMERATION_LIMIT, BATCH_SIZE
from core.errors import EmptySampleError, InvalidParameterError
from core.methods import Method
from core.models import TwoSampleData, TestResult, LabelVector
from services.pool import map_ordered

logger = logging.getLogger(__name__)

REL_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PermutationPlan:
    """
    replications R and a nonnegative master seed. Replication r always draws
    from default_rng([seed, r]) and batches are cut every `batch_size`
    replications, so the outcome does not depend on `max_workers`.
    """
    replications: int = DEFAULT_REPLICATIONS
    seed: int = DEFAULT_SEED
    exhaustive: bool = False
    enumeration_limit: int = ENUMERATION_LIMIT
    batch_size: int = BATCH_SIZE
    max_workers: Optional[int] = None

    def __post_init__(self):
        if int(self.replications) < 1:
            raise InvalidParameterError(f"replications must be >= 1, got {self.replications}")
        if int(self.seed) < 0:
            raise InvalidParameterError(f"seed must be nonnegative, got {self.seed}")
        if int(self.batch_size) < 1:
            raise InvalidParameterError(f"batch_size must be >= 1, got {self.batch_size}")


class _CallableMethod(Method):
    """Adapts a plain `data -> float` function."""

    def __init__(self, fn: Callable[[TwoSampleData], float]):
        super().__init__(getattr(fn, "__name__", "statistic"))
        self._fn = fn

    def compute(self, data: TwoSampleData) -> float:
        value = self._fn(data)
        return float(getattr(value, "raw", value))


def permute_labels(rng: np.random.Generator, n0: int, n1: int) -> LabelVector:
    """Uniform random split: n0 zeros and n1 ones in shuffled order."""
    if n0 < 1 or n1 < 1:
        raise InvalidParameterError(f"both group sizes must be >= 1, got ({n0}, {n1})")
    base = np.concatenate([np.zeros(n0, dtype=np.int8), np.ones(n1, dtype=np.int8)])
    return LabelVector(rng.permutation(base))


def _pooled_in_time_order(data: TwoSampleData) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    times, events, labels = data.pooled()
    order = np.lexsort((-events.astype(np.int16), times))
    return times[order], events[order], labels[order]


def _exceed_threshold(observed: float) -> float:
    return observed - REL_TOLERANCE * max(1.0, abs(observed))


def _monte_carlo(evaluator, labels: np.ndarray, plan: PermutationPlan) -> np.ndarray:
    n1 = int(np.count_nonzero(labels))
    n0 = labels.size - n1
    starts = list(range(0, plan.replications, plan.batch_size))

    def run_batch(start: int) -> np.ndarray:
        stop = min(start + plan.batch_size, plan.replications)
        batch = np.stack([permute_labels(np.random.default_rng([plan.seed, r]), n0, n1).z
                          for r in range(start, stop)])
        return evaluator(batch)

    return np.concatenate(map_ordered(run_batch, starts, plan.max_workers, label="permutation"))


def _enumerate(evaluator, n0: int, n: int, plan: PermutationPlan) -> np.ndarray:
    combos = itertools.combinations(range(n), n0)
    chunks = []
    while True:
        block = list(itertools.islice(combos, plan.batch_size))
        if not block:
            break
        labels = np.ones((len(block), n), dtype=np.int8)
        rows = np.repeat(np.arange(len(block)), n0)
        labels[rows, np.asarray(block).ravel()] = 0
        chunks.append(labels)
    return np.concatenate(map_ordered(evaluator, chunks, plan.max_workers, label="enumeration"))


def run_permutation_test(statistic_fn: Union[Method, Callable[[TwoSampleData], float]],
                         data: TwoSampleData, plan: PermutationPlan = PermutationPlan()) -> TestResult:
    """
    Permutation p-value of a two-sample statistic.

    Monte Carlo: p = (1 + #{r: theta_r >= theta_obs}) / (1 + R).
    Exhaustive (plan.exhaustive and C(n, n0) <= enumeration_limit):
    p = #{splits: theta >= theta_obs} / C(n, n0), the observed split included.
    Degenerate permuted splits count as -inf. Errors on the observed split propagate.
    """
    method = statistic_fn if isinstance(statistic_fn, Method) else _CallableMethod(statistic_fn)
    observed = float(method.compute(data))

    times, events, labels = _pooled_in_time_order(data)
    evaluator = method.bind(times, events)
    threshold = _exceed_threshold(observed)

    n_splits = math.comb(data.n, data.n0)
    exhaustive = plan.exhaustive and n_splits <= plan.enumeration_limit
    if plan.exhaustive and not exhaustive:
        logger.warning(f"C({data.n},{data.n0})={n_splits} exceeds the enumeration limit "
                       f"{plan.enumeration_limit}; using {plan.replications} random permutations")

    if exhaustive:
        values = _enumerate(evaluator, data.n0, data.n, plan)
        count = int(np.count_nonzero(values >= threshold))
        p_value = count / n_splits
        replications = n_splits
    else:
        values = _monte_carlo(evaluator, labels, plan)
        count = int(np.count_nonzero(values >= threshold))
        p_value = (1 + count) / (1 + plan.replications)
        replications = plan.replications

    n_degenerate = int(np.count_nonzero(np.isneginf(values)))
    if n_degenerate:
        logger.debug(f"{method.descriptor}: {n_degenerate}/{replications} permuted splits were degenerate")

    return TestResult(
        method=method.descriptor,
        statistic=observed,
        p_value=float(p_value),
        replications=replications,
        seed=int(plan.seed),
        n_degenerate=n_degenerate,
        exhaustive=exhaustive,
        asymptotic_p_value=method.asymptotic_pvalue(observed),
    )


def null_pvalue_summary(pvalues: Sequence[float], alpha: float = 0.05) -> Tuple[float, float, float]:
    """(mean, sample sd, proportion of p <= alpha). Missing (NaN) entries are ignored."""
    p = np.asarray(pvalues, dtype=np.float64).ravel()
    p = p[~np.isnan(p)]
    if p.size == 0:
        raise EmptySampleError("no p-values to summarise")
    sd = float(np.std(p, ddof=1)) if p.size > 1 else 0.0
    return float(np.mean(p)), sd, float(np.mean(p <= alpha))
