import logging
import threading
from typing import Callable, Optional

import numpy as np

from core.errors import DegenerateStatisticError
from core.methods import parse_method
from core.permutation import PermutationPlan, run_permutation_test
from core.simulator import ScenarioConfig, StudyResult, derive_seed, generate_dataset, resolve_censoring
from services.pool import map_ordered

# Get module logger
logger = logging.getLogger(__name__)


class StudyWorker:
    """
    Runs one simulation study: every replication draws a fresh dataset and
    tests it with every method of the roster. Replications are spread over a
    thread pool; each one derives its own seeds, so results do not depend on
    scheduling or worker count.
    """

    def __init__(self, config: ScenarioConfig, max_workers: Optional[int] = None,
                 progress: Optional[Callable[[int, int], None]] = None):
        self.config = config
        self.max_workers = max_workers
        self.progress = progress
        self.methods = [parse_method(m) for m in config.methods]
        self.censoring = resolve_censoring(config)
        self._done = 0
        self._lock = threading.Lock()

    def _replicate(self, replication: int):
        cfg = self.config
        rng = np.random.default_rng(derive_seed(cfg.seed, replication))
        data = generate_dataset(cfg, rng, censoring=self.censoring)

        pvalues = np.full(len(self.methods), np.nan)
        degenerate_splits = np.zeros(len(self.methods), dtype=np.int64)
        for m, method in enumerate(self.methods):
            # Inner permutations stay serial; the pool works across replications
            plan = PermutationPlan(
                replications=cfg.permutations,
                seed=derive_seed(cfg.seed, replication, m + 1),
                max_workers=1,
            )
            try:
                result = run_permutation_test(method, data, plan)
            except DegenerateStatisticError as e:
                logger.debug(f"{cfg.name} rep {replication}: {method.descriptor} degenerate ({e})")
                continue
            pvalues[m] = result.p_value
            degenerate_splits[m] = result.n_degenerate

        with self._lock:
            self._done += 1
            done = self._done
        if self.progress is not None:
            self.progress(done, cfg.replications)
        return pvalues, degenerate_splits

    def run(self) -> StudyResult:
        cfg = self.config
        logger.info(f"Starting study '{cfg.name}': {cfg.replications} replications x "
                    f"{len(self.methods)} methods, R={cfg.permutations}")

        rows = map_ordered(self._replicate, range(cfg.replications), self.max_workers, label="replication")

        result = StudyResult(
            scenario=cfg.name,
            methods=[m.descriptor for m in self.methods],
            pvalues=np.vstack([r[0] for r in rows]),
            degenerate_splits=np.vstack([r[1] for r in rows]).sum(axis=0),
            alpha_level=cfg.alpha_level,
        )
        missing = int(np.isnan(result.pvalues).sum())
        if missing:
            logger.warning(f"Study '{cfg.name}': {missing} method/replication cells were degenerate")
        logger.info(f"Finished study '{cfg.name}'")
        return result


def run_study(config: ScenarioConfig, max_workers: Optional[int] = None,
              progress: Optional[Callable[[int, int], None]] = None) -> StudyResult:
    """Runs a ScenarioConfig and returns its StudyResult."""
    return StudyWorker(config, max_workers=max_workers, progress=progress).run()
