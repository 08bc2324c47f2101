"""
Synthetic censored two-sample data: lifetime and censoring models, censoring
rate calibration, and the built-in null / power scenarios.
"""
import math
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, optimize, stats

from config import DEFAULT_REPLICATIONS, DEFAULT_SEED, STUDY_REPLICATIONS, ALPHA_LEVEL
from core.errors import InvalidParameterError, NoConvergenceError, UnknownScenarioError
from core.methods import STUDY_ROSTER, method_family
from core.models import TwoSampleData, SurvivalSample
from core.permutation import null_pvalue_summary

logger = logging.getLogger(__name__)

PIECEWISE_HORIZON = 100.0


def derive_seed(*keys: int) -> int:
    """
    Counter-based seed splitting: a 64-bit seed determined only by the key tuple,
    e.g. (master_seed, replication) or (master_seed, replication, method_index).
    """
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise InvalidParameterError(f"{name} must be positive and finite, got {value}")
    return value


# --- Lifetime models ---

class LifetimeModel:
    """Distribution of the true lifetime T. Infinite draws mean a cured subject."""

    kind = ""

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def cumulative_hazard(self, t):
        raise NotImplementedError

    def survival(self, t):
        return np.exp(-self.cumulative_hazard(t))

    def laplace_transform(self, c: float) -> float:
        """E[exp(-c T); T < inf]"""
        raise NotImplementedError

    def censoring_probability(self, c: float) -> float:
        """P(C < T) for C ~ Exponential(rate c)."""
        return 1.0 - self.laplace_transform(c)

    def to_dict(self) -> Dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(LifetimeModel):
    rate: float = 1.0
    kind = "exponential"

    def __post_init__(self):
        object.__setattr__(self, 'rate', _positive("rate", self.rate))

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    def cumulative_hazard(self, t):
        return self.rate * np.asarray(t, dtype=np.float64)

    def laplace_transform(self, c):
        return self.rate / (self.rate + c)

    def to_dict(self):
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class Gamma(LifetimeModel):
    shape: float = 1.0
    rate: float = 1.0
    kind = "gamma"

    def __post_init__(self):
        object.__setattr__(self, 'shape', _positive("shape", self.shape))
        object.__setattr__(self, 'rate', _positive("rate", self.rate))

    def sample(self, rng, size):
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    def cumulative_hazard(self, t):
        return -stats.gamma.logsf(t, self.shape, scale=1.0 / self.rate)

    def laplace_transform(self, c):
        return (self.rate / (self.rate + c)) ** self.shape

    def to_dict(self):
        return {"kind": self.kind, "shape": self.shape, "rate": self.rate}


@dataclass(frozen=True)
class LogNormal(LifetimeModel):
    """log T ~ Normal(mu, sigma)."""
    mu: float = 0.0
    sigma: float = 1.0
    kind = "lognormal"

    def __post_init__(self):
        object.__setattr__(self, 'mu', float(self.mu))
        object.__setattr__(self, 'sigma', _positive("sigma", self.sigma))

    @property
    def _dist(self):
        return stats.lognorm(s=self.sigma, scale=math.exp(self.mu))

    def sample(self, rng, size):
        return rng.lognormal(self.mu, self.sigma, size)

    def cumulative_hazard(self, t):
        return -self._dist.logsf(t)

    def laplace_transform(self, c):
        dist = self._dist
        median = math.exp(self.mu)
        # split at the median so quad sees the bulk of the density
        left, _ = integrate.quad(lambda t: math.exp(-c * t) * dist.pdf(t), 0.0, median, limit=200)
        right, _ = integrate.quad(lambda t: math.exp(-c * t) * dist.pdf(t), median, np.inf, limit=200)
        return left + right

    def to_dict(self):
        return {"kind": self.kind, "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class HazardSegment:
    """lambda(t) = a + b (t - start) on [start, end)."""
    start: float
    end: float
    a: float
    b: float = 0.0

    @property
    def length(self) -> float:
        return self.end - self.start

    @property
    def mass(self) -> float:
        return self.a * self.length + 0.5 * self.b * self.length ** 2


@dataclass(frozen=True)
class PiecewiseHazard(LifetimeModel):
    """
    Hazard that is affine on contiguous segments covering [0, horizon] and zero
    afterwards. The cumulative hazard is piecewise quadratic; subjects whose
    Exp(1) draw exceeds Lambda(horizon) never fail.
    """
    segments: Tuple[HazardSegment, ...]
    kind = "piecewise"

    def __post_init__(self):
        segs = tuple(s if isinstance(s, HazardSegment) else HazardSegment(*s) for s in self.segments)
        if not segs:
            raise InvalidParameterError("piecewise hazard needs at least one segment")
        if segs[0].start != 0.0:
            raise InvalidParameterError(f"first segment must start at 0, got {segs[0].start}")
        for prev, cur in zip(segs, segs[1:]):
            if cur.start != prev.end:
                raise InvalidParameterError(f"segments not contiguous at {prev.end} / {cur.start}")
        for s in segs:
            if not s.end > s.start:
                raise InvalidParameterError(f"segment [{s.start}, {s.end}) is empty")
            if s.a < 0 or s.a + s.b * s.length < -1e-12:
                raise InvalidParameterError(f"hazard is negative on [{s.start}, {s.end})")
        object.__setattr__(self, 'segments', segs)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "PiecewiseHazard":
        return cls(tuple(HazardSegment(*map(float, r)) for r in rows))

    @property
    def horizon(self) -> float:
        return self.segments[-1].end

    @property
    def _starts(self) -> np.ndarray:
        return np.array([s.start for s in self.segments])

    @property
    def _cum_at_starts(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([s.mass for s in self.segments])])

    def hazard(self, t):
        t = np.asarray(t, dtype=np.float64)
        idx = np.clip(np.searchsorted(self._starts, t, side='right') - 1, 0, len(self.segments) - 1)
        a = np.array([s.a for s in self.segments])[idx]
        b = np.array([s.b for s in self.segments])[idx]
        out = a + b * (t - self._starts[idx])
        return np.where((t >= 0) & (t < self.horizon), out, 0.0)

    def cumulative_hazard(self, t):
        t = np.minimum(np.asarray(t, dtype=np.float64), self.horizon)
        idx = np.clip(np.searchsorted(self._starts, t, side='right') - 1, 0, len(self.segments) - 1)
        a = np.array([s.a for s in self.segments])[idx]
        b = np.array([s.b for s in self.segments])[idx]
        u = t - self._starts[idx]
        return self._cum_at_starts[idx] + a * u + 0.5 * b * u * u

    def cure_fraction(self) -> float:
        return float(math.exp(-self._cum_at_starts[-1]))

    def sample(self, rng, size):
        return self.invert(rng.exponential(1.0, size))

    def invert(self, e: np.ndarray) -> np.ndarray:
        """Lambda^{-1}(e); inf where e >= Lambda(horizon)."""
        e = np.asarray(e, dtype=np.float64)
        cum = self._cum_at_starts
        idx = np.clip(np.searchsorted(cum[:-1], e, side='right') - 1, 0, len(self.segments) - 1)
        a = np.array([s.a for s in self.segments])[idx]
        b = np.array([s.b for s in self.segments])[idx]
        r = e - cum[idx]
        # a u + b u^2 / 2 = r, stable root
        denom = a + np.sqrt(np.maximum(0.0, a * a + 2.0 * b * r))
        with np.errstate(divide='ignore', invalid='ignore'):
            u = np.where(denom > 0, 2.0 * r / denom, 0.0)
        out = self._starts[idx] + u
        return np.where(e >= cum[-1], np.inf, out)

    def laplace_transform(self, c):
        breaks = [s.start for s in self.segments] + [self.horizon]
        total = 0.0
        for lo, hi in zip(breaks, breaks[1:]):
            part, _ = integrate.quad(
                lambda t: math.exp(-c * t) * float(self.hazard(t)) * math.exp(-float(self.cumulative_hazard(t))),
                lo, hi, limit=200)
            total += part
        return total

    def to_dict(self):
        return {"kind": self.kind, "segments": [[s.start, s.end, s.a, s.b] for s in self.segments]}


def constant_then_zero(rate: float) -> PiecewiseHazard:
    return PiecewiseHazard((HazardSegment(0.0, PIECEWISE_HORIZON, rate, 0.0),))


# --- Censoring models ---

class CensoringModel:
    kind = ""

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> Dict:
        raise NotImplementedError


@dataclass(frozen=True)
class UniformCensoring(CensoringModel):
    """C ~ Uniform(0, upper)."""
    upper: float
    kind = "uniform"

    def __post_init__(self):
        object.__setattr__(self, 'upper', _positive("upper", self.upper))

    def sample(self, rng, size):
        return rng.uniform(0.0, self.upper, size)

    def to_dict(self):
        return {"kind": self.kind, "upper": self.upper}


@dataclass(frozen=True)
class ExponentialCensoring(CensoringModel):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        object.__setattr__(self, 'rate', _positive("rate", self.rate))

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    def to_dict(self):
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class TargetRateCensoring(CensoringModel):
    """Exponential censoring whose rate is calibrated so that P(C < T) = target."""
    target: float
    kind = "target"

    def __post_init__(self):
        target = float(self.target)
        if not 0.0 < target < 1.0:
            raise InvalidParameterError(f"target censoring rate must lie in (0, 1), got {target}")
        object.__setattr__(self, 'target', target)

    def sample(self, rng, size):
        raise InvalidParameterError("target-rate censoring must be resolved against a lifetime model first")

    def resolve(self, lifetime: LifetimeModel) -> ExponentialCensoring:
        return calibrate_censoring_rate(lifetime, self.target)

    def to_dict(self):
        return {"kind": self.kind, "target": self.target}


def censor(lifetimes, censor_times) -> Tuple[np.ndarray, np.ndarray]:
    """X = min(T, C), delta = 1{T <= C}; infinite T is always censored."""
    t = np.asarray(lifetimes, dtype=np.float64)
    c = np.asarray(censor_times, dtype=np.float64)
    events = (t <= c).astype(np.int8)
    return np.where(events == 1, t, c), events


def apply_censoring(lifetime, censoring_model: CensoringModel, rng: np.random.Generator):
    """Draws censoring times for the given lifetime(s) and returns (observed_time, event_flag)."""
    t = np.asarray(lifetime, dtype=np.float64)
    c = censoring_model.sample(rng, t.size).reshape(t.shape)
    observed, events = censor(t, c)
    if observed.ndim == 0:
        return float(observed), int(events)
    return observed, events


def calibrate_censoring_rate(lifetime_model: LifetimeModel, target_rate: float) -> ExponentialCensoring:
    """Exponential censoring rate c with P(C < T) = target_rate."""
    if not 0.0 < target_rate < 1.0:
        raise InvalidParameterError(f"target censoring rate must lie in (0, 1), got {target_rate}")

    def gap(c: float) -> float:
        return lifetime_model.censoring_probability(c) - target_rate

    lo, hi = 1e-10, 1.0
    for _ in range(80):
        if gap(hi) > 0:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise NoConvergenceError(f"could not bracket a censoring rate for target {target_rate}")

    try:
        rate = optimize.brentq(gap, lo, hi, xtol=1e-14, rtol=1e-12, maxiter=500)
    except (ValueError, RuntimeError) as e:
        raise NoConvergenceError(f"censoring calibration failed: {e}") from e

    logger.info(f"Calibrated exponential censoring rate {rate:.6g} for {lifetime_model.to_dict()} "
                f"at target {target_rate:.0%}")
    return ExponentialCensoring(rate)


def sample_lifetime(model: LifetimeModel, rng: np.random.Generator, size: Optional[int] = None):
    """One draw (size=None) or an array of draws; cured subjects are inf."""
    draws = model.sample(rng, 1 if size is None else size)
    return float(draws[0]) if size is None else draws


# --- Scenarios ---

@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    lifetime0: LifetimeModel
    lifetime1: LifetimeModel
    censoring0: CensoringModel
    censoring1: CensoringModel
    n0: int
    n1: int
    methods: Tuple[str, ...] = STUDY_ROSTER
    replications: int = STUDY_REPLICATIONS
    permutations: int = DEFAULT_REPLICATIONS
    seed: int = DEFAULT_SEED
    alpha_level: float = ALPHA_LEVEL
    group: str = ""
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, 'methods', tuple(self.methods))
        if self.n0 < 2 or self.n1 < 2:
            raise InvalidParameterError(f"{self.name}: group sizes must be >= 2, got ({self.n0}, {self.n1})")
        if self.replications < 1 or self.permutations < 1:
            raise InvalidParameterError(f"{self.name}: replications and permutations must be >= 1")
        if not 0.0 < self.alpha_level < 1.0:
            raise InvalidParameterError(f"{self.name}: alpha_level must lie in (0, 1)")
        if self.seed < 0:
            raise InvalidParameterError(f"{self.name}: seed must be nonnegative")
        if not self.methods:
            raise InvalidParameterError(f"{self.name}: empty method roster")

    def with_overrides(self, **changes) -> "ScenarioConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def resolve_censoring(config: ScenarioConfig) -> Tuple[CensoringModel, CensoringModel]:
    """Replaces target-rate censoring with its calibrated exponential model."""
    out = []
    for lifetime, model in ((config.lifetime0, config.censoring0), (config.lifetime1, config.censoring1)):
        out.append(model.resolve(lifetime) if isinstance(model, TargetRateCensoring) else model)
    return out[0], out[1]


def generate_dataset(config: ScenarioConfig, rng: np.random.Generator,
                     censoring: Optional[Tuple[CensoringModel, CensoringModel]] = None) -> TwoSampleData:
    c0, c1 = censoring if censoring is not None else resolve_censoring(config)
    x0, d0 = apply_censoring(sample_lifetime(config.lifetime0, rng, config.n0), c0, rng)
    x1, d1 = apply_censoring(sample_lifetime(config.lifetime1, rng, config.n1), c1, rng)
    return TwoSampleData(SurvivalSample(x0, d0), SurvivalSample(x1, d1))


@dataclass
class StudyResult:
    """p-values per replication (rows) and method (columns); NaN marks a degenerate cell."""
    scenario: str
    methods: List[str]
    pvalues: np.ndarray
    degenerate_splits: np.ndarray = field(default=None)
    alpha_level: float = ALPHA_LEVEL

    def __post_init__(self):
        self.pvalues = np.atleast_2d(np.asarray(self.pvalues, dtype=np.float64))
        if self.degenerate_splits is None:
            self.degenerate_splits = np.zeros(len(self.methods), dtype=np.int64)

    @property
    def replications(self) -> int:
        return int(self.pvalues.shape[0])

    def summary(self) -> List[Dict]:
        rows = []
        for m, method in enumerate(self.methods):
            column = self.pvalues[:, m]
            n_missing = int(np.isnan(column).sum())
            if n_missing == column.size:
                mean_p, sd_p, rate = (float('nan'),) * 3
            else:
                mean_p, sd_p, rate = null_pvalue_summary(column, self.alpha_level)
            rows.append({
                "method": method,
                "rejection_rate": rate,
                "mean_p": mean_p,
                "sd_p": sd_p,
                "n_degenerate": n_missing,
            })
        return rows

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.summary(), columns=["method", "rejection_rate", "mean_p", "sd_p", "n_degenerate"])

    def pvalue_frame(self) -> pd.DataFrame:
        reps, methods = np.meshgrid(np.arange(self.replications), np.arange(len(self.methods)), indexing='ij')
        return pd.DataFrame({
            "scenario": self.scenario,
            "replication": reps.ravel(),
            "method": np.asarray(self.methods, dtype=object)[methods.ravel()],
            "p_value": self.pvalues.ravel(),
        })

    def rejection_rates(self) -> Dict[str, float]:
        return {row["method"]: row["rejection_rate"] for row in self.summary()}


def family_power(result: StudyResult) -> Dict[str, float]:
    """Mean rejection rate per method family (energy, kernel, logrank, schumacher) present in the roster."""
    by_family: Dict[str, List[float]] = {}
    for method, rate in result.rejection_rates().items():
        if not np.isnan(rate):
            by_family.setdefault(method_family(method), []).append(rate)
    return {family: float(np.mean(rates)) for family, rates in by_family.items()}


def power_curve(results: Dict[float, StudyResult]) -> pd.DataFrame:
    """Long table (theta, method, power) from studies keyed by effect size."""
    rows = []
    for theta in sorted(results):
        for method, rate in results[theta].rejection_rates().items():
            rows.append({"theta": theta, "method": method, "power": rate})
    return pd.DataFrame(rows, columns=["theta", "method", "power"])


# --- Built-in scenarios ---

NULL_MODELS = (
    ("exp1", Exponential(1.0)),
    ("exp1.5", Exponential(1.5)),
    ("gamma1", Gamma(1.0, 1.0)),
    ("gamma1.5", Gamma(1.5, 1.5)),
    ("lnorm0.5", LogNormal(0.0, 0.5)),
    ("lnorm0.25", LogNormal(0.0, 0.25)),
)
NULL_SIZES = (20, 50)
NULL_CENSORING = (0.1, 0.3)

PH_THETAS = (1.0, 1.1, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0)
POWER_SIZES = (20, 50, 100)
DEFAULT_POWER_N = 100

CURE_HAZARD = PiecewiseHazard.from_rows([
    (0.0, 5.0, 0.5, -0.1),
    (5.0, PIECEWISE_HORIZON, 0.0, 0.0),
])
MULTIMODAL_HAZARD = PiecewiseHazard.from_rows([
    (0.0, 1.0, 0.2, 0.1),
    (1.0, 2.0, 0.5, 0.0),
    (2.0, 3.0, 0.2, 0.1),
    (3.0, 4.0, 0.5, 0.0),
    (4.0, 5.0, 0.2, 0.1),
    (5.0, PIECEWISE_HORIZON, 0.5, 0.0),
])
DELAYED_HAZARD = PiecewiseHazard.from_rows([
    (0.0, 5.0, 0.6, -0.1),
    (5.0, PIECEWISE_HORIZON, 0.1, 0.0),
])

# family -> (control hazard, treated hazard, censoring, description)
PIECEWISE_FAMILIES = {
    "cure": (constant_then_zero(0.5), CURE_HAZARD, UniformCensoring(10.0),
             "cure plateau: treated hazard falls linearly to zero at t=5"),
    "multimodal": (constant_then_zero(0.45), MULTIMODAL_HAZARD, UniformCensoring(10.0),
                   "oscillating treated hazard around a constant control hazard"),
    "delayed": (constant_then_zero(0.4), DELAYED_HAZARD, UniformCensoring(15.0),
                "delayed effect: hazards separate only after the first years"),
}

PH_CENSORING = UniformCensoring(10.0)


def _null_scenarios() -> List[ScenarioConfig]:
    out = []
    for label, model in NULL_MODELS:
        for n in NULL_SIZES:
            for rate in NULL_CENSORING:
                out.append(ScenarioConfig(
                    name=f"null-{label}-n{n}-c{round(rate * 100)}",
                    lifetime0=model, lifetime1=model,
                    censoring0=TargetRateCensoring(rate), censoring1=TargetRateCensoring(rate),
                    n0=n, n1=n, group="null",
                    description=f"null calibration, {label} both groups, {rate:.0%} censoring",
                ))
    return out


def _ph_scenarios() -> List[ScenarioConfig]:
    out = []
    for n in POWER_SIZES:
        for theta in PH_THETAS:
            out.append(ScenarioConfig(
                name=f"ph-theta{theta:g}-n{n}",
                lifetime0=Exponential(1.0), lifetime1=Exponential(theta),
                censoring0=PH_CENSORING, censoring1=PH_CENSORING,
                n0=n, n1=n, group="ph-grid",
                description=f"proportional hazards Exp(1) vs Exp({theta:g})",
            ))
    return out


def _piecewise_scenario(family: str, n: int) -> ScenarioConfig:
    control, treated, censoring, description = PIECEWISE_FAMILIES[family]
    return ScenarioConfig(
        name=f"{family}-n{n}",
        lifetime0=control, lifetime1=treated,
        censoring0=censoring, censoring1=censoring,
        n0=n, n1=n, group=family, description=description,
    )


def builtin_scenarios() -> Dict[str, ScenarioConfig]:
    """Every published scenario keyed by name, in a stable order."""
    configs = _null_scenarios() + _ph_scenarios()
    for family in PIECEWISE_FAMILIES:
        configs.extend(_piecewise_scenario(family, n) for n in POWER_SIZES)
    return {c.name: c for c in configs}


def scenario_group(group: str) -> List[ScenarioConfig]:
    return [c for c in builtin_scenarios().values() if c.group == group]


def get_scenario(name: str, n: Optional[int] = None) -> ScenarioConfig:
    """
    Looks up a built-in by exact name, or a piecewise family name ('cure',
    'multimodal', 'delayed') sized by n (default 100).
    """
    if name in PIECEWISE_FAMILIES:
        return _piecewise_scenario(name, n or DEFAULT_POWER_N)
    scenarios = builtin_scenarios()
    if name not in scenarios:
        raise UnknownScenarioError(f"unknown scenario '{name}' (see `scenarios --list`)")
    config = scenarios[name]
    if n is not None and (n != config.n0 or n != config.n1):
        config = config.with_overrides(n0=n, n1=n, name=f"{name}@n{n}")
    return config


def lifetime_curves(config: ScenarioConfig, grid: np.ndarray) -> pd.DataFrame:
    """True survival S(t) of both groups on a grid (group,t,survival rows)."""
    frames = []
    for g, model in enumerate((config.lifetime0, config.lifetime1)):
        frames.append(pd.DataFrame({"group": g, "t": grid, "survival": model.survival(grid)}))
    return pd.concat(frames, ignore_index=True)


# --- (de)serialization helpers for models ---

_LIFETIME_KINDS = {
    "exponential": lambda d: Exponential(d["rate"]),
    "gamma": lambda d: Gamma(d["shape"], d["rate"]),
    "lognormal": lambda d: LogNormal(d["mu"], d["sigma"]),
    "piecewise": lambda d: PiecewiseHazard.from_rows(d["segments"]),
}

_CENSORING_KINDS = {
    "uniform": lambda d: UniformCensoring(d["upper"]),
    "exponential": lambda d: ExponentialCensoring(d["rate"]),
    "target": lambda d: TargetRateCensoring(d["target"]),
}


def lifetime_from_dict(data: Dict) -> LifetimeModel:
    return _LIFETIME_KINDS[data["kind"]](data)


def censoring_from_dict(data: Dict) -> CensoringModel:
    return _CENSORING_KINDS[data["kind"]](data)
