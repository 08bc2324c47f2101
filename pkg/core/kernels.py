import math
import logging
from dataclasses import dataclass
from typing import Dict, Union

import numpy as np
from scipy import special

from core.errors import InvalidParameterError

logger = logging.getLogger(__name__)


def _require_positive(name: str, value: float) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value) or value <= 0:
        raise InvalidParameterError(f"{name} must be positive and finite, got {value}")
    return value


class KernelSpec:
    """Univariate kernel that depends on |x - y| only."""

    name = "kernel"

    def from_distance(self, dist: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return self.from_distance(np.abs(x[:, None] - y[None, :]))

    def descriptor(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianKernel(KernelSpec):
    sigma: float = 1.0
    name = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, 'sigma', _require_positive("sigma", self.sigma))

    def from_distance(self, dist):
        return np.exp(-self.sigma * np.square(dist))

    def descriptor(self) -> str:
        return f"gaussian:sigma={self.sigma:g}"


@dataclass(frozen=True)
class LaplacianKernel(KernelSpec):
    sigma: float = 1.0
    name = "laplacian"

    def __post_init__(self):
        object.__setattr__(self, 'sigma', _require_positive("sigma", self.sigma))

    def from_distance(self, dist):
        return np.exp(-self.sigma * np.asarray(dist))

    def descriptor(self) -> str:
        return f"laplacian:sigma={self.sigma:g}"


@dataclass(frozen=True)
class RationalQuadraticKernel(KernelSpec):
    """(|x - y| + c) ** -beta"""
    c: float = 1.0
    beta: float = 1.0
    name = "ratquad"

    def __post_init__(self):
        object.__setattr__(self, 'c', _require_positive("c", self.c))
        object.__setattr__(self, 'beta', _require_positive("beta", self.beta))

    def from_distance(self, dist):
        return np.power(np.asarray(dist) + self.c, -self.beta)

    def descriptor(self) -> str:
        return f"ratquad:c={self.c:g},beta={self.beta:g}"


@dataclass(frozen=True)
class MaternKernel(KernelSpec):
    """
    Matern kernel (2^(1-nu) / Gamma(nu)) r^nu K_nu(r) with r = sqrt(2 nu) |x - y| / sigma.
    Equals 1 at zero distance. nu in {1/2, 3/2, 5/2} use the closed forms.
    """
    sigma: float = 1.0
    nu: float = 1.5
    name = "matern"

    def __post_init__(self):
        object.__setattr__(self, 'sigma', _require_positive("sigma", self.sigma))
        object.__setattr__(self, 'nu', _require_positive("nu", self.nu))

    def from_distance(self, dist):
        r = math.sqrt(2.0 * self.nu) * np.asarray(dist, dtype=np.float64) / self.sigma
        if self.nu == 0.5:
            return np.exp(-r)
        if self.nu == 1.5:
            return (1.0 + r) * np.exp(-r)
        if self.nu == 2.5:
            return (1.0 + r + r * r / 3.0) * np.exp(-r)

        coef = 2.0 ** (1.0 - self.nu) / special.gamma(self.nu)
        with np.errstate(invalid='ignore', over='ignore'):
            out = coef * np.power(r, self.nu) * special.kv(self.nu, r)
        # r = 0 gives 0 * inf; r -> inf underflows kv to 0
        out = np.where(r == 0.0, 1.0, out)
        return np.where(np.isfinite(out), out, 0.0)

    def descriptor(self) -> str:
        return f"matern:sigma={self.sigma:g},nu={self.nu:g}"


@dataclass(frozen=True)
class SemimetricSpec:
    """alpha-power distance |x - y| ** alpha, 0 < alpha <= 2."""
    alpha: float = 1.0
    name = "energy"

    def __post_init__(self):
        alpha = _require_positive("alpha", self.alpha)
        if alpha > 2.0:
            raise InvalidParameterError(f"alpha must lie in (0, 2], got {alpha}")
        if alpha == 2.0:
            logger.warning("alpha=2 only compares means; the energy test is not consistent against all alternatives")
        object.__setattr__(self, 'alpha', alpha)

    def from_distance(self, dist):
        return np.power(np.asarray(dist, dtype=np.float64), self.alpha)

    def matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return self.from_distance(np.abs(x[:, None] - y[None, :]))

    def descriptor(self) -> str:
        return f"energy:alpha={self.alpha:g}"


@dataclass(frozen=True)
class InducedKernel(KernelSpec):
    """Kernel induced by a semimetric around an anchor: 1/2 [rho(x, x0) + rho(y, x0) - rho(x, y)]."""
    semimetric: SemimetricSpec
    x0: float = 0.0
    name = "induced"

    def matrix(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        rho = self.semimetric.from_distance
        return 0.5 * (rho(np.abs(x - self.x0))[:, None]
                      + rho(np.abs(y - self.x0))[None, :]
                      - rho(np.abs(x[:, None] - y[None, :])))

    def descriptor(self) -> str:
        return f"induced:alpha={self.semimetric.alpha:g},x0={self.x0:g}"


PairwiseSpec = Union[KernelSpec, SemimetricSpec]


# --- Scalar evaluation ---

def eval_kernel(spec: KernelSpec, x: float, y: float) -> float:
    return float(spec.matrix(np.array([x]), np.array([y]))[0, 0])


def eval_semimetric(spec: SemimetricSpec, x: float, y: float) -> float:
    return float(spec.from_distance(abs(float(x) - float(y))))


def induced_kernel(spec: SemimetricSpec, x0: float, x: float, y: float) -> float:
    return eval_kernel(InducedKernel(spec, float(x0)), x, y)


# --- Construction from descriptor parameters ---

_KERNEL_FACTORIES = {
    "gaussian": (GaussianKernel, ("sigma",)),
    "laplacian": (LaplacianKernel, ("sigma",)),
    "ratquad": (RationalQuadraticKernel, ("c", "beta")),
    "matern": (MaternKernel, ("sigma", "nu")),
    "energy": (SemimetricSpec, ("alpha",)),
}

PAIRWISE_NAMES = tuple(_KERNEL_FACTORIES)


def build_pairwise_spec(name: str, params: Dict[str, str]) -> PairwiseSpec:
    """Builds a kernel or semimetric spec from a name and string parameters, e.g. ('matern', {'nu': '2.5'})."""
    if name not in _KERNEL_FACTORIES:
        raise InvalidParameterError(f"unknown kernel '{name}'")
    factory, allowed = _KERNEL_FACTORIES[name]
    unknown = set(params) - set(allowed)
    if unknown:
        raise InvalidParameterError(f"{name} does not take parameter(s): {', '.join(sorted(unknown))}")
    kwargs = {}
    for key, raw in params.items():
        try:
            kwargs[key] = float(raw)
        except (TypeError, ValueError):
            raise InvalidParameterError(f"{name}: {key}={raw!r} is not a number")
    return factory(**kwargs)
