import os
import json
import logging
import tempfile
from pathlib import Path
from typing import Any, Dict, Union

from config import DEFAULT_REPLICATIONS, DEFAULT_SEED, STUDY_REPLICATIONS, ALPHA_LEVEL
from core.errors import ConfigParseError, InvalidParameterError, UnknownMethodError
from core.methods import STUDY_ROSTER, parse_method
from core.simulator import ScenarioConfig, lifetime_from_dict, censoring_from_dict

logger = logging.getLogger(__name__)

_KNOWN_KEYS = {
    "name", "lifetime0", "lifetime1", "censoring0", "censoring1", "censoring",
    "n", "n0", "n1", "methods", "replications", "permutations", "seed",
    "alpha_level", "group", "description",
}


def scenario_to_dict(config: ScenarioConfig) -> Dict[str, Any]:
    return {
        "name": config.name,
        "description": config.description,
        "lifetime0": config.lifetime0.to_dict(),
        "lifetime1": config.lifetime1.to_dict(),
        "censoring0": config.censoring0.to_dict(),
        "censoring1": config.censoring1.to_dict(),
        "n0": config.n0,
        "n1": config.n1,
        "methods": list(config.methods),
        "replications": config.replications,
        "permutations": config.permutations,
        "seed": config.seed,
        "alpha_level": config.alpha_level,
        "group": config.group,
    }


def _int(raw: Dict, key: str, default: Any) -> int:
    value = raw.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigParseError(f"'{key}' must be an integer, got {value!r}")
    return int(value)


def scenario_from_dict(raw: Any, source: str = "<config>") -> ScenarioConfig:
    """
    Builds a ScenarioConfig from a parsed key-value tree.
    `n` sets both group sizes and `censoring` sets both censoring models.
    """
    if not isinstance(raw, dict):
        raise ConfigParseError(f"{source}: top level must be an object")
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigParseError(f"{source}: unknown key(s) {', '.join(sorted(unknown))}")

    try:
        lifetime0 = lifetime_from_dict(raw["lifetime0"])
        lifetime1 = lifetime_from_dict(raw.get("lifetime1", raw["lifetime0"]))
        shared = raw.get("censoring")
        censoring0 = censoring_from_dict(raw.get("censoring0", shared))
        censoring1 = censoring_from_dict(raw.get("censoring1", shared))
    except (KeyError, TypeError) as e:
        raise ConfigParseError(f"{source}: missing or malformed model entry ({e})") from e
    except InvalidParameterError as e:
        raise ConfigParseError(f"{source}: {e}") from e

    methods = raw.get("methods", list(STUDY_ROSTER))
    if not isinstance(methods, list) or not all(isinstance(m, str) for m in methods):
        raise ConfigParseError(f"{source}: 'methods' must be a list of descriptors")
    try:
        methods = [parse_method(m).descriptor for m in methods]
    except (UnknownMethodError, InvalidParameterError) as e:
        raise ConfigParseError(f"{source}: {e}") from e

    n = raw.get("n")
    try:
        alpha = float(raw.get("alpha_level", ALPHA_LEVEL))
        return ScenarioConfig(
            name=str(raw.get("name", Path(source).stem)),
            lifetime0=lifetime0, lifetime1=lifetime1,
            censoring0=censoring0, censoring1=censoring1,
            n0=_int(raw, "n0", n), n1=_int(raw, "n1", n),
            methods=tuple(methods),
            replications=_int(raw, "replications", STUDY_REPLICATIONS),
            permutations=_int(raw, "permutations", DEFAULT_REPLICATIONS),
            seed=_int(raw, "seed", DEFAULT_SEED),
            alpha_level=alpha,
            group=str(raw.get("group", "")),
            description=str(raw.get("description", "")),
        )
    except (InvalidParameterError, TypeError, ValueError) as e:
        raise ConfigParseError(f"{source}: {e}") from e


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigParseError(f"{path.name}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    except UnicodeDecodeError as e:
        raise ConfigParseError(f"{path.name} is not UTF-8 text: {e}") from e
    except OSError as e:
        raise ConfigParseError(f"could not read {path}: {e}") from e

    config = scenario_from_dict(raw, source=str(path))
    logger.info(f"Loaded scenario '{config.name}' from {path.name}")
    return config


def save_scenario(config: ScenarioConfig, path: Union[str, Path]) -> Path:
    """Writes the scenario as JSON atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_name = None
    try:
        with tempfile.NamedTemporaryFile('w', dir=str(path.parent), delete=False, encoding='utf-8') as tf:
            json.dump(scenario_to_dict(config), tf, indent=4)
            tf.flush()
            os.fsync(tf.fileno())
            temp_name = tf.name
        os.replace(temp_name, path)
    except Exception as e:
        logger.error(f"Failed to save scenario to {path}: {e}")
        if temp_name and os.path.exists(temp_name):
            try:
                os.remove(temp_name)
            except OSError:
                pass
        raise
    return path
