import os
import sys
import copy
import json
import logging
import shutil
import tempfile
from pathlib import Path
from datetime import datetime
from typing import Dict, Any, Optional

# --- File Paths ---
BASE_DIR = Path(os.getcwd())
CONFIG_FILE = Path(os.environ.get('SURVDIFF_CONFIG', BASE_DIR / 'survdiff.json'))

# --- App Constants ---
APP_NAME = "survdiff"
APP_VERSION = "v0.4.0"
THREADS_ENV_VAR = "SURVDIFF_THREADS"

# --- Default Configuration ---
DEFAULT_CONFIG = {
    "permutation": {
        "replications": 1000,
        "seed": 20190417,
        "enumeration_limit": 20000,
        "batch_size": 250
    },
    "simulation": {
        "replications": 500,
        "alpha_level": 0.05
    },
    "workers": {
        "max_workers": None
    },
    "output": {
        "results_dir": "results",
        "logs_dir": "logs"
    }
}

def deep_update(base_dict: Dict, update_dict: Dict) -> Dict:
    """Recursively updates the base dictionary with values from the update dictionary."""
    for key, value in update_dict.items():
        if isinstance(value, dict):
            base_dict_value = base_dict.get(key)
            if isinstance(base_dict_value, dict):
                deep_update(base_dict_value, value)
            else:
                base_dict[key] = value
        else:
            base_dict[key] = value
    return base_dict

def _write_default(path: Path) -> None:
    with tempfile.NamedTemporaryFile('w', dir=str(path.parent), delete=False) as tf:
        json.dump(DEFAULT_CONFIG, tf, indent=4)
        tf.flush()
        os.fsync(tf.fileno())
        temp_name = tf.name
    os.replace(temp_name, path)

def load_config(path: Optional[Path] = None) -> Dict[str, Any]:
    """
    Loads survdiff.json merged over DEFAULT_CONFIG.
    A missing file is generated; a corrupted one is moved to .json.old and regenerated.
    """
    path = Path(path) if path is not None else CONFIG_FILE
    config = copy.deepcopy(DEFAULT_CONFIG)

    if not path.exists():
        try:
            _write_default(path)
            print(f"Generated default configuration at {path}", file=sys.stderr)
        except Exception as e:
            print(f"Error creating config file: {e}", file=sys.stderr)
        return config

    try:
        with open(path, 'r', encoding='utf-8') as f:
            user_config = json.load(f)
        if isinstance(user_config, dict):
            config = deep_update(config, user_config)
        else:
            print(f"Ignoring {path.name}: top level is not an object", file=sys.stderr)

    except json.JSONDecodeError:
        print(f"CRITICAL: {path.name} is invalid/corrupted.", file=sys.stderr)
        backup_path = path.with_suffix('.json.old')
        try:
            shutil.move(str(path), str(backup_path))
            print(f"Backed up corrupted config to {backup_path.name}", file=sys.stderr)
            _write_default(path)
            print(f"Regenerated clean {path.name}", file=sys.stderr)
        except Exception as e:
            print(f"Failed to recover config: {e}", file=sys.stderr)

    except Exception as e:
        print(f"Unexpected error loading config: {e}", file=sys.stderr)

    return config

# --- Load Configuration ---
_cfg = load_config()

# --- Expose Constants ---
DEFAULT_REPLICATIONS = int(_cfg['permutation']['replications'])
DEFAULT_SEED = int(_cfg['permutation']['seed'])
ENUMERATION_LIMIT = int(_cfg['permutation']['enumeration_limit'])
BATCH_SIZE = int(_cfg['permutation']['batch_size'])

STUDY_REPLICATIONS = int(_cfg['simulation']['replications'])
ALPHA_LEVEL = float(_cfg['simulation']['alpha_level'])

MAX_WORKERS = _cfg['workers']['max_workers']

RESULTS_DIR = BASE_DIR / _cfg['output']['results_dir']
LOGS_DIR = BASE_DIR / _cfg['output']['logs_dir']

# --- Helper Functions ---

def resolve_max_workers(requested: Optional[int] = None) -> int:
    """
    Worker count for the thread pools.
    SURVDIFF_THREADS caps whatever was requested (or configured); absent means auto.
    """
    auto = os.cpu_count() or 1
    count = requested if requested else (MAX_WORKERS or auto)

    raw_cap = os.environ.get(THREADS_ENV_VAR, "").strip()
    if raw_cap:
        try:
            cap = int(raw_cap)
        except ValueError:
            logging.getLogger(__name__).warning(f"Ignoring non-integer {THREADS_ENV_VAR}={raw_cap!r}")
            cap = 0
        if cap > 0:
            count = min(count, cap)

    return max(1, int(count))

def ensure_dirs() -> None:
    """Creates the log directory; results directories are created on write."""
    try:
        LOGS_DIR.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        print(f"Fatal: cannot create {LOGS_DIR}: {e}", file=sys.stderr)
        sys.exit(1)

def _archive_latest(log_file: Path) -> None:
    """Moves latest.log to the first free YYYY-MM-DD-n.log slot."""
    stamp = datetime.now().strftime("%Y-%m-%d")
    index = 1
    while (log_file.parent / f"{stamp}-{index}.log").exists():
        index += 1
    try:
        shutil.move(str(log_file), str(log_file.parent / f"{stamp}-{index}.log"))
    except OSError as e:
        print(f"Failed to rotate logs: {e}", file=sys.stderr)

FILE_LOG_FORMAT = '[%(asctime)s] [%(threadName)s/%(levelname)s] [%(filename)s:%(lineno)d]: %(message)s'
CONSOLE_LOG_FORMAT = '[%(asctime)s] [%(levelname)s]: %(message)s'

def setup_logging(verbose: bool = False) -> None:
    """
    File log in logs/latest.log (previous run archived by date) plus a stderr
    console handler. stdout is left to command results.
    """
    ensure_dirs()
    log_file = LOGS_DIR / "latest.log"
    if log_file.exists():
        _archive_latest(log_file)

    level = logging.DEBUG if verbose else logging.INFO
    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    try:
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setFormatter(logging.Formatter(FILE_LOG_FORMAT, datefmt='%H:%M:%S'))
        root_logger.addHandler(file_handler)
    except OSError as e:
        print(f"File logging disabled: {e}", file=sys.stderr)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(logging.Formatter(CONSOLE_LOG_FORMAT, datefmt='%H:%M:%S'))
    console_handler.setLevel(logging.DEBUG if verbose else logging.WARNING)
    root_logger.addHandler(console_handler)

    logging.info(f"{APP_NAME} {APP_VERSION} started (config: {CONFIG_FILE.name}, workers: {resolve_max_workers()})")
