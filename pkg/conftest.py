import os
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

# Keep the test run from writing survdiff.json into the working tree
os.environ.setdefault("SURVDIFF_CONFIG", str(Path(tempfile.gettempdir()) / "survdiff-test.json"))
