import sys
import traceback
import logging
from config import ensure_dirs, setup_logging
from ui.cli import run

def excepthook(exc_type, exc_value, exc_tb):
    """Global exception handler to catch crashes."""
    tb = "".join(traceback.format_exception(exc_type, exc_value, exc_tb))
    logging.critical("Uncaught exception:\n" + tb)
    # Print to stderr as well for console visibility
    print("Critical Error! Check logs for details.", file=sys.stderr)
    sys.__excepthook__(exc_type, exc_value, exc_tb)

def main(argv=None) -> int:
    sys.excepthook = excepthook
    argv = sys.argv[1:] if argv is None else list(argv)

    try:
        ensure_dirs()
        setup_logging(verbose=bool({"-v", "--verbose"} & set(argv)))
    except Exception as e:
        print(f"Critical initialization failure: {e}", file=sys.stderr)
        return 1

    return run(argv)

if __name__ == '__main__':
    sys.exit(main())
