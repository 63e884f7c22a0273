import logging
import sys

# =============================================================================
# App Module: Console Logging
# =============================================================================

LOG_FORMAT = "[%(asctime)s.%(msecs)03d] %(levelname)s %(name)s: %(message)s"
LOG_DATEFMT = "%H:%M:%S"


def verbosity_level(verbose):
    """0 -> WARNING, 1 -> INFO, 2 or more -> DEBUG"""
    if verbose >= 2:
        return logging.DEBUG
    if verbose == 1:
        return logging.INFO
    return logging.WARNING


def setup_logging(verbose=0, stream=None):
    """Install the timestamped stderr handler on the package root logger once"""
    root = logging.getLogger("src")
    for handler in list(root.handlers):
        if getattr(handler, "_workbench_console", False):
            root.removeHandler(handler)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=LOG_DATEFMT))
    handler._workbench_console = True
    root.addHandler(handler)
    root.setLevel(verbosity_level(verbose))
    return handler
