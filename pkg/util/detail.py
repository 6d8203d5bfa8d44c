"""This file is meant to contain all the commonly used functions and constants"""

import os
import sys
import time
import logging

# Path to executable
if getattr(sys, 'frozen', False):
    # Running in pyinstaller
    IS_PYINSTALLER = True
    LOCAL = os.path.dirname(sys.executable)
    BUNDLED_DATA = sys._MEIPASS  # Files that we bundle with the final file

elif __file__:
    # Running normally
    IS_PYINSTALLER = False
    LOCAL = os.path.dirname(__file__)
    assert os.path.basename(LOCAL) == "util"
    LOCAL = os.path.abspath(os.path.join(LOCAL, os.pardir))
    BUNDLED_DATA = LOCAL

LOGS_DIR = os.path.join(LOCAL, "logs")

if not os.path.exists(LOGS_DIR):
    os.makedirs(LOGS_DIR, exist_ok=True)

SESSION_ID = str(int(time.time()))

THREADS_ENV_VAR = 'TENSORCS_THREADS'


def max_threads() -> int:
    """
    Upper bound on worker threads for trial-level parallelism.

    :return: Value of TENSORCS_THREADS if set to a positive integer, otherwise the CPU count
    """
    value = os.environ.get(THREADS_ENV_VAR)
    if value:
        try:
            threads = int(value)
        except ValueError:
            LOGGER.warning(f"Ignoring non-integer {THREADS_ENV_VAR}={value!r}")
        else:
            if threads >= 1:
                return threads
            LOGGER.warning(f"Ignoring non-positive {THREADS_ENV_VAR}={value!r}")

    return os.cpu_count() or 1


# DEBUG      Informational log, useful only to developers
# INFO       Informational log, useful to users
# WARNING    Warning of unusual events
# ERROR      Warning that something broke
# CRITICAL   Impending crash, application terminating event.
LOGGER = logging.getLogger("main")

LOGGER.setLevel(logging.DEBUG)

_logger_format = logging.Formatter("[%(asctime)s] (%(levelname)s) %(filename)s:%(funcName)s: %(message)s")

_file_handler = logging.FileHandler(os.path.join(LOGS_DIR, "debuglog_" + SESSION_ID + ".txt"))
_file_handler.setLevel(logging.DEBUG)
_file_handler.setFormatter(_logger_format)

_stdout_handler = logging.StreamHandler(sys.stdout)
_stdout_handler.setLevel(logging.INFO)
_stdout_handler.setFormatter(_logger_format)

LOGGER.addHandler(_file_handler)
LOGGER.addHandler(_stdout_handler)

LOGGER.debug(f"Starting session ID: {SESSION_ID}")
