"""
Logger Setup
File: utils/utils_logger.py

Configures the project-wide loguru logger once, at import time.

Features:
- Writes INFO and above to logs/project_log.log (LOG_LEVEL overrides the level).
- Ensures the log directory exists.

Every other module does `from utils.utils_logger import logger`.
"""

#####################################
# Imports
#####################################

# Imports from Python Standard Library
import os
import pathlib

# Imports from external packages
from dotenv import load_dotenv
from loguru import logger

# LOG_FOLDER and LOG_LEVEL may come from .env; utils_config loads it after this module
load_dotenv()

# Get this file name without the extension
CURRENT_SCRIPT = pathlib.Path(__file__).stem

# Set directory where logs will be stored
LOG_FOLDER: pathlib.Path = pathlib.Path(os.getenv("LOG_FOLDER", "logs"))

# Set the name of the log file
LOG_FILE: pathlib.Path = LOG_FOLDER.joinpath("project_log.log")

# Read here rather than through utils_config, which imports this module
LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()

# Ensure the log folder exists or create it
try:
    LOG_FOLDER.mkdir(parents=True, exist_ok=True)
except Exception as e:
    logger.error(f"Error creating log folder: {e}")

# Configure Loguru to write to the log file
try:
    logger.add(LOG_FILE, level=LOG_LEVEL, enqueue=False)
    logger.debug(f"Logging to file: {LOG_FILE} at level {LOG_LEVEL}")
except Exception as e:
    logger.error(f"Error configuring logger to write to file: {e}")


def get_log_file_path() -> pathlib.Path:
    """Return the path to the log file."""
    return LOG_FILE


def main() -> None:
    """Show where log output goes."""
    logger.info(f"STARTING {CURRENT_SCRIPT}.py")
    logger.info(f"View the log output at {LOG_FILE} (level {LOG_LEVEL})")
    logger.info(f"EXITING {CURRENT_SCRIPT}.py.")


# Conditional execution block that calls main() only when this file is executed directly
if __name__ == "__main__":
    main()
