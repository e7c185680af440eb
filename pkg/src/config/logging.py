"""
Logging configuration for ProxRecon.
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

ROOT_LOGGER = "src"
FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s"


@dataclass
class LoggingConfig:
    """Logging configuration settings."""

    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    file_path: Optional[Path] = None
    console_output: bool = True
    file_output: bool = False

    @classmethod
    def from_env(cls) -> 'LoggingConfig':
        """Create logging config from environment variables."""
        log_file = os.getenv("LOG_FILE")
        return cls(
            level=os.getenv("LOG_LEVEL", "INFO").upper(),
            file_path=Path(log_file) if log_file else None,
            file_output=bool(log_file)
        )

    def configure(self, name: str = ROOT_LOGGER) -> logging.Logger:
        """Install handlers on the package logger once."""
        logger = logging.getLogger(name)
        logger.setLevel(getattr(logging, self.level.upper(), logging.INFO))

        if not logger.handlers:
            if self.console_output:
                console_handler = logging.StreamHandler()
                console_handler.setLevel(logger.level)
                console_handler.setFormatter(logging.Formatter(self.format))
                logger.addHandler(console_handler)

            if self.file_output and self.file_path:
                self.file_path.parent.mkdir(parents=True, exist_ok=True)
                file_handler = logging.FileHandler(self.file_path)
                file_handler.setLevel(logging.DEBUG)
                file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
                logger.addHandler(file_handler)

        return logger
