"""
Configuration management for ProxRecon.
"""

from .settings import Settings, get_settings, update_settings
from .logging import LoggingConfig

__all__ = [
    "Settings",
    "get_settings",
    "update_settings",
    "LoggingConfig"
]
