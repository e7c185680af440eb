"""
Command-line interface for ProxRecon.
"""

from .main import main

__all__ = ["main"] 