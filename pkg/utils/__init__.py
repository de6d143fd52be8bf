"""
Utils package initialization.
"""

from .logger import StructuredLogger, get_logger

__all__ = ["StructuredLogger", "get_logger"]
