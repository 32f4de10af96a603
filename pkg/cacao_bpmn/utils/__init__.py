"""Utility functions for the CACAO/BPMN converter."""

from .config import Config

__all__ = [
    "Config",
]
