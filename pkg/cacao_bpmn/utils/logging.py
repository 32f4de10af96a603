"""Logging setup for the ``cacao-bpmn`` command."""

from __future__ import annotations

import logging
import sys

HANDLER_NAME = "cacao-bpmn"
QUIET_LEVEL = logging.WARNING
LOG_FORMAT = "%(levelname)s - %(name)s - %(message)s"


def resolve_log_level(level: str | int | None) -> int:
    """Return a numeric logging level from ``level``.

    Parameters
    ----------
    level:
        An integer level, a standard level name (case insensitive), a string
        of digits, or ``None`` for :data:`logging.INFO`.

    Raises
    ------
    ValueError
        If ``level`` cannot be interpreted as a logging level.
    """

    match level:
        case None:
            return logging.INFO
        case int():
            return level
    text = level.strip().upper()
    if text.isdigit():
        return int(text)
    try:
        return logging.getLevelNamesMapping()[text]
    except KeyError:
        raise ValueError(f"Unknown logging level: {level!r}") from None


def _converter_handler(root: logging.Logger) -> logging.Handler | None:
    return next((handler for handler in root.handlers if handler.get_name() == HANDLER_NAME), None)


def configure_logging(level: str | int | None = logging.INFO, *, quiet: bool = False, force: bool = False) -> int:
    """Route log records to standard error at ``level`` and return that level.

    Standard output is left for converted documents. ``quiet`` raises the
    threshold to warnings. The stderr handler is installed once; later calls
    only adjust levels unless ``force`` replaces it.
    """

    resolved = resolve_log_level(level)
    if quiet:
        resolved = max(resolved, QUIET_LEVEL)

    root = logging.getLogger()
    handler = _converter_handler(root)
    if handler is not None and force:
        root.removeHandler(handler)
        handler = None
    if handler is None:
        handler = logging.StreamHandler(sys.stderr)
        handler.set_name(HANDLER_NAME)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)

    handler.setLevel(resolved)
    root.setLevel(resolved)
    return resolved


__all__ = ["HANDLER_NAME", "QUIET_LEVEL", "configure_logging", "resolve_log_level"]
