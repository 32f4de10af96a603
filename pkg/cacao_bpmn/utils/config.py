# -*- coding: utf-8 -*-
"""Configuration management helpers for the CACAO/BPMN converter."""

from __future__ import annotations

import uuid
from typing import Literal, cast

from decouple import Choices, config

from cacao_bpmn.utils.versioning import format_timestamp, parse_timestamp

ImportMode = Literal["strict", "best-effort"]


def _timestamp(value: str) -> str:
    """Normalise a configured timestamp to ``YYYY-MM-DDTHH:MM:SS.mmmZ``."""

    return format_timestamp(parse_timestamp(value))


class Config:
    """Centralised configuration for the converter.

    Values come from the environment or a ``.env``/``settings.ini`` file via
    :mod:`decouple`; every setting has a default so the converter runs without
    any configuration at all.
    """

    LOG_LEVEL: str = config("LOG_LEVEL", default="INFO")
    IMPORT_MODE: ImportMode = cast(
        ImportMode,
        config("IMPORT_MODE", default="strict", cast=Choices(["strict", "best-effort"])),
    )
    ID_NAMESPACE: uuid.UUID = config(
        "ID_NAMESPACE",
        default="6f1c2d0e-4b7a-5c3e-9d8f-0a1b2c3d4e5f",
        cast=uuid.UUID,
    )
    IMPORT_TIMESTAMP: str = config("IMPORT_TIMESTAMP", default="1970-01-01T00:00:00.000Z", cast=_timestamp)
    TARGET_NAMESPACE: str = config("TARGET_NAMESPACE", default="urn:cacao:bpmn:definitions")


LOG_LEVEL: str = Config.LOG_LEVEL
IMPORT_MODE: ImportMode = Config.IMPORT_MODE
ID_NAMESPACE: uuid.UUID = Config.ID_NAMESPACE
IMPORT_TIMESTAMP: str = Config.IMPORT_TIMESTAMP
TARGET_NAMESPACE: str = Config.TARGET_NAMESPACE
