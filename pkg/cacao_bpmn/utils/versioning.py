"""Versioning helpers: CACAO timestamps and object identifiers.

CACAO distinguishes playbook versions by an identifier plus ``created`` and
``modified`` timestamps. Timestamps are kept as the exact strings found in the
document and only interpreted (at millisecond precision, in UTC) when they
need to be compared.
"""

from __future__ import annotations

import datetime as _dt
import re
import uuid

_TIMESTAMP_PATTERN = re.compile(
    r"^(?P<date>\d{4}-\d{2}-\d{2})[Tt](?P<time>\d{2}:\d{2}:\d{2})"
    r"(?:\.(?P<fraction>\d+))?(?P<offset>[Zz]|[+-]\d{2}:\d{2})$"
)
_IDENTIFIER_PATTERN = re.compile(
    r"^(?P<object_type>[a-z][a-z0-9-]*?)--"
    r"(?P<uuid>[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12})$"
)
_VARIABLE_NAME_PATTERN = re.compile(r"^__[A-Za-z0-9_.-]+__$")


def parse_timestamp(value: str) -> _dt.datetime:
    """Return ``value`` as an aware UTC datetime truncated to milliseconds.

    Raises
    ------
    ValueError
        If ``value`` is not an RFC 3339 date-time.
    """

    match = _TIMESTAMP_PATTERN.match(value.strip()) if isinstance(value, str) else None
    if match is None:
        raise ValueError(f"Not an RFC 3339 timestamp: {value!r}")

    fraction = (match.group("fraction") or "").ljust(3, "0")[:3]
    offset = match.group("offset").upper()
    if offset == "Z":
        offset = "+00:00"

    parsed = _dt.datetime.fromisoformat(
        f"{match.group('date')}T{match.group('time')}.{fraction}{offset}"
    )
    return parsed.astimezone(_dt.timezone.utc)


def format_timestamp(moment: _dt.datetime) -> str:
    """Format ``moment`` as ``YYYY-MM-DDTHH:MM:SS.mmmZ`` in UTC."""

    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=_dt.timezone.utc)
    moment = moment.astimezone(_dt.timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%S.") + f"{moment.microsecond // 1000:03d}Z"


def is_timestamp(value: object) -> bool:
    """Return whether ``value`` is an RFC 3339 date-time naming a real moment."""

    if not isinstance(value, str):
        return False
    try:
        parse_timestamp(value)
    except ValueError:
        return False
    return True


def is_identifier(value: object, object_type: str | None = None) -> bool:
    """Return whether ``value`` has the shape ``<object-type>--<uuid>``."""

    if not isinstance(value, str):
        return False
    match = _IDENTIFIER_PATTERN.match(value)
    if match is None:
        return False
    return object_type is None or match.group("object_type") == object_type


def is_variable_name(value: object) -> bool:
    return isinstance(value, str) and _VARIABLE_NAME_PATTERN.match(value) is not None


def make_identifier(object_type: str, namespace: uuid.UUID, name: str) -> str:
    """Build a deterministic identifier from a name-based UUID."""

    return f"{object_type}--{uuid.uuid5(namespace, name)}"


__all__ = [
    "format_timestamp",
    "is_identifier",
    "is_timestamp",
    "is_variable_name",
    "make_identifier",
    "parse_timestamp",
]
