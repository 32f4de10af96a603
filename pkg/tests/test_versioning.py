"""Tests for timestamp and identifier helpers."""

from __future__ import annotations

import datetime as dt
import uuid

import pytest

from cacao_bpmn.utils.versioning import (
    format_timestamp,
    is_identifier,
    is_timestamp,
    is_variable_name,
    make_identifier,
    parse_timestamp,
)


def test_parse_timestamp_truncates_to_milliseconds() -> None:
    parsed = parse_timestamp("2024-01-15T09:30:00.123987Z")

    assert parsed == dt.datetime(2024, 1, 15, 9, 30, 0, 123000, tzinfo=dt.timezone.utc)


def test_parse_timestamp_normalizes_offsets() -> None:
    assert parse_timestamp("2024-01-15T11:30:00+02:00") == parse_timestamp("2024-01-15T09:30:00Z")


def test_parse_timestamp_rejects_dates_without_time() -> None:
    with pytest.raises(ValueError, match="RFC 3339"):
        parse_timestamp("2024-01-15")


def test_format_timestamp_uses_utc_milliseconds() -> None:
    moment = dt.datetime(2024, 3, 1, 19, 45, 12, 250999, tzinfo=dt.timezone(dt.timedelta(hours=2)))

    assert format_timestamp(moment) == "2024-03-01T17:45:12.250Z"


def test_format_timestamp_treats_naive_as_utc() -> None:
    assert format_timestamp(dt.datetime(2024, 1, 1)) == "2024-01-01T00:00:00.000Z"


@pytest.mark.parametrize(
    ("value", "expected"),
    [
        ("2024-01-15T09:30:00Z", True),
        ("2024-01-15t09:30:00.5-05:00", True),
        ("2024-01-15 09:30:00Z", False),
        ("yesterday", False),
        ("2024-13-45T09:30:00.000Z", False),
        ("2024-02-30T25:61:00Z", False),
        (20240115, False),
    ],
)
def test_is_timestamp(value: object, expected: bool) -> None:
    assert is_timestamp(value) is expected


def test_is_identifier_checks_shape_and_type() -> None:
    value = "action--0c0a1b1e-1111-4a4a-8b8b-000000000002"

    assert is_identifier(value)
    assert is_identifier(value, "action")
    assert not is_identifier(value, "playbook")
    assert not is_identifier("action-0c0a1b1e-1111-4a4a-8b8b-000000000002")
    assert not is_identifier("action--not-a-uuid")


def test_make_identifier_is_deterministic() -> None:
    namespace = uuid.UUID("6f1c2d0e-4b7a-5c3e-9d8f-0a1b2c3d4e5f")

    first = make_identifier("action", namespace, "Process_1/Task_1/step")
    second = make_identifier("action", namespace, "Process_1/Task_1/step")
    other = make_identifier("action", namespace, "Process_1/Task_2/step")

    assert first == second
    assert first != other
    assert is_identifier(first, "action")


@pytest.mark.parametrize(
    ("value", "expected"),
    [("__severity__", True), ("__a.b-c__", True), ("severity", False), ("__x", False), ("____", False)],
)
def test_is_variable_name(value: str, expected: bool) -> None:
    assert is_variable_name(value) is expected
