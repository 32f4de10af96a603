"""Pytest configuration and fixtures for converter tests."""

import json
from pathlib import Path

import pytest

from cacao_bpmn.cacao.codec import playbook_from_dict
from tests.playbook_factory import generate_playbook, minimal_playbook_dict, rich_playbook_dict


@pytest.fixture
def minimal_dict():
    """start -> action -> end as a plain JSON object."""
    return minimal_playbook_dict()


@pytest.fixture
def minimal_playbook(minimal_dict):
    return playbook_from_dict(minimal_dict)


@pytest.fixture
def rich_dict():
    """A playbook exercising every step kind, agents, markings and signatures."""
    return rich_playbook_dict()


@pytest.fixture
def rich_playbook(rich_dict):
    return playbook_from_dict(rich_dict)


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON object into the test's temporary directory."""

    def _write(data, name="playbook.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data, indent=2), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def corpus_seeds():
    """Seeds of the generated round-trip corpus."""
    return range(200)


@pytest.fixture
def corpus(corpus_seeds):
    """``(seed, playbook)`` pairs of the generated corpus."""
    return [(seed, playbook_from_dict(generate_playbook(seed))) for seed in corpus_seeds]
