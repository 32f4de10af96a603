"""Construct usage counts, one per row of the CACAO/BPMN mapping table."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

from cacao_bpmn.cacao.model import STEP_KINDS, ActionPayload, Playbook

logger = logging.getLogger(__name__)

CONSTRUCT_ROWS: tuple[str, ...] = (
    "playbook",
    "versioning",
    "variables",
    *STEP_KINDS,
    "commands",
    "agent-target",
    "extensions",
    "data-markings",
    "signatures",
)


@dataclass(frozen=True, slots=True)
class ConstructCount:
    row: int
    construct: str
    count: int

    def __str__(self) -> str:
        return f"row {self.row} {self.construct}: {self.count}"


def count_constructs(pb: Playbook) -> list[ConstructCount]:
    """Count how often each mapped construct occurs in ``pb``.

    Step kinds count steps; variables count playbook and step variables;
    versioning counts the populated spec_version/created/modified fields;
    agent-target counts agent and target definitions; extensions counts
    extension definitions plus steps carrying step extensions.
    """

    kinds = Counter(step.kind for step in pb.workflow.values())
    counts: dict[str, int] = {kind: kinds[kind] for kind in STEP_KINDS}
    counts["playbook"] = 1
    counts["versioning"] = sum(1 for value in (pb.spec_version, pb.created, pb.modified) if value)
    counts["variables"] = len(pb.playbook_variables or {}) + sum(
        len(step.step_variables or {}) for step in pb.workflow.values()
    )
    counts["commands"] = sum(
        len(step.payload.commands) for step in pb.workflow.values() if isinstance(step.payload, ActionPayload)
    )
    counts["agent-target"] = len(pb.agents) + len(pb.targets)
    counts["extensions"] = len(pb.extension_definitions or {}) + sum(
        1 for step in pb.workflow.values() if step.step_extensions
    )
    counts["data-markings"] = len(pb.markings or ())
    counts["signatures"] = len(pb.signatures or ())

    result = [ConstructCount(row, construct, counts[construct]) for row, construct in enumerate(CONSTRUCT_ROWS, start=1)]
    logger.debug("Counted constructs for %s: %s", pb.id, {entry.construct: entry.count for entry in result})
    return result


__all__ = ["CONSTRUCT_ROWS", "ConstructCount", "count_constructs"]
