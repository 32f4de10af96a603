"""Seeded generator of structured CACAO playbooks for round-trip tests.

Generated workflows use every step kind and both successor styles
(``on_completion`` and ``on_success``/``on_failure``), nest branching
constructs up to three levels. The only step ever reached along two paths is
an end step closing several branches of one construct, possibly the end the
construct itself continues with.
"""

from __future__ import annotations

import random
import uuid
from typing import Any

CREATED = "2024-01-15T09:30:00.000Z"
MODIFIED = "2024-03-01T17:45:12.250Z"


def identifier(object_type: str, rng: random.Random) -> str:
    return f"{object_type}--{uuid.UUID(int=rng.getrandbits(128), version=4)}"


def minimal_playbook_dict() -> dict[str, Any]:
    """start -> action -> end with one agent and one target."""

    return {
        "type": "playbook",
        "spec_version": "cacao-2.0",
        "id": "playbook--6a3f0f6e-9b8c-4f7e-8a51-2d1c3b4a5e60",
        "name": "Block indicator",
        "created": CREATED,
        "modified": MODIFIED,
        "workflow_start": "start--0c0a1b1e-1111-4a4a-8b8b-000000000001",
        "workflow": {
            "start--0c0a1b1e-1111-4a4a-8b8b-000000000001": {
                "type": "start",
                "on_completion": "action--0c0a1b1e-1111-4a4a-8b8b-000000000002",
            },
            "action--0c0a1b1e-1111-4a4a-8b8b-000000000002": {
                "type": "action",
                "name": "Remove IOC files",
                "commands": [{"type": "bash", "command": "rm -rf /tmp/ioc"}],
                "agent": "organization--0c0a1b1e-1111-4a4a-8b8b-0000000000a1",
                "targets": ["ssh--0c0a1b1e-1111-4a4a-8b8b-0000000000b1"],
                "on_completion": "end--0c0a1b1e-1111-4a4a-8b8b-000000000003",
            },
            "end--0c0a1b1e-1111-4a4a-8b8b-000000000003": {"type": "end"},
        },
        "agent_definitions": {
            "organization--0c0a1b1e-1111-4a4a-8b8b-0000000000a1": {"type": "organization", "name": "SOC-1"},
        },
        "target_definitions": {
            "ssh--0c0a1b1e-1111-4a4a-8b8b-0000000000b1": {"type": "ssh", "name": "edge-fw"},
        },
    }


def fixed_id(object_type: str, number: int) -> str:
    return f"{object_type}--00000000-0000-4000-8000-{number:012d}"


def rich_playbook_dict() -> dict[str, Any]:
    """One playbook using every construct of the mapping table.

    start -> triage -> parallel(contain | notify) -> if(found: quarantine)
    -> while(retry: poll) -> switch(high: escalate | low: end) -> verify
    (success: report, failure: straight on) -> sub-playbook -> end
    """

    human, machine, target = fixed_id("individual", 901), fixed_id("http-api", 902), fixed_id("linux", 903)
    marking = fixed_id("marking-tlp", 904)
    extension = fixed_id("extension-definition", 905)
    s = {name: fixed_id(kind, number) for number, (name, kind) in enumerate(
        [
            ("start", "start"),
            ("triage", "action"),
            ("fanout", "parallel"),
            ("contain", "action"),
            ("contain_end", "end"),
            ("notify", "action"),
            ("notify_end", "end"),
            ("found", "if-condition"),
            ("quarantine", "action"),
            ("quarantine_end", "end"),
            ("retry", "while-condition"),
            ("poll", "action"),
            ("poll_end", "end"),
            ("severity", "switch-condition"),
            ("escalate", "action"),
            ("escalate_end", "end"),
            ("low_end", "end"),
            ("verify", "action"),
            ("report", "action"),
            ("subplaybook", "playbook-action"),
            ("end", "end"),
        ],
        start=1,
    )}

    def act(name: str, agent: str, command: str, nxt: str | None = None, **extra: Any) -> dict[str, Any]:
        step = {"type": "action", "name": name, "commands": [{"type": "bash", "command": command}], "agent": agent, **extra}
        if nxt is not None:
            step["on_completion"] = nxt
        return step

    workflow = {
        s["start"]: {"type": "start", "on_completion": s["triage"]},
        s["triage"]: act("Triage alert", human, "review alert", s["fanout"], targets=[target], delay=0, timeout=60000),
        s["fanout"]: {"type": "parallel", "name": "Respond", "next_steps": [s["contain"], s["notify"]], "on_completion": s["found"]},
        s["contain"]: act("Contain host", machine, "isolate web-01", s["contain_end"]),
        s["contain_end"]: {"type": "end"},
        s["notify"]: act("Notify owner", human, "call owner", s["notify_end"]),
        s["notify_end"]: {"type": "end"},
        s["found"]: {"type": "if-condition", "condition": "__ioc_found__ = true", "on_true": s["quarantine"], "on_completion": s["retry"]},
        s["quarantine"]: act("Quarantine file", machine, "mv /tmp/ioc /quarantine", s["quarantine_end"]),
        s["quarantine_end"]: {"type": "end"},
        s["retry"]: {"type": "while-condition", "condition": "__attempts__ < 3", "on_true": s["poll"], "on_completion": s["severity"]},
        s["poll"]: act("Poll sandbox", machine, "curl https://sandbox.example/status", s["poll_end"]),
        s["poll_end"]: {"type": "end"},
        s["severity"]: {
            "type": "switch-condition",
            "switch": "__severity__",
            "cases": {"high": s["escalate"], "low": s["low_end"]},
            "on_completion": s["verify"],
        },
        s["escalate"]: act("Escalate", human, "page incident commander", s["escalate_end"]),
        s["escalate_end"]: {"type": "end"},
        s["low_end"]: {"type": "end", "name": "Nothing to do"},
        s["verify"]: {
            **act("Verify cleanup", machine, "scan web-01"),
            "on_success": s["report"],
            "on_failure": s["subplaybook"],
        },
        s["report"]: act("Report", human, "write report", s["subplaybook"]),
        s["subplaybook"]: {
            "type": "playbook-action",
            "name": "Forensics",
            "playbook_id": fixed_id("playbook", 906),
            "playbook_version": CREATED,
            "on_completion": s["end"],
        },
        s["end"]: {"type": "end"},
    }
    return {
        "type": "playbook",
        "spec_version": "cacao-2.0",
        "id": fixed_id("playbook", 900),
        "name": "Malware response",
        "description": "Contain and clean up a malware infection",
        "created": CREATED,
        "modified": MODIFIED,
        "workflow_start": s["start"],
        "workflow": workflow,
        "playbook_variables": {
            "__ioc_found__": {"type": "bool", "value": "true"},
            "__attempts__": {"type": "integer", "value": "0"},
            "__severity__": {"type": "string", "value": "high", "constant": True},
        },
        "agent_definitions": {
            human: {"type": "individual", "name": "Analyst"},
            machine: {"type": "http-api", "name": "SOAR API"},
        },
        "target_definitions": {target: {"type": "linux", "name": "web-01"}},
        "data_marking_definitions": {marking: {"type": "marking-tlp", "tlpv2_level": "TLP:AMBER"}},
        "markings": [marking],
        "extension_definitions": {extension: {"name": "priority", "schema": "https://example.org/priority"}},
        "signatures": [{"signee": "SOC Lead", "value": "c2lnbmF0dXJl"}],
    }


class PlaybookFactory:
    """Build one random structured playbook per seed."""

    def __init__(self, seed: int, *, max_steps: int = 25, max_depth: int = 3):
        self.rng = random.Random(seed)
        self.seed = seed
        self.max_steps = max_steps
        self.max_depth = max_depth
        self.workflow: dict[str, dict[str, Any]] = {}
        self.human = identifier("individual", self.rng)
        self.machine = identifier("http-api", self.rng)
        self.target = identifier("linux", self.rng)

    # --- Steps ---

    @property
    def remaining(self) -> int:
        return self.max_steps - len(self.workflow)

    def add(self, kind: str, **fields: Any) -> str:
        step_id = identifier(kind, self.rng)
        self.workflow[step_id] = {"type": kind, **{key: value for key, value in fields.items() if value is not None}}
        return step_id

    def link(self, step_id: str, target: str | None, prop: str = "on_completion") -> None:
        if target is not None:
            self.workflow[step_id][prop] = target

    def action(self, tail: str | None) -> str:
        rng = self.rng
        if rng.random() < 0.2:
            step_id = self.add(
                "playbook-action",
                name=f"Run sub-playbook {len(self.workflow)}",
                playbook_id=identifier("playbook", rng),
                playbook_version=MODIFIED if rng.random() < 0.5 else None,
            )
        else:
            commands = [
                {"type": rng.choice(["bash", "manual", "http-api"]), "command": f"step {len(self.workflow)} command {index}"}
                for index in range(rng.randint(1, 2))
            ]
            if rng.random() < 0.3:
                commands[0]["description"] = "Collect evidence\nsecond line"
            step_id = self.add(
                "action",
                name=f"Action {len(self.workflow)}",
                commands=commands,
                agent=rng.choice([self.human, self.machine]),
                targets=[self.target] if rng.random() < 0.5 else None,
                delay=rng.choice([None, 0, 500]),
                timeout=rng.choice([None, 30000]),
            )
        self.link(step_id, tail)
        return step_id

    def end(self) -> str:
        return self.add("end", name="End" if self.rng.random() < 0.5 else None)

    def chain(self, depth: int, tail: str | None, length: int | None = None) -> str:
        """Build a chain of items that continues at ``tail`` or ends on its own."""

        nxt = tail
        for _ in range(length or self.rng.randint(1, 3)):
            nxt = self.item(depth, nxt)
        assert nxt is not None
        return nxt

    def item(self, depth: int, nxt: str | None) -> str:
        rng = self.rng
        if self.remaining < 10 or depth >= self.max_depth:
            return self.action(nxt or self.end())
        choice = rng.choice(["action", "outcome", "single-outcome", "parallel", "if", "while", "switch"])
        if choice == "action":
            return self.action(nxt or self.end())
        if choice == "outcome":
            return self.outcome(nxt)
        if choice == "single-outcome":
            step_id = self.action(None)
            self.link(step_id, nxt or self.end(), rng.choice(["on_success", "on_failure"]))
            return step_id

        # a construct closing its chain may hand control back without on_completion
        continuation = None if nxt is None and rng.random() < 0.3 else (nxt or self.end())
        shared = None
        if choice != "while" and rng.random() < 0.3:
            # an anchored end is also the construct's continuation on the top-level chain
            anchored = depth == 0 and nxt is None and continuation is not None and rng.random() < 0.5
            shared = continuation if anchored else self.end()
        if choice == "parallel":
            branches = [self.chain(depth + 1, shared, 1) for _ in range(rng.randint(2, 3))]
            return self.add("parallel", name="Fan out", next_steps=branches, on_completion=continuation)
        if choice == "if":
            on_true = self.chain(depth + 1, shared, 1)
            if shared is not None and rng.random() < 0.3:
                on_false = shared
            else:
                on_false = self.chain(depth + 1, shared, 1) if rng.random() < 0.6 else None
            return self.add("if-condition", condition="[ioc-found]", on_true=on_true, on_false=on_false, on_completion=continuation)
        if choice == "while":
            body = self.chain(depth + 1, None, 1)
            return self.add("while-condition", condition="__retries__ < 3", on_true=body, on_completion=continuation)
        labels = rng.sample(["low", "medium", "high", "false", "critical"], rng.randint(1, 3))
        cases = {label: self.chain(depth + 1, shared, 1) for label in labels}
        return self.add("switch-condition", switch="__severity__", cases=cases, on_completion=continuation)

    def outcome(self, nxt: str | None) -> str:
        """An action whose success and failure paths meet at ``nxt``, or both end."""

        if nxt is None:
            success, failure = self.action(self.end()), self.end()
        else:
            success = self.action(nxt) if self.rng.random() < 0.7 else nxt
            failure = self.action(nxt) if success == nxt or self.rng.random() < 0.5 else nxt
        step_id = self.action(None)
        self.link(step_id, success, "on_success")
        self.link(step_id, failure, "on_failure")
        return step_id

    # --- Playbook ---

    def build(self) -> dict[str, Any]:
        rng = self.rng
        while True:
            self.workflow = {}
            entry = self.chain(0, None, rng.randint(2, 4))
            start = self.add("start", on_completion=entry)
            if len(self.workflow) <= self.max_steps:
                break
        playbook: dict[str, Any] = {
            "type": "playbook",
            "spec_version": "cacao-2.0",
            "id": identifier("playbook", rng),
            "name": f"Generated playbook {self.seed}",
            "created": CREATED,
            "modified": MODIFIED,
            "workflow_start": start,
            "workflow": self.workflow,
            "agent_definitions": {
                self.human: {"type": "individual", "name": "Analyst"},
                self.machine: {"type": "http-api", "name": "SOAR API", "address": {"url": ["https://soar.example"]}},
            },
            "target_definitions": {self.target: {"type": "linux", "name": "web-01"}},
        }
        if rng.random() < 0.5:
            playbook["description"] = "Generated for round-trip testing"
            playbook["playbook_variables"] = {
                "__severity__": {"type": "string", "value": "high", "constant": False},
                "__retries__": {"type": "integer", "value": "0", "external": True},
            }
        if rng.random() < 0.4:
            marking = identifier("marking-tlp", rng)
            playbook["data_marking_definitions"] = {marking: {"type": "marking-tlp", "tlpv2_level": "TLP:AMBER"}}
            playbook["markings"] = [marking]
        if rng.random() < 0.3:
            playbook["signatures"] = [{"signee": "SOC Lead", "value": "c2lnbmF0dXJl"}]
        if rng.random() < 0.3:
            extension = identifier("extension-definition", rng)
            playbook["extension_definitions"] = {extension: {"name": "priority", "schema": "https://example.org/schema"}}
            playbook["x_custom_field"] = {"nested": [1, 2, 3]}
        return playbook


def generate_playbook(seed: int) -> dict[str, Any]:
    return PlaybookFactory(seed).build()


__all__ = [
    "CREATED",
    "MODIFIED",
    "PlaybookFactory",
    "fixed_id",
    "generate_playbook",
    "identifier",
    "minimal_playbook_dict",
    "rich_playbook_dict",
]
