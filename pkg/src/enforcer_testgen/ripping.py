"""Breadth-first GUI ripping with internal-event monitoring."""

from __future__ import annotations

import json
import logging
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .sut import GuiState, SutDriver, UiAction

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RipTransition:
    source: str
    action: UiAction
    events: tuple[str, ...]
    target: str

    def to_json(self) -> dict:
        return {
            "from": self.source,
            "action": self.action.to_json(),
            "events": list(self.events),
            "to": self.target,
        }


@dataclass
class RippingModel:
    """GUI states (by digest), the initial state, and action transitions labeled with events."""

    states: tuple[GuiState, ...]
    initial: str
    transitions: tuple[RipTransition, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        digests = {s.digest for s in self.states}
        if self.initial not in digests:
            raise ValueError("initial state is not among the model states")
        for t in self.transitions:
            if t.source not in digests or t.target not in digests:
                raise ValueError(f"transition endpoint not in model: {t}")

    @property
    def digests(self) -> list[str]:
        seen: dict[str, None] = {}
        for s in self.states:
            seen.setdefault(s.digest)
        return list(seen)

    def state(self, digest: str) -> GuiState:
        for s in self.states:
            if s.digest == digest:
                return s
        raise KeyError(digest)

    def outgoing(self, digest: str) -> list[RipTransition]:
        return [t for t in self.transitions if t.source == digest]

    def to_json(self) -> dict:
        return {
            "states": [s.to_json() for s in self.states],
            "initial": self.initial,
            "transitions": [t.to_json() for t in self.transitions],
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "RippingModel":
        volatile = doc.get("meta", {}).get("volatile", [])
        states = tuple(GuiState.from_json(s, volatile) for s in doc["states"])
        for raw, st in zip(doc["states"], states):
            if raw.get("digest") not in (None, st.digest):
                raise ValueError(f"state digest mismatch for {raw.get('digest')}")
        return cls(
            states=states,
            initial=doc["initial"],
            transitions=tuple(
                RipTransition(t["from"], UiAction.from_json(t["action"]), tuple(t["events"]), t["to"])
                for t in doc["transitions"]
            ),
            meta=dict(doc.get("meta", {})),
        )


def save_model(model: RippingModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_json(), indent=2) + "\n", encoding="utf-8")


def load_ripping_model(path: str | Path) -> RippingModel:
    return RippingModel.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def rip(sut: SutDriver, budget: int, seed: int | None = None) -> RippingModel:
    """Explore ``sut`` breadth-first, firing every available action once per state.

    ``budget`` bounds the number of exploratory actions; the resets and
    replays used to navigate back to a frontier state are not charged to it
    but are counted in ``meta``. With a ``seed``, the per-state action order
    is shuffled reproducibly instead of sorted.
    """
    if budget < 1:
        raise ValueError("budget must be a positive number of actions")
    rng = random.Random(seed) if seed is not None else None

    initial = sut.reset()
    states: dict[str, GuiState] = {initial.digest: initial}
    paths: dict[str, tuple[UiAction, ...]] = {initial.digest: ()}
    order = [initial.digest]
    transitions: dict[RipTransition, None] = {}
    diagnostics: list[dict] = []
    queue = deque([initial.digest])
    executed = replayed = resets = 0
    current = initial.digest

    while queue and executed < budget:
        d = queue.popleft()
        actions = sorted(sut.available_actions(states[d]))
        if rng is not None:
            rng.shuffle(actions)
        for action in actions:
            if executed >= budget:
                break
            if current != d:
                sut.reset()
                resets += 1
                for a in paths[d]:
                    sut.perform(a)
                    replayed += 1
                current = sut.observe().digest
                if current != d:
                    diagnostics.append({
                        "kind": "replay-divergence",
                        "path": [str(a) for a in paths[d]],
                        "expected": d,
                        "observed": current,
                    })
                    log.warning("replay to %s diverged (got %s)", d, current)
                    break
            after, events = sut.perform(action)
            executed += 1
            current = after.digest
            transitions.setdefault(RipTransition(d, action, events, after.digest))
            if after.digest not in states:
                states[after.digest] = after
                paths[after.digest] = paths[d] + (action,)
                order.append(after.digest)
                queue.append(after.digest)

    meta = {
        "budget": budget,
        "actions_executed": executed,
        "replay_actions": replayed,
        "resets": resets,
        "frontier_exhausted": not queue,
        "seed": seed,
        "volatile": sorted(initial.volatile),
        "diagnostics": diagnostics,
    }
    return RippingModel(
        states=tuple(states[d] for d in order),
        initial=initial.digest,
        transitions=tuple(transitions),
        meta=meta,
    )


def merge_states(model: RippingModel) -> RippingModel:
    """Collapse equal-digest states and identical transitions. Idempotent."""
    states: dict[str, GuiState] = {}
    for s in model.states:
        states.setdefault(s.digest, s)
    transitions = tuple(dict.fromkeys(model.transitions))
    return RippingModel(tuple(states.values()), model.initial, transitions, dict(model.meta))


def shortest_paths(model: RippingModel) -> dict[str, tuple[RipTransition, ...]]:
    """Shortest transition path from the initial state to every reachable state."""
    paths = {model.initial: ()}
    queue = deque([model.initial])
    while queue:
        d = queue.popleft()
        for t in model.outgoing(d):
            if t.target not in paths:
                paths[t.target] = paths[d] + (t,)
                queue.append(t.target)
    return paths
