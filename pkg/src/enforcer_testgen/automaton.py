"""Partial input/output automata describing enforcers, and an interpreter for them.

Symbols are written as ``<name>_req`` (intercepted request, an input) or
``<name>_api`` (emitted call, an output). A symbol without either suffix is
an internal action. Internal actions are triggers exactly like inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

REQUEST = "request"
API = "api"
INTERNAL = "internal"

_SUFFIXES = {REQUEST: "_req", API: "_api", INTERNAL: ""}


class ModelError(ValueError):
    """Raised when a model document is malformed or violates an invariant."""


class InputNotEnabled(Exception):
    """The enforcer received an event for which the current state has no transition."""

    def __init__(self, state: str, symbol: "EventSymbol", position: int | None = None):
        self.state = state
        self.symbol = symbol
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"input not enabled: {symbol} in state {state!r}{where}")


@dataclass(frozen=True, order=True)
class EventSymbol:
    name: str
    kind: str = REQUEST

    def __post_init__(self):
        if not self.name or self.name != self.name.strip():
            raise ModelError(f"invalid symbol name {self.name!r}")
        if self.kind not in _SUFFIXES:
            raise ModelError(f"unknown symbol kind {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "EventSymbol":
        text = text.strip()
        for kind in (REQUEST, API):
            suffix = _SUFFIXES[kind]
            if text.endswith(suffix) and len(text) > len(suffix):
                return cls(text[: -len(suffix)], kind)
        return cls(text, INTERNAL)

    def __str__(self) -> str:
        return self.name + _SUFFIXES[self.kind]

    def as_kind(self, kind: str) -> "EventSymbol":
        return EventSymbol(self.name, kind)


def req(name: str) -> EventSymbol:
    return EventSymbol(name, REQUEST)


def api(name: str) -> EventSymbol:
    return EventSymbol(name, API)


def symbol_key(sym: EventSymbol) -> str:
    return str(sym)


def sequence_key(seq: Sequence[EventSymbol]) -> tuple:
    """Canonical ordering key: shorter first, then lexicographic by symbol text."""
    return (len(seq), tuple(str(s) for s in seq))


def format_sequence(seq: Sequence[EventSymbol]) -> str:
    return " ".join(str(s) for s in seq) if seq else "ε"


@dataclass(frozen=True)
class Transition:
    source: str
    trigger: EventSymbol
    emissions: tuple[EventSymbol, ...]
    target: str

    def __str__(self) -> str:
        out = ";".join(f"{e}!" for e in self.emissions)
        return f"{self.source} --{self.trigger}?/{out}--> {self.target}"


@dataclass(frozen=True)
class EnforcerModel:
    states: tuple[str, ...]
    initial: str
    inputs: frozenset[EventSymbol]
    outputs: frozenset[EventSymbol]
    transitions: tuple[Transition, ...]
    internals: frozenset[EventSymbol] = frozenset()
    _delta: Mapping[tuple[str, EventSymbol], Transition] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self):
        ordered = tuple(sorted(self.transitions, key=lambda t: (t.source, symbol_key(t.trigger))))
        object.__setattr__(self, "transitions", ordered)
        _validate(self)
        delta = {(t.source, t.trigger): t for t in self.transitions}
        object.__setattr__(self, "_delta", delta)

    @property
    def triggers(self) -> frozenset[EventSymbol]:
        return self.inputs | self.internals

    @property
    def alphabet_names(self) -> frozenset[str]:
        """Event names the enforcer intercepts, without kind suffix."""
        return frozenset(s.name for s in self.triggers)

    def transition(self, state: str, symbol: EventSymbol) -> Transition | None:
        return self._delta.get((state, symbol))

    def outgoing(self, state: str) -> list[Transition]:
        if state not in self.states:
            raise ModelError(f"unknown state {state!r}")
        return sorted(
            (t for t in self.transitions if t.source == state),
            key=lambda t: symbol_key(t.trigger),
        )

    def run_from(
        self, state: str, inputs: Iterable[EventSymbol]
    ) -> tuple[tuple[EventSymbol, ...], str]:
        """Feed ``inputs`` from ``state``; return (concatenated emissions, final state)."""
        out: list[EventSymbol] = []
        for pos, sym in enumerate(inputs):
            t = self._delta.get((state, sym))
            if t is None:
                raise InputNotEnabled(state, sym, pos)
            out.extend(t.emissions)
            state = t.target
        return tuple(out), state

    def to_document(self) -> dict:
        return {
            "states": list(self.states),
            "initial": self.initial,
            "inputs": sorted(str(s) for s in self.inputs),
            "outputs": sorted(str(s) for s in self.outputs),
            "internals": sorted(str(s) for s in self.internals),
            "transitions": [
                {
                    "from": t.source,
                    "trigger": str(t.trigger),
                    "emissions": [str(e) for e in t.emissions],
                    "to": t.target,
                }
                for t in self.transitions
            ],
        }


def _validate(m: EnforcerModel) -> None:
    if len(set(m.states)) != len(m.states):
        raise ModelError("duplicate state identifiers")
    if m.initial not in m.states:
        raise ModelError(f"initial state {m.initial!r} is not a declared state")
    for s in m.inputs:
        if s.kind != REQUEST:
            raise ModelError(f"input {s} must be a request (_req) symbol")
    for s in m.outputs:
        if s.kind != API:
            raise ModelError(f"output {s} must be an api (_api) symbol")
    if m.inputs & m.internals:
        raise ModelError("a symbol cannot be both input and internal")
    seen: set[tuple[str, EventSymbol]] = set()
    triggers = m.inputs | m.internals
    for t in m.transitions:
        for st in (t.source, t.target):
            if st not in m.states:
                raise ModelError(f"transition references unknown state {st!r}")
        if t.trigger not in triggers:
            raise ModelError(f"transition references unknown trigger {t.trigger}")
        for e in t.emissions:
            if e not in m.outputs:
                raise ModelError(f"transition emits unknown output {e}")
        key = (t.source, t.trigger)
        if key in seen:
            raise ModelError(
                f"nondeterministic input: state {t.source!r} has several transitions on {t.trigger}"
            )
        seen.add(key)


_REQUIRED = ("states", "initial", "inputs", "outputs", "transitions")


def load_model(document: Mapping) -> EnforcerModel:
    """Build a validated EnforcerModel from a parsed model document."""
    if not isinstance(document, Mapping):
        raise ModelError("model document must be a JSON object")
    missing = [k for k in _REQUIRED if k not in document]
    if missing:
        raise ModelError(f"model document is missing fields: {', '.join(missing)}")

    def symbols(key: str) -> frozenset[EventSymbol]:
        raw = document.get(key, [])
        if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
            raise ModelError(f"field {key!r} must be a list of strings")
        syms = [EventSymbol.parse(x) for x in raw]
        if len(set(syms)) != len(syms):
            raise ModelError(f"duplicate symbols in {key!r}")
        return frozenset(syms)

    states = document["states"]
    if not isinstance(states, list) or not all(isinstance(s, str) and s for s in states):
        raise ModelError("field 'states' must be a list of non-empty strings")
    if not isinstance(document["initial"], str):
        raise ModelError("field 'initial' must be a string")

    transitions = []
    raw_ts = document["transitions"]
    if not isinstance(raw_ts, list):
        raise ModelError("field 'transitions' must be a list")
    for i, raw in enumerate(raw_ts):
        try:
            transitions.append(
                Transition(
                    source=raw["from"],
                    trigger=EventSymbol.parse(raw["trigger"]),
                    emissions=tuple(EventSymbol.parse(e) for e in raw.get("emissions", [])),
                    target=raw["to"],
                )
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ModelError(f"transition #{i} is malformed: {exc!r}") from exc

    return EnforcerModel(
        states=tuple(states),
        initial=document["initial"],
        inputs=symbols("inputs"),
        outputs=symbols("outputs"),
        internals=symbols("internals"),
        transitions=tuple(transitions),
    )


def load_model_file(path: str | Path) -> EnforcerModel:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: not valid JSON ({exc})") from exc
    return load_model(doc)


BUILTIN_MODELS = ("camera_release",)


def builtin_model(name: str) -> EnforcerModel:
    if name not in BUILTIN_MODELS:
        raise ModelError(f"unknown built-in model {name!r}")
    text = resources.files(__package__).joinpath("data", f"{name}.json").read_text("utf-8")
    return load_model(json.loads(text))


def resolve_model(ref: str | Path) -> EnforcerModel:
    """Load a model from a file path, or by built-in name."""
    if str(ref) in BUILTIN_MODELS and not Path(ref).exists():
        return builtin_model(str(ref))
    return load_model_file(ref)


def camera_release_enforcer() -> EnforcerModel:
    """The two-state enforcer that releases a held camera when the activity pauses."""
    return builtin_model("camera_release")


class EnforcerState:
    """Mutable cursor over a model; records every consumed input and its emissions."""

    def __init__(self, model: EnforcerModel, current: str | None = None):
        self.model = model
        self.current = model.initial if current is None else current
        if self.current not in model.states:
            raise ModelError(f"unknown state {self.current!r}")
        self.trace: list[tuple[EventSymbol, tuple[EventSymbol, ...]]] = []

    def step(self, symbol: EventSymbol) -> tuple[EventSymbol, ...]:
        t = self.model.transition(self.current, symbol)
        if t is None:
            raise InputNotEnabled(self.current, symbol, len(self.trace))
        self.current = t.target
        self.trace.append((symbol, t.emissions))
        return t.emissions

    def reset(self) -> None:
        self.current = self.model.initial
        self.trace.clear()


def step(st: EnforcerState, symbol: EventSymbol) -> tuple[EventSymbol, ...]:
    return st.step(symbol)


def run(model: EnforcerModel, inputs: Sequence[EventSymbol]) -> tuple[EventSymbol, ...]:
    """λ(s0, inputs): the concatenated emissions of the model."""
    return model.run_from(model.initial, inputs)[0]


def enabled_inputs(model: EnforcerModel, state: str) -> frozenset[EventSymbol]:
    return frozenset(t.trigger for t in model.outgoing(state))


def is_enabled(model: EnforcerModel, state: str, inputs: Sequence[EventSymbol]) -> bool:
    try:
        model.run_from(state, inputs)
    except InputNotEnabled:
        return False
    return True
