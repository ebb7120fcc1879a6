"""Simulated systems under test: GUI states, UI actions, the monitored event tap,
and enforcer attachment.

A driver reports, for every UI action, the internal events it caused, in
execution order. That report is the only place internal events surface.
Events have side effects on hidden app state (flags), and some views are
rendered only while a flag holds, so suppressing or inserting an event can
change what the GUI shows.
"""

from __future__ import annotations

import hashlib
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .automaton import (
    EnforcerModel,
    EnforcerState,
    EventSymbol,
)

TOUCH = "touch"
LONG_TOUCH = "long_touch"
SET_TEXT = "set_text"
KEY_EVENT = "key_event"
SCROLL = "scroll"
ACTION_KINDS = (TOUCH, LONG_TOUCH, SET_TEXT, KEY_EVENT, SCROLL)

NAV_KEYS = ("BACK", "HOME")
DEFAULT_TEXT = "hello"
SCROLL_DIRECTION = "down"


class FixtureError(ValueError):
    pass


class ActionUnavailable(Exception):
    def __init__(self, action: "UiAction", state: "GuiState"):
        self.action = action
        self.state = state
        super().__init__(f"action {action} is not available in state {state.digest}")


class AlphabetMismatch(ValueError):
    pass


@dataclass(frozen=True)
class View:
    id: str
    properties: tuple[tuple[str, str], ...] = ()

    @classmethod
    def make(cls, id: str, properties: Mapping[str, str] | None = None) -> "View":
        return cls(id, tuple((str(k), str(v)) for k, v in (properties or {}).items()))

    def get(self, key: str, default: str | None = None) -> str | None:
        for k, v in self.properties:
            if k == key:
                return v
        return default

    def to_json(self) -> dict:
        return {"id": self.id, "properties": dict(self.properties)}


class GuiState:
    """A set of views. Identity is a digest over views and their non-volatile properties."""

    __slots__ = ("views", "volatile", "digest")

    def __init__(self, views: Iterable[View], volatile: Iterable[str] = ()):
        views = tuple(sorted(views, key=lambda v: v.id))
        ids = [v.id for v in views]
        if len(set(ids)) != len(ids):
            raise FixtureError(f"duplicate view ids in state: {ids}")
        self.views = views
        self.volatile = frozenset(volatile)
        self.digest = _digest(views, self.volatile)

    def comparable(self, view: View) -> dict[str, str]:
        return {k: v for k, v in sorted(view.properties) if k not in self.volatile}

    def view(self, vid: str) -> View | None:
        for v in self.views:
            if v.id == vid:
                return v
        return None

    def __eq__(self, other):
        return isinstance(other, GuiState) and other.digest == self.digest

    def __hash__(self):
        return hash(self.digest)

    def __repr__(self):
        return f"GuiState({self.digest}, views={[v.id for v in self.views]})"

    def to_json(self) -> dict:
        return {"digest": self.digest, "views": [v.to_json() for v in self.views]}

    @classmethod
    def from_json(cls, doc: Mapping, volatile: Iterable[str] = ()) -> "GuiState":
        return cls([View.make(v["id"], v.get("properties")) for v in doc["views"]], volatile)


def _digest(views: Sequence[View], volatile: frozenset[str]) -> str:
    canon = [
        [v.id, sorted((k, val) for k, val in v.properties if k not in volatile)]
        for v in views
    ]
    blob = json.dumps(canon, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class UiAction:
    kind: str
    target: str
    payload: str | None = None

    def __post_init__(self):
        if self.kind not in ACTION_KINDS:
            raise FixtureError(f"unknown action kind {self.kind!r}")

    def sort_key(self) -> tuple[str, str, str]:
        return (self.kind, self.target, self.payload or "")

    def __lt__(self, other: "UiAction") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        if self.payload is None:
            return f"{self.kind}({self.target})"
        return f"{self.kind}({self.target},{self.payload!r})"

    def to_json(self) -> dict:
        return {"kind": self.kind, "target": self.target, "payload": self.payload}

    @classmethod
    def from_json(cls, doc: Mapping) -> "UiAction":
        kind = doc["kind"]
        payload = doc.get("payload")
        if payload is None and kind == SET_TEXT:
            payload = DEFAULT_TEXT
        if payload is None and kind == SCROLL:
            payload = SCROLL_DIRECTION
        return cls(kind, doc["target"], payload)


def actions_for(state: GuiState) -> list[UiAction]:
    """UI actions a ripper may fire on ``state``, in stable order."""
    return list(_actions_for(state))


@lru_cache(maxsize=4096)
def _actions_for(state: GuiState) -> tuple[UiAction, ...]:
    acts = []
    for v in state.views:
        if v.get("clickable") == "true":
            acts.append(UiAction(TOUCH, v.id))
            acts.append(UiAction(LONG_TOUCH, v.id))
        if v.get("editable") == "true":
            acts.append(UiAction(SET_TEXT, v.id, DEFAULT_TEXT))
        if v.get("scrollable") == "true":
            acts.append(UiAction(SCROLL, v.id, SCROLL_DIRECTION))
    acts.extend(UiAction(KEY_EVENT, k) for k in NAV_KEYS)
    return tuple(sorted(acts))


Router = Callable[[Sequence[str]], list[str]]


class SutDriver(ABC):
    """Behavioral interface of a system under test.

    Subclasses implement the screen logic (``_trigger``) and the effect of
    each internal event (``_apply_effect``). ``perform`` routes the requested
    events through ``router`` before their effects take place; an attached
    enforcer installs itself there.
    """

    router: Router | None = None
    event_names: frozenset[str] = frozenset()

    @abstractmethod
    def reset(self) -> GuiState: ...

    @abstractmethod
    def observe(self) -> GuiState: ...

    @abstractmethod
    def _trigger(self, action: UiAction) -> list[str]:
        """Advance the screen for ``action``; return the internal events the app requests."""

    @abstractmethod
    def _apply_effect(self, event: str) -> None: ...

    def available_actions(self, state: GuiState | None = None) -> list[UiAction]:
        return actions_for(self.observe() if state is None else state)

    def perform(self, action: UiAction) -> tuple[GuiState, tuple[str, ...]]:
        current = self.observe()
        if action not in self.available_actions(current):
            raise ActionUnavailable(action, current)
        requested = self._trigger(action)
        emitted = self.router(requested) if self.router else list(requested)
        for ev in emitted:
            self._apply_effect(ev)
        return self.observe(), tuple(emitted)


# --- screen-graph apps -----------------------------------------------------


@dataclass(frozen=True)
class ViewSpec:
    view: View
    when: str | None = None  # "flag" or "!flag"

    def shown(self, flags: frozenset[str]) -> bool:
        if self.when is None:
            return True
        if self.when.startswith("!"):
            return self.when[1:] not in flags
        return self.when in flags


@dataclass(frozen=True)
class Edge:
    source: str
    action: UiAction
    events: tuple[str, ...]
    target: str


@dataclass
class ScreenGraph:
    screens: dict[str, tuple[ViewSpec, ...]]
    initial: str
    edges: dict[tuple[str, UiAction], Edge]
    effects: dict[str, tuple[frozenset[str], frozenset[str]]]  # event -> (set, clear)
    flags: frozenset[str] = frozenset()
    volatile: frozenset[str] = frozenset()
    name: str = "scripted"
    _rendered: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def event_names(self) -> frozenset[str]:
        names = {e for edge in self.edges.values() for e in edge.events}
        return frozenset(names | set(self.effects))

    def render(self, screen: str, flags: frozenset[str]) -> GuiState:
        key = (screen, flags)
        state = self._rendered.get(key)
        if state is None:
            state = GuiState(
                [vs.view for vs in self.screens[screen] if vs.shown(flags)], self.volatile
            )
            self._rendered[key] = state
        return state


def load_screen_graph(doc: Mapping, name: str = "scripted") -> ScreenGraph:
    """Parse a scripted-fixture document (screens, initial, edges, handlers)."""
    try:
        screens: dict[str, tuple[ViewSpec, ...]] = {}
        for sc in doc["screens"]:
            specs = tuple(
                ViewSpec(View.make(v["id"], v.get("properties")), v.get("when"))
                for v in sc["views"]
            )
            if sc["id"] in screens:
                raise FixtureError(f"duplicate screen {sc['id']!r}")
            screens[sc["id"]] = specs
        initial = doc["initial"]
        if initial not in screens:
            raise FixtureError(f"initial screen {initial!r} is not defined")
        edges: dict[tuple[str, UiAction], Edge] = {}
        for raw in doc.get("edges", []):
            edge = Edge(
                raw["from"], UiAction.from_json(raw["action"]), tuple(raw.get("events", [])), raw["to"]
            )
            for sc in (edge.source, edge.target):
                if sc not in screens:
                    raise FixtureError(f"edge references unknown screen {sc!r}")
            key = (edge.source, edge.action)
            if key in edges:
                raise FixtureError(f"duplicate edge for {edge.source!r} / {edge.action}")
            edges[key] = edge
        effects = {}
        for h in doc.get("handlers", []):
            eff = h.get("effect", {})
            effects[h["event"]] = (frozenset(eff.get("set", [])), frozenset(eff.get("clear", [])))
    except (KeyError, TypeError) as exc:
        raise FixtureError(f"malformed screen-graph document: {exc!r}") from exc
    return ScreenGraph(
        screens=screens,
        initial=initial,
        edges=edges,
        effects=effects,
        flags=frozenset(doc.get("flags", [])),
        volatile=frozenset(doc.get("volatile", [])),
        name=name,
    )


class ScreenGraphSut(SutDriver):
    """Deterministic app driven by a screen graph; actions without an edge are no-ops."""

    def __init__(self, graph: ScreenGraph):
        self.graph = graph
        self.event_names = graph.event_names
        self.screen = graph.initial
        self.flags = graph.flags

    def reset(self) -> GuiState:
        self.screen = self.graph.initial
        self.flags = self.graph.flags
        return self.observe()

    def observe(self) -> GuiState:
        return self.graph.render(self.screen, self.flags)

    def _trigger(self, action: UiAction) -> list[str]:
        edge = self.graph.edges.get((self.screen, action))
        if edge is None:
            return []
        self.screen = edge.target
        return list(edge.events)

    def _apply_effect(self, event: str) -> None:
        eff = self.graph.effects.get(event)
        if eff:
            add, remove = eff
            self.flags = (self.flags | add) - remove

    def snapshot(self):
        return (self.screen, self.flags)

    def restore(self, snap) -> None:
        self.screen, self.flags = snap


# --- enforcer attachment ---------------------------------------------------


class EnforcedSut(SutDriver):
    """A driver whose monitored events pass through an enforcer first.

    Events whose name is in the enforcer's alphabet are fed to it as
    requests; its emissions replace them downstream and are the events whose
    effects take place. Other events pass through untouched.
    """

    def __init__(self, inner: SutDriver, model: EnforcerModel):
        missing = model.alphabet_names - inner.event_names
        if missing:
            raise AlphabetMismatch(
                f"enforcer events unknown to the system under test: {sorted(missing)}"
            )
        self.inner = inner
        self.model = model
        self.enforcer = EnforcerState(model)
        self.event_names = inner.event_names
        self._by_name: dict[str, EventSymbol] = {s.name: s for s in model.triggers}
        inner.router = self._route

    def _route(self, events: Sequence[str]) -> list[str]:
        out: list[str] = []
        for ev in events:
            sym = self._by_name.get(ev)
            if sym is None:
                out.append(ev)
            else:
                out.extend(e.name for e in self.enforcer.step(sym))
        return out

    def reset(self) -> GuiState:
        self.enforcer.reset()
        return self.inner.reset()

    def observe(self) -> GuiState:
        return self.inner.observe()

    def available_actions(self, state: GuiState | None = None) -> list[UiAction]:
        return self.inner.available_actions(state)

    def perform(self, action: UiAction) -> tuple[GuiState, tuple[str, ...]]:
        return self.inner.perform(action)

    def snapshot(self):
        return (self.inner.snapshot(), self.enforcer.current, len(self.enforcer.trace))

    def restore(self, snap) -> None:
        inner, current, n = snap
        self.inner.restore(inner)
        self.enforcer.current = current
        del self.enforcer.trace[n:]

    def _trigger(self, action):  # pragma: no cover - delegated to inner
        raise NotImplementedError

    def _apply_effect(self, event):  # pragma: no cover - delegated to inner
        raise NotImplementedError


def attach_enforcer(sut: SutDriver, model: EnforcerModel) -> EnforcedSut:
    return EnforcedSut(sut, model)


# --- policies --------------------------------------------------------------


@dataclass(frozen=True)
class TracePredicate:
    name: str
    evaluate: Callable[[Sequence[str]], bool] = field(compare=False)

    def __call__(self, trace) -> bool:
        return evaluate_policy(self, trace)


def _names(trace) -> list[str]:
    return [e.name if isinstance(e, EventSymbol) else str(e) for e in trace]


def evaluate_policy(pred: TracePredicate, trace) -> bool:
    return bool(pred.evaluate(_names(trace)))


def _camera_released_before_pause(trace: Sequence[str]) -> bool:
    held = False
    for ev in trace:
        if ev == "camera.open":
            held = True
        elif ev == "camera.release":
            held = False
        elif ev == "activity.onPause" and held:
            return False
    return True


camera_release_policy = TracePredicate("camera-released-on-pause", _camera_released_before_pause)


# --- built-in fixtures -----------------------------------------------------


def _foocam_document(release_on_pause: bool) -> dict:
    def button(vid, text):
        return {"id": vid, "properties": {"class": "Button", "clickable": "true", "text": text}}

    def label(vid, text):
        return {"id": vid, "properties": {"class": "TextView", "text": text}}

    def settings_views(field_text):
        return [
            label("settings_title", "Settings"),
            {
                "id": "shots_field",
                "properties": {"class": "EditText", "editable": "true", "text": field_text},
            },
            {
                "id": "settings_list",
                "properties": {"class": "ListView", "scrollable": "true"},
            },
        ]

    pause = ["camera.release", "activity.onPause"] if release_on_pause else ["activity.onPause"]

    def key(k):
        return {"kind": KEY_EVENT, "target": k}

    edges = [
        {"from": "launcher", "action": {"kind": TOUCH, "target": "app_icon"},
         "events": ["camera.open"], "to": "main"},
        {"from": "main", "action": key("BACK"), "events": pause, "to": "launcher"},
        {"from": "main", "action": key("HOME"), "events": pause, "to": "launcher"},
        {"from": "main", "action": {"kind": TOUCH, "target": "shutter"},
         "events": ["camera.takePicture"], "to": "main"},
        # the settings page stops the preview and gives the camera back
        {"from": "main", "action": {"kind": TOUCH, "target": "settings_button"},
         "events": ["camera.release"], "to": "settings"},
    ]
    for sc in ("settings", "settings_text"):
        edges += [
            {"from": sc, "action": key("BACK"), "events": ["camera.open"], "to": "main"},
            {"from": sc, "action": key("HOME"), "events": ["activity.onPause"], "to": "launcher"},
            {"from": sc, "action": {"kind": SET_TEXT, "target": "shots_field"},
             "events": [], "to": "settings_text"},
        ]
    return {
        "screens": [
            {"id": "launcher", "views": [
                label("launcher_title", "Home"),
                {"id": "app_icon",
                 "properties": {"class": "ImageView", "clickable": "true", "text": "fooCam"}},
            ]},
            {"id": "main", "views": [
                label("main_title", "fooCam"),
                button("shutter", "Shoot"),
                button("settings_button", "Settings"),
                {"id": "preview", "properties": {"class": "SurfaceView"}, "when": "camera"},
            ]},
            {"id": "settings", "views": settings_views("")},
            {"id": "settings_text", "views": settings_views(DEFAULT_TEXT)},
        ],
        "initial": "launcher",
        "edges": edges,
        "handlers": [
            {"event": "camera.open", "effect": {"set": ["camera"]}},
            {"event": "camera.release", "effect": {"clear": ["camera"]}},
            {"event": "activity.onPause", "effect": {}},
        ],
    }


BUILTIN_FIXTURES: dict[str, Callable[[], dict]] = {
    "foocam_c": lambda: _foocam_document(release_on_pause=True),
    "foocam_f": lambda: _foocam_document(release_on_pause=False),
}

FIXTURE_POLICIES: dict[str, tuple[TracePredicate, ...]] = {
    "foocam_c": (camera_release_policy,),
    "foocam_f": (camera_release_policy,),
}

_FIXTURE_HELP = {
    "foocam_c": "camera app that releases the camera when paused",
    "foocam_f": "faulty camera app that keeps the camera when paused",
}


def list_fixtures() -> list[tuple[str, str]]:
    return [(n, _FIXTURE_HELP[n]) for n in BUILTIN_FIXTURES]


def fixture_document(name: str) -> dict:
    if name in BUILTIN_FIXTURES:
        return BUILTIN_FIXTURES[name]()
    if name.startswith("scripted:"):
        path = Path(name[len("scripted:"):])
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise FixtureError(f"cannot read scripted fixture {path}: {exc}") from exc
    raise FixtureError(f"unknown fixture {name!r}")


def fixture(name: str) -> ScreenGraphSut:
    """A fresh driver for a built-in fixture or a ``scripted:<file>`` screen graph."""
    return ScreenGraphSut(load_screen_graph(fixture_document(name), name))


def fixture_factory(name: str) -> Callable[[], ScreenGraphSut]:
    graph = load_screen_graph(fixture_document(name), name)
    return lambda: ScreenGraphSut(graph)


def fixture_policies(name: str) -> tuple[TracePredicate, ...]:
    return FIXTURE_POLICIES.get(name, ())
