"""Concrete test generation: turn enforcer input sequences into UI action sequences.

For each target sequence, candidate action paths are searched in the ripping
model, replayed on the app, and the first one that really produces the
sequence is kept and annotated with a differential oracle.
"""

from __future__ import annotations

import heapq
import itertools
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

from .automaton import EnforcerModel, EventSymbol, InputNotEnabled, run
from .hsi import TestSequence
from .ripping import RippingModel
from .sut import ActionUnavailable, GuiState, SutDriver, UiAction

TRANSPARENT = "transparent"
ACTUAL = "actual"

COVERED = "covered"
INFEASIBLE = "infeasible"
NOT_FOUND = "not_found"

DEFAULT_CANDIDATES = 10

ActionPath = tuple[UiAction, ...]
AppLike = Union[SutDriver, Callable[[], SutDriver]]


def _alphabet(ts: TestSequence, alphabet: Iterable[str] | None) -> frozenset[str]:
    if alphabet is not None:
        return frozenset(alphabet)
    return ts.alphabet or frozenset(ts.names)


def _edges(model: RippingModel, alphabet: frozenset[str]):
    out: dict[str, list[tuple[UiAction, tuple[str, ...], str]]] = {d: [] for d in model.digests}
    for t in model.transitions:
        label = tuple(e for e in t.events if e in alphabet)
        out[t.source].append((t.action, label, t.target))
    for lst in out.values():
        lst.sort(key=lambda e: (e[0].sort_key(), e[1], e[2]))
    return out


def generate_event_paths(
    model: RippingModel,
    ts: TestSequence,
    n: int = DEFAULT_CANDIDATES,
    alphabet: Iterable[str] | None = None,
    max_length: int | None = None,
) -> list[ActionPath]:
    """Up to ``n`` shortest action paths whose monitored events are exactly ``ts``.

    Events outside ``alphabet`` (default: the sequence's enforcer alphabet)
    are ignored. A path starts at the initial state and ends with the action
    that emits the last event of ``ts``; no other alphabet events may occur.
    Paths are ordered by length, then lexicographically by action. Path
    length is capped at ``max_length`` (default twice the number of states).
    """
    if n < 1:
        raise ValueError("n must be positive")
    target = ts.names
    k = len(target)
    if k == 0:
        return []
    alpha = _alphabet(ts, alphabet)
    if max_length is None:
        max_length = 2 * len(model.digests)
    edges = _edges(model, alpha)

    tie = itertools.count()
    heap = [(0, (), next(tie), (), model.initial, 0)]
    pops: Counter = Counter()
    seen: set = set()
    results: list[ActionPath] = []
    while heap and len(results) < n:
        length, keys, _, actions, d, j = heapq.heappop(heap)
        if (actions, d, j) in seen:
            continue
        seen.add((actions, d, j))
        if j == k:
            if actions not in results:
                results.append(actions)
            continue
        if pops[d, j] >= n:
            continue
        pops[d, j] += 1
        if length >= max_length:
            continue
        for action, label, dst in edges[d]:
            nj = j + len(label)
            if label and target[j:nj] != label:
                continue
            heapq.heappush(
                heap,
                (length + 1, keys + (action.sort_key(),), next(tie), actions + (action,), dst, nj),
            )
    return results


def realizable_prefix(
    model: RippingModel, ts: TestSequence, alphabet: Iterable[str] | None = None
) -> tuple[int, list[tuple[str, ...]]]:
    """Longest prefix of ``ts`` some path emits exactly, and the event chunks seen instead of its continuation."""
    target = ts.names
    edges = _edges(model, _alphabet(ts, alphabet))
    start = (model.initial, 0)
    reached = {start}
    queue = deque([start])
    while queue:
        d, j = queue.popleft()
        if j == len(target):
            continue
        for _, label, dst in edges[d]:
            nj = j + len(label)
            if label and target[j:nj] != label:
                continue
            if (dst, nj) not in reached:
                reached.add((dst, nj))
                queue.append((dst, nj))
    best = max(j for _, j in reached)
    blocked: set[tuple[str, ...]] = set()
    if best < len(target):
        for d, j in reached:
            if j != best:
                continue
            for _, label, _ in edges[d]:
                if label and target[j : j + len(label)] != label:
                    blocked.add(label)
    return best, sorted(blocked)


@dataclass
class ReplayStep:
    action: UiAction
    state: GuiState
    events: tuple[str, ...]

    def to_json(self) -> dict:
        return {"action": str(self.action), "state": self.state.digest, "events": list(self.events)}


@dataclass
class ReplayResult:
    covered: bool
    initial: GuiState
    steps: list[ReplayStep]
    aborted: str | None = None

    def monitored(self, alphabet: frozenset[str]) -> list[tuple[str, ...]]:
        return [tuple(e for e in s.events if e in alphabet) for s in self.steps]

    def to_json(self) -> dict:
        return {
            "covered": self.covered,
            "initial": self.initial.digest,
            "steps": [s.to_json() for s in self.steps],
            "aborted": self.aborted,
        }


def replay(sut: SutDriver, actions: Sequence[UiAction]) -> tuple[GuiState, list[ReplayStep], str | None]:
    """Reset ``sut`` and perform ``actions``, stopping at the first unavailable one."""
    initial = sut.reset()
    steps: list[ReplayStep] = []
    for i, a in enumerate(actions):
        try:
            state, events = sut.perform(a)
        except ActionUnavailable:
            return initial, steps, f"action #{i + 1} {a} unavailable in state {sut.observe().digest}"
        steps.append(ReplayStep(a, state, events))
    return initial, steps, None


def run_test_case(
    sut: SutDriver,
    actions: Sequence[UiAction],
    ts: TestSequence,
    alphabet: Iterable[str] | None = None,
) -> ReplayResult:
    if not actions:
        raise ValueError("a test case needs at least one action")
    alpha = _alphabet(ts, alphabet)
    initial, steps, aborted = replay(sut, actions)
    result = ReplayResult(False, initial, steps, aborted)
    if aborted is None:
        produced = tuple(e for chunk in result.monitored(alpha) for e in chunk)
        result.covered = produced == ts.names
    return result


@dataclass
class ConcreteTestCase:
    actions: ActionPath
    target: TestSequence
    oracle: str
    divergence: int | None = None  # 1-based index into target events, for ACTUAL
    event_slices: tuple[tuple[str, ...], ...] = ()
    expected_output: tuple[str, ...] = ()

    @property
    def intervention_action(self) -> int | None:
        """0-based index of the action whose events contain the diverging input."""
        if self.divergence is None:
            return None
        seen = 0
        for i, chunk in enumerate(self.event_slices):
            seen += len(chunk)
            if seen >= self.divergence:
                return i
        return len(self.actions) - 1

    def to_json(self) -> dict:
        return {
            "actions": [a.to_json() for a in self.actions],
            "oracle": self.oracle,
            "divergence_index": self.divergence,
            "event_slices": [list(c) for c in self.event_slices],
            "expected_output": list(self.expected_output),
        }

    @classmethod
    def from_json(cls, doc: dict, target: TestSequence) -> "ConcreteTestCase":
        return cls(
            actions=tuple(UiAction.from_json(a) for a in doc["actions"]),
            target=target,
            oracle=doc["oracle"],
            divergence=doc.get("divergence_index"),
            event_slices=tuple(tuple(c) for c in doc.get("event_slices", [])),
            expected_output=tuple(doc.get("expected_output", [])),
        )


def classify(ts: Sequence[EventSymbol], model: EnforcerModel) -> tuple[str, int | None, tuple[str, ...]]:
    """Oracle kind for an input sequence: transparent, or actual with its divergence index."""
    out = run(model, ts)
    ins = [e.name for e in ts]
    outs = [e.name for e in out]
    if ins == outs:
        return TRANSPARENT, None, tuple(outs)
    v = next((i for i, (a, b) in enumerate(zip(ins, outs)) if a != b), min(len(ins), len(outs)))
    # outputs that only append past the last input point at that last input
    return ACTUAL, min(v + 1, len(ins)), tuple(outs)


def attach_oracle(
    actions: Sequence[UiAction],
    ts: TestSequence,
    model: EnforcerModel,
    event_slices: Sequence[Sequence[str]] | None = None,
) -> ConcreteTestCase:
    try:
        oracle, v, outs = classify(ts.events, model)
    except InputNotEnabled as exc:
        raise ValueError(f"test sequence {ts} is not enabled in the enforcer model: {exc}") from exc
    slices = tuple(tuple(c) for c in event_slices) if event_slices is not None else ()
    return ConcreteTestCase(tuple(actions), ts, oracle, v, slices, outs)


@dataclass
class CoverageEntry:
    sequence: TestSequence
    status: str
    case: ConcreteTestCase | None = None
    reason: str | None = None
    candidates_tried: int = 0
    replay: ReplayResult | None = None

    def to_json(self) -> dict:
        doc: dict = {"sequence": [str(e) for e in self.sequence.events], "status": self.status}
        if self.case is not None:
            doc.update(self.case.to_json())
        if self.reason is not None:
            doc["reason"] = self.reason
        doc["candidates_tried"] = self.candidates_tried
        doc["target"] = self.sequence.to_json()
        return doc


@dataclass
class CoverageReport:
    entries: list[CoverageEntry] = field(default_factory=list)

    def covered(self) -> list[CoverageEntry]:
        return [e for e in self.entries if e.status == COVERED]

    def counts(self) -> dict[str, int]:
        c = Counter(e.status for e in self.entries)
        return {s: c.get(s, 0) for s in (COVERED, INFEASIBLE, NOT_FOUND)}

    def to_json(self) -> dict:
        return {"counts": self.counts(), "sequences": [e.to_json() for e in self.entries]}

    @classmethod
    def from_json(cls, doc: dict) -> "CoverageReport":
        entries = []
        for raw in doc["sequences"]:
            ts = TestSequence.from_json(raw["target"])
            case = ConcreteTestCase.from_json(raw, ts) if raw["status"] == COVERED else None
            entries.append(
                CoverageEntry(ts, raw["status"], case, raw.get("reason"), raw.get("candidates_tried", 0))
            )
        return cls(entries)


def _fmt(names: Sequence[str]) -> str:
    return " ".join(f"{n}_req" for n in names)


def explain_infeasible(model: RippingModel, ts: TestSequence, max_length: int) -> str:
    j, blocked = realizable_prefix(model, ts)
    names = ts.names
    if j == len(names):
        return f"realizable only by paths longer than {max_length} actions"
    if j == 0:
        msg = f"no explored path emits {names[0]}_req as the first monitored event"
    else:
        msg = f"after {_fmt(names[:j])} no explored path continues with {names[j]}_req"
    if blocked:
        seen = "; ".join(_fmt(b) for b in blocked)
        msg += f" (observed instead: {seen})"
    return msg


def _fresh(app: AppLike) -> SutDriver:
    return app if isinstance(app, SutDriver) else app()


def generate_suite(
    app: AppLike,
    model: RippingModel,
    enf: EnforcerModel,
    seqs: Sequence[TestSequence],
    n: int = DEFAULT_CANDIDATES,
    max_length: int | None = None,
) -> CoverageReport:
    """Find, validate and annotate one concrete test per target sequence.

    Candidates are replayed on the app without the enforcer; the first that
    reproduces the sequence is kept.
    """
    if max_length is None:
        max_length = 2 * len(model.digests)
    report = CoverageReport()
    alpha = enf.alphabet_names
    for ts in seqs:
        if not ts.alphabet:
            ts = TestSequence(ts.events, ts.provenance, alpha)
        candidates = generate_event_paths(model, ts, n, max_length=max_length)
        if not candidates:
            reason = explain_infeasible(model, ts, max_length)
            report.entries.append(CoverageEntry(ts, INFEASIBLE, reason=reason))
            continue
        entry = None
        for tried, actions in enumerate(candidates, 1):
            result = run_test_case(_fresh(app), actions, ts)
            if result.covered:
                case = attach_oracle(actions, ts, enf, result.monitored(ts.alphabet))
                entry = CoverageEntry(ts, COVERED, case, candidates_tried=tried, replay=result)
                break
        if entry is None:
            entry = CoverageEntry(
                ts,
                NOT_FOUND,
                reason=f"none of {len(candidates)} candidate paths reproduced the sequence on the app",
                candidates_tried=len(candidates),
            )
        report.entries.append(entry)
    return report
