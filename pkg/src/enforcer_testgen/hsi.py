"""Test-sequence derivation with the Harmonized State Identifiers (HSI) method.

The enforcer is assumed to have exactly as many states as its model, so no
extra-state expansion is done. Prefix pruning is deliberately skipped: a
short sequence may be feasible on the system under test while its extension
is not.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

from .automaton import (
    EnforcerModel,
    EventSymbol,
    InputNotEnabled,
    Transition,
    format_sequence,
    sequence_key,
    symbol_key,
)

log = logging.getLogger(__name__)

InputSeq = tuple[EventSymbol, ...]


@dataclass(frozen=True)
class Provenance:
    cover: InputSeq
    transition: tuple[str, str] | None  # (source state, trigger) covered by `cover`
    separator: InputSeq

    def to_json(self) -> dict:
        return {
            "cover": [str(s) for s in self.cover],
            "transition": list(self.transition) if self.transition else None,
            "separator": [str(s) for s in self.separator],
        }


@dataclass(frozen=True)
class TestSequence:
    """Enforcer input sequence to be realized by a concrete test."""

    __test__ = False  # not a pytest class

    events: InputSeq
    provenance: tuple[Provenance, ...] = ()
    alphabet: frozenset[str] = frozenset()

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.events)

    def __str__(self) -> str:
        return format_sequence(self.events)

    def to_json(self) -> dict:
        return {
            "events": [str(e) for e in self.events],
            "alphabet": sorted(self.alphabet),
            "provenance": [p.to_json() for p in self.provenance],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TestSequence":
        def seq(xs):
            return tuple(EventSymbol.parse(x) for x in xs)

        prov = tuple(
            Provenance(
                cover=seq(p["cover"]),
                transition=tuple(p["transition"]) if p.get("transition") else None,
                separator=seq(p["separator"]),
            )
            for p in doc.get("provenance", [])
        )
        return cls(seq(doc["events"]), prov, frozenset(doc.get("alphabet", [])))


@dataclass
class SeparatingFamilies:
    families: dict[str, tuple[InputSeq, ...]]
    indistinguishable: list[tuple[str, str]] = field(default_factory=list)

    def __getitem__(self, state: str) -> tuple[InputSeq, ...]:
        return self.families[state]


def access_sequences(model: EnforcerModel) -> dict[str, InputSeq]:
    """Shortest access sequence to every reachable state.

    BFS expanding triggers in sorted order, so among equally short sequences
    the lexicographically smallest wins.
    """
    access = {model.initial: ()}
    queue = deque([model.initial])
    while queue:
        s = queue.popleft()
        for t in model.outgoing(s):
            if t.target not in access:
                access[t.target] = access[s] + (t.trigger,)
                queue.append(t.target)
    return access


def unreachable_states(model: EnforcerModel) -> list[str]:
    reach = access_sequences(model)
    return [s for s in model.states if s not in reach]


def _cover_entries(model: EnforcerModel) -> list[tuple[InputSeq, Transition | None]]:
    access = access_sequences(model)
    lost = [s for s in model.states if s not in access]
    if lost:
        log.warning("unreachable states excluded from the transition cover: %s", lost)
    entries: list[tuple[InputSeq, Transition | None]] = [((), None)]
    for s in model.states:
        if s not in access:
            continue
        for t in model.outgoing(s):
            entries.append((access[s] + (t.trigger,), t))
    entries.sort(key=lambda e: sequence_key(e[0]))
    return entries


def transition_cover(model: EnforcerModel) -> list[InputSeq]:
    """P: ε plus, per reachable transition, its source's access sequence followed by its trigger."""
    return [seq for seq, _ in _cover_entries(model)]


def distinguishable(
    model: EnforcerModel, si: str, sj: str, bound: int | None = None
) -> InputSeq | None:
    """Shortest (then lexicographically least) separating sequence of two states.

    The sequence must be enabled from both states. Search depth is limited to
    ``bound`` (default: the number of states). Returns None when no
    separating sequence exists within the bound.
    """
    for s in (si, sj):
        if s not in model.states:
            raise ValueError(f"unknown state {s!r}")
    if si == sj:
        return None
    if bound is None:
        bound = len(model.states)

    # While the outputs so far agree, the pair of current states is all the
    # search needs to remember.
    seen = {(si, sj)}
    level: list[tuple[str, str, InputSeq]] = [(si, sj, ())]
    for _ in range(bound):
        nxt: list[tuple[str, str, InputSeq]] = []
        for a, b, path in level:
            ta = {t.trigger: t for t in model.outgoing(a)}
            tb = {t.trigger: t for t in model.outgoing(b)}
            for sym in sorted(ta.keys() & tb.keys(), key=symbol_key):
                x, y = ta[sym], tb[sym]
                if x.emissions != y.emissions:
                    return path + (sym,)
                pair = (x.target, y.target)
                if pair[0] != pair[1] and pair not in seen:
                    seen.add(pair)
                    nxt.append((pair[0], pair[1], path + (sym,)))
        if not nxt:
            break
        level = nxt
    return None


def _outputs(model: EnforcerModel, state: str, seq: Sequence[EventSymbol]):
    try:
        return model.run_from(state, seq)[0]
    except InputNotEnabled:
        return None


def separates(model: EnforcerModel, fam: SeparatingFamilies, si: str, sj: str) -> bool:
    """True when some β ∈ H_i and γ ∈ H_j share a prefix that yields different outputs."""
    for beta in fam.families.get(si, ()):
        for gamma in fam.families.get(sj, ()):
            n = 0
            while n < min(len(beta), len(gamma)) and beta[n] == gamma[n]:
                n += 1
            for k in range(1, n + 1):
                alpha = beta[:k]
                oi, oj = _outputs(model, si, alpha), _outputs(model, sj, alpha)
                if oi is not None and oj is not None and oi != oj:
                    return True
    return False


def _add_member(members: list[InputSeq], seq: InputSeq) -> None:
    if any(m[: len(seq)] == seq for m in members):
        return
    members[:] = [m for m in members if seq[: len(m)] != m]
    members.append(seq)


def separating_families(model: EnforcerModel) -> SeparatingFamilies:
    """Greedy per-pair construction of H_i for every reachable state.

    Each distinguishable pair contributes its shortest separating sequence to
    both families, unless the families already separate the pair. A member
    that is a prefix of another is absorbed by the longer one.
    """
    reachable = [s for s in model.states if s in access_sequences(model)]
    members: dict[str, list[InputSeq]] = {s: [] for s in reachable}
    indist: list[tuple[str, str]] = []
    for si, sj in combinations(reachable, 2):
        fam = SeparatingFamilies({s: tuple(m) for s, m in members.items()})
        if separates(model, fam, si, sj):
            continue
        gamma = distinguishable(model, si, sj)
        if gamma is None:
            indist.append((si, sj))
            continue
        _add_member(members[si], gamma)
        _add_member(members[sj], gamma)
    if indist:
        log.info("states not separable within bound: %s", indist)
    families = {s: tuple(sorted(m, key=sequence_key)) for s, m in members.items()}
    return SeparatingFamilies(families, indist)


def generate_sequences(model: EnforcerModel) -> list[TestSequence]:
    """Concatenate the transition cover with the separating family of each reached state.

    A cover sequence whose state has an empty family is kept as is (except ε).
    Exact duplicates are merged; prefixes are kept.
    """
    fam = separating_families(model)
    alphabet = model.alphabet_names
    found: dict[InputSeq, list[Provenance]] = {}
    for p, t in _cover_entries(model):
        _, reached = model.run_from(model.initial, p)
        transition = (t.source, str(t.trigger)) if t else None
        hs = fam.families.get(reached, ()) or ((),)
        for h in hs:
            seq = p + h
            if not seq:
                continue
            found.setdefault(seq, []).append(Provenance(p, transition, h))
    ordered = sorted(found, key=sequence_key)
    return [TestSequence(seq, tuple(found[seq]), alphabet) for seq in ordered]
