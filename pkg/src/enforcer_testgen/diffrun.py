"""Differential execution of concrete tests with and without the enforcer."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .automaton import EnforcerModel, InputNotEnabled
from .sut import GuiState, SutDriver, TracePredicate, attach_enforcer, evaluate_policy
from .testgen import ACTUAL, TRANSPARENT, ConcreteTestCase, CoverageReport, ReplayStep, replay

PASS = "pass"
FAIL = "fail"
WARNING = "warning"


class InfrastructureError(RuntimeError):
    """The test could not be executed at all; no verdict is possible."""


@dataclass
class StateDiff:
    added: list[str]  # views present only in the second state
    removed: list[str]  # views present only in the first state
    changed: dict[str, dict[str, tuple[str | None, str | None]]]

    def to_json(self) -> dict:
        return {
            "added_views": self.added,
            "removed_views": self.removed,
            "changed_properties": {
                v: {p: list(pair) for p, pair in props.items()} for v, props in self.changed.items()
            },
        }


def compare_states(a: GuiState, b: GuiState) -> StateDiff | None:
    if a.digest == b.digest:
        return None
    va = {v.id: v for v in a.views}
    vb = {v.id: v for v in b.views}
    changed: dict[str, dict[str, tuple[str | None, str | None]]] = {}
    for vid in sorted(va.keys() & vb.keys()):
        pa, pb = a.comparable(va[vid]), b.comparable(vb[vid])
        diff = {k: (pa.get(k), pb.get(k)) for k in sorted(pa.keys() | pb.keys()) if pa.get(k) != pb.get(k)}
        if diff:
            changed[vid] = diff
    return StateDiff(sorted(vb.keys() - va.keys()), sorted(va.keys() - vb.keys()), changed)


def _trace_json(steps: Sequence[ReplayStep]) -> list[dict]:
    return [s.to_json() for s in steps]


@dataclass
class Verdict:
    test: ConcreteTestCase
    outcome: str
    evidence: dict
    plain: list[ReplayStep] = field(default_factory=list)
    enforced: list[ReplayStep] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "sequence": [str(e) for e in self.test.target.events],
            "oracle": self.test.oracle,
            "divergence_index": self.test.divergence,
            "outcome": self.outcome,
            "evidence": self.evidence,
            "plain_trace": _trace_json(self.plain),
            "enforced_trace": _trace_json(self.enforced),
        }


def _events(steps: Sequence[ReplayStep]) -> list[str]:
    return [e for s in steps for e in s.events]


def _first_difference(plain, enforced, indices) -> tuple[int, StateDiff] | None:
    for i in indices:
        d = compare_states(plain[i].state, enforced[i].state)
        if d is not None:
            return i, d
    return None


def execute_differential(
    tc: ConcreteTestCase, sut_factory: Callable[[], SutDriver], enf: EnforcerModel
) -> Verdict:
    """Run ``tc`` on a plain and an enforced driver and apply the test's oracle.

    Transparent tests pass iff every state matches. Actual-enforcement tests
    fail if a state differs before the intervening action, pass if one
    differs at or after it, and otherwise warn when the enforcer changed the
    event stream without any visible effect.
    """
    _, plain, plain_abort = replay(sut_factory(), tc.actions)
    if plain_abort is not None:
        raise InfrastructureError(f"test does not replay on the app without enforcer: {plain_abort}")

    enforced_sut = attach_enforcer(sut_factory(), enf)
    try:
        _, enforced, enf_abort = replay(enforced_sut, tc.actions)
    except InputNotEnabled as exc:
        return Verdict(tc, FAIL, {
            "reason": "enforcer received an event its model does not enable",
            "detail": str(exc),
            "enforcer_trace": [
                [str(i), [str(o) for o in out]] for i, out in enforced_sut.enforcer.trace
            ],
        }, plain, [])
    if enf_abort is not None:
        return Verdict(tc, FAIL, {
            "reason": "test aborted only with the enforcer in place",
            "detail": enf_abort,
            "action_index": len(enforced) + 1,
        }, plain, enforced)

    n = len(tc.actions)
    plain_events, enforced_events = _events(plain), _events(enforced)
    streams = {
        "plain_events": plain_events,
        "enforced_events": enforced_events,
        "event_streams_differ": plain_events != enforced_events,
    }

    def fail(where: tuple[int, StateDiff], reason: str) -> Verdict:
        i, d = where
        return Verdict(tc, FAIL, {
            "reason": reason,
            "action_index": i + 1,
            "action": str(tc.actions[i]),
            "state_diff": d.to_json(),
            **streams,
        }, plain, enforced)

    if tc.oracle == TRANSPARENT:
        hit = _first_difference(plain, enforced, range(n))
        if hit is not None:
            return fail(hit, "enforcer is intrusive on a sequence it should leave unaltered")
        return Verdict(tc, PASS, {"reason": "identical state trajectories", **streams}, plain, enforced)

    if tc.oracle != ACTUAL:
        raise ValueError(f"unknown oracle {tc.oracle!r}")
    av = tc.intervention_action
    hit = _first_difference(plain, enforced, range(av))
    if hit is not None:
        return fail(hit, "enforcer is unexpectedly intrusive before its intervention point")
    post = _first_difference(plain, enforced, range(av, n))
    if post is not None:
        i, d = post
        return Verdict(tc, PASS, {
            "reason": "intervention has a visible effect",
            "intervention_action": av + 1,
            "action_index": i + 1,
            "state_diff": d.to_json(),
            **streams,
        }, plain, enforced)
    if streams["event_streams_differ"]:
        return Verdict(tc, WARNING, {
            "reason": "no post-divergence difference",
            "intervention_action": av + 1,
            "gui_states_equal": True,
            **streams,
        }, plain, enforced)
    return Verdict(tc, FAIL, {
        "reason": "enforcer did not intervene although its model requires it",
        "intervention_action": av + 1,
        "gui_states_equal": True,
        **streams,
    }, plain, enforced)


@dataclass
class SuiteResult:
    verdicts: list[Verdict] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    policies: list[dict] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        c = Counter(v.outcome for v in self.verdicts)
        return {PASS: c[PASS], FAIL: c[FAIL], WARNING: c[WARNING], "error": len(self.errors)}

    def exit_code(self, strict_warnings: bool = False) -> int:
        counts = self.counts()
        bad = counts[FAIL] + counts["error"] + (counts[WARNING] if strict_warnings else 0)
        return 1 if bad else 0

    def to_json(self) -> dict:
        return {
            "counts": self.counts(),
            "verdicts": [v.to_json() for v in self.verdicts],
            "errors": self.errors,
            "policies": self.policies,
        }


def run_suite(
    suite: CoverageReport,
    sut_factory: Callable[[], SutDriver],
    enf: EnforcerModel,
    predicates: Sequence[TracePredicate] = (),
) -> SuiteResult:
    """Execute every covered test differentially; errors are recorded per test."""
    result = SuiteResult()
    for entry in suite.covered():
        tc = entry.case
        try:
            verdict = execute_differential(tc, sut_factory, enf)
        except InfrastructureError as exc:
            result.errors.append({"sequence": [str(e) for e in tc.target.events], "error": str(exc)})
            continue
        result.verdicts.append(verdict)
        for pred in predicates:
            for side, steps in (("plain", verdict.plain), ("enforced", verdict.enforced)):
                if side == "enforced" and not steps:
                    continue
                result.policies.append({
                    "sequence": [str(e) for e in tc.target.events],
                    "policy": pred.name,
                    "side": side,
                    "satisfied": evaluate_policy(pred, _events(steps)),
                })
    return result
