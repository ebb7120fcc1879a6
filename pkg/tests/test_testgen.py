import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from enforcer_testgen.automaton import req
from enforcer_testgen.hsi import TestSequence, generate_sequences
from enforcer_testgen.ripping import RippingModel, RipTransition, rip
from enforcer_testgen.sut import GuiState, UiAction, View, fixture
from enforcer_testgen.testgen import (
    ACTUAL,
    COVERED,
    INFEASIBLE,
    TRANSPARENT,
    CoverageReport,
    attach_oracle,
    generate_event_paths,
    generate_suite,
    realizable_prefix,
    run_test_case,
)
from oracles import ALPHABET, brute_event_paths, random_ripping_model, random_walk_label, simulate_labels
from test_sut import identity_enforcer

CAMERA = frozenset({"camera.open", "camera.release", "activity.onPause"})
APP_ICON = UiAction("touch", "app_icon")
BACK = UiAction("key_event", "BACK")
HOME = UiAction("key_event", "HOME")
SETTINGS = UiAction("touch", "settings_button")


def seq(*names, alphabet=CAMERA):
    return TestSequence(tuple(req(n) for n in names), (), frozenset(alphabet))


def screen(name):
    return GuiState([View.make(name, {"clickable": "true"})])


@pytest.fixture(scope="module")
def excerpt():
    # launcher -> intro screen -> main, then BACK releases and pauses
    launcher, intro, main = screen("launcher"), screen("intro"), screen("main")
    v1, v2 = UiAction("touch", "v1"), UiAction("touch", "v2")
    ts = (
        RipTransition(launcher.digest, v1, (), intro.digest),
        RipTransition(intro.digest, v2, ("camera.open",), main.digest),
        RipTransition(main.digest, BACK, ("camera.release", "activity.onPause"), launcher.digest),
    )
    return RippingModel((launcher, intro, main), launcher.digest, ts)


@pytest.fixture(scope="module")
def model_c():
    return rip(fixture("foocam_c"), 750)


@pytest.fixture(scope="module")
def model_f():
    return rip(fixture("foocam_f"), 750)


def test_excerpt_first_candidate(excerpt):
    paths = generate_event_paths(excerpt, seq("camera.open", "camera.release", "activity.onPause"))
    assert paths[0] == (UiAction("touch", "v1"), UiAction("touch", "v2"), BACK)


def test_unreachable_label_gives_nothing(excerpt):
    assert generate_event_paths(excerpt, seq("camera.release")) == []
    assert generate_event_paths(excerpt, seq("camera.open", "activity.onPause")) == []
    assert generate_event_paths(excerpt, seq()) == []
    with pytest.raises(ValueError):
        generate_event_paths(excerpt, seq("camera.open"), n=0)


def test_pause_alone_infeasible_on_faulty_model(model_f):
    # every pause on the faulty app follows an open
    assert generate_event_paths(model_f, seq("activity.onPause")) == []
    j, blocked = realizable_prefix(model_f, seq("activity.onPause"))
    assert j == 0 and ("camera.open",) in blocked


def test_paths_are_ordered_and_bounded(model_c):
    paths = generate_event_paths(model_c, seq("camera.open", "camera.release", "activity.onPause"), n=10)
    assert paths and len(paths) <= 10
    keys = [(len(p), [a.sort_key() for a in p]) for p in paths]
    assert keys == sorted(keys)
    assert len(set(paths)) == len(paths)
    assert all(len(p) <= 2 * len(model_c.digests) for p in paths)


def test_events_outside_alphabet_are_ignored(excerpt):
    # with only the pause monitored, open and release are invisible
    target = seq("activity.onPause", alphabet={"activity.onPause"})
    assert generate_event_paths(excerpt, target)[0] == (UiAction("touch", "v1"), UiAction("touch", "v2"), BACK)


def test_run_test_case_on_both_apps():
    ts = seq("camera.open", "activity.onPause")
    f = run_test_case(fixture("foocam_f"), [APP_ICON, BACK], ts)
    c = run_test_case(fixture("foocam_c"), [APP_ICON, BACK], ts)
    assert f.covered and f.aborted is None
    assert not c.covered
    assert c.monitored(CAMERA) == [("camera.open",), ("camera.release", "activity.onPause")]


def test_run_test_case_static_and_abort():
    r = run_test_case(fixture("foocam_c"), [UiAction("long_touch", "app_icon")], seq("camera.open"))
    assert not r.covered and r.steps[0].events == ()
    r = run_test_case(fixture("foocam_c"), [UiAction("touch", "shutter")], seq("camera.open"))
    assert r.aborted and not r.covered
    with pytest.raises(ValueError):
        run_test_case(fixture("foocam_c"), [], seq("camera.open"))


def test_attach_oracle_kinds(camera_enf):
    tc = attach_oracle([APP_ICON, SETTINGS, HOME], seq("camera.open", "camera.release", "activity.onPause"), camera_enf)
    assert tc.oracle == TRANSPARENT and tc.divergence is None

    tc = attach_oracle(
        [APP_ICON, BACK], seq("camera.open", "activity.onPause"), camera_enf,
        [("camera.open",), ("activity.onPause",)],
    )
    assert tc.oracle == ACTUAL and tc.divergence == 2
    assert tc.expected_output == ("camera.open", "camera.release", "activity.onPause")
    assert tc.intervention_action == 1

    ident = identity_enforcer(sorted(CAMERA))
    tc = attach_oracle([APP_ICON, BACK], seq("camera.open", "activity.onPause"), ident)
    assert tc.oracle == TRANSPARENT

    with pytest.raises(ValueError):
        attach_oracle([APP_ICON], seq("camera.release"), camera_enf)


def test_suite_on_faulty_app(camera_enf, model_f):
    seqs = generate_sequences(camera_enf)
    report = generate_suite(lambda: fixture("foocam_f"), model_f, camera_enf, seqs)
    by = {str(e.sequence): e for e in report.entries}
    assert len(by) == 5
    hit = by["camera.open_req activity.onPause_req"]
    assert hit.status == COVERED
    assert hit.case.actions == (APP_ICON, BACK)
    assert hit.case.oracle == ACTUAL and hit.case.divergence == 2
    rel = by["camera.open_req camera.release_req activity.onPause_req"]
    assert rel.status == COVERED and rel.case.oracle == TRANSPARENT
    assert rel.case.actions == (APP_ICON, SETTINGS, HOME)
    assert report.counts() == {"covered": 2, "infeasible": 3, "not_found": 0}
    for e in report.entries:
        if e.status == INFEASIBLE:
            assert e.reason


def test_suite_on_correct_app(camera_enf, model_c):
    report = generate_suite(fixture("foocam_c"), model_c, camera_enf, generate_sequences(camera_enf))
    covered = report.covered()
    assert [str(e.sequence) for e in covered] == ["camera.open_req camera.release_req activity.onPause_req"]
    assert covered[0].case.actions == (APP_ICON, BACK)
    assert report.counts()["infeasible"] == 4


def test_empty_suite(camera_enf, model_c):
    report = generate_suite(fixture("foocam_c"), model_c, camera_enf, [])
    assert report.entries == [] and report.counts() == {"covered": 0, "infeasible": 0, "not_found": 0}


def test_report_round_trip(camera_enf, model_f):
    report = generate_suite(lambda: fixture("foocam_f"), model_f, camera_enf, generate_sequences(camera_enf))
    again = CoverageReport.from_json(report.to_json())
    assert again.to_json() == report.to_json()


def _random_case(seed):
    rng = random.Random(seed)
    model = random_ripping_model(rng)
    if rng.random() < 0.5:
        target = random_walk_label(rng, model, rng.randint(1, 5))[:4]
    else:
        target = tuple(rng.choice(ALPHABET) for _ in range(rng.randint(1, 4)))
    return model, target


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**7))
def test_paths_emit_exactly_the_target(seed):
    model, target = _random_case(seed)
    ts = seq(*target, alphabet=ALPHABET)
    for p in generate_event_paths(model, ts, n=5):
        assert simulate_labels(model, p, ALPHABET) == target
        # the final action is the one completing the target
        assert simulate_labels(model, p[:-1], ALPHABET) != target


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**7))
def test_paths_match_brute_force(seed):
    model, target = _random_case(seed)
    ts = seq(*target, alphabet=ALPHABET)
    got = generate_event_paths(model, ts, n=10, max_length=8)
    want = brute_event_paths(model, target, ALPHABET, 8)
    assert got == want[:10]
