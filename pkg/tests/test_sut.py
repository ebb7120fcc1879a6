import json

import pytest

from enforcer_testgen.automaton import InputNotEnabled, load_model
from enforcer_testgen.sut import (
    ActionUnavailable,
    AlphabetMismatch,
    FixtureError,
    GuiState,
    UiAction,
    View,
    attach_enforcer,
    camera_release_policy,
    evaluate_policy,
    fixture,
    fixture_document,
    list_fixtures,
)
from oracles import exhaustive_traces

APP_ICON = UiAction("touch", "app_icon")
BACK = UiAction("key_event", "BACK")
SETTINGS = UiAction("touch", "settings_button")
HOME = UiAction("key_event", "HOME")


def identity_enforcer(names):
    return load_model({
        "states": ["s0"], "initial": "s0",
        "inputs": [f"{n}_req" for n in names],
        "outputs": [f"{n}_api" for n in names],
        "transitions": [
            {"from": "s0", "trigger": f"{n}_req", "emissions": [f"{n}_api"], "to": "s0"} for n in names
        ],
    })


def suppress_open_enforcer(camera_enf):
    doc = camera_enf.to_document()
    for t in doc["transitions"]:
        if t["trigger"] == "camera.open_req":
            t["emissions"] = []
    return load_model(doc)


def test_gui_state_digest_ignores_order_and_volatile():
    a = GuiState([View.make("x", {"text": "1", "ts": "10"}), View.make("y")], volatile={"ts"})
    b = GuiState([View.make("y"), View.make("x", {"ts": "99", "text": "1"})], volatile={"ts"})
    c = GuiState([View.make("x", {"text": "2"}), View.make("y")])
    assert a == b and a.digest == b.digest
    assert a != c
    with pytest.raises(FixtureError):
        GuiState([View.make("x"), View.make("x")])


def test_available_actions_follow_view_properties():
    drv = fixture("foocam_c")
    launcher = drv.reset()
    acts = drv.available_actions(launcher)
    assert APP_ICON in acts and UiAction("long_touch", "app_icon") in acts
    assert BACK in acts and HOME in acts
    assert not any(a.target == "launcher_title" for a in acts)
    drv.perform(APP_ICON)
    drv.perform(SETTINGS)
    acts = drv.available_actions()
    assert UiAction("set_text", "shots_field", "hello") in acts
    assert UiAction("scroll", "settings_list", "down") in acts


def test_perform_rejects_unavailable_action():
    drv = fixture("foocam_c")
    drv.reset()
    with pytest.raises(ActionUnavailable):
        drv.perform(UiAction("touch", "shutter"))


@pytest.mark.parametrize(
    "name, expected",
    [("foocam_c", ("camera.release", "activity.onPause")), ("foocam_f", ("activity.onPause",))],
)
def test_back_from_main(name, expected):
    drv = fixture(name)
    drv.reset()
    main, events = drv.perform(APP_ICON)
    assert events == ("camera.open",)
    assert main.view("preview") is not None
    launcher, events = drv.perform(BACK)
    assert events == expected
    assert launcher.view("app_icon") is not None


def test_reset_is_deterministic():
    drv = fixture("foocam_c")
    first = drv.reset().digest
    drv.perform(APP_ICON)
    assert drv.reset().digest == first
    assert fixture("foocam_c").reset().digest == first


@pytest.mark.parametrize("name", ["foocam_c", "foocam_f"])
def test_perform_is_deterministic(name):
    # every (state, action) pair reached within depth 4 yields one outcome
    outcomes = {}
    drv = fixture(name)
    drv.reset()

    def dfs(depth):
        if depth == 0:
            return
        snap = drv.snapshot()
        here = drv.observe()
        for a in drv.available_actions():
            after, events = drv.perform(a)
            key = (here.digest, a)
            assert outcomes.setdefault(key, (after.digest, events)) == (after.digest, events)
            dfs(depth - 1)
            drv.restore(snap)

    dfs(4)
    assert outcomes


def test_enforcer_inserts_release_on_faulty_app(camera_enf):
    enf = attach_enforcer(fixture("foocam_f"), camera_enf)
    enf.reset()
    _, events = enf.perform(APP_ICON)
    assert events == ("camera.open",)
    _, events = enf.perform(BACK)
    assert events == ("camera.release", "activity.onPause")
    # the inserted release really freed the camera
    assert "camera" not in enf.inner.flags


def test_enforcer_is_transparent_on_correct_app(camera_enf):
    actions = [APP_ICON, UiAction("touch", "shutter"), SETTINGS, BACK, BACK]
    plain, enforced = fixture("foocam_c"), attach_enforcer(fixture("foocam_c"), camera_enf)
    plain.reset()
    enforced.reset()
    for a in actions:
        assert plain.perform(a) == enforced.perform(a)


def test_identity_enforcer_is_neutral_on_all_walks():
    names = ["camera.open", "camera.release", "activity.onPause"]
    for fx in ("foocam_c", "foocam_f"):
        plain = list(exhaustive_traces(lambda: fixture(fx), 5))
        enforced = list(
            exhaustive_traces(lambda: attach_enforcer(fixture(fx), identity_enforcer(names)), 5)
        )
        assert plain == enforced


def test_transparency_on_correct_app_depth_8(camera_enf):
    plain = exhaustive_traces(lambda: fixture("foocam_c"), 8)
    enforced = exhaustive_traces(lambda: attach_enforcer(fixture("foocam_c"), camera_enf), 8)
    n = 0
    for a, b in zip(plain, enforced):
        assert a == b
        n += 1
    assert n > 1000


def test_suppressing_open_hides_preview(camera_enf):
    enf = attach_enforcer(fixture("foocam_c"), suppress_open_enforcer(camera_enf))
    enf.reset()
    main, events = enf.perform(APP_ICON)
    assert events == ()
    assert main.view("preview") is None


def test_alphabet_mismatch(camera_enf):
    doc = camera_enf.to_document()
    doc["inputs"].append("gps.start_req")
    doc["transitions"].append({"from": "s0", "trigger": "gps.start_req", "emissions": [], "to": "s0"})
    with pytest.raises(AlphabetMismatch):
        attach_enforcer(fixture("foocam_c"), load_model(doc))


def test_enforcer_input_not_enabled_surfaces(camera_enf):
    # an enforcer that only accepts open once, on an app that can open twice
    doc = {
        "states": ["a", "b"], "initial": "a",
        "inputs": ["camera.open_req"], "outputs": ["camera.open_api"],
        "transitions": [{"from": "a", "trigger": "camera.open_req", "emissions": ["camera.open_api"], "to": "b"}],
    }
    enf = attach_enforcer(fixture("foocam_c"), load_model(doc))
    enf.reset()
    enf.perform(APP_ICON)
    enf.perform(SETTINGS)
    with pytest.raises(InputNotEnabled):
        enf.perform(BACK)


@pytest.mark.parametrize(
    "trace, expected",
    [
        (["camera.open", "camera.release", "activity.onPause"], True),
        ([], True),
        (["camera.open", "activity.onPause"], False),
        (["activity.onPause", "camera.open"], True),
    ],
)
def test_camera_release_policy(trace, expected):
    assert evaluate_policy(camera_release_policy, trace) is expected


def test_fixture_registry(tmp_path):
    assert [n for n, _ in list_fixtures()] == ["foocam_c", "foocam_f"]
    with pytest.raises(FixtureError):
        fixture("nope")
    p = tmp_path / "app.json"
    p.write_text(json.dumps({
        "screens": [
            {"id": "a", "views": [{"id": "go", "properties": {"clickable": "true"}}]},
            {"id": "b", "views": [{"id": "lamp", "properties": {}, "when": "on"}]},
        ],
        "initial": "a",
        "edges": [{"from": "a", "action": {"kind": "touch", "target": "go"}, "events": ["light.on"], "to": "b"}],
        "handlers": [{"event": "light.on", "effect": {"set": ["on"]}}],
    }), encoding="utf-8")
    drv = fixture(f"scripted:{p}")
    drv.reset()
    state, events = drv.perform(UiAction("touch", "go"))
    assert events == ("light.on",)
    assert state.view("lamp") is not None
    p.write_text('{"screens": []}', encoding="utf-8")
    with pytest.raises(FixtureError):
        fixture(f"scripted:{p}")


def test_builtin_documents_differ_only_on_pause():
    c, f = fixture_document("foocam_c"), fixture_document("foocam_f")
    diff = [(a, b) for a, b in zip(c["edges"], f["edges"]) if a != b]
    assert len(diff) == 2
    assert all(b["events"] == ["activity.onPause"] for _, b in diff)
