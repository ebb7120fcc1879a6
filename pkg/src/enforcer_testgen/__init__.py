"""Test generation for software enforcers modeled as input/output automata."""

from .automaton import (
    EnforcerModel,
    EnforcerState,
    EventSymbol,
    InputNotEnabled,
    ModelError,
    Transition,
    camera_release_enforcer,
    enabled_inputs,
    load_model,
    load_model_file,
    run,
    step,
)
from .diffrun import Verdict, compare_states, execute_differential, run_suite
from .hsi import (
    SeparatingFamilies,
    TestSequence,
    distinguishable,
    generate_sequences,
    separating_families,
    transition_cover,
)
from .ripping import RippingModel, merge_states, rip
from .sut import (
    GuiState,
    SutDriver,
    TracePredicate,
    UiAction,
    View,
    attach_enforcer,
    camera_release_policy,
    evaluate_policy,
    fixture,
)
from .testgen import (
    ConcreteTestCase,
    CoverageReport,
    attach_oracle,
    generate_event_paths,
    generate_suite,
    run_test_case,
)

__version__ = "0.1.0"
