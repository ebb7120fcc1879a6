"""Command-line front end: sequences, fixtures, rip, gen, run, pipeline, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import hsi
from .automaton import EnforcerModel, ModelError, format_sequence, resolve_model
from .diffrun import run_suite
from .report import render_report
from .ripping import load_ripping_model, rip
from .sut import FixtureError, fixture_factory, fixture_policies, list_fixtures
from .testgen import DEFAULT_CANDIDATES, CoverageReport, generate_suite

log = logging.getLogger("enforcer_testgen")

DEFAULT_BUDGET = 750


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


class ConfigError(ValueError):
    pass


def write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def sequences_document(model: EnforcerModel) -> dict:
    fam = hsi.separating_families(model)
    return {
        "transition_cover": [[str(s) for s in p] for p in hsi.transition_cover(model)],
        "separating_families": {
            st: [[str(s) for s in h] for h in fam.families[st]] for st in sorted(fam.families)
        },
        "indistinguishable": [list(p) for p in fam.indistinguishable],
        "unreachable_states": hsi.unreachable_states(model),
        "sequences": [ts.to_json() for ts in hsi.generate_sequences(model)],
    }


def load_sequences(doc: dict) -> list[hsi.TestSequence]:
    return [hsi.TestSequence.from_json(s) for s in doc["sequences"]]


@dataclass
class PipelineConfig:
    enforcer: str
    fixture: str
    budget: int = DEFAULT_BUDGET
    n: int = DEFAULT_CANDIDATES
    seed: int | None = None
    out_dir: Path = Path("t4e-out")
    strict_warnings: bool = False

    def validate(self) -> tuple[EnforcerModel, object]:
        if self.budget < 1:
            raise ConfigError("rip budget must be at least 1 action")
        if self.n < 1:
            raise ConfigError("candidate count must be at least 1")
        try:
            model = resolve_model(self.enforcer)
        except (OSError, ModelError) as exc:
            raise ConfigError(f"enforcer model: {exc}") from exc
        try:
            factory = fixture_factory(self.fixture)
        except FixtureError as exc:
            raise ConfigError(f"fixture: {exc}") from exc
        return model, factory


def pipeline(cfg: PipelineConfig) -> tuple[int, dict]:
    """Run all four stages, writing each artifact as soon as its stage completes."""
    model, factory = cfg.validate()
    out = Path(cfg.out_dir)

    def stage(name, fn):
        try:
            return fn()
        except Exception as exc:
            raise PipelineError(name, f"{type(exc).__name__}: {exc}") from exc

    seq_doc = stage("sequences", lambda: sequences_document(model))
    write_json(out / "sequences.json", seq_doc)
    seqs = load_sequences(seq_doc)

    ripped = stage("rip", lambda: rip(factory(), cfg.budget, cfg.seed))
    write_json(out / "model.json", ripped.to_json())

    suite = stage("gen", lambda: generate_suite(factory, ripped, model, seqs, cfg.n))
    suite_doc = suite.to_json()
    write_json(out / "suite.json", suite_doc)

    result = stage("run", lambda: run_suite(suite, factory, model, fixture_policies(cfg.fixture)))
    verdict_doc = result.to_json()
    write_json(out / "verdicts.json", verdict_doc)

    summary = render_report(seq_doc, suite_doc, verdict_doc)
    counts = suite.counts()
    vc = result.counts()
    summary += (
        f"\n{len(seqs)} sequences: {counts['covered']} covered, {counts['infeasible']} infeasible, "
        f"{counts['not_found']} not found. Verdicts: {vc['pass']} pass, {vc['fail']} fail, "
        f"{vc['warning']} warning, {vc['error']} error.\n"
    )
    (out / "summary.md").write_text(summary, encoding="utf-8")
    return result.exit_code(cfg.strict_warnings), {
        "sequences": seq_doc,
        "model": ripped.to_json(),
        "suite": suite_doc,
        "verdicts": verdict_doc,
        "summary": summary,
    }


# --- argument handling -----------------------------------------------------


def _global(args, name, default=None):
    return getattr(args, name, default)


def _out_path(args, explicit: str | None, default_name: str) -> Path:
    if explicit:
        return Path(explicit)
    return Path(_global(args, "out_dir") or ".") / default_name


def _cmd_sequences(args) -> int:
    model = resolve_model(args.model)
    doc = sequences_document(model)
    if _global(args, "format", "text") == "json":
        print(json.dumps(doc, indent=2, ensure_ascii=False))
        return 0
    print("transition cover:")
    for p in hsi.transition_cover(model):
        print("  " + format_sequence(p))
    print("separating families:")
    fam = hsi.separating_families(model)
    for st in sorted(fam.families):
        members = ", ".join(format_sequence(h) for h in fam.families[st]) or "(empty)"
        print(f"  H[{st}] = {{{members}}}")
    print("test sequences:")
    for ts in hsi.generate_sequences(model):
        prov = "; ".join(
            f"P={format_sequence(p.cover)} H={format_sequence(p.separator)}" for p in ts.provenance
        )
        print(f"  {ts}    [{prov}]")
    return 0


def _cmd_fixtures(args) -> int:
    for name, desc in list_fixtures():
        print(f"{name}\t{desc}")
    print("scripted:<file>\tscreen-graph JSON document")
    return 0


def _cmd_rip(args) -> int:
    if args.budget < 1:
        raise ConfigError("budget must be at least 1")
    factory = fixture_factory(args.fixture)
    model = rip(factory(), args.budget, _global(args, "seed"))
    path = _out_path(args, args.out, "model.json")
    write_json(path, model.to_json())
    print(f"{len(model.digests)} states, {len(model.transitions)} transitions -> {path}")
    return 0


def _cmd_gen(args) -> int:
    enf = resolve_model(args.enforcer)
    ripped = load_ripping_model(args.model)
    if args.sequences:
        seqs = load_sequences(read_json(args.sequences))
    else:
        seqs = hsi.generate_sequences(enf)
    suite = generate_suite(fixture_factory(args.fixture), ripped, enf, seqs, args.n)
    path = _out_path(args, args.out, "suite.json")
    write_json(path, suite.to_json())
    c = suite.counts()
    print(f"{c['covered']} covered, {c['infeasible']} infeasible, {c['not_found']} not found -> {path}")
    return 0


def _cmd_run(args) -> int:
    enf = resolve_model(args.enforcer)
    suite = CoverageReport.from_json(read_json(args.suite))
    result = run_suite(suite, fixture_factory(args.fixture), enf, fixture_policies(args.fixture))
    path = _out_path(args, args.out, "verdicts.json")
    write_json(path, result.to_json())
    c = result.counts()
    print(f"{c['pass']} pass, {c['fail']} fail, {c['warning']} warning, {c['error']} error -> {path}")
    return result.exit_code(args.strict_warnings)


def _cmd_pipeline(args) -> int:
    cfg = PipelineConfig(
        enforcer=args.enforcer,
        fixture=args.fixture,
        budget=args.budget,
        n=args.n,
        seed=_global(args, "seed"),
        out_dir=Path(_global(args, "out_dir") or "t4e-out"),
        strict_warnings=args.strict_warnings,
    )
    code, docs = pipeline(cfg)
    print(docs["summary"], end="")
    return code


def _cmd_report(args) -> int:
    text = render_report(read_json(args.sequences), read_json(args.suite), read_json(args.verdicts))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="directory for output artifacts")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="shuffle seed for ripping")
    common.add_argument("--format", choices=("json", "text"), default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="enforcer-testgen", parents=[common], description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sequences", parents=[common], help="derive HSI test sequences")
    s.add_argument("--model", required=True, help="enforcer model JSON (or built-in name)")
    s.set_defaults(func=_cmd_sequences)

    s = sub.add_parser("fixtures", parents=[common], help="list built-in fixtures")
    s.add_argument("action", nargs="?", choices=("list",), default="list")
    s.set_defaults(func=_cmd_fixtures)

    s = sub.add_parser("rip", parents=[common], help="explore a fixture and save its GUI model")
    s.add_argument("--fixture", required=True)
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_rip)

    s = sub.add_parser("gen", parents=[common], help="generate concrete tests")
    s.add_argument("--model", required=True, help="ripping model JSON")
    s.add_argument("--enforcer", required=True)
    s.add_argument("--fixture", required=True)
    s.add_argument("--sequences", help="sequences JSON; derived from the enforcer if omitted")
    s.add_argument("--n", type=int, default=DEFAULT_CANDIDATES)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_gen)

    s = sub.add_parser("run", parents=[common], help="execute a suite with and without the enforcer")
    s.add_argument("--suite", required=True)
    s.add_argument("--fixture", required=True)
    s.add_argument("--enforcer", required=True)
    s.add_argument("--out")
    s.add_argument("--strict-warnings", action="store_true")
    s.set_defaults(func=_cmd_run)

    s = sub.add_parser("pipeline", parents=[common], help="run all stages")
    s.add_argument("--enforcer", required=True)
    s.add_argument("--fixture", required=True)
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.add_argument("--n", type=int, default=DEFAULT_CANDIDATES)
    s.add_argument("--strict-warnings", action="store_true")
    s.set_defaults(func=_cmd_pipeline)

    s = sub.add_parser("report", parents=[common], help="render a summary table from artifacts")
    s.add_argument("--sequences", required=True)
    s.add_argument("--suite", required=True)
    s.add_argument("--verdicts", required=True)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if _global(args, "verbose") else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ModelError, FixtureError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
