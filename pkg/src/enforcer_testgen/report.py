"""Markdown summary of a run: one row per target sequence."""

from __future__ import annotations

from .automaton import EventSymbol, sequence_key


class ReportMismatch(ValueError):
    pass


def _key(seq: list[str]) -> tuple:
    return sequence_key([EventSymbol.parse(s) for s in seq])


def _cell(text) -> str:
    return "" if text is None else str(text).replace("|", "\\|")


HEADER = "| Sequence | Status | Reason | Oracle | Verdict |\n|---|---|---|---|---|"


def render_report(sequences: dict, suite: dict, verdicts: dict) -> str:
    """Render the three JSON artifacts as a table in canonical sequence order.

    Raises ReportMismatch when the artifacts do not describe the same
    sequence set.
    """
    seqs = [tuple(s["events"]) for s in sequences.get("sequences", [])]
    entries = {tuple(e["sequence"]): e for e in suite.get("sequences", [])}
    outcomes = {tuple(v["sequence"]): v for v in verdicts.get("verdicts", [])}

    for s in seqs:
        if s not in entries:
            raise ReportMismatch(f"sequence {' '.join(s)} missing from the suite")
    for s in entries:
        if s not in set(seqs):
            raise ReportMismatch(f"suite sequence {' '.join(s)} is not among the generated sequences")
    for s in outcomes:
        if entries.get(s, {}).get("status") != "covered":
            raise ReportMismatch(f"verdict for {' '.join(s)} has no covered test in the suite")

    rows = [HEADER]
    for s in sorted(seqs, key=lambda x: _key(list(x))):
        e = entries[s]
        oracle = e.get("oracle")
        if oracle == "actual" and e.get("divergence_index"):
            oracle = f"actual (v={e['divergence_index']})"
        v = outcomes.get(s)
        reason = e.get("reason")
        if e["status"] == "covered":
            reason = "via " + " ".join(_action(a) for a in e["actions"])
        rows.append(
            "| "
            + " | ".join(
                _cell(x)
                for x in (" ".join(s), e["status"], reason, oracle, v["outcome"] if v else None)
            )
            + " |"
        )
    return "\n".join(rows) + "\n"


def _action(doc: dict) -> str:
    if doc.get("payload") is None:
        return f"{doc['kind']}({doc['target']})"
    return f"{doc['kind']}({doc['target']},{doc['payload']!r})"
