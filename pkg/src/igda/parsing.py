"""Parsers for model responses: edge assessments, edge lists, revisions."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ResponseParseError
from .graph import Pair, VariableSpec

_DECISION_RE = re.compile(r"<\s*decision\s*>(.*?)<\s*/\s*decision\s*>", re.IGNORECASE | re.DOTALL)
_CONFIDENCE_RE = re.compile(r"<\s*confidence\s*>(.*?)<\s*/\s*confidence\s*>", re.IGNORECASE | re.DOTALL)
_EDGE_TAG_RE = re.compile(r"<\s*edge\s*>(.*?)<\s*/\s*edge\s*>", re.IGNORECASE | re.DOTALL)
# Edge-belief notation: "(A->B,85)" or "(NOT A->B, 40)".  Names must not
# contain commas, parentheses, or the arrow itself.
_REVISION_RE = re.compile(
    r"\(\s*(NOT\s+)?([^(),>]+?)\s*->\s*([^(),>]+?)\s*,\s*(\d+)\s*\)", re.IGNORECASE
)

# Both decision vocabularies are accepted in every context.
_PRESENT_WORDS = {"YES", "PARENT"}
_ABSENT_WORDS = {"NO", "NOT CAUSAL"}


@dataclass(frozen=True)
class EdgeAssessment:
    """One parsed sample: a present/absent call plus confidence 1..100."""

    present: bool
    confidence: int
    raw_text: str = field(default="", compare=False)

    @property
    def signed(self) -> float:
        """Signed confidence: +confidence when present, -confidence when absent."""
        return float(self.confidence) if self.present else -float(self.confidence)


def _normalize_word(text: str) -> str:
    return " ".join(text.split()).upper()


def parse_assessment(text: str) -> EdgeAssessment:
    """Extract the last well-formed decision and confidence tags.

    The decision must normalize to YES/PARENT (present) or NO/"NOT
    CAUSAL" (absent); the confidence must be an integer in [1, 100].
    Anything else raises ResponseParseError carrying the raw text.
    """
    decisions = _DECISION_RE.findall(text)
    if not decisions:
        raise ResponseParseError("no <decision> tag found", raw_text=text)
    confidences = _CONFIDENCE_RE.findall(text)
    if not confidences:
        raise ResponseParseError("no <confidence> tag found", raw_text=text)

    word = _normalize_word(decisions[-1])
    if word in _PRESENT_WORDS:
        present = True
    elif word in _ABSENT_WORDS:
        present = False
    else:
        raise ResponseParseError(f"unrecognized decision {word!r}", raw_text=text)

    conf_text = confidences[-1].strip()
    try:
        confidence = int(conf_text)
    except ValueError:
        raise ResponseParseError(
            f"confidence {conf_text!r} is not an integer", raw_text=text
        ) from None
    if not 1 <= confidence <= 100:
        raise ResponseParseError(
            f"confidence {confidence} outside [1, 100]", raw_text=text
        )
    return EdgeAssessment(present=present, confidence=confidence, raw_text=text)


def parse_edge_list(text: str, variables: Sequence[VariableSpec]) -> list[Pair]:
    """Extract proposed edges from ``<edge>A -> B</edge>`` tags.

    Unknown names, self-edges, and malformed entries are skipped;
    duplicates are dropped keeping first occurrence.  Order preserved.
    """
    by_name = {v.name: v.id for v in variables}
    out: list[Pair] = []
    seen: set[Pair] = set()
    for chunk in _EDGE_TAG_RE.findall(text):
        if "->" not in chunk:
            continue
        left, _, right = chunk.partition("->")
        parent, child = left.strip(), right.strip()
        if parent not in by_name or child not in by_name or parent == child:
            continue
        pair = (by_name[parent], by_name[child])
        if pair in seen:
            continue
        seen.add(pair)
        out.append(pair)
    return out


def parse_graph_revisions(text: str, variables: Sequence[VariableSpec]) -> dict[Pair, float]:
    """Extract per-edge belief revisions in the (A->B,CONF) notation.

    Returns signed confidences keyed by pair.  Lines that do not parse,
    name unknown variables, or carry out-of-range confidences are
    ignored (the caller keeps priors for anything missing).  The last
    mention of a pair wins.
    """
    by_name = {v.name: v.id for v in variables}
    out: dict[Pair, float] = {}
    for negated, parent, child, conf_text in _REVISION_RE.findall(text):
        parent, child = parent.strip(), child.strip()
        if parent not in by_name or child not in by_name or parent == child:
            continue
        confidence = int(conf_text)
        if not 1 <= confidence <= 100:
            continue
        value = -float(confidence) if negated else float(confidence)
        out[(by_name[parent], by_name[child])] = value
    return out
