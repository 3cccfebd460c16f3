"""Prompt contexts and template rendering.

Templates live as plain-text assets in ``templates/`` and use ``{name}``
placeholders.  Rendering is deliberately dumb string substitution so the
emitted prompts are byte-stable; goldens in the test suite freeze them.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

from .errors import PromptContractError
from .graph import Pair, VariableSpec, label_from_confidence

SHARES_PARENT = "shares-parent"
SHARES_CHILD = "shares-child"
RELATIONS = (SHARES_PARENT, SHARES_CHILD)


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    """Read a template asset by stem, e.g. ``zero_shot``."""
    text = resources.files(__package__).joinpath(f"templates/{name}.txt").read_text()
    return text.rstrip("\n")


def render_edge_prediction(parent_name: str, child_name: str, confidence: float) -> str:
    """One edge belief in the notation the update templates declare.

    Present: ``(A->B,CONF)``.  Absent: ``(NOT A->B, CONF)``.  The rendered
    confidence is the rounded magnitude; the sign carries presence.
    """
    magnitude = round(abs(confidence))
    if label_from_confidence(confidence) == 1:
        return f"({parent_name}->{child_name},{magnitude})"
    return f"(NOT {parent_name}->{child_name}, {magnitude})"


def render_experiment_feedback(parent_name: str, child_name: str, label: int) -> str:
    """A revealed experiment result, rendered as a certainty-100 belief."""
    return render_edge_prediction(parent_name, child_name, 100.0 if label == 1 else -100.0)


def _variables_info(variables: Sequence[VariableSpec], exclude: frozenset[int] = frozenset()) -> str:
    lines = [
        f"{v.name}: {v.description}" if v.description else v.name
        for v in variables
        if v.id not in exclude
    ]
    return "\n".join(lines)


@dataclass(frozen=True)
class PromptContext:
    """Inputs for one zero-shot edge assessment.

    The question asked is "is ``parent`` a direct causal parent of
    ``target``?", i.e. the candidate pair (parent.id, target.id).
    """

    task_description: str
    target: VariableSpec
    parent: VariableSpec
    variables: tuple[VariableSpec, ...]

    def __post_init__(self):
        if self.target.id == self.parent.id:
            raise PromptContractError("target and parent must be distinct variables")
        ids = {v.id for v in self.variables}
        if self.target.id not in ids or self.parent.id not in ids:
            raise PromptContractError("target and parent must be listed in variables")

    @property
    def pair(self) -> Pair:
        return (self.parent.id, self.target.id)


def render_zero_shot_prompt(ctx: PromptContext) -> str:
    """Zero-shot confidence-estimation prompt for one candidate pair.

    The variable roster excludes the target and parent themselves; their
    descriptions are substituted into the dedicated info slots (empty
    descriptions render as empty strings).
    """
    return load_template("zero_shot").format(
        task_description=ctx.task_description,
        target=ctx.target.name,
        parent=ctx.parent.name,
        variables_info=_variables_info(
            ctx.variables, exclude=frozenset({ctx.target.id, ctx.parent.id})
        ),
        target_info=ctx.target.description,
        parent_info=ctx.parent.description,
    )


@dataclass(frozen=True)
class LocalUpdateContext:
    """Inputs for one (experiment, adjacent target) belief update.

    Priors are the round-start beliefs: ``experiment_prior`` is what was
    predicted for the experimented pair before its result was revealed,
    ``target_prior`` the current belief about the target pair.
    """

    variables: tuple[VariableSpec, ...]
    experiment_pair: Pair
    experiment_label: int
    experiment_prior: float
    target_pair: Pair
    target_prior: float
    relation: str

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise PromptContractError(f"unknown relation {self.relation!r}")
        if self.target_pair == self.experiment_pair:
            raise PromptContractError("target pair equals the experimented pair")
        # membership, not position: the wider adjacency scope may put the
        # shared node on either side of the target pair
        if self.relation == SHARES_PARENT and self.experiment_pair[0] not in self.target_pair:
            raise PromptContractError("shares-parent target must touch the experiment's parent")
        if self.relation == SHARES_CHILD and self.experiment_pair[1] not in self.target_pair:
            raise PromptContractError("shares-child target must touch the experiment's child")
        if abs(self.target_prior) >= 100.0:
            raise PromptContractError(
                "update target must have absolute confidence below 100"
            )
        if self.experiment_label not in (0, 1):
            raise PromptContractError(f"bad experiment label {self.experiment_label!r}")

    def _name(self, var_id: int) -> str:
        for v in self.variables:
            if v.id == var_id:
                return v.name
        raise PromptContractError(f"variable id {var_id} missing from roster")


def render_update_prompt(ctx: LocalUpdateContext) -> str:
    """Local update prompt; template chosen by the shared-node relation.

    The variable roster lists every variable.  All three edge slots use
    the (A->B,CONF) / (NOT A->B, CONF) notation; the experiment feedback
    is rendered at confidence 100.
    """
    exp_parent = ctx._name(ctx.experiment_pair[0])
    exp_child = ctx._name(ctx.experiment_pair[1])
    fields = {
        "variables_info": _variables_info(ctx.variables),
        "experiment_feedback": render_experiment_feedback(
            exp_parent, exp_child, ctx.experiment_label
        ),
        "experiment_prediction": render_edge_prediction(
            exp_parent, exp_child, ctx.experiment_prior
        ),
        "other_edge_prediction": render_edge_prediction(
            ctx._name(ctx.target_pair[0]), ctx._name(ctx.target_pair[1]), ctx.target_prior
        ),
    }
    if ctx.relation == SHARES_PARENT:
        return load_template("parent_update").format(parent=exp_parent, **fields)
    return load_template("child_update").format(child=exp_child, **fields)


def render_graph_prediction(
    variables: Sequence[VariableSpec],
    confidences: dict[Pair, float],
    experimented: frozenset[Pair] = frozenset(),
    with_confidence: bool = True,
) -> str:
    """Full prediction listing, one candidate pair per line.

    With confidences the notation matches the update templates; without
    them (direct-selection ablation) lines read ``A -> B`` / ``NOT A -> B``.
    Experimented pairs get a ``(confirmed)`` suffix.
    """
    by_id = {v.id: v.name for v in variables}
    lines = []
    for (i, j) in sorted(confidences):
        value = confidences[(i, j)]
        if with_confidence:
            line = render_edge_prediction(by_id[i], by_id[j], value)
        elif label_from_confidence(value) == 1:
            line = f"{by_id[i]} -> {by_id[j]}"
        else:
            line = f"NOT {by_id[i]} -> {by_id[j]}"
        if (i, j) in experimented:
            line += " (confirmed)"
        lines.append(line)
    return "\n".join(lines)


def render_direct_selection_prompt(
    variables: Sequence[VariableSpec],
    confidences: dict[Pair, float],
    experimented: frozenset[Pair],
    count: int,
) -> str:
    """Selection-ablation prompt: ask for the next edges to test."""
    return load_template("direct_selection").format(
        variables_info=_variables_info(variables),
        graph_prediction=render_graph_prediction(
            variables, confidences, experimented, with_confidence=False
        ),
        count=count,
    )


def render_global_update_prompt(
    variables: Sequence[VariableSpec],
    confidences: dict[Pair, float],
    experimented: frozenset[Pair],
    feedback: Sequence[tuple[Pair, int]],
) -> str:
    """Single-prompt replacement for per-edge local updates."""
    by_id = {v.id: v.name for v in variables}
    feedback_lines = "\n".join(
        render_experiment_feedback(by_id[i], by_id[j], label) for (i, j), label in feedback
    )
    return load_template("global_update").format(
        variables_info=_variables_info(variables),
        experiment_feedback=feedback_lines,
        graph_prediction=render_graph_prediction(
            variables, confidences, experimented, with_confidence=True
        ),
    )
