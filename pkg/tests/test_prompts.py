from pathlib import Path

import pytest

from igda.errors import PromptContractError
from igda.graph import VariableSpec
from igda.prompts import (
    LocalUpdateContext,
    PromptContext,
    render_direct_selection_prompt,
    render_edge_prediction,
    render_experiment_feedback,
    render_global_update_prompt,
    render_graph_prediction,
    render_update_prompt,
    render_zero_shot_prompt,
)

GOLDEN = Path(__file__).parent / "data" / "golden"

VARS = (
    VariableSpec(0, "rainfall", "daily precipitation measured at the weather station"),
    VariableSpec(1, "soil moisture", "volumetric water content of the top soil layer"),
    VariableSpec(2, "crop yield", "tons of grain harvested per hectare"),
    VariableSpec(3, "fertilizer use", ""),
    VariableSpec(4, "pest pressure", "insect damage index across the growing season"),
)
TASK = "You are studying an agricultural field trial."


def golden(name: str) -> str:
    return (GOLDEN / name).read_text()


def test_zero_shot_prompt_matches_golden():
    prompt = render_zero_shot_prompt(PromptContext(
        task_description=TASK, target=VARS[2], parent=VARS[1], variables=VARS,
    ))
    assert prompt + "\n" == golden("zero_shot_field.txt")


def test_parent_update_prompt_matches_golden():
    prompt = render_update_prompt(LocalUpdateContext(
        variables=VARS,
        experiment_pair=(1, 2), experiment_label=1, experiment_prior=35.0,
        target_pair=(1, 4), target_prior=-20.0,
        relation="shares-parent",
    ))
    assert prompt + "\n" == golden("parent_update_field.txt")


def test_child_update_prompt_matches_golden():
    prompt = render_update_prompt(LocalUpdateContext(
        variables=VARS,
        experiment_pair=(1, 2), experiment_label=0, experiment_prior=-65.4,
        target_pair=(0, 2), target_prior=12.5,
        relation="shares-child",
    ))
    assert prompt + "\n" == golden("child_update_field.txt")


def test_zero_shot_roster_excludes_both_endpoints():
    prompt = render_zero_shot_prompt(PromptContext(
        task_description=TASK, target=VARS[0], parent=VARS[3], variables=VARS,
    ))
    roster = prompt.split("variables to consider:\n\n")[1].split("\n\nDo some")[0]
    assert "rainfall" not in roster and "fertilizer use" not in roster
    assert roster.splitlines() == [
        "soil moisture: volumetric water content of the top soil layer",
        "crop yield: tons of grain harvested per hectare",
        "pest pressure: insect damage index across the growing season",
    ]


def test_update_roster_lists_every_variable():
    prompt = render_update_prompt(LocalUpdateContext(
        variables=VARS,
        experiment_pair=(1, 2), experiment_label=1, experiment_prior=10.0,
        target_pair=(1, 3), target_prior=5.0,
        relation="shares-parent",
    ))
    for v in VARS:
        assert v.name in prompt


def test_edge_prediction_notation():
    assert render_edge_prediction("A", "B", 73.4) == "(A->B,73)"
    assert render_edge_prediction("A", "B", -73.6) == "(NOT A->B, 74)"
    assert render_edge_prediction("A", "B", 0.0) == "(A->B,0)"
    assert render_experiment_feedback("A", "B", 1) == "(A->B,100)"
    assert render_experiment_feedback("A", "B", 0) == "(NOT A->B, 100)"


def test_prompt_context_rejects_degenerate_pairs():
    with pytest.raises(PromptContractError):
        PromptContext(task_description="", target=VARS[0], parent=VARS[0], variables=VARS)
    with pytest.raises(PromptContractError):
        PromptContext(
            task_description="", target=VARS[0],
            parent=VariableSpec(9, "ghost"), variables=VARS,
        )


def test_update_context_contract():
    ok = dict(
        variables=VARS, experiment_pair=(1, 2), experiment_label=1,
        experiment_prior=10.0, target_pair=(1, 3), target_prior=5.0,
        relation="shares-parent",
    )
    LocalUpdateContext(**ok)
    with pytest.raises(PromptContractError):
        LocalUpdateContext(**{**ok, "relation": "sideways"})
    with pytest.raises(PromptContractError):
        LocalUpdateContext(**{**ok, "target_pair": (0, 3)})  # parent not shared
    with pytest.raises(PromptContractError):
        LocalUpdateContext(**{**ok, "relation": "shares-child", "target_pair": (1, 3)})
    with pytest.raises(PromptContractError):
        LocalUpdateContext(**{**ok, "target_pair": (1, 2)})  # equals experiment
    with pytest.raises(PromptContractError):
        LocalUpdateContext(**{**ok, "target_prior": 100.0})  # frozen target
    with pytest.raises(PromptContractError):
        LocalUpdateContext(**{**ok, "experiment_label": 2})


def test_graph_prediction_rendering():
    confidences = {(0, 1): 40.0, (1, 0): -55.0}
    text = render_graph_prediction(VARS[:2], confidences)
    assert text == "(rainfall->soil moisture,40)\n(NOT soil moisture->rainfall, 55)"
    bare = render_graph_prediction(VARS[:2], confidences, with_confidence=False)
    assert bare == "rainfall -> soil moisture\nNOT soil moisture -> rainfall"
    confirmed = render_graph_prediction(
        VARS[:2], confidences, experimented=frozenset({(0, 1)})
    )
    assert confirmed.splitlines()[0].endswith(" (confirmed)")


def test_selection_and_global_prompts_render():
    confidences = {p: 10.0 for p in [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]}
    sel = render_direct_selection_prompt(VARS[:3], confidences, frozenset(), 2)
    assert "<edge>" in sel and "2" in sel
    glob = render_global_update_prompt(
        VARS[:3], confidences, frozenset({(0, 1)}), [((0, 1), 1)]
    )
    assert "(rainfall->soil moisture,100)" in glob
    assert "(confirmed)" in glob
