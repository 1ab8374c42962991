import json

import pytest

from app.errors import BackendTransportError, DemoSetError
from app.logic.route_llm import (
    DEFAULT_DEMOS_PATH,
    DemoSet,
    FewShotDemo,
    build_router_request,
    clean_generated,
    load_demos,
    route_llm,
    validate_generated,
)
from app.logic.route_rule import route_rule
from app.logic.templates import load_prompt
from app.logic.typology import QUESTION_TYPES, QuestionType
from app.services.replay import MockBackend

QUESTION = "How many chairs are around the table?"
SITUATION = "I am standing next to the kitchen counter facing the dining table."


@pytest.fixture
def demos():
    return load_demos()


def test_shipped_demos_cover_each_category_once(demos):
    assert [demos.category_of(i) for i in range(6)] == list(QUESTION_TYPES)


def test_shipped_demo_prompts_match_rule_router(demos):
    for d in demos.demos:
        assert d.reference_prompt == route_rule(d.question, d.situation).prompt_text


def test_router_request_is_text_only(demos):
    req = build_router_request(QUESTION, SITUATION, demos)
    assert req.media_parts() == []
    assert req.messages[0].role == "system"
    assert req.messages[0].text == load_prompt("router_meta")
    assert req.temperature == 0.3


def test_router_request_carries_all_demos_and_question(demos):
    text = build_router_request(QUESTION, SITUATION, demos).user_text()
    for d in demos.demos:
        assert d.reference_prompt in text
    assert QUESTION in text
    assert text.rstrip().endswith(f"Question: {QUESTION}\nSituation: {SITUATION}\nPrompt:")


def test_two_what_demos_rejected(demos):
    raw = [d.model_dump() for d in demos.demos]
    raw[1] = {**raw[0]}
    with pytest.raises(DemoSetError):
        build_router_request(QUESTION, SITUATION, [FewShotDemo(**r) for r in raw])


def test_demo_category_must_match_question(demos):
    what, is_ = demos.demos[0], demos.demos[1]
    swapped = [
        what.model_copy(update={"category": QuestionType.IS}),
        is_.model_copy(update={"category": QuestionType.WHAT}),
        *demos.demos[2:],
    ]
    with pytest.raises(ValueError, match="classifies as"):
        DemoSet(demos=swapped)


@pytest.mark.parametrize("field", ["question", "situation", "reference_prompt"])
def test_demo_fields_non_empty(field):
    data = {"category": "What", "question": "What is it?", "situation": "I am here.", "reference_prompt": "p"}
    data[field] = "  "
    with pytest.raises(ValueError):
        FewShotDemo(**data)


def test_load_demos_errors(tmp_path):
    with pytest.raises(DemoSetError):
        load_demos(tmp_path / "missing.json")
    bad = tmp_path / "five.json"
    bad.write_text(json.dumps(json.loads(DEFAULT_DEMOS_PATH.read_text(encoding="utf-8"))[:5]), encoding="utf-8")
    with pytest.raises(DemoSetError):
        load_demos(bad)


def test_valid_generation_passes_through(demos):
    generated = f"Count every chair across all frames. Question: {QUESTION} Answer with a number:"
    router = MockBackend(lambda req: generated, model_id="router")
    routed = route_llm(QUESTION, SITUATION, demos, router)
    assert routed.router == "llm"
    assert routed.prompt_text == generated
    assert routed.template_id is None
    assert routed.fallback_reason is None
    assert routed.router_model_id == "router"
    assert len(router.calls) == 1
    assert router.calls[0].media_parts() == []


def test_question_match_is_case_insensitive(demos):
    generated = f"Count carefully. QUESTION: {QUESTION.upper()}"
    routed = route_llm(QUESTION, SITUATION, demos, MockBackend(lambda req: generated))
    assert routed.router == "llm"


@pytest.mark.parametrize(
    "reply, reason",
    [
        ("Count the chairs please, then answer briefly with a number.", "missing_question"),
        ("short", "too_short"),
        ("x" * 2001, "too_long"),
    ],
)
def test_invalid_generation_falls_back_to_rule(demos, reply, reason):
    routed = route_llm(QUESTION, SITUATION, demos, MockBackend(lambda req: reply, model_id="router"))
    assert routed.router == "rule"
    assert routed.fallback_reason == reason
    assert routed.router_model_id == "router"
    assert routed.prompt_text == route_rule(QUESTION, SITUATION).prompt_text


def test_backend_error_falls_back_to_rule(demos):
    def boom(req):
        raise BackendTransportError("connection refused")

    router = MockBackend(boom)
    routed = route_llm("Is the lamp on?", SITUATION, demos, router)
    assert routed.router == "rule"
    assert routed.fallback_reason == "backend_error"
    assert routed.template_id == "step_by_step"
    assert len(router.calls) == 1


def test_clean_generated_strips_fence_and_quotes():
    assert clean_generated("```text\nQuestion: x\n```") == "Question: x"
    assert clean_generated('  "Question: x"  ') == "Question: x"
    assert clean_generated("Question: x") == "Question: x"


def test_validate_generated_bounds():
    q = "Is it?"
    assert validate_generated("a" * 14 + q, q) == (True, None)
    assert validate_generated("a" * 13 + q, q) == (False, "too_short")
    assert validate_generated(q + "a" * 1994, q) == (True, None)
