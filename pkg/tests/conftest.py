import json
from pathlib import Path
from typing import Callable, Dict

import pytest

from app.logic.scoring import CONDITIONS
from app.logic.templates import load_prompt
from app.logic.typology import classify
from app.services.chat import ChatRequest
from app.services.replay import FixtureStore, MockBackend
from app.store import dataset
from scripts.record_fixtures import record_all

FIXTURES = Path(__file__).parent / "fixtures"
REPLAY24 = FIXTURES / "replay24"
ORACLES = FIXTURES / "oracles"

ANSWER_MODEL = "qwen2-vl-2b"
ROUTER_MODEL = "qwen2.5-1.5b"

_CASE_MARKER = "Now write the prompt for this case.\n"


def make_answer_script(responses: Dict) -> Callable[[ChatRequest], str]:
    """Scripted VLM: the reasoning turn gets the canned reasoning, everything else the reply for its question."""
    by_question = sorted(responses["answer"].items(), key=lambda kv: -len(kv[0]))
    reasoning_cue = load_prompt("cot_reasoning")

    def script(request: ChatRequest) -> str:
        text = request.user_text()
        if text.endswith(reasoning_cue):
            return responses["reasoning"]
        for question, reply in by_question:
            if question in text:
                return reply
        return "unknown"

    return script


def make_router_script(responses: Dict) -> Callable[[ChatRequest], str]:
    """Scripted router: one canned prompt shape per category, filled with the target case."""

    def script(request: ChatRequest) -> str:
        case = request.user_text().rsplit(_CASE_MARKER, 1)[1]
        lines = case.split("\n")
        question = lines[0][len("Question: "):]
        situation = lines[1][len("Situation: "):]
        shape = responses["router"][classify(question).value]
        return shape.replace("{question}", question).replace("{situation}", situation)

    return script


@pytest.fixture
def replay24_instances():
    return dataset.load(REPLAY24 / "dataset.jsonl")


@pytest.fixture
def replay24_manifest():
    return dataset.load_manifest(REPLAY24 / "manifest.json")


@pytest.fixture
def replay24_responses():
    return json.loads((REPLAY24 / "responses.json").read_text(encoding="utf-8"))


@pytest.fixture
def answer_script(replay24_responses):
    return make_answer_script(replay24_responses)


@pytest.fixture
def router_script(replay24_responses):
    return make_router_script(replay24_responses)


@pytest.fixture
def fixture_dir(tmp_path, replay24_instances, replay24_manifest, answer_script, router_script):
    """Record every condition once against the scripted models; replays then need no script."""
    root = tmp_path / "fixtures"
    failures = record_all(
        replay24_instances,
        MockBackend(answer_script, model_id=ANSWER_MODEL),
        MockBackend(router_script, model_id=ROUTER_MODEL),
        FixtureStore(root),
        manifest=replay24_manifest,
    )
    assert failures == {c: 0 for c in CONDITIONS}
    return root
