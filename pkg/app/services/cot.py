# app/services/cot.py
import logging
from typing import Optional

from app.errors import BackendError, with_stage
from app.logic.templates import QUESTION_SLOT, load_prompt
from app.services.chat import Backend, ChatRequest, ChatResponse, MediaRef, complete

log = logging.getLogger(__name__)


def baseline_prompt(question: str) -> str:
    """The fixed direct prompt. Never carries the situation."""
    head, tail = load_prompt("baseline").split(QUESTION_SLOT)
    return f"{head}{question}{tail}"


def run_baseline(backend: Backend, media: Optional[MediaRef], question: str,
                 temperature: float = 0.3) -> ChatResponse:
    req = ChatRequest.from_user_text(baseline_prompt(question), temperature=temperature)
    return complete(backend, req, media)


def run_cot_two_stage(backend: Backend, media: Optional[MediaRef], question: str,
                      baseline_prompt: str, temperature: float = 0.3) -> ChatResponse:
    """
    Think-twice CoT. Stage 1 asks for reasoning after the baseline prompt;
    stage 2 replays that reasoning verbatim and asks for the answer.
    Exactly two backend calls; errors carry the stage number.
    """
    reasoning_cue = load_prompt("cot_reasoning")
    answer_cue = load_prompt("cot_answer")
    stage1_text = f"{baseline_prompt} {reasoning_cue}"

    try:
        first = complete(backend, ChatRequest.from_user_text(stage1_text, temperature=temperature), media)
    except BackendError as e:
        raise with_stage(e, 1) from e

    stage2_text = f"{stage1_text}\n{first.text}\n{answer_cue}"
    try:
        second = complete(backend, ChatRequest.from_user_text(stage2_text, temperature=temperature), media)
    except BackendError as e:
        raise with_stage(e, 2) from e

    log.debug("cot for %r: %d reasoning chars", question[:40], len(first.text))
    return second.model_copy(update={"latency_ms": first.latency_ms + second.latency_ms})
