# app/logic/route_llm.py
import json
import logging
import re
from pathlib import Path
from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.errors import BackendError, DemoSetError
from app.logic.route_rule import RoutedPrompt, route_rule
from app.logic.templates import DATA_DIR, load_prompt
from app.logic.typology import QUESTION_TYPES, QuestionType, classify
from app.services.chat import Backend, ChatRequest

log = logging.getLogger(__name__)

DEFAULT_DEMOS_PATH = DATA_DIR / "demos.json"
ROUTER_TEMPERATURE = 0.3
ROUTER_MAX_OUTPUT = 512
MIN_PROMPT_CHARS = 20
MAX_PROMPT_CHARS = 2000

_FENCE = re.compile(r"^```[\w-]*\n(.*)\n```$", re.DOTALL)


class FewShotDemo(BaseModel):
    model_config = ConfigDict(frozen=True)

    category: QuestionType
    question: str = Field(..., min_length=1)
    situation: str = Field(..., min_length=1)
    reference_prompt: str = Field(..., min_length=1)

    @field_validator("question", "situation", "reference_prompt")
    @classmethod
    def not_blank(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("must not be blank")
        return v


class DemoSet(BaseModel):
    """K=6 demonstrations, exactly one per question category, in file order."""
    model_config = ConfigDict(frozen=True)

    demos: List[FewShotDemo]

    @model_validator(mode="after")
    def one_per_category(self) -> "DemoSet":
        cats = [d.category for d in self.demos]
        if len(cats) != len(QUESTION_TYPES) or set(cats) != set(QUESTION_TYPES):
            raise ValueError(
                f"demo set needs exactly one demo per category {[t.value for t in QUESTION_TYPES]}, "
                f"got {[c.value for c in cats]}"
            )
        for d in self.demos:
            if classify(d.question) != d.category:
                raise ValueError(f"demo {d.question!r} is labelled {d.category.value} but classifies as "
                                 f"{classify(d.question).value}")
        return self

    def category_of(self, i: int) -> QuestionType:
        return self.demos[i].category


def load_demos(path: Union[str, Path] = DEFAULT_DEMOS_PATH) -> DemoSet:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        return DemoSet(demos=raw)
    except (OSError, json.JSONDecodeError) as e:
        raise DemoSetError(f"cannot read demo file {path}: {e}") from e
    except ValidationError as e:
        raise DemoSetError(f"invalid demo file {path}: {e}") from e


def _render_case(question: str, situation: Optional[str]) -> str:
    return f"Question: {question}\nSituation: {situation or '(none given)'}\nPrompt:"


def build_router_request(question: str, situation: Optional[str], demos: DemoSet,
                         model_id: str = "") -> ChatRequest:
    """Text-only router request: meta instruction, six demos, then the target case."""
    if not isinstance(demos, DemoSet):
        try:
            demos = DemoSet(demos=list(demos))
        except ValidationError as e:
            raise DemoSetError(str(e)) from e

    blocks = []
    for i, d in enumerate(demos.demos, 1):
        blocks.append(f"Example {i}\n{_render_case(d.question, d.situation)}\n{d.reference_prompt}")
    blocks.append(f"Now write the prompt for this case.\n{_render_case(question, situation)}")

    return ChatRequest.from_user_text(
        "\n\n".join(blocks),
        system=load_prompt("router_meta"),
        temperature=ROUTER_TEMPERATURE,
        max_output=ROUTER_MAX_OUTPUT,
        model_id=model_id,
    )


def clean_generated(text: str) -> str:
    text = text.strip()
    m = _FENCE.match(text)
    if m:
        text = m.group(1).strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1].strip()
    return text


def validate_generated(text: str, question: str) -> Tuple[bool, Optional[str]]:
    if len(text) < MIN_PROMPT_CHARS:
        return False, "too_short"
    if len(text) > MAX_PROMPT_CHARS:
        return False, "too_long"
    if question.strip().lower() not in text.lower():
        return False, "missing_question"
    return True, None


def route_llm(question: str, situation: Optional[str], demos: DemoSet,
              router_backend: Backend) -> RoutedPrompt:
    """
    One router call per question, no search loop. A backend failure or a
    generated prompt that fails validation falls back to the rule route,
    with the reason kept in provenance.
    """
    qtype = classify(question)
    request = build_router_request(question, situation, demos)

    reason: Optional[str]
    try:
        generated = clean_generated(router_backend.complete(request).text)
        ok, reason = validate_generated(generated, question)
    except BackendError as e:
        log.info("router backend failed for %r (%s); using rule route", question[:60], e)
        ok, reason = False, "backend_error"

    if ok:
        return RoutedPrompt(
            prompt_text=generated,
            router="llm",
            template_id=None,
            question_type=qtype,
            used_situation=bool(situation),
            router_model_id=router_backend.model_id,
        )

    log.info("router output rejected for %r: %s; using rule route", question[:60], reason)
    fallback = route_rule(question, situation)
    return fallback.model_copy(update={"fallback_reason": reason, "router_model_id": router_backend.model_id})

