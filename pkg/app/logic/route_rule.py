# app/logic/route_rule.py
import logging
from types import MappingProxyType
from typing import Literal, Optional

from pydantic import BaseModel

from app.errors import MissingSituationError
from app.logic.templates import instantiate, template_for_id
from app.logic.typology import QuestionType, classify

log = logging.getLogger(__name__)

Router = Literal["baseline", "cot", "rule", "llm"]

# question type -> template id
ROUTING_TABLE = MappingProxyType({
    QuestionType.WHAT: "details_scene",
    QuestionType.IS: "step_by_step",
    QuestionType.HOW: "details_scene",
    QuestionType.CAN: "scene_understanding",
    QuestionType.WHICH: "details_scene",
    QuestionType.OTHERS: "instruction_focused",
})

REASONING_NEED = MappingProxyType({
    QuestionType.WHAT: "Identify objects and describe scene details",
    QuestionType.IS: "Verify spatial relationship step-by-step",
    QuestionType.HOW: "Count objects from dense visual observation",
    QuestionType.CAN: "Judge physical possibility from current position",
    QuestionType.WHICH: "Infer egocentric direction and orientation",
    QuestionType.OTHERS: "Follow instruction with concise direct answer",
})


class RoutedPrompt(BaseModel):
    prompt_text: str
    router: Router
    template_id: Optional[str] = None
    question_type: QuestionType
    used_situation: bool = False
    # set only by the LLM router
    fallback_reason: Optional[str] = None
    router_model_id: Optional[str] = None


def route_rule(question: str, situation: Optional[str] = None, strict: bool = False) -> RoutedPrompt:
    """Pick the template from the question type alone, then fill it."""
    qtype = classify(question)
    template = template_for_id(ROUTING_TABLE[qtype])

    use_situation = template.requires_situation and bool(situation)
    if template.requires_situation and not situation:
        if strict:
            raise MissingSituationError(f"{qtype.value} question routed to {template.id} without a situation")
        log.debug("no situation for %s question; filling %s without prefix", qtype.value, template.id)
        text = instantiate(template.model_copy(update={"requires_situation": False}), question)
    else:
        text = instantiate(template, question, situation if use_situation else None)

    return RoutedPrompt(
        prompt_text=text,
        router="rule",
        template_id=template.id,
        question_type=qtype,
        used_situation=use_situation,
    )
