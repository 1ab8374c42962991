# app/logic/templates.py
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, field_validator

from app.errors import MissingSituationError, TemplateError

DATA_DIR = Path(__file__).resolve().parents[1] / "data"
TEMPLATE_DIR = DATA_DIR / "templates"
PROMPT_DIR = DATA_DIR / "prompts"

QUESTION_SLOT = "{question}"
SITUATION_SLOT = "{situation}"

# canonical order
TEMPLATE_IDS: Tuple[str, ...] = (
    "details_scene",
    "step_by_step",
    "scene_understanding",
    "instruction_focused",
)

# only step_by_step carries the situation prefix by default
_REQUIRES_SITUATION = {"step_by_step"}


def read_golden(path: Path) -> str:
    """Read a golden text file; CRLF and one trailing newline are tolerated."""
    text = path.read_text(encoding="utf-8").replace("\r\n", "\n")
    if text.endswith("\n"):
        text = text[:-1]
    return text


class PromptTemplate(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    body: str
    requires_situation: bool = False

    @field_validator("body")
    @classmethod
    def one_question_slot(cls, v: str) -> str:
        if v.count(QUESTION_SLOT) != 1:
            raise ValueError(f"template body must contain {QUESTION_SLOT} exactly once")
        if SITUATION_SLOT in v:
            raise ValueError(f"template body must not contain {SITUATION_SLOT}")
        return v


class SituationPrefix(BaseModel):
    model_config = ConfigDict(frozen=True)

    body: str

    @field_validator("body")
    @classmethod
    def one_situation_slot(cls, v: str) -> str:
        if v.count(SITUATION_SLOT) != 1:
            raise ValueError(f"situation prefix must contain {SITUATION_SLOT} exactly once")
        return v

    def fill(self, situation: str) -> str:
        return self.body.replace(SITUATION_SLOT, situation)


@lru_cache(maxsize=None)
def _library(template_dir: Path = TEMPLATE_DIR) -> Dict[str, PromptTemplate]:
    lib = {}
    for tid in TEMPLATE_IDS:
        path = template_dir / f"{tid}.txt"
        try:
            lib[tid] = PromptTemplate(
                id=tid,
                body=read_golden(path),
                requires_situation=tid in _REQUIRES_SITUATION,
            )
        except ValueError as e:
            raise TemplateError(f"corrupt template {path}: {e}") from e
    return lib


@lru_cache(maxsize=None)
def situation_prefix(template_dir: Path = TEMPLATE_DIR) -> SituationPrefix:
    path = template_dir / "situation_prefix.txt"
    try:
        return SituationPrefix(body=read_golden(path))
    except ValueError as e:
        raise TemplateError(f"corrupt situation prefix {path}: {e}") from e


def template_for_id(template_id: str) -> PromptTemplate:
    lib = _library()
    if template_id not in lib:
        raise TemplateError(f"unknown template id {template_id!r}; expected one of {list(TEMPLATE_IDS)}")
    return lib[template_id]


def list_templates() -> List[PromptTemplate]:
    lib = _library()
    return [lib[tid] for tid in TEMPLATE_IDS]


def instantiate(
    template: PromptTemplate,
    question: str,
    situation: Optional[str] = None,
    force_situation: bool = False,
) -> str:
    """
    Fill `{question}` with the question verbatim. When the template wants
    the situation (or `force_situation` is set) and one was given, the
    filled situation prefix goes first, then a newline, then the body.
    """
    if not question or not question.strip():
        raise TemplateError("question is empty")
    if template.body.count(QUESTION_SLOT) != 1:
        raise TemplateError(f"template {template.id} has a broken {QUESTION_SLOT} slot")

    wants_situation = template.requires_situation or force_situation
    if template.requires_situation and not situation:
        raise MissingSituationError(f"template {template.id} requires a situation")

    # split instead of str.replace so braces inside the question stay literal
    head, tail = template.body.split(QUESTION_SLOT)
    text = f"{head}{question}{tail}"
    if wants_situation and situation:
        text = f"{situation_prefix().fill(situation)}\n{text}"
    return text


def load_prompt(name: str) -> str:
    """Fixed prompt strings kept next to the templates (baseline, CoT suffixes, router meta)."""
    path = PROMPT_DIR / f"{name}.txt"
    if not path.exists():
        raise TemplateError(f"missing prompt file {path}")
    return read_golden(path)
