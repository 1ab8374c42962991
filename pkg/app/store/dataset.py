# app/store/dataset.py
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.errors import DatasetError
from app.logic.typology import QUESTION_TYPES, QuestionType, classify

log = logging.getLogger(__name__)

# published test split: 3,519 questions
REFERENCE_TEST_COUNTS: Dict[QuestionType, int] = {
    QuestionType.WHAT: 1147,
    QuestionType.IS: 652,
    QuestionType.HOW: 432,
    QuestionType.CAN: 338,
    QuestionType.WHICH: 351,
    QuestionType.OTHERS: 599,
}


class SqaInstance(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    id: str = Field(..., min_length=1)
    scene_id: str = Field(..., min_length=1)
    situation: str
    question: str
    gold_answers: List[str] = Field(..., alias="answers", min_length=1)
    category: Optional[QuestionType] = None

    @field_validator("situation", "question")
    @classmethod
    def not_blank(cls, v: str) -> str:
        if not v or not v.strip():
            raise ValueError("must not be empty")
        return v

    @model_validator(mode="after")
    def derive_category(self) -> "SqaInstance":
        derived = classify(self.question)
        if self.category is not None and self.category != derived:
            raise ValueError(f"category {self.category.value} does not match leading token ({derived.value})")
        self.category = derived
        return self

    def to_json(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "scene_id": self.scene_id,
            "situation": self.situation,
            "question": self.question,
            "answers": list(self.gold_answers),
        }


@dataclass
class ConvertResult:
    instances: List[SqaInstance] = field(default_factory=list)
    skipped_questions: int = 0
    skipped_annotations: int = 0

    @property
    def skipped(self) -> int:
        return self.skipped_questions + self.skipped_annotations


def _read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DatasetError(f"cannot read file: {e}", path=str(path)) from e
    except json.JSONDecodeError as e:
        raise DatasetError(f"JSON parse error at column {e.colno} (offset {e.pos}): {e.msg}",
                           path=str(path), line=e.lineno) from e


def convert_official(questions_file: Union[str, Path], annotations_file: Union[str, Path]) -> ConvertResult:
    """
    Join the official SQA3D question and annotation files on question_id.
    Ids present on only one side are skipped and counted.
    """
    qdata = _read_json(questions_file)
    adata = _read_json(annotations_file)
    questions = qdata.get("questions", []) if isinstance(qdata, dict) else qdata
    annotations = adata.get("annotations", []) if isinstance(adata, dict) else adata

    answers_by_id: Dict[str, List[str]] = {}
    for i, a in enumerate(annotations):
        try:
            answers = [x["answer"] if isinstance(x, dict) else str(x) for x in a.get("answers", [])]
            answers_by_id[str(a["question_id"])] = answers
        except (KeyError, TypeError, AttributeError) as e:
            raise DatasetError(f"annotation record {i} is invalid: missing or malformed {e}",
                               path=str(annotations_file)) from e

    result = ConvertResult()
    joined = set()
    for i, q in enumerate(questions):
        if not isinstance(q, dict):
            raise DatasetError(f"question record {i} is not an object", path=str(questions_file))
        qid = str(q.get("question_id", ""))
        if qid not in answers_by_id:
            result.skipped_questions += 1
            log.warning("question %s has no annotation; skipping", qid)
            continue
        try:
            inst = SqaInstance(
                id=qid,
                scene_id=q["scene_id"],
                situation=q["situation"],
                question=q["question"],
                answers=answers_by_id[qid],
            )
        except (KeyError, ValidationError) as e:
            raise DatasetError(f"question record {i} ({qid}) is invalid: {e}", path=str(questions_file)) from e
        result.instances.append(inst)
        joined.add(qid)

    result.skipped_annotations = len(set(answers_by_id) - joined)
    if not result.instances:
        raise DatasetError("no question ids join across the two files", path=str(questions_file))
    log.info("converted %d instances (%d questions and %d annotations skipped)",
             len(result.instances), result.skipped_questions, result.skipped_annotations)
    return result


def write_jsonl(instances: Iterable[SqaInstance], path: Union[str, Path]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for inst in instances:
            f.write(json.dumps(inst.to_json(), ensure_ascii=False) + "\n")
            n += 1
    return n


def load(path: Union[str, Path]) -> List[SqaInstance]:
    path = Path(path)
    if not path.is_file():
        raise DatasetError("dataset file not found", path=str(path))
    out: List[SqaInstance] = []
    seen = set()
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                inst = SqaInstance.model_validate(json.loads(line))
            except json.JSONDecodeError as e:
                raise DatasetError(f"bad JSON: {e.msg}", path=str(path), line=lineno) from e
            except ValidationError as e:
                raise DatasetError(f"schema error: {e}", path=str(path), line=lineno) from e
            if inst.id in seen:
                raise DatasetError(f"duplicate id {inst.id!r}", path=str(path), line=lineno)
            seen.add(inst.id)
            out.append(inst)
    return out


def category_histogram(instances: Iterable[SqaInstance]) -> Dict[QuestionType, int]:
    counts = Counter(inst.category for inst in instances)
    return {t: counts.get(t, 0) for t in QUESTION_TYPES}


def histogram_deviation(hist: Dict[QuestionType, int],
                        reference: Dict[QuestionType, int] = REFERENCE_TEST_COUNTS) -> Dict[QuestionType, int]:
    """Signed per-category difference against the published test-split counts."""
    return {t: hist.get(t, 0) - reference[t] for t in QUESTION_TYPES}


def load_manifest(path: Union[str, Path]) -> Dict[str, Path]:
    """Scene manifest {scene_id: frames dir or index file}; relative paths resolve against the manifest."""
    path = Path(path)
    raw = _read_json(path)
    if not isinstance(raw, dict):
        raise DatasetError("scene manifest must be a JSON object", path=str(path))
    return {str(k): (path.parent / v) for k, v in raw.items()}
