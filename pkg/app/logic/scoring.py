# app/logic/scoring.py
import json
import re
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, Iterable, List, Literal, Mapping, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, Field

from app.errors import ReportError
from app.logic.route_rule import RoutedPrompt
from app.logic.typology import QUESTION_TYPES, QuestionType

# bump whenever extract_answer changes behaviour; it is written into every report
NORMALIZER_VERSION = "2"

Condition = Literal["baseline", "cot", "route_rule", "route_llm"]
CONDITIONS: Tuple[str, ...] = ("baseline", "cot", "route_rule", "route_llm")

_THINK_BLOCK = re.compile(r"<think>.*?</think>", re.IGNORECASE | re.DOTALL)
_THINK_CLOSE = re.compile(r"</think>", re.IGNORECASE)
_MARKER = re.compile(r"answer is|answer:", re.IGNORECASE)
_SENTENCE_END = re.compile(r"(?<=[.!?])\s")
_PUNCT = re.compile(r"[^\w\s]|_")
# lead word (after any articles) directly followed by a comma
_LEAD_COMMA = re.compile(r"^\W*(?:(?:a|an|the)\s+)*(\w+)\s*,")

ARTICLES = {"a", "an", "the"}
YES_WORDS = {"yes", "yeah", "correct", "true"}
NO_WORDS = {"no", "nope", "false", "incorrect"}
NUMBER_WORDS = {
    w: str(i) for i, w in enumerate(
        "zero one two three four five six seven eight nine ten eleven twelve thirteen "
        "fourteen fifteen sixteen seventeen eighteen nineteen twenty".split()
    )
}


def _one_pass(text: str) -> str:
    # 1. last "answer is" / "answer:" marker wins
    markers = list(_MARKER.finditer(text))
    if markers:
        text = text[markers[-1].end():]

    # 2. first non-empty line, then its first sentence
    line = next((ln for ln in text.split("\n") if ln.strip()), "")
    text = _SENTENCE_END.split(line.strip(), maxsplit=1)[0]

    # 3. lower-case, punctuation to spaces, collapse whitespace
    tokens = _PUNCT.sub(" ", text.lower()).split()

    # 4. leading articles
    while tokens and tokens[0] in ARTICLES:
        tokens = tokens[1:]

    # 5. a bare yes/no word, or one followed by a comma, collapses the answer;
    #    number words become digits
    if tokens and (tokens[0] in YES_WORDS or tokens[0] in NO_WORDS):
        lead = _LEAD_COMMA.match(text.lower())
        if len(tokens) == 1 or (lead and lead.group(1) == tokens[0]):
            return "yes" if tokens[0] in YES_WORDS else "no"
    return " ".join(NUMBER_WORDS.get(t, t) for t in tokens)


def extract_answer(raw_output: str) -> str:
    """
    Normalize a raw model reply to the answer tokens compared by exact match.
    Thinking blocks are dropped first. The pipeline is iterated to a fixed
    point so that extract_answer(extract_answer(x)) == extract_answer(x).
    """
    if not raw_output:
        return ""
    text = _THINK_BLOCK.sub(" ", raw_output)
    closes = list(_THINK_CLOSE.finditer(text))
    if closes:
        text = text[closes[-1].end():]
    text = text.replace("\r\n", "\n").replace("\r", "\n")

    for _ in range(16):
        nxt = _one_pass(text)
        if nxt == text:
            break
        text = nxt
    return text


def exact_match(extracted: str, gold_answers: Iterable[str]) -> bool:
    return any(extracted == extract_answer(g) for g in gold_answers)


class EvalRecord(BaseModel):
    instance_id: str
    condition: Condition
    category: QuestionType
    prompt_provenance: RoutedPrompt
    raw_output: str = ""
    extracted: str = ""
    correct: bool = False
    latency_ms: int = 0
    error: Optional[str] = None


class CategoryScore(BaseModel):
    correct: Union[int, float] = 0
    total: int = 0

    @property
    def accuracy(self) -> Optional[float]:
        """Unrounded percentage; None when the category is empty."""
        if self.total == 0:
            return None
        return 100.0 * self.correct / self.total

    def as_dict(self) -> Dict[str, Optional[float]]:
        return {"correct": self.correct, "total": self.total, "accuracy": self.accuracy}


class EvalReport(BaseModel):
    model_id: str
    condition: str
    normalizer_version: str = NORMALIZER_VERSION
    per_category: Dict[QuestionType, CategoryScore] = Field(default_factory=dict)

    @property
    def overall(self) -> CategoryScore:
        cats = [self.per_category.get(t, CategoryScore()) for t in QUESTION_TYPES]
        return CategoryScore(correct=sum(c.correct for c in cats), total=sum(c.total for c in cats))

    def category(self, t: QuestionType) -> CategoryScore:
        return self.per_category.get(t, CategoryScore())

    def totals(self) -> Dict[QuestionType, int]:
        return {t: self.category(t).total for t in QUESTION_TYPES}

    def to_json(self) -> str:
        data = {
            "model_id": self.model_id,
            "condition": self.condition,
            "normalizer_version": self.normalizer_version,
            "per_category": {t.value: self.category(t).as_dict() for t in QUESTION_TYPES},
            "overall": self.overall.as_dict(),
        }
        return json.dumps(data, indent=2, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        data = json.loads(text)
        per = {QuestionType(k): CategoryScore(correct=v["correct"], total=v["total"])
               for k, v in data["per_category"].items()}
        return cls(model_id=data["model_id"], condition=data["condition"],
                   normalizer_version=data.get("normalizer_version", NORMALIZER_VERSION), per_category=per)


class DeltaReport(BaseModel):
    """Signed differences a − b in percentage points; None where either side is NA."""
    model_id: str
    condition_a: str
    condition_b: str
    per_category: Dict[QuestionType, Optional[float]]
    overall: Optional[float]

    def to_json(self) -> str:
        data = {
            "model_id": self.model_id,
            "condition_a": self.condition_a,
            "condition_b": self.condition_b,
            "per_category": {t.value: self.per_category.get(t) for t in QUESTION_TYPES},
            "overall": self.overall,
        }
        return json.dumps(data, indent=2, ensure_ascii=False)


def score(records: Iterable[EvalRecord], instances: Sequence, model_id: str = "",
          condition: Optional[str] = None) -> EvalReport:
    by_id = {inst.id: inst for inst in instances}
    tallies = {t: [0, 0] for t in QUESTION_TYPES}
    seen_condition = condition
    for rec in records:
        inst = by_id.get(rec.instance_id)
        if inst is None:
            raise ReportError(f"record for unknown instance id {rec.instance_id!r}")
        tallies[inst.category][1] += 1
        if rec.correct and rec.error is None:
            tallies[inst.category][0] += 1
        seen_condition = seen_condition or rec.condition
    return EvalReport(
        model_id=model_id,
        condition=seen_condition or "",
        per_category={t: CategoryScore(correct=c, total=n) for t, (c, n) in tallies.items()},
    )


def report_from_accuracies(accuracies: Mapping[QuestionType, float], counts: Mapping[QuestionType, int],
                           model_id: str = "", condition: str = "") -> EvalReport:
    """Rebuild a report from published per-category percentages and category sizes."""
    per = {t: CategoryScore(correct=accuracies[t] * counts[t] / 100.0, total=counts[t]) for t in QUESTION_TYPES}
    return EvalReport(model_id=model_id, condition=condition, per_category=per)


def weighted_accuracy(accuracies: Mapping[QuestionType, float], counts: Mapping[QuestionType, int]) -> float:
    total = sum(counts[t] for t in QUESTION_TYPES)
    if total == 0:
        raise ReportError("no questions to weight")
    return sum(accuracies[t] * counts[t] for t in QUESTION_TYPES) / total


def delta(report_a: EvalReport, report_b: EvalReport) -> DeltaReport:
    if report_a.totals() != report_b.totals():
        raise ReportError(
            f"reports cover different question sets: {_fmt_totals(report_a)} vs {_fmt_totals(report_b)}"
        )
    per: Dict[QuestionType, Optional[float]] = {}
    for t in QUESTION_TYPES:
        a, b = report_a.category(t).accuracy, report_b.category(t).accuracy
        per[t] = None if a is None or b is None else a - b
    oa, ob = report_a.overall.accuracy, report_b.overall.accuracy
    model_id = report_a.model_id if report_a.model_id == report_b.model_id else f"{report_a.model_id} vs {report_b.model_id}"
    return DeltaReport(
        model_id=model_id,
        condition_a=report_a.condition,
        condition_b=report_b.condition,
        per_category=per,
        overall=None if oa is None or ob is None else oa - ob,
    )


def _fmt_totals(r: EvalReport) -> str:
    return "/".join(str(n) for n in r.totals().values())


def round_half_up(x: float, places: int = 2) -> Decimal:
    # settle float noise first so 46.745 stays 46.745 and not 46.74499...
    return Decimal(f"{x:.10f}").quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def fmt_pct(x: Optional[float]) -> str:
    return "NA" if x is None else f"{round_half_up(x)}"


def fmt_signed(x: Optional[float]) -> str:
    if x is None:
        return "NA"
    d = round_half_up(x)
    if d == 0:
        return "0.00"
    return f"+{d}" if d > 0 else f"-{abs(d)}"


def _render_report_table(report: EvalReport) -> str:
    lines = [
        f"model: {report.model_id or '-'}   condition: {report.condition or '-'}   "
        f"normalizer: v{report.normalizer_version}",
        f"{'Category':<10}{'Correct':>10}{'Total':>8}{'Acc (%)':>10}",
    ]
    rows = [(t.value, report.category(t)) for t in QUESTION_TYPES] + [("Overall", report.overall)]
    for name, cs in rows:
        correct = f"{cs.correct:g}" if isinstance(cs.correct, float) else str(cs.correct)
        lines.append(f"{name:<10}{correct:>10}{cs.total:>8}{fmt_pct(cs.accuracy):>10}")
    return "\n".join(lines) + "\n"


def _render_delta_table(d: DeltaReport) -> str:
    lines = [
        f"model: {d.model_id or '-'}   delta = {d.condition_a or 'a'} - {d.condition_b or 'b'}   (negative = degradation)",
        f"{'Category':<10}{'Delta (%)':>12}",
    ]
    for t in QUESTION_TYPES:
        lines.append(f"{t.value:<10}{fmt_signed(d.per_category.get(t)):>12}")
    lines.append(f"{'Overall':<10}{fmt_signed(d.overall):>12}")
    return "\n".join(lines) + "\n"


def render_report(report: Union[EvalReport, DeltaReport]) -> Tuple[str, str]:
    """(machine JSON with unrounded values, fixed-width table)."""
    if isinstance(report, DeltaReport):
        return report.to_json(), _render_delta_table(report)
    return report.to_json(), _render_report_table(report)


def render_comparison(reports: List[EvalReport]) -> str:
    """One row per report, one column per category plus Overall; best cell per column starred."""
    if not reports:
        return ""
    first = reports[0].totals()
    for r in reports[1:]:
        if r.totals() != first:
            raise ReportError("reports to compare must cover the same question set")

    cols = [t.value for t in QUESTION_TYPES] + ["Overall"]
    grid = []
    for r in reports:
        grid.append([r.category(t).accuracy for t in QUESTION_TYPES] + [r.overall.accuracy])
    best = []
    for j in range(len(cols)):
        vals = [row[j] for row in grid if row[j] is not None]
        best.append(max(vals) if vals else None)

    label_w = max(12, *(len(r.condition or r.model_id) + 2 for r in reports))
    lines = [f"{'Method':<{label_w}}" + "".join(f"{c:>10}" for c in cols)]
    for r, row in zip(reports, grid):
        cells = []
        for j, v in enumerate(row):
            mark = "*" if v is not None and best[j] is not None and round_half_up(v) == round_half_up(best[j]) else ""
            cells.append(f"{fmt_pct(v) + mark:>10}")
        lines.append(f"{(r.condition or r.model_id):<{label_w}}" + "".join(cells))
    return "\n".join(lines) + "\n"
