# app/logic/typology.py
from enum import Enum

from app.errors import InvalidQuestionError

# ASCII set only; questions are English.
_STRIP = ".,!?:;\"'"


class QuestionType(str, Enum):
    WHAT = "What"
    IS = "Is"
    HOW = "How"
    CAN = "Can"
    WHICH = "Which"
    OTHERS = "Others"


# canonical reporting order
QUESTION_TYPES = (
    QuestionType.WHAT,
    QuestionType.IS,
    QuestionType.HOW,
    QuestionType.CAN,
    QuestionType.WHICH,
    QuestionType.OTHERS,
)

_LEADING = {
    "what": QuestionType.WHAT,
    "is": QuestionType.IS,
    "how": QuestionType.HOW,
    "can": QuestionType.CAN,
    "which": QuestionType.WHICH,
}


def leading_token(question: str) -> str:
    """Lower-cased first whitespace token with surrounding punctuation removed."""
    parts = question.split()
    if not parts:
        raise InvalidQuestionError("question is empty")
    return parts[0].strip(_STRIP).lower()


def classify(question: str) -> QuestionType:
    """
    Map a question to its category by the leading interrogative token.
    Anything that is not what/is/how/can/which lands in Others
    ("Are", "Does", "Where", imperatives like "Tell me ...").
    """
    if question is None or not question.strip():
        raise InvalidQuestionError("question is empty")
    return _LEADING.get(leading_token(question), QuestionType.OTHERS)
