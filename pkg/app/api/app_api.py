from typing import List, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from app.errors import SqaRouteError
from app.logic.route_rule import REASONING_NEED, ROUTING_TABLE, RoutedPrompt, route_rule
from app.logic.templates import list_templates, situation_prefix
from app.logic.typology import QUESTION_TYPES, classify, leading_token

app = FastAPI(
    title="sqaroute API",
    description="Preview question-type routing for situated scene questions.",
    version="0.1.0",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# -------------------------
# Models
# -------------------------
class ClassifyRequest(BaseModel):
    question: str = Field(..., description="Natural-language question", examples=["Can I sit on that?"])


class ClassifyResponse(BaseModel):
    question: str
    leading_token: str
    question_type: str


class RouteRequest(BaseModel):
    question: str = Field(..., examples=["Is the lamp left of the desk?"])
    situation: Optional[str] = Field(None, examples=["I am standing at the door, facing the desk."])
    strict: bool = False


class TemplateOut(BaseModel):
    id: str
    body: str
    requires_situation: bool


class TemplatesOut(BaseModel):
    templates: List[TemplateOut]
    situation_prefix: str


# -------------------------
# Basic routes
# -------------------------
@app.get("/")
def index():
    return {
        "message": "sqaroute api up",
        "routes": {
            "docs": "/docs",
            "health": "/healthz",
            "templates": "/templates",
            "routing_table": "/routing-table",
            "classify": "/classify",
            "route": "/route",
        },
    }


@app.get("/healthz")
def healthz():
    return {"ok": True}


# -------------------------
# Library
# -------------------------
@app.get("/templates", response_model=TemplatesOut)
def get_templates():
    return TemplatesOut(
        templates=[TemplateOut(**t.model_dump()) for t in list_templates()],
        situation_prefix=situation_prefix().body,
    )


@app.get("/routing-table")
def get_routing_table():
    return {
        "rows": [
            {"question_type": t.value, "template_id": ROUTING_TABLE[t], "reasoning": REASONING_NEED[t]}
            for t in QUESTION_TYPES
        ]
    }


# -------------------------
# Classify + route (rule router only; no model calls from here)
# -------------------------
@app.post("/classify", response_model=ClassifyResponse)
def post_classify(req: ClassifyRequest):
    try:
        qtype = classify(req.question)
    except SqaRouteError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return ClassifyResponse(question=req.question, leading_token=leading_token(req.question), question_type=qtype.value)


@app.post("/route", response_model=RoutedPrompt)
def post_route(req: RouteRequest):
    try:
        return route_rule(req.question, req.situation, strict=req.strict)
    except SqaRouteError as e:
        raise HTTPException(status_code=400, detail=str(e))
