# app/logic/harness.py
import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Callable, Collection, Dict, List, Optional, Sequence

from tqdm import tqdm

from app.errors import ConfigError
from app.logic.route_llm import DemoSet, load_demos, route_llm
from app.logic.route_rule import ROUTING_TABLE, RoutedPrompt, route_rule
from app.logic.scoring import CONDITIONS, EvalRecord, exact_match, extract_answer
from app.services.chat import Backend, ChatRequest, ChatResponse, complete
from app.services.cot import baseline_prompt, run_baseline, run_cot_two_stage
from app.services.frames import DEFAULT_FRAME_COUNT, frames_for_scene
from app.store.dataset import SqaInstance

log = logging.getLogger(__name__)


def _answer(inst: SqaInstance, condition: str, answer_backend: Backend, router_backend: Optional[Backend],
            demos: Optional[DemoSet], manifest: Optional[Dict[str, Path]], frames: int,
            temperature: float) -> EvalRecord:
    media = frames_for_scene(manifest, inst.scene_id, frames) if manifest is not None else None

    # situation is withheld for baseline and cot
    if condition in ("baseline", "cot"):
        routed = RoutedPrompt(
            prompt_text=baseline_prompt(inst.question),
            router=condition,
            question_type=inst.category,
        )
    elif condition == "route_rule":
        routed = route_rule(inst.question, inst.situation)
    else:
        routed = route_llm(inst.question, inst.situation, demos, router_backend)

    resp: ChatResponse
    if condition == "baseline":
        resp = run_baseline(answer_backend, media, inst.question, temperature=temperature)
    elif condition == "cot":
        resp = run_cot_two_stage(answer_backend, media, inst.question, routed.prompt_text, temperature=temperature)
    else:
        resp = complete(answer_backend, ChatRequest.from_user_text(routed.prompt_text, temperature=temperature), media)

    extracted = extract_answer(resp.text)
    return EvalRecord(
        instance_id=inst.id,
        condition=condition,
        category=inst.category,
        prompt_provenance=routed,
        raw_output=resp.text,
        extracted=extracted,
        correct=exact_match(extracted, inst.gold_answers),
        latency_ms=resp.latency_ms,
    )


_ROUTER_OF = {"baseline": "baseline", "cot": "cot", "route_rule": "rule", "route_llm": "llm"}


def _failed(inst: SqaInstance, condition: str, err: Exception) -> EvalRecord:
    router = _ROUTER_OF[condition]
    routed = RoutedPrompt(
        prompt_text="",
        router=router,
        template_id=ROUTING_TABLE[inst.category] if router == "rule" else None,
        question_type=inst.category,
    )
    return EvalRecord(
        instance_id=inst.id,
        condition=condition,
        category=inst.category,
        prompt_provenance=routed,
        error=f"{type(err).__name__}: {err}",
    )


def run_eval(
    instances: Sequence[SqaInstance],
    condition: str,
    answer_backend: Backend,
    router_backend: Optional[Backend] = None,
    demos: Optional[DemoSet] = None,
    manifest: Optional[Dict[str, Path]] = None,
    concurrency_limit: int = 4,
    frames: int = DEFAULT_FRAME_COUNT,
    temperature: float = 0.3,
    skip_ids: Collection[str] = (),
    on_record: Optional[Callable[[EvalRecord], None]] = None,
    progress: bool = False,
) -> List[EvalRecord]:
    """
    Evaluate one condition over `instances`. Per-instance failures become
    records with `error` set; the run itself only fails on bad configuration.
    Output is sorted by instance id whatever order the calls finish in.
    """
    if condition not in CONDITIONS:
        raise ConfigError(f"unknown condition {condition!r}; expected one of {list(CONDITIONS)}")
    if concurrency_limit < 1:
        raise ConfigError("concurrency_limit must be >= 1")
    if condition == "route_llm":
        if router_backend is None:
            raise ConfigError("route_llm needs a router backend")
        demos = demos or load_demos()
    if manifest is None:
        log.warning("no scene manifest given; answer requests go out without frames")

    todo = [inst for inst in instances if inst.id not in skip_ids]
    log.info("run_eval %s: %d instances (%d skipped as done), model %s, %d in flight",
             condition, len(todo), len(instances) - len(todo), answer_backend.model_id, concurrency_limit)

    def work(inst: SqaInstance) -> EvalRecord:
        try:
            return _answer(inst, condition, answer_backend, router_backend, demos, manifest, frames, temperature)
        except Exception as e:
            log.exception("instance %s failed: %s", inst.id, e)
            return _failed(inst, condition, e)

    t0 = time.monotonic()
    records: List[EvalRecord] = []
    pool = ThreadPoolExecutor(max_workers=concurrency_limit)
    try:
        futures = [pool.submit(work, inst) for inst in todo]
        for fut in tqdm(as_completed(futures), total=len(futures), desc=condition, disable=not progress):
            rec = fut.result()
            records.append(rec)
            if on_record is not None:
                on_record(rec)
    except BaseException:
        # queued instances never start; at most concurrency_limit calls are still in flight
        log.warning("run_eval %s interrupted after %d records", condition, len(records))
        pool.shutdown(wait=False, cancel_futures=True)
        raise
    pool.shutdown()

    records.sort(key=lambda r: r.instance_id)
    n_err = sum(1 for r in records if r.error)
    log.info("run_eval %s finished in %.1fs: %d records, %d correct, %d errors", condition,
             time.monotonic() - t0, len(records), sum(r.correct for r in records), n_err)
    return records
