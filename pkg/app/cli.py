# app/cli.py
"""
Operator surface.

    python -m app.cli convert --questions Q.json --annotations A.json --out test.jsonl
    python -m app.cli route "Can I sit on that?" --situation "..." --mode rule
    python -m app.cli eval --config run.json --condition all
    python -m app.cli diff runs/cot/report.json runs/baseline/report.json
    python -m app.cli report runs/*/report.json

Exit codes: 0 ok, 1 runtime failure, 2 usage or configuration error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from app import config
from app.errors import ConfigError, SqaRouteError
from app.logic.harness import run_eval
from app.logic.route_llm import DEFAULT_DEMOS_PATH, load_demos, route_llm
from app.logic.route_rule import route_rule
from app.logic.scoring import CONDITIONS, EvalReport, delta, render_comparison, render_report, score
from app.store import dataset
from app.store.records import RecordsWriter, read_records, write_records

log = logging.getLogger(__name__)


def _require_file(path: Optional[Path], what: str) -> Path:
    if path is None or not Path(path).exists():
        raise ConfigError(f"{what} not found: {path}")
    return Path(path)


# -------------------------
# convert
# -------------------------
def cmd_convert(args) -> int:
    qfile = _require_file(args.questions, "questions file")
    afile = _require_file(args.annotations, "annotations file")

    result = dataset.convert_official(qfile, afile)
    if args.out:
        dataset.write_jsonl(result.instances, args.out)

    hist = dataset.category_histogram(result.instances)
    dev = dataset.histogram_deviation(hist)
    print(f"total: {len(result.instances)}  skipped: {result.skipped} "
          f"({result.skipped_questions} questions, {result.skipped_annotations} annotations)")
    print(f"{'Category':<10}{'Count':>8}{'Ref':>8}{'Dev':>8}")
    for t, n in hist.items():
        print(f"{t.value:<10}{n:>8}{dataset.REFERENCE_TEST_COUNTS[t]:>8}{dev[t]:>+8d}")
        if dev[t] and len(result.instances) == sum(dataset.REFERENCE_TEST_COUNTS.values()):
            log.warning("category %s deviates from the published test count by %+d", t.value, dev[t])
    if args.out:
        print(f"wrote {args.out}")
    return 0


# -------------------------
# route
# -------------------------
def cmd_route(args) -> int:
    if args.mode == "rule":
        routed = route_rule(args.question, args.situation, strict=args.strict)
    else:
        spec = config.backend_spec(
            kind=args.router_kind,
            endpoint=args.router_endpoint,
            model_id=args.router_model or config.ROUTER_MODEL,
            fixtures=args.replay_dir,
        )
        demos = load_demos(args.demos or DEFAULT_DEMOS_PATH)
        routed = route_llm(args.question, args.situation, demos, config.build_backend(spec))

    if args.json:
        print(routed.model_dump_json(indent=2))
        return 0
    print(f"type: {routed.question_type.value}   router: {routed.router}   "
          f"template: {routed.template_id or '-'}   situation used: {routed.used_situation}")
    if routed.fallback_reason:
        print(f"fallback: {routed.fallback_reason} (router model {routed.router_model_id})")
    print("-" * 60)
    print(routed.prompt_text)
    return 0


# -------------------------
# eval
# -------------------------
def _eval_overrides(args, condition: str) -> dict:
    return {
        "dataset": args.dataset,
        "manifest": args.manifest,
        "condition": condition,
        "demos_path": args.demos,
        "frames": args.frames,
        "temperature": args.temperature,
        "concurrency_limit": args.concurrency,
        "output": args.output,
        "replay_dir": args.replay_dir,
        "resume": True if args.resume else None,
        "answer_backend": {
            "kind": args.backend,
            "endpoint": args.endpoint,
            "model_id": args.model,
            "api_key_env": args.api_key_env,
            "media_mode": args.media_mode,
        },
        "router_backend": {
            "kind": args.router_kind,
            "endpoint": args.router_endpoint,
            "model_id": args.router_model,
        } if (args.router_kind or args.router_endpoint or args.router_model) else None,
    }


def run_one_condition(cfg: config.RunConfig, progress: bool = True) -> EvalReport:
    out_dir = Path(cfg.output) / cfg.condition
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.resolved.json").write_text(json.dumps(cfg.resolved(), indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")

    instances = dataset.load(_require_file(cfg.dataset, "dataset"))
    manifest = dataset.load_manifest(_require_file(cfg.manifest, "scene manifest")) if cfg.manifest else None
    answer_backend = config.build_backend(cfg.answer_backend)
    router_backend = config.build_backend(cfg.router_backend) if cfg.router_backend else None
    demos = load_demos(cfg.demos_path) if cfg.demos_path else None

    records_path = out_dir / "records.jsonl"
    done = read_records(records_path) if cfg.resume else {}
    if done:
        log.info("resuming %s: %d records already on disk", cfg.condition, len(done))

    with RecordsWriter(records_path, append=cfg.resume) as sink:
        new = run_eval(
            instances,
            cfg.condition,
            answer_backend,
            router_backend=router_backend,
            demos=demos,
            manifest=manifest,
            concurrency_limit=cfg.concurrency_limit,
            frames=cfg.frames,
            temperature=cfg.temperature,
            skip_ids=set(done),
            on_record=sink.write,
            progress=progress,
        )

    records = {**done, **{r.instance_id: r for r in new}}
    write_records(records.values(), records_path)

    report = score(records.values(), instances, model_id=cfg.answer_backend.model_id, condition=cfg.condition)
    report_json, table = render_report(report)
    (out_dir / "report.json").write_text(report_json + "\n", encoding="utf-8")
    (out_dir / "report.txt").write_text(table, encoding="utf-8")
    return report


def cmd_eval(args) -> int:
    conditions = list(CONDITIONS) if args.condition == "all" else [args.condition]
    if args.condition is None and args.config is None:
        raise ConfigError("give --condition or a --config with a condition")

    # every condition is validated before the first backend call
    configs = [config.load_config(args.config, _eval_overrides(args, cond)) for cond in conditions]
    for cfg in configs:
        try:
            report = run_one_condition(cfg, progress=not args.quiet and sys.stderr.isatty())
        except KeyboardInterrupt:
            print(f"interrupted; partial records kept under {Path(cfg.output) / cfg.condition}, "
                  "rerun with --resume", file=sys.stderr)
            return 1
        print(render_report(report)[1])
    return 0


# -------------------------
# diff / report
# -------------------------
def _read_report(path: Path) -> EvalReport:
    return EvalReport.from_json(_require_file(path, "report").read_text(encoding="utf-8"))


def cmd_diff(args) -> int:
    d = delta(_read_report(args.report_a), _read_report(args.report_b))
    report_json, table = render_report(d)
    print(report_json if args.json else table, end="" if not args.json else "\n")
    return 0


def cmd_report(args) -> int:
    if args.records:
        instances = dataset.load(_require_file(args.dataset, "dataset"))
        records = read_records(_require_file(args.records, "records file"))
        report = score(records.values(), instances, model_id=args.model_id or "", condition=args.condition)
        report_json, table = render_report(report)
        print(report_json if args.json else table)
        return 0
    if not args.reports:
        raise ConfigError("give report files, or --records with --dataset")
    reports = [_read_report(p) for p in args.reports]
    if len(reports) == 1:
        print(render_report(reports[0])[1])
    else:
        print(render_comparison(reports))
    return 0


# -------------------------
# parser
# -------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sqaroute", description="Question-type prompt routing and SQA3D evaluation.")
    p.add_argument("--log-level", default=config.LOG_LEVEL)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("convert", help="official SQA3D files -> canonical JSONL")
    c.add_argument("--questions", type=Path, required=True)
    c.add_argument("--annotations", type=Path, required=True)
    c.add_argument("--out", type=Path)
    c.set_defaults(func=cmd_convert)

    r = sub.add_parser("route", help="preview the prompt a question is routed to")
    r.add_argument("question")
    r.add_argument("--situation")
    r.add_argument("--mode", choices=["rule", "llm"], default="rule")
    r.add_argument("--strict", action="store_true", help="error on an Is question without a situation")
    r.add_argument("--json", action="store_true")
    r.add_argument("--router-kind", choices=["live", "replay", "record", "mock"], default="live")
    r.add_argument("--router-endpoint")
    r.add_argument("--router-model")
    r.add_argument("--replay-dir", type=Path)
    r.add_argument("--demos", type=Path)
    r.set_defaults(func=cmd_route)

    e = sub.add_parser("eval", help="run one or all prompting conditions")
    e.add_argument("--config", type=Path)
    e.add_argument("--dataset", type=Path)
    e.add_argument("--manifest", type=Path)
    e.add_argument("--condition", choices=[*CONDITIONS, "all"])
    e.add_argument("--backend", choices=["live", "replay", "record", "mock"])
    e.add_argument("--endpoint")
    e.add_argument("--model")
    e.add_argument("--api-key-env")
    e.add_argument("--media-mode", choices=["base64", "url"])
    e.add_argument("--router-kind", choices=["live", "replay", "record", "mock"])
    e.add_argument("--router-endpoint")
    e.add_argument("--router-model")
    e.add_argument("--replay-dir", type=Path)
    e.add_argument("--demos", type=Path)
    e.add_argument("--frames", type=int)
    e.add_argument("--temperature", type=float)
    e.add_argument("--concurrency", type=int)
    e.add_argument("--output", type=Path)
    e.add_argument("--resume", action="store_true")
    e.add_argument("--quiet", action="store_true")
    e.set_defaults(func=cmd_eval)

    d = sub.add_parser("diff", help="per-category delta a - b of two reports")
    d.add_argument("report_a", type=Path)
    d.add_argument("report_b", type=Path)
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=cmd_diff)

    rp = sub.add_parser("report", help="render reports, or re-score a records file")
    rp.add_argument("reports", type=Path, nargs="*")
    rp.add_argument("--records", type=Path)
    rp.add_argument("--dataset", type=Path)
    rp.add_argument("--model-id")
    rp.add_argument("--condition")
    rp.add_argument("--json", action="store_true")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SqaRouteError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
