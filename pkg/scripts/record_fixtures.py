# scripts/record_fixtures.py
"""
Build a replay fixture store by running every condition once against live
endpoints. Existing fixtures are reused, so an interrupted run can simply be
started again. Touch a file named STOP to end after the current condition.

    SQAROUTE_ENDPOINT=http://localhost:8000/v1 python scripts/record_fixtures.py
"""
import os
import sys
import logging
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence

# Make "app." imports work when run as a script
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from dotenv import load_dotenv

from app import config
from app.logic.harness import run_eval
from app.logic.scoring import CONDITIONS
from app.services.chat import Backend
from app.services.replay import FixtureStore, RecordingBackend
from app.store import dataset

load_dotenv()

log = logging.getLogger(__name__)

DATASET = Path(os.getenv("SQA3D_JSONL", "data/test.jsonl"))
MANIFEST = os.getenv("SCENE_MANIFEST")
FIXTURES_DIR = Path(os.getenv("FIXTURES_DIR", "fixtures/replay"))
ROUTER_ENDPOINT = os.getenv("SQAROUTE_ROUTER_ENDPOINT")  # defaults to the answer endpoint
FRAMES = int(os.getenv("FRAMES", "16"))
LIMIT = int(os.getenv("LIMIT", "0"))  # 0 = whole dataset


def record_all(
    instances: Sequence[dataset.SqaInstance],
    answer: Backend,
    router: Backend,
    store: FixtureStore,
    manifest: Optional[Dict[str, Path]] = None,
    conditions: Iterable[str] = CONDITIONS,
    frames: int = FRAMES,
) -> Dict[str, int]:
    """Run each condition through recording backends; returns failed-instance counts per condition."""
    answer = RecordingBackend(answer, store)
    router = RecordingBackend(router, store)
    failures: Dict[str, int] = {}
    for condition in conditions:
        if os.path.exists("STOP"):
            log.info("STOP present; stopping before %s", condition)
            break
        before = len(store)
        records = run_eval(instances, condition, answer, router_backend=router, manifest=manifest,
                           concurrency_limit=1, frames=frames)
        failures[condition] = sum(1 for r in records if r.error)
        log.info("%s: %d new fixtures, %d failed instances", condition, len(store) - before, failures[condition])
    return failures


def main() -> int:
    logging.basicConfig(level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO))
    instances = dataset.load(DATASET)
    if LIMIT:
        instances = instances[:LIMIT]
    manifest = dataset.load_manifest(MANIFEST) if MANIFEST else None

    answer = config.build_backend(config.backend_spec(kind="live"))
    router = config.build_backend(config.backend_spec(
        kind="live", endpoint=ROUTER_ENDPOINT, model_id=config.ROUTER_MODEL,
    ))
    failures = record_all(instances, answer, router, FixtureStore(FIXTURES_DIR), manifest=manifest)
    for condition, n in failures.items():
        print(f"{condition:<12}{n:>6} failed")
    return 1 if any(failures.values()) else 0


if __name__ == "__main__":
    sys.exit(main())
