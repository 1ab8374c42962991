# app/store/records.py
import json
import logging
import threading
from pathlib import Path
from typing import Dict, Iterable, List, Union

from pydantic import ValidationError

from app.errors import DatasetError
from app.logic.scoring import EvalRecord

log = logging.getLogger(__name__)


def read_records(path: Union[str, Path]) -> Dict[str, EvalRecord]:
    """
    Records already flushed to disk, keyed by instance id. A torn last line
    (interrupted run) is dropped with a warning; later lines win on duplicates.
    """
    path = Path(path)
    out: Dict[str, EvalRecord] = {}
    if not path.is_file():
        return out
    lines = path.read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = EvalRecord.model_validate_json(line)
        except ValidationError as e:
            if lineno == len(lines):
                log.warning("%s:%d: dropping incomplete record from an interrupted run", path, lineno)
                continue
            raise DatasetError(f"corrupt record: {e.errors()[0]['msg']}", path=str(path), line=lineno) from e
        out[rec.instance_id] = rec
    return out


def _drop_torn_tail(path: Path) -> None:
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        with path.open("r+b") as f:
            f.truncate(data.rfind(b"\n") + 1)


class RecordsWriter:
    """Append-only JSONL sink; every record is flushed as soon as it is written."""

    def __init__(self, path: Union[str, Path], append: bool = False):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if append and self.path.is_file():
            _drop_torn_tail(self.path)
        self._fh = self.path.open("a" if append else "w", encoding="utf-8", newline="\n")
        self._lock = threading.Lock()

    def write(self, record: EvalRecord) -> None:
        with self._lock:
            self._fh.write(record.model_dump_json() + "\n")
            self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RecordsWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_records(records: Iterable[EvalRecord], path: Union[str, Path]) -> None:
    """Rewrite the file with records sorted by instance id (stable bytes for a given result)."""
    path = Path(path)
    ordered: List[EvalRecord] = sorted(records, key=lambda r: r.instance_id)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8", newline="\n") as f:
        for rec in ordered:
            f.write(rec.model_dump_json() + "\n")
    tmp.replace(path)
