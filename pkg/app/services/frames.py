# app/services/frames.py
import base64
import logging
import mimetypes
from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from app.errors import DatasetError
from app.services.chat import MediaRef

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png"}
DEFAULT_FRAME_COUNT = 16


def sample_frames(available: int, target: int) -> List[int]:
    """
    Uniform centre-of-bin sampling: index_i = floor((i + 0.5) * N / T),
    deduplicated. Yields min(T, N) strictly increasing indices.
    """
    if available < 1 or target < 1:
        raise ValueError(f"need available >= 1 and target >= 1, got {available}, {target}")
    # integer form of floor((2i + 1) * N / 2T) avoids float drift
    idx = ((2 * np.arange(target, dtype=np.int64) + 1) * available) // (2 * target)
    return [int(i) for i in np.unique(idx)]


def list_frames(source: Union[str, Path]) -> List[Path]:
    """Frames of one scene: a directory of images, or an index file with one path per line."""
    source = Path(source)
    if source.is_dir():
        frames = sorted(p for p in source.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    elif source.is_file():
        lines = [ln.strip() for ln in source.read_text(encoding="utf-8").splitlines()]
        frames = [(source.parent / ln) for ln in lines if ln and not ln.startswith("#")]
    else:
        raise DatasetError("frames source does not exist", path=str(source))
    if not frames:
        raise DatasetError("no frames found", path=str(source))
    return frames


def frames_for_scene(manifest: Dict[str, Path], scene_id: str, target: int = DEFAULT_FRAME_COUNT) -> MediaRef:
    if scene_id not in manifest:
        raise DatasetError(f"scene {scene_id!r} not in manifest")
    frames = list_frames(manifest[scene_id])
    picked = [str(frames[i]) for i in sample_frames(len(frames), target)]
    log.debug("scene %s: %d of %d frames", scene_id, len(picked), len(frames))
    return MediaRef(frame_paths=picked)


def image_data_url(path: Union[str, Path]) -> str:
    path = Path(path)
    mime = mimetypes.guess_type(path.name)[0] or "image/jpeg"
    data = base64.b64encode(path.read_bytes()).decode("ascii")
    return f"data:{mime};base64,{data}"
