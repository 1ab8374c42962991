import pytest

from app.errors import DatasetError
from app.services.frames import frames_for_scene, image_data_url, list_frames, sample_frames


# -------------------------
# frame sampling
# -------------------------
@pytest.mark.parametrize(
    "available, target, expected",
    [
        (100, 4, [12, 37, 62, 87]),
        (10, 10, list(range(10))),
        (3, 8, [0, 1, 2]),
        (1, 16, [0]),
        (16, 16, list(range(16))),
    ],
)
def test_sample_frames(available, target, expected):
    assert sample_frames(available, target) == expected


@pytest.mark.parametrize("available, target", [(200, 16), (17, 16), (5, 3), (1000, 7)])
def test_sample_frames_properties(available, target):
    idx = sample_frames(available, target)
    assert len(idx) == min(available, target)
    assert all(a < b for a, b in zip(idx, idx[1:]))
    assert 0 <= idx[0] and idx[-1] < available


@pytest.mark.parametrize("available, target", [(0, 16), (10, 0), (-1, 4)])
def test_sample_frames_rejects_bad_input(available, target):
    with pytest.raises(ValueError):
        sample_frames(available, target)


def test_list_frames_directory_sorted(tmp_path):
    for name in ["b.jpg", "a.png", "c.JPEG", "notes.txt"]:
        (tmp_path / name).write_bytes(b"x")
    assert [p.name for p in list_frames(tmp_path)] == ["a.png", "b.jpg", "c.JPEG"]


def test_list_frames_index_file(tmp_path):
    (tmp_path / "raw").mkdir()
    index = tmp_path / "scene.txt"
    index.write_text("# comment\nraw/f1.jpg\n\nraw/f2.jpg\n", encoding="utf-8")
    assert list_frames(index) == [tmp_path / "raw" / "f1.jpg", tmp_path / "raw" / "f2.jpg"]


def test_list_frames_errors(tmp_path):
    with pytest.raises(DatasetError):
        list_frames(tmp_path / "nope")
    with pytest.raises(DatasetError):
        list_frames(tmp_path)


def test_frames_for_scene(replay24_manifest):
    media = frames_for_scene(replay24_manifest, "scene0000_00", 16)
    assert len(media.frame_paths) == 16
    assert media.missing() == []
    short = frames_for_scene(replay24_manifest, "scene0001_00", 16)
    assert len(short.frame_paths) == 8
    indexed = frames_for_scene(replay24_manifest, "scene0002_00", 4)
    assert [p.rsplit("/", 1)[-1] for p in indexed.frame_paths] == ["img_003.jpg", "img_009.jpg", "img_015.jpg", "img_021.jpg"]
    with pytest.raises(DatasetError):
        frames_for_scene(replay24_manifest, "scene9999_00")


def test_image_data_url(tmp_path):
    path = tmp_path / "f.png"
    path.write_bytes(b"abc")
    assert image_data_url(path) == "data:image/png;base64,YWJj"
