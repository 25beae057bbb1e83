import numpy as np
import pytest

from skipflow.errors import ObjectLeavesImage
from skipflow.synth import DetectorLatencyModel, SceneSpec, bench, generate_scene, load_scene, save_scene

SMALL = dict(width=240, height=200, min_size=(20, 40), max_size=(30, 60), max_amplitude=8.0)


def test_clean_detections_equal_gt():
    scene = generate_scene(SceneSpec(num_objects=4, num_frames=10, seed=1, **SMALL))
    det = [(d.frame, d.x, d.y, d.w, d.h) for d in scene.det]
    gt = [(g.frame, g.x, g.y, g.w, g.h) for g in scene.gt]
    assert det == gt
    assert all(d.id == -1 for d in scene.det)


def test_same_seed_identical():
    a = generate_scene(SceneSpec(num_objects=3, num_frames=8, seed=5, fn_rate=0.2, fp_rate=0.5, **SMALL))
    b = generate_scene(SceneSpec(num_objects=3, num_frames=8, seed=5, fn_rate=0.2, fp_rate=0.5, **SMALL))
    assert all(np.array_equal(x, y) for x, y in zip(a.frames, b.frames))
    assert a.det == b.det and a.gt == b.gt
    assert a.masks.keys() == b.masks.keys()


def test_different_seed_differs():
    a = generate_scene(SceneSpec(num_objects=3, num_frames=2, seed=5, **SMALL))
    b = generate_scene(SceneSpec(num_objects=3, num_frames=2, seed=6, **SMALL))
    assert not np.array_equal(a.frames[0], b.frames[0])


def test_drop_rate():
    scene = generate_scene(SceneSpec(num_objects=10, num_frames=200, fn_rate=0.3, seed=3))
    dropped = 1 - len(scene.det) / len(scene.gt)
    assert 0.27 <= dropped <= 0.33


def test_objects_stay_inside():
    spec = SceneSpec(num_objects=10, num_frames=200, seed=9)
    scene = generate_scene(spec)
    for g in scene.gt:
        assert g.x >= spec.margin and g.y >= spec.margin
        assert g.x + g.w <= spec.width - spec.margin and g.y + g.h <= spec.height - spec.margin


def test_object_too_large():
    with pytest.raises(ObjectLeavesImage):
        generate_scene(SceneSpec(num_objects=1, width=50, height=50))


def test_no_objects():
    scene = generate_scene(SceneSpec(num_objects=0, num_frames=3, **SMALL))
    assert scene.gt == [] and scene.det == [] and len(scene.frames) == 3


def test_masks_are_rectangle_footprints():
    scene = generate_scene(SceneSpec(num_objects=3, num_frames=2, seed=2, **SMALL))
    for (t, i), mask in scene.masks.items():
        d = scene.det_by_frame()[t][i]
        assert mask.shape == (int(d.h), int(d.w)) and mask.all()


def test_jittered_mask_marks_true_rectangle():
    scene = generate_scene(SceneSpec(num_objects=1, num_frames=1, seed=2, bbox_jitter_sigma=3.0, **SMALL))
    (d,), (g,) = scene.det, scene.gt
    mask = scene.masks[(1, 0)]
    ox, oy = int(np.floor(d.x)), int(np.floor(d.y))
    rows = np.arange(mask.shape[0]) + oy
    cols = np.arange(mask.shape[1]) + ox
    inside = (rows[:, None] >= g.y) & (rows[:, None] < g.y + g.h) & (cols[None, :] >= g.x) & (cols[None, :] < g.x + g.w)
    assert np.array_equal(mask, inside)


def test_save_load_round_trip(tmp_path):
    scene = generate_scene(SceneSpec(num_objects=3, num_frames=4, seed=2, fp_rate=1.0, **SMALL))
    save_scene(scene, tmp_path)
    back = load_scene(tmp_path)
    assert all(np.array_equal(x, y) for x, y in zip(scene.frames, back.frames))
    assert back.gt == scene.gt and back.det == scene.det
    assert back.masks.keys() == scene.masks.keys()


def test_bench_rows():
    scene = generate_scene(SceneSpec(num_objects=3, num_frames=20, seed=2, **SMALL))
    rows = bench(scene, [1, 5], DetectorLatencyModel(100.0))
    assert [r.L for r in rows] == [1, 5]
    assert rows[0].mota == 1.0 and rows[0].idsw == 0
    assert rows[1].total_fps > rows[0].total_fps


def test_bench_needs_intervals():
    scene = generate_scene(SceneSpec(num_objects=1, num_frames=2, **SMALL))
    with pytest.raises(ValueError):
        bench(scene, [])


@pytest.mark.parametrize("kw", [{"fn_rate": 1.5}, {"num_frames": 0}, {"bbox_jitter_sigma": -1.0}])
def test_spec_validated(kw):
    with pytest.raises(ValueError):
        SceneSpec(**kw)
