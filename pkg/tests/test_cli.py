import os

import numpy as np
import pytest

from skipflow.cli import main
from skipflow.imaging import load_ppm, write_pgm
from skipflow.motio import parse_results
from skipflow.overlay import box_edges, id_color


@pytest.fixture(scope="module")
def scene_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("scene")
    assert main(["synth", "--out", str(out), "--objects", "3", "--frames", "12", "--seed", "4", "--width", "240", "--height", "240"]) == 0
    return out


def test_track_and_eval(scene_dir, tmp_path, capsys):
    res = tmp_path / "res.txt"
    rc = main(["track", "--frames", str(scene_dir / "frames"), "--det", str(scene_dir / "det.txt"),
               "--masks", str(scene_dir / "masks"), "--out", str(res)])
    assert rc == 0
    out = capsys.readouterr().out
    for stage in ("flow", "association", "sampling", "total"):
        assert stage in out
    rows = [(r.frame, r.id) for g in parse_results(res.read_text()).values() for r in g]
    assert rows == sorted(rows)

    assert main(["eval", "--gt", str(scene_dir / "gt.txt"), "--res", str(res)]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0].split() == ["MT", "ML", "Rcll", "Prcn", "IDsw", "Frag", "MOTA"]
    assert "MOTA=1.000" in text


def test_track_deterministic(scene_dir, tmp_path):
    outs = []
    for name in ("a.txt", "b.txt"):
        path = tmp_path / name
        assert main(["track", "--frames", str(scene_dir / "frames"), "--det", str(scene_dir / "det.txt"), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_track_config_l15(scene_dir, tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("L = 15\n")
    assert main(["track", "--frames", str(scene_dir / "frames"), "--det", str(scene_dir / "det.txt"),
                 "--config", str(cfg), "--out", str(tmp_path / "r.txt")]) == 0
    assert "detection frames: 1" in capsys.readouterr().out


def test_missing_frame(tmp_path, capsys):
    frames = tmp_path / "frames"
    frames.mkdir()
    for t in (1, 2, 4):
        (frames / f"{t:06d}.pgm").write_bytes(write_pgm(np.zeros((32, 32), np.uint8)))
    (tmp_path / "det.txt").write_text("")
    rc = main(["track", "--frames", str(frames), "--det", str(tmp_path / "det.txt"), "--out", str(tmp_path / "r.txt")])
    assert rc == 2
    assert "000003.pgm" in capsys.readouterr().err


def test_malformed_det_row(scene_dir, tmp_path, capsys):
    bad = tmp_path / "det.txt"
    bad.write_text("1,-1,1,1,5,5,0.9\n1,-1,oops\n")
    rc = main(["track", "--frames", str(scene_dir / "frames"), "--det", str(bad), "--out", str(tmp_path / "r.txt")])
    assert rc == 2
    assert "line 2" in capsys.readouterr().err


def test_bad_config_is_data_error(scene_dir, tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("L = zero\n")
    assert main(["track", "--frames", str(scene_dir / "frames"), "--det", str(scene_dir / "det.txt"),
                 "--config", str(cfg), "--out", str(tmp_path / "r.txt")]) == 2


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["track", "--frobnicate"])
    assert exc.value.code == 1


def test_no_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def _write(path, text):
    path.write_text(text)
    return str(path)


SIX_GT = "".join(f"{t},1,10,10,20,40,1,1,1\n" for t in range(1, 7))
SIX_RES = "".join(f"{t},{1 if t <= 3 else 2},10,10,20,40,1,-1,-1,-1\n" for t in range(1, 7))


def test_eval_six_frame_switch(tmp_path, capsys):
    assert main(["eval", "--gt", _write(tmp_path / "gt.txt", SIX_GT), "--res", _write(tmp_path / "res.txt", SIX_RES)]) == 0
    head, body = capsys.readouterr().out.strip().splitlines()[-2:]
    values = dict(zip(head.split(","), body.split(",")))
    assert int(values["idsw"]) == 1
    assert float(values["mota"]) == pytest.approx(1 - 1 / 6)


def test_eval_gt_vs_itself(tmp_path, capsys):
    gt = _write(tmp_path / "gt.txt", SIX_GT)
    res = _write(tmp_path / "res.txt", SIX_GT.replace(",1,1,1\n", ",1,-1,-1,-1\n"))
    assert main(["eval", "--gt", gt, "--res", res]) == 0
    assert "MOTA=1.000" in capsys.readouterr().out


def test_eval_empty_res(tmp_path, capsys):
    assert main(["eval", "--gt", _write(tmp_path / "gt.txt", SIX_GT), "--res", _write(tmp_path / "res.txt", "")]) == 0
    assert "MOTA=0.000" in capsys.readouterr().out


def test_eval_parse_failure(tmp_path):
    assert main(["eval", "--gt", _write(tmp_path / "gt.txt", "1,2,3\n"), "--res", _write(tmp_path / "r.txt", "")]) == 2


def test_eval_missing_file(tmp_path):
    assert main(["eval", "--gt", str(tmp_path / "nope.txt"), "--res", str(tmp_path / "nope2.txt")]) == 2


class TestSynth:
    def test_layout(self, scene_dir):
        assert sorted(os.listdir(scene_dir)) == ["det.txt", "frames", "gt.txt", "masks"]
        assert len(os.listdir(scene_dir / "frames")) == 12

    def test_same_seed_same_bytes(self, tmp_path):
        args = ["--objects", "2", "--frames", "3", "--seed", "9", "--fn", "0.3", "--fp", "0.5", "--width", "200", "--height", "200"]
        assert main(["synth", "--out", str(tmp_path / "a"), *args]) == 0
        assert main(["synth", "--out", str(tmp_path / "b"), *args]) == 0
        for name in ("det.txt", "gt.txt", "frames/000002.pgm"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_no_objects(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path), "--objects", "0", "--frames", "2"]) == 0
        assert (tmp_path / "det.txt").read_text() == "" and (tmp_path / "gt.txt").read_text() == ""
        assert sorted(os.listdir(tmp_path / "frames")) == ["000001.pgm", "000002.pgm"]

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["synth", "--out", str(blocker / "sub"), "--objects", "1", "--frames", "1"]) == 2


class TestBench:
    def test_csv(self, scene_dir, capsys):
        assert main(["bench", "--scene", str(scene_dir), "--L", "1,3", "--det-latency-ms", "100"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("L,MOTA,IDsw")
        rows = [l.split(",") for l in lines[1:]]
        assert [r[0] for r in rows] == ["1", "3"]
        assert float(rows[1][4]) > float(rows[0][4])

    def test_empty_l_list(self, scene_dir):
        assert main(["bench", "--scene", str(scene_dir), "--L", ""]) == 1

    def test_missing_scene(self, tmp_path):
        assert main(["bench", "--scene", str(tmp_path), "--L", "1"]) == 2


class TestOverlay:
    def _frames(self, tmp_path, n=2):
        frames = tmp_path / "frames"
        frames.mkdir()
        for t in range(1, n + 1):
            (frames / f"{t:06d}.pgm").write_bytes(write_pgm(np.full((60, 80), 100, np.uint8)))
        return frames

    def test_empty_results_copy_frames(self, tmp_path):
        frames = self._frames(tmp_path)
        assert main(["overlay", "--frames", str(frames), "--res", _write(tmp_path / "r.txt", ""), "--out", str(tmp_path / "o")]) == 0
        img = load_ppm((tmp_path / "o" / "000001.ppm").read_bytes())
        assert (img == 100).all()

    def test_box_edges_drawn(self, tmp_path):
        frames = self._frames(tmp_path)
        res = _write(tmp_path / "r.txt", "1,3,10,12,30,20,1,-1,-1,-1\n2,3,11,12,30,20,1,-1,-1,-1\n")
        assert main(["overlay", "--frames", str(frames), "--res", res, "--out", str(tmp_path / "o")]) == 0
        img = load_ppm((tmp_path / "o" / "000001.ppm").read_bytes())
        color = np.array(id_color(3))
        left, top, right, bottom = box_edges(10, 12, 30, 20)
        assert (left, top, right, bottom) == (10, 12, 39, 31)
        # probe the middle of each edge, and just inside each edge
        assert (img[22, left] == color).all() and (img[22, right] == color).all()
        assert (img[top, 25] == color).all() and (img[bottom, 25] == color).all()
        assert (img[22, left + 1] == 100).all() and (img[bottom - 1, 25] == 100).all()
        # same id, same colour on the next frame
        img2 = load_ppm((tmp_path / "o" / "000002.ppm").read_bytes())
        assert (img2[22, 11] == color).all()

    def test_points_drawn(self, tmp_path):
        frames = self._frames(tmp_path, 1)
        res = _write(tmp_path / "r.txt", "1,1,10,10,30,30,1,-1,-1,-1\n")
        pts = _write(tmp_path / "p.txt", "1,1,25.5,25.5\n")
        assert main(["overlay", "--frames", str(frames), "--res", res, "--points", pts, "--out", str(tmp_path / "o")]) == 0
        img = load_ppm((tmp_path / "o" / "000001.ppm").read_bytes())
        assert (img[25, 25] == id_color(1)).all()

    def test_result_frame_mismatch(self, tmp_path):
        frames = self._frames(tmp_path)
        res = _write(tmp_path / "r.txt", "5,1,10,10,30,30,1,-1,-1,-1\n")
        assert main(["overlay", "--frames", str(frames), "--res", res, "--out", str(tmp_path / "o")]) == 2

    def test_colors_distinct_and_stable(self):
        assert id_color(7) == id_color(7)
        assert len({id_color(i) for i in range(1, 50)}) == 49
