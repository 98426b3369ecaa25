import json

import pytest

from mtmceval.anchors import parse_anchor_bank
from mtmceval.cli import build_parser, main
from mtmceval.datamodel import Box3D, Detection, make_sequence
from mtmceval.ingest import emit_tracks


def write_tracks(path, n_frames=6, fps_step=0.1, n_objects=2):
    frames = {}
    for f in range(n_frames):
        frames[f] = [
            Detection(
                box=Box3D(fps_step * f + 2.0 * i, 1.0 * i, 0.9, 0.6, 0.6, 1.8),
                class_id=0,
                confidence=1.0,
                track_id=i,
            )
            for i in range(n_objects)
        ]
    seq = make_sequence(frames, native_fps=2.0)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        emit_tracks(seq, fh)
    return seq


# --- evaluate -----------------------------------------------------------------


def test_evaluate_perfect(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    write_tracks(gt)
    out = tmp_path / "report.json"
    code = main(
        ["evaluate", "--gt", str(gt), "--pred", str(gt), "--out", str(out)]
    )
    assert code == 0
    text = capsys.readouterr().out
    assert "HOTA" in text and "100.0" in text
    payload = json.loads(out.read_text())
    assert payload["class_average"]["hota"] == 1.0
    assert payload["class_average"]["deta"] == 1.0
    assert payload["window"]["size"] == 6


def test_evaluate_missing_file_names_path(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    write_tracks(gt)
    code = main(["evaluate", "--gt", str(gt), "--pred", str(tmp_path / "nope.csv")])
    assert code == 2
    assert "nope.csv" in capsys.readouterr().err


def test_evaluate_malformed_csv(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    write_tracks(gt)
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1,0,oops,2,3,1,1,1,0,0.5\n")
    code = main(["evaluate", "--gt", str(gt), "--pred", str(bad)])
    assert code == 2
    err = capsys.readouterr().err
    assert "bad.csv" in err and "line 1" in err


def test_evaluate_config_unknown_key(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    write_tracks(gt)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"no_such_option": 1}))
    code = main(
        ["evaluate", "--gt", str(gt), "--pred", str(gt), "--config", str(cfg)]
    )
    assert code == 2
    assert "no_such_option" in capsys.readouterr().err


def test_evaluate_flag_overrides_config(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    write_tracks(gt)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dur_alpha": 0.3}))
    out = tmp_path / "r.json"
    code = main(
        [
            "evaluate",
            "--gt",
            str(gt),
            "--pred",
            str(gt),
            "--config",
            str(cfg),
            "--dur-alpha",
            "0.7",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    assert json.loads(out.read_text())["dur_alpha"] == 0.7


def test_evaluate_config_applies_without_flag(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    write_tracks(gt)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dur_alpha": 0.3}))
    out = tmp_path / "r.json"
    main(
        ["evaluate", "--gt", str(gt), "--pred", str(gt),
         "--config", str(cfg), "--out", str(out)]
    )
    assert json.loads(out.read_text())["dur_alpha"] == 0.3


def test_evaluate_controlled_window(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    write_tracks(gt, n_frames=8)  # 2 fps native
    out = tmp_path / "r.json"
    code = main(
        ["evaluate", "--gt", str(gt), "--pred", str(gt),
         "--native-fps", "2", "--eval-fps", "1", "--out", str(out)]
    )
    assert code == 0
    win = json.loads(out.read_text())["window"]
    assert win["size"] == 4
    assert win["f0"] == 1.0


def test_evaluate_max_frames(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    write_tracks(gt, n_frames=8)
    out = tmp_path / "r.json"
    main(["evaluate", "--gt", str(gt), "--pred", str(gt),
          "--max-frames", "3", "--out", str(out)])
    assert json.loads(out.read_text())["window"]["size"] == 3


def test_evaluate_per_class_lines(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    write_tracks(gt)
    code = main(["evaluate", "--gt", str(gt), "--pred", str(gt), "--per-class"])
    assert code == 0
    assert "class 0: hota=1.000000" in capsys.readouterr().out


def test_evaluate_rerun_byte_identical(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    write_tracks(gt)
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    main(["evaluate", "--gt", str(gt), "--pred", str(gt), "--out", str(out1)])
    main(["evaluate", "--gt", str(gt), "--pred", str(gt), "--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


# --- convert ------------------------------------------------------------------


def test_convert_geometry_and_roundtrip(tmp_path, capsys):
    pos = tmp_path / "pos.csv"
    pos.write_text("# frame,person_id,position_id\n0,3,0\n0,4,481\n1,3,0\n")
    out = tmp_path / "tracks.csv"
    code = main(["convert", "--positions", str(pos), "--out", str(out), "--fps", "2"])
    assert code == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0].startswith("0,3,0,-3.0,-9.0,0.9,")
    assert rows[1].startswith("0,4,0,-2.975,-8.975,0.9,")


def test_convert_split(tmp_path, capsys):
    pos = tmp_path / "pos.csv"
    lines = [f"{f},1,{f}" for f in range(10)]
    pos.write_text("\n".join(lines) + "\n")
    out = tmp_path / "w.csv"
    code = main(
        ["convert", "--positions", str(pos), "--out", str(out), "--split", "6"]
    )
    assert code == 0
    train = (tmp_path / "w_train.csv").read_text()
    test = (tmp_path / "w_test.csv").read_text()
    train_frames = {int(l.split(",")[0]) for l in train.splitlines() if not l.startswith("#")}
    test_frames = {int(l.split(",")[0]) for l in test.splitlines() if not l.startswith("#")}
    assert train_frames == set(range(6))
    assert test_frames == set(range(6, 10))


def test_convert_missing_positions(tmp_path, capsys):
    code = main(
        ["convert", "--positions", str(tmp_path / "x.csv"), "--out", str(tmp_path / "o.csv")]
    )
    assert code == 2
    assert "x.csv" in capsys.readouterr().err


# --- gen-anchors --------------------------------------------------------------


def test_gen_anchors_roundtrip(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    write_tracks(gt, n_frames=20, n_objects=3)
    out = tmp_path / "anchors.csv"
    code = main(
        ["gen-anchors", "--gt", str(gt), "--out", str(out), "--k", "4", "--seed", "1"]
    )
    assert code == 0
    bank = parse_anchor_bank(out.read_text())
    assert bank.k == 4
    assert bank.seed == 1


def test_gen_anchors_too_few_points(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    write_tracks(gt, n_frames=1, n_objects=1)
    code = main(
        ["gen-anchors", "--gt", str(gt), "--out", str(tmp_path / "a.csv"), "--k", "5"]
    )
    assert code == 2


def test_gen_anchors_rerun_byte_identical(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    write_tracks(gt, n_frames=20, n_objects=3)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["gen-anchors", "--gt", str(gt), "--out", str(a), "--k", "4"])
    main(["gen-anchors", "--gt", str(gt), "--out", str(b), "--k", "4"])
    assert a.read_bytes() == b.read_bytes()


# --- synth --------------------------------------------------------------------


def synth_spec(tmp_path, **degrade):
    spec = {
        "scene": {
            "n_objects": 3,
            "duration_s": 5.0,
            "fps": 2.0,
            "bounds": [-8, -8, 8, 8],
            "seed": 1,
        },
        "degrade": {"seed": 2, **degrade},
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    return path


def test_synth_outputs_and_provenance(tmp_path, capsys):
    spec = synth_spec(tmp_path, drop_prob=0.2)
    gt_out = tmp_path / "gt.csv"
    pred_out = tmp_path / "pred.csv"
    code = main(
        ["synth", "--spec", str(spec), "--out-gt", str(gt_out), "--out-pred", str(pred_out)]
    )
    assert code == 0
    assert gt_out.exists() and pred_out.exists()
    prov = json.loads((tmp_path / "pred.csv.spec.json").read_text())
    assert prov["scene"]["n_objects"] == 3
    assert prov["degrade"]["drop_prob"] == 0.2


def test_synth_then_evaluate_pipeline(tmp_path, capsys):
    spec = synth_spec(tmp_path)
    gt_out = tmp_path / "gt.csv"
    pred_out = tmp_path / "pred.csv"
    main(["synth", "--spec", str(spec), "--out-gt", str(gt_out), "--out-pred", str(pred_out)])
    out = tmp_path / "r.json"
    code = main(
        ["evaluate", "--gt", str(gt_out), "--pred", str(pred_out),
         "--native-fps", "2", "--out", str(out)]
    )
    assert code == 0
    assert json.loads(out.read_text())["class_average"]["hota"] == 1.0


def test_synth_deterministic(tmp_path, capsys):
    spec = synth_spec(tmp_path, drop_prob=0.3, fp_rate=0.5)
    a1, b1 = tmp_path / "g1.csv", tmp_path / "p1.csv"
    a2, b2 = tmp_path / "g2.csv", tmp_path / "p2.csv"
    main(["synth", "--spec", str(spec), "--out-gt", str(a1), "--out-pred", str(b1)])
    main(["synth", "--spec", str(spec), "--out-gt", str(a2), "--out-pred", str(b2)])
    assert a1.read_bytes() == a2.read_bytes()
    assert b1.read_bytes() == b2.read_bytes()


def test_synth_bad_spec(tmp_path, capsys):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"degrade": {"drop_prob": 2.0}}))
    code = main(
        ["synth", "--spec", str(path), "--out-gt", str(tmp_path / "g.csv"),
         "--out-pred", str(tmp_path / "p.csv")]
    )
    assert code == 2


# --- sweep-fps ----------------------------------------------------------------


def make_sweep_dir(tmp_path):
    gt_path = tmp_path / "gt.csv"
    seq = write_tracks(gt_path, n_frames=8)  # 2 fps native
    pred_dir = tmp_path / "preds"
    pred_dir.mkdir()
    # full-rate output and a 1 fps output (every other frame)
    with (pred_dir / "2fps.csv").open("w", newline="\n") as fh:
        emit_tracks(seq, fh)
    half = make_sequence(
        [(f, list(d)) for f, d in seq.frames if f % 2 == 0], native_fps=1.0
    )
    with (pred_dir / "1fps.csv").open("w", newline="\n") as fh:
        emit_tracks(half, fh)
    return gt_path, pred_dir


def test_sweep_fps_end_to_end(tmp_path, capsys):
    gt_path, pred_dir = make_sweep_dir(tmp_path)
    out = tmp_path / "sweep.json"
    code = main(
        ["sweep-fps", "--gt", str(gt_path), "--pred-dir", str(pred_dir),
         "--rates", "2,1", "--native-fps", "2", "--eval-fps", "1",
         "--out", str(out)]
    )
    assert code == 0
    text = capsys.readouterr().out
    assert "Inference FPS" in text
    payload = json.loads(out.read_text())
    assert [row["inference_fps"] for row in payload] == [2.0, 1.0]
    for row in payload:
        assert row["report"]["class_average"]["hota"] == 1.0


def test_sweep_fps_missing_rate_file(tmp_path, capsys):
    gt_path, pred_dir = make_sweep_dir(tmp_path)
    (pred_dir / "1fps.csv").unlink()
    code = main(
        ["sweep-fps", "--gt", str(gt_path), "--pred-dir", str(pred_dir),
         "--rates", "2,1", "--native-fps", "2", "--eval-fps", "1"]
    )
    assert code == 2
    assert "rate 1" in capsys.readouterr().err


def test_sweep_fps_requires_eval_fps(tmp_path, capsys):
    gt_path, pred_dir = make_sweep_dir(tmp_path)
    code = main(
        ["sweep-fps", "--gt", str(gt_path), "--pred-dir", str(pred_dir),
         "--rates", "2,1", "--native-fps", "2"]
    )
    assert code == 2
    assert "eval" in capsys.readouterr().err


# --- help text ----------------------------------------------------------------


def test_help_names_defaults_and_config_keys():
    parser = build_parser()
    sub = {a.dest: a for a in parser._actions}["command"]
    eval_help = sub.choices["evaluate"].format_help()
    assert "eval_fps" in eval_help
    assert "dur_alpha" in eval_help
    assert "native_fps" in eval_help
    anch_help = sub.choices["gen-anchors"].format_help()
    assert "anchor_k" in anch_help and "900" in anch_help
