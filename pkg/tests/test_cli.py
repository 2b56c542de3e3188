import csv
import json

import numpy as np
from PIL import Image

from glassbound.cli import decompose_main, main
from glassbound.maskops import read_f32


def test_decompose_gt(tmp_path, capsys):
    masks = tmp_path / "masks"
    masks.mkdir()
    m = np.zeros((20, 20), dtype=np.uint8)
    m[5:15, 4:12] = 255
    Image.fromarray(m, mode="L").save(masks / "a.png")
    rc = decompose_main(["--masks", str(masks), "--out", str(tmp_path / "out"), "--t-in", "3", "--t-ex", "3"])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["processed"] == 1
    names = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert names == ["a.b.png", "a.body.png", "a.ex.png", "a.in.png", "a.real.png", "a.wex.f32", "a.win.f32"]
    assert read_f32(tmp_path / "out" / "a.win.f32").shape == (20, 20)


def test_metrics_cli(tmp_path):
    gt, pred = tmp_path / "gt", tmp_path / "pred"
    gt.mkdir()
    pred.mkdir()
    g = np.zeros((8, 8), dtype=np.uint8)
    g[:4] = 255
    Image.fromarray(g, mode="L").save(gt / "x.png")
    Image.fromarray(np.full((8, 8), 255, np.uint8), mode="L").save(pred / "x.png")
    Image.fromarray(g, mode="L").save(gt / "y.png")
    Image.fromarray(g, mode="L").save(pred / "y.png")
    (tmp_path / "cats.tsv").write_text("x.png\tstuff\ny.png\tthings\n")
    report = tmp_path / "r.json"
    assert main(["metrics", "--pred", str(pred), "--gt", str(gt), "--report", str(report),
                 "--categories", str(tmp_path / "cats.tsv")]) == 0
    out = json.loads(report.read_text())
    assert set(out) >= {"overall", "per_category", "degenerate_images"}
    assert out["per_category"]["stuff"]["ber"] == 50.0
    assert out["per_category"]["things"]["iou"] == 1.0
    assert out["overall"]["m_iou"] == 0.75


def test_synth_train_eval_sweep(tmp_path):
    data = tmp_path / "data"
    assert main(["synth", "--kind", "mixed_scene", "--n", "4", "--size", "64", "--seed", "1", "--out", str(data)]) == 0
    assert main(["synth", "--n", "2", "--size", "64", "--seed", "2", "--split", "test", "--out", str(data)]) == 0
    assert len(list((data / "train" / "images").glob("*.png"))) == 4
    cfg = {"preset": "toy", "target_size": 64, "max_steps": 2, "batch_size": 2,
           "model": {"widths": [8, 8, 16, 16], "aspp_channels": 16, "channels": 8},
           "data": {"root": str(data), "val_split": None}}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    run_dir = tmp_path / "run"
    assert main(["train", "--config", str(tmp_path / "cfg.json"), "--out", str(run_dir)]) == 0
    assert (run_dir / "last.npz").exists() and (run_dir / "run.json").exists()
    report = tmp_path / "eval.json"
    assert main(["eval", "--ckpt", str(run_dir / "last.npz"), "--data", str(data), "--report", str(report),
                 "--csv", str(tmp_path / "per.csv")]) == 0
    assert json.loads(report.read_text())["overall"]["n_images"] == 2
    table = tmp_path / "table.csv"
    assert main(["sweep", "--axis", "boundary_mode", "--config", str(tmp_path / "cfg.json"), "--out", str(table)]) == 0
    with open(table) as fh:
        assert [r["setting"] for r in csv.DictReader(fh)] == ["in_only", "ex_only", "in_ex"]
