import json
import subprocess
import sys

import numpy as np
import pytest
from synthetic import ScriptedEngine, random_game

from atelier import session as game
from atelier.cli import main
from atelier.render import render_sketch, save_png
from atelier.strokes import PlayerChannel, Point, Sketch, Stroke, sketch_to_json


def write_square_ndjson(path, count=30, seed=0):
    rng = np.random.default_rng(seed)
    with open(path, "w") as f:
        for _ in range(count):
            size = int(rng.integers(40, 90))
            x = int(rng.integers(5, 250 - size - 5))
            y = int(rng.integers(5, 250 - size - 5))
            xs = [x, x + size, x + size, x, x]
            ys = [y, y, y + size, y + size, y]
            f.write(json.dumps({"word": "square", "drawing": [[xs, ys]]}) + "\n")


@pytest.fixture()
def checkpoint(tmp_path):
    ndjson = tmp_path / "squares.ndjson"
    write_square_ndjson(str(ndjson))
    out = tmp_path / "model.ckpt"
    code = main([
        "train", "--ndjson", str(ndjson), "--out", str(out),
        "--epochs", "2", "--batch-size", "8", "--hidden", "24",
        "--mixtures", "3", "--seed", "1",
        "--curve", str(tmp_path / "curve.csv"),
    ])
    assert code == 0
    return str(out)


class TestTrain:
    def test_checkpoint_and_curve_written(self, checkpoint, tmp_path):
        assert (tmp_path / "model.ckpt").exists()
        curve = (tmp_path / "curve.csv").read_text().splitlines()
        assert curve[0] == "epoch,train_nll,val_nll"
        assert len(curve) == 3

    def test_finetune_from_checkpoint(self, checkpoint, tmp_path):
        ndjson = tmp_path / "artist.ndjson"
        write_square_ndjson(str(ndjson), count=12, seed=5)
        out = tmp_path / "tuned.ckpt"
        code = main([
            "finetune", "--checkpoint", checkpoint, "--ndjson", str(ndjson),
            "--out", str(out), "--epochs", "1", "--batch-size", "8", "--seed", "2",
        ])
        assert code == 0 and out.exists()


class TestIngest:
    def test_ndjson_to_dataset_dir(self, tmp_path):
        ndjson = tmp_path / "squares.ndjson"
        write_square_ndjson(str(ndjson), count=10)
        out = tmp_path / "ds"
        assert main(["ingest", "--ndjson", str(ndjson), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["count"] == 10

    def test_captures_to_dataset(self, tmp_path):
        captures = tmp_path / "caps"
        captures.mkdir()
        rng = np.random.default_rng(3)
        for k in range(3):
            strokes = []
            for i in range(2):
                x = float(rng.uniform(20, 150))
                y = float(rng.uniform(20 + 80 * i, 60 + 80 * i))
                strokes.append(
                    Stroke((Point(x, y), Point(x + 60, y + 10)), PlayerChannel.RED)
                )
            sketch = Sketch(tuple(strokes), (220.0, 180.0))
            save_png(render_sketch(sketch, px_per_mm=1.0), str(captures / f"c{k}.png"))
        out = tmp_path / "ds"
        sketches_out = tmp_path / "sketches.json"
        code = main([
            "ingest", "--captures", str(captures / "*.png"), "--out", str(out),
            "--sketches-out", str(sketches_out), "--rdp-epsilon", "1.0",
            "--split", "0.5", "0.5",
        ])
        assert code == 0
        recovered = json.loads(sketches_out.read_text())
        assert len(recovered) == 3
        assert all(s["strokes"] for s in recovered)
        assert all(
            stroke["channel"] == "red" for s in recovered for stroke in s["strokes"]
        )


class TestComplete:
    def test_deterministic_outputs(self, checkpoint, tmp_path):
        sketch = Sketch(
            (Stroke((Point(50, 50), Point(120, 80)), PlayerChannel.BLACK),),
            (250.0, 250.0),
        )
        src = tmp_path / "canvas.json"
        src.write_text(json.dumps(sketch_to_json(sketch)))
        out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (out_a, out_b):
            code = main([
                "complete", "--in", str(src), "--checkpoint", checkpoint,
                "--amount", "1", "--temperature", "0", "--seed", "1",
                "--out", str(out), "--svg", str(tmp_path / "out.svg"),
            ])
            assert code == 0
        assert out_a.read_bytes() == out_b.read_bytes()
        svg = (tmp_path / "out.svg").read_text()
        assert svg.startswith("<svg")
        decoded = json.loads(out_a.read_text())
        assert decoded["sketch"]["strokes"]
        assert all(
            s["channel"] == "blue" for s in decoded["sketch"]["strokes"]
        )


class TestVectorize:
    def test_render_recover_via_cli(self, tmp_path):
        sketch = Sketch(
            (
                Stroke((Point(30, 40), Point(150, 60)), PlayerChannel.RED),
                Stroke((Point(40, 120), Point(180, 140)), PlayerChannel.GREEN),
            ),
            (220.0, 180.0),
        )
        png = tmp_path / "capture.png"
        save_png(render_sketch(sketch, px_per_mm=1.0), str(png))
        out = tmp_path / "recovered.json"
        assert main(["vectorize", "--in", str(png), "--out", str(out)]) == 0
        recovered = json.loads(out.read_text())
        assert len(recovered["strokes"]) == 2
        assert {s["channel"] for s in recovered["strokes"]} == {"red", "green"}


class TestCalibrate:
    def test_solve_and_write(self, tmp_path):
        pairs = {
            "src": [[0, 0], [100, 0], [100, 100], [0, 100]],
            "dst": [[5, 5], [105, 5], [105, 105], [5, 105]],
        }
        pairs_path = tmp_path / "pairs.json"
        pairs_path.write_text(json.dumps(pairs))
        out = tmp_path / "calib.json"
        code = main([
            "calibrate", "--pairs", str(pairs_path),
            "--src-frame", "camera", "--dst-frame", "canvas", "--out", str(out),
        ])
        assert code == 0
        calib = json.loads(out.read_text())
        assert calib["maps"][0]["rmse"] < 1e-9


class TestReplay:
    def test_replay_matches_live_snapshot(self, tmp_path):
        rng = np.random.default_rng(4)
        live = random_game(rng, ops=10, engine=ScriptedEngine())
        journal = tmp_path / "session.jsonl"
        game.write_journal(str(journal), live)
        out = tmp_path / "state.json"
        svg = tmp_path / "state.svg"
        code = main([
            "replay", "--journal", str(journal), "--out", str(out),
            "--svg", str(svg),
        ])
        assert code == 0
        assert json.loads(out.read_text()) == game.session_snapshot(live)
        assert svg.read_text().startswith("<svg")


class TestErrors:
    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--nonsense"])
        assert exc.value.code == 2

    def test_operation_failure_exits_1(self, tmp_path, capsys):
        code = main([
            "replay", "--journal", str(tmp_path / "missing.jsonl"),
        ])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_module_entrypoint_runs(self):
        result = subprocess.run(
            [sys.executable, "-m", "atelier.cli", "--help"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert "collaborative sketching" in result.stdout
