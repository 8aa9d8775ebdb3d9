"""Command-line tool: training, ingestion, headless completion,
vectorization, calibration, replay, and the service.

All side effects are confined to the named output paths and ``--seed``
is honored wherever randomness exists. Operation failures exit 1 with a
message on stderr; argparse usage errors exit 2.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys

import numpy as np

from . import session as game
from .calibration import CalibrationRig, CalibrationSet, reprojection_rmse, solve_homography
from .dataset import (
    DatasetConfig,
    build_dataset,
    ingest_artist_archive,
    load_dataset,
    load_quickdraw_file,
    save_dataset,
)
from .errors import AtelierError, InvalidInput
from .render import load_png, sketch_to_svg
from .sketcher import SketcherConfig, fine_tune, load_checkpoint, save_checkpoint, train
from .sketcher.engine import SketcherEngine
from .sketcher.training import write_loss_curve
from .strokes import (
    DEFAULT_CANVAS_MM,
    Sketch,
    sketch_from_json,
    sketch_to_json,
)
from .vision import default_palette, vectorize_capture


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--mixtures", type=int, default=20)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--grad-clip", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-seq-len", type=int, default=250)
    p.add_argument("--rdp-epsilon", type=float, default=2.0)
    p.add_argument("--split", type=float, nargs=2, default=(0.8, 0.2),
                   metavar=("TRAIN", "VAL"))
    p.add_argument("--limit", type=int, default=None,
                   help="cap the number of drawings read per file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atelier",
        description="turn-based human/machine collaborative sketching",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the sketcher on QuickDraw NDJSON")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--ndjson", nargs="+", help="QuickDraw NDJSON file(s)")
    src.add_argument("--dataset", help="prebuilt dataset directory")
    p.add_argument("--out", required=True, help="checkpoint path to write")
    p.add_argument("--curve", help="CSV loss-curve path")
    p.add_argument("--checkpoint-dir", help="per-epoch checkpoint directory")
    _add_dataset_flags(p)
    _add_training_flags(p)

    p = sub.add_parser("finetune", help="refine a checkpoint on an artist dataset")
    p.add_argument("--checkpoint", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--ndjson", nargs="+")
    src.add_argument("--dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--curve")
    p.add_argument("--lr-factor", type=float, default=0.1)
    _add_dataset_flags(p)
    _add_training_flags(p)

    p = sub.add_parser("ingest", help="build a dataset from NDJSON or captures")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--ndjson", nargs="+")
    src.add_argument("--captures", help="glob of capture PNGs")
    p.add_argument("--calib", help="calibration JSON (camera->canvas), for captures")
    p.add_argument("--out", required=True, help="dataset directory to write")
    p.add_argument("--sketches-out", help="also dump recovered sketches as JSON")
    _add_dataset_flags(p)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("complete", help="suggest strokes for a sketch JSON")
    p.add_argument("--in", dest="input", required=True, help="sketch JSON path")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--amount", type=int, default=1)
    p.add_argument("--temperature", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="suggestion JSON path (default stdout)")
    p.add_argument("--svg", help="SVG render of canvas + blue suggestion")

    p = sub.add_parser("vectorize", help="recover strokes from a capture PNG")
    p.add_argument("--in", dest="input", required=True, help="capture PNG")
    p.add_argument("--calib", help="calibration JSON (camera->canvas)")
    p.add_argument("--canvas", type=float, nargs=2, default=None,
                   metavar=("W", "H"), help="canvas size in mm")
    p.add_argument("--out", help="sketch JSON path (default stdout)")
    p.add_argument("--debug-masks", help="directory for intermediate masks")

    p = sub.add_parser("calibrate", help="solve a homography from correspondences")
    p.add_argument("--pairs", required=True,
                   help='JSON {"src": [[x,y]...], "dst": [[x,y]...]}')
    p.add_argument("--src-frame", default="camera")
    p.add_argument("--dst-frame", default="canvas")
    p.add_argument("--out", required=True, help="calibration JSON path")

    p = sub.add_parser("replay", help="fold a journal back into a state")
    p.add_argument("--journal", required=True)
    p.add_argument("--out", help="state JSON path (default stdout)")
    p.add_argument("--svg", help="SVG render of the final canvas")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data-dir", default="./atelier-data")
    p.add_argument("--calibration")
    p.add_argument("--px-per-mm", type=float, default=0.5)
    p.add_argument("--log-level", default="info")
    return parser


def _dataset_from_args(args) -> tuple:
    """(train_examples, val_examples, offset_scale) from flags."""
    cfg = DatasetConfig(
        max_seq_len=args.max_seq_len,
        rdp_epsilon=args.rdp_epsilon,
        split=tuple(args.split),
        seed=args.seed,
    )
    if getattr(args, "dataset", None):
        build = load_dataset(args.dataset)
        return build.train, build.val, build.offset_scale
    sketches = []
    for path in args.ndjson:
        sketches.extend(load_quickdraw_file(path, limit=args.limit))
    build = build_dataset(sketches, cfg)
    print(
        f"dataset: {len(build.train)} train / {len(build.val)} val "
        f"(dropped {build.dropped}), offset scale {build.offset_scale:.4f}",
        file=sys.stderr,
    )
    return build.train, build.val, build.offset_scale


def _sketcher_config(args) -> SketcherConfig:
    return SketcherConfig(
        hidden_size=args.hidden,
        num_mixtures=args.mixtures,
        learning_rate=args.learning_rate,
        grad_clip=args.grad_clip,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )


def cmd_train(args) -> int:
    train_examples, val_examples, scale = _dataset_from_args(args)
    config = _sketcher_config(args)
    result = train(
        train_examples,
        config,
        val_data=val_examples or None,
        checkpoint_dir=args.checkpoint_dir,
        offset_scale=scale,
        log=lambda msg: print(msg, file=sys.stderr),
    )
    save_checkpoint(args.out, result.params, config, offset_scale=scale)
    if args.curve:
        write_loss_curve(args.curve, result.curve)
    print(f"wrote checkpoint {args.out}")
    return 0


def cmd_finetune(args) -> int:
    params, base_config, meta = load_checkpoint(args.checkpoint)
    train_examples, val_examples, scale = _dataset_from_args(args)
    config = SketcherConfig(
        hidden_size=base_config.hidden_size,
        num_mixtures=base_config.num_mixtures,
        learning_rate=args.learning_rate,
        grad_clip=args.grad_clip,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    result = fine_tune(
        params,
        train_examples,
        config,
        val_data=val_examples or None,
        lr_factor=args.lr_factor,
        offset_scale=scale,
        log=lambda msg: print(msg, file=sys.stderr),
    )
    save_checkpoint(args.out, result.params, config, offset_scale=scale)
    if args.curve:
        write_loss_curve(args.curve, result.curve)
    print(f"wrote checkpoint {args.out}")
    return 0


def cmd_ingest(args) -> int:
    cfg = DatasetConfig(
        max_seq_len=args.max_seq_len,
        rdp_epsilon=args.rdp_epsilon,
        split=tuple(args.split),
        seed=args.seed,
    )
    if args.ndjson:
        sketches = []
        for path in args.ndjson:
            sketches.extend(load_quickdraw_file(path, limit=args.limit))
    else:
        paths = sorted(glob.glob(args.captures))
        if not paths:
            raise InvalidInput(f"no captures match {args.captures!r}")
        calib = None
        if args.calib:
            rig = CalibrationRig.load(args.calib)
            calib = rig.get("camera", "canvas")
        report = ingest_artist_archive([load_png(p) for p in paths], calib)
        for index, message in report.failures:
            print(f"capture {paths[index]}: {message}", file=sys.stderr)
        sketches = report.sketches
        if args.sketches_out:
            with open(args.sketches_out, "w") as f:
                json.dump([sketch_to_json(s) for s in sketches], f)
    build = build_dataset(sketches, cfg)
    save_dataset(build, args.out, cfg)
    print(
        f"wrote {args.out}: {len(build.train)} train / {len(build.val)} val, "
        f"dropped {build.dropped}"
    )
    return 0


def cmd_complete(args) -> int:
    engine = SketcherEngine.from_checkpoint(args.checkpoint)
    with open(args.input) as f:
        context = sketch_from_json(json.load(f))
    suggestion, decoded = engine.suggest(
        context, args.amount, args.temperature, args.seed
    )
    payload = {
        "suggestion": suggestion.to_json(),
        "sketch": sketch_to_json(decoded),
        "checkpoint_id": engine.checkpoint_id,
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        print(text)
    if args.svg:
        combined = Sketch(
            context.strokes + decoded.strokes, context.canvas_size
        )
        with open(args.svg, "w") as f:
            f.write(sketch_to_svg(combined))
    return 0


def cmd_vectorize(args) -> int:
    img = load_png(args.input)
    calib = None
    canvas = tuple(args.canvas) if args.canvas else DEFAULT_CANVAS_MM
    if args.calib:
        rig = CalibrationRig.load(args.calib)
        calib = rig.get("camera", "canvas")
    sketch = vectorize_capture(
        img, default_palette(), calib, canvas_size=canvas,
        debug_dir=args.debug_masks,
    )
    if not args.calib:
        # captures without calibration are taken as canvas-frame pixels
        sketch = Sketch(sketch.strokes, (float(img.shape[1]), float(img.shape[0])))
    text = json.dumps(sketch_to_json(sketch), indent=2)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        print(text)
    return 0


def cmd_calibrate(args) -> int:
    with open(args.pairs) as f:
        pairs = json.load(f)
    cal = CalibrationSet(
        np.asarray(pairs["src"], dtype=float),
        np.asarray(pairs["dst"], dtype=float),
        args.src_frame,
        args.dst_frame,
    )
    h = solve_homography(cal)
    rmse = reprojection_rmse(h, cal)
    rig = CalibrationRig.load(args.out) if os.path.exists(args.out) else CalibrationRig()
    rig.set_map(args.src_frame, args.dst_frame, h, rmse)
    rig.save(args.out)
    print(f"{args.src_frame}->{args.dst_frame} rmse {rmse:.6f}, wrote {args.out}")
    return 0


def cmd_replay(args) -> int:
    session = game.load_session(args.journal)
    text = json.dumps(game.session_snapshot(session), indent=2)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        print(text)
    if args.svg:
        with open(args.svg, "w") as f:
            f.write(sketch_to_svg(session.sketch()))
    return 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, run_service

    run_service(
        ServiceConfig(
            host=args.host,
            port=args.port,
            checkpoint_path=args.checkpoint,
            data_dir=args.data_dir,
            calibration_path=args.calibration,
            px_per_mm=args.px_per_mm,
            log_level=args.log_level,
        )
    )
    return 0


_COMMANDS = {
    "train": cmd_train,
    "finetune": cmd_finetune,
    "ingest": cmd_ingest,
    "complete": cmd_complete,
    "vectorize": cmd_vectorize,
    "calibrate": cmd_calibrate,
    "replay": cmd_replay,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except AtelierError as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
