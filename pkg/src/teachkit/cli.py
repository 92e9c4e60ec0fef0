"""Offline workflows: corpus generation, training, evaluation, deterministic
replay, serving, and project export.

Every command with fixed inputs (and a --seed where randomness exists) is
bit-deterministic: running it twice produces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time

import numpy as np

from . import classify as heads
from .classify import TrainingSet, evaluate
from .corpus import RENDERERS, generate_corpus, load_frame, read_labels
from .errors import NoModel, TeachkitError
from .pipeline import LivePipeline
from .project import dumps_compact, load_project, new_project, save_project
from .states import StateSet
from .tracking import ingest_keypoint_file
from .vision import embed, export_embeddings

HOLDOUT_BUCKETS = 5  # path-hash bucket 0 of 5 is held out (~20%)


def _is_holdout(path: str) -> bool:
    digest = hashlib.sha256(path.encode("utf-8")).hexdigest()
    return int(digest, 16) % HOLDOUT_BUCKETS == 0


def cmd_gen_corpus(args) -> int:
    labels = generate_corpus(args.out, args.renderer, args.classes, args.samples,
                             args.seed, width=args.width, height=args.height)
    print(f"wrote {len(labels)} images for {args.classes} classes to {args.out}")
    return 0


def _build_training_set(data_dir, pairs) -> tuple[TrainingSet, list]:
    tset = TrainingSet()
    holdout = []
    for path, state_id in pairs:
        if not any(c.state_id == state_id for c in tset.classes):
            tset.add_class(state_id)
        emb = embed(load_frame(os.path.join(data_dir, path)))
        if _is_holdout(path):
            holdout.append((emb, state_id))
        else:
            tset.add_sample(state_id, emb)
    return tset, holdout


def cmd_train(args) -> int:
    pairs = read_labels(args.data)
    t_start = time.perf_counter()
    tset, holdout = _build_training_set(args.data, pairs)
    embed_s = time.perf_counter() - t_start

    t_train = time.perf_counter()
    if args.head == "knn" or (args.head == "auto" and len(tset.classes) < 2):
        model = heads.train_knn(tset, k=args.k)
    else:
        model = heads.train_softmax(tset, lr=args.lr, epochs=args.epochs, l2=args.l2)
    train_s = time.perf_counter() - t_train

    project = new_project(name=os.path.basename(os.path.normpath(args.data)) or "corpus")
    sset = StateSet(set_id="set0", kind=args.set_kind,
                    param_start=args.param_start, param_end=args.param_end)
    for cls in tset.classes:
        sset.add_state(cls.state_id, cls.name)
    project.state_sets = [sset]
    project.model = model
    # manifest keeps the corpus-relative paths of the training split
    for path, state_id in pairs:
        if not _is_holdout(path):
            project.training_manifest.setdefault(state_id, []).append(path)
    save_project(project, args.out)

    print(f"trained {model.head_kind} head on {tset.total_samples()} samples "
          f"({len(tset.classes)} classes) in {train_s:.2f} s "
          f"(+{embed_s:.2f} s embedding)")
    if model.final_loss is not None:
        print(f"final loss {model.final_loss:.6f}")
    if holdout:
        report = evaluate(model, holdout)
        correct = int(np.trace(report.confusion))
        print(f"held-out accuracy {report.accuracy:.4f} ({correct}/{len(holdout)})")
    else:
        print("held-out split is empty; no accuracy to report")
    print(f"wrote {args.out}")
    return 0


def _confusion_lines(model, report) -> list[str]:
    names = [c.state_id for c in model.classes]
    width = max(8, max(len(n) for n in names) + 1)
    lines = [" " * width + "".join(n.rjust(width) for n in names)]
    for i, name in enumerate(names):
        row = "".join(str(int(v)).rjust(width) for v in report.confusion[i])
        lines.append(name.rjust(width) + row)
    return lines


def cmd_eval(args) -> int:
    project = load_project(args.project)
    if project.model is None:
        raise NoModel("project has no trained model")
    pairs = read_labels(args.data)
    corpus = [(embed(load_frame(os.path.join(args.data, path))), state_id)
              for path, state_id in pairs]
    report = evaluate(project.model, corpus)
    print(f"accuracy {report.accuracy:.4f} on {len(corpus)} samples")
    for line in _confusion_lines(project.model, report):
        print(line)
    return 0


def _frame_paths(frames_dir) -> list[str]:
    names = sorted(
        n for n in os.listdir(frames_dir)
        if os.path.splitext(n)[1].lower() in (".ppm", ".pnm", ".png")
    )
    if not names:
        raise TeachkitError(f"no frames (*.ppm, *.png) in {frames_dir}")
    return names


def cmd_replay(args) -> int:
    project = load_project(args.project)
    if project.model is None:
        raise NoModel("project has no trained model")
    pipeline = LivePipeline(project)
    keypoint_frames = ingest_keypoint_file(args.keypoints) if args.keypoints else []
    kp_idx = 0
    period = 1000.0 / args.fps
    lines = []
    for i, name in enumerate(_frame_paths(args.frames)):
        t_ms = (i + 1) * period
        while kp_idx < len(keypoint_frames) and \
                keypoint_frames[kp_idx].timestamp_ms <= t_ms:
            pipeline.ingest_keypoints(keypoint_frames[kp_idx])
            kp_idx += 1
        frame = load_frame(os.path.join(args.frames, name))
        for event in pipeline.feed_frame(frame, t_ms):
            lines.append(dumps_compact(event))
        for event in pipeline.tick(t_ms):
            lines.append(dumps_compact(event))
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))
    print(f"wrote {len(lines)} events to {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .service import run_server

    run_server(listen=args.listen, project_path=args.project,
               static_dir=args.static)
    return 0


def cmd_export(args) -> int:
    project = load_project(args.project)
    save_project(project, args.out)
    print(f"wrote canonical project to {args.out}")
    if args.embeddings:
        base = os.path.dirname(os.path.abspath(args.project))
        data_dir = args.data or base
        items = []
        for state_id, paths in sorted(project.training_manifest.items()):
            for i, rel in enumerate(paths):
                full = rel if os.path.isabs(rel) else os.path.join(data_dir, rel)
                items.append((f"{state_id}/{i}", embed(load_frame(full))))
        count = export_embeddings(items, args.embeddings)
        print(f"wrote {count} embeddings to {args.embeddings}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teach",
        description="Train visual state classifiers from demonstrations and "
                    "replay or serve trigger-action prototypes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="render a synthetic labeled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--renderer", choices=RENDERERS, default="colored-shape")
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=96)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("train", help="train a classifier from a labeled corpus")
    p.add_argument("--data", required=True, help="directory with labels.csv")
    p.add_argument("--head", choices=("auto", "softmax", "knn"), default="auto")
    p.add_argument("--out", required=True, help="project file to write")
    p.add_argument("--lr", type=float, default=heads.DEFAULT_LR)
    p.add_argument("--epochs", type=int, default=heads.DEFAULT_EPOCHS)
    p.add_argument("--l2", type=float, default=heads.DEFAULT_L2)
    p.add_argument("--k", type=int, default=heads.DEFAULT_KNN_K)
    p.add_argument("--set-kind", choices=("discrete", "continuous"),
                   default="discrete")
    p.add_argument("--param-start", type=float, default=0.0)
    p.add_argument("--param-end", type=float, default=1.0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a project's model on a corpus")
    p.add_argument("--project", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("replay", help="run the live pipeline over recorded frames")
    p.add_argument("--project", required=True)
    p.add_argument("--frames", required=True,
                   help="directory of frames in lexicographic timestamp order")
    p.add_argument("--out", required=True, help="timeline (NDJSON) to write")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--keypoints", help="optional keypoint stream file")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="start the local HTTP service")
    p.add_argument("--listen", default="127.0.0.1:7423")
    p.add_argument("--project", help="project file to preload")
    p.add_argument("--static", help="directory of studio files to serve at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="re-save a project canonically")
    p.add_argument("--project", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--embeddings", help="also write sample embeddings CSV here")
    p.add_argument("--data", help="corpus dir the manifest paths resolve against")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TeachkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
