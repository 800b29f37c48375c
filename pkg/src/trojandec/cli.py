"""Operator command line: detect, restore, evaluate, gen-masks, prop1-check.

Exit codes: 0 success, 2 configuration error, 3 remote-service error.
All randomness flows from --seed, so identical invocations produce
byte-identical JSON.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import pathlib
import sys

import numpy as np

from .attack import SyntheticTrojanEncoder, load_trigger, default_target_vector
from .detection import DetectionConfig, detect
from .encoders import BlockMeanEncoder, Encoder, RemoteEncoder
from .errors import ServiceUnreachableError, TrojanDecError
from .evaluation import (
    CorpusItem,
    LabeledCorpus,
    eval_detection,
    eval_end_to_end,
)
from .imaging import decode_png, encode_png, resize
from .masking import generate_mask_set
from .restoration import (
    HARMONIC,
    REMOTE_DIFFUSION,
    RestorationConfig,
    restore,
)

ENDPOINT_ENV = "TROJANDEC_ENDPOINT"


class CliConfigError(TrojanDecError):
    """Bad or missing command-line configuration."""


def build_parser() -> argparse.ArgumentParser:
    enc = argparse.ArgumentParser(add_help=False)
    enc.add_argument("--encoder", default="synthetic-clean",
                     choices=["synthetic-clean", "synthetic-trojaned", "remote"])
    enc.add_argument("--encoder-url", default=None,
                     help=f"remote service base URL (fallback: ${ENDPOINT_ENV})")
    enc.add_argument("--input-size", type=int, default=32)
    enc.add_argument("--channels", type=int, default=3, choices=[1, 3])
    enc.add_argument("--grid", type=int, default=4)
    enc.add_argument("--trigger-png", default=None,
                     help="trigger pattern for the trojaned synthetic encoder")
    enc.add_argument("--trigger-seed", type=int, default=1)
    enc.add_argument("--trigger-size", default="10x10", metavar="HxW")
    enc.add_argument("--tau", type=float, default=0.0)
    enc.add_argument("--target-seed", type=int, default=2)

    det = argparse.ArgumentParser(add_help=False)
    det.add_argument("--k", type=int, default=15)
    det.add_argument("--s", type=int, default=1)
    det.add_argument("--B", type=int, default=100)
    det.add_argument("--seed", type=int, default=0)

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--out", default=None)
    out.add_argument("--json", action="store_true", help="print JSON to stdout")

    p = argparse.ArgumentParser(prog="trojandec", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", parents=[enc, det, out],
                       help="flag images that carry a trigger")
    src = d.add_mutually_exclusive_group(required=True)
    src.add_argument("--image")
    src.add_argument("--corpus", help="directory of PNG files")
    d.add_argument("--workers", type=int, default=4)

    r = sub.add_parser("restore", parents=[enc, det, out],
                       help="detect and, if trojaned, rewrite the image")
    r.add_argument("--image", required=True)
    r.add_argument("--strategy", default="harmonic", choices=["harmonic", "diffusion"])

    e = sub.add_parser("evaluate", parents=[enc, det, out],
                       help="corpus metrics from a manifest directory")
    e.add_argument("--corpus", required=True)
    e.add_argument("--centroids", default=None,
                   help="JSON {label: [floats]} enabling ACC/ASR")
    e.add_argument("--strategy", default="harmonic", choices=["harmonic", "diffusion"])
    e.add_argument("--workers", type=int, default=4)

    g = sub.add_parser("gen-masks", parents=[out], help="write a mask-set document")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--s", type=int, default=1)
    g.add_argument("--t", type=int, required=True)
    g.add_argument("--channels", type=int, default=3, choices=[1, 3])
    g.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("prop1-check", parents=[out],
                       help="pattern-collision bound vs. Monte Carlo")
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--eh", type=int, required=True)
    c.add_argument("--ew", type=int, required=True)
    c.add_argument("--trials", type=int, default=100_000)
    c.add_argument("--seed", type=int, default=0)
    return p


def _endpoint(args) -> str:
    url = args.encoder_url or os.environ.get(ENDPOINT_ENV)
    if not url:
        raise CliConfigError(
            f"remote access needs --encoder-url or ${ENDPOINT_ENV}")
    return url


def encoder_from_args(args) -> Encoder:
    if args.encoder == "remote":
        return RemoteEncoder(_endpoint(args))
    if args.encoder == "synthetic-clean":
        return BlockMeanEncoder(args.input_size, args.channels, args.grid)
    if args.trigger_png:
        trigger = load_trigger(args.trigger_png)
    else:
        try:
            e_h, e_w = (int(x) for x in args.trigger_size.lower().split("x"))
        except ValueError as exc:
            raise CliConfigError(f"bad --trigger-size {args.trigger_size!r}") from exc
        from .attack import random_trigger

        trigger = random_trigger(e_h, e_w, args.channels, args.trigger_seed)
    target = default_target_vector(args.grid * args.grid * trigger.channels,
                                   args.target_seed)
    return SyntheticTrojanEncoder(trigger, target, input_size=args.input_size,
                                  grid=args.grid, tau=args.tau)


def _load_image(path: str, enc: Encoder) -> np.ndarray:
    try:
        data = pathlib.Path(path).read_bytes()
    except OSError as exc:
        raise CliConfigError(f"cannot read {path}: {exc}") from exc
    return resize(decode_png(data), enc.input_size)


def _emit(doc: dict, args) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        pathlib.Path(args.out).write_text(text + "\n")
    if args.json or not args.out:
        print(text)


def cmd_detect(args) -> int:
    enc = encoder_from_args(args)
    cfg = DetectionConfig(k=args.k, s=args.s, B=args.B, seed=args.seed)
    if args.image:
        verdict = detect(_load_image(args.image, enc), enc, cfg)
        _emit(verdict.to_dict(), args)
        return 0
    root = pathlib.Path(args.corpus)
    files = sorted(p for p in root.glob("*.png"))
    if not files:
        raise CliConfigError(f"no PNG files under {root}")

    def one(path: pathlib.Path):
        return path.name, detect(_load_image(str(path), enc), enc, cfg).to_dict()

    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, args.workers)) as ex:
        results = dict(ex.map(one, files))
    _emit({"config": cfg.to_dict(), "verdicts": {k: results[k] for k in sorted(results)}},
          args)
    return 0


def cmd_restore(args) -> int:
    if not args.out:
        raise CliConfigError("restore needs --out")
    enc = encoder_from_args(args)
    cfg = DetectionConfig(k=args.k, s=args.s, B=args.B, seed=args.seed)
    img = _load_image(args.image, enc)
    verdict = detect(img, enc, cfg)
    if not verdict.is_trojaned:
        # clean inputs are copied through untouched
        pathlib.Path(args.out).write_bytes(pathlib.Path(args.image).read_bytes())
        if args.json:
            print(json.dumps({"restored": False, **verdict.to_dict()}, sort_keys=True))
        return 0
    masks = generate_mask_set(cfg.k, cfg.s, img.shape[0], channels=img.shape[2],
                              seed=cfg.seed)
    rcfg = _restore_config(args)
    restored = restore(img, verdict, masks, rcfg)
    pathlib.Path(args.out).write_bytes(encode_png(restored.image))
    if args.json:
        print(json.dumps({"restored": True, "strategy": restored.strategy_used,
                          **verdict.to_dict()}, sort_keys=True))
    return 0


def _restore_config(args) -> RestorationConfig:
    if args.strategy == "harmonic":
        return RestorationConfig(strategy=HARMONIC)
    return RestorationConfig(strategy=REMOTE_DIFFUSION, endpoint=_endpoint(args))


def _load_manifest_corpus(root: pathlib.Path, enc: Encoder) -> LabeledCorpus:
    manifest = root / "manifest.json"
    if not manifest.exists():
        raise CliConfigError(f"{root} has no manifest.json")
    doc = json.loads(manifest.read_text())
    items = []
    for row in doc.get("items", []):
        img = _load_image(str(root / row["png"]), enc)
        items.append(CorpusItem(image=img, label=int(row["label"]),
                                is_trojaned=bool(row["is_trojaned"]),
                                target_label=row.get("target_label")))
    if not items:
        raise CliConfigError(f"manifest in {root} lists no items")
    return LabeledCorpus(items=items)


def cmd_evaluate(args) -> int:
    enc = encoder_from_args(args)
    cfg = DetectionConfig(k=args.k, s=args.s, B=args.B, seed=args.seed)
    corpus = _load_manifest_corpus(pathlib.Path(args.corpus), enc)
    report = eval_detection(corpus, enc, cfg).to_dict()
    if args.centroids:
        doc = json.loads(pathlib.Path(args.centroids).read_text())
        centroids = {int(k): np.asarray(v, dtype=np.float64) for k, v in doc.items()}
        e2e = eval_end_to_end(corpus, enc, cfg, centroids,
                              restore_cfg=_restore_config(args))
        report["acc"] = e2e.acc
        report["asr"] = e2e.asr
        report["counts"].update(e2e.counts)
    _emit(report, args)
    return 0


def cmd_gen_masks(args) -> int:
    ms = generate_mask_set(args.k, args.s, args.t, channels=args.channels,
                           seed=args.seed)
    doc = json.loads(ms.to_json())
    doc["count"] = len(ms)
    _emit(doc, args)
    return 0


def cmd_prop1_check(args) -> int:
    from .evaluation import prop1_bound, prop1_monte_carlo

    bound = prop1_bound(args.beta, args.eh, args.ew)
    empirical = prop1_monte_carlo(args.beta, args.eh, args.ew, args.trials,
                                  args.seed)
    _emit({"beta": args.beta, "e_h": args.eh, "e_w": args.ew,
           "T": args.eh * args.ew, "bound": bound, "empirical": empirical,
           "trials": args.trials}, args)
    return 0


_COMMANDS = {
    "detect": cmd_detect,
    "restore": cmd_restore,
    "evaluate": cmd_evaluate,
    "gen-masks": cmd_gen_masks,
    "prop1-check": cmd_prop1_check,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the diagnostic
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ServiceUnreachableError as exc:
        print(f"trojandec: service error: {exc}", file=sys.stderr)
        return 3
    except (CliConfigError, TrojanDecError, ValueError, OSError) as exc:
        print(f"trojandec: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
