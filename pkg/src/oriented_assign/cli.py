"""Command-line entry point: ``oriented-assign {assign,analyze,bench}``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import analysis, formats
from .assigner import assign, max_iou_assign
from .errors import AssignError, InvariantViolation
from .priors import build_prior_grid

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


def _image_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        size = (int(w), int(h))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if size[0] <= 0 or size[1] <= 0:
        raise argparse.ArgumentTypeError(f"image size must be positive, got {text!r}")
    return size


def _load(args) -> formats.EngineConfig:
    if args.config is None:
        return formats.EngineConfig()
    return formats.load_config(args.config)


def _population(cfg: formats.EngineConfig) -> analysis.PopulationSpec:
    if cfg.population is not None:
        return cfg.population
    return analysis.standard_sweep(seed=cfg.seed, image_size=(2048, 2048))


def cmd_assign(args) -> int:
    cfg = _load(args)
    records = formats.read_dota_file(args.ann)
    class_map = formats.build_class_map(records)
    gts = [formats.record_to_gt(r, class_map) for r in records]
    priors = build_prior_grid(cfg.fpn, args.image_size)
    if args.preds:
        preds = formats.load_predictions(args.preds, len(priors))
    else:
        preds = analysis.prediction_oracle(priors, gts, noise=0.0, seed=cfg.seed)
    result = assign(priors, gts, preds, cfg.assigner)
    result.check(cfg.assigner.k, cfg.assigner.q)
    categories = sorted(class_map, key=class_map.get)
    formats.emit_report(formats.summarize_assignment(result, gts, categories), args.format, args.out)
    return EXIT_OK


def _analyze(cfg: formats.EngineConfig):
    spec = _population(cfg)
    return analysis.run_sweep(spec, cfg.fpn, cfg.assigner)


def cmd_analyze(args) -> int:
    cfg = _load(args)
    outcome = _analyze(cfg)
    out = Path(args.out)
    if args.format == "json":
        payload = {
            "config": formats.config_to_dict(cfg),
            "dcfl": formats.report_to_dict(outcome.dcfl),
            "maxiou": formats.report_to_dict(outcome.max_iou),
        }
        formats.emit_report(payload, "json", out)
    else:
        # one report per file keeps the six-column CSV layout intact
        formats.emit_report(outcome.dcfl, "csv", out.with_name(f"{out.stem}.dcfl{out.suffix}"))
        formats.emit_report(outcome.max_iou, "csv", out.with_name(f"{out.stem}.maxiou{out.suffix}"))
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _load(args)
    spec = _population(cfg)
    timings = {}

    def timed(name, fn, *a):
        start = time.perf_counter()
        value = fn(*a)
        timings[name] = time.perf_counter() - start
        return value

    gts = timed("synth_population", analysis.synth_population, spec)
    priors = timed("build_prior_grid", build_prior_grid, cfg.fpn, spec.image_size)
    preds = timed("prediction_oracle", analysis.prediction_oracle, priors, gts)
    timed("assign", assign, priors, gts, preds, cfg.assigner)
    timed("max_iou_assign", max_iou_assign, priors, gts)
    json.dump({"num_priors": len(priors), "num_gts": len(gts), "seconds": timings},
              sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oriented-assign",
                                     description="Coarse-to-fine label assignment for oriented boxes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assign", help="assign labels for one DOTA annotation file")
    p.add_argument("--config", type=Path)
    p.add_argument("--ann", type=Path, required=True)
    p.add_argument("--image-size", type=_image_size, required=True)
    p.add_argument("--preds", type=Path, help="per-prior predictions JSON; default: noiseless oracle")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("analyze", help="imbalance sweep for the dynamic and MaxIoU assigners")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bench", help="time each pipeline stage")
    p.add_argument("--config", type=Path)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (AssignError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
