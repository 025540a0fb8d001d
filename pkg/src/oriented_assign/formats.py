"""DOTA annotations, JSON engine configs and report serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import IO, Mapping, Optional, Sequence, Union

from .analysis import BinRecord, ImbalanceReport, PopulationSpec
from .assigner import AssignerConfig, AssignmentResult, GtInstance, Prediction
from .errors import ConfigError, ParseError, SinkError, UnknownCategory
from .geometry import RotatedBox, min_area_rect
from .priors import FpnConfig

HEADER_PREFIXES = ("imagesource:", "gsd:")
REPORT_COLUMNS = ("bin_lo", "bin_hi", "axis", "mean_pos", "mean_quality", "n_gt")
SUMMARY_COLUMNS = ("gt", "category", "cx", "cy", "n_cps", "n_mps", "n_fps", "semantic_cx", "semantic_cy")


@dataclass(frozen=True)
class AnnotationRecord:
    quad: tuple[float, ...]
    category: str
    difficulty: int
    line: int = 0

    def points(self) -> list[tuple[float, float]]:
        return [(self.quad[i], self.quad[i + 1]) for i in range(0, 8, 2)]


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_cross(p1, p2, p3, p4) -> bool:
    d1, d2 = _cross(p3, p4, p1), _cross(p3, p4, p2)
    d3, d4 = _cross(p1, p2, p3), _cross(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0
            and (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0)


def _is_simple_quad(pts) -> bool:
    a, b, c, d = pts
    area2 = sum(pts[i][0] * pts[(i + 1) % 4][1] - pts[(i + 1) % 4][0] * pts[i][1] for i in range(4))
    if area2 == 0:
        return False
    return not (_segments_cross(a, b, c, d) or _segments_cross(b, c, d, a))


def _parse_line(tokens: list[str], lineno: int) -> AnnotationRecord:
    if len(tokens) != 10:
        raise ParseError(lineno, f"expected 10 fields, found {len(tokens)}")
    coords = []
    for tok in tokens[:8]:
        try:
            val = float(tok)
        except ValueError:
            raise ParseError(lineno, f"non-numeric coordinate {tok!r}") from None
        if not math.isfinite(val):
            raise ParseError(lineno, f"non-finite coordinate {tok!r}")
        coords.append(val)
    try:
        difficulty = int(tokens[9])
    except ValueError:
        raise ParseError(lineno, f"difficulty must be an integer, got {tokens[9]!r}") from None
    rec = AnnotationRecord(tuple(coords), tokens[8], difficulty, lineno)
    if not _is_simple_quad(rec.points()):
        raise ParseError(lineno, "quad is degenerate or self-intersecting")
    return rec


def parse_dota_annotation(text: Union[str, bytes]) -> list[AnnotationRecord]:
    """Parse DOTA ``x1 y1 ... x4 y4 category difficulty`` lines.

    ``imagesource:`` and ``gsd:`` header lines and blank lines are skipped.

    Raises:
        ParseError: on the first malformed line, with its 1-based number.
    """
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode("utf-8", errors="replace")
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(HEADER_PREFIXES):
            continue
        records.append(_parse_line(line.split(), lineno))
    return records


def read_dota_file(path) -> list[AnnotationRecord]:
    return parse_dota_annotation(Path(path).read_bytes())


def record_to_gt(rec: AnnotationRecord, class_map: Mapping[str, int]) -> GtInstance:
    if rec.category not in class_map:
        raise UnknownCategory(rec.category)
    return GtInstance(min_area_rect(rec.points()), class_map[rec.category])


def build_class_map(records: Sequence[AnnotationRecord]) -> dict[str, int]:
    return {name: i for i, name in enumerate(sorted({r.category for r in records}))}


# -- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class EngineConfig:
    fpn: FpnConfig = field(default_factory=FpnConfig)
    assigner: AssignerConfig = field(default_factory=AssignerConfig)
    population: Optional[PopulationSpec] = None
    seed: int = 0


def _section(cls, data, name, extra=None):
    if not isinstance(data, dict):
        raise ConfigError(f"{name} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {name}: {', '.join(unknown)}")
    kwargs = dict(extra or {})
    kwargs.update(data)
    for key in ("strides", "image_size"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    for key in ("angle_bins", "scale_bins"):
        if key in kwargs:
            kwargs[key] = tuple(tuple(b) for b in kwargs[key])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name}: {exc}") from exc


def config_from_dict(data) -> EngineConfig:
    """Build an :class:`EngineConfig`, rejecting unknown keys at any level."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - {"fpn", "assigner", "population", "seed"})
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    fpn = _section(FpnConfig, data.get("fpn", {}), "fpn")
    assigner = _section(AssignerConfig, data.get("assigner", {}), "assigner")
    population = None
    if data.get("population") is not None:
        population = _section(PopulationSpec, data["population"], "population", {"seed": seed})
    return EngineConfig(fpn, assigner, population, seed)


def load_config(path) -> EngineConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)


def config_to_dict(cfg: EngineConfig) -> dict:
    out = {
        "fpn": {"strides": list(cfg.fpn.strides), "prior_scale": cfg.fpn.prior_scale,
                "point_offset": cfg.fpn.point_offset},
        "assigner": {"k": cfg.assigner.k, "q": cfg.assigner.q, "g": cfg.assigner.g,
                     "w1": cfg.assigner.w1, "measurement": cfg.assigner.measurement.value,
                     "strategy": cfg.assigner.strategy.value, "alpha": cfg.assigner.alpha},
        "seed": cfg.seed,
    }
    if cfg.population is not None:
        pop = asdict(cfg.population)
        pop["angle_bins"] = [list(b) for b in pop["angle_bins"]]
        pop["scale_bins"] = [list(b) for b in pop["scale_bins"]]
        pop["image_size"] = list(pop["image_size"])
        out["population"] = pop
    return out


def load_predictions(path, num_priors: int) -> list[Prediction]:
    """Read ``[{"cls_score": s, "box": [cx, cy, w, h, theta]}, ...]``, one per prior."""
    try:
        data = json.loads(Path(path).read_text())
        if isinstance(data, dict):
            data = data["predictions"]
        preds = [Prediction(float(p["cls_score"]), RotatedBox(*map(float, p["box"]))) for p in data]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed predictions ({exc})") from exc
    if len(preds) != num_priors:
        raise ConfigError(f"{path}: {len(preds)} predictions for {num_priors} priors")
    return preds


# -- reports -----------------------------------------------------------------

@dataclass(frozen=True)
class AssignmentSummary:
    """Per-gt stage sizes of one assignment, ready for emission."""

    rows: tuple[dict, ...]
    labels: tuple[int, ...] = ()


def summarize_assignment(result: AssignmentResult, gts: Sequence[GtInstance],
                         categories: Optional[Sequence[str]] = None) -> AssignmentSummary:
    rows = []
    for i, gt in enumerate(gts):
        sc = (result.semantic_centers[i] if result.semantic_centers is not None
              else gt.center)
        rows.append({
            "gt": i,
            "category": categories[gt.class_id] if categories else str(gt.class_id),
            "cx": float(gt.box.cx), "cy": float(gt.box.cy),
            "n_cps": len(result.cps[i]), "n_mps": len(result.mps[i]), "n_fps": len(result.fps[i]),
            "semantic_cx": float(sc[0]), "semantic_cy": float(sc[1]),
        })
    return AssignmentSummary(tuple(rows), tuple(int(v) for v in result.labels))


def report_to_dict(report: ImbalanceReport) -> dict:
    return {"records": [asdict(r) for r in report.records], "summary": dict(report.summary)}


def report_from_dict(data: dict) -> ImbalanceReport:
    records = tuple(BinRecord(**r) for r in data["records"])
    return ImbalanceReport(records, dict(data["summary"]))


def _render(report, fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "json":
        if isinstance(report, ImbalanceReport):
            payload = report_to_dict(report)
        elif isinstance(report, AssignmentSummary):
            payload = {"gts": list(report.rows), "labels": list(report.labels)}
        else:
            payload = report
        json.dump(payload, buf, indent=2, sort_keys=True, allow_nan=False)
        buf.write("\n")
    elif fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        if isinstance(report, ImbalanceReport):
            writer.writerow(REPORT_COLUMNS)
            for r in report.records:
                writer.writerow([repr(r.bin_lo), repr(r.bin_hi), r.axis,
                                 repr(r.mean_pos), repr(r.mean_quality), r.n_gt])
        elif isinstance(report, AssignmentSummary):
            writer.writerow(SUMMARY_COLUMNS)
            for row in report.rows:
                writer.writerow([repr(v) if isinstance(v, float) else v
                                 for v in (row[c] for c in SUMMARY_COLUMNS)])
        else:
            raise TypeError(f"cannot write {type(report).__name__} as csv")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return buf.getvalue()


def emit_report(report, fmt: str, sink: Union[str, Path, IO[str]]) -> None:
    """Write ``report`` as ``csv`` or ``json`` to a path or text stream.

    Raises:
        SinkError: the sink could not be written.
    """
    text = _render(report, fmt)
    try:
        if isinstance(sink, (str, Path)):
            with open(sink, "w", newline="") as fh:
                fh.write(text)
        else:
            sink.write(text)
    except OSError as exc:
        raise SinkError(str(exc)) from exc


def read_report_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def gts_to_json(gts: Sequence[GtInstance]) -> list:
    return [{"box": list(gt.box.as_tuple()), "class_id": gt.class_id} for gt in gts]

