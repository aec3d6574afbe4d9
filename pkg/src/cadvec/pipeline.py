"""End-to-end run: raster map in, plot polygons and boundary lines out.

The input is a map that has already been screened by hand (title blocks,
legends and stamps removed). Configuration files are flat ``key = value``
text; ``#`` starts a comment. Keys match the :class:`PipelineConfig` fields.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gapfill, ocr, polygonize, raster, smoothing, vecmodel
from .imagefile import read_image, write_image
from .skeleton import thin


class InputError(ValueError):
    """Bad configuration or unreadable input."""


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    input: str = ""
    out_geojson: str = ""
    out_ascii: str = ""
    report: str = ""
    dump_dir: str = ""
    threshold: str = "128"  # integer level or "otsu"
    dark_ink: bool = True
    bridge: bool = True
    max_gap: float = 12.0
    max_angle: float = 45.0
    anchor_area: int = -1  # -1: derive from component areas, 0: no anchoring
    digit_area_max: float = -1.0  # -1: twice the median component area
    noise_area_min: int = 8
    snap_tol: float = 1.5
    dangle_len: float = 8.0
    join_threshold: float = 3.0
    max_passes: int = 16
    model: str = ""  # empty: train the built-in baseline
    baseline_seed: int = 0
    low_confidence: float = ocr.LOW_CONFIDENCE

    def validate(self) -> None:
        if self.threshold != "otsu":
            try:
                t = int(self.threshold)
            except ValueError:
                raise InputError(f"threshold must be an integer or 'otsu', got {self.threshold!r}") from None
            if not 1 <= t <= 255:
                raise InputError(f"threshold must be in 1..255, got {t}")
        checks = [
            (self.max_gap > 0, "max_gap must be > 0"),
            (0 < self.max_angle <= 180, "max_angle must be in (0, 180]"),
            (self.noise_area_min >= 1, "noise_area_min must be >= 1"),
            (self.snap_tol >= 0, "snap_tol must be >= 0"),
            (self.dangle_len >= 0, "dangle_len must be >= 0"),
            (self.join_threshold >= 0, "join_threshold must be >= 0"),
            (self.max_passes >= 1, "max_passes must be >= 1"),
            (0 <= self.low_confidence <= 1, "low_confidence must be in [0, 1]"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InputError(msg)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if isinstance(val, bool):
                val = "true" if val else "false"
            lines.append(f"{f.name} = {val}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: "PipelineConfig | None" = None) -> "PipelineConfig":
        pairs = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"config line {lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            pairs[key] = val
        return (base or cls()).updated(pairs)

    def updated(self, pairs: dict) -> "PipelineConfig":
        """Copy with string (or typed) values applied; unknown keys are an error."""
        types = {f.name: f.type for f in dataclasses.fields(self)}
        changes = {}
        for key, val in pairs.items():
            key = key.replace("-", "_")
            if key not in types:
                raise InputError(f"unknown config key {key!r}")
            changes[key] = _coerce(key, types[key], val)
        cfg = dataclasses.replace(self, **changes)
        cfg.validate()
        return cfg


def _coerce(key, typ, val):
    if not isinstance(val, str):
        return val
    try:
        if typ == "bool":
            low = val.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(val)
            return low in ("true", "1", "yes")
        if typ == "int":
            return int(val)
        if typ == "float":
            return float(val)
    except ValueError:
        raise InputError(f"config key {key!r}: cannot read {val!r} as {typ}") from None
    return val


@dataclass
class RunReport:
    stage_ms: dict[str, float] = field(default_factory=dict)
    counters: dict[str, int] = field(default_factory=dict)
    smoothing: dict[str, int] = field(default_factory=dict)

    @property
    def total_ms(self) -> float:
        return sum(self.stage_ms.values())

    def as_dict(self) -> dict:
        return {
            "stage_ms": self.stage_ms,
            "total_ms": self.total_ms,
            "counters": self.counters,
            "smoothing": self.smoothing,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"


@functools.lru_cache(maxsize=4)
def _baseline(seed: int) -> ocr.RecognizerModel:
    return ocr.baseline_model(seed=seed)


def load_recognizer(cfg: PipelineConfig) -> ocr.RecognizerModel:
    if cfg.model:
        try:
            return ocr.load_model(cfg.model)
        except (OSError, ocr.ModelFormatError) as exc:
            raise InputError(f"cannot load model {cfg.model}: {exc}") from exc
    return _baseline(cfg.baseline_seed)


@dataclass
class RunResult:
    geojson: str
    ascii: str
    report: RunReport
    faces: list[polygonize.PlotRecord]
    vectors: vecmodel.VectorMap
    detections: list[ocr.DigitDetection]
    outside: list[ocr.DigitDetection]
    euler_ok: list[bool]


class _Runner:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.report = RunReport()
        self.dump = Path(cfg.dump_dir) if cfg.dump_dir else None
        if self.dump:
            self.dump.mkdir(parents=True, exist_ok=True)

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        except (StageError, InputError):
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        finally:
            self.report.stage_ms[name] = round((time.perf_counter() - t0) * 1000.0, 3)

    def save(self, name: str, data) -> None:
        if not self.dump:
            return
        path = self.dump / name
        if isinstance(data, np.ndarray):
            write_image(path, data)
        else:
            path.write_text(data)

    def run(self, img: np.ndarray) -> RunResult:
        cfg, count = self.cfg, self.report.counters
        with self.stage("binarize"):
            threshold = "otsu" if cfg.threshold == "otsu" else int(cfg.threshold)
            binary = raster.binarize(img, threshold, cfg.dark_ink)
            self.save("01_binary.pgm", binary)

        with self.stage("bridge"):
            bridges = []
            if cfg.bridge:
                anchor = cfg.anchor_area
                if anchor < 0:
                    anchor = int(2 * raster.default_digit_area_max(raster.connected_components(binary)))
                binary, bridges = gapfill.bridge_gaps(binary, cfg.max_gap, cfg.max_angle, anchor)
            count["bridges"] = len(bridges)
            self.save("02_bridged.pgm", binary)

        with self.stage("components"):
            comps = raster.connected_components(binary)
            count["components"] = len(comps)

        with self.stage("separate"):
            dmax = None if cfg.digit_area_max < 0 else cfg.digit_area_max
            if dmax is None:
                dmax = raster.default_digit_area_max(comps)
            boundary, digits, noise = raster.separate_boundary_and_digits(comps, dmax, cfg.noise_area_min)
            # large leftovers are pieces of the line network, not specks
            fragments = [c for c in noise if c.area > dmax]
            mask = raster.component_mask(boundary, binary.shape)
            for c in fragments:
                mask[c.pixels[:, 0], c.pixels[:, 1]] = True
            count["digit_components"] = len(digits)
            count["noise_components"] = len(noise) - len(fragments)
            count["line_fragments"] = len(fragments)
            self.save("03_boundary.pgm", mask)

        with self.stage("ocr"):
            model = load_recognizer(cfg)
            detections = []
            for c in digits:
                patch, pos = raster.extract_digit_patch(binary, c)
                det = ocr.classify(model, patch)
                det.position = pos
                det.size = float(c.bbox[2] - c.bbox[0] + 1)
                detections.append(det)
            count["digits"] = len(detections)
            count["low_confidence_digits"] = sum(d.confidence < cfg.low_confidence for d in detections)
            self.save("04_digits.csv", polygonize.write_digits_csv(detections))

        with self.stage("thin"):
            skel = thin(mask)
            self.save("05_skeleton.pgm", skel)

        with self.stage("trace"):
            traced = vecmodel.trace(skel)
            count["categories_traced"] = len(traced.live())
            self.save("06_traced.txt", vecmodel.write_ascii(traced))

        with self.stage("snap_prune"):
            pruned = vecmodel.snap_and_prune(traced, cfg.snap_tol, cfg.dangle_len)
            count["categories_pruned"] = len(pruned.live())
            self.save("07_pruned.txt", vecmodel.write_ascii(pruned))

        with self.stage("smooth"):
            params = smoothing.SmoothParams(cfg.join_threshold, cfg.max_passes)
            smoothed, sreport = smoothing.smooth(pruned, params)
            smoothed = smoothed.compact()
            ascii_text = vecmodel.write_ascii(smoothed)
            count["categories_smoothed"] = len(smoothed.live())
            self.report.smoothing = sreport.as_dict()
            self.save("08_smoothed.txt", ascii_text)

        with self.stage("polygonize"):
            fr = polygonize.build_faces(smoothed)
            faces = fr.faces
            count["faces"] = len(faces)
            count["euler_components"] = len(fr.euler_ok)
            count["euler_failures"] = fr.euler_ok.count(False)

        with self.stage("assign"):
            outside = polygonize.assign_digits(faces, detections)
            polygonize.label_plots(faces, cfg.low_confidence)
            count["outside_digits"] = len(outside)
            count["plot_numbers"] = sum(1 for f in faces if f.plot_number)
            count["review_flags"] = sum(1 for f in faces if f.review_flag)

        with self.stage("export"):
            geojson = polygonize.export_plots(faces)
            self.save("09_plots.geojson", geojson)

        return RunResult(geojson, ascii_text, self.report, faces, smoothed, detections, outside, fr.euler_ok)


def run_image(img: np.ndarray, cfg: PipelineConfig | None = None) -> RunResult:
    """Run every machine stage on an in-memory grayscale map."""
    cfg = cfg or PipelineConfig()
    cfg.validate()
    img = np.asarray(img)
    if img.ndim != 2:
        raise InputError(f"expected a 2D grayscale image, got shape {img.shape}")
    return _Runner(cfg).run(img)


def run(cfg: PipelineConfig) -> tuple[str, str, RunReport]:
    """Read ``cfg.input``, run, and write whichever outputs are configured."""
    cfg.validate()
    if not cfg.input:
        raise InputError("no input image given")
    try:
        img = read_image(cfg.input)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {cfg.input}: {exc}") from exc
    result = run_image(img, cfg)
    for path, text in ((cfg.out_geojson, result.geojson), (cfg.out_ascii, result.ascii),
                       (cfg.report, result.report.to_json())):
        if path:
            Path(path).write_text(text)
    return result.geojson, result.ascii, result.report
