"""``cadvec`` command line. Exit codes: 0 ok, 2 bad input, 3 stage failure."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import gapfill, metrics, ocr, pipeline, polygonize, raster, smoothing, vecmodel
from .imagefile import ImageFormatError, read_image, write_image
from .skeleton import thin

EXIT_INPUT = 2
EXIT_STAGE = 3


def _binary(path) -> np.ndarray:
    return raster.binarize(read_image(path))


def _read_vectors(path) -> vecmodel.VectorMap:
    return vecmodel.parse_ascii(Path(path).read_text())


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    return obj


def _gap_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A:B, got {text!r}") from None
    return lo, hi


# -- commands -------------------------------------------------------------------

def cmd_thin(a):
    write_image(a.output, thin(_binary(a.input)))


def cmd_gapfill(a):
    out, bridges = gapfill.bridge_gaps(_binary(a.input), a.max_gap, a.max_angle, a.anchor_area)
    write_image(a.output, out)
    print(f"{len(bridges)} bridges drawn")


def cmd_gengaps(a):
    corrupted, truth = gapfill.generate_gaps(_binary(a.input), a.n, a.len, a.seed)
    write_image(a.corrupted, corrupted)
    write_image(a.truth, truth)


def cmd_trace(a):
    v = vecmodel.trace(thin(_binary(a.input)))
    if a.prune:
        v = vecmodel.snap_and_prune(v, a.snap_tol, a.dangle_len)
    Path(a.output).write_text(vecmodel.write_ascii(v))
    print(f"{len(v.live())} categories")


def cmd_ascii_roundtrip(a):
    text = Path(a.input).read_text()
    out = vecmodel.write_ascii(vecmodel.parse_ascii(text))
    if a.output:
        Path(a.output).write_text(out)
    if out == text:
        print("canonical")
        return 0
    print("parsed fine; not in canonical form")
    return 1


def cmd_smooth(a):
    params = smoothing.SmoothParams(a.join_threshold, a.max_passes)
    v, rep = smoothing.smooth(_read_vectors(a.input), params)
    Path(a.output).write_text(vecmodel.write_ascii(v))
    if a.report:
        Path(a.report).write_text(json.dumps(rep.as_dict(), indent=2) + "\n")
    print(json.dumps(rep.as_dict()))


def _patch_from_image(path) -> np.ndarray:
    img = read_image(path)
    if img.shape == (raster.PATCH_SIZE, raster.PATCH_SIZE):
        return img  # already a patch: bright digit on dark ground
    ink = raster.binarize(img)
    comps = raster.connected_components(ink)
    if not comps:
        return np.zeros((raster.PATCH_SIZE, raster.PATCH_SIZE), dtype=np.uint8)
    # treat all ink as one glyph so broken strokes stay together
    whole = raster.Component(0, np.concatenate([c.pixels for c in comps]), int(ink.sum()),
                             (min(c.bbox[0] for c in comps), min(c.bbox[1] for c in comps),
                              max(c.bbox[2] for c in comps), max(c.bbox[3] for c in comps)),
                             (0.0, 0.0))
    return raster.extract_digit_patch(ink, whole)[0]


def _labelled_samples(root):
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"{root} is not a directory")
    for label in range(10):
        d = root / str(label)
        if not d.is_dir():
            continue
        for f in sorted(d.iterdir()):
            if f.suffix.lower() in (".pgm", ".png"):
                yield _patch_from_image(f), label


def cmd_ocr_train(a):
    model = ocr.train_baseline(_labelled_samples(a.samples_dir))
    ocr.save_model(model, a.model)
    print("samples per class:", " ".join(str(int(c)) for c in model.counts))


def cmd_ocr_eval(a):
    model = ocr.load_model(a.model)
    cm = ocr.confusion_matrix(model, _labelled_samples(a.testdir))
    print("true\\pred " + " ".join(f"{d:>5}" for d in range(10)))
    for d in range(10):
        print(f"{d:>9} " + " ".join(f"{v:>5}" for v in cm[d]))
    total = int(cm.sum())
    acc = cm.trace() / total if total else 0.0
    print(f"accuracy {acc:.4f} ({int(cm.trace())}/{total})")


def cmd_ocr_synth(a):
    out = Path(a.out_dir)
    counts = [0] * 10
    for patch, label in ocr.synthetic_samples(a.per_font, a.seed):
        d = out / str(label)
        d.mkdir(parents=True, exist_ok=True)
        write_image(d / f"{counts[label]:05d}.pgm", patch)
        counts[label] += 1
    print(f"wrote {sum(counts)} patches to {out}")


def cmd_polygonize(a):
    v = _read_vectors(a.lines)
    dets = polygonize.read_digits_csv(Path(a.digits).read_text())
    fr = polygonize.build_faces(v)
    outside = polygonize.assign_digits(fr.faces, dets)
    polygonize.label_plots(fr.faces)
    Path(a.output).write_text(polygonize.export_plots(fr.faces))
    print(f"{len(fr.faces)} faces, {len(outside)} digits outside all faces, "
          f"Euler audit {'ok' if fr.all_euler_ok else 'FAILED'}")


def cmd_eval(a):
    ref = _binary(a.reference)
    cand = _read_vectors(a.candidate)
    names = [m.strip() for m in a.metrics.split(",") if m.strip()]
    rep = metrics.patch_evaluate(ref, cand, a.patch, a.frechet_patch, names, a.stroke)
    Path(a.report).write_text(json.dumps(_json_safe(rep), indent=1) + "\n")
    for m in names:
        agg = rep["aggregate"][m]
        mean = agg.get("mean")
        shown = "n/a" if mean is None else f"{mean:.4f}"
        print(f"{m}: mean {shown} over {agg['count']} tiles ({rep['skipped_empty'][m]} empty skipped)")


def cmd_synth(a):
    from .synth import generate_synthetic_map

    img, truth = generate_synthetic_map(a.rows, a.cols, a.jitter, a.seed, cell=a.cell)
    write_image(a.output, img)
    if a.truth:
        faces = [polygonize.PlotRecord(k + 1, ring, plot_number=num)
                 for k, (ring, num) in enumerate(zip(truth.rings, truth.plot_numbers))]
        Path(a.truth).write_text(polygonize.export_plots(faces))


def cmd_run(a):
    cfg = pipeline.PipelineConfig()
    if a.config:
        cfg = pipeline.PipelineConfig.from_text(Path(a.config).read_text())
    overrides = {k: getattr(a, k) for k in ("input", "out_geojson", "out_ascii", "report", "dump_dir", "model")
                 if getattr(a, k) is not None}
    for item in a.set or []:
        if "=" not in item:
            raise pipeline.InputError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    cfg = cfg.updated(overrides)
    _, _, report = pipeline.run(cfg)
    c = report.counters
    print(f"{c['faces']} plots, {c['plot_numbers']} numbered, {c['review_flags']} flagged for review, "
          f"{report.total_ms / 1000:.1f} s")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cadvec", description="Cadastral map raster to vector tools.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("thin", help="thin a binary raster to a 1-pixel skeleton")
    s.add_argument("input")
    s.add_argument("output")
    s.set_defaults(func=cmd_thin)

    s = sub.add_parser("gapfill", help="bridge small gaps between stroke ends")
    s.add_argument("--max-gap", type=float, default=12.0)
    s.add_argument("--max-angle", type=float, default=45.0)
    s.add_argument("--anchor-area", type=int, default=0)
    s.add_argument("input")
    s.add_argument("output")
    s.set_defaults(func=cmd_gapfill)

    s = sub.add_parser("gengaps", help="erase random stroke runs (training data)")
    s.add_argument("--n", type=int, default=10)
    s.add_argument("--len", type=_gap_range, default=(3, 8))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("input")
    s.add_argument("corrupted")
    s.add_argument("truth")
    s.set_defaults(func=cmd_gengaps)

    s = sub.add_parser("trace", help="raster to ASCII vector lines")
    s.add_argument("--prune", action="store_true", help="snap junctions and drop short dangles")
    s.add_argument("--snap-tol", type=float, default=1.5)
    s.add_argument("--dangle-len", type=float, default=8.0)
    s.add_argument("input")
    s.add_argument("output")
    s.set_defaults(func=cmd_trace)

    s = sub.add_parser("ascii-roundtrip", help="check an ASCII vector file parses and is canonical")
    s.add_argument("input")
    s.add_argument("output", nargs="?")
    s.set_defaults(func=cmd_ascii_roundtrip)

    s = sub.add_parser("smooth", help="repair join errors, staircases and fragments")
    s.add_argument("--join-threshold", type=float, default=3.0)
    s.add_argument("--max-passes", type=int, default=16)
    s.add_argument("--report")
    s.add_argument("input")
    s.add_argument("output")
    s.set_defaults(func=cmd_smooth)

    s = sub.add_parser("ocr-train", help="train the template recogniser from samples_dir/<digit>/*")
    s.add_argument("samples_dir")
    s.add_argument("model")
    s.set_defaults(func=cmd_ocr_train)

    s = sub.add_parser("ocr-eval", help="confusion matrix on testdir/<digit>/*")
    s.add_argument("model")
    s.add_argument("testdir")
    s.set_defaults(func=cmd_ocr_eval)

    s = sub.add_parser("ocr-synth", help="write a synthetic digit sample directory")
    s.add_argument("--per-font", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("out_dir")
    s.set_defaults(func=cmd_ocr_synth)

    s = sub.add_parser("polygonize", help="plot polygons with plot numbers as GeoJSON")
    s.add_argument("lines")
    s.add_argument("digits", help="CSV with header label,confidence,x,y")
    s.add_argument("output")
    s.set_defaults(func=cmd_polygonize)

    s = sub.add_parser("eval", help="tile-wise metrics of vectors against a reference raster")
    s.add_argument("--metrics", default="iou,hausdorff,mse")
    s.add_argument("--patch", type=int, default=512)
    s.add_argument("--frechet-patch", type=int, default=64)
    s.add_argument("--stroke", type=int, default=3)
    s.add_argument("reference")
    s.add_argument("candidate")
    s.add_argument("report")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="render a synthetic numbered plot grid")
    s.add_argument("--rows", type=int, default=3)
    s.add_argument("--cols", type=int, default=3)
    s.add_argument("--jitter", type=int, default=0)
    s.add_argument("--cell", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--truth", help="also write the true plots as GeoJSON")
    s.add_argument("output")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("run", help="full pipeline on a screened map")
    s.add_argument("--config")
    s.add_argument("--input")
    s.add_argument("--out-geojson")
    s.add_argument("--out-ascii")
    s.add_argument("--report")
    s.add_argument("--dump-dir")
    s.add_argument("--model")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = args.func(args)
    except pipeline.StageError as exc:
        print(f"cadvec: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (OSError, ValueError, ImageFormatError, vecmodel.AsciiFormatError,
            ocr.ModelFormatError, pipeline.InputError) as exc:
        print(f"cadvec: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
