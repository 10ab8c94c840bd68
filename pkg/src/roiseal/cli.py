"""Command-line interface: gen, embed, extract, verify, sweep, psnr.

Exit codes: 0 success or verification pass, 1 authentication failure,
2 operational error. stdout carries machine-readable results only;
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import sweep as sweepmod
from . import watermark
from .jpegcodec import JpegError
from .pixmap import Image, PgmError, gen_phantom, load_pgm, psnr, save_pgm
from .watermark import (
    BlockNotDark,
    CapacityExceeded,
    KeyNotCoprime,
    NoContent,
    Rect,
    WatermarkParams,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_ERROR = 2


class CliError(Exception):
    def __init__(self, code: str, detail: str):
        super().__init__(detail)
        self.code = code
        self.detail = detail


_ERROR_CODES = [
    (CapacityExceeded, "capacity-exceeded"),
    (KeyNotCoprime, "key-not-coprime"),
    (BlockNotDark, "block-not-dark"),
    (NoContent, "no-content"),
    (PgmError, "bad-image"),
    (JpegError, "bad-jpeg"),
    (FileNotFoundError, "io-error"),
    (IsADirectoryError, "io-error"),
    (PermissionError, "io-error"),
    (ValueError, "bad-args"),
    (OSError, "io-error"),
]


def _read_image(path: str) -> Image:
    return load_pgm(Path(path).read_bytes())


def _parse_roi(text: str) -> Rect:
    parts = text.split(",")
    if len(parts) != 4:
        raise CliError("bad-args", "--roi expects x,y,w,h")
    try:
        x, y, w, h = (int(p) for p in parts)
        return Rect(x, y, w, h)
    except ValueError as exc:
        raise CliError("bad-args", f"bad --roi: {exc}") from exc


def _params_from_args(args, plane=None, guard=None) -> WatermarkParams:
    return WatermarkParams(
        key=args.key,
        plane=args.plane if plane is None else plane,
        guard=args.guard if guard is None else guard,
        fg_threshold=args.fg_threshold,
        hash_key=args.hash_key.encode() if args.hash_key else None,
    )


def _add_param_flags(p: argparse.ArgumentParser):
    p.add_argument("--key", type=int, default=37, help="embedding key (default 37)")
    p.add_argument("--plane", type=int, choices=(1, 2, 3), default=1,
                   help="bit plane, 1 = least significant (default 1)")
    p.add_argument("--guard", type=int, default=1,
                   help="guard band around the ROI in blocks (default 1)")
    p.add_argument("--fg-threshold", type=int, default=0,
                   help="intensities above this count as foreground (default 0)")
    p.add_argument("--hash-key", default=None,
                   help="optional shared secret; switches to keyed hashing")


def _load_manifest(path: str) -> watermark.EmbedManifest:
    try:
        doc = json.loads(Path(path).read_text())
        return watermark.EmbedManifest.from_json_dict(doc)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise CliError("bad-args", f"unreadable manifest {path}: {exc}") from exc


def _geometry(args, img: Image):
    """(roi, plane, guard, manifest) resolved from manifest and/or flags."""
    manifest = _load_manifest(args.manifest) if args.manifest else None
    roi = _parse_roi(args.roi) if args.roi else None
    if manifest is not None:
        roi = roi or manifest.roi
        plane, guard = manifest.plane, manifest.guard
    else:
        if roi is None:
            raise CliError("bad-args", "need --manifest or --roi")
        plane, guard = args.plane, args.guard
    if manifest is not None and args.roi is None:
        n = len(watermark.embeddable_blocks(img.width, img.height, roi, guard))
        if n != manifest.n:
            raise CliError(
                "manifest-mismatch",
                f"manifest records {manifest.n} embeddable blocks, image yields {n}",
            )
    return roi, plane, guard, manifest


def cmd_gen(args) -> int:
    img = gen_phantom(args.width, args.height, args.seed)
    Path(args.output).write_bytes(save_pgm(img))
    return EXIT_OK


def cmd_embed(args) -> int:
    img = _read_image(args.input)
    params = _params_from_args(args)
    if args.roi:
        roi = _parse_roi(args.roi)
    else:
        roi = watermark.detect_roi(img, params.fg_threshold)
    marked, manifest = watermark.embed(img, roi, params)
    Path(args.output).write_bytes(save_pgm(marked))
    Path(args.manifest).write_text(json.dumps(manifest.to_json_dict(), indent=2) + "\n")
    print(manifest.digest)
    return EXIT_OK


def cmd_extract(args) -> int:
    img = _read_image(args.input)
    roi, plane, guard, _ = _geometry(args, img)
    params = _params_from_args(args, plane=plane, guard=guard)
    print(watermark.extract(img, roi, params).hex())
    return EXIT_OK


def cmd_verify(args) -> int:
    img = _read_image(args.input)
    roi, plane, guard, manifest = _geometry(args, img)
    params = _params_from_args(args, plane=plane, guard=guard)
    if args.mode == "strict":
        report = watermark.verify_strict(img, roi, params)
    else:
        if manifest is None:
            raise CliError("bad-args", "reference mode needs --manifest")
        extracted = watermark.extract(img, roi, params)
        report = watermark.verify_reference(extracted, bytes.fromhex(manifest.digest))
    print(json.dumps(report.to_json_dict()))
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def cmd_sweep(args) -> int:
    img = _read_image(args.input)
    params = _params_from_args(args)
    roi = _parse_roi(args.roi) if args.roi else watermark.detect_roi(img, params.fg_threshold)
    planes = sorted({int(p) for p in args.planes.split(",")})
    if not planes or any(p not in (1, 2, 3) for p in planes):
        raise CliError("bad-args", "--planes must list values from 1,2,3")
    if not 1 <= args.q_min <= args.q_max <= 100 or args.q_step < 1:
        raise CliError("bad-args", "bad quality range")
    qualities = list(range(args.q_min, args.q_max + 1, args.q_step))

    report = sweepmod.run_sweep(img, roi, params, planes, qualities)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "sweep.csv"
    sweepmod.write_csv(report, csv_path)
    summary = report.to_json_dict()
    summary["csv"] = str(csv_path)
    if not args.no_figures:
        summary["figures"] = [str(p) for p in sweepmod.render_figures(report, out_dir)]
    (out_dir / "sweep.json").write_text(json.dumps(summary, indent=2) + "\n")
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_psnr(args) -> int:
    a = _read_image(args.image_a)
    b = _read_image(args.image_b)
    value = psnr(a, b)
    print("inf" if math.isinf(value) else f"{value:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roiseal",
        description="Seal the region of interest of a grayscale image with a "
        "fragile watermark that survives baseline JPEG compression.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a deterministic synthetic test image")
    p.add_argument("width", type=int)
    p.add_argument("height", type=int)
    p.add_argument("output", help="output PGM path")
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("embed", help="hash the ROI and embed the digest")
    p.add_argument("input", help="input PGM")
    p.add_argument("-o", "--output", required=True, help="watermarked PGM path")
    p.add_argument("-m", "--manifest", required=True, help="manifest JSON path")
    p.add_argument("--roi", default=None,
                   help="x,y,w,h (1-based); detected from content when omitted")
    _add_param_flags(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="read the embedded digest back out")
    p.add_argument("input", help="watermarked PGM")
    p.add_argument("-m", "--manifest", default=None, help="manifest JSON path")
    p.add_argument("--roi", default=None, help="x,y,w,h override")
    _add_param_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("verify", help="check integrity of a received image")
    p.add_argument("input", help="received PGM")
    p.add_argument("-m", "--manifest", default=None, help="manifest JSON path")
    p.add_argument("--roi", default=None, help="x,y,w,h override")
    p.add_argument("--mode", choices=("strict", "reference"), default="strict",
                   help="strict recomputes the ROI hash; reference compares "
                   "against the manifest digest (default strict)")
    _add_param_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="survival sweep across JPEG qualities")
    p.add_argument("input", help="original (unwatermarked) PGM")
    p.add_argument("-d", "--out-dir", required=True, help="report directory")
    p.add_argument("--planes", default="1,2,3", help="comma list (default 1,2,3)")
    p.add_argument("--q-min", type=int, default=40)
    p.add_argument("--q-max", type=int, default=100)
    p.add_argument("--q-step", type=int, default=1)
    p.add_argument("--roi", default=None, help="x,y,w,h override")
    p.add_argument("--no-figures", action="store_true", help="skip chart rendering")
    _add_param_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("psnr", help="PSNR between two same-size PGMs")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.set_defaults(func=cmd_psnr)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(json.dumps({"error": exc.code, "detail": exc.detail}))
        print(f"error: {exc.detail}", file=sys.stderr)
        return EXIT_ERROR
    except tuple(t for t, _ in _ERROR_CODES) as exc:
        code = next(c for t, c in _ERROR_CODES if isinstance(exc, t))
        print(json.dumps({"error": code, "detail": str(exc)}))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
