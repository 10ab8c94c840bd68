"""Robustness sweep: embed, compress at each quality, extract, tabulate.

Produces a CSV (the normative machine-readable output), a JSON summary with
per-plane quality thresholds, and matplotlib figures rendered next to the
CSV for quick inspection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

from . import watermark
from .jpegcodec import decode_jpeg, encode_jpeg
from .pixmap import Image, psnr
from .watermark import Rect, WatermarkParams

CSV_HEADER = "plane,quality,survived,compression_pct,psnr_db"


@dataclass(frozen=True)
class SweepRow:
    plane: int
    quality: int
    survived: bool
    compression_pct: float  # relative to raw size = width*height bytes
    psnr_db: float  # decoded watermarked vs pre-compression watermarked


@dataclass(frozen=True)
class SweepReport:
    rows: list[SweepRow]
    thresholds: dict[int, int | None]
    warnings: list[str]

    def to_json_dict(self) -> dict:
        return {
            "thresholds": {str(p): t for p, t in sorted(self.thresholds.items())},
            "warnings": list(self.warnings),
            "rows": len(self.rows),
        }


def survival_threshold(qualities: list[int], survived: list[bool]) -> int | None:
    """Lowest tested quality that survives along with every quality above it."""
    threshold = None
    for q, ok in sorted(zip(qualities, survived), reverse=True):
        if not ok:
            break
        threshold = q
    return threshold


def contiguity_warnings(rows: list[SweepRow]) -> list[str]:
    """Flag planes whose survival region is not a single upper interval."""
    warnings = []
    planes = sorted({r.plane for r in rows})
    for plane in planes:
        sub = sorted((r for r in rows if r.plane == plane), key=lambda r: r.quality)
        qualities = [r.quality for r in sub]
        survived = [r.survived for r in sub]
        threshold = survival_threshold(qualities, survived)
        stray = [q for q, ok in zip(qualities, survived) if ok and (threshold is None or q < threshold)]
        if stray:
            warnings.append(
                f"plane {plane}: survival is not contiguous; "
                f"qualities below the threshold also survived: {stray}"
            )
    return warnings


def run_sweep(
    img: Image,
    roi: Rect,
    params: WatermarkParams,
    planes: list[int],
    qualities: list[int],
) -> SweepReport:
    """Embed once per plane, then push through the codec at every quality."""
    raw_size = img.width * img.height
    rows = []
    for plane in planes:
        plane_params = replace(params, plane=plane)
        marked, manifest = watermark.embed(img, roi, plane_params)
        embedded = bytes.fromhex(manifest.digest)
        for quality in qualities:
            encoded = encode_jpeg(marked, quality)
            decoded = decode_jpeg(encoded)
            extracted = watermark.extract(decoded, roi, plane_params)
            rows.append(
                SweepRow(
                    plane=plane,
                    quality=quality,
                    survived=extracted == embedded,
                    compression_pct=100.0 * (1.0 - len(encoded.data) / raw_size),
                    psnr_db=psnr(marked, decoded),
                )
            )

    thresholds = {}
    for plane in planes:
        sub = [r for r in rows if r.plane == plane]
        thresholds[plane] = survival_threshold(
            [r.quality for r in sub], [r.survived for r in sub]
        )
    return SweepReport(rows=rows, thresholds=thresholds, warnings=contiguity_warnings(rows))


def _fmt_psnr(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.4f}"


def write_csv(report: SweepReport, path: Path):
    """Write sweep rows; header comments document the PSNR baseline."""
    lines = [
        "# psnr_db compares the decoded watermarked image against the",
        "# pre-compression watermarked image (channel distortion only).",
        "# compression_pct is relative to raw size = width*height bytes.",
        CSV_HEADER,
    ]
    for r in report.rows:
        lines.append(
            f"{r.plane},{r.quality},{'true' if r.survived else 'false'},"
            f"{r.compression_pct:.4f},{_fmt_psnr(r.psnr_db)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def render_figures(report: SweepReport, out_dir: Path) -> list[Path]:
    """Render survival/PSNR/compression charts next to the CSV."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    planes = sorted({r.plane for r in report.rows})
    by_plane = {
        p: sorted((r for r in report.rows if r.plane == p), key=lambda r: r.quality)
        for p in planes
    }
    written = []

    fig, ax = plt.subplots(figsize=(8, 3.2))
    for offset, plane in enumerate(planes):
        rows = by_plane[plane]
        qs = [r.quality for r in rows]
        ys = [offset + (0.8 if r.survived else 0.0) for r in rows]
        ax.step(qs, ys, where="mid", label=f"plane {plane}")
        threshold = report.thresholds.get(plane)
        if threshold is not None:
            ax.axvline(threshold, color=f"C{offset}", linestyle=":", alpha=0.6)
    ax.set_yticks([i + 0.4 for i in range(len(planes))])
    ax.set_yticklabels([f"plane {p}" for p in planes])
    ax.set_xlabel("quality factor")
    ax.set_title("digest survival (high = survived, dotted = threshold)")
    fig.tight_layout()
    path = out_dir / "survival_by_quality.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    for attr, label, fname in (
        ("psnr_db", "PSNR (dB)", "psnr_by_quality.png"),
        ("compression_pct", "compression (%)", "compression_by_quality.png"),
    ):
        fig, ax = plt.subplots(figsize=(8, 3.2))
        for plane in planes:
            rows = by_plane[plane]
            qs = [r.quality for r in rows]
            vs = [getattr(r, attr) for r in rows]
            vs = [v if not math.isinf(v) else float("nan") for v in vs]
            ax.plot(qs, vs, label=f"plane {plane}")
        ax.set_xlabel("quality factor")
        ax.set_ylabel(label)
        ax.legend()
        fig.tight_layout()
        path = out_dir / fname
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written
