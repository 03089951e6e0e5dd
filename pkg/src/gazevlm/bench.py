"""Latency benchmark harness.

Sweeps a folder of full images (not crops) through the engine with a
fixed prompt, recording per-image inference time (encode + decode) and
token-generation speed, then summarizes each metric. Model load time is
measured separately, over its own runs, and reported apart — it is never
folded into the per-image numbers. The sweep is strictly sequential so
per-image CPU timing stays clean.
"""

from __future__ import annotations

import csv
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from PIL import Image

from .vlm.engine import VlmEngine, load_model, measure_load_time
from .vlm.preprocess import preprocess

RECORD_FIELDS = ["image_id", "inference_s", "encode_s", "decode_s", "tokens", "tg_tok_per_s"]
SUMMARY_METRICS = ["inference_s", "tg_tok_per_s"]


@dataclass(frozen=True)
class LatencyRecord:
    image_id: str
    inference_time: float
    encode_time: float
    decode_time: float
    tokens: int
    tg_speed: float
    answer: str


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    std: float
    median: float
    min: float
    max: float
    q25: float
    q75: float


def summarize(values: list[float]) -> SummaryStats:
    """Sample std (n-1 denominator; 0 for a single value), quartiles by
    linear interpolation (type 7)."""
    if not values:
        raise ValueError("cannot summarize an empty list")
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return SummaryStats(
        n=len(arr),
        mean=float(arr.mean()),
        std=std,
        median=float(np.quantile(arr, 0.5)),
        min=float(arr.min()),
        max=float(arr.max()),
        q25=float(np.quantile(arr, 0.25)),
        q75=float(np.quantile(arr, 0.75)),
    )


@dataclass
class BenchmarkReport:
    records: list[LatencyRecord]
    failures: list[tuple[str, str]]
    summaries: dict[str, SummaryStats]
    load_stats: dict
    prompt: str
    warmup: int


def run_benchmark(
    model_dir: str | Path,
    image_folder: str | Path,
    prompt: str = "What is in the image?",
    n_images: Optional[int] = None,
    load_runs: int = 10,
    warmup: int = 1,
    clock: Callable[[], float] = time.perf_counter,
    engine: Optional[VlmEngine] = None,
) -> BenchmarkReport:
    image_folder = Path(image_folder)
    paths = sorted(
        p for p in image_folder.iterdir()
        if p.suffix.lower() in (".jpg", ".jpeg", ".png", ".bmp", ".webp")
    )
    if not paths:
        raise ValueError(f"no images in {image_folder}")
    if n_images is not None:
        paths = paths[:n_images]

    load_stats = measure_load_time(model_dir, runs=load_runs) if load_runs > 0 else {}
    if engine is None:
        engine = VlmEngine(load_model(model_dir))
    cfg = engine.bundle.preprocess_config

    def run_one(path: Path):
        with Image.open(path) as im:
            pixels = np.asarray(im.convert("RGB"))
        image = preprocess(pixels, cfg, provenance=path.name)
        return engine.generate(image, prompt=prompt, clock=clock)

    # Untimed warm-up so first-run allocation noise never skews Min.
    for path in paths[:warmup]:
        try:
            run_one(path)
        except Exception:
            pass

    records: list[LatencyRecord] = []
    failures: list[tuple[str, str]] = []
    for path in paths:
        try:
            result = run_one(path)
        except Exception as exc:
            failures.append((path.name, str(exc)))
            continue
        records.append(
            LatencyRecord(
                image_id=path.name,
                inference_time=result.inference_time,
                encode_time=result.encode_time,
                decode_time=result.decode_time,
                tokens=result.tokens_generated,
                tg_speed=result.tg_speed,
                answer=result.text,
            )
        )

    summaries = {}
    if records:
        summaries["inference_s"] = summarize([r.inference_time for r in records])
        tg = [r.tg_speed for r in records if r.tokens > 0]
        if tg:
            summaries["tg_tok_per_s"] = summarize(tg)
    return BenchmarkReport(
        records=records,
        failures=failures,
        summaries=summaries,
        load_stats=load_stats,
        prompt=prompt,
        warmup=warmup,
    )


def _atomic_write(path: Path, write_fn) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(report: BenchmarkReport, out_dir: str | Path) -> dict[str, Path]:
    """Write records.csv, summary.csv, and summary.txt; reruns overwrite
    atomically. Field order is fixed so diffs are meaningful."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "records": out_dir / "records.csv",
        "summary": out_dir / "summary.csv",
        "table": out_dir / "summary.txt",
    }

    def write_records(fh):
        w = csv.writer(fh)
        w.writerow(RECORD_FIELDS)
        for r in report.records:
            w.writerow(
                [r.image_id, f"{r.inference_time:.6f}", f"{r.encode_time:.6f}",
                 f"{r.decode_time:.6f}", r.tokens, f"{r.tg_speed:.6f}"]
            )

    def write_summary(fh):
        w = csv.writer(fh)
        w.writerow(["metric", "n", "mean", "std", "median", "min", "max", "q25", "q75"])
        for metric, s in report.summaries.items():
            w.writerow(
                [metric, s.n, f"{s.mean:.6f}", f"{s.std:.6f}", f"{s.median:.6f}",
                 f"{s.min:.6f}", f"{s.max:.6f}", f"{s.q25:.6f}", f"{s.q75:.6f}"]
            )

    def write_table(fh):
        fh.write(f"# prompt: {report.prompt!r}\n")
        fh.write(f"# warmup runs: {report.warmup} (untimed); sweep sequential\n")
        fh.write(f"# timer: time.perf_counter resolution {time.get_clock_info('perf_counter').resolution}\n")
        if report.load_stats:
            ls = report.load_stats
            fh.write(
                f"# model load over {ls['runs']} runs (excluded from inference): "
                f"min {ls['min']:.3f}s mean {ls['mean']:.3f}s max {ls['max']:.3f}s\n"
            )
        fh.write(f"{'Metric':<16}{'Mean':>10}{'Std':>10}{'Median':>10}{'Min':>10}{'Max':>10}\n")
        for metric, s in report.summaries.items():
            fh.write(
                f"{metric:<16}{s.mean:>10.2f}{s.std:>10.2f}{s.median:>10.2f}"
                f"{s.min:>10.2f}{s.max:>10.2f}\n"
            )
        if report.failures:
            fh.write(f"# failures: {len(report.failures)}\n")
            for name, err in report.failures:
                fh.write(f"#   {name}: {err}\n")

    _atomic_write(paths["records"], write_records)
    _atomic_write(paths["summary"], write_summary)
    _atomic_write(paths["table"], write_table)
    return paths
