"""Command-line entry points: benchmark sweep, simulator server, and test
bundle generation."""

from __future__ import annotations

import argparse
import sys


def _add_bench(sub) -> None:
    p = sub.add_parser("bench", help="run the latency benchmark sweep")
    p.add_argument("--model", required=True, help="model bundle directory")
    p.add_argument("--images", required=True, help="folder of full images")
    p.add_argument("--prompt", default="What is in the image?")
    p.add_argument("--n", type=int, default=100, help="number of images to sweep")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--load-runs", type=int, default=10)
    p.add_argument("--warmup", type=int, default=1)


def _add_serve(sub) -> None:
    p = sub.add_parser("serve", help="run the HUD simulator gateway")
    p.add_argument("--config", help="application config JSON file")
    p.add_argument("--model", help="override model bundle directory")
    p.add_argument("--images", help="override frame source (image folder)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)


def _add_make_bundle(sub) -> None:
    p = sub.add_parser("make-test-bundle", help="generate the tiny deterministic model bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="gazevlm")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_bench(sub)
    _add_serve(sub)
    _add_make_bundle(sub)
    args = parser.parse_args(argv)

    if args.command == "bench":
        from .bench import emit_report, run_benchmark

        report = run_benchmark(
            args.model,
            args.images,
            prompt=args.prompt,
            n_images=args.n,
            load_runs=args.load_runs,
            warmup=args.warmup,
        )
        paths = emit_report(report, args.out)
        print((paths["table"]).read_text())
        print(f"wrote {paths['records']} and {paths['summary']}")
        return 0

    if args.command == "serve":
        from .config import AppConfig
        from .gateway import serve

        config = AppConfig.from_file(args.config) if args.config else AppConfig()
        if args.model:
            config.model_dir = args.model
        if args.images:
            config.frame_source = args.images
        print(f"serving HUD simulator on http://{args.host}:{args.port}/")
        serve(config, host=args.host, port=args.port)
        return 0

    if args.command == "make-test-bundle":
        from .vlm.testbundle import make_test_bundle

        out = make_test_bundle(args.out, seed=args.seed)
        print(f"wrote tiny bundle to {out}")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
