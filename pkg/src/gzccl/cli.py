"""Command-line front end: benchmark runner, codec characterization, image stacking.

Reports are JSON (or flat CSV) with a fixed field layout; repeated runs of
the same command with the same seed produce byte-identical files.  Cost
parameters come from ``--cost-config`` (JSON), the ``GZCCL_COST_CONFIG``
environment variable, or the built-in defaults, with the behavior flags
overridable per invocation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import collectives
from .codec import Workspace, compress, decompress
from .costmodel import CostParams, load_cost_params
from .simnet import CommunicatorSpec, Network, run_collective

DATA_SOURCES = ("uniform", "ramp")  # plus file:PATH


def load_dataset(path: str, count: int) -> np.ndarray:
    """Read ``count`` little-endian binary32 values from a raw file."""
    arr = np.fromfile(path, dtype="<f4")
    if arr.size < count:
        raise ValueError(f"dataset {path} holds {arr.size} values, need at least {count}")
    arr = arr[:count]
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise ValueError(f"non-finite value at offset {int(bad[0])} in {path}")
    return arr


def _resolve_params(args) -> CostParams:
    path = getattr(args, "cost_config", None) or os.environ.get("GZCCL_COST_CONFIG")
    params = load_cost_params(path)
    updates = {}
    for flag in ("overlap", "staging", "multi_stream"):
        v = getattr(args, flag, None)
        if v is not None:
            updates[flag] = v
    return replace(params, **updates) if updates else params


def _make_values(source: str, total: int, seed: int) -> np.ndarray:
    if source == "uniform":
        return np.random.default_rng(seed).uniform(0.0, 1.0, total).astype(np.float32)
    if source == "ramp":
        return (np.arange(total, dtype=np.float64) * 1e-3).astype(np.float32)
    if source.startswith("file:"):
        return load_dataset(source[5:], total)
    raise ValueError(f"unknown data source {source!r}; use uniform, ramp, or file:PATH")


def _flatten(d: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            flat[key] = json.dumps(v, sort_keys=True)
        else:
            flat[key] = v
    return flat


def _emit_report(report_dict: dict, out: str | None, fmt: str) -> None:
    if fmt == "json":
        text = json.dumps(report_dict, sort_keys=True, indent=2) + "\n"
    else:
        flat = _flatten(report_dict)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        keys = sorted(flat)
        writer.writerow(keys)
        writer.writerow([flat[k] for k in keys])
        text = buf.getvalue()
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_bench(args) -> int:
    params = _resolve_params(args)
    algo = collectives.get_algorithm(args.algo)
    total = args.ranks * args.elements
    values = _make_values(args.data, total, args.seed)
    counts = None
    if algo.family == "scatter":
        inputs = values
        counts = [args.elements] * args.ranks
    else:
        inputs = [values[i * args.elements : (i + 1) * args.elements] for i in range(args.ranks)]
    net = Network(CommunicatorSpec(size=args.ranks, root=args.root), params)
    _, report = run_collective(
        net,
        args.algo,
        inputs,
        eb=args.eb,
        reduce_op=args.op,
        codec=args.codec,
        bits=args.bits,
        counts=counts,
        seed=args.seed,
        data_source=args.data,
    )
    d = report.to_dict()
    d["elements_per_rank"] = args.elements
    _emit_report(d, args.out, args.format)
    return 0


def cmd_characterize(args) -> int:
    if not args.min_bytes < args.max_bytes:
        raise ValueError("min-bytes must be smaller than max-bytes")
    if args.points < 2:
        raise ValueError("need at least 2 points")
    params = _resolve_params(args)
    sizes = np.unique(np.geomspace(args.min_bytes, args.max_bytes, args.points).astype(np.int64))
    rng = np.random.default_rng(args.seed)
    ws = Workspace()
    rows = []
    for nbytes in sizes:
        n = max(int(nbytes) // 4, 1)
        data = rng.uniform(0.0, 1.0, n).astype(np.float32)
        best_c = math.inf
        best_d = math.inf
        blob = b""
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            blob = compress(data, args.eb, ws)
            best_c = min(best_c, time.perf_counter() - t0)
            t0 = time.perf_counter()
            decompress(blob, ws)
            best_d = min(best_d, time.perf_counter() - t0)
        rows.append(
            (
                int(nbytes),
                params.kernel_time(int(nbytes), "compress"),
                params.kernel_time(int(nbytes), "decompress"),
                best_c,
                best_d,
            )
        )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bytes", "model_compress_s", "model_decompress_s", "measured_compress_s", "measured_decompress_s"])
    writer.writerows(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def synth_images(images: int, width: int, height: int, seed: int) -> list[np.ndarray]:
    """Seeded smooth 2D field plus per-image noise, values in [0, 1]."""
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be positive")
    yy, xx = np.mgrid[0:height, 0:width]
    base = 0.5 + 0.25 * np.sin(2 * np.pi * 3 * xx / width) * np.cos(2 * np.pi * 2 * yy / height)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(images):
        img = np.clip(base + rng.uniform(-0.2, 0.2, base.shape), 0.0, 1.0)
        out.append(img.astype(np.float32).ravel())
    return out


def cmd_stack(args) -> int:
    if args.images < 2:
        raise ValueError("stacking needs at least 2 images")
    params = _resolve_params(args)
    imgs = synth_images(args.images, args.width, args.height, args.seed)
    net = Network(CommunicatorSpec(size=args.images), params)
    outputs, report = run_collective(
        net,
        args.algo,
        imgs,
        eb=args.eb,
        reduce_op="sum",
        codec="none" if args.algo.startswith("lossless-") else "ebz",
        seed=args.seed,
        data_source="synthetic",
    )
    stacked = np.asarray(outputs[0], dtype="<f4")
    if args.out:
        stacked.tofile(args.out)
    d = report.to_dict()
    d["stack"] = {"images": args.images, "width": args.width, "height": args.height}
    _emit_report(d, args.report, "json")
    return 0


def _add_cost_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cost-config", help="JSON cost parameter file (or set GZCCL_COST_CONFIG)")
    p.add_argument("--overlap", action=argparse.BooleanOptionalAction, default=None, help="overlap compute with communication")
    p.add_argument("--staging", action=argparse.BooleanOptionalAction, default=None, help="route payloads through the host")
    p.add_argument("--multi-stream", dest="multi_stream", action=argparse.BooleanOptionalAction, default=None, help="batch block kernels into one launch")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gzccl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run one collective on the simulated network and write a report")
    b.add_argument("--algo", required=True, choices=sorted(collectives.ALGORITHMS))
    b.add_argument("--ranks", type=int, required=True)
    b.add_argument("--elements", type=int, required=True, help="elements per rank")
    b.add_argument("--eb", type=float, default=1e-4, help="absolute error bound")
    b.add_argument("--codec", choices=("ebz", "fixed-rate", "none"), default="ebz")
    b.add_argument("--bits", type=int, default=8, help="bits per value for the fixed-rate codec")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--data", default="uniform", help="uniform, ramp, or file:PATH (raw binary32)")
    b.add_argument("--root", type=int, default=0)
    b.add_argument("--op", choices=collectives.REDUCE_OPS, default="sum")
    b.add_argument("--out", help="report path (default: stdout)")
    b.add_argument("--format", choices=("json", "csv"), default="json")
    _add_cost_args(b)
    b.set_defaults(fn=cmd_bench)

    c = sub.add_parser("characterize", help="kernel-time curve: model vs measured codec wall clock")
    c.add_argument("--min-bytes", type=int, default=int(1e5))
    c.add_argument("--max-bytes", type=int, default=int(3.2e7))
    c.add_argument("--points", type=int, default=12)
    c.add_argument("--eb", type=float, default=1e-4)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--repeats", type=int, default=3)
    c.add_argument("--out", help="CSV path (default: stdout)")
    _add_cost_args(c)
    c.set_defaults(fn=cmd_characterize)

    s = sub.add_parser("stack", help="image stacking demo: sum N noisy images via an allreduce")
    s.add_argument("--images", type=int, default=64)
    s.add_argument("--width", type=int, default=64)
    s.add_argument("--height", type=int, default=64)
    s.add_argument("--eb", type=float, default=2e-4)
    s.add_argument("--algo", default="rd-allreduce", choices=("rd-allreduce", "ring-allreduce", "lossless-allreduce"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="stacked image path (raw binary32)")
    s.add_argument("--report", help="JSON report path (default: stdout)")
    _add_cost_args(s)
    s.set_defaults(fn=cmd_stack)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
