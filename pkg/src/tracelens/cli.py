"""Command-line entry point.

Subcommands: synth, decode, pixels, tile, train, eval, score, explain,
export-image. Exit codes: 0 success, 1 usage error, 2 data/model error.
All randomness flows from explicit --seed flags; identical invocations on
identical inputs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import explain as explain_mod
from . import harness, henet, imaging, models, ptcodec, synthgen

DATA_ERRORS = (
    ptcodec.CodecError,
    ptcodec.InvalidPacket,
    imaging.EmptyInput,
    imaging.AlreadyMultiChannel,
    imaging.NonDivisibleFactor,
    henet.NoTilesProduced,
    explain_mod.GridMismatch,
    models.DimensionMismatch,
    models.EmptyDataset,
    models.SingleClassDataset,
    models.WrongKind,
    models.UnsupportedVersion,
    models.CorruptModelFile,
    harness.ParseError,
    harness.DuplicatePath,
    harness.ClassTooSmall,
    harness.LengthMismatch,
    OSError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the contract wants 1
    def error(self, message):
        raise UsageError(message)


def _positive(name, value, minimum=1):
    if value < minimum:
        raise UsageError(f"--{name} must be >= {minimum}, got {value}")
    return value


def _build_parser() -> _Parser:
    parser = _Parser(prog="tracelens", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic trace corpus")
    p.add_argument("--benign", type=int, required=True)
    p.add_argument("--malicious", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--length", type=int, default=50_000)
    p.add_argument("--rho", type=float, default=0.3)
    p.add_argument("--p-taken", type=float, default=0.7)
    p.add_argument("--pool", type=int, default=8)
    p.add_argument("--burst-min", type=int, default=64)
    p.add_argument("--burst-max", type=int, default=256)

    p = sub.add_parser("decode", help="decode a trace file and list its packets")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--mode", choices=["strict", "lenient"], default="lenient")

    p = sub.add_parser("pixels", help="convert a trace or binary to raw pixel bytes")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tip-family", action="store_true")
    p.add_argument("--static", action="store_true",
                   help="treat the input as a raw binary instead of a trace")

    p = sub.add_parser("tile", help="slice a trace into PGM tiles")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--tail", choices=["drop", "pad"], default="drop")
    p.add_argument("--tip-family", action="store_true")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("train", help="train a tile model over a trace corpus")
    p.add_argument("--data", required=True, help="corpus directory with manifest.csv")
    p.add_argument("--kind", choices=["nn", "knn", "gnb", "rf"], required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_pipeline_flags(p)
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--learning-rate", type=float, default=0.03)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--trees", type=int, default=50)
    p.add_argument("--max-depth", type=int, default=12)

    p = sub.add_parser("eval", help="train and compare the baseline classifiers")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="comparison table CSV path")
    p.add_argument("--test-fraction", type=float, default=0.2)
    _add_pipeline_flags(p)

    p = sub.add_parser("score", help="score one trace with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--emit-tiles", action="store_true")

    p = sub.add_parser("explain", help="explain one tile of a trace as a heatmap")
    p.add_argument("--model", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--tile-index", type=int, default=1)
    p.add_argument("--grid", type=int, default=4)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.25)
    p.add_argument("--baseline", choices=["tile-mean", "zero"], default="tile-mean")
    p.add_argument("--out", help="heatmap PPM path")
    p.add_argument("--json-out", help="explanation record JSON path")

    p = sub.add_parser("export-image", help="export one tile as a PGM image")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--tail", choices=["drop", "pad"], default="drop")
    p.add_argument("--tip-family", action="store_true")
    p.add_argument("--out", required=True)
    return parser


def _add_pipeline_flags(p):
    p.add_argument("--m", type=int, default=28)
    p.add_argument("--tail", choices=["drop", "pad"], default="drop")
    p.add_argument("--tip-family", action="store_true")
    p.add_argument("--pool-factor", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.5)


def _pipeline_config(args) -> henet.PipelineConfig:
    _positive("m", args.m)
    if not 0.0 < args.threshold < 1.0:
        raise UsageError(f"--threshold must lie in (0, 1), got {args.threshold}")
    if args.pool_factor and (args.pool_factor < 1 or args.m % args.pool_factor):
        raise UsageError(f"--pool-factor must divide --m {args.m}, got {args.pool_factor}")
    return henet.PipelineConfig(
        m=args.m,
        tail_policy="pad_zero" if args.tail == "pad" else "drop",
        tip_family=args.tip_family,
        pool_factor=args.pool_factor or None,
        threshold=args.threshold,
    )


def _read(path) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def _load_corpus(data_dir):
    manifest = harness.load_manifest(os.path.join(data_dir, "manifest.csv"))
    return manifest


def _cmd_synth(args) -> int:
    _positive("length", args.length, 0)
    _positive("benign", args.benign, 0)
    _positive("malicious", args.malicious, 0)
    if not 0.0 <= args.rho <= 1.0 or not 0.0 <= args.p_taken <= 1.0:
        raise UsageError("--rho and --p-taken must lie in [0, 1]")
    if not 1 <= args.burst_min <= args.burst_max:
        raise UsageError("need 1 <= --burst-min <= --burst-max")
    # burst_rate applies to malicious traces only; gen_dataset zeroes it
    # for the benign ones
    base = synthgen.SynthProfile(
        kind="malicious",
        length=args.length,
        p_taken=args.p_taken,
        pool_size=_positive("pool", args.pool),
        burst_rate=args.rho,
        burst_min=args.burst_min,
        burst_max=args.burst_max,
    )
    path = synthgen.gen_dataset(args.benign, args.malicious, base, args.seed, args.out)
    print(path)
    return 0


def _cmd_decode(args) -> int:
    report = ptcodec.decode_stream(_read(args.infile), mode=args.mode)
    for p in report.packets:
        extra = ""
        if p.branch_bits:
            extra = " bits=" + "".join("T" if b else "N" for b in p.branch_bits)
        elif p.kind in ptcodec.TIP_KINDS:
            extra = f" code={p.ip_bytes_code} payload={p.payload.hex()}"
        print(f"{p.byte_offset:8d} {p.kind.value}{extra}")
    for offset, reason in report.diagnostics:
        print(f"{offset:8d} diagnostic {reason}", file=sys.stderr)
    return 0


def _cmd_pixels(args) -> int:
    raw = _read(args.infile)
    if args.static:
        x = imaging.pixels_from_binary(raw)
    else:
        report = ptcodec.decode_stream(raw, mode="lenient")
        x = imaging.pixels_from_packets(report.packets, tip_family=args.tip_family)
    with open(args.out, "wb") as f:
        f.write(x.pixels)
    print(f"{len(x)} pixels")
    return 0


def _tiles_from_file(args):
    _positive("m", args.m)
    report = ptcodec.decode_stream(_read(args.infile), mode="lenient")
    x = imaging.pixels_from_packets(report.packets, tip_family=args.tip_family)
    policy = "pad_zero" if args.tail == "pad" else "drop"
    batch = imaging.slice_tiles(x, args.m, policy)
    if batch.n == 0:
        raise henet.NoTilesProduced(
            f"{len(x)} pixels form no {args.m}x{args.m} tile under drop policy"
        )
    return batch


def _cmd_tile(args) -> int:
    batch = _tiles_from_file(args)
    os.makedirs(args.out_dir, exist_ok=True)
    for t in batch.tiles:
        imaging.write_netpbm(t, os.path.join(args.out_dir, f"tile_{t.index:05d}.pgm"))
    print(f"{batch.n} tiles")
    return 0


def _cmd_export_image(args) -> int:
    _positive("k", args.k)
    batch = _tiles_from_file(args)
    if args.k > batch.n:
        raise henet.NoTilesProduced(f"tile {args.k} requested but trace has {batch.n}")
    imaging.write_netpbm(batch.tiles[args.k - 1], args.out)
    return 0


def _cmd_train(args) -> int:
    cfg = _pipeline_config(args)
    manifest = _load_corpus(args.data)
    rows = [r for r in manifest.rows if r.split != "test"]
    traces = [
        (r.path, _read(os.path.join(args.data, r.path)), manifest.label_index(r))
        for r in rows
    ]
    tiles, _ = henet.build_tile_dataset(traces, cfg)
    hyper = {
        "nn": {"hidden": args.hidden, "epochs": args.epochs,
               "learning_rate": args.learning_rate, "batch_size": args.batch_size},
        "knn": {"k": args.k},
        "gnb": {},
        "rf": {"trees": args.trees, "max_depth": args.max_depth},
    }[args.kind]
    model = henet.henet_train(tiles, args.kind, hyper, args.seed, cfg)
    henet.save_henet(model, args.out)
    print(args.out)
    return 0


def _cmd_eval(args) -> int:
    if not 0.0 < args.test_fraction < 1.0:
        raise UsageError(f"--test-fraction must lie in (0, 1), got {args.test_fraction}")
    cfg = _pipeline_config(args)
    manifest = _load_corpus(args.data)
    rows = harness.benchmark_table(
        harness.DEFAULT_SPECS, manifest, args.data, cfg, args.seed,
        test_fraction=args.test_fraction,
    )
    csv_text = harness.table_to_csv(rows)
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        f.write(csv_text)
    sys.stdout.write(harness.table_to_text(rows))
    return 0


def _cmd_score(args) -> int:
    model = henet.load_henet(args.model)
    verdict = henet.henet_score_trace(model, _read(args.trace))
    print(verdict.to_json_line(args.trace, include_tiles=args.emit_tiles))
    return 0


def _cmd_explain(args) -> int:
    _positive("tile-index", args.tile_index)
    _positive("grid", args.grid)
    if args.samples < args.grid * args.grid + 1:
        raise UsageError(f"--samples must be >= grid^2+1 = {args.grid ** 2 + 1}")
    if args.sigma <= 0:
        raise UsageError("--sigma must be > 0")
    model = henet.load_henet(args.model)
    tiles = henet.trace_to_tiles(_read(args.trace), model.pipeline)
    if args.tile_index > len(tiles):
        raise henet.NoTilesProduced(
            f"tile {args.tile_index} requested but trace has {len(tiles)}"
        )
    tile = tiles[args.tile_index - 1]
    ex = explain_mod.explain_tile(
        model, tile,
        g=args.grid, samples=args.samples, seed=args.seed,
        kernel_width=args.sigma, baseline=args.baseline,
    )
    if args.out:
        imaging.write_netpbm(explain_mod.render_heatmap(tile, ex), args.out)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as f:
            json.dump(ex.to_dict(), f)
            f.write("\n")
    if not args.out and not args.json_out:
        print(json.dumps(ex.to_dict()))
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "decode": _cmd_decode,
    "pixels": _cmd_pixels,
    "tile": _cmd_tile,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "score": _cmd_score,
    "explain": _cmd_explain,
    "export-image": _cmd_export_image,
}


def run_cli(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except DATA_ERRORS as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
