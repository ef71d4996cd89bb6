"""Command-line interface and benchmark harness.

Subcommands: field, vote, decode, attribute, interactions, bench, convert.
Exit codes: 0 success, 2 configuration error, 3 data/shape error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
import time

import numpy as np

from . import __version__
from .attribution import attribute, class_interactions, render_heatmap, save_png, vote_map
from .decode import AuxMaps, decode_all, extract_peaks, write_coco, write_jsonl
from .errors import (
    EmptySelection,
    InvalidSpec,
    NotAPermutation,
    OutOfBounds,
    ShapeMismatch,
    TensorFormatError,
    UnknownBackend,
)
from .fields import VoteField, VoteFieldSpec, build_vote_field
from .tensorio import load_labels, read_tensor, remap_regions, write_tensor
from .voting import BACKENDS, vote, vote_all_classes

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_IO = 4

_CONFIG_ERRORS = (InvalidSpec, EmptySelection, UnknownBackend, NotAPermutation)
_DATA_ERRORS = (ShapeMismatch, TensorFormatError, OutOfBounds)


def _default_threads() -> int:
    env = os.environ.get("HV_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _load_field(path) -> VoteField:
    return build_vote_field(VoteFieldSpec.from_json(path))


# ---------------------------------------------------------------------------
# field


def cmd_field(args) -> int:
    field = _load_field(args.spec)
    print(f"R={field.R} field={field.field_side}")
    print("region  ring  K")
    for r in range(field.R):
        print(f"{r:6d}  {field.ring_ids[r]:4d}  {field.counts[r]}")
    if args.map_out:
        write_tensor(field.region_map().astype(np.float32), args.map_out)
        print(f"region map -> {args.map_out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# vote


def cmd_vote(args) -> int:
    field = _load_field(args.spec)
    E = read_tensor(args.evidence)
    if E.ndim == 3:
        out = vote(E, field, args.backend, threshold=args.sparse_threshold)
    elif E.ndim == 4:
        out = vote_all_classes(
            E, field, args.backend,
            threshold=args.sparse_threshold, threads=args.threads,
        )
    else:
        raise ShapeMismatch(f"evidence must be HxWxR or CxHxWxR, got shape {E.shape}")
    write_tensor(out, args.output)
    print(f"presence {'x'.join(map(str, out.shape))} -> {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# decode


def cmd_decode(args) -> int:
    presence = read_tensor(args.presence)
    if presence.ndim == 2:
        presence = presence[None]
    elif presence.ndim != 3:
        raise ShapeMismatch(f"presence must be HxW or CxHxW, got shape {presence.shape}")
    aux = AuxMaps(wh=read_tensor(args.wh), offset=read_tensor(args.offset), stride=args.stride)
    dets = decode_all(presence, aux, top_k=args.top_k, score_thresh=args.score_thresh)
    with open(args.output, "w", encoding="utf-8") as fh:
        write_jsonl(dets, fh)
    if args.coco:
        with open(args.coco, "w", encoding="utf-8") as fh:
            write_coco(dets, fh, image_id=args.image_id)
    print(f"{len(dets)} detections -> {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# attribute


def cmd_attribute(args) -> int:
    field = _load_field(args.spec)
    E = read_tensor(args.evidence)
    cy, cx = (int(v) for v in args.center.split(","))
    records = attribute(E, field, (cy, cx), keep_zeros=args.keep_zeros)
    doc = [
        {"voter": list(rec.voter), "region": rec.region, "strength": rec.strength}
        for rec in records
    ]
    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    total = sum(rec.strength for rec in records)
    print(f"{len(records)} votes, total strength {total:.6g} -> {args.output}")
    if args.heatmap:
        save_png(render_heatmap(vote_map(records, E.shape[0], E.shape[1])), args.heatmap)
        print(f"heatmap -> {args.heatmap}")
    if args.verify:
        # Duality: attributed strengths must sum to the presence value.
        got = float(vote(E, field, "scatter")[cy, cx])
        want = sum(rec.strength for rec in attribute(E, field, (cy, cx), keep_zeros=True))
        tol = 1e-6 * max(abs(got), abs(want), 1e-30)
        if abs(got - want) > tol:
            print(f"duality check FAILED: sum {want!r} vs presence {got!r}", file=sys.stderr)
            return EXIT_DATA
        print(f"duality check ok: {got:.6g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# interactions


def cmd_interactions(args) -> int:
    field = _load_field(args.spec)
    E_stack = read_tensor(args.evidence)
    probs = read_tensor(args.probs)
    if E_stack.ndim != 4:
        raise ShapeMismatch(f"evidence must be CxHxWxR, got shape {E_stack.shape}")
    labels = load_labels(args.labels) if args.labels else None
    if labels is not None and len(labels) != E_stack.shape[0]:
        raise ShapeMismatch(f"{len(labels)} labels for {E_stack.shape[0]} classes")

    presence = vote_all_classes(E_stack, field, args.backend, threads=args.threads)
    dets = []
    for c in range(presence.shape[0]):
        for cy, cx, s in extract_peaks(presence[c], args.top_k):
            if s >= args.score_thresh:
                dets.append((s, c, cy, cx))
    dets.sort(key=lambda t: (-t[0], t[1], t[2], t[3]))
    detections = [(c, cy, cx) for _, c, cy, cx in dets[:args.top_k]]

    M = class_interactions(detections, E_stack, probs, field)
    names = labels if labels is not None else [f"class_{c}" for c in range(M.shape[0])]
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["getter\\giver"] + names)
        for c, row in enumerate(M):
            writer.writerow([names[c]] + [repr(float(v)) for v in row])
    print(f"{M.shape[0]}x{M.shape[1]} interaction matrix -> {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench


def _parse_size(text: str):
    parts = [int(p) for p in text.lower().split("x")]
    if len(parts) == 3:
        h, w, r = parts
        c = 1
    elif len(parts) == 4:
        h, w, r, c = parts
    else:
        raise InvalidSpec(f"size must be HxWxR or HxWxRxC, got {text!r}")
    if min(parts) < 1:
        raise InvalidSpec(f"size components must be positive: {text!r}")
    return h, w, r, c


def _count_votes(E_stack, field: VoteField) -> int:
    counts = np.asarray(field.counts, dtype=np.int64)
    nnz = np.count_nonzero(E_stack.reshape(-1, field.R), axis=0)
    return int((counts * nnz).sum())


def cmd_bench(args) -> int:
    field = _load_field(args.spec) if args.spec else build_vote_field(
        VoteFieldSpec(angle_bin_deg=90, ring_diams=(2, 8, 16))
    )
    backends = [b.strip() for b in args.backends.split(",") if b.strip()]
    for b in backends:
        if b not in BACKENDS:
            raise UnknownBackend(f"unknown backend {b!r}; expected one of {BACKENDS}")
    rng = np.random.default_rng(args.seed)

    rows = []
    for size_text in args.sizes:
        h, w, r, c = _parse_size(size_text)
        if r != field.R:
            raise ShapeMismatch(f"size {size_text} has R={r} but the field has R={field.R}")
        E_stack = rng.standard_normal((c, h, w, r)).astype(np.float32)
        votes = _count_votes(E_stack, field)

        # Cross-backend agreement gate before any timing.
        reference = vote_all_classes(E_stack, field, "scatter", threads=1)
        scale = float(np.abs(reference).max()) or 1.0
        for b in backends:
            got = vote_all_classes(E_stack, field, b, threshold=args.sparse_threshold
                                   if b == "sparse" else 0.0, threads=1)
            err = float(np.abs(got - reference).max()) / scale
            if err > 1e-6:
                print(f"backend {b} disagrees with scatter: rel err {err:.3g}", file=sys.stderr)
                return EXIT_DATA

        for b in backends:
            times = []
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                vote_all_classes(E_stack, field, b, threshold=args.sparse_threshold
                                 if b == "sparse" else 0.0, threads=args.threads)
                times.append(time.perf_counter() - t0)
            median = statistics.median(times)
            rows.append({
                "size": size_text,
                "backend": b,
                "median_seconds": f"{median:.6f}",
                "votes_per_second": f"{votes / median:.1f}",
            })

    out = open(args.output, "w", encoding="utf-8", newline="") if args.output else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=["size", "backend", "median_seconds",
                                                 "votes_per_second"])
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.output:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# convert


def cmd_convert(args) -> int:
    arr = read_tensor(args.input)
    if args.remap:
        perm = [int(p) for p in args.remap.split(",")]
        arr = remap_regions(arr, perm)
    if args.dtype:
        arr = arr.astype({"f32": np.float32, "f64": np.float64}[args.dtype])
    write_tensor(arr, args.output)
    print(f"{'x'.join(map(str, arr.shape))} {arr.dtype} -> {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="houghvote",
        description="Log-polar vote-field voting engine: field geometry, voting "
                    "backends, detection decoding, vote attribution, benchmarks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("field", help="inspect a vote-field spec")
    p.add_argument("spec", help="field spec JSON")
    p.add_argument("--map-out", help="write the region-id map as a tensor file")
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("vote", help="aggregate evidence into presence maps")
    p.add_argument("evidence", help="HxWxR or CxHxWxR tensor file")
    p.add_argument("spec", help="field spec JSON")
    p.add_argument("-o", "--output", required=True, help="presence tensor file")
    p.add_argument("--backend", default="scatter", choices=BACKENDS)
    p.add_argument("--sparse-threshold", type=float, default=0.0)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=cmd_vote)

    p = sub.add_parser("decode", help="decode presence maps into detections")
    p.add_argument("presence", help="HxW or CxHxW tensor file")
    p.add_argument("wh", help="HxWx2 width/height tensor file")
    p.add_argument("offset", help="HxWx2 center-offset tensor file")
    p.add_argument("-o", "--output", required=True, help="detections JSONL")
    p.add_argument("--top-k", type=int, default=100)
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--score-thresh", type=float, default=0.0)
    p.add_argument("--coco", help="also write a COCO-results-style JSON array")
    p.add_argument("--image-id", type=int, default=0)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("attribute", help="list the voters behind a map location")
    p.add_argument("evidence", help="HxWxR tensor file")
    p.add_argument("spec", help="field spec JSON")
    p.add_argument("--center", required=True, metavar="CY,CX")
    p.add_argument("-o", "--output", required=True, help="vote records JSON")
    p.add_argument("--heatmap", help="write a jet-colormap PNG of the vote map")
    p.add_argument("--keep-zeros", action="store_true")
    p.add_argument("--verify", action="store_true",
                   help="recompute the presence value and check the vote sum")
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("interactions", help="class-interaction voting matrix")
    p.add_argument("evidence", help="CxHxWxR tensor file")
    p.add_argument("spec", help="field spec JSON")
    p.add_argument("probs", help="CxHxW class-probability tensor file")
    p.add_argument("-o", "--output", required=True, help="CSV matrix")
    p.add_argument("--labels", help="JSON array of class names")
    p.add_argument("--backend", default="scatter", choices=BACKENDS)
    p.add_argument("--top-k", type=int, default=100)
    p.add_argument("--score-thresh", type=float, default=0.0)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=cmd_interactions)

    p = sub.add_parser("bench", help="throughput benchmark across backends")
    p.add_argument("--sizes", nargs="+", default=["64x64x9x8"],
                   metavar="HxWxR[xC]")
    p.add_argument("--backends", default=",".join(BACKENDS))
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spec", help="field spec JSON (default: 90 deg, diameters 2,8,16)")
    p.add_argument("--sparse-threshold", type=float, default=0.0)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("-o", "--output", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("convert", help="tensor dtype conversion and region remapping")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--dtype", choices=["f32", "f64"])
    p.add_argument("--remap", metavar="P0,P1,...",
                   help="region permutation: output channel r = input channel Pr")
    p.set_defaults(func=cmd_convert)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
