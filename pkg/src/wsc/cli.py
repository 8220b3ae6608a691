"""Command-line driver for the offline pipeline and the sidecar service.

    wsc label   --manifest M --embeddings E   write salad/train labels
    wsc fit     --manifest M --hidden H       train the probe
    wsc eval    --model F --manifest M --hidden H
    wsc replay  --model F --manifest M --hidden H [policy flags]
    wsc analyze --manifest M                  corpus stats
    wsc serve   --listen HOST:PORT --model F [policy flags]

Exit codes: 0 success, 2 validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile

import numpy as np

from . import analytics
from .errors import FormatError, WscError
from .labeling import LabelerConfig, label_trace
from .policy import PolicyConfig
from .probe import LabeledDataset, TrainConfig, evaluate, fit, load_model, save_model
from .replay import replay
from .service import serve
from .traces import (
    TraceRecord,
    load_manifest,
    load_vector_table,
    render_manifest_line,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3


def _policy_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--thresh", type=float, default=0.5)
    parser.add_argument("--streak-len", type=int, default=2)
    parser.add_argument("--len-threshold", type=int, default=10)
    parser.add_argument("--short-streak-len", type=int, default=5)
    parser.add_argument("--regen-budget", type=int, default=4096)


def _policy_config(args: argparse.Namespace) -> PolicyConfig:
    return PolicyConfig(
        thresh=args.thresh,
        streak_len=args.streak_len,
        len_threshold=args.len_threshold,
        short_streak_len=args.short_streak_len,
        regen_budget=args.regen_budget,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("label", help="label salad chunks from embeddings")
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--theta", type=float, default=0.99)
    p.add_argument("--window", type=int, default=100)
    p.add_argument("--consecutive", type=int, default=2)
    p.add_argument("--out", default=None, help="output manifest (default: in place)")

    p = sub.add_parser("fit", help="train the linear probe on hidden states")
    p.add_argument("--manifest", required=True)
    p.add_argument("--hidden", required=True)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=8192)
    p.add_argument("--seed", type=int, default=41)
    p.add_argument("--weight-decay", type=float, default=0.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="accuracy/AUROC of a trained probe")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--hidden", required=True)

    p = sub.add_parser("replay", help="re-run the chop policy over recorded traces")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--hidden", required=True)
    _policy_flags(p)

    p = sub.add_parser("analyze", help="salad-token/chunk statistics")
    p.add_argument("--manifest", required=True)
    p.add_argument("--consecutive", type=int, default=2)
    p.add_argument("--csv", default=None, help="also write a per-trace CSV table")

    p = sub.add_parser("serve", help="run the chop-decision sidecar")
    p.add_argument("--listen", required=True, metavar="HOST:PORT")
    p.add_argument("--model", required=True)
    _policy_flags(p)

    return parser


def _resolve_table(manifest_path: str, table_path: str) -> str:
    """Table paths given on the command line win; relative ones resolve as-is."""
    if os.path.exists(table_path):
        return table_path
    sibling = os.path.join(os.path.dirname(os.path.abspath(manifest_path)), table_path)
    return sibling if os.path.exists(sibling) else table_path


def _gather_labeled(
    traces: list[TraceRecord], hidden_path: str
) -> LabeledDataset:
    table = load_vector_table(hidden_path)
    vectors = []
    labels = []
    for trace in traces:
        if trace.hidden_ref is None:
            raise WscError(f"{trace.trace_id}: no hidden_ref")
        rows = table.rows(trace.hidden_ref.first_row, len(trace.chunks))
        for chunk, row in zip(trace.chunks, rows):
            if chunk.train_label is None:
                raise WscError(
                    f"{trace.trace_id}: chunk {chunk.index} has no train_label "
                    "(run `wsc label` first)"
                )
            vectors.append(row)
            labels.append(chunk.train_label)
    if not vectors:
        raise WscError("no labeled chunks in manifest")
    return LabeledDataset(np.asarray(vectors, dtype=np.float64), np.asarray(labels))


def _write_manifest_atomic(path: str, records: list[TraceRecord]) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".manifest.tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(render_manifest_line(record) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cmd_label(args: argparse.Namespace) -> int:
    config = LabelerConfig(
        theta=args.theta, window=args.window, consecutive_required=args.consecutive
    )
    traces = load_manifest(args.manifest)
    table = load_vector_table(_resolve_table(args.manifest, args.embeddings))
    updated = []
    n_salad = n_chunks = 0
    for trace in traces:
        if trace.embed_ref is None:
            raise WscError(f"{trace.trace_id}: no embed_ref")
        rows = table.rows(trace.embed_ref.first_row, len(trace.chunks))
        salad, _, train = label_trace(rows, config)
        chunks = tuple(
            dataclasses.replace(c, salad_label=s, train_label=t)
            for c, s, t in zip(trace.chunks, salad, train)
        )
        updated.append(dataclasses.replace(trace, chunks=chunks))
        n_salad += sum(salad)
        n_chunks += len(salad)
    _write_manifest_atomic(args.out or args.manifest, updated)
    print(f"labeled {n_chunks} chunks in {len(updated)} traces ({n_salad} salad)")
    return EXIT_OK


def _cmd_fit(args: argparse.Namespace) -> int:
    traces = load_manifest(args.manifest)
    dataset = _gather_labeled(traces, _resolve_table(args.manifest, args.hidden))
    config = TrainConfig(
        learning_rate=args.lr,
        weight_decay=args.weight_decay,
        epochs=args.epochs,
        batch_size=args.batch,
        seed=args.seed,
    )
    model = fit(dataset, config)
    save_model(args.out, model)
    print(f"trained dim-{model.dim} probe on {len(dataset)} chunks -> {args.out}")
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    traces = load_manifest(args.manifest)
    dataset = _gather_labeled(traces, _resolve_table(args.manifest, args.hidden))
    report = evaluate(model, dataset)
    auroc_text = "n/a" if report.auroc is None else f"{100 * report.auroc:.2f}"
    print(f"Acc. / AUROC: {100 * report.accuracy:.2f} / {auroc_text}")
    return EXIT_OK


def _cmd_replay(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    config = _policy_config(args)
    traces = load_manifest(args.manifest)
    table = load_vector_table(_resolve_table(args.manifest, args.hidden))
    total_tokens = total_saved = chopped = 0
    for trace in traces:
        report = replay(trace, table, model, config)
        total_tokens += trace.total_tokens
        total_saved += report.tokens_saved
        chopped += int(report.chopped)
        print(
            json.dumps(
                {
                    "trace_id": report.trace_id,
                    "chop_index": report.chop_index,
                    "tokens_saved": report.tokens_saved,
                    "regen_budget": report.regen_budget,
                    "probabilities": [round(p, 6) for p in report.probabilities],
                }
            )
        )
    savings = analytics.length_savings(total_tokens, total_tokens - total_saved)
    print(
        f"# chopped {chopped}/{len(traces)} traces, saved {total_saved} of "
        f"{total_tokens} tokens ({savings:.2f}%) before regeneration",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:
    traces = load_manifest(args.manifest)
    stats = analytics.chunk_label_stats(traces, consecutive_required=args.consecutive)
    print(json.dumps(analytics.corpus_report(stats), indent=2))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(analytics.corpus_csv(stats))
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    host, _, port_text = args.listen.rpartition(":")
    if not host or not port_text.isdigit():
        raise WscError(f"--listen expects HOST:PORT, got {args.listen!r}")
    model = load_model(args.model)
    config = _policy_config(args)
    print(f"serving dim-{model.dim} probe on {host}:{port_text}", file=sys.stderr)
    serve(host, int(port_text), model, config)
    return EXIT_OK


_COMMANDS = {
    "label": _cmd_label,
    "fit": _cmd_fit,
    "eval": _cmd_eval,
    "replay": _cmd_replay,
    "analyze": _cmd_analyze,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (WscError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
