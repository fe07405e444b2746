"""Command-line entry points: embed, eval, ablate, synth."""
from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DynEmbedError, MissingArtifact
from .evaluate import (DEFAULT_KS, MetricRecord, auc, build_lp_testset, diagnostic_partition,
                       inactive_subnetworks, precision_at_ks)
from .ingest import (LabelInterner, SnapshotSpec, build_snapshots, load_snapshot_list,
                     read_edge_stream, read_embeddings, write_embeddings)
from .pipeline import Mode, PipelineConfig, run
from .select import Strategy
from .synthetic import planted_partition

MANIFEST = "manifest.json"
LABELS = "labels.txt"
TIMING = "timing.jsonl"


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def load_dataset(dataset: str, fmt: str, cutoffs: str | None,
                 interner: LabelInterner | None = None):
    """Snapshots and label interner for a stream file or snapshot directory.

    ``cutoffs`` is a comma list of timestamps or ``every:DAYS``.
    """
    interner = interner if interner is not None else LabelInterner()
    if fmt == "snapshots":
        if not os.path.isdir(dataset):
            raise MissingArtifact(f"snapshot directory {dataset} not found")
        return load_snapshot_list(dataset, interner), interner
    if not os.path.isfile(dataset):
        raise MissingArtifact(f"edge stream {dataset} not found")
    if not cutoffs:
        raise ValueError("--cutoffs is required for --format stream")
    events = read_edge_stream(dataset)
    if cutoffs.startswith("every:"):
        spec = SnapshotSpec.every(events, float(cutoffs.split(":", 1)[1]))
    else:
        spec = SnapshotSpec(tuple(_int_list(cutoffs)))
    return build_snapshots(events, spec, interner), interner


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    d = PipelineConfig()
    p.add_argument("--alpha", type=float, default=d.alpha, help="share of nodes selected per step")
    p.add_argument("--epsilon", type=float, default=d.epsilon, help="partition imbalance")
    p.add_argument("--walks", type=int, default=d.walks_per_node, help="walks per selected node")
    p.add_argument("--walk-len", type=int, default=d.walk_length)
    p.add_argument("--window", type=int, default=d.window)
    p.add_argument("--negatives", type=int, default=d.negatives)
    p.add_argument("--dim", type=int, default=d.dim)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=d.mode.value)
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default=d.strategy.value)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--threads", type=int, default=d.threads,
                   help="worker threads; >1 makes training non-deterministic")


def _add_dataset_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--dataset", required=required, help="edge-stream file or snapshot directory")
    p.add_argument("--format", choices=["stream", "snapshots"], default="snapshots")
    p.add_argument("--cutoffs", help="comma-separated timestamps or every:DAYS (stream format)")


def _config_from_args(args) -> PipelineConfig:
    return PipelineConfig(alpha=args.alpha, walks_per_node=args.walks, walk_length=args.walk_len,
                          window=args.window, negatives=args.negatives, dim=args.dim,
                          epsilon=args.epsilon, mode=args.mode, strategy=args.strategy,
                          seed=args.seed, threads=args.threads)


def _write_jsonl(path, rows) -> None:
    with open(path, "w") as fh:
        for r in rows:
            fh.write((r if isinstance(r, str) else json.dumps(r)) + "\n")


def embed(dataset, fmt, cutoffs, config: PipelineConfig, out) -> dict:
    """Run the pipeline and write embeddings, timing log and manifest; returns the manifest."""
    snapshots, interner = load_dataset(dataset, fmt, cutoffs)
    out = Path(out)
    (out / "embeddings").mkdir(parents=True, exist_ok=True)
    state = run(snapshots, config)
    steps = []
    for s in snapshots:
        rel = f"embeddings/step_{s.t:03d}.emb"
        write_embeddings(out / rel, state.outputs[s.t], interner)
        steps.append({"step": s.t, "embeddings": rel, "num_nodes": s.num_nodes,
                      "num_selected": int(len(state.selected[s.t]))})
    interner.save(out / LABELS)
    _write_jsonl(out / TIMING, [t.to_dict() for t in state.timings])
    manifest = {
        "version": __version__,
        "dataset": os.path.abspath(dataset),
        "format": fmt,
        "cutoffs": cutoffs,
        "seed": config.seed,
        "mode": config.mode.value,
        "config": config.to_dict(),
        "out": os.path.abspath(out),
        "labels": LABELS,
        "timing": TIMING,
        "steps": steps,
    }
    with open(out / MANIFEST, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest


def cmd_embed(args) -> int:
    if args.manifest:
        with open(args.manifest) as fh:
            m = json.load(fh)
        dataset, fmt, cutoffs = m["dataset"], m["format"], m["cutoffs"]
        config = PipelineConfig.from_dict(m["config"])
    else:
        if not args.dataset:
            raise ValueError("--dataset or --manifest is required")
        dataset, fmt, cutoffs = args.dataset, args.format, args.cutoffs
        config = _config_from_args(args)
    m = embed(dataset, fmt, cutoffs, config, args.out)
    total = sum(s["num_selected"] for s in m["steps"])
    print(f"wrote {len(m['steps'])} steps to {args.out} ({total} walk start nodes in total)")
    return 0


def evaluate_run(emb_dir, task: str, ks=DEFAULT_KS, dataset=None, fmt=None, cutoffs=None,
                 seed: int = 0, window_steps: int = 5) -> list[MetricRecord]:
    """Metric records for an ``embed`` output directory.

    Per-step records carry the step; the run aggregate over steps has
    ``step = None``.
    """
    emb_dir = Path(emb_dir)
    mpath = emb_dir / MANIFEST
    if not mpath.is_file():
        raise MissingArtifact(f"{mpath} not found")
    with open(mpath) as fh:
        m = json.load(fh)
    lpath = emb_dir / m["labels"]
    if not lpath.is_file():
        raise MissingArtifact(f"{lpath} not found")
    interner = LabelInterner.load(lpath)
    snapshots, _ = load_dataset(dataset or m["dataset"], fmt or m["format"],
                                cutoffs if cutoffs is not None else m["cutoffs"], interner)

    def emb(t):
        path = emb_dir / f"embeddings/step_{t:03d}.emb"
        if not path.is_file():
            raise MissingArtifact(f"{path} not found")
        return read_embeddings(path, interner)

    records = []
    if task == "gr":
        per_k = {k: [] for k in ks}
        for s in snapshots:
            for k, v in precision_at_ks(emb(s.t), s, ks).items():
                records.append(MetricRecord(s.t, "mean_p_at_k", k, v, seed))
                per_k[k].append(v)
        records += [MetricRecord(None, "mean_p_at_k", k, float(np.mean(v)), seed)
                    for k, v in per_k.items()]
    elif task == "lp":
        vals = []
        for a, b in zip(snapshots, snapshots[1:]):
            ts = build_lp_testset(a, b, emb(a.t), seed=seed)
            vals.append(auc(emb(a.t), ts))
            records.append(MetricRecord(a.t, "auc", None, vals[-1], seed))
        if vals:
            records.append(MetricRecord(None, "auc", None, float(np.mean(vals)), seed))
    elif task == "inactive":
        assignment = diagnostic_partition(snapshots, seed=seed)
        frac = inactive_subnetworks(snapshots, assignment, window_steps)
        records.append(MetricRecord(None, "inactive_fraction", window_steps, frac, seed))
    else:
        raise ValueError(f"unknown task {task}")
    return records


def cmd_eval(args) -> int:
    records = evaluate_run(args.embeddings, args.task, args.k, args.dataset, args.format,
                           args.cutoffs, args.seed, args.window_steps)
    lines = [r.to_json() for r in records]
    if args.out:
        _write_jsonl(args.out, lines)
    for line in lines:
        print(line)
    return 0


def render_table(records: list[dict], keys: list[str]) -> str:
    """Mean ± std of ``value`` and mean ``seconds`` per cell, grouped by ``keys``."""
    cells: dict[tuple, list[dict]] = {}
    for r in records:
        cells.setdefault(tuple(r[k] for k in keys), []).append(r)
    header = keys + ["metric", "mean", "std", "seconds", "n"]
    rows = []
    for cell, rs in cells.items():
        v = np.array([r["value"] for r in rs])
        secs = np.mean([r["seconds"] for r in rs])
        rows.append([str(c) for c in cell] + [rs[0]["metric"], f"{v.mean():.4f}",
                                              f"{v.std():.4f}", f"{secs:.2f}", str(len(rs))])
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return "\n".join([fmt.format(*header)] + [fmt.format(*r) for r in rows])


def ablate(snapshots, base: PipelineConfig, strategies, alphas, walk_lens, seeds: int, k: int):
    """Cartesian sweep; one record per (cell, seed) with MeanP@k averaged over steps."""
    records = []
    for strategy, alpha, length in itertools.product(strategies, alphas, walk_lens):
        for rep in range(seeds):
            d = base.to_dict()
            d.update(strategy=strategy, alpha=alpha, walk_length=length,
                     window=min(base.window, length - 1), seed=base.seed + rep)
            cfg = PipelineConfig.from_dict(d)
            t0 = time.perf_counter()
            state = run(snapshots, cfg)
            secs = time.perf_counter() - t0
            vals = [precision_at_ks(state.outputs[s.t], s, [k])[k] for s in snapshots]
            records.append({"strategy": strategy, "alpha": alpha, "walk_len": length,
                            "seed": cfg.seed, "metric": f"mean_p_at_{k}",
                            "value": float(np.mean(vals)), "seconds": secs})
    return records


def cmd_ablate(args) -> int:
    snapshots, _ = load_dataset(args.dataset, args.format, args.cutoffs)
    records = ablate(snapshots, _config_from_args(args), args.strategies,
                     args.alphas or [args.alpha], args.walk_lens or [args.walk_len],
                     args.seeds, args.k)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        _write_jsonl(args.out, records)
    print(render_table(records, ["strategy", "alpha", "walk_len"]))
    return 0


def cmd_synth(args) -> int:
    snaps = planted_partition(n=args.nodes, communities=args.communities,
                              avg_degree=args.avg_degree, steps=args.steps, churn=args.churn,
                              inactive_communities=args.inactive, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for s in snaps:
        with open(out / f"t{s.t:03d}.txt", "w") as fh:
            for u, v in s.edges().tolist():
                fh.write(f"{u} {v}\n")
    print(f"wrote {len(snaps)} snapshots to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynembed",
                                     description="Dynamic network embedding by diverse node selection.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed every snapshot of a dynamic network")
    _add_dataset_flags(p, required=False)
    _add_pipeline_flags(p)
    p.add_argument("--manifest", help="rerun the configuration recorded in a manifest.json")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("eval", help="score embeddings written by embed")
    p.add_argument("--embeddings", required=True, help="output directory of embed")
    p.add_argument("--dataset", help="defaults to the dataset in the manifest")
    p.add_argument("--format", choices=["stream", "snapshots"])
    p.add_argument("--cutoffs")
    p.add_argument("--task", choices=["gr", "lp", "inactive"], default="gr")
    p.add_argument("--k", type=_int_list, default=list(DEFAULT_KS), help="comma-separated k values")
    p.add_argument("--window-steps", type=int, default=5, help="window for the inactive task")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write records to this JSONL file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="sweep strategies, alphas and walk lengths")
    _add_dataset_flags(p)
    _add_pipeline_flags(p)
    p.add_argument("--strategies", type=_str_list, default=["S1", "S2", "S3", "S4"])
    p.add_argument("--alphas", type=_float_list, help="defaults to --alpha")
    p.add_argument("--walk-lens", type=_int_list, help="defaults to --walk-len")
    p.add_argument("--seeds", type=int, default=3, help="repetitions per cell")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", help="write per-run records to this JSONL file")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="write a drifting planted-partition snapshot directory")
    p.add_argument("--out", required=True)
    p.add_argument("--nodes", type=int, default=300)
    p.add_argument("--communities", type=int, default=10)
    p.add_argument("--avg-degree", type=float, default=10.0)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--churn", type=float, default=0.05)
    p.add_argument("--inactive", type=int, default=0, help="number of frozen communities")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DynEmbedError, ValueError, OSError) as exc:
        print(f"dynembed: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
