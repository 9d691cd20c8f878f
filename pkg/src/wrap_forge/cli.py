"""Command-line pipeline: rephrase, filter, mix, metrics, eval, cost.

Every flag can also be set through an environment variable named
``WRAP_FORGE_<FLAG>`` (dashes to underscores, uppercase). Each run writes a
manifest JSON next to its outputs listing inputs, outputs, counts, and a
digest of the resolved configuration so reruns are detectable. Exit codes:
0 success, 1 runtime failure (single ``error: ...`` line on stderr),
2 usage error.

Ctrl-C during generation stops submitting new requests, lets in-flight
requests drain, flushes what completed to a ``.partial`` shard, and writes
a checkpoint of fully completed parent document ids for resumption.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import os
import signal
import sys
import threading
import time
from pathlib import Path
from statistics import median
from typing import Iterable, Optional, Sequence

from . import __version__
from .corpus_io import Document, chunk_document, load_shards, write_shard
from .cost_model import breakeven_report, get_preset, load_presets
from .mixer import MixSpec, build_mix, load_mix_config, validate_mix
from .mock_server import MockEndpoint
from .output_filter import (
    SyntheticRecord,
    filter_corpus,
    load_lexicon,
    synthetic_to_document,
)
from .perplexity_harness import (
    load_loss_records,
    normalize_weights,
    perplexity_report,
    resolve_weight_table,
)
from .plotting import plot_cost, plot_distributions, plot_perplexity
from .quality_metrics import (
    DistributionSummary,
    PairingStrategy,
    flesch_kincaid_grade,
    make_pairs,
    mean_dependency_distance,
    pairwise_cosines,
    parse_conllu,
    summarize_distribution,
    tree_depth,
    type_token_ratio,
)
from .rephrase_client import (
    CHUNK_TOKEN_BUDGET,
    FailureRecord,
    RawRephrase,
    document_to_raw,
    raw_to_document,
    rephrase_stream,
    throughput,
)
from .sampledata import bundled_path, generate_documents
from .style_prompts import PromptTemplate, load_template_file, parse_style, builtin_template
from .wire import EndpointConfig

ENV_PREFIX = "WRAP_FORGE_"
_PROGRESS_EVERY = 50

logger = logging.getLogger("wrap_forge")


# -- argument plumbing -------------------------------------------------------


def _env_key(flag: str) -> str:
    return ENV_PREFIX + flag.lstrip("-").upper().replace("-", "_")


def _arg(parser: argparse.ArgumentParser, *names: str, required: bool = False, **kw):
    """add_argument with an environment-variable default."""
    env_val = os.environ.get(_env_key(names[0]))
    if env_val is not None:
        if kw.get("action") in ("store_true", "store_false"):
            kw["default"] = env_val.lower() in ("1", "true", "yes", "on")
        elif kw.get("action") == "count":
            kw["default"] = int(env_val)
        elif kw.get("nargs") in ("+", "*"):
            conv = kw.get("type", str)
            kw["default"] = [conv(v) for v in env_val.split()]
        else:
            kw["default"] = env_val  # argparse applies type= to string defaults
        required = False
    parser.add_argument(*names, required=required, **kw)


def _add_common(parser: argparse.ArgumentParser) -> None:
    _arg(parser, "--verbose", "-v", action="count", default=0,
         help="increase log verbosity (repeatable)")


def _add_endpoint_args(parser: argparse.ArgumentParser) -> None:
    _arg(parser, "--endpoint", default="mock",
         help="endpoint base URL, or 'mock' / 'mock:<mode>' for a built-in server")
    _arg(parser, "--model", default="mock-model", help="model id sent to the endpoint")
    _arg(parser, "--max-new-tokens", type=int, default=512)
    _arg(parser, "--temperature", type=float, default=0.7)
    _arg(parser, "--timeout", type=float, default=30.0)
    _arg(parser, "--max-in-flight", type=int, default=8)
    _arg(parser, "--max-retries", type=int, default=3)
    _arg(parser, "--retry-backoff", type=float, default=0.5)


def _resolve_endpoint(args, stack: contextlib.ExitStack) -> tuple[EndpointConfig, Optional[MockEndpoint]]:
    """Endpoint config from flags; spins up an internal mock when asked to."""
    mock = None
    base_url = args.endpoint
    if base_url == "mock" or base_url.startswith("mock:"):
        _, _, mode = base_url.partition(":")
        mock = MockEndpoint(mode or "echo").start()
        stack.callback(mock.stop)
        base_url = mock.base_url
    cfg = EndpointConfig(
        base_url=base_url,
        model_id=args.model,
        max_new_tokens=args.max_new_tokens,
        temperature=args.temperature,
        timeout=args.timeout,
        max_in_flight=args.max_in_flight,
        max_retries=args.max_retries,
        retry_backoff=args.retry_backoff,
    )
    return cfg, mock


def _resolve_style(spec: str) -> PromptTemplate:
    if spec.startswith("file:"):
        return load_template_file(spec[len("file:"):])
    return builtin_template(parse_style(spec))


def _require_inputs(paths: Iterable[str]) -> list[str]:
    missing = [p for p in paths if not Path(p).exists()]
    if missing:
        raise FileNotFoundError(f"input paths not found: {missing}")
    return list(paths)


# -- manifests ----------------------------------------------------------------


def _config_digest(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _write_json(path: Path, payload: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_manifest(
    path: Path,
    subcommand: str,
    config: dict,
    inputs: Sequence[str],
    outputs: Sequence[str],
    counts: dict,
    started: float,
    stats: Optional[dict] = None,
) -> Path:
    payload = {
        "subcommand": subcommand,
        "version": __version__,
        "config": config,
        "config_digest": _config_digest(config),
        "started_at": started,
        "finished_at": time.time(),
        "inputs": sorted(inputs),
        "outputs": sorted(outputs),
        "counts": counts,
    }
    if stats is not None:
        payload["stats"] = stats
    return _write_json(path, payload)


# -- generation core (shared by rephrase and end-to-end) -----------------------


@contextlib.contextmanager
def _sigint_event():
    event = threading.Event()
    try:
        old = signal.signal(signal.SIGINT, lambda signum, frame: event.set())
    except ValueError:  # not in the main thread (library use); no handler
        yield event
        return
    try:
        yield event
    finally:
        signal.signal(signal.SIGINT, old)


def _generate(
    docs: Iterable[Document],
    template: PromptTemplate,
    cfg: EndpointConfig,
    interrupt: threading.Event,
    max_chunk_tokens: int = CHUNK_TOKEN_BUDGET,
    merge_system: bool = False,
    skip_parents: Optional[set[str]] = None,
):
    """Chunk, rephrase, and drain; returns records plus completion bookkeeping."""
    skip = skip_parents or set()
    expected: dict[str, int] = {}
    received: dict[str, int] = {}
    fully_fed: set[str] = set()
    state = {"stopped": False, "docs": 0, "chunks": 0}

    def feeder():
        for doc in docs:
            if doc.id in skip:
                continue
            chunks = chunk_document(doc, max_tokens=max_chunk_tokens)
            if not chunks:
                continue
            state["docs"] += 1
            expected[doc.id] = len(chunks)
            for chunk in chunks:
                if interrupt.is_set():
                    state["stopped"] = True
                    return
                state["chunks"] += 1
                yield chunk
            fully_fed.add(doc.id)

    stream, log = rephrase_stream(feeder(), template, cfg, merge_system=merge_system)
    rephrased: list[RawRephrase] = []
    failures: list[FailureRecord] = []
    for record in stream:
        received[record.parent_id] = received.get(record.parent_id, 0) + 1
        if isinstance(record, RawRephrase):
            rephrased.append(record)
        else:
            failures.append(record)
        done = len(rephrased) + len(failures)
        if done % _PROGRESS_EVERY == 0:
            elapsed = max(time.time() - log.started_at, 1e-9)
            rate = log.completion_tokens_total / (elapsed / 3600.0)
            logger.info("progress: done=%d failed=%d tokens/hour=%.3g",
                        done, len(failures), rate)
    completed = {p for p in fully_fed if received.get(p, 0) == expected[p]}
    rephrased.sort(key=lambda r: (r.parent_id, r.chunk_index))
    failures.sort(key=lambda r: (r.parent_id, r.chunk_index))
    return rephrased, failures, log, completed, state


def _failure_dict(rec: FailureRecord) -> dict:
    return {
        "parent_id": rec.parent_id,
        "chunk_index": rec.chunk_index,
        "style": rec.style.value if rec.style else "custom",
        "error": rec.error,
        "status": rec.status,
    }


def _write_failures(failures: Sequence[FailureRecord], path: Path) -> Optional[Path]:
    if not failures:
        return None
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for rec in failures:
            fh.write(json.dumps(_failure_dict(rec), sort_keys=True) + "\n")
    return path


# -- subcommands ----------------------------------------------------------------


def run_rephrase(args) -> int:
    inputs = _require_inputs(args.inputs)
    template = _resolve_style(args.style)
    started = time.time()
    out = Path(args.out)
    checkpoint_path = Path(args.checkpoint) if args.checkpoint else Path(f"{out}.checkpoint.json")
    skip: set[str] = set()
    if checkpoint_path.exists():
        payload = json.loads(checkpoint_path.read_text(encoding="utf-8"))
        skip = set(payload.get("completed_parent_ids", []))
        logger.info("resuming: skipping %d completed parents", len(skip))

    with contextlib.ExitStack() as stack:
        cfg, mock = _resolve_endpoint(args, stack)
        with _sigint_event() as interrupt:
            rephrased, failures, log, completed, state = _generate(
                load_shards(inputs),
                template,
                cfg,
                interrupt,
                max_chunk_tokens=args.max_chunk_tokens,
                merge_system=args.merge_system,
                skip_parents=skip,
            )
        stats = dict(mock.stats) if mock else None

    docs = [raw_to_document(r) for r in rephrased]
    config = {
        "subcommand": "rephrase",
        "style": args.style,
        "prompt_version": template.version,
        "endpoint": args.endpoint,
        "model": args.model,
        "max_new_tokens": args.max_new_tokens,
        "temperature": args.temperature,
        "max_in_flight": args.max_in_flight,
        "max_chunk_tokens": args.max_chunk_tokens,
        "merge_system": args.merge_system,
        "inputs": sorted(inputs),
    }
    counts = {
        "documents": state["docs"],
        "chunks": state["chunks"],
        "rephrased": len(rephrased),
        "failures": len(failures),
        "completion_tokens": log.completion_tokens_total,
        "tokens_per_hour": throughput(log) if log.finished_at > log.started_at else 0.0,
    }

    if state["stopped"]:
        outputs = [m.path for m in write_shard(docs, f"{out}.partial")]
        failure_path = _write_failures(failures, Path(f"{out}.partial.failures.jsonl"))
        if failure_path:
            outputs.append(str(failure_path))
        _write_json(checkpoint_path, {"completed_parent_ids": sorted(skip | completed)})
        outputs.append(str(checkpoint_path))
        _write_manifest(Path(f"{out}.manifest.json"), "rephrase", config,
                        inputs, outputs, counts, started, stats)
        raise RuntimeError(
            f"interrupted; partial output under {out}.partial*, checkpoint {checkpoint_path}"
        )

    outputs = [m.path for m in write_shard(docs, out)]
    failure_path = _write_failures(failures, Path(f"{out}.failures.jsonl"))
    if failure_path:
        outputs.append(str(failure_path))
    manifest = _write_manifest(Path(f"{out}.manifest.json"), "rephrase", config,
                               inputs, outputs, counts, started, stats)
    print(f"rephrase: {len(rephrased)} ok, {len(failures)} failed; manifest {manifest}")
    return 0


def run_filter(args) -> int:
    inputs = _require_inputs(args.inputs)
    started = time.time()
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    raw = (document_to_raw(doc) for doc in load_shards(inputs))
    kept, report = filter_corpus(raw, lexicon)
    docs = [synthetic_to_document(rec) for rec in kept]
    out = Path(args.out)
    outputs = [m.path for m in write_shard(docs, out)]
    report_path = Path(args.report) if args.report else Path(f"{out}.filter_report.json")
    payload = {
        "unchanged": report.unchanged,
        "modified": report.modified,
        "dropped": report.dropped,
        "dropped_by_reason": report.dropped_by_reason,
        "total": report.total,
    }
    _write_json(report_path, payload)
    outputs.append(str(report_path))
    config = {
        "subcommand": "filter",
        "inputs": sorted(inputs),
        "lexicon": args.lexicon or "builtin",
    }
    manifest = _write_manifest(Path(f"{out}.manifest.json"), "filter", config,
                               inputs, outputs, payload, started)
    print(f"filter: kept {report.unchanged + report.modified} "
          f"(modified {report.modified}), dropped {report.dropped}; manifest {manifest}")
    return 0


def run_mix(args) -> int:
    _require_inputs([args.spec])
    started = time.time()
    spec, sources, policy, window = load_mix_config(args.spec)
    out_dir = Path(args.out)
    stream, report = build_mix(spec, sources, policy, window)
    manifests = write_shard(stream, out_dir / "mixed")
    shard_paths = [m.path for m in manifests]
    validate_mix(shard_paths, spec, policy, expect=report)

    report_path = Path(args.report) if args.report else out_dir / "mix_report.json"
    payload = {
        "unit": report.unit,
        "policy": report.policy,
        "seed": report.seed,
        "weights": report.weights,
        "docs": report.docs,
        "tokens": report.tokens,
        "real_token_total": report.real_token_total,
        "blocks": report.blocks,
        "realized_ratio": report.realized_ratio(),
        "validated": True,
    }
    _write_json(report_path, payload)
    outputs = shard_paths + [str(report_path)]
    inputs = [args.spec] + sorted(p for paths in sources.values() for p in paths)
    config = {
        "subcommand": "mix",
        "spec": args.spec,
        "policy": policy,
        "seed": spec.seed,
        "unit": spec.unit,
        "weights": report.weights,
        "shuffle_window": window,
    }
    manifest = _write_manifest(out_dir / "mix_manifest.json", "mix", config,
                               inputs, outputs, {"docs": report.docs,
                                                 "blocks": report.blocks,
                                                 "real_token_total": report.real_token_total},
                               started)
    print(f"mix: {report.total_docs()} docs in {report.blocks} blocks, "
          f"validated; manifest {manifest}")
    return 0


def _summary_json(summary: DistributionSummary) -> dict:
    return {
        "n_raw": summary.n_raw,
        "n_kept": summary.n_kept,
        "mean": summary.mean,
        "std": summary.std,
        "bandwidth": summary.bandwidth,
        "point_mass": summary.point_mass,
        "kde_integral": summary.kde_integral(),
        "kde_grid": [[x, y] for x, y in summary.kde_grid],
    }


def _metric_values(docs: Sequence[Document], fn) -> tuple[list[float], int]:
    values, skipped = [], 0
    for doc in docs:
        try:
            values.append(fn(doc.text))
        except ValueError:
            skipped += 1
    return values, skipped


def _slice_summaries(
    slices: dict[str, Sequence[Document]], fn
) -> tuple[dict[str, DistributionSummary], dict[str, dict]]:
    summaries: dict[str, DistributionSummary] = {}
    section: dict[str, dict] = {}
    for name, docs in slices.items():
        values, skipped = _metric_values(docs, fn)
        if len(values) < 2:
            section[name] = {"error": "insufficient values", "n_values": len(values)}
            continue
        summary = summarize_distribution(values)
        summaries[name] = summary
        entry = _summary_json(summary)
        entry["median"] = median(values)
        entry["skipped"] = skipped
        section[name] = entry
    return summaries, section


def run_metrics(args) -> int:
    inputs = _require_inputs(list(args.real) + list(args.synthetic))
    if args.parses:
        _require_inputs([args.parses])
    started = time.time()
    real_docs = list(load_shards(args.real))
    synthetic_docs = list(load_shards(args.synthetic))
    slices = {"real": real_docs, "synthetic": synthetic_docs}
    report_path = Path(args.report)
    outputs = [str(report_path)]
    report: dict = {"slices": {name: len(docs) for name, docs in slices.items()}}

    fk_summaries, report["readability_fk"] = _slice_summaries(slices, flesch_kincaid_grade)
    ttr_summaries, report["diversity_ttr"] = _slice_summaries(slices, type_token_ratio)
    figures = []
    if fk_summaries:
        figures.append(plot_distributions(
            fk_summaries, "readability (flesch-kincaid grade)",
            report_path.with_name(report_path.stem + "_readability.png")))
    if ttr_summaries:
        figures.append(plot_distributions(
            ttr_summaries, "diversity (type-token ratio)",
            report_path.with_name(report_path.stem + "_diversity.png")))

    if args.parses:
        depth_summaries: dict[str, DistributionSummary] = {}
        mdd_summaries: dict[str, DistributionSummary] = {}
        section: dict[str, dict] = {}
        for conllu_path in sorted(Path(args.parses).glob("*.conllu")):
            errors: list[str] = []
            sentences = parse_conllu(conllu_path.read_text(encoding="utf-8"), errors=errors)
            depths = [float(tree_depth(s)) for s in sentences]
            mdds, skipped = [], 0
            for s in sentences:
                if len(s) > 1:
                    mdds.append(mean_dependency_distance(s))
                else:
                    skipped += 1
            entry: dict = {"sentences": len(sentences), "parse_errors": len(errors),
                           "single_token_skipped": skipped}
            if len(depths) >= 2:
                depth_summaries[conllu_path.stem] = summarize_distribution(depths)
                entry["tree_depth"] = _summary_json(depth_summaries[conllu_path.stem])
            if len(mdds) >= 2:
                mdd_summaries[conllu_path.stem] = summarize_distribution(mdds)
                entry["mdd"] = _summary_json(mdd_summaries[conllu_path.stem])
            section[conllu_path.stem] = entry
            inputs.append(str(conllu_path))
        report["syntactic"] = section
        if depth_summaries:
            figures.append(plot_distributions(
                depth_summaries, "tree depth",
                report_path.with_name(report_path.stem + "_depth.png")))
        if mdd_summaries:
            figures.append(plot_distributions(
                mdd_summaries, "mean dependency distance",
                report_path.with_name(report_path.stem + "_mdd.png")))

    if args.endpoint:
        with contextlib.ExitStack() as stack:
            cfg, _mock = _resolve_endpoint(args, stack)
            synthetic_records = [
                SyntheticRecord(
                    parent_id=d.meta.get("parent_id", ""),
                    chunk_index=int(d.meta.get("chunk_index", "0")),
                    style=None,
                    text=d.text,
                    model_id=d.meta.get("model_id", ""),
                    prompt_version=d.meta.get("prompt_version", ""),
                    filter_status=d.meta.get("filter_status", "unchanged"),
                )
                for d in synthetic_docs
            ]
            cosine_summaries: dict[str, DistributionSummary] = {}
            section = {}
            for strategy in PairingStrategy:
                synthetic = synthetic_records if strategy is PairingStrategy.SYNTH_REAL else None
                try:
                    pairs, pairing = make_pairs(
                        real_docs, strategy, seed=args.seed, synthetic=synthetic)
                except ValueError as exc:
                    section[strategy.value] = {"error": str(exc)}
                    continue
                sims = pairwise_cosines(pairs, cfg)
                entry = {"pairs": pairing.made, "skipped": len(pairing.skipped)}
                if len(sims) >= 2:
                    cosine_summaries[strategy.value] = summarize_distribution(sims)
                    entry.update(_summary_json(cosine_summaries[strategy.value]))
                section[strategy.value] = entry
            report["semantic_cosine"] = section
        if cosine_summaries:
            figures.append(plot_distributions(
                cosine_summaries, "pairwise cosine similarity",
                report_path.with_name(report_path.stem + "_semantic.png")))

    _write_json(report_path, report)
    outputs.extend(str(f) for f in figures)
    config = {
        "subcommand": "metrics",
        "real": sorted(args.real),
        "synthetic": sorted(args.synthetic),
        "parses": args.parses,
        "endpoint": args.endpoint,
        "seed": args.seed,
    }
    counts = {"real_docs": len(real_docs), "synthetic_docs": len(synthetic_docs),
              "figures": len(figures)}
    manifest = _write_manifest(report_path.with_name(report_path.stem + ".manifest.json"),
                               "metrics", config, inputs, outputs, counts, started)
    print(f"metrics: report {report_path} with {len(figures)} figures; manifest {manifest}")
    return 0


def run_eval(args) -> int:
    started = time.time()
    if args.losses.startswith("builtin:demo"):
        with bundled_path("demo_losses.jsonl") as path:
            records = load_loss_records(path)
        loss_input = "builtin:demo"
    else:
        _require_inputs([args.losses])
        records = load_loss_records(args.losses)
        loss_input = args.losses
    table = resolve_weight_table(args.weights)
    normalized = normalize_weights(table, include=[r.domain for r in records])
    report = perplexity_report(records, normalized)

    report_path = Path(args.report)
    _write_json(report_path, report.to_json_dict())
    text_path = report_path.with_suffix(".txt")
    text_path.parent.mkdir(parents=True, exist_ok=True)
    text_path.write_text(report.to_text(), encoding="utf-8")
    figure = plot_perplexity(report, report_path.with_suffix(".png"))
    outputs = [str(report_path), str(text_path), str(figure)]
    config = {
        "subcommand": "eval",
        "losses": loss_input,
        "weights": args.weights,
    }
    counts = {"domains": len(report.rows), "weighted_average": report.weighted_average}
    manifest = _write_manifest(report_path.with_name(report_path.stem + ".manifest.json"),
                               "eval", config,
                               [loss_input, args.weights], outputs, counts, started)
    print(report.to_text(), end="")
    print(f"eval: report {report_path}; manifest {manifest}")
    return 0


def run_cost(args) -> int:
    started = time.time()
    if args.presets_file:
        _require_inputs([args.presets_file])
        presets = load_presets(args.presets_file)
        if args.preset not in presets:
            raise ValueError(f"preset {args.preset!r} not in {args.presets_file}")
        preset = presets[args.preset]
    else:
        preset = get_preset(args.preset)
    report = breakeven_report(args.gen_tokens, args.train_tokens, preset)
    print(report.to_text(), end="")

    report_path = Path(args.report)
    _write_json(report_path, report.to_json_dict())
    text_path = report_path.with_suffix(".txt")
    text_path.write_text(report.to_text(), encoding="utf-8")
    figure = plot_cost(report, report_path.with_suffix(".png"))
    outputs = [str(report_path), str(text_path), str(figure)]
    config = {
        "subcommand": "cost",
        "preset": args.preset,
        "gen_tokens": args.gen_tokens,
        "train_tokens": args.train_tokens,
    }
    counts = {
        "generation_gpu_hours": report.generation_hours,
        "training_gpu_hours": report.training_hours,
        "ratio": report.ratio,
    }
    manifest = _write_manifest(report_path.with_name(report_path.stem + ".manifest.json"),
                               "cost", config, [], outputs, counts, started)
    print(f"cost: report {report_path}; manifest {manifest}")
    return 0


def run_mock_server(args) -> int:
    fixtures = args.fixtures
    server = MockEndpoint(
        args.mode,
        port=args.port,
        fixtures=fixtures,
        embed_dim=args.embed_dim,
        embedding_mode=args.embedding_mode,
    )
    try:
        server.start()
        print(f"mock server ({args.mode}) listening on {server.base_url}", flush=True)
        while True:
            time.sleep(0.2)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def run_end_to_end(args) -> int:
    started = time.time()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    template = _resolve_style(args.style)
    inputs: list[str] = []
    outputs: list[str] = []
    counts: dict = {}

    real_docs = generate_documents(args.docs, seed=args.seed)
    real_manifests = write_shard(real_docs, out_dir / "real")
    real_paths = [m.path for m in real_manifests]
    outputs.extend(real_paths)
    counts["real_docs"] = len(real_docs)

    with contextlib.ExitStack() as stack:
        cfg, mock = _resolve_endpoint(args, stack)
        with _sigint_event() as interrupt:
            rephrased, failures, log, completed, state = _generate(
                real_docs, template, cfg, interrupt,
                max_chunk_tokens=args.max_chunk_tokens,
            )
        if state["stopped"]:
            raw_docs = [raw_to_document(r) for r in rephrased]
            partial = write_shard(raw_docs, out_dir / "raw.partial")
            _write_json(out_dir / "raw.checkpoint.json",
                        {"completed_parent_ids": sorted(completed)})
            raise RuntimeError(
                f"interrupted; partial raw shard under {out_dir}/raw.partial*, "
                f"checkpoint {out_dir}/raw.checkpoint.json"
            )
        counts["chunks"] = state["chunks"]
        counts["rephrased"] = len(rephrased)
        counts["rephrase_failures"] = len(failures)
        counts["completion_tokens"] = log.completion_tokens_total
        counts["tokens_per_hour"] = throughput(log) if log.finished_at > log.started_at else 0.0

        kept, filter_report = filter_corpus(rephrased)
        synthetic_docs = [synthetic_to_document(rec) for rec in kept]
        synthetic_manifests = write_shard(synthetic_docs, out_dir / "synthetic")
        synthetic_paths = [m.path for m in synthetic_manifests]
        outputs.extend(synthetic_paths)
        counts["synthetic_kept"] = len(kept)
        counts["filter_dropped"] = filter_report.dropped

        failure_path = _write_failures(failures, out_dir / "failures.jsonl")
        if failure_path:
            outputs.append(str(failure_path))

        spec = MixSpec(
            components=(("real", 1), ("synthetic", 1)),
            seed=args.seed,
            unit="documents",
            real_labels=("real",),
        )
        sources = {"real": real_paths, "synthetic": synthetic_paths}
        stream, mix_report = build_mix(spec, sources)
        mixed_manifests = write_shard(stream, out_dir / "mixed")
        mixed_paths = [m.path for m in mixed_manifests]
        outputs.extend(mixed_paths)
        validate_mix(mixed_paths, spec, expect=mix_report)
        mix_payload = {
            "unit": mix_report.unit,
            "policy": mix_report.policy,
            "seed": mix_report.seed,
            "weights": mix_report.weights,
            "docs": mix_report.docs,
            "tokens": mix_report.tokens,
            "real_token_total": mix_report.real_token_total,
            "blocks": mix_report.blocks,
            "realized_ratio": mix_report.realized_ratio(),
            "validated": True,
        }
        mix_report_path = _write_json(out_dir / "mix_report.json", mix_payload)
        outputs.append(str(mix_report_path))
        counts["mixed_docs"] = mix_report.total_docs()
        counts["real_token_total"] = mix_report.real_token_total

        metrics_report: dict = {}
        slices = {"real": real_docs, "synthetic": synthetic_docs}
        fk_summaries, metrics_report["readability_fk"] = _slice_summaries(
            slices, flesch_kincaid_grade)
        ttr_summaries, metrics_report["diversity_ttr"] = _slice_summaries(
            slices, type_token_ratio)
        figures = []
        if fk_summaries:
            figures.append(plot_distributions(
                fk_summaries, "readability (flesch-kincaid grade)",
                out_dir / "metrics_readability.png"))
        if ttr_summaries:
            figures.append(plot_distributions(
                ttr_summaries, "diversity (type-token ratio)",
                out_dir / "metrics_diversity.png"))

        synthetic_records = kept
        cosine_summaries: dict[str, DistributionSummary] = {}
        semantic_section: dict = {}
        for strategy in PairingStrategy:
            synthetic = synthetic_records if strategy is PairingStrategy.SYNTH_REAL else None
            pairs, pairing = make_pairs(real_docs, strategy, seed=args.seed, synthetic=synthetic)
            sims = pairwise_cosines(pairs, cfg)
            entry = {"pairs": pairing.made, "skipped": len(pairing.skipped)}
            if len(sims) >= 2:
                cosine_summaries[strategy.value] = summarize_distribution(sims)
                entry.update(_summary_json(cosine_summaries[strategy.value]))
            semantic_section[strategy.value] = entry
        metrics_report["semantic_cosine"] = semantic_section
        if cosine_summaries:
            figures.append(plot_distributions(
                cosine_summaries, "pairwise cosine similarity",
                out_dir / "metrics_semantic.png"))
        metrics_path = _write_json(out_dir / "metrics_report.json", metrics_report)
        outputs.append(str(metrics_path))
        outputs.extend(str(f) for f in figures)
        stats = dict(mock.stats) if mock else None

    with bundled_path("demo_losses.jsonl") as path:
        records = load_loss_records(path)
    table = resolve_weight_table(args.weights)
    normalized = normalize_weights(table, include=[r.domain for r in records])
    eval_report = perplexity_report(records, normalized)
    eval_path = _write_json(out_dir / "eval_report.json", eval_report.to_json_dict())
    eval_text = out_dir / "eval_report.txt"
    eval_text.write_text(eval_report.to_text(), encoding="utf-8")
    eval_png = plot_perplexity(eval_report, out_dir / "eval_report.png")
    outputs.extend([str(eval_path), str(eval_text), str(eval_png)])
    counts["eval_weighted_average"] = eval_report.weighted_average

    cost = breakeven_report(args.gen_tokens, args.train_tokens, get_preset(args.preset))
    cost_path = _write_json(out_dir / "cost_report.json", cost.to_json_dict())
    cost_text = out_dir / "cost_report.txt"
    cost_text.write_text(cost.to_text(), encoding="utf-8")
    cost_png = plot_cost(cost, out_dir / "cost_report.png")
    outputs.extend([str(cost_path), str(cost_text), str(cost_png)])

    config = {
        "subcommand": "end-to-end",
        "docs": args.docs,
        "seed": args.seed,
        "style": args.style,
        "endpoint": args.endpoint,
        "max_in_flight": args.max_in_flight,
        "weights": args.weights,
        "preset": args.preset,
    }
    if stats is not None:
        config["mock_peak_in_flight"] = stats["peak_in_flight"]
    manifest = _write_manifest(out_dir / "run_manifest.json", "end-to-end", config,
                               inputs, outputs, counts, started, stats)
    print(f"end-to-end: {counts['mixed_docs']} mixed docs from {args.docs} inputs; "
          f"manifest {manifest}")
    return 0


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wrap-forge",
        description="Corpus rephrasing, filtering, mixing, and evaluation toolkit.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("rephrase", help="generate style rephrases for shard documents")
    _add_common(p)
    _add_endpoint_args(p)
    _arg(p, "--in", dest="inputs", nargs="+", required=True, help="input shard files")
    _arg(p, "--out", required=True, help="output shard prefix")
    _arg(p, "--style", required=True,
         help="easy|medium|hard|qa or file:<template path>")
    _arg(p, "--max-chunk-tokens", type=int, default=CHUNK_TOKEN_BUDGET)
    _arg(p, "--merge-system", action="store_true",
         help="send the preamble merged into the user turn")
    _arg(p, "--checkpoint", default=None, help="checkpoint path (default <out>.checkpoint.json)")
    p.set_defaults(func=run_rephrase)

    p = sub.add_parser("filter", help="strip generation-preamble artifacts")
    _add_common(p)
    _arg(p, "--in", dest="inputs", nargs="+", required=True, help="raw rephrase shards")
    _arg(p, "--out", required=True, help="output shard prefix")
    _arg(p, "--lexicon", default=None, help="phrase file (default: builtin lexicon)")
    _arg(p, "--report", default=None, help="report path (default <out>.filter_report.json)")
    p.set_defaults(func=run_filter)

    p = sub.add_parser("mix", help="mix corpora at exact ratios")
    _add_common(p)
    _arg(p, "--spec", required=True, help="mix config file")
    _arg(p, "--out", required=True, help="output directory")
    _arg(p, "--report", default=None, help="report path (default <out>/mix_report.json)")
    p.set_defaults(func=run_mix)

    p = sub.add_parser("metrics", help="readability/diversity/syntactic/semantic reports")
    _add_common(p)
    _add_endpoint_args(p)
    _arg(p, "--real", nargs="+", required=True, help="real-document shards")
    _arg(p, "--synthetic", nargs="+", required=True, help="synthetic-document shards")
    _arg(p, "--parses", default=None, help="directory of .conllu dependency parses")
    _arg(p, "--report", required=True, help="JSON report path")
    _arg(p, "--seed", type=int, default=0)
    p.set_defaults(func=run_metrics)
    # the metrics endpoint is optional: empty string disables the semantic section
    p.set_defaults(endpoint=os.environ.get(_env_key("--endpoint"), ""))

    p = sub.add_parser("eval", help="domain-weighted perplexity report")
    _add_common(p)
    _arg(p, "--losses", required=True, help="loss-record JSONL path or builtin:demo")
    _arg(p, "--weights", default="builtin:pile", help="weight table path or builtin:pile")
    _arg(p, "--report", required=True, help="JSON report path")
    p.set_defaults(func=run_eval)

    p = sub.add_parser("cost", help="generation vs training cost calculator")
    _add_common(p)
    _arg(p, "--preset", default="paper-mistral7b")
    _arg(p, "--presets-file", default=None, help="optional preset config file")
    _arg(p, "--gen-tokens", type=float, default=85e9)
    _arg(p, "--train-tokens", type=float, default=300e9)
    _arg(p, "--report", default="cost_report.json", help="JSON report path")
    p.set_defaults(func=run_cost)

    p = sub.add_parser("mock-server", help="serve the mock endpoint until interrupted")
    _add_common(p)
    _arg(p, "--mode", default="echo", help="echo | fixture | flaky:<n> | slow:<ms>")
    _arg(p, "--port", type=int, default=0)
    _arg(p, "--fixtures", default=None, help="fixture JSON (digest -> completion)")
    _arg(p, "--embed-dim", type=int, default=32)
    _arg(p, "--embedding-mode", default="hash", help="hash | basis")
    p.set_defaults(func=run_mock_server)

    p = sub.add_parser("end-to-end", help="demo pipeline against a mock endpoint")
    _add_common(p)
    _add_endpoint_args(p)
    _arg(p, "--docs", type=int, default=100)
    _arg(p, "--out", required=True, help="output directory")
    _arg(p, "--style", default="medium")
    _arg(p, "--seed", type=int, default=0)
    _arg(p, "--max-chunk-tokens", type=int, default=CHUNK_TOKEN_BUDGET)
    _arg(p, "--weights", default="builtin:pile")
    _arg(p, "--preset", default="paper-mistral7b")
    _arg(p, "--gen-tokens", type=float, default=85e9)
    _arg(p, "--train-tokens", type=float, default=300e9)
    p.set_defaults(func=run_end_to_end)

    return parser


def run_subcommand(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # single machine-parsable line, exit 1
        print(f"error: {exc}", file=sys.stderr)
        logger.debug("failure detail", exc_info=True)
        return 1


main = run_subcommand


if __name__ == "__main__":
    sys.exit(main())
