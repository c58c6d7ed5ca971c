"""Command-line front end for the whole pipeline.

Each subcommand maps onto one module operation. A config file provides
defaults, flags override it, and the resulting config's hash is stamped
into every output so artifacts can be traced to their settings. Usage
mistakes exit 2; operational failures exit 1 with a structured JSON
diagnostic on stderr.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .analytics import (
    category_counts,
    export_table,
    figure_data,
    group_totals,
    level_ratios,
    percentages,
)
from .codebook import read_annotations, write_annotations
from .config import PipelineConfig, load_config, save_config
from .corpus import corpus_stats, corpus_to_dict, load_corpus, load_corpus_document
from .errors import LessonMinerError
from .filtering import filter_corpus, filtered_to_dict, reduction_report, write_filtered
from .keyness import (
    build_contrast_table,
    candidate_lists,
    read_keyword_list,
    score_keywords,
    write_keyword_list,
)
from .reliability import agreement_report, align_annotations, report_to_dict
from .selection import (
    SelectionPolicy,
    evaluate_lists,
    read_evaluation_table,
    select_list,
    write_evaluation_table,
)
from .synthesis import SynthesisParams, generate_synthetic_corpus

DATA_DIR_ENV = "LESSONMINER_DATA_DIR"


def _operational(fn):
    """Turn domain and I/O failures into exit 1 with a JSON diagnostic."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except LessonMinerError as exc:
            click.echo(json.dumps(exc.to_dict(), sort_keys=True), err=True)
            sys.exit(1)
        except OSError as exc:
            payload = {"code": "IoFailure", "message": str(exc), "details": {}}
            click.echo(json.dumps(payload, sort_keys=True), err=True)
            sys.exit(1)

    return wrapper


def _emit(ctx_obj: dict, payload: dict, lines: list[str]):
    if ctx_obj["output"] == "json":
        click.echo(json.dumps(payload, sort_keys=True, ensure_ascii=False))
    else:
        for line in lines:
            click.echo(line)


def _cfg(ctx_obj: dict, **overrides) -> PipelineConfig:
    return ctx_obj["config"].override(**overrides)


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON config file; flags override its values.",
)
@click.option(
    "--output",
    type=click.Choice(["text", "json"]),
    default="text",
    show_default=True,
    help="Human-readable lines or one JSON document on stdout.",
)
@click.pass_context
def main(ctx, config_path, output):
    """Locate and code engaging messages in lesson transcript corpora."""
    try:
        config = load_config(config_path) if config_path else PipelineConfig()
    except (ValueError, KeyError) as exc:
        raise click.UsageError(f"bad config file: {exc}")
    ctx.obj = {"config": config, "output": output}


@main.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--words-per-page", type=int, default=None)
@click.pass_obj
@_operational
def ingest(obj, manifest, out, words_per_page):
    """Load transcripts per MANIFEST and write one corpus document."""
    cfg = _cfg(obj, words_per_page=words_per_page)
    corpus = load_corpus(manifest, cfg.normalization)
    document = corpus_to_dict(corpus)
    document["config_hash"] = cfg.hash()
    Path(out).write_text(
        json.dumps(document, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    stats = corpus_stats(corpus, cfg.words_per_page)
    payload = {
        "corpus": out,
        "config_hash": cfg.hash(),
        "transcripts": stats.transcript_count,
        "segments": stats.segment_count,
        "tokens": stats.token_count,
        "pages": stats.page_equivalents,
    }
    _emit(obj, payload, [
        f"wrote {out} ({stats.transcript_count} transcripts, "
        f"{stats.segment_count} segments, {stats.token_count} tokens, "
        f"{stats.page_equivalents:.1f} pages) config {cfg.hash()}",
    ])


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--words-per-page", type=int, default=None)
@click.pass_obj
@_operational
def stats(obj, corpus_path, words_per_page):
    """Corpus size figures: transcripts, segments, tokens, page equivalents."""
    cfg = _cfg(obj, words_per_page=words_per_page)
    corpus = load_corpus_document(corpus_path)
    result = corpus_stats(corpus, cfg.words_per_page)
    payload = {
        "config_hash": cfg.hash(),
        "transcripts": result.transcript_count,
        "segments": result.segment_count,
        "tokens": result.token_count,
        "pages": result.page_equivalents,
    }
    _emit(obj, payload, [
        f"transcripts: {result.transcript_count}",
        f"segments:    {result.segment_count}",
        f"tokens:      {result.token_count}",
        f"pages:       {result.page_equivalents:.2f}",
    ])


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("gold_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--ranked-out", required=True, type=click.Path(dir_okay=False))
@click.option("--lists-dir", required=True, type=click.Path(file_okay=False))
@click.option("--alpha", type=float, default=None)
@click.option("--size-grid", default=None, help="Comma-separated list sizes.")
@click.pass_obj
@_operational
def keywords(obj, corpus_path, gold_path, ranked_out, lists_dir, alpha, size_grid):
    """Score message-vs-background keywords and cut candidate lists."""
    grid = tuple(int(s) for s in size_grid.split(",")) if size_grid else None
    cfg = _cfg(obj, alpha=alpha, size_grid=grid)
    corpus = load_corpus_document(corpus_path)
    gold = read_annotations(gold_path)
    table = build_contrast_table(corpus, gold, cfg.normalization)
    ranked = score_keywords(table, cfg.alpha)

    with open(ranked_out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# config: {cfg.hash()}\n")
        fh.write("rank,token,score,message_count,background_count\n")
        for rank, kw in enumerate(ranked, start=1):
            fh.write(f"{rank},{kw.token},{kw.score!r},{kw.c_m},{kw.c_b}\n")

    lists_dir = Path(lists_dir)
    lists_dir.mkdir(parents=True, exist_ok=True)
    lists = candidate_lists(ranked, cfg.size_grid)
    for klist in lists:
        write_keyword_list(klist, lists_dir / f"{klist.name}.txt", cfg.hash())
    payload = {
        "config_hash": cfg.hash(),
        "ranked": ranked_out,
        "vocabulary": len(ranked),
        "lists": [klist.name for klist in lists],
    }
    _emit(obj, payload, [
        f"ranked {len(ranked)} tokens -> {ranked_out}",
        f"wrote {len(lists)} candidate lists -> {lists_dir}",
    ])


@main.command("filter")
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("list_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--window", type=int, default=None)
@click.option("--words-per-page", type=int, default=None)
@click.pass_obj
@_operational
def filter_cmd(obj, corpus_path, list_path, out, window, words_per_page):
    """Keep segments sharing a token with the keyword list."""
    cfg = _cfg(obj, window=window, words_per_page=words_per_page)
    corpus = load_corpus_document(corpus_path)
    klist = read_keyword_list(list_path)
    filtered = filter_corpus(corpus, klist, cfg.window, cfg.normalization)
    document = filtered_to_dict(filtered, corpus, klist.name, cfg.hash(), cfg.window)
    write_filtered(document, out)
    reduction = reduction_report(corpus, filtered, cfg.words_per_page)
    payload = {
        "config_hash": cfg.hash(),
        "filtered": out,
        "keyword_list": klist.name,
        "retained_fraction": reduction.retained_fraction,
        "retained_pages": reduction.retained_pages,
        "total_pages": reduction.total_pages,
    }
    _emit(obj, payload, [
        f"wrote {out}: retained {reduction.retained_fraction:.4f} of tokens "
        f"({reduction.retained_pages:.1f} of {reduction.total_pages:.1f} pages)",
    ])


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("gold_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--lists-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--window", type=int, default=None)
@click.option("--words-per-page", type=int, default=None)
@click.pass_obj
@_operational
def evaluate(obj, corpus_path, gold_path, lists_dir, out, window, words_per_page):
    """Tabulate recall and retention for every candidate list in a directory."""
    cfg = _cfg(obj, window=window, words_per_page=words_per_page)
    corpus = load_corpus_document(corpus_path)
    gold = read_annotations(gold_path)
    paths = sorted(Path(lists_dir).glob("*.txt"))
    if not paths:
        raise click.UsageError(f"no .txt keyword lists under {lists_dir}")
    candidates = [read_keyword_list(p) for p in paths]
    table = evaluate_lists(
        corpus, gold, candidates, cfg.window, cfg.normalization, cfg.words_per_page
    )
    write_evaluation_table(table, out, config_hash=cfg.hash())
    payload = {
        "config_hash": cfg.hash(),
        "evaluation": out,
        "rows": [
            {
                "list": row.list_name,
                "size": row.size,
                "recall": row.recall,
                "retained_fraction": row.retained_fraction,
                "failed": row.failed,
            }
            for row in table.rows
        ],
    }
    _emit(obj, payload, [
        f"evaluated {len(table.rows)} lists -> {out}",
        *(
            f"  {row.list_name}: recall {row.recall:.4f}, "
            f"retained {row.retained_fraction:.4f}"
            for row in table.rows
        ),
    ])


@main.command()
@click.option("--evaluation", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--recall-threshold", type=float, default=None)
@click.pass_obj
@_operational
def select(obj, evaluation, out, recall_threshold):
    """Pick the thriftiest candidate list meeting the recall threshold."""
    cfg = _cfg(obj, recall_threshold=recall_threshold)
    table = read_evaluation_table(evaluation)
    record = select_list(table, SelectionPolicy(recall_threshold=cfg.recall_threshold))
    payload = {"config_hash": cfg.hash(), "selection": record.to_dict()}
    Path(out).write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    _emit(obj, payload, [
        f"selected {record.list_name} (size {record.size}): recall "
        f"{record.recall:.4f}, retained {record.retained_fraction:.4f} -> {out}",
    ])


@main.command()
@click.argument("annotations_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("annotations_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--threshold", type=float, default=0.5, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@_operational
def agreement(obj, annotations_a, annotations_b, corpus_path, threshold, out):
    """Align two coders' annotation files and report percent agreement."""
    cfg = _cfg(obj)
    a = read_annotations(annotations_a)
    b = read_annotations(annotations_b)
    corpus = load_corpus_document(corpus_path) if corpus_path else None
    pairs = align_annotations(a, b, threshold=threshold, corpus=corpus)
    report = agreement_report(pairs)
    payload = dict(report_to_dict(report), config_hash=cfg.hash())
    if out:
        Path(out).write_text(
            json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    lines = [f"overall agreement: {report.overall_percent:.2f}%"]
    lines.extend(
        f"  {category.label}: {value:.2f}%"
        for category, value in report.per_category.items()
    )
    _emit(obj, payload, lines)


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("annotations_path", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--grouping",
    type=click.Choice(["overall", "by_grade", "by_trimester"]),
    default="overall",
    show_default=True,
)
@click.option(
    "--values",
    type=click.Choice(["counts", "ratios", "percents"]),
    default="counts",
    show_default=True,
)
@click.option(
    "--percent-basis",
    type=click.Choice(["counts", "ratios"]),
    default="counts",
    show_default=True,
    help="What percents are computed from (only with --values percents).",
)
@click.option("--table-format", type=click.Choice(["csv", "json"]), default="csv")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--figure-data", "figure_out", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@_operational
def analyze(
    obj, corpus_path, annotations_path, grouping, values, percent_basis,
    table_format, out, figure_out,
):
    """Descriptive tables over an adjudicated annotation set."""
    if out is None and figure_out is None:
        raise click.UsageError("pass --out and/or --figure-data")
    if values == "ratios" and grouping != "by_grade":
        raise click.UsageError("--values ratios requires --grouping by_grade")
    if values == "percents" and percent_basis == "ratios" and grouping != "by_grade":
        raise click.UsageError("--percent-basis ratios requires --grouping by_grade")

    cfg = _cfg(obj)
    corpus = load_corpus_document(corpus_path)
    annotations = read_annotations(annotations_path)

    payload = {"config_hash": cfg.hash(), "total": len(annotations)}
    lines = [f"{len(annotations)} annotations"]
    if out:
        counts = category_counts(annotations, corpus, grouping)
        if values == "counts":
            table = counts
        elif values == "ratios":
            table = level_ratios(counts, corpus.group_registry)
        else:
            base = (
                counts
                if percent_basis == "counts"
                else level_ratios(counts, corpus.group_registry)
            )
            table = percentages(base)
        export_table(table, table_format, out, config_hash=cfg.hash())
        payload["table"] = out
        payload["group_totals"] = {
            str(k): v for k, v in group_totals(table).items()
        }
        lines.append(f"wrote {values} table ({grouping}) -> {out}")
    if figure_out:
        series = figure_data(annotations, corpus)
        series["config_hash"] = cfg.hash()
        Path(figure_out).write_text(
            json.dumps(series, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        payload["figure_data"] = figure_out
        lines.append(f"wrote figure data -> {figure_out}")
    _emit(obj, payload, lines)


@main.command()
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--transcripts", type=int, default=25, show_default=True)
@click.option("--segments-per-transcript", type=int, default=240, show_default=True)
@click.option("--background-vocab", type=int, default=4000, show_default=True)
@click.option("--message-vocab", type=int, default=100, show_default=True)
@click.option("--rate", type=float, default=0.035, show_default=True)
@click.option("--injection", type=float, default=0.4, show_default=True)
@click.pass_obj
@_operational
def synth(
    obj, out_dir, seed, transcripts, segments_per_transcript,
    background_vocab, message_vocab, rate, injection,
):
    """Generate a synthetic corpus with known planted messages."""
    cfg = _cfg(obj, seed=seed)
    params = SynthesisParams(
        transcript_count=transcripts,
        segments_per_transcript=segments_per_transcript,
        background_vocabulary=background_vocab,
        message_vocabulary=message_vocab,
        message_rate=rate,
        injection_probability=injection,
        seed=cfg.seed,
    )
    result = generate_synthetic_corpus(params)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    document = corpus_to_dict(result.corpus)
    document["config_hash"] = cfg.hash()
    (out / "corpus.json").write_text(
        json.dumps(document, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    write_annotations(result.gold, out / "gold.csv")
    truth = {
        "config_hash": cfg.hash(),
        "planted_count": result.planted_count,
        "message_tokens": list(result.message_tokens),
        "background_vocabulary": len(result.background_tokens),
        "params": {
            "transcript_count": params.transcript_count,
            "segments_per_transcript": params.segments_per_transcript,
            "message_rate": params.message_rate,
            "injection_probability": params.injection_probability,
            "seed": params.seed,
        },
    }
    (out / "truth.json").write_text(
        json.dumps(truth, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    payload = {
        "config_hash": cfg.hash(),
        "out_dir": str(out),
        "planted": result.planted_count,
        "segments": sum(len(t) for t in result.corpus.transcripts),
    }
    _emit(obj, payload, [
        f"wrote synthetic corpus to {out}: {payload['segments']} segments, "
        f"{result.planted_count} planted messages (seed {params.seed})",
    ])


@main.command()
@click.option(
    "--data-dir",
    envvar=DATA_DIR_ENV,
    default="./coding-data",
    show_default=True,
    type=click.Path(file_okay=False),
    help=f"Event log and snapshot location (env {DATA_DIR_ENV}).",
)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8770, show_default=True)
@click.option("--token", default=None, help="Require X-Auth-Token on every request.")
@click.option("--ui-dir", type=click.Path(file_okay=False), default=None)
@click.option("--lease-seconds", type=float, default=900.0, show_default=True)
@click.pass_obj
@_operational
def serve(obj, data_dir, host, port, token, ui_dir, lease_seconds):
    """Run the HTTP coding service."""
    import uvicorn

    from .service import CodingStore, create_app

    store = CodingStore(data_dir, lease_seconds=lease_seconds)
    app = create_app(store, auth_token=token, ui_dir=ui_dir)
    click.echo(f"serving on http://{host}:{port} (data: {data_dir})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("config")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@_operational
def config_cmd(obj, out):
    """Show the effective config and its hash; optionally write it out."""
    cfg = obj["config"]
    if out:
        save_config(cfg, out)
    payload = {"config_hash": cfg.hash(), "config": cfg.to_dict()}
    _emit(obj, payload, [
        f"config hash: {cfg.hash()}",
        json.dumps(cfg.to_dict(), indent=2, sort_keys=True),
    ])


if __name__ == "__main__":
    main()
