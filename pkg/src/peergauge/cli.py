"""Command-line pipeline: segment reviews, score comments, emit reports.

Subcommands mirror the library layers one to one. `segment` turns raw
reviews into comment units, `score` labels them through a backend, and the
report commands (`agree`, `compare`, `rationales`, `correlate`) aggregate
scored or annotated data. `serve` starts the HTTP service.

Report JSON goes to stdout unless --out names a file, in which case stdout
carries the aligned-text rendering instead. One-line summaries go to
stderr so stdout stays pipeable. Exit codes: 0 success, 1 data errors,
2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import (
    SUBSET_ALL,
    SUBSET_FULL_MAJORITY,
    agreement_report,
    aspect_correlation_matrix,
    compare_review_sources,
    majority_label_table,
    model_vs_human_report,
    rationale_similarity_report,
    report_to_json,
)
from .backends import load_backend_config, make_backend
from .model import AnnotationMode, PeerGaugeError, comment_to_dict, load_annotations, load_comments, write_jsonl
from .rubric import PromptMode
from .scorer import load_prompt_pools, load_scored, score_batch, write_scored
from .segmenter import load_reviews, load_segmenter_config, segment_corpus

__all__ = ["main"]

_MODES = {"s": AnnotationMode.SCORE_ONLY, "s+r": AnnotationMode.SCORE_WITH_RATIONALE}
_PATHS = {"single": PromptMode.SINGLE_ASPECT, "multi": PromptMode.MULTI_ASPECT}


def _say(message: str) -> None:
    print(message, file=sys.stderr)


def _emit_report(report, out: str | None) -> None:
    """JSON to --out (text to stdout), or JSON straight to stdout."""
    rendered = report_to_json(report)
    if out:
        Path(out).write_text(rendered, encoding="utf-8")
        print(report.render_text())
    else:
        sys.stdout.write(rendered)


def _cmd_segment(args: argparse.Namespace) -> int:
    config = load_segmenter_config(args.config) if args.config else None
    reviews = load_reviews(args.infile)
    result = segment_corpus(reviews, config)
    write_jsonl(args.outfile, (comment_to_dict(c) for c in result.comments))
    if args.drop_report:
        Path(args.drop_report).write_text(
            json.dumps(result.drop_report.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    dropped = result.drop_report.input_fragments - result.drop_report.output_comments
    _say(
        f"segmented {len(reviews)} reviews into {len(result.comments)} comments "
        f"({dropped} fragments dropped) -> {args.outfile}"
    )
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    prompt_path = _PATHS[args.path]
    pools = load_prompt_pools(args.pools) if args.pools else None
    comments = load_comments(args.infile)
    backend = make_backend(load_backend_config(args.backend))
    try:
        scored, summary = score_batch(
            comments,
            backend=backend,
            path=prompt_path,
            score_mode=_MODES[args.mode],
            pools=pools,
            rng_seed=args.seed,
        )
    finally:
        close = getattr(backend, "close", None)
        if close:
            close()
    write_scored(args.outfile, scored)
    counts = summary.to_dict()
    _say(
        f"scored {len(scored)} comments: ok={counts['ok']} "
        f"partial={counts['partial']} failed={counts['failed']} -> {args.outfile}"
    )
    return 0


def _cmd_agree(args: argparse.Namespace) -> int:
    annotations = load_annotations(args.annotations)
    subset = SUBSET_ALL if args.subset == "all" else SUBSET_FULL_MAJORITY
    if args.model:
        report = model_vs_human_report(load_scored(args.model), annotations, subset=subset)
        _say(f"model-vs-human agreement on the {subset} subset")
    else:
        report = agreement_report(annotations, subset_rule=subset)
        _say(f"inter-annotator agreement on the {subset} subset")
    _emit_report(report, args.out)
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    report = compare_review_sources(load_scored(args.human), load_scored(args.llm))
    _emit_report(report, args.out)
    _say("compared score distributions of the two sources")
    return 0


def _cmd_rationales(args: argparse.Namespace) -> int:
    report = rationale_similarity_report(
        load_scored(args.generated), load_scored(args.reference)
    )
    _emit_report(report, args.out)
    _say("rationale similarity by correctness bucket")
    return 0


def _cmd_correlate(args: argparse.Namespace) -> int:
    table = majority_label_table(load_annotations(args.annotations))
    report = aspect_correlation_matrix(table)
    _emit_report(report, args.out)
    _say(f"aspect correlations over {len(table)} majority-labeled comments")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    backend = make_backend(load_backend_config(args.backend))
    app = create_app(backend)
    _say(f"serving on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="peergauge",
        description="Segment peer reviews, score comment utility, report agreement.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("segment", help="split raw reviews into comment units")
    p.add_argument("--in", dest="infile", required=True, metavar="reviews.jsonl")
    p.add_argument("--out", dest="outfile", required=True, metavar="comments.jsonl")
    p.add_argument("--config", metavar="seg.json", help="segmenter overrides")
    p.add_argument("--drop-report", metavar="path", help="write stage drop counts as JSON")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("score", help="label comments through a backend")
    p.add_argument("--in", dest="infile", required=True, metavar="comments.jsonl")
    p.add_argument("--out", dest="outfile", required=True, metavar="scored.jsonl")
    p.add_argument("--mode", choices=sorted(_MODES), required=True,
                   help="s = score only, s+r = score with rationale")
    p.add_argument("--path", choices=sorted(_PATHS), required=True,
                   help="single = one aspect per call, multi = all four in one call")
    p.add_argument("--backend", required=True, metavar="cfg.json")
    p.add_argument("--seed", type=int, default=0, help="base seed for example sampling")
    p.add_argument("--pools", metavar="DIR",
                   help="in-context example pools, required for --path single")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("agree", help="inter-annotator or model-vs-human agreement")
    p.add_argument("--annotations", required=True, metavar="ann.jsonl")
    p.add_argument("--subset", choices=("all", "majority"), default="all",
                   help="majority keeps only items with a majority label")
    p.add_argument("--out", metavar="report.json")
    p.add_argument("--model", metavar="scored.jsonl",
                   help="compare these model labels against the annotators")
    p.set_defaults(func=_cmd_agree)

    p = sub.add_parser("compare", help="compare score distributions of two sources")
    p.add_argument("--human", required=True, metavar="scored_a.jsonl")
    p.add_argument("--llm", required=True, metavar="scored_b.jsonl")
    p.add_argument("--out", metavar="report.json")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("rationales", help="Rouge-L of generated vs reference rationales")
    p.add_argument("--generated", required=True, metavar="g.jsonl")
    p.add_argument("--reference", required=True, metavar="r.jsonl")
    p.add_argument("--out", metavar="report.json")
    p.set_defaults(func=_cmd_rationales)

    p = sub.add_parser("correlate", help="aspect correlation matrix from majority labels")
    p.add_argument("--annotations", required=True, metavar="ann.jsonl")
    p.add_argument("--out", metavar="report.json")
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("serve", help="start the assessment HTTP service")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--backend", required=True, metavar="cfg.json")
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "score" and args.path == "single" and not args.pools:
        parser.error("--path single needs --pools DIR with in-context examples")
    try:
        return args.func(args)
    except PeerGaugeError as exc:
        _say(f"error: {exc}")
        return 1
    except OSError as exc:
        _say(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
