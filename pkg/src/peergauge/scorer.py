"""Runs scoring jobs against a backend and accounts for every outcome.

Two paths exist. The multi-aspect path sends one instruction prompt per
comment and expects one JSON object with all four labels. The single-aspect
path sends one rubric prompt per aspect; verifiability runs as two steps
there, a claim-detection call followed by a scoring call only when a claim
was found. Parse failures never raise: they are recorded on the item and the
item simply drops out of downstream statistics.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .backends import AuthError, Backend, BackendRefusal, TransportError
from .metrics import EmptyInput
from .model import (
    ASPECTS,
    AnnotationMode,
    Aspect,
    AspectLabel,
    NO_CLAIM,
    RejectedLabel,
    ReviewComment,
    iter_jsonl,
    validate_label,
    write_jsonl,
)
from .rubric import (
    ExamplePool,
    PromptMode,
    PromptTask,
    build_claim_detection_prompt,
    build_multi_aspect_prompt,
    build_single_aspect_prompt,
    derive_seed,
    load_example_pool,
    sample_incontext_examples,
)

__all__ = [
    "AspectScore",
    "BatchSummary",
    "ParseStatus",
    "PromptPools",
    "ScoredComment",
    "extract_first_json",
    "load_prompt_pools",
    "load_scored",
    "parse_claim_output",
    "parse_scored_output",
    "score_batch",
    "score_comment",
    "scored_from_dict",
    "scored_to_dict",
    "write_scored",
]


class ParseStatus(str, Enum):
    OK = "ok"
    PARTIAL = "partial"
    FAILED = "failed"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class AspectScore:
    """A successfully parsed label for one aspect, with its rationale if any."""

    label: AspectLabel
    rationale: str | None = None


@dataclass(frozen=True)
class ScoredComment:
    """Everything one scoring job produced for one comment.

    ``aspects`` holds only the aspects whose labels parsed and validated;
    anything else is listed in ``missing_keys`` and reflected in
    ``parse_status``.
    """

    comment_id: str
    aspects: Mapping[Aspect, AspectScore]
    parse_status: ParseStatus
    missing_keys: tuple[str, ...] = ()
    raw_output: str = ""

    def label(self, aspect: Aspect) -> AspectLabel | None:
        score = self.aspects.get(aspect)
        return score.label if score else None




def extract_first_json(text: str) -> dict | None:
    """Pull the first JSON object out of free text, or None.

    Scans for a brace-balanced span, honoring strings and escapes, so prose
    and markdown fences around the object do not matter. Spans that balance
    but fail json.loads are skipped in favor of later candidates.
    """
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for pos in range(start, len(text)):
            ch = text[pos]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    try:
                        obj = json.loads(text[start : pos + 1])
                    except json.JSONDecodeError:
                        break
                    if isinstance(obj, dict):
                        return obj
                    break
        start = text.find("{", start + 1)
    return None


def parse_scored_output(
    raw: str,
    schema: Sequence[str],
    aspects: Sequence[Aspect],
    comment_id: str = "",
    *,
    forbid_no_claim: bool = False,
) -> ScoredComment:
    """Parse one completion into labels, tracking what is missing or invalid.

    No JSON object in ``raw`` gives parse_status=Failed. Otherwise each
    requested aspect needs a valid ``<aspect>_label`` value; aspects whose key
    is absent or whose label fails validation end up in ``missing_keys`` and
    downgrade the status to Partial. ``forbid_no_claim`` rejects an "X" label,
    which the two-step protocol uses for the post-detection scoring call.
    """
    obj = extract_first_json(raw)
    if obj is None:
        return ScoredComment(
            comment_id=comment_id,
            aspects={},
            parse_status=ParseStatus.FAILED,
            missing_keys=tuple(schema),
            raw_output=raw,
        )
    parsed: dict[Aspect, AspectScore] = {}
    missing: list[str] = []
    for aspect in aspects:
        label_key = f"{aspect.value}_label"
        rationale_key = f"{aspect.value}_rationale"
        wants_rationale = rationale_key in schema
        if label_key not in obj:
            missing.append(label_key)
            if wants_rationale and rationale_key not in obj:
                missing.append(rationale_key)
            continue
        try:
            label = validate_label(aspect, obj[label_key])
        except RejectedLabel:
            missing.append(label_key)
            continue
        if forbid_no_claim and label.no_claim:
            missing.append(label_key)
            continue
        rationale = None
        if wants_rationale:
            value = obj.get(rationale_key)
            if isinstance(value, str) and value.strip():
                rationale = value
            else:
                missing.append(rationale_key)
        parsed[aspect] = AspectScore(label=label, rationale=rationale)
    return ScoredComment(
        comment_id=comment_id,
        aspects=parsed,
        parse_status=ParseStatus.PARTIAL if missing else ParseStatus.OK,
        missing_keys=tuple(missing),
        raw_output=raw,
    )


def parse_claim_output(raw: str) -> bool | None:
    """Read a claim-detection answer: True (claim), False (none), None (unparseable).

    A JSON object must carry a valid "claim_label"; the free-text fallback,
    where "no claim" wins over a bare "claim", only applies when the response
    contains no JSON at all. Scanning prose next to a JSON object would let a
    rationale mentioning the word "claim" overrule the missing label.
    """
    obj = extract_first_json(raw)
    if obj is not None:
        token = str(obj.get("claim_label", "")).strip().lower()
        if token == "no claim":
            return False
        if token == "claim":
            return True
        return None
    lowered = raw.lower()
    if "no claim" in lowered:
        return False
    if "claim" in lowered:
        return True
    return None


@dataclass(frozen=True)
class PromptPools:
    """The seed example pools the single-aspect path draws from."""

    scoring: Mapping[Aspect, ExamplePool]
    claim_detection: ExamplePool

    def __post_init__(self):
        missing = [str(aspect) for aspect in ASPECTS if aspect not in self.scoring]
        if missing:
            raise ValueError(f"scoring pools missing for aspects: {missing}")


def load_prompt_pools(directory: str | Path) -> PromptPools:
    """Load ``<aspect>.jsonl`` files plus ``claim_detection.jsonl`` from a directory."""
    directory = Path(directory)
    scoring = {
        aspect: load_example_pool(directory / f"{aspect.value}.jsonl", aspect)
        for aspect in ASPECTS
    }
    claim = load_example_pool(
        directory / "claim_detection.jsonl",
        Aspect.VERIFIABILITY,
        PromptTask.CLAIM_DETECTION,
    )
    return PromptPools(scoring=scoring, claim_detection=claim)


def _merge_raw(sections: list[tuple[str, str]]) -> str:
    return "\n\n".join(f"[{name}]\n{raw}" for name, raw in sections)


def _score_single_aspect_path(
    comment: ReviewComment,
    score_mode: AnnotationMode,
    backend: Backend,
    pools: PromptPools,
    rng_seed: int,
) -> ScoredComment:
    parsed: dict[Aspect, AspectScore] = {}
    missing: list[str] = []
    sections: list[tuple[str, str]] = []
    any_json = False
    for aspect in ASPECTS:
        if aspect is Aspect.VERIFIABILITY:
            claim_examples = sample_incontext_examples(
                pools.claim_detection,
                derive_seed(rng_seed, comment.id, "claim_detection"),
                PromptTask.CLAIM_DETECTION,
            )
            claim_prompt = build_claim_detection_prompt(comment, claim_examples, score_mode)
            claim_raw = backend.complete(claim_prompt.rendered_text)
            sections.append(("claim_detection", claim_raw))
            verdict = parse_claim_output(claim_raw)
            any_json = any_json or verdict is not None
            if verdict is None:
                missing.append("claim_label")
                continue
            if verdict is False:
                obj = extract_first_json(claim_raw) or {}
                rationale = obj.get("claim_rationale")
                parsed[aspect] = AspectScore(
                    label=NO_CLAIM,
                    rationale=rationale if isinstance(rationale, str) else None,
                )
                continue
        examples = sample_incontext_examples(
            pools.scoring[aspect], derive_seed(rng_seed, comment.id, aspect.value)
        )
        prompt = build_single_aspect_prompt(aspect, comment, examples, score_mode)
        raw = backend.complete(prompt.rendered_text)
        sections.append((aspect.value, raw))
        one = parse_scored_output(
            raw,
            prompt.expected_output_schema,
            [aspect],
            comment.id,
            forbid_no_claim=aspect is Aspect.VERIFIABILITY,
        )
        any_json = any_json or one.parse_status is not ParseStatus.FAILED
        parsed.update(one.aspects)
        missing.extend(one.missing_keys)
    if not parsed and not any_json:
        status = ParseStatus.FAILED
    elif missing:
        status = ParseStatus.PARTIAL
    else:
        status = ParseStatus.OK
    return ScoredComment(
        comment_id=comment.id,
        aspects=parsed,
        parse_status=status,
        missing_keys=tuple(missing),
        raw_output=_merge_raw(sections),
    )


def score_comment(
    comment: ReviewComment,
    *,
    backend: Backend,
    path: PromptMode = PromptMode.MULTI_ASPECT,
    score_mode: AnnotationMode = AnnotationMode.SCORE_WITH_RATIONALE,
    pools: PromptPools | None = None,
    rng_seed: int = 0,
) -> ScoredComment:
    """Score one comment on all four aspects.

    The multi-aspect path costs exactly one backend call. The single-aspect
    path costs one call per aspect plus the claim-detection call, so four
    calls when no claim is found and five otherwise. Backend errors propagate;
    parse problems are recorded on the result instead.
    """
    path = PromptMode(path)
    score_mode = AnnotationMode(score_mode)
    if path is PromptMode.MULTI_ASPECT:
        prompt = build_multi_aspect_prompt(comment, score_mode)
        raw = backend.complete(prompt.rendered_text)
        return parse_scored_output(raw, prompt.expected_output_schema, ASPECTS, comment.id)
    if pools is None:
        raise ValueError("single-aspect scoring needs example pools")
    return _score_single_aspect_path(comment, score_mode, backend, pools, rng_seed)


@dataclass
class BatchSummary:
    """Outcome counts for one scoring run."""

    ok: int = 0
    partial: int = 0
    failed: int = 0
    label_histogram: dict[Aspect, dict[str, int]] = field(
        default_factory=lambda: {aspect: {} for aspect in ASPECTS}
    )

    @property
    def total(self) -> int:
        return self.ok + self.partial + self.failed

    def record(self, scored: ScoredComment) -> None:
        if scored.parse_status is ParseStatus.OK:
            self.ok += 1
        elif scored.parse_status is ParseStatus.PARTIAL:
            self.partial += 1
        else:
            self.failed += 1
        for aspect, score in scored.aspects.items():
            bucket = self.label_histogram[aspect]
            key = score.label.as_str()
            bucket[key] = bucket.get(key, 0) + 1

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "partial": self.partial,
            "failed": self.failed,
            "label_histogram": {
                aspect.value: dict(sorted(bucket.items()))
                for aspect, bucket in self.label_histogram.items()
            },
        }


def score_batch(
    comments: Sequence[ReviewComment],
    *,
    backend: Backend,
    path: PromptMode = PromptMode.MULTI_ASPECT,
    score_mode: AnnotationMode = AnnotationMode.SCORE_WITH_RATIONALE,
    pools: PromptPools | None = None,
    rng_seed: int = 0,
    max_concurrency: int | None = None,
) -> tuple[list[ScoredComment], BatchSummary]:
    """Score a batch, preserving input order in the output.

    At most ``max_concurrency`` backend requests are in flight (default from
    the backend config). Transport failures and refusals mark the affected
    item Failed and the run continues; AuthError aborts the whole batch since
    every remaining request would fail the same way.
    """
    if not comments:
        raise EmptyInput("no comments to score")
    if max_concurrency is None:
        config = getattr(backend, "config", None)
        max_concurrency = config.max_concurrency if config else 1
    workers = max(1, min(max_concurrency, len(comments)))

    def job(comment: ReviewComment) -> ScoredComment:
        try:
            return score_comment(
                comment,
                backend=backend,
                path=path,
                score_mode=score_mode,
                pools=pools,
                rng_seed=rng_seed,
            )
        except (TransportError, BackendRefusal) as exc:
            return ScoredComment(
                comment_id=comment.id,
                aspects={},
                parse_status=ParseStatus.FAILED,
                missing_keys=(),
                raw_output=f"backend error: {exc}",
            )

    results: list[ScoredComment] = [None] * len(comments)  # type: ignore[list-item]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(job, comment): idx for idx, comment in enumerate(comments)}
        try:
            for future in as_completed(futures):
                results[futures[future]] = future.result()
        except AuthError:
            for future in futures:
                future.cancel()
            raise
    summary = BatchSummary()
    for item in results:
        summary.record(item)
    return results, summary


def scored_to_dict(scored: ScoredComment) -> dict:
    obj: dict = {
        "comment_id": scored.comment_id,
        "parse_status": scored.parse_status.value,
        "missing_keys": list(scored.missing_keys),
        "aspects": {},
        "raw_output": scored.raw_output,
    }
    for aspect, score in scored.aspects.items():
        entry: dict = {"label": score.label.as_str()}
        if score.rationale is not None:
            entry["rationale"] = score.rationale
        obj["aspects"][aspect.value] = entry
    return obj


def scored_from_dict(obj: dict) -> ScoredComment:
    aspects: dict[Aspect, AspectScore] = {}
    for name, entry in dict(obj.get("aspects", {})).items():
        aspect = Aspect(name)
        aspects[aspect] = AspectScore(
            label=validate_label(aspect, entry["label"]),
            rationale=entry.get("rationale"),
        )
    return ScoredComment(
        comment_id=str(obj["comment_id"]),
        aspects=aspects,
        parse_status=ParseStatus(obj.get("parse_status", "ok")),
        missing_keys=tuple(obj.get("missing_keys", ())),
        raw_output=str(obj.get("raw_output", "")),
    )


def write_scored(path: str | Path, scored: Iterable[ScoredComment]) -> int:
    return write_jsonl(path, (scored_to_dict(item) for item in scored))


def load_scored(path: str | Path) -> list[ScoredComment]:
    return [scored_from_dict(obj) for _, obj in iter_jsonl(path)]
