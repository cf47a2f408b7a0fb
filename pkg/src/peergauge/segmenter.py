"""Rule-based segmentation of review text into individual review comments.

The pipeline mirrors how large reviewing corpora are usually mined: pick
the weakness/question sections out of a review, split at list delimiters,
then filter out fragments that are not real, self-contained comments
(too short, typo-only nitpicks, post-rebuttal chatter, extreme lengths).

Stages, in fixed order:
  1. text cleaning (newline/whitespace normalization)
  2. delimiter-based splitting at line starts
  3. merging of fragments shorter than ``min_merge_words`` into a neighbor
  4. typo-only filter
  5. bullet-start filter
  6. post-rebuttal filter
  7. word-count bounds filter (mean +- std over the corpus)
  8. final minimum word count filter

Every dropped fragment is attributed to exactly one stage in the drop
report, so ``input_fragments - output_comments == sum(stages)`` always
holds.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .model import ParseError, PeerGaugeError, ReviewComment, iter_jsonl


class UnknownVenue(PeerGaugeError):
    """A named venue has no profile and the text shows no known headings."""


class InsufficientData(PeerGaugeError):
    """Length bounds need at least two word counts."""


@dataclass(frozen=True)
class DelimiterPattern:
    """A line-start marker that opens a new fragment.

    ``bullet`` marks patterns that count as bullet-style for the
    keep-only-bullets stage; keyword prefixes split text but do not count.
    """

    name: str
    regex: str
    bullet: bool

    def compiled(self) -> re.Pattern:
        return re.compile(self.regex)


DEFAULT_DELIMITERS: tuple[DelimiterPattern, ...] = (
    DelimiterPattern("weakness_numbered_paren", r"\(W\s*\d+\)\s*", True),
    DelimiterPattern("weakness_numbered", r"W\d+\s*[:.)]\s*", True),
    DelimiterPattern("question_numbered", r"Q\d+\s*[:.)]\s*", True),
    DelimiterPattern("symbol_bullet", r"[-*+•]\s+", True),
    DelimiterPattern("paren_number", r"\(\d+\)\s*", True),
    DelimiterPattern("number_dot", r"\d+\.\s+", True),
    DelimiterPattern("number_paren", r"\d+\)\s+", True),
    DelimiterPattern("w_colon", r"W\s*:\s*", False),
    DelimiterPattern("q_colon", r"Q\s*:\s*", False),
    DelimiterPattern("weakness_keyword", r"(?i)weakness(?:es)?\b[:.]?\s*", False),
    DelimiterPattern("question_keyword", r"(?i)question(?:s)?\b[:.]?\s*", False),
)

DEFAULT_TYPO_KEYWORDS: tuple[str, ...] = ("typo", "typos", "grammar", "spelling")

DEFAULT_POST_REBUTTAL_KEYWORDS: tuple[str, ...] = (
    "post-rebuttal",
    "post rebuttal",
    "after the rebuttal",
    "rebuttal period",
)

#: Tokens that locate a defect rather than describe one. Used by the
#: typo-only filter when counting content words.
_LOCATOR_WORDS = frozenset({
    "line", "lines", "l", "page", "pages", "pg", "p",
    "section", "sec", "sections", "fig", "figure", "figures",
    "table", "tab", "tables", "eq", "eqn", "equation", "equations",
    "para", "paragraph", "appendix", "footnote",
})

_LOCATOR_REF = re.compile(r"^(?:[lp]|pg|sec|fig|tab|eq|eqn)\.?\d+$")
_NUMBERLIKE = re.compile(r"^\d+(?:[.\-:]\d+)*$")


@dataclass(frozen=True)
class LengthBounds:
    """Word-count bounds derived from corpus statistics.

    All four numbers are quoted at two decimals, each rounded from the
    unrounded statistics, so ``min_words``/``max_words`` can differ from
    ``mean -+ std`` of the quoted values by one unit in the last digit.
    """

    mean: float
    std: float
    min_words: float
    max_words: float

    def contains(self, word_count: int) -> bool:
        return self.min_words <= word_count <= self.max_words


def compute_length_bounds(word_counts: Sequence[int]) -> LengthBounds:
    """Population mean/std over the counts; bounds are mean -+ std."""
    n = len(word_counts)
    if n < 2:
        raise InsufficientData(f"need at least 2 word counts, got {n}")
    mean = math.fsum(word_counts) / n
    std = math.sqrt(math.fsum((c - mean) ** 2 for c in word_counts) / n)
    return LengthBounds(
        mean=round(mean, 2),
        std=round(std, 2),
        min_words=round(mean - std, 2),
        max_words=round(mean + std, 2),
    )


@dataclass(frozen=True)
class VenueProfile:
    """How to pull weakness/question sections out of one venue's reviews."""

    name: str
    #: normalized structured-review field names whose values pass through
    structured_fields: tuple[str, ...] = ()
    #: free-text headings that open a target section
    target_headings: tuple[str, ...] = ()
    #: free-text headings that close a target section
    stop_headings: tuple[str, ...] = ()


_TARGET_HEADINGS = (
    "weaknesses",
    "weakness",
    "summary of weaknesses",
    "main weaknesses",
    "questions",
    "questions for the authors",
    "questions to the authors",
    "questions for authors",
    "questions and comments",
    "comments, suggestions and typos",
    "cons",
    "concerns",
)

_STOP_HEADINGS = (
    "summary",
    "paper summary",
    "summary of the paper",
    "summary and contributions",
    "contributions",
    "strengths",
    "strength",
    "main strengths",
    "summary of strengths",
    "pros",
    "soundness",
    "presentation",
    "contribution",
    "rating",
    "overall rating",
    "score",
    "confidence",
    "limitations",
    "ethical concerns",
    "ethics review",
    "reviewer expertise",
    "recommendation",
    "justification",
)

_STRUCTURED_TARGET_FIELDS = (
    "weaknesses",
    "weakness",
    "summary_of_weaknesses",
    "main_weaknesses",
    "questions",
    "questions_for_authors",
    "questions_for_the_authors",
    "comments_suggestions_and_typos",
    "cons",
    "concerns",
)

GENERIC_PROFILE = VenueProfile(
    name="generic",
    structured_fields=_STRUCTURED_TARGET_FIELDS,
    target_headings=_TARGET_HEADINGS,
    stop_headings=_STOP_HEADINGS,
)

#: Known venue keys. They all share the generic heading vocabulary; the
#: point of keeping them separate is that users can override one venue
#: without touching the rest.
DEFAULT_VENUE_PROFILES: dict[str, VenueProfile] = {
    "generic": GENERIC_PROFILE,
    "arr": replace(GENERIC_PROFILE, name="arr"),
    "acl": replace(GENERIC_PROFILE, name="acl"),
    "emnlp": replace(GENERIC_PROFILE, name="emnlp"),
    "iclr": replace(GENERIC_PROFILE, name="iclr"),
    "neurips": replace(GENERIC_PROFILE, name="neurips"),
}


@dataclass(frozen=True)
class SegmenterConfig:
    delimiters: tuple[DelimiterPattern, ...] = DEFAULT_DELIMITERS
    min_merge_words: int = 5
    final_min_words: int = 10
    typo_keywords: tuple[str, ...] = DEFAULT_TYPO_KEYWORDS
    post_rebuttal_keywords: tuple[str, ...] = DEFAULT_POST_REBUTTAL_KEYWORDS
    #: fixed bounds; when None the caller computes corpus bounds (or the
    #: length filter stays inert for single-review use)
    length_bounds: LengthBounds | None = None
    venue_profiles: Mapping[str, VenueProfile] = field(
        default_factory=lambda: dict(DEFAULT_VENUE_PROFILES)
    )

    def __post_init__(self):
        if not self.delimiters:
            raise ValueError("delimiter list must not be empty")
        if self.min_merge_words >= self.final_min_words:
            raise ValueError("min_merge_words must be smaller than final_min_words")


def load_segmenter_config(path: str | Path) -> SegmenterConfig:
    """Read a SegmenterConfig from a JSON file; absent keys keep defaults."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", path=path, line=exc.lineno) from None
    kwargs: dict = {}
    if "delimiters" in obj:
        kwargs["delimiters"] = tuple(
            DelimiterPattern(d["name"], d["regex"], bool(d.get("bullet", True)))
            for d in obj["delimiters"]
        )
    for key in ("min_merge_words", "final_min_words"):
        if key in obj:
            kwargs[key] = int(obj[key])
    for key in ("typo_keywords", "post_rebuttal_keywords"):
        if key in obj:
            kwargs[key] = tuple(obj[key])
    if obj.get("length_bounds") is not None:
        lb = obj["length_bounds"]
        kwargs["length_bounds"] = LengthBounds(
            mean=float(lb.get("mean", 0.0)),
            std=float(lb.get("std", 0.0)),
            min_words=float(lb["min_words"]),
            max_words=float(lb["max_words"]),
        )
    return SegmenterConfig(**kwargs)


# ---------------------------------------------------------------------------
# Section extraction


def _normalize_venue(venue: str | None) -> str:
    return (venue or "").strip().lower()


def _normalize_field(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.strip().lower()).strip("_")


def _heading_of(line: str, profile: VenueProfile) -> tuple[str, str] | None:
    """If the line opens a known section, return (kind, inline_rest)."""
    stripped = line.strip().lstrip("#").strip()
    if not stripped:
        return None
    for kind, headings in (("target", profile.target_headings),
                           ("stop", profile.stop_headings)):
        for heading in headings:
            if stripped.lower() == heading or stripped.lower() == heading + ":":
                return kind, ""
            prefix = heading + ":"
            if stripped.lower().startswith(prefix):
                return kind, stripped[len(prefix):].strip()
    return None


def extract_review_sections(
    raw_review: str | Mapping[str, object],
    venue: str | None = None,
    config: SegmenterConfig | None = None,
) -> str:
    """Return the weakness/question/discussion text of one review.

    Structured reviews (dicts of named fields) pass their target fields
    through. Free text is scanned for section headings; summary and
    strengths sections are dropped. A review that simply has no target
    sections yields "" rather than an error. A named venue with no profile
    raises UnknownVenue unless generic headings match; with no venue at
    all, headingless text passes through whole so interactive callers can
    paste bare comment lists.
    """
    config = config or SegmenterConfig()
    profiles = config.venue_profiles
    key = _normalize_venue(venue)
    profile = None
    if key:
        profile = profiles.get(key)
        if profile is None:
            # allow venue strings like "iclr 2024" to hit the "iclr" profile
            for name, candidate in profiles.items():
                if name != "generic" and name in key:
                    profile = candidate
                    break
    named_profile_exists = profile is not None
    profile = profile or profiles.get("generic", GENERIC_PROFILE)

    if isinstance(raw_review, Mapping):
        wanted = tuple(profile.structured_fields) or _STRUCTURED_TARGET_FIELDS
        parts = [
            str(value)
            for field_name, value in raw_review.items()
            if _normalize_field(field_name) in wanted and str(value).strip()
        ]
        return "\n\n".join(parts)

    text = str(raw_review)
    lines = text.split("\n")
    any_heading = False
    inside_target = False
    collected: list[str] = []
    section: list[str] = []

    def flush():
        nonlocal section
        body = "\n".join(section).strip("\n")
        if body.strip():
            collected.append(body)
        section = []

    for line in lines:
        heading = _heading_of(line, profile)
        if heading is not None:
            any_heading = True
            kind, inline_rest = heading
            if inside_target:
                flush()
            inside_target = kind == "target"
            if inside_target and inline_rest:
                section.append(inline_rest)
            continue
        if inside_target:
            section.append(line)
    if inside_target:
        flush()

    if any_heading:
        return "\n\n".join(collected)
    if named_profile_exists:
        # the venue is known but this review has no recognizable sections
        return ""
    if key:
        raise UnknownVenue(f"no profile for venue {venue!r} and no known headings found")
    # no venue given, no headings: treat the whole paste as discussion text
    return text


# ---------------------------------------------------------------------------
# Cleaning, splitting, filtering


def clean_text(text: str) -> str:
    """Normalize whitespace so line-start delimiter matching is reliable."""
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    text = text.replace(" ", " ").replace("\t", " ")
    text = re.sub(r" {2,}", " ", text)
    text = re.sub(r" +\n", "\n", text)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip("\n")


@dataclass
class _Fragment:
    start: int
    end: int
    delimiter: DelimiterPattern | None
    source: str

    @property
    def text(self) -> str:
        return self.source[self.start:self.end].strip()

    @property
    def word_count(self) -> int:
        return len(self.text.split())


#: Drop-report stage keys, in pipeline order.
DROP_STAGES: tuple[str, ...] = (
    "merged",
    "typo_only",
    "non_bullet",
    "post_rebuttal",
    "outside_length_bounds",
    "below_min_words",
)


@dataclass
class DropReport:
    input_fragments: int = 0
    output_comments: int = 0
    stages: dict[str, int] = field(default_factory=lambda: {s: 0 for s in DROP_STAGES})

    def add(self, other: "DropReport") -> None:
        self.input_fragments += other.input_fragments
        self.output_comments += other.output_comments
        for stage, count in other.stages.items():
            self.stages[stage] = self.stages.get(stage, 0) + count

    def to_dict(self) -> dict:
        return {
            "input_fragments": self.input_fragments,
            "output_comments": self.output_comments,
            "stages": dict(self.stages),
        }


def _split_fragments(cleaned: str, config: SegmenterConfig) -> list[_Fragment]:
    compiled = [(d, d.compiled()) for d in config.delimiters]
    fragments: list[_Fragment] = []
    offset = 0
    for line in cleaned.split("\n"):
        stripped = line.lstrip()
        indent = len(line) - len(stripped)
        matched: DelimiterPattern | None = None
        for delim, pattern in compiled:
            if pattern.match(stripped):
                matched = delim
                break
        line_start = offset
        line_end = offset + len(line)
        if matched is not None:
            fragments.append(_Fragment(line_start + indent, line_end, matched, cleaned))
        elif fragments and stripped:
            fragments[-1].end = line_end
        elif stripped:
            fragments.append(_Fragment(line_start + indent, line_end, None, cleaned))
        elif fragments:
            fragments[-1].end = line_end
        offset = line_end + 1
    return [f for f in fragments if f.text]


def _merge_short(fragments: list[_Fragment], config: SegmenterConfig) -> tuple[list[_Fragment], int]:
    """Fold fragments below min_merge_words into a neighbor.

    A short fragment joins the fragment after it (short bullets usually
    introduce the point that follows); a short tail joins the fragment
    before it. The absorbing fragment keeps its own delimiter.
    """
    merged_count = 0
    frags = list(fragments)
    changed = True
    while changed:
        changed = False
        for i, frag in enumerate(frags):
            if frag.word_count >= config.min_merge_words or len(frags) == 1:
                continue
            if i + 1 < len(frags):
                absorber = frags[i + 1]
                absorber.start = frag.start
            else:
                absorber = frags[i - 1]
                absorber.end = frag.end
            frags.pop(i)
            merged_count += 1
            changed = True
            break
    return frags, merged_count


def _strip_token(token: str) -> str:
    return token.strip(".,;:!?()[]{}\"'`*-_/\\|<>").lower()


def _is_typo_only(text: str, config: SegmenterConfig) -> bool:
    """True when nothing of substance remains after removing typo talk.

    Removes the configured typo keywords plus punctuation, numbers and
    location references; fewer than 3 leftover content words means the
    fragment only points at surface fixes.
    """
    keywords = set(config.typo_keywords)
    content = 0
    for raw in text.split():
        token = _strip_token(raw)
        if not token:
            continue
        if token in keywords:
            continue
        if token in _LOCATOR_WORDS:
            continue
        if _NUMBERLIKE.match(token) or _LOCATOR_REF.match(token):
            continue
        content += 1
    return content < 3


def _mentions_post_rebuttal(text: str, config: SegmenterConfig) -> bool:
    lowered = text.lower()
    return any(keyword in lowered for keyword in config.post_rebuttal_keywords)


def _stages_through_six(
    sections: str, config: SegmenterConfig, report: DropReport
) -> list[_Fragment]:
    """Cleaning, splitting, merging and the three content filters."""
    cleaned = clean_text(sections or "")
    if not cleaned:
        return []
    fragments = _split_fragments(cleaned, config)
    report.input_fragments = len(fragments)

    fragments, merged = _merge_short(fragments, config)
    report.stages["merged"] = merged

    kept: list[_Fragment] = []
    for frag in fragments:
        if _is_typo_only(frag.text, config):
            report.stages["typo_only"] += 1
        else:
            kept.append(frag)
    fragments = kept

    kept = []
    for frag in fragments:
        if frag.delimiter is None or not frag.delimiter.bullet:
            report.stages["non_bullet"] += 1
        else:
            kept.append(frag)
    fragments = kept

    kept = []
    for frag in fragments:
        if _mentions_post_rebuttal(frag.text, config):
            report.stages["post_rebuttal"] += 1
        else:
            kept.append(frag)
    return kept


def segment_review(
    sections: str,
    config: SegmenterConfig | None = None,
    bounds: LengthBounds | None = None,
    *,
    review_id: str = "r0",
    venue: str = "",
    year: int = 0,
) -> tuple[list[ReviewComment], DropReport]:
    """Run the full segmentation pipeline over one review's section text.

    ``bounds`` overrides ``config.length_bounds``; with neither set the
    length-bounds stage passes everything through, which is the right
    behavior for single-review interactive use where corpus statistics
    do not exist.
    """
    config = config or SegmenterConfig()
    if bounds is None:
        bounds = config.length_bounds
    report = DropReport()

    fragments = _stages_through_six(sections, config, report)

    if bounds is not None:
        kept = []
        for frag in fragments:
            if not bounds.contains(frag.word_count):
                report.stages["outside_length_bounds"] += 1
            else:
                kept.append(frag)
        fragments = kept

    kept = []
    for frag in fragments:
        if frag.word_count < config.final_min_words:
            report.stages["below_min_words"] += 1
        else:
            kept.append(frag)
    fragments = kept

    comments = [
        ReviewComment(
            id=f"{review_id}:c{idx}",
            review_id=review_id,
            venue=venue,
            year=year,
            position=idx,
            text=frag.text,
        )
        for idx, frag in enumerate(fragments)
    ]
    report.output_comments = len(comments)
    return comments, report


def survivor_word_counts(sections: str, config: SegmenterConfig | None = None) -> list[int]:
    """Word counts of the fragments that reach the length-bounds stage.

    This is the population the corpus statistics are computed over: what
    is left after stages 1..6, before any length filtering.
    """
    config = config or SegmenterConfig()
    fragments = _stages_through_six(sections, config, DropReport())
    return [f.word_count for f in fragments]


@dataclass(frozen=True)
class RawReview:
    """One input review before segmentation."""

    review_id: str
    venue: str = ""
    year: int = 0
    text: str | None = None
    sections: Mapping[str, str] | None = None


def review_from_dict(obj: dict, *, path: str | Path | None = None,
                     line: int | None = None) -> RawReview:
    try:
        review_id = str(obj["review_id"])
    except KeyError:
        raise ParseError("missing field 'review_id'", path=path, line=line) from None
    text = obj.get("text")
    sections = obj.get("sections")
    if text is None and sections is None:
        raise ParseError("review needs either 'text' or 'sections'", path=path, line=line)
    if sections is not None and not isinstance(sections, dict):
        raise ParseError("'sections' must be an object of named fields", path=path, line=line)
    return RawReview(
        review_id=review_id,
        venue=str(obj.get("venue", "") or ""),
        year=int(obj.get("year", 0) or 0),
        text=str(text) if text is not None else None,
        sections=sections,
    )


def load_reviews(path: str | Path) -> list[RawReview]:
    reviews = []
    seen: set[str] = set()
    for lineno, obj in iter_jsonl(path):
        review = review_from_dict(obj, path=path, line=lineno)
        if review.review_id in seen:
            raise ParseError(f"duplicate review_id {review.review_id!r}", path=path, line=lineno)
        seen.add(review.review_id)
        reviews.append(review)
    return reviews


@dataclass
class CorpusSegmentation:
    comments: list[ReviewComment]
    drop_report: DropReport
    bounds: LengthBounds | None


def segment_corpus(
    reviews: Iterable[RawReview],
    config: SegmenterConfig | None = None,
) -> CorpusSegmentation:
    """Segment many reviews with corpus-level length bounds.

    Bounds come from the config when fixed there; otherwise they are the
    population statistics of every fragment that survives stages 1..6
    across the whole corpus, matching the single global mean/std the
    pipeline is defined against.
    """
    config = config or SegmenterConfig()
    reviews = list(reviews)
    section_texts: list[str] = []
    for review in reviews:
        source = review.sections if review.sections is not None else review.text or ""
        section_texts.append(extract_review_sections(source, review.venue, config))

    bounds = config.length_bounds
    if bounds is None:
        counts: list[int] = []
        for text in section_texts:
            counts.extend(survivor_word_counts(text, config))
        if len(counts) >= 2:
            bounds = compute_length_bounds(counts)

    total = DropReport()
    comments: list[ReviewComment] = []
    for review, text in zip(reviews, section_texts):
        review_comments, report = segment_review(
            text, config, bounds,
            review_id=review.review_id, venue=review.venue, year=review.year,
        )
        comments.extend(review_comments)
        total.add(report)
    return CorpusSegmentation(comments=comments, drop_report=total, bounds=bounds)
