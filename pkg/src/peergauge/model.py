"""Core data model: aspects, labels, review comments, annotations, agreement classes.

Everything here is immutable after construction and safe to share across
threads. File loading is line-oriented JSONL with hard validation: a bad
label or a duplicated annotation key is an error, never a silent fixup.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence


class PeerGaugeError(Exception):
    """Base class for every error this package raises on purpose."""


class RejectedLabel(PeerGaugeError):
    """A raw label token is not valid for the aspect it was given with."""


class ArityError(PeerGaugeError):
    """An operation got the wrong number of labels."""


class DuplicateKey(PeerGaugeError):
    """A (comment_id, annotator_id, aspect) triple appeared twice."""


class ParseError(PeerGaugeError):
    """Malformed input data. Message always names the file and line."""

    def __init__(self, message: str, path: str | Path | None = None,
                 line: int | None = None):
        self.path = str(path) if path is not None else None
        self.line = line
        where = ""
        if self.path is not None:
            where = f"{self.path}:{line}: " if line is not None else f"{self.path}: "
        super().__init__(where + message)


class Aspect(str, Enum):
    """The four utility aspects a review comment is scored on."""

    ACTIONABILITY = "actionability"
    GROUNDING_SPECIFICITY = "grounding_specificity"
    VERIFIABILITY = "verifiability"
    HELPFULNESS = "helpfulness"

    def __str__(self) -> str:  # so f-strings render the wire name
        return self.value


#: Canonical aspect order, used everywhere a stable ordering matters.
ASPECTS: tuple[Aspect, ...] = (
    Aspect.ACTIONABILITY,
    Aspect.GROUNDING_SPECIFICITY,
    Aspect.VERIFIABILITY,
    Aspect.HELPFULNESS,
)

#: Human-facing aspect names for prompts and report headers.
ASPECT_TITLES: dict[Aspect, str] = {
    Aspect.ACTIONABILITY: "Actionability",
    Aspect.GROUNDING_SPECIFICITY: "Grounding & Specificity",
    Aspect.VERIFIABILITY: "Verifiability",
    Aspect.HELPFULNESS: "Helpfulness",
}


@dataclass(frozen=True)
class AspectLabel:
    """One rubric label: an ordinal score in 1..5, or the claim-free sentinel.

    The sentinel ("X" on the wire) is stored as ``score=None`` so downstream
    code can never do arithmetic on it by accident. Construct ordinals with
    ``AspectLabel(3)`` and the sentinel via the ``NO_CLAIM`` constant.
    """

    score: int | None

    def __post_init__(self):
        if self.score is None:
            return
        if not isinstance(self.score, int) or isinstance(self.score, bool):
            raise RejectedLabel(f"ordinal label must be an int, got {self.score!r}")
        if not 1 <= self.score <= 5:
            raise RejectedLabel(f"ordinal label out of range 1..5: {self.score}")

    @property
    def no_claim(self) -> bool:
        return self.score is None

    def as_str(self) -> str:
        """Wire form: "1".."5" or "X"."""
        return "X" if self.score is None else str(self.score)

    def __str__(self) -> str:
        return self.as_str()


#: The claim-free Verifiability label.
NO_CLAIM = AspectLabel(None)


def validate_label(aspect: Aspect, raw: str | int | float) -> AspectLabel:
    """Turn a raw label token into an AspectLabel, or raise RejectedLabel.

    Accepts "1".."5" (or the equivalent ints) for every aspect and the
    sentinel "X" (case-insensitive) for Verifiability only. Integral floats
    such as 4.0 are tolerated because JSON-emitting models produce them.
    """
    if isinstance(raw, bool):
        raise RejectedLabel(f"label must be a score token, got {raw!r}")
    if isinstance(raw, float):
        if not raw.is_integer():
            raise RejectedLabel(f"fractional label rejected: {raw!r}")
        raw = int(raw)
    if isinstance(raw, int):
        token = str(raw)
    else:
        token = str(raw).strip()
    if token.upper() == "X":
        if aspect is Aspect.VERIFIABILITY:
            return NO_CLAIM
        raise RejectedLabel(f'"X" is only a {Aspect.VERIFIABILITY} label, not valid for {aspect}')
    try:
        score = int(token)
    except ValueError:
        raise RejectedLabel(f"label is neither 1..5 nor X: {token!r}") from None
    if not 1 <= score <= 5:
        raise RejectedLabel(f"label out of range 1..5: {score}")
    return AspectLabel(score)


class AnnotationMode(str, Enum):
    """How a label was produced: model score-only, model score+rationale, or human."""

    SCORE_ONLY = "score"
    SCORE_WITH_RATIONALE = "score_rationale"
    HUMAN = "human"

    def __str__(self) -> str:
        return self.value


class AgreementLevel(str, Enum):
    FULL = "full"
    MAJORITY = "majority"
    LOW = "low"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class AgreementClass:
    """How three annotators' labels for one item relate.

    ``majority_label`` is present for Full (all three equal) and Majority
    (exactly two equal) and absent for Low (all pairwise distinct).
    """

    level: AgreementLevel
    majority_label: AspectLabel | None

    @property
    def has_majority(self) -> bool:
        return self.majority_label is not None


def classify_agreement(labels: Sequence[AspectLabel]) -> AgreementClass:
    """Partition a triple of labels into Full / Majority / Low agreement.

    The claim-free sentinel counts as one more category for equality, so
    (X, X, 3) is a Majority item with majority label X.
    """
    if len(labels) != 3:
        raise ArityError(f"classify_agreement needs exactly 3 labels, got {len(labels)}")
    counts = Counter(label.as_str() for label in labels)
    token, n = counts.most_common(1)[0]
    if n == 3:
        return AgreementClass(AgreementLevel.FULL, labels[0])
    if n == 2:
        majority = next(l for l in labels if l.as_str() == token)
        return AgreementClass(AgreementLevel.MAJORITY, majority)
    return AgreementClass(AgreementLevel.LOW, None)


@dataclass(frozen=True)
class ReviewComment:
    """One segmented review point, the unit everything downstream scores."""

    id: str
    review_id: str
    venue: str
    year: int
    position: int
    text: str

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ParseError(f"comment {self.id!r} has empty text")
        if self.position < 0:
            raise ParseError(f"comment {self.id!r} has negative position {self.position}")

    @property
    def word_count(self) -> int:
        """Whitespace-token count of the comment text."""
        return len(self.text.split())


@dataclass(frozen=True)
class AnnotationRecord:
    """One label assigned to one comment by one annotator for one aspect."""

    comment_id: str
    annotator_id: str
    aspect: Aspect
    label: AspectLabel
    rationale: str | None
    mode: AnnotationMode

    @property
    def key(self) -> tuple[str, str, Aspect]:
        return (self.comment_id, self.annotator_id, self.aspect)


class AnnotationSet:
    """A validated collection of annotation records with simple tallies."""

    def __init__(self, records: Sequence[AnnotationRecord]):
        self.records: tuple[AnnotationRecord, ...] = tuple(records)
        self.counts_by_aspect: Counter = Counter(r.aspect for r in self.records)
        self.counts_by_annotator: Counter = Counter(r.annotator_id for r in self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[AnnotationRecord]:
        return iter(self.records)

    def annotators(self) -> list[str]:
        return sorted(self.counts_by_annotator)

    def by_item(self) -> dict[tuple[str, Aspect], dict[str, AnnotationRecord]]:
        """Group records as {(comment_id, aspect): {annotator_id: record}}."""
        grouped: dict[tuple[str, Aspect], dict[str, AnnotationRecord]] = {}
        for r in self.records:
            grouped.setdefault((r.comment_id, r.aspect), {})[r.annotator_id] = r
        return grouped


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, object) for each non-blank line of a JSONL file."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", path=path, line=lineno) from None
            if not isinstance(obj, dict):
                raise ParseError("each line must be a JSON object", path=path, line=lineno)
            yield lineno, obj


def write_jsonl(path: str | Path, objects: Iterable[dict]) -> int:
    """Write objects one per line; returns the number of lines written."""
    path = Path(path)
    n = 0
    with path.open("w", encoding="utf-8") as fh:
        for obj in objects:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
            n += 1
    return n


def annotation_from_dict(obj: dict, *, path: str | Path | None = None,
                         line: int | None = None) -> AnnotationRecord:
    """Build an AnnotationRecord from its wire dict, validating every field."""
    try:
        aspect = Aspect(obj["aspect"])
        mode = AnnotationMode(obj["mode"])
        label = validate_label(aspect, obj["label"])
        rationale = obj.get("rationale")
        if rationale is not None and not isinstance(rationale, str):
            raise ParseError("rationale must be a string or null", path=path, line=line)
        return AnnotationRecord(
            comment_id=str(obj["comment_id"]),
            annotator_id=str(obj["annotator_id"]),
            aspect=aspect,
            label=label,
            rationale=rationale,
            mode=mode,
        )
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}", path=path, line=line) from None
    except ValueError as exc:
        raise ParseError(str(exc), path=path, line=line) from None
    except RejectedLabel as exc:
        raise ParseError(str(exc), path=path, line=line) from None


def annotation_to_dict(record: AnnotationRecord) -> dict:
    return {
        "comment_id": record.comment_id,
        "annotator_id": record.annotator_id,
        "aspect": record.aspect.value,
        "label": record.label.as_str(),
        "rationale": record.rationale,
        "mode": record.mode.value,
    }


def load_annotations(path: str | Path) -> AnnotationSet:
    """Load an annotation JSONL file.

    Duplicate (comment_id, annotator_id, aspect) triples are hard errors:
    a silent overwrite would corrupt every agreement statistic computed on
    top of the data.
    """
    records: list[AnnotationRecord] = []
    seen: set[tuple[str, str, Aspect]] = set()
    for lineno, obj in iter_jsonl(path):
        record = annotation_from_dict(obj, path=path, line=lineno)
        if record.key in seen:
            raise DuplicateKey(
                f"{path}:{lineno}: duplicate annotation for "
                f"(comment={record.comment_id!r}, annotator={record.annotator_id!r}, "
                f"aspect={record.aspect})"
            )
        seen.add(record.key)
        records.append(record)
    return AnnotationSet(records)


def comment_from_dict(obj: dict, *, path: str | Path | None = None,
                      line: int | None = None) -> ReviewComment:
    try:
        return ReviewComment(
            id=str(obj["id"]),
            review_id=str(obj["review_id"]),
            venue=str(obj.get("venue", "")),
            year=int(obj.get("year", 0)),
            position=int(obj["position"]),
            text=str(obj["text"]),
        )
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}", path=path, line=line) from None
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), path=path, line=line) from None


def comment_to_dict(comment: ReviewComment) -> dict:
    return {
        "id": comment.id,
        "review_id": comment.review_id,
        "venue": comment.venue,
        "year": comment.year,
        "position": comment.position,
        "text": comment.text,
    }


def load_comments(path: str | Path) -> list[ReviewComment]:
    """Load a comment JSONL file, rejecting duplicate ids and positions."""
    comments: list[ReviewComment] = []
    seen_ids: set[str] = set()
    seen_positions: set[tuple[str, int]] = set()
    for lineno, obj in iter_jsonl(path):
        comment = comment_from_dict(obj, path=path, line=lineno)
        if comment.id in seen_ids:
            raise DuplicateKey(f"{path}:{lineno}: duplicate comment id {comment.id!r}")
        pos_key = (comment.review_id, comment.position)
        if pos_key in seen_positions:
            raise DuplicateKey(
                f"{path}:{lineno}: duplicate position {comment.position} "
                f"within review {comment.review_id!r}"
            )
        seen_ids.add(comment.id)
        seen_positions.add(pos_key)
        comments.append(comment)
    return comments
