"""Seed example pools and deterministic in-context example sampling.

Pools live on disk as JSONL, one ``{"text", "label", "rationale"}`` object per
line. A scoring pool carries the labels 1..5 for its aspect; a claim-detection
pool carries the binary labels "Claim" and "No Claim". Prompts draw five
examples per label, so scoring prompts get 25 examples and claim detection
gets 10.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping

from ..model import (
    Aspect,
    ParseError,
    PeerGaugeError,
    RejectedLabel,
    iter_jsonl,
    validate_label,
)

__all__ = [
    "CLAIM",
    "CLAIM_LABELS",
    "EXAMPLES_PER_LABEL",
    "ExamplePool",
    "NO_CLAIM_TEXT",
    "PoolTooSmall",
    "PromptTask",
    "SeedExample",
    "derive_seed",
    "load_example_pool",
    "sample_incontext_examples",
]


class PoolTooSmall(PeerGaugeError):
    """A pool label has fewer seed examples than a prompt needs."""


class PromptTask(str, Enum):
    """What a prompt asks the model to do with a review point."""

    SCORING = "scoring"
    CLAIM_DETECTION = "claim_detection"

    def __str__(self) -> str:
        return self.value


#: Binary labels for the claim-detection task, in sampling order.
CLAIM = "Claim"
NO_CLAIM_TEXT = "No Claim"
CLAIM_LABELS: tuple[str, str] = (CLAIM, NO_CLAIM_TEXT)

#: How many examples each label contributes to a prompt.
EXAMPLES_PER_LABEL = 5

_SCORE_LABELS: tuple[str, ...] = ("1", "2", "3", "4", "5")


def task_labels(task: PromptTask) -> tuple[str, ...]:
    """Label keys a pool must cover for a task, in ascending prompt order."""
    return _SCORE_LABELS if task is PromptTask.SCORING else CLAIM_LABELS


@dataclass(frozen=True)
class SeedExample:
    """One hand-labeled example: review point text, label, and rationale."""

    text: str
    label: str
    rationale: str


@dataclass(frozen=True)
class ExamplePool:
    """Seed examples for one aspect and task, grouped by label."""

    aspect: Aspect
    task: PromptTask
    by_label: Mapping[str, tuple[SeedExample, ...]]

    def __post_init__(self):
        valid = set(task_labels(self.task))
        stray = [label for label in self.by_label if label not in valid]
        if stray:
            raise RejectedLabel(
                f"pool for {self.aspect}/{self.task} holds labels outside "
                f"{sorted(valid)}: {stray}"
            )

    def size(self) -> int:
        return sum(len(seeds) for seeds in self.by_label.values())


def _normalize_label(aspect: Aspect, task: PromptTask, raw: object) -> str:
    if task is PromptTask.CLAIM_DETECTION:
        token = str(raw).strip()
        for known in CLAIM_LABELS:
            if token.lower() == known.lower():
                return known
        raise RejectedLabel(
            f"claim-detection label must be one of {CLAIM_LABELS}, got {raw!r}"
        )
    label = validate_label(aspect, raw)  # type: ignore[arg-type]
    if label.no_claim:
        raise RejectedLabel(
            'scoring pools hold the labels 1..5; "X" examples belong to the '
            "claim-detection pool"
        )
    return label.as_str()


def load_example_pool(
    path: str | Path,
    aspect: Aspect,
    task: PromptTask = PromptTask.SCORING,
) -> ExamplePool:
    """Read a seed example pool from JSONL.

    Every record needs non-empty "text" and "rationale" fields and a "label"
    valid for the task (1..5 for scoring, Claim / No Claim for detection).

    Raises:
        ParseError: on malformed lines, bad labels, or empty fields.
    """
    aspect = Aspect(aspect)
    task = PromptTask(task)
    grouped: dict[str, list[SeedExample]] = {label: [] for label in task_labels(task)}
    for lineno, obj in iter_jsonl(path):
        missing = [field for field in ("text", "label", "rationale") if field not in obj]
        if missing:
            raise ParseError(f"example missing fields {missing}", path=path, line=lineno)
        text = str(obj["text"]).strip()
        rationale = str(obj["rationale"]).strip()
        if not text:
            raise ParseError("example text is empty", path=path, line=lineno)
        if not rationale:
            raise ParseError("example rationale is empty", path=path, line=lineno)
        try:
            label = _normalize_label(aspect, task, obj["label"])
        except RejectedLabel as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
        grouped[label].append(SeedExample(text=text, label=label, rationale=rationale))
    return ExamplePool(
        aspect=aspect,
        task=task,
        by_label={label: tuple(seeds) for label, seeds in grouped.items()},
    )


def sample_incontext_examples(
    pool: ExamplePool,
    rng_seed: int,
    task: PromptTask = PromptTask.SCORING,
) -> list[SeedExample]:
    """Draw the in-context examples for one prompt, deterministically.

    Five examples per label, without replacement, so 25 in total for scoring
    and 10 for claim detection. The returned list is ordered by ascending
    label, then by sampled order within the label. The same pool and seed
    always produce the same list.

    Raises:
        PoolTooSmall: if any label has fewer than five seed examples.
    """
    task = PromptTask(task)
    if task is not pool.task:
        raise ValueError(f"pool was loaded for {pool.task}, asked to sample for {task}")
    rng = random.Random(rng_seed)
    chosen: list[SeedExample] = []
    for label in task_labels(task):
        seeds = pool.by_label.get(label, ())
        if len(seeds) < EXAMPLES_PER_LABEL:
            raise PoolTooSmall(
                f"{pool.aspect}/{task} pool has {len(seeds)} seeds for label "
                f"{label!r}, needs {EXAMPLES_PER_LABEL}"
            )
        chosen.extend(rng.sample(list(seeds), EXAMPLES_PER_LABEL))
    return chosen


def derive_seed(base_seed: int, *parts: object) -> int:
    """Mix a base seed with identifying strings into a per-call RNG seed.

    Uses sha256 rather than hash() so the result is stable across processes.
    """
    material = "\x1f".join([str(base_seed), *[str(part) for part in parts]])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
