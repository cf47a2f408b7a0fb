"""Prompt assembly for the two scoring shapes plus claim detection.

Two prompt families exist. The single-aspect shape frames one rubric with 25
in-context examples and asks for that aspect's score alone; verifiability
additionally gets a binary claim-detection prompt of the same shape with 10
examples. The multi-aspect shape is an Alpaca-style instruction prompt that
carries all four rubrics and asks for every score in one JSON object.

Rendering is pure: the same inputs always produce byte-identical text, which
the snapshot tests rely on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from ..model import (
    ASPECT_TITLES,
    ASPECTS,
    AnnotationMode,
    Aspect,
    PeerGaugeError,
    RejectedLabel,
    ReviewComment,
    validate_label,
)
from .examples import CLAIM_LABELS, PromptTask, SeedExample
from .texts import load_all_rubrics, load_rubric

__all__ = [
    "AspectMismatch",
    "MULTI_ASPECT_PREAMBLE",
    "PromptBundle",
    "PromptMode",
    "UTILITY_PREAMBLE",
    "build_claim_detection_prompt",
    "build_multi_aspect_prompt",
    "build_single_aspect_prompt",
    "claim_detection_schema",
    "multi_aspect_schema",
    "single_aspect_schema",
]


class AspectMismatch(PeerGaugeError):
    """An in-context example carries a label that is invalid for the prompt."""


class PromptMode(str, Enum):
    SINGLE_ASPECT = "single"
    MULTI_ASPECT = "multi"

    def __str__(self) -> str:
        return self.value


#: Shared framing for the single-aspect prompts.
UTILITY_PREAMBLE = (
    "This aspect is aimed to maximize the utilization of the review comments "
    "for the authors. The primary purpose of the review is to help/guide "
    "authors in improving their drafts. Keep this in mind while evaluating "
    'the review point. Whenever you encounter a borderline case, think: "Will '
    'this review point help authors improve their draft?". There is no '
    "correlation between the aspect score and the length of the review point."
)

#: Task description heading the multi-aspect instruction prompt.
MULTI_ASPECT_PREAMBLE = (
    "You are an expert in evaluating peer review comments with respect to "
    "different aspects. These aspects are aimed to maximize the utilization "
    "of the review comments for the authors. The primary purpose of the "
    "review is to help/guide authors in improving their drafts. Keep this in "
    "mind while evaluating the review point. Whenever you encounter a "
    'borderline case, think: "Will this review point help authors improve '
    'their draft?". There is no correlation between the aspect score and the '
    "length of the review point."
)

_ESCAPE_NOTE = "Escape the double quotes inside the rationale."


@dataclass(frozen=True)
class PromptBundle:
    """A rendered prompt plus the output keys its response must contain."""

    mode: PromptMode
    score_mode: AnnotationMode
    rendered_text: str
    expected_output_schema: tuple[str, ...]
    aspect: Aspect | None = None
    task: PromptTask = PromptTask.SCORING

    def __post_init__(self):
        if self.score_mode is AnnotationMode.HUMAN:
            raise ValueError("prompts are built for model scoring modes only")


def _check_score_mode(score_mode: AnnotationMode) -> AnnotationMode:
    score_mode = AnnotationMode(score_mode)
    if score_mode is AnnotationMode.HUMAN:
        raise ValueError("prompts are built for model scoring modes only")
    return score_mode


def single_aspect_schema(aspect: Aspect, score_mode: AnnotationMode) -> tuple[str, ...]:
    """Output keys a single-aspect scoring response must provide."""
    if score_mode is AnnotationMode.SCORE_ONLY:
        return (f"{aspect.value}_label",)
    return (f"{aspect.value}_rationale", f"{aspect.value}_label")


def claim_detection_schema(score_mode: AnnotationMode) -> tuple[str, ...]:
    """Output keys a claim-detection response must provide."""
    if score_mode is AnnotationMode.SCORE_ONLY:
        return ("claim_label",)
    return ("claim_rationale", "claim_label")


def multi_aspect_schema(score_mode: AnnotationMode) -> tuple[str, ...]:
    """Output keys of the multi-aspect JSON object, in skeleton order."""
    keys: list[str] = []
    for aspect in ASPECTS:
        if score_mode is AnnotationMode.SCORE_WITH_RATIONALE:
            keys.append(f"{aspect.value}_rationale")
        keys.append(f"{aspect.value}_label")
    return tuple(keys)


def _render_example(schema: tuple[str, ...], example: SeedExample) -> str:
    values = {
        key: example.rationale if key.endswith("_rationale") else example.label
        for key in schema
    }
    payload = ", ".join(f'"{key}": {json.dumps(values[key])}' for key in schema)
    return f"Review Point: {example.text}\nOutput: {{{payload}}}"


def _schema_instruction(schema: tuple[str, ...]) -> str:
    quoted = [f'"{key}"' for key in schema]
    if len(quoted) == 1:
        return f"Respond with a JSON object holding the key {quoted[0]}."
    return f"Respond with a JSON object holding the keys {' and '.join(quoted)}."


def build_single_aspect_prompt(
    aspect: Aspect,
    comment: ReviewComment,
    examples: list[SeedExample],
    score_mode: AnnotationMode = AnnotationMode.SCORE_WITH_RATIONALE,
) -> PromptBundle:
    """Render the single-aspect scoring prompt for one review comment.

    The prompt carries the utility preamble, the aspect's rubric, the
    in-context examples in the order given, and the review point last.

    Raises:
        AspectMismatch: if any example label is invalid for the aspect.
        MissingRubric: if the aspect's rubric resources are absent.
    """
    aspect = Aspect(aspect)
    score_mode = _check_score_mode(score_mode)
    for example in examples:
        try:
            label = validate_label(aspect, example.label)
        except RejectedLabel as exc:
            raise AspectMismatch(f"example label {example.label!r}: {exc}") from None
        if label.no_claim:
            raise AspectMismatch(
                'scoring prompts take labels 1..5; route "X" examples to the '
                "claim-detection prompt"
            )
    rubric = load_rubric(aspect)
    schema = single_aspect_schema(aspect, score_mode)
    if score_mode is AnnotationMode.SCORE_WITH_RATIONALE:
        instruction = (
            "Generate a rationale and use it to output the score. "
            f"{_schema_instruction(schema)} {_ESCAPE_NOTE}"
        )
    else:
        instruction = f"Output the score. {_schema_instruction(schema)}"
    blocks = [
        UTILITY_PREAMBLE,
        "Evaluate the review point based on the aspect description provided next.",
        ASPECT_TITLES[aspect],
        rubric.preamble,
        rubric.descriptor_block(),
        instruction,
        *(_render_example(schema, example) for example in examples),
        f"Review Point: {comment.text}",
    ]
    return PromptBundle(
        mode=PromptMode.SINGLE_ASPECT,
        score_mode=score_mode,
        rendered_text="\n\n".join(blocks),
        expected_output_schema=schema,
        aspect=aspect,
        task=PromptTask.SCORING,
    )


def build_claim_detection_prompt(
    comment: ReviewComment,
    examples: list[SeedExample],
    score_mode: AnnotationMode = AnnotationMode.SCORE_WITH_RATIONALE,
) -> PromptBundle:
    """Render the binary claim-detection prompt for one review comment.

    Reuses the verifiability rubric preamble, whose claim and no-claim
    definitions drive the decision. Only the scoring template has a published
    wording; this detection variant mirrors its shape and should be treated
    as this toolkit's own reconstruction.

    Raises:
        AspectMismatch: if any example label is not "Claim" or "No Claim".
    """
    score_mode = _check_score_mode(score_mode)
    for example in examples:
        if example.label not in CLAIM_LABELS:
            raise AspectMismatch(
                f"claim-detection example label must be one of {CLAIM_LABELS}, "
                f"got {example.label!r}"
            )
    rubric = load_rubric(Aspect.VERIFIABILITY)
    schema = claim_detection_schema(score_mode)
    label_options = " or ".join(f'"{label}"' for label in CLAIM_LABELS)
    if score_mode is AnnotationMode.SCORE_WITH_RATIONALE:
        instruction = (
            f"Generate a rationale and use it to output the label {label_options}. "
            f"{_schema_instruction(schema)} {_ESCAPE_NOTE}"
        )
    else:
        instruction = f"Output the label {label_options}. {_schema_instruction(schema)}"
    blocks = [
        UTILITY_PREAMBLE,
        "Decide whether the review point contains a claim, based on the "
        "description provided next.",
        "Claim Detection",
        rubric.preamble,
        instruction,
        *(_render_example(schema, example) for example in examples),
        f"Review Point: {comment.text}",
    ]
    return PromptBundle(
        mode=PromptMode.SINGLE_ASPECT,
        score_mode=score_mode,
        rendered_text="\n\n".join(blocks),
        expected_output_schema=schema,
        aspect=Aspect.VERIFIABILITY,
        task=PromptTask.CLAIM_DETECTION,
    )


def _output_skeleton(schema: tuple[str, ...]) -> str:
    lines = []
    for key in schema:
        placeholder = key.replace("_", " ").upper()
        lines.append(f'  "{key}": "[{placeholder}]",')
    lines[-1] = lines[-1].rstrip(",")
    return "{\n" + "\n".join(lines) + "\n}"


def build_multi_aspect_prompt(
    comment: ReviewComment,
    score_mode: AnnotationMode = AnnotationMode.SCORE_WITH_RATIONALE,
) -> PromptBundle:
    """Render the instruction prompt that scores all four aspects at once.

    Raises:
        MissingRubric: if any aspect's rubric resources are absent.
    """
    score_mode = _check_score_mode(score_mode)
    rubrics = load_all_rubrics()
    schema = multi_aspect_schema(score_mode)
    if score_mode is AnnotationMode.SCORE_WITH_RATIONALE:
        instruction = (
            "Evaluate the review based on the given definitions of the "
            "aspect(s) above. Generate a rationale and use it to output the "
            f"score. {_ESCAPE_NOTE}"
        )
    else:
        instruction = (
            "Evaluate the review based on the given definitions of the "
            "aspect(s) above. Output the score."
        )
    blocks = [f"###Task Description:\n{MULTI_ASPECT_PREAMBLE}"]
    for aspect in ASPECTS:
        rubric = rubrics[aspect]
        blocks.append(f"Aspect: {ASPECT_TITLES[aspect]}")
        blocks.append(rubric.preamble)
        blocks.append(rubric.descriptor_block())
    blocks.append(f"###Instruction:\n{instruction}")
    blocks.append(f"###Review Point: {comment.text}")
    blocks.append(f"###Output: {_output_skeleton(schema)}")
    return PromptBundle(
        mode=PromptMode.MULTI_ASPECT,
        score_mode=score_mode,
        rendered_text="\n\n".join(blocks),
        expected_output_schema=schema,
        aspect=None,
        task=PromptTask.SCORING,
    )
