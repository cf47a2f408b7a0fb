"""Aspect rubrics, seed example pools, and prompt assembly."""

from .examples import (
    CLAIM,
    CLAIM_LABELS,
    EXAMPLES_PER_LABEL,
    ExamplePool,
    NO_CLAIM_TEXT,
    PoolTooSmall,
    PromptTask,
    SeedExample,
    derive_seed,
    load_example_pool,
    sample_incontext_examples,
)
from .prompts import (
    AspectMismatch,
    MULTI_ASPECT_PREAMBLE,
    PromptBundle,
    PromptMode,
    UTILITY_PREAMBLE,
    build_claim_detection_prompt,
    build_multi_aspect_prompt,
    build_single_aspect_prompt,
    claim_detection_schema,
    multi_aspect_schema,
    single_aspect_schema,
)
from .texts import MissingRubric, RubricText, load_all_rubrics, load_rubric, rubric_labels

__all__ = [
    "AspectMismatch",
    "CLAIM",
    "CLAIM_LABELS",
    "EXAMPLES_PER_LABEL",
    "ExamplePool",
    "MULTI_ASPECT_PREAMBLE",
    "MissingRubric",
    "NO_CLAIM_TEXT",
    "PoolTooSmall",
    "PromptBundle",
    "PromptMode",
    "PromptTask",
    "RubricText",
    "SeedExample",
    "UTILITY_PREAMBLE",
    "build_claim_detection_prompt",
    "build_multi_aspect_prompt",
    "build_single_aspect_prompt",
    "claim_detection_schema",
    "derive_seed",
    "load_all_rubrics",
    "load_example_pool",
    "load_rubric",
    "multi_aspect_schema",
    "sample_incontext_examples",
    "single_aspect_schema",
]
