"""Utility scoring for peer-review comments.

The package segments raw reviews into self-contained comment units, scores
each unit on four utility aspects (actionability, grounding and
specificity, verifiability, helpfulness) through a pluggable LLM backend,
and aggregates labels into agreement and comparison reports. A small HTTP
service plus CLI wire the pieces into a paste-assess-revise loop.
"""

from .model import (
    ASPECT_TITLES,
    ASPECTS,
    NO_CLAIM,
    AgreementClass,
    AgreementLevel,
    AnnotationMode,
    AnnotationRecord,
    AnnotationSet,
    Aspect,
    AspectLabel,
    PeerGaugeError,
    ReviewComment,
    classify_agreement,
    validate_label,
)

__version__ = "0.1.0"

__all__ = [
    "ASPECT_TITLES",
    "ASPECTS",
    "NO_CLAIM",
    "AgreementClass",
    "AgreementLevel",
    "AnnotationMode",
    "AnnotationRecord",
    "AnnotationSet",
    "Aspect",
    "AspectLabel",
    "PeerGaugeError",
    "ReviewComment",
    "classify_agreement",
    "validate_label",
    "__version__",
]
