"""Loading of the bundled aspect rubrics.

Each aspect ships as a directory of plain-text resources: one ``preamble.txt``
holding the aspect definition and one file per label descriptor (``1.txt`` ..
``5.txt``, plus ``X.txt`` for verifiability). Keeping them as files rather
than string literals makes them auditable and diffable on their own.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping

from ..model import ASPECTS, NO_CLAIM, Aspect, AspectLabel, PeerGaugeError

__all__ = [
    "MissingRubric",
    "RubricText",
    "load_all_rubrics",
    "load_rubric",
    "rubric_labels",
]


class MissingRubric(PeerGaugeError):
    """A rubric resource file is absent or unreadable."""


def rubric_labels(aspect: Aspect) -> tuple[AspectLabel, ...]:
    """Labels an aspect's rubric must describe, in presentation order."""
    scores = tuple(AspectLabel(i) for i in range(1, 6))
    if aspect is Aspect.VERIFIABILITY:
        return scores + (NO_CLAIM,)
    return scores


@dataclass(frozen=True)
class RubricText:
    """One aspect's rubric: the definition preamble plus its label descriptors."""

    aspect: Aspect
    preamble: str
    label_descriptors: Mapping[AspectLabel, str]

    def __post_init__(self):
        expected = rubric_labels(self.aspect)
        if tuple(self.label_descriptors) != expected:
            have = ", ".join(str(label) for label in self.label_descriptors)
            raise MissingRubric(
                f"{self.aspect} rubric must describe labels "
                f"{', '.join(map(str, expected))} in order, got: {have}"
            )
        if not self.preamble.strip():
            raise MissingRubric(f"{self.aspect} rubric preamble is empty")
        for label, text in self.label_descriptors.items():
            if not text.strip():
                raise MissingRubric(f"{self.aspect} descriptor for {label} is empty")

    def descriptor_block(self) -> str:
        """All label descriptors joined into one prompt-ready block."""
        return "\n\n".join(self.label_descriptors.values())


def _read_resource(aspect: Aspect, filename: str) -> str:
    root = resources.files(__package__) / "resources" / aspect.value
    try:
        return (root / filename).read_text(encoding="utf-8").strip()
    except (FileNotFoundError, NotADirectoryError):
        raise MissingRubric(f"missing rubric resource {aspect.value}/{filename}") from None


@lru_cache(maxsize=None)
def load_rubric(aspect: Aspect) -> RubricText:
    """Load one aspect's rubric from the bundled resource files.

    Results are cached; the files are read at most once per process.

    Raises:
        MissingRubric: if any resource file for the aspect is absent or empty.
    """
    aspect = Aspect(aspect)
    descriptors = {
        label: _read_resource(aspect, f"{label}.txt") for label in rubric_labels(aspect)
    }
    return RubricText(
        aspect=aspect,
        preamble=_read_resource(aspect, "preamble.txt"),
        label_descriptors=descriptors,
    )


def load_all_rubrics() -> dict[Aspect, RubricText]:
    """Load every aspect's rubric, failing fast if any resource is missing."""
    return {aspect: load_rubric(aspect) for aspect in ASPECTS}
