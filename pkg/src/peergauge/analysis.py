"""Dataset-level reports built on the agreement metrics.

Five reports live here: inter-annotator agreement over triple-annotated
comments, model-vs-human agreement, a human-vs-LLM utility comparison,
rationale similarity split by score correctness, and the aspect correlation
matrix. Each report is a pure function of its inputs and serializes both to
JSON and to aligned-column text.

Verifiability is the special case throughout. Its claim/no-claim split is
scored first, as binary F1 with "no claim" positive, on the full item set;
only then are pairs involving a no-claim label dropped and the ordinal
metrics computed on what remains. Krippendorff's alpha instead keeps every
item and treats no-claim cells as missing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .metrics import (
    AllPairsDegenerate,
    EmptyInput,
    MetricValue,
    NoPairableValues,
    PairwiseAverage,
    RougeScore,
    WelchResult,
    average_defined,
    binary_f1,
    krippendorff_alpha,
    pearson_r,
    quadratic_weighted_kappa,
    rouge_l,
    spearman_rho,
    welch_t_test,
)
from .model import (
    ASPECT_TITLES,
    ASPECTS,
    AnnotationSet,
    Aspect,
    AspectLabel,
    AgreementLevel,
    PeerGaugeError,
    classify_agreement,
)
from .scorer import ScoredComment

__all__ = [
    "AgreementReport",
    "AspectAgreement",
    "ComparisonReport",
    "CorrelationMatrix",
    "EmptySource",
    "IncompleteTriples",
    "ModelVsHumanReport",
    "NoOverlap",
    "NoSharedItems",
    "RationaleReport",
    "SUBSET_ALL",
    "SUBSET_FULL_MAJORITY",
    "agreement_report",
    "aspect_correlation_matrix",
    "compare_review_sources",
    "majority_label_table",
    "model_vs_human_report",
    "rationale_similarity_report",
]


class IncompleteTriples(PeerGaugeError):
    """Some comments are not annotated by exactly the three annotators."""

    def __init__(self, message: str, comment_ids: Sequence[str] = ()):
        super().__init__(message)
        self.comment_ids = tuple(comment_ids)


class NoOverlap(PeerGaugeError):
    """Model labels and human annotations share no comments."""


class EmptySource(PeerGaugeError):
    """A comparison side contributed no scored comments."""


class NoSharedItems(PeerGaugeError):
    """No comment carries a rationale and label on both sides."""


SUBSET_ALL = "all"
SUBSET_FULL_MAJORITY = "full_majority"
_SUBSETS = (SUBSET_ALL, SUBSET_FULL_MAJORITY)


# --------------------------------------------------------------------------
# shared plumbing


def _triple_table(
    annotations: AnnotationSet, aspect: Aspect
) -> tuple[tuple[str, ...], list[str], dict[str, dict[str, AspectLabel]]]:
    """Comment ids and per-annotator labels for one aspect, triples enforced."""
    annotators = tuple(annotations.annotators())
    if len(annotators) != 3:
        raise IncompleteTriples(
            f"agreement needs exactly 3 annotators, dataset has {len(annotators)}: "
            f"{list(annotators)}"
        )
    table: dict[str, dict[str, AspectLabel]] = {}
    for (comment_id, item_aspect), per_annotator in annotations.by_item().items():
        if item_aspect is not aspect:
            continue
        table[comment_id] = {
            name: record.label for name, record in per_annotator.items()
        }
    offenders = sorted(
        comment_id
        for comment_id, labels in table.items()
        if set(labels) != set(annotators)
    )
    if offenders:
        raise IncompleteTriples(
            f"{len(offenders)} comments lack a full triple for {aspect}: "
            f"{offenders[:10]}",
            comment_ids=offenders,
        )
    return annotators, sorted(table), table


def _pairwise(
    vectors: Sequence[Sequence[AspectLabel]],
    metric: Callable[[Sequence[AspectLabel], Sequence[AspectLabel]], MetricValue],
    names: Sequence[str],
) -> PairwiseAverage:
    """pairwise_average that degrades to a degenerate mean instead of raising."""
    from itertools import combinations

    per_pair = {
        (names[i], names[j]): metric(vectors[i], vectors[j])
        for i, j in combinations(range(len(vectors)), 2)
    }
    try:
        mean, skipped = average_defined(per_pair)
    except AllPairsDegenerate:
        mean, skipped = MetricValue.degenerate("all-pairs-degenerate", 0), len(per_pair)
    return PairwiseAverage(mean=mean, per_pair=per_pair, skipped=skipped)


def _ordinal_metric(
    metric: Callable[[Sequence[float], Sequence[float]], MetricValue],
) -> Callable[[Sequence[AspectLabel], Sequence[AspectLabel]], MetricValue]:
    """Wrap an ordinal metric to drop pairs where either label is no-claim."""

    def inner(a: Sequence[AspectLabel], b: Sequence[AspectLabel]) -> MetricValue:
        xs: list[int] = []
        ys: list[int] = []
        for la, lb in zip(a, b):
            if la.no_claim or lb.no_claim:
                continue
            xs.append(la.score)  # type: ignore[arg-type]
            ys.append(lb.score)  # type: ignore[arg-type]
        if len(xs) < 2:
            return MetricValue.degenerate("fewer-than-2-ordinal-pairs", len(xs))
        return metric(xs, ys)

    return inner


def _f1_metric(a: Sequence[AspectLabel], b: Sequence[AspectLabel]) -> MetricValue:
    if not a:
        return MetricValue.degenerate("no-items", 0)
    return binary_f1(
        [label.no_claim for label in a], [label.no_claim for label in b], positive=True
    )


def _alpha(vectors_by_item: Iterable[Sequence[AspectLabel]]) -> MetricValue:
    rows = [
        [None if label.no_claim else label.score for label in row]
        for row in vectors_by_item
    ]
    try:
        return krippendorff_alpha(rows, distance="interval")
    except (NoPairableValues, EmptyInput):
        return MetricValue.degenerate("nothing-pairable", 0)


def _metric_dict(value: MetricValue) -> dict:
    return {"value": value.value, "n_items": value.n_items, "reason": value.reason}


def _pairwise_dict(pairwise: PairwiseAverage) -> dict:
    return {
        "mean": _metric_dict(pairwise.mean),
        "per_pair": {
            f"{a}|{b}": _metric_dict(v) for (a, b), v in pairwise.per_pair.items()
        },
        "skipped_pairs": pairwise.skipped,
    }


def _fmt(value: MetricValue | None, width: int = 7) -> str:
    if value is None or not value.defined:
        return "-".rjust(width)
    return f"{value.value:.3f}".rjust(width)


# --------------------------------------------------------------------------
# inter-annotator agreement


@dataclass(frozen=True)
class AspectAgreement:
    """Agreement statistics for one aspect over one item subset."""

    aspect: Aspect
    n_items: int
    kappa: PairwiseAverage
    rho: PairwiseAverage
    alpha: MetricValue
    f1: PairwiseAverage | None

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "kappa2": _pairwise_dict(self.kappa),
            "rho": _pairwise_dict(self.rho),
            "alpha": _metric_dict(self.alpha),
            "f1": _pairwise_dict(self.f1) if self.f1 is not None else None,
        }


@dataclass(frozen=True)
class AgreementReport:
    """Per-aspect agreement over the All and Full+Majority subsets."""

    annotators: tuple[str, ...]
    subsets: Mapping[str, Mapping[Aspect, AspectAgreement]]
    partition: Mapping[Aspect, Mapping[str, int]]

    def to_dict(self) -> dict:
        return {
            "annotators": list(self.annotators),
            "subsets": {
                name: {aspect.value: entry.to_dict() for aspect, entry in rows.items()}
                for name, rows in self.subsets.items()
            },
            "partition": {
                aspect.value: dict(counts) for aspect, counts in self.partition.items()
            },
        }

    def render_text(self) -> str:
        lines = [f"annotators: {', '.join(self.annotators)}"]
        header = f"{'aspect':<24}{'n':>6}{'kappa2':>9}{'rho':>9}{'alpha':>9}{'f1':>9}"
        for name, rows in self.subsets.items():
            lines.append("")
            lines.append(f"subset: {name}")
            lines.append(header)
            for aspect, entry in rows.items():
                lines.append(
                    f"{ASPECT_TITLES[aspect]:<24}{entry.n_items:>6}"
                    f"{_fmt(entry.kappa.mean, 9)}{_fmt(entry.rho.mean, 9)}"
                    f"{_fmt(entry.alpha, 9)}"
                    f"{_fmt(entry.f1.mean if entry.f1 else None, 9)}"
                )
        return "\n".join(lines)


def agreement_report(
    annotations: AnnotationSet, subset_rule: str = "both"
) -> AgreementReport:
    """Inter-annotator agreement per aspect, on All and Full+Majority items.

    Pairwise quadratic-weighted kappa, Spearman rho, and (verifiability only)
    claim-detection F1 are macro-averaged over the three annotator pairs;
    alpha comes from the coincidence matrix over all three raters at once.

    Args:
        annotations: triple-annotated records for any subset of aspects.
        subset_rule: "all", "full_majority", or "both" (the default), naming
            which item subsets to include in the report.

    Raises:
        IncompleteTriples: if any comment lacks exactly the three annotators.
    """
    if subset_rule not in (*_SUBSETS, "both"):
        raise ValueError(f"subset_rule must be one of {_SUBSETS + ('both',)}")
    wanted = _SUBSETS if subset_rule == "both" else (subset_rule,)
    subsets: dict[str, dict[Aspect, AspectAgreement]] = {name: {} for name in wanted}
    partition: dict[Aspect, dict[str, int]] = {}
    annotators = tuple(annotations.annotators())
    for aspect in ASPECTS:
        annotators, items, table = _triple_table(annotations, aspect)
        if not items:
            continue
        per_item_class = {
            comment_id: classify_agreement([table[comment_id][name] for name in annotators])
            for comment_id in items
        }
        partition[aspect] = {
            level.value: sum(
                1 for c in per_item_class.values() if c.level is level
            )
            for level in AgreementLevel
        }
        for name in wanted:
            if name == SUBSET_ALL:
                chosen = items
            else:
                chosen = [c for c in items if per_item_class[c].has_majority]
            vectors = [
                [table[comment_id][annotator] for comment_id in chosen]
                for annotator in annotators
            ]
            entry = AspectAgreement(
                aspect=aspect,
                n_items=len(chosen),
                kappa=_pairwise(vectors, _ordinal_metric(quadratic_weighted_kappa), annotators),
                rho=_pairwise(vectors, _ordinal_metric(spearman_rho), annotators),
                alpha=_alpha(zip(*vectors)) if chosen else MetricValue.degenerate("empty-subset", 0),
                f1=_pairwise(vectors, _f1_metric, annotators)
                if aspect is Aspect.VERIFIABILITY
                else None,
            )
            subsets[name][aspect] = entry
    return AgreementReport(annotators=annotators, subsets=subsets, partition=partition)


# --------------------------------------------------------------------------
# model vs human


def _model_label_map(
    model_labels: Sequence[ScoredComment] | Mapping[str, Mapping[Aspect, AspectLabel]],
) -> dict[str, dict[Aspect, AspectLabel]]:
    if isinstance(model_labels, Mapping):
        return {
            comment_id: dict(per_aspect)
            for comment_id, per_aspect in model_labels.items()
        }
    table: dict[str, dict[Aspect, AspectLabel]] = {}
    for scored in model_labels:
        table[scored.comment_id] = {
            aspect: score.label for aspect, score in scored.aspects.items()
        }
    return table


@dataclass(frozen=True)
class AspectModelAgreement:
    """Model-vs-human agreement for one aspect."""

    aspect: Aspect
    n_shared: int
    n_missing: int
    kappa_by_annotator: Mapping[str, MetricValue]
    kappa_avg: MetricValue
    f1_by_annotator: Mapping[str, MetricValue] | None
    f1_avg: MetricValue | None
    vs_majority: Mapping[str, MetricValue]
    n_majority: int

    def to_dict(self) -> dict:
        return {
            "n_shared": self.n_shared,
            "n_missing": self.n_missing,
            "kappa2_by_annotator": {
                name: _metric_dict(v) for name, v in self.kappa_by_annotator.items()
            },
            "kappa2_avg": _metric_dict(self.kappa_avg),
            "f1_by_annotator": (
                {name: _metric_dict(v) for name, v in self.f1_by_annotator.items()}
                if self.f1_by_annotator is not None
                else None
            ),
            "f1_avg": _metric_dict(self.f1_avg) if self.f1_avg is not None else None,
            "vs_majority": {k: _metric_dict(v) for k, v in self.vs_majority.items()},
            "n_majority": self.n_majority,
        }


@dataclass(frozen=True)
class ModelVsHumanReport:
    subset: str
    annotators: tuple[str, ...]
    aspects: Mapping[Aspect, AspectModelAgreement]

    def to_dict(self) -> dict:
        return {
            "subset": self.subset,
            "annotators": list(self.annotators),
            "aspects": {a.value: entry.to_dict() for a, entry in self.aspects.items()},
        }

    def render_text(self) -> str:
        lines = [f"subset: {self.subset}"]
        names = list(self.annotators)
        header = f"{'aspect':<24}{'n':>6}"
        for name in names:
            header += f"{'k2_' + name:>9}"
        header += f"{'k2_avg':>9}{'k2_maj':>9}{'f1_maj':>9}"
        lines.append(header)
        for aspect, entry in self.aspects.items():
            row = f"{ASPECT_TITLES[aspect]:<24}{entry.n_shared:>6}"
            for name in names:
                row += _fmt(entry.kappa_by_annotator.get(name), 9)
            row += _fmt(entry.kappa_avg, 9)
            row += _fmt(entry.vs_majority.get("kappa2"), 9)
            row += _fmt(entry.vs_majority.get("f1"), 9)
            lines.append(row)
        return "\n".join(lines)


def model_vs_human_report(
    model_labels: Sequence[ScoredComment] | Mapping[str, Mapping[Aspect, AspectLabel]],
    annotations: AnnotationSet,
    subset: str = SUBSET_FULL_MAJORITY,
) -> ModelVsHumanReport:
    """Agreement of one model's labels with each human annotator.

    Reports one quadratic-weighted kappa per annotator plus their mean, the
    same against the per-item majority vote, and for verifiability the
    claim-detection F1 variants. Human items the model did not label are
    counted as missing and excluded.

    Raises:
        NoOverlap: if the model shares no labeled comment with the dataset.
        IncompleteTriples: if the human data is not triple-annotated.
    """
    if subset not in _SUBSETS:
        raise ValueError(f"subset must be one of {_SUBSETS}")
    model = _model_label_map(model_labels)
    aspects: dict[Aspect, AspectModelAgreement] = {}
    total_shared = 0
    annotators = tuple(annotations.annotators())
    for aspect in ASPECTS:
        annotators, items, table = _triple_table(annotations, aspect)
        if not items:
            continue
        per_item_class = {
            c: classify_agreement([table[c][name] for name in annotators]) for c in items
        }
        if subset == SUBSET_FULL_MAJORITY:
            items = [c for c in items if per_item_class[c].has_majority]
        shared = [c for c in items if aspect in model.get(c, {})]
        total_shared += len(shared)
        model_vec = [model[c][aspect] for c in shared]
        kappa_by: dict[str, MetricValue] = {}
        f1_by: dict[str, MetricValue] = {}
        for name in annotators:
            human_vec = [table[c][name] for c in shared]
            if len(shared) < 2:
                kappa_by[name] = MetricValue.degenerate("fewer-than-2-shared-items", len(shared))
            else:
                kappa_by[name] = _ordinal_metric(quadratic_weighted_kappa)(model_vec, human_vec)
            if aspect is Aspect.VERIFIABILITY:
                f1_by[name] = _f1_metric(model_vec, human_vec)
        try:
            kappa_avg, _ = average_defined(kappa_by)
        except AllPairsDegenerate:
            kappa_avg = MetricValue.degenerate("all-annotators-degenerate", 0)
        f1_avg = None
        if aspect is Aspect.VERIFIABILITY:
            try:
                f1_avg, _ = average_defined(f1_by)
            except AllPairsDegenerate:
                f1_avg = MetricValue.degenerate("all-annotators-degenerate", 0)
        majority_items = [c for c in shared if per_item_class[c].has_majority]
        model_maj = [model[c][aspect] for c in majority_items]
        human_maj = [per_item_class[c].majority_label for c in majority_items]
        vs_majority: dict[str, MetricValue] = {}
        if len(majority_items) >= 2:
            vs_majority["kappa2"] = _ordinal_metric(quadratic_weighted_kappa)(model_maj, human_maj)
            vs_majority["rho"] = _ordinal_metric(spearman_rho)(model_maj, human_maj)
            vs_majority["alpha"] = _alpha(zip(model_maj, human_maj))
            if aspect is Aspect.VERIFIABILITY:
                vs_majority["f1"] = _f1_metric(model_maj, human_maj)
        else:
            vs_majority["kappa2"] = MetricValue.degenerate(
                "fewer-than-2-majority-items", len(majority_items)
            )
        aspects[aspect] = AspectModelAgreement(
            aspect=aspect,
            n_shared=len(shared),
            n_missing=len(items) - len(shared),
            kappa_by_annotator=kappa_by,
            kappa_avg=kappa_avg,
            f1_by_annotator=f1_by if aspect is Aspect.VERIFIABILITY else None,
            f1_avg=f1_avg,
            vs_majority=vs_majority,
            n_majority=len(majority_items),
        )
    if total_shared == 0:
        raise NoOverlap("model labels cover none of the annotated comments")
    return ModelVsHumanReport(subset=subset, annotators=annotators, aspects=aspects)


# --------------------------------------------------------------------------
# human vs LLM review comparison


@dataclass(frozen=True)
class SourceStats:
    n: int
    mean: float | None
    std: float | None

    def to_dict(self) -> dict:
        return {"n": self.n, "mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class AspectComparison:
    aspect: Aspect
    human: SourceStats
    llm: SourceStats
    welch: WelchResult | None
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "human": self.human.to_dict(),
            "llm": self.llm.to_dict(),
            "p_value": self.welch.p_value if self.welch else None,
            "t": self.welch.t if self.welch else None,
            "dof": self.welch.dof if self.welch else None,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class ComparisonReport:
    aspects: Mapping[Aspect, AspectComparison]

    def to_dict(self) -> dict:
        return {a.value: entry.to_dict() for a, entry in self.aspects.items()}

    def render_text(self) -> str:
        lines = [
            f"{'aspect':<24}{'human':>16}{'llm':>16}{'p':>9}",
        ]
        for aspect, entry in self.aspects.items():
            def cell(stats: SourceStats) -> str:
                if stats.mean is None:
                    return "-".rjust(16)
                std = f"{stats.std:.2f}" if stats.std is not None else "-"
                return f"{stats.mean:.2f} +/- {std}".rjust(16)

            p = f"{entry.welch.p_value:.3f}".rjust(9) if entry.welch else "-".rjust(9)
            lines.append(f"{ASPECT_TITLES[aspect]:<24}{cell(entry.human)}{cell(entry.llm)}{p}")
        return "\n".join(lines)


def _aspect_scores(scored: Sequence[ScoredComment], aspect: Aspect) -> list[int]:
    values: list[int] = []
    for item in scored:
        score = item.aspects.get(aspect)
        if score is None or score.label.no_claim:
            continue
        values.append(score.label.score)  # type: ignore[arg-type]
    return values


def _sample_stats(values: Sequence[int]) -> SourceStats:
    n = len(values)
    if n == 0:
        return SourceStats(n=0, mean=None, std=None)
    mean = math.fsum(values) / n
    if n == 1:
        return SourceStats(n=1, mean=mean, std=None)
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return SourceStats(n=n, mean=mean, std=math.sqrt(var))


def compare_review_sources(
    scored_human_comments: Sequence[ScoredComment],
    scored_llm_comments: Sequence[ScoredComment],
) -> ComparisonReport:
    """Compare aspect score distributions of two review sources.

    Means and sample standard deviations per aspect and source, with a
    two-tailed Welch's t-test p-value. No-claim items never enter the
    verifiability aggregates, and unparsed aspects never enter anything.

    Raises:
        EmptySource: if either side contains no scored comments.
    """
    if not scored_human_comments:
        raise EmptySource("human side has no scored comments")
    if not scored_llm_comments:
        raise EmptySource("llm side has no scored comments")
    aspects: dict[Aspect, AspectComparison] = {}
    for aspect in ASPECTS:
        xs = _aspect_scores(scored_human_comments, aspect)
        ys = _aspect_scores(scored_llm_comments, aspect)
        welch = None
        reason = None
        if len(xs) >= 2 and len(ys) >= 2:
            welch = welch_t_test(xs, ys)
            if welch.degenerate:
                reason = welch.reason
        else:
            reason = "fewer-than-2-scores-on-a-side"
        aspects[aspect] = AspectComparison(
            aspect=aspect,
            human=_sample_stats(xs),
            llm=_sample_stats(ys),
            welch=welch,
            reason=reason,
        )
    return ComparisonReport(aspects=aspects)


# --------------------------------------------------------------------------
# rationale similarity


@dataclass(frozen=True)
class BucketStats:
    n: int
    precision: float | None
    recall: float | None
    f1: float | None

    def to_dict(self) -> dict:
        return {"n": self.n, "precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class RationaleReport:
    aspects: Mapping[Aspect, Mapping[str, BucketStats]]

    def to_dict(self) -> dict:
        return {
            a.value: {bucket: stats.to_dict() for bucket, stats in rows.items()}
            for a, rows in self.aspects.items()
        }

    def render_text(self) -> str:
        lines = [f"{'aspect':<24}{'bucket':>9}{'n':>6}{'rougeL-P':>10}{'rougeL-R':>10}{'rougeL-F':>10}"]
        for aspect, rows in self.aspects.items():
            for bucket, stats in rows.items():
                def num(v: float | None) -> str:
                    return f"{v:.3f}".rjust(10) if v is not None else "-".rjust(10)

                lines.append(
                    f"{ASPECT_TITLES[aspect]:<24}{bucket:>9}{stats.n:>6}"
                    f"{num(stats.precision)}{num(stats.recall)}{num(stats.f1)}"
                )
        return "\n".join(lines)


def _within_one(predicted: AspectLabel, reference: AspectLabel) -> bool:
    if predicted.no_claim or reference.no_claim:
        return predicted.no_claim and reference.no_claim
    return abs(predicted.score - reference.score) <= 1  # type: ignore[operator]


def _bucket_stats(scores: Sequence[RougeScore]) -> BucketStats:
    if not scores:
        return BucketStats(n=0, precision=None, recall=None, f1=None)
    n = len(scores)
    return BucketStats(
        n=n,
        precision=math.fsum(s.precision for s in scores) / n,
        recall=math.fsum(s.recall for s in scores) / n,
        f1=math.fsum(s.f1 for s in scores) / n,
    )


def rationale_similarity_report(
    generated: Sequence[ScoredComment],
    reference: Sequence[ScoredComment],
) -> RationaleReport:
    """Rouge-L of generated rationales against references, split by correctness.

    An item is Correct when the generated label is within one point of the
    reference (the no-claim sentinel only matches itself); otherwise Wrong.
    Mean Rouge-L precision/recall/F1 is reported per aspect and bucket, over
    the items where both sides carry a label and a non-empty rationale.

    Raises:
        NoSharedItems: if no (comment, aspect) is usable on both sides.
    """
    ref_by_id = {item.comment_id: item for item in reference}
    buckets: dict[Aspect, dict[str, list[RougeScore]]] = {
        aspect: {"correct": [], "wrong": []} for aspect in ASPECTS
    }
    shared = 0
    for item in generated:
        ref = ref_by_id.get(item.comment_id)
        if ref is None:
            continue
        for aspect, score in item.aspects.items():
            ref_score = ref.aspects.get(aspect)
            if ref_score is None:
                continue
            if not score.rationale or not ref_score.rationale:
                continue
            if not score.rationale.strip() or not ref_score.rationale.strip():
                continue
            shared += 1
            bucket = "correct" if _within_one(score.label, ref_score.label) else "wrong"
            buckets[aspect][bucket].append(rouge_l(score.rationale, ref_score.rationale))
    if shared == 0:
        raise NoSharedItems(
            "no comment carries a label and rationale on both the generated "
            "and reference side"
        )
    return RationaleReport(
        aspects={
            aspect: {bucket: _bucket_stats(scores) for bucket, scores in rows.items()}
            for aspect, rows in buckets.items()
        }
    )


# --------------------------------------------------------------------------
# aspect correlations


def majority_label_table(
    annotations: AnnotationSet,
) -> dict[str, dict[Aspect, AspectLabel]]:
    """Majority-vote label per comment and aspect; low-agreement items dropped."""
    table: dict[str, dict[Aspect, AspectLabel]] = {}
    for aspect in ASPECTS:
        annotators, items, labels = _triple_table(annotations, aspect)
        for comment_id in items:
            verdict = classify_agreement(
                [labels[comment_id][name] for name in annotators]
            )
            if verdict.has_majority:
                table.setdefault(comment_id, {})[aspect] = verdict.majority_label
    return table


@dataclass(frozen=True)
class CorrelationMatrix:
    cells: Mapping[tuple[Aspect, Aspect], MetricValue]

    def value(self, a: Aspect, b: Aspect) -> MetricValue:
        return self.cells[(a, b)]

    def to_dict(self) -> dict:
        return {
            a.value: {b.value: _metric_dict(self.cells[(a, b)]) for b in ASPECTS}
            for a in ASPECTS
        }

    def render_text(self) -> str:
        width = 12
        lines = [" " * 24 + "".join(f"{ASPECT_TITLES[b][:10]:>{width}}" for b in ASPECTS)]
        for a in ASPECTS:
            row = f"{ASPECT_TITLES[a]:<24}"
            for b in ASPECTS:
                row += _fmt(self.cells[(a, b)], width)
            lines.append(row)
        return "\n".join(lines)


def aspect_correlation_matrix(
    majority_labels: Mapping[str, Mapping[Aspect, AspectLabel]],
) -> CorrelationMatrix:
    """Pearson correlations between aspects over per-comment majority labels.

    Each cell uses the comments where both aspects carry a label, dropping a
    pair when either label is the no-claim sentinel. The matrix is symmetric
    with a unit diagonal; cells without enough data are degenerate, not
    omitted.
    """
    cells: dict[tuple[Aspect, Aspect], MetricValue] = {}
    for i, a in enumerate(ASPECTS):
        n_diag = sum(
            1
            for per_aspect in majority_labels.values()
            if a in per_aspect and not per_aspect[a].no_claim
        )
        cells[(a, a)] = MetricValue(1.0, n_diag)
        for b in ASPECTS[i + 1 :]:
            xs: list[int] = []
            ys: list[int] = []
            for per_aspect in majority_labels.values():
                la, lb = per_aspect.get(a), per_aspect.get(b)
                if la is None or lb is None or la.no_claim or lb.no_claim:
                    continue
                xs.append(la.score)  # type: ignore[arg-type]
                ys.append(lb.score)  # type: ignore[arg-type]
            if len(xs) < 2:
                value = MetricValue.degenerate("fewer-than-2-paired-items", len(xs))
            else:
                value = pearson_r(xs, ys)
            cells[(a, b)] = value
            cells[(b, a)] = value
    return CorrelationMatrix(cells=cells)


def report_to_json(report) -> str:
    """Serialize any report object with a to_dict() to pretty JSON."""
    return json.dumps(report.to_dict(), indent=2, sort_keys=False) + "\n"
