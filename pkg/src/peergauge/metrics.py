"""Agreement and comparison statistics used by the analysis reports.

All functions are pure and deterministic. Inputs that make a statistic
mathematically undefined (a rater who never varies, a pair with nothing to
compare) come back as typed degenerate results rather than NaN or silent
zeros, so report code can decide explicitly what to skip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Hashable, Mapping, Sequence

from scipy.special import betainc

from .model import PeerGaugeError

DEFAULT_CATEGORIES: tuple[int, ...] = (1, 2, 3, 4, 5)


class LengthMismatch(PeerGaugeError):
    """Paired vectors have different lengths."""


class EmptyInput(PeerGaugeError):
    """A metric got fewer values than it can work with."""


class CategoryMismatch(PeerGaugeError):
    """A rating fell outside the declared category set."""


class NoPairableValues(PeerGaugeError):
    """No unit in the ratings matrix carries two or more ratings."""


class AllPairsDegenerate(PeerGaugeError):
    """Every rater pair produced a degenerate metric value."""


class EmptyText(PeerGaugeError):
    """A text similarity input tokenized to nothing."""


@dataclass(frozen=True)
class MetricValue:
    """A statistic plus the metadata reports need.

    ``value`` is None exactly when the metric is degenerate, in which case
    ``reason`` carries a machine-readable cause such as "zero-variance".
    """

    value: float | None
    n_items: int
    reason: str | None = None

    @property
    def defined(self) -> bool:
        return self.reason is None

    @staticmethod
    def degenerate(reason: str, n_items: int) -> "MetricValue":
        return MetricValue(value=None, n_items=n_items, reason=reason)


def _check_pair(a: Sequence, b: Sequence, minimum: int, name: str) -> None:
    if len(a) != len(b):
        raise LengthMismatch(f"{name}: lengths differ ({len(a)} vs {len(b)})")
    if len(a) < minimum:
        raise EmptyInput(f"{name}: needs at least {minimum} paired values, got {len(a)}")


def quadratic_weighted_kappa(
    a: Sequence[int],
    b: Sequence[int],
    categories: Sequence[int] = DEFAULT_CATEGORIES,
) -> MetricValue:
    """Cohen's kappa with quadratic weights over a fixed category set.

    Weights are w_ij = (i - j)^2 / (k - 1)^2 over the declared categories,
    and the statistic is 1 - sum(w * observed) / sum(w * expected) with the
    expected matrix built from marginal products. The category set stays
    fixed even when some categories never occur, so weight denominators do
    not shift with the data.
    """
    _check_pair(a, b, 1, "quadratic_weighted_kappa")
    cats = list(categories)
    if len(cats) < 2:
        raise CategoryMismatch("category set needs at least 2 categories")
    index = {c: i for i, c in enumerate(cats)}
    for v in a:
        if v not in index:
            raise CategoryMismatch(f"rating {v!r} not in category set {cats}")
    for v in b:
        if v not in index:
            raise CategoryMismatch(f"rating {v!r} not in category set {cats}")

    n = len(a)
    k = len(cats)
    denom_scale = (k - 1) ** 2
    observed = [[0] * k for _ in range(k)]
    row = [0] * k
    col = [0] * k
    for va, vb in zip(a, b):
        i, j = index[va], index[vb]
        observed[i][j] += 1
        row[i] += 1
        col[j] += 1

    num_terms = []
    den_terms = []
    for i in range(k):
        for j in range(k):
            w = (i - j) ** 2 / denom_scale
            if observed[i][j]:
                num_terms.append(w * observed[i][j] * n)
            if row[i] and col[j]:
                den_terms.append(w * row[i] * col[j])
    numerator = math.fsum(num_terms)
    denominator = math.fsum(den_terms)
    if denominator == 0.0:
        return MetricValue.degenerate("zero-variance", n)
    return MetricValue(1.0 - numerator / denominator, n)


def _midranks(values: Sequence[float]) -> list[float]:
    """Ranks 1..n with ties shared as the mean of the ranks they span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2 + 1  # mean of 1-based positions i..j
        for pos in range(i, j + 1):
            ranks[order[pos]] = shared
        i = j + 1
    return ranks


def pearson_r(x: Sequence[float], y: Sequence[float]) -> MetricValue:
    """Pearson correlation; degenerate when either vector is constant."""
    _check_pair(x, y, 2, "pearson_r")
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        return MetricValue.degenerate("zero-variance", n)
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    # Guard against tiny float overshoot outside [-1, 1].
    r = max(-1.0, min(1.0, r))
    return MetricValue(r, n)


def spearman_rho(a: Sequence[float], b: Sequence[float]) -> MetricValue:
    """Spearman rank correlation with midranks for ties."""
    _check_pair(a, b, 2, "spearman_rho")
    return pearson_r(_midranks(a), _midranks(b))


def krippendorff_alpha(
    ratings: Sequence[Sequence[float | None]],
    distance: str = "interval",
) -> MetricValue:
    """Krippendorff's alpha over an items-by-raters matrix with missing cells.

    alpha = 1 - D_o / D_e computed from the coincidence matrix of all value
    pairs within units; units with fewer than two ratings contribute
    nothing. ``distance`` selects the squared difference function: interval
    (default, matching the quadratic weighting used elsewhere), ordinal, or
    nominal.
    """
    if distance not in ("interval", "ordinal", "nominal"):
        raise ValueError(f"unknown distance {distance!r}")

    units = []
    for unit in ratings:
        values = [v for v in unit if v is not None]
        if len(values) >= 2:
            units.append(values)
    n_pairable = sum(len(u) for u in units)
    if n_pairable < 2:
        raise NoPairableValues("no unit carries two or more ratings")

    domain = sorted({v for u in units for v in u})
    index = {v: i for i, v in enumerate(domain)}
    k = len(domain)

    coincidence = [[0.0] * k for _ in range(k)]
    for values in units:
        m = len(values)
        for va, vb in combinations(values, 2):
            i, j = index[va], index[vb]
            # Every unordered slot pair stands for two ordered pairs, each
            # weighted by 1/(m-1). Equal values land on the diagonal.
            coincidence[i][j] += 1.0 / (m - 1)
            coincidence[j][i] += 1.0 / (m - 1)
    marginals = [math.fsum(coincidence[i]) for i in range(k)]
    n_total = math.fsum(marginals)

    if k == 1:
        return MetricValue.degenerate("zero-variance", len(units))

    def delta_sq(i: int, j: int) -> float:
        if i == j:
            return 0.0
        if distance == "nominal":
            return 1.0
        if distance == "interval":
            return (domain[i] - domain[j]) ** 2
        lo, hi = min(i, j), max(i, j)
        inner = math.fsum(marginals[g] for g in range(lo, hi + 1))
        return (inner - (marginals[lo] + marginals[hi]) / 2.0) ** 2

    d_observed = math.fsum(
        coincidence[i][j] * delta_sq(i, j) for i in range(k) for j in range(k) if i != j
    )
    d_expected = math.fsum(
        marginals[i] * marginals[j] * delta_sq(i, j)
        for i in range(k)
        for j in range(k)
        if i != j
    )
    if d_expected == 0.0:
        return MetricValue.degenerate("zero-variance", len(units))
    alpha = 1.0 - (n_total - 1.0) * d_observed / d_expected
    return MetricValue(alpha, len(units))


def binary_f1(
    pred: Sequence[Hashable],
    gold: Sequence[Hashable],
    positive: Hashable,
) -> MetricValue:
    """F1 of ``pred`` against ``gold`` for one positive class.

    Degenerate when the positive class appears on neither side, because
    precision and recall are both 0/0 there.
    """
    _check_pair(pred, gold, 1, "binary_f1")
    tp = fp = fn = 0
    for p, g in zip(pred, gold):
        if p == positive and g == positive:
            tp += 1
        elif p == positive:
            fp += 1
        elif g == positive:
            fn += 1
    if tp + fp + fn == 0:
        return MetricValue.degenerate("no-positive-labels", len(pred))
    return MetricValue(2.0 * tp / (2.0 * tp + fp + fn), len(pred))


@dataclass(frozen=True)
class PairwiseAverage:
    """Mean of a pairwise metric over all unordered rater pairs."""

    mean: MetricValue
    per_pair: dict
    skipped: int


def average_defined(values: Mapping[Hashable, MetricValue]) -> tuple[MetricValue, int]:
    """Mean over the defined entries of ``values``; raises if none are."""
    defined = {k: v for k, v in values.items() if v.defined}
    skipped = len(values) - len(defined)
    if not defined:
        raise AllPairsDegenerate(
            "every pair is degenerate: "
            + "; ".join(f"{k}={v.reason}" for k, v in values.items())
        )
    mean = math.fsum(v.value for v in defined.values()) / len(defined)
    return MetricValue(mean, len(defined)), skipped


def pairwise_average(
    raters: Sequence[Sequence],
    metric: Callable[[Sequence, Sequence], MetricValue],
    names: Sequence[str] | None = None,
) -> PairwiseAverage:
    """Apply ``metric`` to every unordered pair of rater vectors and average.

    Degenerate pairs are skipped and counted; if every pair is degenerate
    the result is an AllPairsDegenerate error rather than a silent zero.
    """
    if len(raters) < 2:
        raise EmptyInput("pairwise_average needs at least 2 raters")
    if names is None:
        names = [str(i) for i in range(len(raters))]
    if len(names) != len(raters):
        raise LengthMismatch("names and raters differ in length")
    per_pair: dict[tuple[str, str], MetricValue] = {}
    for i, j in combinations(range(len(raters)), 2):
        per_pair[(names[i], names[j])] = metric(raters[i], raters[j])
    mean, skipped = average_defined(per_pair)
    return PairwiseAverage(mean=mean, per_pair=per_pair, skipped=skipped)


def tokenize(text: str) -> list[str]:
    """Lowercase whitespace tokenization used for all Rouge-L comparisons."""
    return text.lower().split()


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def rouge_l(candidate: str | Sequence[str], reference: str | Sequence[str]) -> RougeScore:
    """Rouge-L from the longest common subsequence of the token streams.

    P = LCS / len(candidate), R = LCS / len(reference), F1 their harmonic
    mean. String inputs are lowercased and whitespace-split first.
    """
    cand = tokenize(candidate) if isinstance(candidate, str) else list(candidate)
    ref = tokenize(reference) if isinstance(reference, str) else list(reference)
    if not cand:
        raise EmptyText("candidate tokenized to nothing")
    if not ref:
        raise EmptyText("reference tokenized to nothing")

    # Two-row LCS dynamic program.
    previous = [0] * (len(ref) + 1)
    for token in cand:
        current = [0]
        for j, ref_token in enumerate(ref, start=1):
            if token == ref_token:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    lcs = previous[-1]

    precision = lcs / len(cand)
    recall = lcs / len(ref)
    if precision + recall == 0.0:
        return RougeScore(0.0, 0.0, 0.0)
    f1 = 2.0 * precision * recall / (precision + recall)
    return RougeScore(precision, recall, f1)


@dataclass(frozen=True)
class WelchResult:
    """Welch's unequal-variance t-test with a two-tailed p-value."""

    t: float
    dof: float
    p_value: float
    n_x: int
    n_y: int
    mean_x: float
    mean_y: float
    degenerate: bool = False
    reason: str | None = None


def welch_t_test(x: Sequence[float], y: Sequence[float]) -> WelchResult:
    """Welch's t-test: t statistic, Welch-Satterthwaite dof, two-tailed p.

    The p-value comes from the Student-t survival function expressed through
    the regularized incomplete beta: p = I_{v/(v+t^2)}(v/2, 1/2).

    When both samples have zero variance the statistic is undefined; the
    result is flagged degenerate with p pinned to 1 (equal means) or 0
    (unequal means).
    """
    if len(x) < 2 or len(y) < 2:
        raise EmptyInput("welch_t_test needs at least 2 values per sample")
    nx, ny = len(x), len(y)
    mx = math.fsum(x) / nx
    my = math.fsum(y) / ny
    vx = math.fsum((v - mx) ** 2 for v in x) / (nx - 1)
    vy = math.fsum((v - my) ** 2 for v in y) / (ny - 1)

    if vx == 0.0 and vy == 0.0:
        if mx == my:
            return WelchResult(0.0, float(nx + ny - 2), 1.0, nx, ny, mx, my,
                               degenerate=True, reason="zero-variance")
        return WelchResult(math.inf if mx > my else -math.inf,
                           float(nx + ny - 2), 0.0, nx, ny, mx, my,
                           degenerate=True, reason="zero-variance")

    se_sq = vx / nx + vy / ny
    t = (mx - my) / math.sqrt(se_sq)
    dof = se_sq ** 2 / ((vx / nx) ** 2 / (nx - 1) + (vy / ny) ** 2 / (ny - 1))
    p = float(betainc(dof / 2.0, 0.5, dof / (dof + t * t)))
    # Exact zero t gives betainc(..., 1) which is exactly 1.
    p = min(1.0, max(0.0, p))
    return WelchResult(t, dof, p, nx, ny, mx, my)
