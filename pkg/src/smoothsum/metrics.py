"""Evaluation machinery: corpus BLEU, two-pass METEOR, embedding cosine
similarity, paired t-tests, diversity counts and classification reports.

BLEU is corpus-level (clipped n-gram counts pooled over the prediction
set, uniform 0.25 weights for n = 1..4, hard zero when any order has no
overlap). METEOR aligns unigrams in two passes, exact then stem, and
applies the classic 10PR/(R+9P) harmonic mean with the 0.5*(chunks/m)^3
fragmentation penalty; the synonym pass is deliberately out of scope.
"""

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .corpus import SPECIAL_TOKENS
from .errors import ConfigurationError, DataError, NumericError
from .rng import Rng, stable_token_seed
from .stemming import porter_stem

_EXCLUDED_FROM_DIVERSITY = {SPECIAL_TOKENS[i] for i in (0, 1, 2)}  # PAD/START/END


@dataclass
class PredictionRecord:
    id: str
    reference: list
    predicted: list


@dataclass
class PredictionSet:
    records: list

    def __post_init__(self):
        seen = set()
        for r in self.records:
            if r.id in seen:
                raise DataError(f"duplicate prediction id {r.id!r}")
            seen.add(r.id)

    def __len__(self):
        return len(self.records)


@dataclass
class MetricReport:
    corpus_bleu: float
    meteor_scores: list
    similarity_scores: list

    @property
    def mean_meteor(self) -> float:
        return float(np.mean(self.meteor_scores)) if self.meteor_scores else 0.0

    @property
    def mean_similarity(self) -> float:
        return (float(np.mean(self.similarity_scores))
                if self.similarity_scores else 0.0)

    def to_dict(self) -> dict:
        return {
            "bleu": self.corpus_bleu,
            "meteor": self.mean_meteor,
            "similarity": self.mean_similarity,
            "meteor_per_sentence": list(self.meteor_scores),
            "similarity_per_sentence": list(self.similarity_scores),
        }


@dataclass
class ComparisonResult:
    metric: str
    t_stat: float
    p_value: float
    alpha: float
    significant: bool


@dataclass
class DiversityReport:
    total_words: int
    unique_words: int
    avg_frequency: float


@dataclass
class ClassStats:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class ClassificationReport:
    per_class: dict
    micro: ClassStats
    macro: ClassStats


class SentenceEmbedder:
    """Deterministic token-sequence -> fixed-length vector interface."""

    dim: int

    def embed(self, tokens) -> np.ndarray:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# BLEU


def _ngram_counts(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(preds: PredictionSet, max_order: int = 4) -> float:
    """Corpus-level BLEU with uniform 1/max_order weights and brevity
    penalty min(1, e^(1 - r/c)) over aggregate lengths."""
    if len(preds) == 0:
        raise DataError("cannot score an empty prediction set")
    clipped = [0] * max_order
    totals = [0] * max_order
    candidate_len = 0
    reference_len = 0
    for record in preds.records:
        candidate_len += len(record.predicted)
        reference_len += len(record.reference)
        for n in range(1, max_order + 1):
            pred_counts = _ngram_counts(record.predicted, n)
            ref_counts = _ngram_counts(record.reference, n)
            totals[n - 1] += sum(pred_counts.values())
            clipped[n - 1] += sum(min(count, ref_counts[gram])
                                  for gram, count in pred_counts.items())
    if candidate_len == 0:
        return 0.0
    precisions = [c / t if t else 0.0 for c, t in zip(clipped, totals)]
    if any(p == 0.0 for p in precisions):
        return 0.0
    brevity = min(1.0, math.exp(1.0 - reference_len / candidate_len))
    return brevity * math.exp(sum(math.log(p) for p in precisions) / max_order)


# ---------------------------------------------------------------------------
# METEOR


def _greedy_align(pred, ref, matched_pred, matched_ref, key):
    """In-order greedy matching on the unmatched residue; each token is
    used at most once."""
    pairs = []
    for i, token in enumerate(pred):
        if i in matched_pred:
            continue
        want = key(token)
        for j, candidate in enumerate(ref):
            if j in matched_ref:
                continue
            if key(candidate) == want:
                pairs.append((i, j))
                matched_pred.add(i)
                matched_ref.add(j)
                break
    return pairs


def _count_chunks(pairs) -> int:
    pairs = sorted(pairs)
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def sentence_meteor(pred, ref) -> float:
    """Two-pass unigram METEOR: exact matches, then stem matches on the
    residue; F = 10PR/(R+9P), penalty = 0.5*(chunks/matches)^3."""
    if not pred or not ref:
        return 0.0
    matched_pred, matched_ref = set(), set()
    pairs = _greedy_align(pred, ref, matched_pred, matched_ref, lambda t: t)
    pairs += _greedy_align(pred, ref, matched_pred, matched_ref, porter_stem)
    m = len(pairs)
    if m == 0:
        return 0.0
    precision = m / len(pred)
    recall = m / len(ref)
    fmean = 10.0 * precision * recall / (recall + 9.0 * precision)
    penalty = 0.5 * (_count_chunks(pairs) / m) ** 3
    return fmean * (1.0 - penalty)


# ---------------------------------------------------------------------------
# embedding similarity


class HashedBagEmbedder(SentenceEmbedder):
    """Stand-in for a pretrained sentence encoder: every token hashes to a
    fixed pseudo-random unit-variance vector, a sentence embeds as the
    mean of its token vectors. Deterministic across runs and platforms."""

    def __init__(self, dim: int = 64):
        self.dim = dim
        self._cache = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            rng = Rng(stable_token_seed("token-embed:" + token))
            vec = (rng.uniform_array((self.dim,)) - 0.5) * math.sqrt(12.0)
            self._cache[token] = vec
        return vec

    def embed(self, tokens) -> np.ndarray:
        if not tokens:
            return np.zeros(self.dim)
        # canonical accumulation order makes the mean exactly invariant
        # under token permutation
        return np.mean([self._token_vector(t) for t in sorted(tokens)], axis=0)


def default_embedder() -> SentenceEmbedder:
    return HashedBagEmbedder()


def sentence_similarity(pred, ref, embedder: SentenceEmbedder) -> float:
    """Cosine of the two sentence embeddings clamped to [0, 1]; both
    empty scores 1, one empty scores 0."""
    if not pred and not ref:
        return 1.0
    if not pred or not ref:
        return 0.0
    if list(pred) == list(ref):
        return 1.0
    a = embedder.embed(pred)
    b = embedder.embed(ref)
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise NumericError("embedder produced a zero vector for a non-empty "
                           "token list")
    cosine = float(np.dot(a, b) / (norm_a * norm_b))
    return min(1.0, max(0.0, cosine))


# ---------------------------------------------------------------------------
# statistics


def student_t_two_sided_p(t: float, df: int) -> float:
    """Two-sided p = I_{df/(df+t^2)}(df/2, 1/2) via the regularized
    incomplete beta."""
    if df < 1:
        raise ConfigurationError(f"degrees of freedom {df} must be >= 1")
    if math.isinf(t):
        return 0.0
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return float(betainc(df / 2.0, 0.5, x))


def paired_t_test(scores_a, scores_b, alpha: float = 0.05,
                  metric: str = "") -> ComparisonResult:
    """Two-sided paired t-test on per-sentence score differences a - b.

    Degenerate conventions: all differences zero -> (t=0, p=1); zero
    spread with nonzero mean -> p=0 with an infinite t.
    """
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError("paired scores must be equal-length vectors")
    n = a.size
    if n < 2:
        raise DataError(f"need at least 2 pairs, got {n}")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            t_stat, p = 0.0, 1.0
        else:
            t_stat, p = math.copysign(math.inf, mean), 0.0
    else:
        t_stat = mean / (sd / math.sqrt(n))
        p = student_t_two_sided_p(t_stat, n - 1)
    return ComparisonResult(metric=metric, t_stat=t_stat, p_value=p,
                            alpha=alpha, significant=p < alpha)


# ---------------------------------------------------------------------------
# diversity and classification


def diversity_report(preds: PredictionSet) -> DiversityReport:
    """Word counts over predicted tokens only; PAD/START/END excluded."""
    counts = Counter()
    for record in preds.records:
        counts.update(t for t in record.predicted
                      if t not in _EXCLUDED_FROM_DIVERSITY)
    total = sum(counts.values())
    unique = len(counts)
    return DiversityReport(
        total_words=total,
        unique_words=unique,
        avg_frequency=total / unique if unique else 0.0,
    )


def classification_report(gold, predicted) -> ClassificationReport:
    """Per-class precision/recall/F1 with micro and macro aggregates over
    the union of gold and predicted label sets."""
    gold = list(gold)
    predicted = list(predicted)
    if len(gold) != len(predicted):
        raise DataError("gold and predicted label lists differ in length")
    labels = sorted(set(gold) | set(predicted))
    per_class = {}
    tp_sum = fp_sum = fn_sum = 0
    for label in labels:
        tp = sum(1 for g, p in zip(gold, predicted) if g == label and p == label)
        fp = sum(1 for g, p in zip(gold, predicted) if g != label and p == label)
        fn = sum(1 for g, p in zip(gold, predicted) if g == label and p != label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall else 0.0)
        per_class[label] = ClassStats(precision, recall, f1,
                                      support=tp + fn)
        tp_sum += tp
        fp_sum += fp
        fn_sum += fn
    micro_p = tp_sum / (tp_sum + fp_sum) if tp_sum + fp_sum else 0.0
    micro_r = tp_sum / (tp_sum + fn_sum) if tp_sum + fn_sum else 0.0
    micro_f = (2 * micro_p * micro_r / (micro_p + micro_r)
               if micro_p + micro_r else 0.0)
    if labels:
        macro = ClassStats(
            precision=float(np.mean([c.precision for c in per_class.values()])),
            recall=float(np.mean([c.recall for c in per_class.values()])),
            f1=float(np.mean([c.f1 for c in per_class.values()])),
            support=len(gold),
        )
    else:
        macro = ClassStats(0.0, 0.0, 0.0, 0)
    return ClassificationReport(
        per_class=per_class,
        micro=ClassStats(micro_p, micro_r, micro_f, support=len(gold)),
        macro=macro,
    )


# ---------------------------------------------------------------------------
# prediction files


def write_predictions(preds: PredictionSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in preds.records:
            fh.write(json.dumps(
                {"id": r.id, "ref": r.reference, "pred": r.predicted},
                sort_keys=True) + "\n")


def read_predictions(path) -> PredictionSet:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            for key in ("id", "ref", "pred"):
                if key not in rec:
                    raise DataError(f"{path}:{lineno}: missing field {key!r}")
            records.append(PredictionRecord(
                id=str(rec["id"]),
                reference=[str(t) for t in rec["ref"]],
                predicted=[str(t) for t in rec["pred"]],
            ))
    return PredictionSet(records=records)


def score_predictions(preds: PredictionSet,
                      embedder: SentenceEmbedder | None = None) -> MetricReport:
    """All three metrics over one prediction set."""
    if len(preds) == 0:
        raise DataError("cannot score an empty prediction set")
    embedder = embedder or default_embedder()
    return MetricReport(
        corpus_bleu=corpus_bleu(preds),
        meteor_scores=[sentence_meteor(r.predicted, r.reference)
                       for r in preds.records],
        similarity_scores=[sentence_similarity(r.predicted, r.reference,
                                               embedder)
                           for r in preds.records],
    )
