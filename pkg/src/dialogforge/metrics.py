"""Automatic evaluation: micro/macro F1, BLEU, ROUGE1, METEOR, Combination.

Tokenization for the text metrics is one token per CJK character plus
whitespace-separated runs for everything else, the standard choice for
Chinese generation output.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from dialogforge.corpus import LabelKind, Vocabulary
from dialogforge.errors import ValidationError
from dialogforge.serde import Task, TaskSample, parse_labels

BLEU_EPSILON = 1e-9  # stands in for zero n-gram counts in the geometric mean

_CJK_RANGES = (
    (0x3000, 0x303F),  # CJK punctuation
    (0x3400, 0x9FFF),  # extensions A + unified ideographs
    (0xF900, 0xFAFF),  # compatibility ideographs
    (0xFF00, 0xFFEF),  # fullwidth forms
    (0x20000, 0x3134F),  # extensions B..G
)


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def tokenize(text: str) -> list[str]:
    """One token per CJK character; non-CJK text splits on whitespace."""
    tokens: list[str] = []
    run: list[str] = []
    for ch in text:
        if ch.isspace():
            if run:
                tokens.append("".join(run))
                run = []
        elif _is_cjk(ch):
            if run:
                tokens.append("".join(run))
                run = []
            tokens.append(ch)
        else:
            run.append(ch)
    if run:
        tokens.append("".join(run))
    return tokens


# ---------------------------------------------------------------------------
# Set-based F1


def _check_aligned(gold, pred) -> None:
    if set(gold) != set(pred):
        raise ValidationError("gold and prediction turn keys are misaligned")


def _f1(tp: int, fp: int, fn: int) -> float:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return 200.0 * p * r / (p + r) if p + r else 0.0


def micro_f1(gold, pred) -> float:
    """Pooled-count F1 over per-turn item sets, as a percentage."""
    _check_aligned(gold, pred)
    tp = fp = fn = 0
    for key, g in gold.items():
        g = set(g)
        p = set(pred[key])
        tp += len(g & p)
        fp += len(p - g)
        fn += len(g - p)
    return _f1(tp, fp, fn)


def _category_counts(gold, pred):
    counts: dict[object, list[int]] = {}  # item -> [tp, fp, fn, gold]
    for key, g in gold.items():
        g = set(g)
        p = set(pred[key])
        for item in g | p:
            c = counts.setdefault(item, [0, 0, 0, 0])
            if item in g and item in p:
                c[0] += 1
            elif item in p:
                c[1] += 1
            else:
                c[2] += 1
            if item in g:
                c[3] += 1
    return counts


def macro_f1(gold, pred) -> float:
    """Per-category F1 weighted by each category's share of gold items."""
    _check_aligned(gold, pred)
    counts = _category_counts(gold, pred)
    total_gold = sum(c[3] for c in counts.values())
    if total_gold == 0:
        return 0.0
    return sum(
        (c[3] / total_gold) * _f1(c[0], c[1], c[2]) for c in counts.values() if c[3]
    )


def f1_breakdown(gold, pred) -> dict[str, float]:
    """Category -> F1 map (categories present in gold only)."""
    counts = _category_counts(gold, pred)
    out = {}
    for item, c in sorted(counts.items(), key=lambda kv: str(kv[0])):
        if c[3]:
            if isinstance(item, tuple):
                name = "|".join("-" if x is None else str(x) for x in item)
            else:
                name = str(item)
            out[name] = _f1(c[0], c[1], c[2])
    return out


# ---------------------------------------------------------------------------
# Text-overlap metrics


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(refs, hyps, max_n: int = 4) -> float:
    """Corpus BLEU with brevity penalty and clipped n-gram precision.

    Zero match counts are smoothed to a tiny epsilon inside the geometric
    mean; n-gram orders with no hypothesis n-grams at all carry no signal
    and are excluded, so identical short texts still score 100.
    """
    if len(refs) != len(hyps):
        raise ValidationError(f"{len(refs)} references vs {len(hyps)} hypotheses")
    hyp_len = sum(len(h) for h in hyps)
    ref_len = sum(len(r) for r in refs)
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    orders = 0
    for n in range(1, max_n + 1):
        total = sum(max(len(h) - n + 1, 0) for h in hyps)
        if total == 0:
            continue
        matched = 0
        for r, h in zip(refs, hyps):
            hyp_counts = _ngrams(h, n)
            if not hyp_counts:
                continue
            ref_counts = _ngrams(r, n)
            matched += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        p = matched / total if matched else BLEU_EPSILON
        log_sum += math.log(p)
        orders += 1
    if orders == 0:
        return 0.0
    geo_mean = math.exp(log_sum / orders)
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * geo_mean


def _clipped_unigram_matches(ref, hyp) -> int:
    ref_counts = Counter(ref)
    return sum(min(c, ref_counts[t]) for t, c in Counter(hyp).items())


def rouge1(refs, hyps) -> float:
    """Unigram recall: clipped overlap over reference unigram count."""
    if len(refs) != len(hyps):
        raise ValidationError(f"{len(refs)} references vs {len(hyps)} hypotheses")
    matched = 0
    total_ref = 0
    for r, h in zip(refs, hyps):
        if not r:
            continue  # empty reference carries no recall signal
        matched += _clipped_unigram_matches(r, h)
        total_ref += len(r)
    return 100.0 * matched / total_ref if total_ref else 0.0


def meteor(refs, hyps) -> float:
    """Harmonic mean of pooled unigram precision and recall."""
    if len(refs) != len(hyps):
        raise ValidationError(f"{len(refs)} references vs {len(hyps)} hypotheses")
    matched = sum(_clipped_unigram_matches(r, h) for r, h in zip(refs, hyps))
    hyp_len = sum(len(h) for h in hyps)
    ref_len = sum(len(r) for r in refs)
    p = matched / hyp_len if hyp_len else 0.0
    r = matched / ref_len if ref_len else 0.0
    return 200.0 * p * r / (p + r) if p + r else 0.0


def combination(micro_f1_pair: float, bleu_value: float) -> float:
    """0.5 * Micro-F1 + 0.5 * BLEU, the joint structured/text score."""
    for name, v in (("micro_f1", micro_f1_pair), ("bleu", bleu_value)):
        if not (0.0 <= v <= 100.0):
            raise ValidationError(f"{name} must be in [0, 100], got {v}")
    return 0.5 * micro_f1_pair + 0.5 * bleu_value


# ---------------------------------------------------------------------------
# Per-task reports


@dataclass
class EvalReport:
    task: Task
    scores: dict[str, float]
    n_turns: int
    n_gold_items: int
    n_pred_items: int
    malformed_count: int
    breakdown: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "scores": self.scores,
            "counts": {
                "n_turns": self.n_turns,
                "n_gold_items": self.n_gold_items,
                "n_pred_items": self.n_pred_items,
                "malformed_count": self.malformed_count,
            },
            "breakdown": self.breakdown,
        }

    def render_table(self) -> str:
        """Aligned text table in the benchmark-tables column layout."""
        if self.task is Task.NLG:
            cols = [("BLEU1", "bleu1"), ("BLEU4", "bleu4"),
                    ("ROUGE1", "rouge1"), ("METEOR", "meteor")]
        else:
            unit = "Intent" if self.task is Task.NLU else "Action"
            cols = [
                (f"{unit} Micro/Macro-F1", None),
                (f"{unit}-Slot Micro/Macro-F1", None),
                ("Value BLEU", "value_bleu"),
                ("Combi.", "combination"),
            ]
        header = "  ".join(name for name, _ in cols)
        if self.task is Task.NLG:
            row = "  ".join(f"{self.scores[key]:>{len(name)}.2f}" for name, key in cols)
        else:
            pair_cells = [
                f"{self.scores['label_micro_f1']:.2f}/{self.scores['label_macro_f1']:.2f}",
                f"{self.scores['pair_micro_f1']:.2f}/{self.scores['pair_macro_f1']:.2f}",
            ]
            cells = pair_cells + [
                f"{self.scores['value_bleu']:.2f}",
                f"{self.scores['combination']:.2f}",
            ]
            row = "  ".join(c.rjust(len(n)) for c, (n, _) in zip(cells, cols))
        extra = f"turns={self.n_turns} malformed={self.malformed_count}"
        return f"[{self.task.value}] {extra}\n{header}\n{row}"


def _value_pairs(gold_labels, pred_labels) -> list[tuple[list[str], list[str]]]:
    """Align generated values with gold values by (label, slot) key.

    Within a turn, values sharing a key pair up positionally; unmatched
    gold values score against an empty hypothesis, surplus predicted
    values are dropped.
    """
    gold_by_key: dict[tuple, list[str]] = {}
    for l in gold_labels:
        if l.value is not None:
            gold_by_key.setdefault((l.label, l.slot), []).append(l.value)
    pred_by_key: dict[tuple, list[str]] = {}
    for l in pred_labels:
        if l.value is not None:
            pred_by_key.setdefault((l.label, l.slot), []).append(l.value)
    pairs = []
    for key in sorted(gold_by_key, key=str):
        gvs = gold_by_key[key]
        pvs = pred_by_key.get(key, [])
        for j, gv in enumerate(gvs):
            hyp = pvs[j] if j < len(pvs) else ""
            pairs.append((tokenize(gv), tokenize(hyp)))
    return pairs


def evaluate_task(
    gold: list[TaskSample],
    predictions: list[str],
    task: Task,
    vocab: Vocabulary | None = None,
) -> EvalReport:
    """Score raw model outputs against gold samples for one task."""
    if len(gold) != len(predictions):
        raise ValidationError(
            f"{len(gold)} gold samples vs {len(predictions)} predictions"
        )
    if task is Task.NLG:
        refs = [tokenize(s.target_seq) for s in gold]
        hyps = [tokenize(p) for p in predictions]
        scores = {
            "bleu1": bleu(refs, hyps, max_n=1),
            "bleu4": bleu(refs, hyps, max_n=4),
            "rouge1": rouge1(refs, hyps),
            "meteor": meteor(refs, hyps),
        }
        return EvalReport(
            task=task,
            scores=scores,
            n_turns=len(gold),
            n_gold_items=sum(len(r) for r in refs),
            n_pred_items=sum(len(h) for h in hyps),
            malformed_count=0,
        )

    vocab = vocab or Vocabulary.default()
    kind = LabelKind.INTENT if task is Task.NLU else LabelKind.ACTION
    gold_parsed = [parse_labels(s.target_seq, kind, vocab)[0] for s in gold]
    pred_parsed = []
    malformed = 0
    for p in predictions:
        labels, bad = parse_labels(p, kind, vocab)
        pred_parsed.append(labels)
        malformed += bad

    keys = range(len(gold))
    label_gold = {i: {l.label for l in gold_parsed[i]} for i in keys}
    label_pred = {i: {l.label for l in pred_parsed[i]} for i in keys}
    pair_gold = {i: {(l.label, l.slot) for l in gold_parsed[i]} for i in keys}
    pair_pred = {i: {(l.label, l.slot) for l in pred_parsed[i]} for i in keys}

    value_refs: list[list[str]] = []
    value_hyps: list[list[str]] = []
    for i in keys:
        for ref, hyp in _value_pairs(gold_parsed[i], pred_parsed[i]):
            value_refs.append(ref)
            value_hyps.append(hyp)
    if value_refs:
        value_bleu = bleu(value_refs, value_hyps, max_n=4)
    else:
        # no gold values anywhere: value generation is vacuously perfect
        value_bleu = 100.0

    pair_micro = micro_f1(pair_gold, pair_pred)
    scores = {
        "label_micro_f1": micro_f1(label_gold, label_pred),
        "label_macro_f1": macro_f1(label_gold, label_pred),
        "pair_micro_f1": pair_micro,
        "pair_macro_f1": macro_f1(pair_gold, pair_pred),
        "value_bleu": value_bleu,
        "combination": combination(pair_micro, value_bleu),
    }
    return EvalReport(
        task=task,
        scores=scores,
        n_turns=len(gold),
        n_gold_items=sum(len(s) for s in pair_gold.values()),
        n_pred_items=sum(len(s) for s in pair_pred.values()),
        malformed_count=malformed,
        breakdown={
            "label": f1_breakdown(label_gold, label_pred),
            "label_slot": f1_breakdown(
                pair_gold,
                pair_pred,
            ),
        },
    )
