"""Similarity-transfer pseudo labeling with rule-engine fallback.

Each unlabeled utterance is matched against every labeled pool utterance by
normalized edit-distance similarity. Above the threshold the best match's
labels are copied; otherwise the rule set is applied, with a configurable
default label so every output utterance carries at least one label.

The pool scan is the hot path: candidates are pre-filtered by a length-band
similarity ceiling and scanned with a bounded edit-distance kernel. Both
shortcuts are pure optimizations with results identical to a brute-force
scan (property-tested).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

from dialogforge.corpus import (
    KIND_FOR_SPEAKER,
    Corpus,
    Dialogue,
    LabelKind,
    Provenance,
    SemanticLabel,
    Speaker,
    Turn,
    Vocabulary,
)
from dialogforge.editdist import edit_distance
from dialogforge.errors import ValidationError

# (utterance text, labels of that utterance)
PoolEntry = tuple[str, tuple[SemanticLabel, ...]]


@dataclass(frozen=True)
class Rule:
    """Any-of pattern match assigning one label template.

    Patterns are regexes; plain substrings work as-is unless they contain
    regex metacharacters. ``value_pattern`` must have exactly one capture
    group; when it matches, the group fills the assigned label's value.
    """

    name: str
    patterns: tuple[re.Pattern, ...]
    speaker: Speaker | None
    kind: LabelKind
    label: str
    slot: str | None = None
    value_pattern: re.Pattern | None = None


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]

    def __len__(self) -> int:
        return len(self.rules)


@dataclass(frozen=True)
class PseudoConfig:
    delta: float = 0.8
    limit: int | None = None  # max unlabeled dialogues to process
    default_label_name: str = "Others"
    match_same_speaker: bool = True

    def validate(self) -> None:
        if not (0.0 <= self.delta <= 1.0):
            raise ValidationError(f"delta must be in [0, 1], got {self.delta}")
        if self.limit is not None and self.limit < 0:
            raise ValidationError(f"limit must be >= 0, got {self.limit}")


def load_rules(path: str | Path, vocab: Vocabulary | None = None) -> RuleSet:
    """Load and compile the JSON rules file, preserving file order.

    Schema: [{"name", "patterns": [...], "speaker": "doctor|patient|any",
              "assign": {"kind", "label", "slot", "value_pattern"}}]
    """
    vocab = vocab or Vocabulary.default()
    raw = json.loads(Path(path).read_text("utf-8"))
    if not isinstance(raw, list):
        raise ValidationError("rules file must contain a JSON array")
    rules: list[Rule] = []
    for i, entry in enumerate(raw):
        name = entry.get("name") or f"rule {i}"
        try:
            patterns = tuple(re.compile(p) for p in entry["patterns"])
            if not patterns:
                raise ValidationError(f"rule {name!r}: patterns must be non-empty")
            speaker_raw = entry.get("speaker", "any").lower()
            if speaker_raw == "any":
                speaker = None
            elif speaker_raw in ("patient", "doctor"):
                speaker = Speaker(speaker_raw.capitalize())
            else:
                raise ValidationError(f"rule {name!r}: speaker must be doctor|patient|any")
            assign = entry["assign"]
            kind = LabelKind(assign["kind"].capitalize())
            label = assign["label"]
            if label not in vocab.labels_for(kind):
                raise ValidationError(f"rule {name!r}: unknown label {label!r}")
            slot = assign.get("slot")
            if slot is not None and slot not in vocab.slots:
                raise ValidationError(f"rule {name!r}: unknown slot {slot!r}")
            vp_raw = assign.get("value_pattern")
            value_pattern = re.compile(vp_raw) if vp_raw else None
            if value_pattern is not None and value_pattern.groups != 1:
                raise ValidationError(
                    f"rule {name!r}: value_pattern needs exactly one capture group"
                )
        except KeyError as exc:
            raise ValidationError(f"rule {name!r}: missing key {exc}") from None
        except re.error as exc:
            raise ValidationError(f"rule {name!r}: invalid regex: {exc}") from None
        except ValueError as exc:
            raise ValidationError(f"rule {name!r}: {exc}") from None
        rules.append(Rule(name, patterns, speaker, kind, label, slot, value_pattern))
    return RuleSet(tuple(rules))


def apply_rules(turn: Turn, rules: RuleSet) -> list[SemanticLabel]:
    """Evaluate every rule in file order; duplicate assignments collapse.

    A rule's assigned kind acts as an implicit speaker filter: an Intent
    assignment can only ever fire on a patient turn, an Action assignment
    only on a doctor turn.
    """
    out: list[SemanticLabel] = []
    for rule in rules.rules:
        if rule.speaker is not None and turn.speaker is not rule.speaker:
            continue
        if rule.kind is not KIND_FOR_SPEAKER[turn.speaker]:
            continue
        if not any(p.search(turn.text) for p in rule.patterns):
            continue
        value = None
        if rule.value_pattern is not None:
            m = rule.value_pattern.search(turn.text)
            if m:
                value = m.group(1)
        if value is not None and rule.slot is None:
            value = None  # value without slot would violate the label invariant
        label = SemanticLabel(rule.kind, rule.label, rule.slot, value)
        if label not in out:
            out.append(label)
    return out


def max_similarity(utterance: str, pool) -> tuple[float, tuple[SemanticLabel, ...] | None]:
    """Best similarity over the pool and the labels of the best entry.

    Returns (0.0, None) on an empty pool; ties keep the first pool entry.
    Candidates are skipped when a length-based ceiling shows they cannot
    strictly beat the running maximum, and the edit-distance kernel aborts
    early past the matching distance bound; results are identical to a full
    scan.
    """
    eta = -1.0  # below any real score, so the first entry always wins
    best: tuple[SemanticLabel, ...] | None = None
    ql = len(utterance)
    for text, labels in pool:
        if best is not None and eta >= 1.0:
            break  # nothing can strictly beat a perfect score
        total = ql + len(text)
        if total == 0:
            score = 1.0
        elif best is None:
            score = 1.0 - edit_distance(utterance, text) / total
        else:
            # editdist >= |len difference|, so similarity <= this ceiling
            ceiling = 1.0 - abs(ql - len(text)) / total
            if ceiling <= eta:
                continue
            # largest distance that still strictly improves on eta
            bound = int((1.0 - eta) * total) + 2
            while bound > 0 and 1.0 - bound / total <= eta:
                bound -= 1
            if 1.0 - bound / total <= eta:
                continue
            d = edit_distance(utterance, text, limit=bound)
            if d > bound:
                continue
            score = 1.0 - d / total
        if score > eta:
            eta, best = score, tuple(labels)
    if best is None:
        return 0.0, None
    return eta, best


def _build_pools(pool: Corpus, same_speaker: bool) -> dict[Speaker, list[PoolEntry]]:
    pools: dict[Speaker, list[PoolEntry]] = {Speaker.PATIENT: [], Speaker.DOCTOR: []}
    for d in pool.dialogues:
        for t in d.turns:
            if t.labels:
                pools[t.speaker].append((t.text, t.labels))
    if not same_speaker:
        merged: list[PoolEntry] = []
        for d in pool.dialogues:
            for t in d.turns:
                if t.labels:
                    merged.append((t.text, t.labels))
        pools = {Speaker.PATIENT: merged, Speaker.DOCTOR: merged}
    return pools


def pseudo_label(
    unlabeled: Corpus, pool: Corpus, rules: RuleSet, cfg: PseudoConfig
) -> Corpus:
    """Label the first cfg.limit unlabeled dialogues (all when limit is None).

    Transfer happens only on strict eta > delta; everything else goes through
    the rules, then the default label. Fully deterministic.
    """
    cfg.validate()
    for d in pool.dialogues:
        if d.provenance is not Provenance.HUMAN_LABELED:
            raise ValidationError(
                f"pool dialogue {d.id} has provenance {d.provenance.value}; "
                "the pool must be human-labeled"
            )
    for d in unlabeled.dialogues:
        if any(t.labels for t in d.turns):
            raise ValidationError(f"dialogue {d.id} already carries labels")

    pools = _build_pools(pool, cfg.match_same_speaker)
    if not any(pools.values()) and not rules.rules:
        raise ValidationError("both the labeled pool and the rule set are empty; nothing can label")

    todo = unlabeled.dialogues
    if cfg.limit is not None:
        todo = todo[: cfg.limit]

    out: list[Dialogue] = []
    for d in todo:
        turns: list[Turn] = []
        for t in d.turns:
            eta, matched = max_similarity(t.text, pools[t.speaker])
            labels: list[SemanticLabel] = []
            if eta > cfg.delta and matched:
                # cross-speaker matches may carry the wrong kind; drop those
                labels = [l for l in matched if l.kind is KIND_FOR_SPEAKER[t.speaker]]
            if not labels:
                labels = apply_rules(t, rules)
            if not labels:
                labels = [SemanticLabel(KIND_FOR_SPEAKER[t.speaker], cfg.default_label_name)]
            turns.append(Turn(t.speaker, t.text, tuple(labels), t.extra))
        out.append(replace(d, turns=tuple(turns), provenance=Provenance.PSEUDO_LABELED))
    return unlabeled.replace_dialogues(out)
