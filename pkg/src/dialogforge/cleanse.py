"""Cleaning, anonymization and disease-balanced sampling.

All transforms are pure corpus -> corpus functions. The filters have
set-intersection semantics, so they are idempotent and commute pairwise.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field, replace

from dialogforge.corpus import Corpus, Dialogue, SemanticLabel, Turn
from dialogforge.errors import ValidationError
from dialogforge.knowledge import KnowledgeBase

_TOKEN_RE = re.compile(r"^\[[A-Z][A-Z0-9_]*\]$")

DEFAULT_MEDIA_MARKERS = ("[图片]", "[语音]", "[视频]", "[IMAGE]", "[AUDIO]")


@dataclass(frozen=True)
class AnonymizeRule:
    """Pattern -> bracketed replacement token, e.g. 协和医院 -> [HOSPITAL]."""

    pattern: str
    token: str
    regex: bool = False

    def compiled(self) -> re.Pattern:
        return re.compile(self.pattern if self.regex else re.escape(self.pattern))


@dataclass(frozen=True)
class CleanConfig:
    min_utterances: int = 8
    media_markers: tuple[str, ...] = DEFAULT_MEDIA_MARKERS
    min_kb_entities: int = 1
    anonymize_rules: tuple[AnonymizeRule, ...] = ()

    def validate(self) -> None:
        if self.min_utterances < 1:
            raise ValidationError("clean.min_utterances must be >= 1")
        tokens = [r.token for r in self.anonymize_rules]
        for token in tokens:
            if not _TOKEN_RE.match(token):
                raise ValidationError(
                    f"replacement token {token!r} must be bracketed uppercase, e.g. [HOSPITAL]"
                )
        if len(set(tokens)) != len(tokens):
            raise ValidationError("anonymize rules must use distinct replacement tokens")
        # a pattern matching any replacement token would break idempotence
        for rule in self.anonymize_rules:
            pat = rule.compiled()
            for token in tokens:
                if pat.search(token):
                    raise ValidationError(
                        f"anonymize pattern {rule.pattern!r} matches token {token!r}"
                    )

    @staticmethod
    def from_dict(raw: dict) -> "CleanConfig":
        rules = tuple(
            AnonymizeRule(r["pattern"], r["token"], bool(r.get("regex", False)))
            for r in raw.get("anonymize_rules", [])
        )
        cfg = CleanConfig(
            min_utterances=int(raw.get("min_utterances", 8)),
            media_markers=tuple(raw.get("media_markers", DEFAULT_MEDIA_MARKERS)),
            min_kb_entities=int(raw.get("min_kb_entities", 1)),
            anonymize_rules=rules,
        )
        cfg.validate()
        return cfg


def filter_short(corpus: Corpus, min_utterances: int) -> Corpus:
    """Drop dialogues with fewer than min_utterances turns (strict 'less than')."""
    return corpus.replace_dialogues(
        d for d in corpus.dialogues if len(d.turns) >= min_utterances
    )


def filter_media(corpus: Corpus, media_markers) -> Corpus:
    """Drop dialogues whose turn *text* contains any media marker.

    Markers inside label values do not count; this is a text-only rule.
    """
    markers = tuple(media_markers)

    def has_media(d: Dialogue) -> bool:
        return any(m in t.text for t in d.turns for m in markers)

    return corpus.replace_dialogues(d for d in corpus.dialogues if not has_media(d))


def filter_low_entity(corpus: Corpus, kb: KnowledgeBase, min_kb_entities: int) -> Corpus:
    """Drop dialogues mentioning fewer than min_kb_entities distinct KB entities.

    Mention detection is exact substring match against the entity index;
    fuzzy matching is reserved for standardization.
    """
    if min_kb_entities <= 0:
        return corpus
    entities = list(kb.entity_index)

    def n_mentions(d: Dialogue) -> int:
        joined = "\n".join(t.text for t in d.turns)
        return sum(1 for e in entities if e in joined)

    return corpus.replace_dialogues(
        d for d in corpus.dialogues if n_mentions(d) >= min_kb_entities
    )


def _anonymize_turn(turn: Turn, compiled: list[tuple[re.Pattern, str]]) -> Turn:
    text = turn.text
    labels = list(turn.labels)
    for pattern, token in compiled:
        spans = [m.span() for m in pattern.finditer(text)]
        if not spans:
            continue
        new_labels: list[SemanticLabel] = []
        for label in labels:
            value = label.value
            if value:
                # replace the value iff one of its text occurrences sits
                # inside a replaced span
                start = text.find(value)
                hit = False
                while start != -1 and not hit:
                    end = start + len(value)
                    hit = any(s <= start and end <= e for s, e in spans)
                    start = text.find(value, start + 1)
                if hit:
                    label = replace(label, value=token)
            new_labels.append(label)
        labels = new_labels
        text = pattern.sub(token, text)
    if text == turn.text and tuple(labels) == turn.labels:
        return turn
    return Turn(turn.speaker, text, tuple(labels), turn.extra)


def anonymize(corpus: Corpus, anonymize_rules) -> Corpus:
    """Replace sensitive spans in turn texts (and covered label values) by tokens."""
    rules = tuple(anonymize_rules)
    CleanConfig(anonymize_rules=rules).validate()
    compiled = [(r.compiled(), r.token) for r in rules]

    def one(d: Dialogue) -> Dialogue:
        turns = tuple(_anonymize_turn(t, compiled) for t in d.turns)
        if turns == d.turns:
            return d
        return replace(d, turns=turns)

    return corpus.replace_dialogues(one(d) for d in corpus.dialogues)


def balanced_sample(corpus: Corpus, fraction: float, seed: int) -> Corpus:
    """Sample round(fraction * n_d) dialogues per disease, deterministically.

    Rounding is half-up with a floor of one dialogue per disease present, so
    no disease class silently disappears. The RNG stream is keyed by
    (seed, disease), which makes the output independent of any scheduling.
    """
    if not (0 < fraction <= 1):
        raise ValidationError(f"fraction must be in (0, 1], got {fraction}")
    groups: dict[str, list[Dialogue]] = {}
    for d in corpus.dialogues:
        if not d.disease:
            raise ValidationError(f"dialogue {d.id} has no disease; cannot balance")
        groups.setdefault(d.disease, []).append(d)

    selected: set[str] = set()
    for disease in sorted(groups):
        group = groups[disease]
        count = int(math.floor(fraction * len(group) + 0.5))
        count = max(1, min(count, len(group)))
        rng = random.Random(f"{seed}\x1f{disease}")
        for i in sorted(rng.sample(range(len(group)), count)):
            selected.add(group[i].id)

    return corpus.replace_dialogues(d for d in corpus.dialogues if d.id in selected)
