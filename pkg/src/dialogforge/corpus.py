"""Corpus data model: dialogues with sub-utterance semantic labels.

On-disk format is JSONL, one dialogue per line:

    {"id": ..., "domain": ..., "disease_category": ..., "disease": ...,
     "services": ["Consultation", ...], "provenance": "HumanLabeled",
     "turns": [{"speaker": "Patient", "text": ...,
                "labels": [{"kind": "Intent", "label": ..., "slot": ..., "value": ...}]}]}

Absent ``slot``/``value`` keys are omitted, not null. Unknown fields at the
dialogue, turn and label level are preserved opaquely so that
``save_corpus(load_corpus(p))`` round-trips byte-for-byte. Field order on
save is the documented order above, then unknown keys sorted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from dialogforge.errors import FormatError, ValidationError


class Speaker(str, Enum):
    PATIENT = "Patient"
    DOCTOR = "Doctor"


class LabelKind(str, Enum):
    INTENT = "Intent"
    ACTION = "Action"


class Service(str, Enum):
    CONSULTATION = "Consultation"
    DIAGNOSIS = "Diagnosis"
    TREATMENT = "Treatment"


class Provenance(str, Enum):
    HUMAN_LABELED = "HumanLabeled"
    PSEUDO_LABELED = "PseudoLabeled"
    PERTURBED = "Perturbed"
    UNLABELED = "Unlabeled"


# Patient turns carry intents, doctor turns carry actions.
KIND_FOR_SPEAKER = {Speaker.PATIENT: LabelKind.INTENT, Speaker.DOCTOR: LabelKind.ACTION}


@dataclass(frozen=True)
class Vocabulary:
    """Closed label/slot vocabularies. Extend via a vocab JSON file, not code."""

    intents: tuple[str, ...]
    actions: tuple[str, ...]
    slots: tuple[str, ...]

    def __post_init__(self):
        # names collide with the serialization grammar otherwise
        bad = set("|;\\[]")
        for name in (*self.intents, *self.actions, *self.slots):
            if not name or name == "-" or bad & set(name):
                raise ValidationError(
                    f"vocabulary name {name!r} is empty or contains grammar characters"
                )

    def labels_for(self, kind: LabelKind) -> tuple[str, ...]:
        return self.intents if kind is LabelKind.INTENT else self.actions

    @staticmethod
    def default() -> "Vocabulary":
        raw = json.loads(resources.files("dialogforge").joinpath("data/vocab.json").read_text("utf-8"))
        return Vocabulary(tuple(raw["intents"]), tuple(raw["actions"]), tuple(raw["slots"]))

    @staticmethod
    def from_file(path: str | Path) -> "Vocabulary":
        raw = json.loads(Path(path).read_text("utf-8"))
        try:
            return Vocabulary(tuple(raw["intents"]), tuple(raw["actions"]), tuple(raw["slots"]))
        except KeyError as exc:
            raise ValidationError(f"vocabulary file {path} is missing key {exc}") from None


@dataclass(frozen=True)
class SemanticLabel:
    """One (kind, label, slot, value) annotation of a sub-utterance."""

    kind: LabelKind
    label: str
    slot: str | None = None
    value: str | None = None
    extra: dict = field(default_factory=dict, compare=True)


@dataclass(frozen=True)
class Turn:
    speaker: Speaker
    text: str
    labels: tuple[SemanticLabel, ...] = ()
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Dialogue:
    id: str
    domain: str
    disease_category: str
    disease: str
    services: frozenset[Service]
    turns: tuple[Turn, ...]
    provenance: Provenance = Provenance.UNLABELED
    extra: dict = field(default_factory=dict)

    def n_labels(self) -> int:
        return sum(len(t.labels) for t in self.turns)


@dataclass(frozen=True)
class Corpus:
    dialogues: tuple[Dialogue, ...]
    vocab: Vocabulary

    def __len__(self) -> int:
        return len(self.dialogues)

    def replace_dialogues(self, dialogues) -> "Corpus":
        return Corpus(tuple(dialogues), self.vocab)


@dataclass(frozen=True)
class StatsReport:
    """Descriptive corpus statistics; counts are exact, means derived."""

    n_dialogues: int
    n_utterances: int
    n_chars: int
    n_labels: int
    utterances_per_dialogue: float
    chars_per_dialogue: float
    chars_per_utterance: float
    labels_per_dialogue: float
    labels_per_utterance: float
    label_distribution: dict[str, int]  # label -> number of utterances containing it
    slot_distribution: dict[str, int]  # slot -> number of distinct entity values

    def to_dict(self) -> dict:
        return {
            "n_dialogues": self.n_dialogues,
            "n_utterances": self.n_utterances,
            "n_chars": self.n_chars,
            "n_labels": self.n_labels,
            "utterances_per_dialogue": self.utterances_per_dialogue,
            "chars_per_dialogue": self.chars_per_dialogue,
            "chars_per_utterance": self.chars_per_utterance,
            "labels_per_dialogue": self.labels_per_dialogue,
            "labels_per_utterance": self.labels_per_utterance,
            "label_distribution": self.label_distribution,
            "slot_distribution": self.slot_distribution,
        }


# ---------------------------------------------------------------------------
# Parsing / validation


def _parse_label(raw: dict, speaker: Speaker, vocab: Vocabulary, where: str,
                 unknown: list[str]) -> SemanticLabel:
    if not isinstance(raw, dict):
        raise ValidationError(f"{where}: label must be an object, got {type(raw).__name__}")
    try:
        kind = LabelKind(raw["kind"])
    except KeyError:
        raise ValidationError(f"{where}: label missing 'kind'") from None
    except ValueError:
        raise ValidationError(f"{where}: unknown label kind {raw['kind']!r}") from None
    if kind is not KIND_FOR_SPEAKER[speaker]:
        raise ValidationError(f"{where}: {kind.value} label on a {speaker.value} turn")

    name = raw.get("label")
    if not isinstance(name, str) or not name:
        raise ValidationError(f"{where}: label name missing or empty")
    if name not in vocab.labels_for(kind):
        unknown.append(f"{where}: unknown {kind.value.lower()} label {name!r}")

    slot = raw.get("slot")
    value = raw.get("value")
    if slot is not None and slot not in vocab.slots:
        unknown.append(f"{where}: unknown slot {slot!r}")
    if value is not None and slot is None:
        raise ValidationError(f"{where}: label has a value but no slot")
    if value is not None and (not isinstance(value, str) or not value):
        raise ValidationError(f"{where}: label value must be a non-empty string")

    extra = {k: v for k, v in raw.items() if k not in ("kind", "label", "slot", "value")}
    return SemanticLabel(kind, name, slot, value, extra)


def _parse_turn(raw: dict, vocab: Vocabulary, where: str, unknown: list[str]) -> Turn:
    try:
        speaker = Speaker(raw["speaker"])
    except KeyError:
        raise ValidationError(f"{where}: turn missing 'speaker'") from None
    except ValueError:
        raise ValidationError(f"{where}: unknown speaker {raw['speaker']!r}") from None
    text = raw.get("text")
    if not isinstance(text, str) or not text:
        raise ValidationError(f"{where}: turn text missing or empty")
    labels = tuple(
        _parse_label(l, speaker, vocab, f"{where} label {i}", unknown)
        for i, l in enumerate(raw.get("labels", []))
    )
    extra = {k: v for k, v in raw.items() if k not in ("speaker", "text", "labels")}
    return Turn(speaker, text, labels, extra)


def _parse_dialogue(raw: dict, vocab: Vocabulary, where: str, unknown: list[str]) -> Dialogue:
    did = raw.get("id")
    if not isinstance(did, str) or not did:
        raise ValidationError(f"{where}: dialogue id missing or empty")
    where = f"{where} (id={did})"

    raw_services = raw.get("services")
    if not isinstance(raw_services, list) or not raw_services:
        raise ValidationError(f"{where}: 'services' must be a non-empty list")
    try:
        services = frozenset(Service(s) for s in raw_services)
    except ValueError as exc:
        raise ValidationError(f"{where}: unknown service: {exc}") from None

    turns = tuple(
        _parse_turn(t, vocab, f"{where} turn {i}", unknown)
        for i, t in enumerate(raw.get("turns", []))
    )

    if "provenance" in raw:
        try:
            provenance = Provenance(raw["provenance"])
        except ValueError:
            raise ValidationError(f"{where}: unknown provenance {raw['provenance']!r}") from None
    else:
        # Records without a provenance tag: labelled content is assumed human.
        has_labels = any(t.labels for t in turns)
        provenance = Provenance.HUMAN_LABELED if has_labels else Provenance.UNLABELED

    known = ("id", "domain", "disease_category", "disease", "services", "provenance", "turns")
    extra = {k: v for k, v in raw.items() if k not in known}
    return Dialogue(
        id=did,
        domain=raw.get("domain", ""),
        disease_category=raw.get("disease_category", ""),
        disease=raw.get("disease", ""),
        services=services,
        turns=turns,
        provenance=provenance,
        extra=extra,
    )


def alternation_issues(dialogue: Dialogue) -> list[str]:
    """Turn-order problems, reported but never repaired here.

    The raw crawl may contain consecutive same-speaker messages; any repair
    policy belongs to the cleaning stage.
    """
    issues = []
    if dialogue.turns and dialogue.turns[0].speaker is not Speaker.PATIENT:
        issues.append(f"dialogue {dialogue.id}: first turn is not a Patient turn")
    for i in range(1, len(dialogue.turns)):
        if dialogue.turns[i].speaker is dialogue.turns[i - 1].speaker:
            issues.append(
                f"dialogue {dialogue.id}: turns {i - 1} and {i} have the same speaker"
            )
    return issues


def validate_corpus(corpus: Corpus) -> list[str]:
    """Re-check invariants on an in-memory corpus; returns soft warnings.

    Hard violations (vocabulary, kind/speaker, duplicate ids) raise
    ValidationError. Alternation violations are returned as warnings.
    """
    seen: set[str] = set()
    unknown: list[str] = []
    warnings: list[str] = []
    for d in corpus.dialogues:
        if d.id in seen:
            raise ValidationError(f"duplicate dialogue id {d.id!r}")
        seen.add(d.id)
        if not d.services:
            raise ValidationError(f"dialogue {d.id}: empty services")
        for ti, t in enumerate(d.turns):
            if not t.text:
                raise ValidationError(f"dialogue {d.id} turn {ti}: empty text")
            for l in t.labels:
                if l.kind is not KIND_FOR_SPEAKER[t.speaker]:
                    raise ValidationError(
                        f"dialogue {d.id} turn {ti}: {l.kind.value} label on a "
                        f"{t.speaker.value} turn"
                    )
                if l.label not in corpus.vocab.labels_for(l.kind):
                    unknown.append(f"dialogue {d.id} turn {ti}: unknown label {l.label!r}")
                if l.slot is not None and l.slot not in corpus.vocab.slots:
                    unknown.append(f"dialogue {d.id} turn {ti}: unknown slot {l.slot!r}")
                if l.value is not None and l.slot is None:
                    raise ValidationError(f"dialogue {d.id} turn {ti}: value without slot")
        warnings.extend(alternation_issues(d))
    if unknown:
        raise ValidationError("vocabulary violations:\n" + "\n".join(unknown))
    return warnings


# ---------------------------------------------------------------------------
# Load / save


def load_corpus(path: str | Path, vocab: Vocabulary | None = None) -> Corpus:
    """Read a JSONL corpus file.

    Raises FormatError (with line number) on malformed JSON, and
    ValidationError listing every unknown label/slot offender.
    """
    vocab = vocab or Vocabulary.default()
    dialogues: list[Dialogue] = []
    unknown: list[str] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc.msg}", line=lineno) from None
            if not isinstance(raw, dict):
                raise FormatError("dialogue record must be a JSON object", line=lineno)
            try:
                d = _parse_dialogue(raw, vocab, f"line {lineno}", unknown)
            except ValidationError:
                raise
            if d.id in seen_ids:
                raise ValidationError(f"line {lineno}: duplicate dialogue id {d.id!r}")
            seen_ids.add(d.id)
            dialogues.append(d)
    if unknown:
        raise ValidationError("vocabulary violations:\n" + "\n".join(unknown))
    return Corpus(tuple(dialogues), vocab)


def _label_dict(l: SemanticLabel) -> dict:
    out: dict = {"kind": l.kind.value, "label": l.label}
    if l.slot is not None:
        out["slot"] = l.slot
    if l.value is not None:
        out["value"] = l.value
    for k in sorted(l.extra):
        out[k] = l.extra[k]
    return out


def _turn_dict(t: Turn) -> dict:
    out: dict = {"speaker": t.speaker.value, "text": t.text,
                 "labels": [_label_dict(l) for l in t.labels]}
    for k in sorted(t.extra):
        out[k] = t.extra[k]
    return out


def dialogue_to_dict(d: Dialogue) -> dict:
    out: dict = {
        "id": d.id,
        "domain": d.domain,
        "disease_category": d.disease_category,
        "disease": d.disease,
        "services": sorted(s.value for s in d.services),
        "provenance": d.provenance.value,
        "turns": [_turn_dict(t) for t in d.turns],
    }
    for k in sorted(d.extra):
        out[k] = d.extra[k]
    return out


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write JSONL with the documented, bit-stable field ordering."""
    with open(path, "w", encoding="utf-8") as fh:
        for d in corpus.dialogues:
            fh.write(json.dumps(dialogue_to_dict(d), ensure_ascii=False))
            fh.write("\n")


# ---------------------------------------------------------------------------
# Statistics


def corpus_stats(corpus: Corpus) -> StatsReport:
    """Table-2 style statistics plus label/slot distributions.

    Character counts are Unicode scalar values, so CJK text counts one per
    character. An empty corpus yields an all-zero report.
    """
    n_dialogues = len(corpus.dialogues)
    n_utterances = sum(len(d.turns) for d in corpus.dialogues)
    n_chars = sum(len(t.text) for d in corpus.dialogues for t in d.turns)
    n_labels = sum(d.n_labels() for d in corpus.dialogues)

    label_dist: dict[str, int] = {}
    slot_values: dict[str, set[str]] = {}
    for d in corpus.dialogues:
        for t in d.turns:
            for name in {l.label for l in t.labels}:
                label_dist[name] = label_dist.get(name, 0) + 1
            for l in t.labels:
                if l.slot is not None and l.value is not None:
                    slot_values.setdefault(l.slot, set()).add(l.value)

    def ratio(num: int, den: int) -> float:
        return num / den if den else 0.0

    return StatsReport(
        n_dialogues=n_dialogues,
        n_utterances=n_utterances,
        n_chars=n_chars,
        n_labels=n_labels,
        utterances_per_dialogue=ratio(n_utterances, n_dialogues),
        chars_per_dialogue=ratio(n_chars, n_dialogues),
        chars_per_utterance=ratio(n_chars, n_utterances),
        labels_per_dialogue=ratio(n_labels, n_dialogues),
        labels_per_utterance=ratio(n_labels, n_utterances),
        label_distribution=dict(sorted(label_dist.items())),
        slot_distribution={s: len(v) for s, v in sorted(slot_values.items())},
    )
