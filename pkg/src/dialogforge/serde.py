"""Task-sample construction and the label serialization grammar.

Grammar constants (bit-exact):

* role tags ``[PATIENT]`` / ``[DOCTOR]``, section tags ``[NLU]`` ``[KB]``
  ``[DPL]`` ``[RESP]``, all joined by single spaces;
* a label renders as ``label | slot | value`` with ``-`` for absent parts,
  labels joined by `` ; ``;
* a knowledge triple renders as ``head # relation # tail``, triples joined
  by `` ; ``;
* inside values, ``\\`` ``|`` ``;`` are backslash-escaped and a value that
  is exactly ``-`` renders as ``\\-``, which makes label serialization
  fully reversible;
* grammar tags occurring inside corpus text or values are neutralized to
  fullwidth brackets (``[KB]`` -> ``【KB】``) when building samples.

Task inputs nest: NLU input is the role-tagged history, the DPL input
appends ``[NLU] <labels> [KB] <triples>``, the NLG input appends
``[DPL] <labels>``. The Conditional format keeps input and target apart;
the Causal format appends the task's target tag to the input and prefixes
the target with one space, so input + target is the full training sequence
``history [NLU] I [KB] K [DPL] A [RESP] response``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from dialogforge.corpus import (
    Corpus,
    Dialogue,
    LabelKind,
    SemanticLabel,
    Speaker,
    Vocabulary,
)
from dialogforge.errors import FormatError, ValidationError
from dialogforge.knowledge import KnowledgeBase, KnowledgeTriple, retrieve_knowledge


class Task(str, Enum):
    NLU = "NLU"
    DPL = "DPL"
    NLG = "NLG"


class SampleFormat(str, Enum):
    CAUSAL = "Causal"
    CONDITIONAL = "Conditional"


ROLE_TAGS = {Speaker.PATIENT: "[PATIENT]", Speaker.DOCTOR: "[DOCTOR]"}
TAG_NLU = "[NLU]"
TAG_KB = "[KB]"
TAG_DPL = "[DPL]"
TAG_RESP = "[RESP]"
ALL_TAGS = ("[PATIENT]", "[DOCTOR]", TAG_NLU, TAG_KB, TAG_DPL, TAG_RESP)
TARGET_TAG = {Task.NLU: TAG_NLU, Task.DPL: TAG_DPL, Task.NLG: TAG_RESP}
ITEM_SEP = " ; "
FIELD_SEP = " | "
KB_FIELD_SEP = " # "
ABSENT = "-"

DEFAULT_KB_TRIPLES = 5  # K_t cap; unbounded retrieval would swamp the context


@dataclass(frozen=True)
class TaskSample:
    task: Task
    dialogue_id: str
    turn_index: int  # 1-based position of the patient turn in the dialogue
    input_seq: str
    target_seq: str
    format: SampleFormat

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "dialogue_id": self.dialogue_id,
            "turn_index": self.turn_index,
            "format": self.format.value,
            "input": self.input_seq,
            "target": self.target_seq,
        }


def neutralize_tags(text: str) -> str:
    """Rewrite grammar-tag collisions in free text to fullwidth brackets."""
    for tag in ALL_TAGS:
        if tag in text:
            text = text.replace(tag, "【" + tag[1:-1] + "】")
    return text


def _escape_value(value: str) -> str:
    out = value.replace("\\", "\\\\").replace("|", "\\|").replace(";", "\\;")
    if value == ABSENT:
        out = "\\-"
    return out


def _unescape(text: str) -> str:
    parts: list[str] = []
    i = 0
    while i < len(text):
        if text[i] == "\\" and i + 1 < len(text):
            parts.append(text[i + 1])
            i += 2
        else:
            parts.append(text[i])
            i += 1
    return "".join(parts)


def _split_unescaped(text: str, sep: str) -> list[str]:
    parts: list[str] = []
    buf: list[str] = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text):
            buf.append(c)
            buf.append(text[i + 1])
            i += 2
        elif c == sep:
            parts.append("".join(buf))
            buf = []
            i += 1
        else:
            buf.append(c)
            i += 1
    parts.append("".join(buf))
    return parts


def serialize_labels(labels) -> str:
    """Render labels in corpus order; reversible via parse_labels."""
    rendered = []
    for l in labels:
        value = _escape_value(l.value) if l.value is not None else ABSENT
        rendered.append(f"{l.label}{FIELD_SEP}{l.slot or ABSENT}{FIELD_SEP}{value}")
    return ITEM_SEP.join(rendered)


def parse_labels(
    text: str, kind: LabelKind, vocab: Vocabulary | None = None
) -> tuple[list[SemanticLabel], int]:
    """Lenient inverse of serialize_labels over arbitrary model output.

    Unparseable segments are skipped and counted; whitespace-only segments
    are ignored. Never raises.
    """
    vocab = vocab or Vocabulary.default()
    labels: list[SemanticLabel] = []
    malformed = 0
    segments = _split_unescaped(text, ";")
    for idx, segment in enumerate(segments):
        if not segment.strip():
            continue
        fields = _split_unescaped(segment, "|")
        if len(fields) > 3:
            malformed += 1
            continue
        name = fields[0].strip()
        slot = None
        value = None
        if len(fields) >= 2:
            slot_field = fields[1].strip()
            slot = None if slot_field in ("", ABSENT) else slot_field
        if len(fields) == 3:
            raw = fields[2]
            # the grammar pads the value with one leading space, plus one
            # trailing space when another " ; "-joined segment follows
            if raw.startswith(" "):
                raw = raw[1:]
            if idx < len(segments) - 1 and raw.endswith(" "):
                raw = raw[:-1]
            if raw in ("", ABSENT):
                value = None
            else:
                value = _unescape(raw)
        if name not in vocab.labels_for(kind):
            malformed += 1
            continue
        if slot is not None and slot not in vocab.slots:
            malformed += 1
            continue
        if value is not None and slot is None:
            malformed += 1
            continue
        labels.append(SemanticLabel(kind, name, slot, value))
    return labels, malformed


def serialize_kb(triples) -> str:
    return ITEM_SEP.join(
        KB_FIELD_SEP.join(neutralize_tags(f) for f in (t.head, t.relation, t.tail))
        for t in triples
    )


def serialize_history(dialogue: Dialogue, t: int, max_chars: int | None = None) -> str:
    """Role-tagged concatenation of turns 1..t; t must be a patient turn.

    Truncation is off by default; with max_chars set, the oldest part of
    the history is cut so the most recent context survives.
    """
    if t < 1 or t > len(dialogue.turns):
        raise ValidationError(
            f"dialogue {dialogue.id}: turn index {t} out of range 1..{len(dialogue.turns)}"
        )
    if dialogue.turns[t - 1].speaker is not Speaker.PATIENT:
        raise ValidationError(f"dialogue {dialogue.id}: turn {t} is not a patient turn")
    parts = []
    for turn in dialogue.turns[:t]:
        parts.append(ROLE_TAGS[turn.speaker])
        parts.append(neutralize_tags(turn.text))
    out = " ".join(parts)
    if max_chars is not None and len(out) > max_chars:
        out = out[-max_chars:]
    return out


def _join(*sections: str) -> str:
    return " ".join(s for s in sections if s)


def compose_dpl_input(history: str, nlu_ser: str, kb_ser: str) -> str:
    return _join(history, TAG_NLU, nlu_ser, TAG_KB, kb_ser)


def compose_nlg_input(dpl_input: str, dpl_ser: str) -> str:
    return _join(dpl_input, TAG_DPL, dpl_ser)


def _neutralized(labels) -> list[SemanticLabel]:
    return [
        replace(l, value=neutralize_tags(l.value)) if l.value is not None else l
        for l in labels
    ]


def build_sample(
    dialogue: Dialogue,
    t: int,
    kb: KnowledgeBase,
    task: Task,
    format: SampleFormat,
    k: int = DEFAULT_KB_TRIPLES,
    max_chars: int | None = None,
) -> TaskSample:
    """One (input, target) instance for patient turn t.

    NLU: input [U_t], target I_t. DPL: input [U_t; I_t; K_t], target A_t.
    NLG: input [U_t; I_t; K_t; A_t], target the doctor response. K_t comes
    from retrieving the NLU labels' values against the knowledge base.
    """
    history = serialize_history(dialogue, t, max_chars)
    patient = dialogue.turns[t - 1]
    if not patient.labels:
        raise ValidationError(f"dialogue {dialogue.id} turn {t}: missing gold labels")
    nlu_ser = serialize_labels(_neutralized(patient.labels))

    if task is Task.NLU:
        input_seq, target_seq = history, nlu_ser
    else:
        triples = retrieve_knowledge(list(patient.labels), kb, k)
        dpl_input = compose_dpl_input(history, nlu_ser, serialize_kb(triples))
        if t >= len(dialogue.turns) or dialogue.turns[t].speaker is not Speaker.DOCTOR:
            raise ValidationError(
                f"dialogue {dialogue.id} turn {t}: no doctor response to learn from"
            )
        doctor = dialogue.turns[t]
        if task is Task.DPL:
            if not doctor.labels:
                raise ValidationError(
                    f"dialogue {dialogue.id} turn {t + 1}: missing gold labels"
                )
            input_seq, target_seq = dpl_input, serialize_labels(_neutralized(doctor.labels))
        else:
            if not doctor.labels:
                raise ValidationError(
                    f"dialogue {dialogue.id} turn {t + 1}: missing gold labels"
                )
            dpl_ser = serialize_labels(_neutralized(doctor.labels))
            input_seq = compose_nlg_input(dpl_input, dpl_ser)
            target_seq = neutralize_tags(doctor.text)

    if format is SampleFormat.CAUSAL:
        input_seq = f"{input_seq} {TARGET_TAG[task]}"
        target_seq = f" {target_seq}"
    return TaskSample(task, dialogue.id, t, input_seq, target_seq, format)


def sample_points(dialogue: Dialogue, task: Task) -> list[int]:
    """Patient-turn indices that yield a sample for the task.

    NLU samples every patient turn; DPL/NLG additionally need the doctor
    response that follows.
    """
    points = []
    for i, turn in enumerate(dialogue.turns):
        if turn.speaker is not Speaker.PATIENT:
            continue
        if task is not Task.NLU:
            if i + 1 >= len(dialogue.turns):
                continue
            if dialogue.turns[i + 1].speaker is not Speaker.DOCTOR:
                continue
        points.append(i + 1)
    return points


def export_training_set(
    corpus: Corpus,
    kb: KnowledgeBase,
    task: Task,
    format: SampleFormat,
    path: str | Path,
    k: int = DEFAULT_KB_TRIPLES,
    max_chars: int | None = None,
) -> int:
    """Write one TaskSample per (dialogue, patient turn) as JSONL.

    Order is deterministic: dialogue order, then turn order. Returns the
    number of samples written.
    """
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for dialogue in corpus.dialogues:
            for t in sample_points(dialogue, task):
                sample = build_sample(dialogue, t, kb, task, format, k, max_chars)
                fh.write(json.dumps(sample.to_dict(), ensure_ascii=False))
                fh.write("\n")
                n += 1
    return n


def load_samples(path: str | Path) -> list[TaskSample]:
    """Read a TaskSample JSONL file back."""
    samples: list[TaskSample] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                samples.append(
                    TaskSample(
                        Task(raw["task"]),
                        raw["dialogue_id"],
                        int(raw["turn_index"]),
                        raw["input"],
                        raw["target"],
                        SampleFormat(raw["format"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise FormatError(f"bad task sample: {exc}", line=lineno) from None
    return samples
