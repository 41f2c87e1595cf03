from __future__ import annotations

from pathlib import Path

import pytest

from dialogforge.corpus import (
    Corpus,
    Dialogue,
    LabelKind,
    Provenance,
    SemanticLabel,
    Service,
    Speaker,
    Turn,
    Vocabulary,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def label(kind, name, slot=None, value=None) -> SemanticLabel:
    return SemanticLabel(LabelKind(kind), name, slot, value)


def patient(text, *labels) -> Turn:
    return Turn(Speaker.PATIENT, text, tuple(labels))


def doctor(text, *labels) -> Turn:
    return Turn(Speaker.DOCTOR, text, tuple(labels))


def dialogue(did, turns, disease="感冒", provenance=Provenance.HUMAN_LABELED) -> Dialogue:
    return Dialogue(
        id=did,
        domain="呼吸内科",
        disease_category="呼吸内科",
        disease=disease,
        services=frozenset({Service.CONSULTATION, Service.DIAGNOSIS}),
        turns=tuple(turns),
        provenance=provenance,
    )


def corpus(*dialogues, vocab=None) -> Corpus:
    return Corpus(tuple(dialogues), vocab or Vocabulary.default())


@pytest.fixture(scope="session")
def vocab() -> Vocabulary:
    return Vocabulary.default()


@pytest.fixture(scope="session")
def fixture_corpus_path() -> Path:
    return FIXTURES / "corpus_20.jsonl"


@pytest.fixture(scope="session")
def fixture_kb_path() -> Path:
    return FIXTURES / "kb.tsv"


@pytest.fixture(scope="session")
def fixture_rules_path() -> Path:
    return FIXTURES / "rules.json"


@pytest.fixture()
def small_dialogue() -> Dialogue:
    return dialogue(
        "d1",
        [
            patient(
                "医生您好，我头痛已经3天了。",
                label("Intent", "Informing", "Symptom", "头痛"),
                label("Intent", "Informing", "Time", "3天"),
            ),
            doctor(
                "建议口服对乙酰氨基酚。",
                label("Action", "Recommendation", "Medicine", "对乙酰氨基酚"),
            ),
            patient("好的，谢谢医生。", label("Intent", "Chitchat")),
            doctor("不客气，注意休息。", label("Action", "Chitchat")),
        ],
    )
