"""Natural perturbation: alias substitution, back-translation, random typos.

Every strategy is seed-deterministic per dialogue (RNG keyed by seed and
dialogue id), preserves turn count, label count, speaker sequence and
dialogue ids, and leaves untouched dialogues unchanged. Strategies compose
in the fixed order alias -> back-translation -> random modification.
"""

from __future__ import annotations

import json
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import requests

from dialogforge.corpus import Corpus, Dialogue, Provenance, Turn
from dialogforge.errors import ForgeError, ValidationError


class Strategy(str, Enum):
    ALIAS_SUBSTITUTION = "alias"
    BACK_TRANSLATION = "back-translation"
    RANDOM_MODIFICATION = "random-modification"


# ---------------------------------------------------------------------------
# Translation providers


class IdentityTranslator:
    """No-op provider, mainly for tests and ablations."""

    def forward(self, text: str) -> str:
        return text

    def backward(self, text: str) -> str:
        return text


class FixtureTranslator:
    """Replays recorded translations from a JSONL file.

    Record schema: {"text": source, "forward": pivot, "backward": round-trip}.
    Unrecorded inputs pass through unchanged so the provider stays total.
    """

    def __init__(self, path: str | Path):
        self._forward: dict[str, str] = {}
        self._backward: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._forward[rec["text"]] = rec["forward"]
                self._backward[rec["forward"]] = rec["backward"]

    def forward(self, text: str) -> str:
        return self._forward.get(text, text)

    def backward(self, text: str) -> str:
        return self._backward.get(text, text)


class HttpTranslator:
    """Client for an external translation endpoint.

    Contract: POST {url}/translate with {"text", "src", "dst"} returning
    {"text": ...}.
    """

    def __init__(self, url: str, src: str = "zh", dst: str = "en", timeout: float = 30.0):
        self.url = url.rstrip("/")
        self.src = src
        self.dst = dst
        self.timeout = timeout

    def _call(self, text: str, src: str, dst: str) -> str:
        resp = requests.post(
            f"{self.url}/translate",
            json={"text": text, "src": src, "dst": dst},
            timeout=self.timeout,
        )
        resp.raise_for_status()
        return resp.json()["text"]

    def forward(self, text: str) -> str:
        return self._call(text, self.src, self.dst)

    def backward(self, text: str) -> str:
        return self._call(text, self.dst, self.src)


def make_translator(spec: str):
    """Resolve a provider id: 'identity', 'fixture:<path>' or an HTTP URL."""
    if spec == "identity":
        return IdentityTranslator()
    if spec.startswith("fixture:"):
        return FixtureTranslator(spec.split(":", 1)[1])
    if spec.startswith(("http://", "https://")):
        return HttpTranslator(spec)
    raise ValidationError(f"unknown translator provider {spec!r}")


# ---------------------------------------------------------------------------
# Config


@dataclass(frozen=True)
class PerturbConfig:
    strategies: frozenset[Strategy] = frozenset({Strategy.ALIAS_SUBSTITUTION})
    alias_lexicon_path: str | None = None
    translator: str = "identity"
    rm_ops_per_dialogue: int = 1
    rm_op_mix: dict[str, float] = field(
        default_factory=lambda: {"add": 1.0, "delete": 1.0, "replace": 1.0}
    )
    seed: int = 0

    def validate(self) -> None:
        if not self.strategies:
            raise ValidationError("at least one perturbation strategy must be enabled")
        if self.rm_ops_per_dialogue < 0:
            raise ValidationError("rm_ops_per_dialogue must be >= 0")
        weights = [self.rm_op_mix.get(op, 0.0) for op in ("add", "delete", "replace")]
        if any(w < 0 for w in weights) or not any(w > 0 for w in weights):
            raise ValidationError("rm_op_mix weights must be non-negative and not all zero")


def _rng(*parts) -> random.Random:
    # str-seeded Random is stable across processes, unlike hash()
    return random.Random("\x1f".join(str(p) for p in parts))


# ---------------------------------------------------------------------------
# Strategies


def alias_substitute(dialogue: Dialogue, lexicon, seed: int) -> Dialogue:
    """Swap every lexicon entity for one seeded alias choice per dialogue.

    All text occurrences of an entity and every label value equal to it get
    the same alias, keeping annotations consistent with the new surface form.
    """
    present = sorted(
        e for e in lexicon if any(e in t.text for t in dialogue.turns)
    )
    if not present:
        return dialogue
    rng = _rng(seed, dialogue.id, "alias")
    chosen = {e: rng.choice(list(lexicon[e])) for e in present}
    # longest-first alternation so nested entity names cannot clobber each other
    pattern = re.compile(
        "|".join(re.escape(e) for e in sorted(present, key=len, reverse=True))
    )

    def sub_text(text: str) -> str:
        return pattern.sub(lambda m: chosen[m.group(0)], text)

    turns = []
    for t in dialogue.turns:
        labels = tuple(
            replace(l, value=chosen[l.value]) if l.value in chosen else l
            for l in t.labels
        )
        turns.append(Turn(t.speaker, sub_text(t.text), labels, t.extra))
    return replace(dialogue, turns=tuple(turns), provenance=Provenance.PERTURBED)


def back_translate(dialogue: Dialogue, translator) -> Dialogue:
    """Replace each turn text by backward(forward(text)); labels are kept.

    Annotations here are value-based, not character offsets, so they survive
    rephrasing. A provider failure aborts the whole dialogue.
    """
    texts = []
    for i, t in enumerate(dialogue.turns):
        try:
            out = translator.backward(translator.forward(t.text))
        except Exception as exc:
            raise ForgeError(
                f"translation failed at dialogue {dialogue.id} turn {i}: {exc}"
            ) from exc
        if not out:
            raise ForgeError(
                f"translator returned empty text at dialogue {dialogue.id} turn {i}"
            )
        texts.append(out)
    if texts == [t.text for t in dialogue.turns]:
        return dialogue
    turns = tuple(
        Turn(t.speaker, texts[i], t.labels, t.extra)
        for i, t in enumerate(dialogue.turns)
    )
    return replace(dialogue, turns=turns, provenance=Provenance.PERTURBED)


def _entity_occurrences(dialogue: Dialogue) -> list[tuple[int, int, int]]:
    """(turn index, start, length) of every label value found in its turn text."""
    occs: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int, int]] = set()
    for ti, t in enumerate(dialogue.turns):
        for label in t.labels:
            if not label.value:
                continue
            start = t.text.find(label.value)
            while start != -1:
                key = (ti, start, len(label.value))
                if key not in seen:
                    seen.add(key)
                    occs.append(key)
                start = t.text.find(label.value, start + 1)
    occs.sort()
    return occs


def random_modify(
    dialogue: Dialogue, cfg: PerturbConfig, seed: int, alphabet: str | None = None
) -> Dialogue:
    """Inject up to cfg.rm_ops_per_dialogue single-character typos.

    Typos hit entity spans (label values found verbatim in turn text); the
    label value keeps its original form, simulating a misspelled mention
    against a gold annotation. Characters come from the observed corpus
    alphabet, not all of Unicode.
    """
    if cfg.rm_ops_per_dialogue == 0:
        return dialogue
    occurrences = _entity_occurrences(dialogue)
    if not occurrences:
        return dialogue
    if alphabet is None:
        alphabet = "".join(sorted({c for t in dialogue.turns for c in t.text}))

    rng = _rng(seed, dialogue.id, "rm")
    k = min(cfg.rm_ops_per_dialogue, len(occurrences))
    picked: list[tuple[int, int, int]] = []
    for occ in rng.sample(occurrences, k):
        ti, start, length = occ
        overlaps = any(
            pti == ti and start < ps + pl and ps < start + length
            for pti, ps, pl in picked
        )
        if not overlaps:
            picked.append(occ)
    # apply bottom-up so earlier offsets in the same turn stay valid
    picked.sort(reverse=True)

    ops = ("add", "delete", "replace")
    weights = [cfg.rm_op_mix.get(op, 0.0) for op in ops]
    texts = [t.text for t in dialogue.turns]
    changed = False
    for ti, start, length in picked:
        op = rng.choices(ops, weights=weights)[0]
        text = texts[ti]
        if op == "add":
            pos = start + rng.randrange(length + 1)
            ch = rng.choice(alphabet)
            texts[ti] = text[:pos] + ch + text[pos:]
            changed = True
        elif op == "delete":
            if length == 1:
                continue  # deleting a 1-char entity would erase it
            pos = start + rng.randrange(length)
            texts[ti] = text[:pos] + text[pos + 1 :]
            changed = True
        else:  # replace
            pos = start + rng.randrange(length)
            candidates = [c for c in alphabet if c != text[pos]]
            if not candidates:
                continue
            texts[ti] = text[:pos] + rng.choice(candidates) + text[pos + 1 :]
            changed = True
    if not changed:
        return dialogue
    turns = tuple(
        Turn(t.speaker, texts[i], t.labels, t.extra)
        for i, t in enumerate(dialogue.turns)
    )
    return replace(dialogue, turns=turns, provenance=Provenance.PERTURBED)


# ---------------------------------------------------------------------------
# Corpus-level composition


def perturb_corpus(corpus: Corpus, cfg: PerturbConfig, workers: int = 1) -> Corpus:
    """Apply the enabled strategies per dialogue, in fixed order.

    Per-dialogue RNG keying makes the output bit-identical for any worker
    count; workers only matter for throughput with the HTTP translator.
    """
    cfg.validate()
    lexicon: dict[str, tuple[str, ...]] = {}
    if Strategy.ALIAS_SUBSTITUTION in cfg.strategies and cfg.alias_lexicon_path:
        from dialogforge.knowledge import load_alias_lexicon

        lexicon = load_alias_lexicon(cfg.alias_lexicon_path)
    translator = (
        make_translator(cfg.translator)
        if Strategy.BACK_TRANSLATION in cfg.strategies
        else None
    )
    alphabet = "".join(sorted({c for d in corpus.dialogues for t in d.turns for c in t.text}))

    def one(d: Dialogue) -> Dialogue:
        if Strategy.ALIAS_SUBSTITUTION in cfg.strategies:
            d = alias_substitute(d, lexicon, cfg.seed)
        if Strategy.BACK_TRANSLATION in cfg.strategies:
            d = back_translate(d, translator)
        if Strategy.RANDOM_MODIFICATION in cfg.strategies:
            d = random_modify(d, cfg, cfg.seed, alphabet=alphabet)
        if d.provenance is not Provenance.PERTURBED:
            d = replace(d, provenance=Provenance.PERTURBED)
        return d

    if workers <= 1:
        dialogues = [one(d) for d in corpus.dialogues]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            dialogues = list(ex.map(one, corpus.dialogues))
    return corpus.replace_dialogues(dialogues)
