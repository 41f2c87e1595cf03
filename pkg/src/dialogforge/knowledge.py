"""Knowledge base: triples, the similarity primitive, entity standardization
and per-turn knowledge retrieval.

KB files are TSV (``head<TAB>relation<TAB>tail`` per line) or JSONL
(``{"head": ..., "relation": ..., "tail": ...}``). The alias lexicon consumed
by the perturbation stage also lives here: ``entity<TAB>alias1,alias2,...``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from dialogforge.corpus import SemanticLabel
from dialogforge.editdist import edit_distance
from dialogforge.errors import FormatError, ValidationError

# Scores are plain floats in [0, 1].
Similarity = float

# Standardization accepts a mention only when its best match scores here.
STANDARDIZE_MIN_SCORE = 0.9


@dataclass(frozen=True)
class KnowledgeTriple:
    head: str
    relation: str
    tail: str


@dataclass(frozen=True)
class KnowledgeBase:
    triples: tuple[KnowledgeTriple, ...]
    entity_index: dict[str, tuple[int, ...]]  # entity -> indices into triples

    def __len__(self) -> int:
        return len(self.triples)

    @property
    def entities(self) -> list[str]:
        return sorted(self.entity_index)


def _build_index(triples: tuple[KnowledgeTriple, ...]) -> dict[str, tuple[int, ...]]:
    index: dict[str, list[int]] = {}
    for i, t in enumerate(triples):
        index.setdefault(t.head, []).append(i)
        if t.tail != t.head:
            index.setdefault(t.tail, []).append(i)
    return {e: tuple(ids) for e, ids in index.items()}


def make_kb(triples) -> KnowledgeBase:
    """Deduplicate, validate and index a triple sequence."""
    seen: set[KnowledgeTriple] = set()
    unique: list[KnowledgeTriple] = []
    for t in triples:
        if not (t.head and t.relation and t.tail):
            raise ValidationError(f"knowledge triple with empty field: {t}")
        if t not in seen:
            seen.add(t)
            unique.append(t)
    out = tuple(unique)
    return KnowledgeBase(out, _build_index(out))


def load_kb(path: str | Path) -> KnowledgeBase:
    """Load a TSV or JSONL knowledge base; duplicates are collapsed."""
    path = Path(path)
    triples: list[KnowledgeTriple] = []
    jsonl = path.suffix.lower() in (".jsonl", ".json")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if jsonl:
                try:
                    raw = json.loads(line)
                    triples.append(KnowledgeTriple(raw["head"], raw["relation"], raw["tail"]))
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise FormatError(f"bad KB record: {exc}", line=lineno) from None
            else:
                parts = line.split("\t")
                if len(parts) != 3:
                    raise FormatError(
                        f"expected 3 tab-separated fields, got {len(parts)}", line=lineno
                    )
                triples.append(KnowledgeTriple(*parts))
            t = triples[-1]
            if not (t.head and t.relation and t.tail):
                raise FormatError("knowledge triple with empty field", line=lineno)
    return make_kb(triples)


def load_alias_lexicon(path: str | Path) -> dict[str, tuple[str, ...]]:
    """Entity -> aliases map from TSV (``entity<TAB>alias1,alias2,...``)."""
    lexicon: dict[str, tuple[str, ...]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(
                    f"expected 'entity<TAB>aliases', got {len(parts)} fields", line=lineno
                )
            entity, raw_aliases = parts
            aliases = tuple(a for a in (s.strip() for s in raw_aliases.split(",")) if a)
            if not entity or not aliases:
                raise FormatError("empty entity or alias list", line=lineno)
            merged = lexicon.get(entity, ()) + aliases
            # keep first occurrence order, drop repeats
            lexicon[entity] = tuple(dict.fromkeys(merged))
    return lexicon


def similarity(a: str, b: str) -> Similarity:
    """1 - editDistance(a, b) / (len(a) + len(b)); 1.0 when both are empty."""
    total = len(a) + len(b)
    if total == 0:
        return 1.0
    return 1.0 - edit_distance(a, b) / total


def standardize_entity(mention: str, kb: KnowledgeBase) -> str | None:
    """Best-scoring KB entity for a mention, or None below the 0.9 floor.

    Ties go to the lexicographically smallest entity.
    """
    if not kb.entity_index:
        raise ValidationError("cannot standardize against an empty knowledge base")
    best_score = -1.0
    best_entity: str | None = None
    for entity in sorted(kb.entity_index):
        score = similarity(mention, entity)
        if score > best_score:
            best_score = score
            best_entity = entity
    if best_score >= STANDARDIZE_MIN_SCORE:
        return best_entity
    return None


def retrieve_knowledge(
    labels: list[SemanticLabel], kb: KnowledgeBase, k: int
) -> list[KnowledgeTriple]:
    """Triples linked to the labels' standardized entity values.

    For each label value (in label order) the mention is standardized; all
    triples whose head or tail equals the standardized entity are collected,
    deduplicated, ordered by (entity match order, relation, head, tail) and
    truncated to k.
    """
    if k < 0:
        raise ValidationError(f"k must be >= 0, got {k}")
    if k == 0 or not kb.entity_index:
        return []
    matched: list[str] = []
    for label in labels:
        if label.value is None:
            continue
        entity = standardize_entity(label.value, kb)
        if entity is not None and entity not in matched:
            matched.append(entity)

    out: list[KnowledgeTriple] = []
    seen: set[KnowledgeTriple] = set()
    for entity in matched:
        batch = [kb.triples[i] for i in kb.entity_index[entity]]
        for t in sorted(batch, key=lambda t: (t.relation, t.head, t.tail)):
            if t not in seen:
                seen.add(t)
                out.append(t)
    return out[:k]
