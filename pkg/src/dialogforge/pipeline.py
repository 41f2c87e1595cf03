"""Joint/oracle pipeline runner: NLU -> knowledge retrieval -> DPL -> NLG.

Within a dialogue the three stages are sequential because each consumes the
previous stage's output; dialogues run concurrently up to max_in_flight.
In joint mode downstream inputs carry the parsed upstream *predictions*;
oracle flags substitute the gold labels instead (oracle_nlu feeds gold
intents to DPL and retrieval, oracle_dpl feeds gold actions to NLG).
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

from dialogforge.corpus import Corpus, Dialogue, LabelKind, Vocabulary
from dialogforge.errors import BackendError, ValidationError
from dialogforge.knowledge import KnowledgeBase, retrieve_knowledge
from dialogforge.metrics import EvalReport, evaluate_task
from dialogforge.serde import (
    DEFAULT_KB_TRIPLES,
    SampleFormat,
    Task,
    TaskSample,
    _neutralized,
    build_sample,
    compose_dpl_input,
    compose_nlg_input,
    parse_labels,
    sample_points,
    serialize_kb,
    serialize_labels,
)


@dataclass
class PipelineConfig:
    backend_url: str = "echo"
    oracle_nlu: bool = False
    oracle_dpl: bool = False
    kb_path: str | None = None
    k_triples: int = DEFAULT_KB_TRIPLES
    max_new_tokens: int = 256
    request_timeout: float = 30.0
    max_in_flight: int = 2
    batch_size: int = 16
    max_retries: int = 0
    seed: int = 0
    max_chars: int | None = None

    def validate(self) -> None:
        if self.k_triples < 0:
            raise ValidationError("k_triples must be >= 0")
        if self.max_in_flight < 1:
            raise ValidationError("max_in_flight must be >= 1")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known - {"clean"}
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**{k: v for k, v in raw.items() if k in known})
        cfg.validate()
        return cfg


@dataclass
class PipelineResult:
    transcript: list[dict]
    reports: dict[Task, EvalReport] = field(default_factory=dict)


def _batched(backend, task: Task, inputs: list[str], cfg: PipelineConfig) -> list[str]:
    outputs: list[str] = []
    wire_task = task.value.lower()
    for batch_index, i in enumerate(range(0, len(inputs), cfg.batch_size)):
        batch = inputs[i : i + cfg.batch_size]
        try:
            out = backend.generate(wire_task, batch, cfg.max_new_tokens)
        except BackendError as exc:
            exc.args = (f"{wire_task} batch {batch_index}: {exc}",)
            raise
        if len(out) != len(batch):
            raise ValidationError(
                f"{wire_task} batch {batch_index}: backend returned {len(out)} "
                f"outputs for a batch of {len(batch)}"
            )
        outputs.extend(out)
    return outputs


@dataclass
class _DialogueRun:
    gold: dict[Task, list[TaskSample]]
    outputs: dict[Task, list[str]]
    records: list[dict]


def _run_dialogue(
    dialogue: Dialogue,
    kb: KnowledgeBase,
    cfg: PipelineConfig,
    backend,
    vocab: Vocabulary,
) -> _DialogueRun:
    points = sample_points(dialogue, Task.DPL)  # turns with a doctor response
    gold: dict[Task, list[TaskSample]] = {t: [] for t in Task}
    for t in points:
        for task in Task:
            gold[task].append(
                build_sample(dialogue, t, kb, task, SampleFormat.CONDITIONAL,
                             cfg.k_triples, cfg.max_chars)
            )
    if not points:
        return _DialogueRun(gold, {t: [] for t in Task}, [])

    nlu_inputs = [s.input_seq for s in gold[Task.NLU]]
    nlu_out = _batched(backend, Task.NLU, nlu_inputs, cfg)

    dpl_inputs: list[str] = []
    used_intents = []
    for i, t in enumerate(points):
        if cfg.oracle_nlu:
            intents = list(dialogue.turns[t - 1].labels)
        else:
            intents, _ = parse_labels(nlu_out[i], LabelKind.INTENT, vocab)
        used_intents.append(intents)
        triples = retrieve_knowledge(intents, kb, cfg.k_triples)
        history = gold[Task.NLU][i].input_seq
        dpl_inputs.append(
            compose_dpl_input(
                history, serialize_labels(_neutralized(intents)), serialize_kb(triples)
            )
        )
    dpl_out = _batched(backend, Task.DPL, dpl_inputs, cfg)

    nlg_inputs: list[str] = []
    for i, t in enumerate(points):
        if cfg.oracle_dpl:
            actions = list(dialogue.turns[t].labels)
        else:
            actions, _ = parse_labels(dpl_out[i], LabelKind.ACTION, vocab)
        nlg_inputs.append(
            compose_nlg_input(dpl_inputs[i], serialize_labels(_neutralized(actions)))
        )
    nlg_out = _batched(backend, Task.NLG, nlg_inputs, cfg)

    records = []
    stage_io = {
        Task.NLU: (nlu_inputs, nlu_out),
        Task.DPL: (dpl_inputs, dpl_out),
        Task.NLG: (nlg_inputs, nlg_out),
    }
    for i, t in enumerate(points):
        for task in Task:
            records.append(
                {
                    "dialogue_id": dialogue.id,
                    "turn_index": t,
                    "task": task.value,
                    "input": stage_io[task][0][i],
                    "output": stage_io[task][1][i],
                }
            )
    return _DialogueRun(gold, {t: stage_io[t][1] for t in Task}, records)


def run_pipeline(
    corpus: Corpus,
    kb: KnowledgeBase,
    cfg: PipelineConfig,
    backend,
    transcript_path: str | Path | None = None,
) -> PipelineResult:
    """Run all three stages over every patient turn and evaluate each stage.

    The transcript holds every generate call's input and raw output exactly
    once, ordered by (dialogue, turn, stage). On a backend failure the
    transcript written so far is flushed before the error propagates.
    """
    cfg.validate()
    gold_all: dict[Task, list[TaskSample]] = {t: [] for t in Task}
    outputs_all: dict[Task, list[str]] = {t: [] for t in Task}
    transcript: list[dict] = []

    fh = open(transcript_path, "w", encoding="utf-8") if transcript_path else None
    try:
        with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as ex:
            runs = ex.map(
                lambda d: _run_dialogue(d, kb, cfg, backend, corpus.vocab),
                corpus.dialogues,
            )
            for run in runs:
                for task in Task:
                    gold_all[task].extend(run.gold[task])
                    outputs_all[task].extend(run.outputs[task])
                transcript.extend(run.records)
                if fh is not None:
                    for rec in run.records:
                        fh.write(json.dumps(rec, ensure_ascii=False))
                        fh.write("\n")
                    fh.flush()
    finally:
        if fh is not None:
            fh.close()

    reports = {
        task: evaluate_task(gold_all[task], outputs_all[task], task, corpus.vocab)
        for task in Task
    }
    return PipelineResult(transcript=transcript, reports=reports)
