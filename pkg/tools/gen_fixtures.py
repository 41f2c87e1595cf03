"""Regenerates the checked-in fixture files under fixtures/.

Deterministic by construction (pure templates, no RNG); run from the repo
root after changing templates:

    python tools/gen_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

KB_ROWS = [
    ("对乙酰氨基酚", "适应症", "头痛"),
    ("布洛芬", "适应症", "发烧"),
    ("阿莫西林", "适应症", "咽炎"),
    ("阿奇霉素", "适应症", "支气管炎"),
    ("头孢克肟", "适应症", "肺炎"),
    ("蒙脱石散", "适应症", "腹泻"),
    ("奥美拉唑", "适应症", "胃炎"),
    ("氯雷他定", "适应症", "过敏性鼻炎"),
    ("头痛", "常见症状", "感冒"),
    ("发烧", "常见症状", "感冒"),
    ("咳嗽", "常见症状", "支气管炎"),
    ("咽痛", "常见症状", "咽炎"),
    ("腹泻", "常见症状", "肠胃炎"),
    ("反酸", "常见症状", "胃炎"),
    ("paracetamol", "indication", "headache"),
]

ALIASES = [
    ("阿奇霉素", "泰力特,希舒美"),
    ("对乙酰氨基酚", "扑热息痛,必理通"),
    ("布洛芬", "芬必得"),
    ("蒙脱石散", "思密达"),
]

# (disease_category, disease, symptom, symptom2, medicine, precaution, days)
CASES = [
    ("呼吸内科", "感冒", "头痛", "发烧", "对乙酰氨基酚", "多喝温水", "3"),
    ("呼吸内科", "支气管炎", "咳嗽", "咽痛", "阿奇霉素", "少说话", "5"),
    ("消化内科", "肠胃炎", "腹泻", "头痛", "蒙脱石散", "清淡饮食", "2"),
    ("消化内科", "胃炎", "反酸", "腹泻", "奥美拉唑", "按时吃饭", "7"),
    ("呼吸内科", "咽炎", "咽痛", "咳嗽", "阿莫西林", "少说话", "4"),
]

SERVICES = [
    ["Consultation", "Diagnosis"],
    ["Diagnosis", "Treatment"],
    ["Consultation", "Diagnosis", "Treatment"],
    ["Consultation"],
]

OPENERS = ["医生您好，", "大夫你好，", "您好医生，", "医生，"]


def build_dialogue(i: int) -> dict:
    cat, disease, sym, sym2, med, precaution, days = CASES[i % len(CASES)]
    opener = OPENERS[i % len(OPENERS)]
    did = f"dlg-{i + 1:03d}"
    turns = [
        {
            "speaker": "Patient",
            "text": f"{opener}我{sym}已经{days}天了，很难受。",
            "labels": [
                {"kind": "Intent", "label": "Informing", "slot": "Symptom", "value": sym},
                {"kind": "Intent", "label": "Informing", "slot": "Time", "value": f"{days}天"},
            ],
        },
        {
            "speaker": "Doctor",
            "text": f"您好，请问除了{sym}还有别的不舒服吗？",
            "labels": [
                {"kind": "Action", "label": "Inquiring", "slot": "Symptom"},
            ],
        },
        {
            "speaker": "Patient",
            "text": f"还有点{sym2}，晚上更明显。",
            "labels": [
                {"kind": "Intent", "label": "Informing", "slot": "Symptom", "value": sym2},
            ],
        },
        {
            "speaker": "Doctor",
            "text": f"考虑是{disease}，建议口服{med}。",
            "labels": [
                {"kind": "Action", "label": "Diagnosis", "slot": "Disease", "value": disease},
                {"kind": "Action", "label": "Recommendation", "slot": "Medicine", "value": med},
            ],
        },
        {
            "speaker": "Patient",
            "text": "这个药怎么吃？平时要注意什么？",
            "labels": [
                {"kind": "Intent", "label": "Inquiring", "slot": "Medicine"},
                {"kind": "Intent", "label": "Inquiring", "slot": "Precaution"},
            ],
        },
        {
            "speaker": "Doctor",
            "text": f"{med}一天三次，饭后服用，平时{precaution}。",
            "labels": [
                {"kind": "Action", "label": "Informing", "slot": "Frequency", "value": "一天三次"},
                {"kind": "Action", "label": "Recommendation", "slot": "Precaution", "value": precaution},
            ],
        },
        {
            "speaker": "Patient",
            "text": "好的，谢谢医生。",
            "labels": [
                {"kind": "Intent", "label": "Chitchat"},
            ],
        },
        {
            "speaker": "Doctor",
            "text": "不客气，注意休息，一周后来院复查。",
            "labels": [
                {"kind": "Action", "label": "Chitchat"},
                {"kind": "Action", "label": "Recommendation", "slot": "Examination", "value": "复查"},
            ],
        },
    ]
    return {
        "id": did,
        "domain": cat,
        "disease_category": cat,
        "disease": disease,
        "services": SERVICES[i % len(SERVICES)],
        "provenance": "HumanLabeled",
        "turns": turns,
    }


TRANSLATIONS = [
    {
        "text": "嗓子疼得厉害",
        "forward": "My throat hurts badly",
        "backward": "嗓子很疼",
    },
    {
        "text": "医生您好，我头痛已经3天了，很难受。",
        "forward": "Hello doctor, I have had a headache for three days and it is hard to bear.",
        "backward": "医生你好，我头痛三天了，非常难受。",
    },
    {
        "text": "还有点发烧，晚上更明显。",
        "forward": "There is also a slight fever, more obvious at night.",
        "backward": "还有些发烧，夜里更明显。",
    },
]

RULES = [
    {
        "name": "take-orally",
        "patterns": ["口服"],
        "speaker": "doctor",
        "assign": {"kind": "Action", "label": "Recommendation", "slot": "Medicine"},
    },
    {
        "name": "recheck",
        "patterns": ["复查"],
        "speaker": "doctor",
        "assign": {"kind": "Action", "label": "Recommendation", "slot": "Examination"},
    },
    {
        "name": "patient-question",
        "patterns": ["[？?]"],
        "speaker": "patient",
        "assign": {"kind": "Intent", "label": "Inquiring"},
    },
]

PROTO_GOLD = [
    {
        "task": "NLU",
        "dialogue_id": "proto-1",
        "turn_index": 1,
        "format": "Conditional",
        "input": "[PATIENT] 我头痛",
        "target": "Informing | Symptom | 头痛",
    },
    {
        "task": "DPL",
        "dialogue_id": "proto-1",
        "turn_index": 1,
        "format": "Conditional",
        "input": "[PATIENT] 我头痛 [NLU] Informing | Symptom | 头痛 [KB] 对乙酰氨基酚 # 适应症 # 头痛",
        "target": "Recommendation | Medicine | 对乙酰氨基酚",
    },
    {
        "task": "NLG",
        "dialogue_id": "proto-1",
        "turn_index": 1,
        "format": "Conditional",
        "input": "[PATIENT] 我头痛 [NLU] Informing | Symptom | 头痛 [KB] 对乙酰氨基酚 # 适应症 # 头痛 [DPL] Recommendation | Medicine | 对乙酰氨基酚",
        "target": "建议口服对乙酰氨基酚。",
    },
]

PROTO_CASES = {
    "gold_file": "gold_samples.jsonl",
    "cases": [
        {
            "name": "health",
            "modes": ["echo", "gold"],
            "request": {"method": "GET", "path": "/v1/health"},
            "expect": {"status": 200, "health_status": "ok"},
        },
        {
            "name": "echo-roundtrip",
            "modes": ["echo"],
            "request": {
                "method": "POST",
                "path": "/v1/generate",
                "body": {"task": "nlu", "inputs": ["a", "b"], "max_new_tokens": 8},
            },
            "expect": {"status": 200, "outputs": ["a", "b"]},
        },
        {
            "name": "gold-hit",
            "modes": ["gold"],
            "request": {
                "method": "POST",
                "path": "/v1/generate",
                "body": {
                    "task": "nlu",
                    "inputs": ["[PATIENT] 我头痛"],
                    "max_new_tokens": 64,
                },
            },
            "expect": {"status": 200, "outputs": ["Informing | Symptom | 头痛"]},
        },
        {
            "name": "gold-miss",
            "modes": ["gold"],
            "request": {
                "method": "POST",
                "path": "/v1/generate",
                "body": {"task": "nlu", "inputs": ["no such input"], "max_new_tokens": 64},
            },
            "expect": {"status": 200, "outputs": [""]},
        },
        {
            "name": "count-preserved",
            "modes": ["echo", "gold"],
            "request": {
                "method": "POST",
                "path": "/v1/generate",
                "body": {"task": "nlg", "inputs": ["x", "y", "z"], "max_new_tokens": 8},
            },
            "expect": {"status": 200, "output_count": 3},
        },
        {
            "name": "malformed-json-body",
            "modes": ["echo", "gold"],
            "wire_only": True,
            "request": {"method": "POST", "path": "/v1/generate", "raw_body": "{not json"},
            "expect": {"status": 400},
        },
        {
            "name": "missing-inputs-field",
            "modes": ["echo", "gold"],
            "wire_only": True,
            "request": {
                "method": "POST",
                "path": "/v1/generate",
                "body": {"task": "nlu", "max_new_tokens": 8},
            },
            "expect": {"status": 400},
        },
        {
            "name": "bad-task",
            "modes": ["echo", "gold"],
            "wire_only": True,
            "request": {
                "method": "POST",
                "path": "/v1/generate",
                "body": {"task": "translate", "inputs": ["x"], "max_new_tokens": 8},
            },
            "expect": {"status": 400},
        },
    ],
}


def write_jsonl(path: Path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False))
            fh.write("\n")


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    (FIXTURES / "protocol").mkdir(exist_ok=True)

    with open(FIXTURES / "kb.tsv", "w", encoding="utf-8") as fh:
        for head, rel, tail in KB_ROWS:
            fh.write(f"{head}\t{rel}\t{tail}\n")

    with open(FIXTURES / "alias_lexicon.tsv", "w", encoding="utf-8") as fh:
        for entity, aliases in ALIASES:
            fh.write(f"{entity}\t{aliases}\n")

    write_jsonl(FIXTURES / "corpus_20.jsonl", (build_dialogue(i) for i in range(20)))
    write_jsonl(FIXTURES / "translations.jsonl", TRANSLATIONS)
    write_jsonl(FIXTURES / "protocol" / "gold_samples.jsonl", PROTO_GOLD)

    (FIXTURES / "rules.json").write_text(
        json.dumps(RULES, ensure_ascii=False, indent=2) + "\n", "utf-8"
    )
    (FIXTURES / "protocol" / "cases.json").write_text(
        json.dumps(PROTO_CASES, ensure_ascii=False, indent=2) + "\n", "utf-8"
    )
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
