import math
import random

import pytest
from conftest import label
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import micro_f1_oracle

from dialogforge.errors import ValidationError
from dialogforge.metrics import (
    bleu,
    combination,
    evaluate_task,
    macro_f1,
    meteor,
    micro_f1,
    rouge1,
    tokenize,
)
from dialogforge.serde import SampleFormat, Task, TaskSample, serialize_labels


class TestTokenize:
    def test_cjk_chars_split(self):
        assert tokenize("我头痛") == ["我", "头", "痛"]

    def test_latin_runs_kept(self):
        assert tokenize("take two pills") == ["take", "two", "pills"]

    def test_mixed(self):
        assert tokenize("吃paracetamol片") == ["吃", "paracetamol", "片"]
        assert tokenize("3天") == ["3", "天"]


class TestMicroF1:
    def test_perfect(self):
        gold = {1: {"a"}, 2: {"b", "c"}}
        assert micro_f1(gold, gold) == 100.0

    def test_half(self):
        gold = {1: {("Informing", "Symptom"), ("Inquiring", "Disease")}}
        pred = {1: {("Informing", "Symptom"), ("Informing", "Time")}}
        assert micro_f1(gold, pred) == 50.0

    def test_empty_pred(self):
        gold = {1: {"a"}}
        assert micro_f1(gold, {1: set()}) == 0.0

    def test_misaligned_keys(self):
        with pytest.raises(ValidationError, match="misaligned"):
            micro_f1({1: {"a"}}, {2: {"a"}})

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_brute_force(self, seed):
        rng = random.Random(seed)
        items = ["a", "b", "c", "d", "e"]
        gold = {}
        pred = {}
        for key in range(rng.randrange(1, 20)):
            gold[key] = set(rng.sample(items, rng.randrange(0, 5)))
            pred[key] = set(rng.sample(items, rng.randrange(0, 5)))
        assert micro_f1(gold, pred) == pytest.approx(micro_f1_oracle(gold, pred))


class TestMacroF1:
    def test_single_category_equals_micro(self):
        gold = {1: {"a"}, 2: {"a"}, 3: set()}
        pred = {1: {"a"}, 2: set(), 3: {"a"}}
        assert macro_f1(gold, pred) == pytest.approx(micro_f1(gold, pred))

    def test_weighted_example(self):
        # A: 3 gold items, all hit -> F1 100; B: 1 gold item, missed -> F1 0
        gold = {1: {"A"}, 2: {"A"}, 3: {"A"}, 4: {"B"}}
        pred = {1: {"A"}, 2: {"A"}, 3: {"A"}, 4: set()}
        assert macro_f1(gold, pred) == 75.0

    def test_perfect(self):
        gold = {1: {"a", "b"}, 2: {"c"}}
        assert macro_f1(gold, gold) == pytest.approx(100.0)


class TestBleu:
    def test_identical_single_pair(self):
        assert bleu([["a", "b", "c"]], [["a", "b", "c"]], max_n=4) == 100.0

    def test_bleu1_two_thirds(self):
        got = bleu([["a", "b", "d"]], [["a", "b", "c"]], max_n=1)
        assert got == pytest.approx(66.67, abs=0.01)

    def test_empty_hypothesis(self):
        assert bleu([["a"]], [[]], max_n=4) == 0.0

    def test_never_above_100(self):
        rng = random.Random(3)
        for _ in range(100):
            refs = [[rng.choice("abc") for _ in range(rng.randrange(1, 6))]]
            hyps = [[rng.choice("abc") for _ in range(rng.randrange(0, 6))]]
            assert 0.0 <= bleu(refs, hyps, max_n=4) <= 100.0

    def test_identity_is_100(self):
        rng = random.Random(4)
        for _ in range(50):
            seqs = [[rng.choice("xyz") for _ in range(rng.randrange(1, 8))]
                    for _ in range(rng.randrange(1, 4))]
            assert bleu(seqs, seqs, max_n=4) == pytest.approx(100.0)

    def test_brevity_penalty(self):
        got = bleu([["a", "b", "c", "d"]], [["a", "b"]], max_n=1)
        assert got == pytest.approx(100.0 * math.exp(1 - 4 / 2))

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            bleu([["a"]], [])


class TestRouge1:
    def test_identical(self):
        assert rouge1([["a", "b"]], [["a", "b"]]) == 100.0

    def test_two_thirds(self):
        assert rouge1([["a", "b", "c"]], [["a", "b"]]) == pytest.approx(66.67, abs=0.01)

    def test_empty_ref_skipped(self):
        assert rouge1([[], ["a"]], [["x"], ["a"]]) == 100.0


class TestMeteor:
    def test_p_equals_r(self):
        assert meteor([["a", "b"]], [["a", "b"]]) == 100.0

    def test_p100_r50(self):
        # hyp 1 token fully matched, ref 2 tokens -> P=1, R=0.5
        assert meteor([["a", "b"]], [["a"]]) == pytest.approx(66.67, abs=0.01)

    def test_no_overlap(self):
        assert meteor([["a"]], [["b"]]) == 0.0


class TestCombination:
    def test_paper_row_nlu(self):
        assert combination(55.63, 18.44) == pytest.approx(37.03, abs=0.01)

    def test_paper_row_dpl(self):
        assert combination(22.37, 2.87) == pytest.approx(12.62, abs=0.01)

    def test_zero(self):
        assert combination(0, 0) == 0.0

    @given(st.floats(0, 100), st.floats(0, 100))
    def test_linear(self, a, b):
        assert combination(a, b) == pytest.approx((a + b) / 2)

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            combination(-1, 50)
        with pytest.raises(ValidationError):
            combination(50, 101)


def nlu_sample(i, labels_text):
    return TaskSample(Task.NLU, f"d{i}", 1, f"[PATIENT] u{i}", labels_text,
                      SampleFormat.CONDITIONAL)


class TestEvaluateTask:
    def gold_five_turns(self):
        gold_labels = [
            [label("Intent", "Informing", "Symptom", "咳嗽")],
            [label("Intent", "Informing", "Time", "3天"), label("Intent", "Inquiring", "Disease")],
            [label("Intent", "Informing", "Symptom", "发烧")],
            [label("Intent", "Chitchat")],
            [label("Intent", "Informing", "Symptom", "头痛")],
        ]
        return [nlu_sample(i, serialize_labels(ls)) for i, ls in enumerate(gold_labels)]

    def test_perfect_predictions(self):
        gold = self.gold_five_turns()
        report = evaluate_task(gold, [s.target_seq for s in gold], Task.NLU)
        for key in ("label_micro_f1", "label_macro_f1", "pair_micro_f1",
                    "pair_macro_f1", "value_bleu", "combination"):
            assert report.scores[key] == pytest.approx(100.0)
        assert report.malformed_count == 0

    def test_all_empty_predictions(self):
        gold = self.gold_five_turns()
        report = evaluate_task(gold, [""] * len(gold), Task.NLU)
        assert report.scores["pair_micro_f1"] == 0.0
        assert report.scores["combination"] == 0.0

    def test_one_wrong_slot_golden(self):
        # turn 3 predicts slot BodyPart instead of Symptom; hand-computed:
        # label F1 stays 100, pair micro = 500/6, pair macro = 90,
        # value BLEU = 100*exp(1-8/6), combination = their mean
        gold = self.gold_five_turns()
        preds = [s.target_seq for s in gold]
        preds[2] = serialize_labels([label("Intent", "Informing", "BodyPart", "发烧")])
        report = evaluate_task(gold, preds, Task.NLU)
        assert report.scores["label_micro_f1"] == pytest.approx(100.0)
        assert report.scores["label_macro_f1"] == pytest.approx(100.0)
        assert report.scores["pair_micro_f1"] == pytest.approx(500 / 6)
        assert report.scores["pair_macro_f1"] == pytest.approx(90.0)
        assert report.scores["value_bleu"] == pytest.approx(100 * math.exp(1 - 8 / 6))
        assert report.scores["combination"] == pytest.approx(
            0.5 * (500 / 6) + 50 * math.exp(1 - 8 / 6)
        )
        assert report.n_gold_items == 6
        assert report.malformed_count == 0
        assert report.breakdown["label_slot"]["Informing|Symptom"] == pytest.approx(80.0)

    def test_malformed_counted(self):
        gold = self.gold_five_turns()
        preds = [s.target_seq for s in gold]
        preds[0] = "total garbage ; " + preds[0]
        report = evaluate_task(gold, preds, Task.NLU)
        assert report.malformed_count == 1

    def test_combination_invariant(self):
        gold = self.gold_five_turns()
        preds = [s.target_seq for s in gold]
        preds[1] = ""
        report = evaluate_task(gold, preds, Task.NLU)
        assert report.scores["combination"] == (
            0.5 * report.scores["pair_micro_f1"] + 0.5 * report.scores["value_bleu"]
        )

    def test_reorder_invariance(self):
        gold = self.gold_five_turns()
        preds = [s.target_seq for s in gold]
        preds[2] = serialize_labels([label("Intent", "Others")])
        report1 = evaluate_task(gold, preds, Task.NLU)
        order = [3, 0, 4, 2, 1]
        report2 = evaluate_task([gold[i] for i in order], [preds[i] for i in order], Task.NLU)
        assert report1.scores == report2.scores

    def test_nlg_metrics(self):
        gold = [
            TaskSample(Task.NLG, "d0", 1, "in0", "多喝温水。", SampleFormat.CONDITIONAL),
            TaskSample(Task.NLG, "d1", 1, "in1", "注意休息。", SampleFormat.CONDITIONAL),
        ]
        report = evaluate_task(gold, ["多喝温水。", "注意休息。"], Task.NLG)
        for key in ("bleu1", "bleu4", "rouge1", "meteor"):
            assert report.scores[key] == pytest.approx(100.0)
        report2 = evaluate_task(gold, ["", ""], Task.NLG)
        assert report2.scores["bleu1"] == 0.0

    def test_alignment_mismatch(self):
        with pytest.raises(ValidationError):
            evaluate_task(self.gold_five_turns(), ["x"], Task.NLU)

    def test_render_table_runs(self):
        gold = self.gold_five_turns()
        report = evaluate_task(gold, [s.target_seq for s in gold], Task.NLU)
        text = report.render_table()
        assert "Combi." in text and "100.00" in text
