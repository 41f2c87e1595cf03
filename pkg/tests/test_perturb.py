import pytest
from conftest import FIXTURES, corpus, dialogue, doctor, label, patient

from dialogforge.corpus import Provenance
from dialogforge.errors import ForgeError, ValidationError
from dialogforge.perturb import (
    FixtureTranslator,
    IdentityTranslator,
    PerturbConfig,
    Strategy,
    alias_substitute,
    back_translate,
    make_translator,
    perturb_corpus,
    random_modify,
)

LEXICON = {"阿奇霉素": ("泰力特",), "布洛芬": ("芬必得",)}


def med_dialogue(did="d1"):
    return dialogue(
        did,
        [
            patient("我咳嗽好几天了。", label("Intent", "Informing", "Symptom", "咳嗽")),
            doctor(
                "建议口服阿奇霉素。",
                label("Action", "Recommendation", "Medicine", "阿奇霉素"),
            ),
        ],
    )


class TestAliasSubstitute:
    def test_text_and_value_replaced_consistently(self):
        out = alias_substitute(med_dialogue(), LEXICON, seed=0)
        assert out.turns[1].text == "建议口服泰力特。"
        assert out.turns[1].labels[0].value == "泰力特"
        assert out.provenance is Provenance.PERTURBED

    def test_absent_entity_unchanged(self):
        d = dialogue("d1", [patient("我头痛。", label("Intent", "Informing", "Symptom", "头痛"))])
        assert alias_substitute(d, LEXICON, seed=0) is d

    def test_deterministic(self):
        lex = {"阿奇霉素": ("泰力特", "希舒美")}
        outs = {alias_substitute(med_dialogue(), lex, seed=5).turns[1].text for _ in range(5)}
        assert len(outs) == 1

    def test_same_alias_for_repeated_mentions(self):
        d = dialogue(
            "d1",
            [doctor("先吃阿奇霉素，阿奇霉素每天一次。",
                    label("Action", "Recommendation", "Medicine", "阿奇霉素"))],
        )
        out = alias_substitute(d, {"阿奇霉素": ("泰力特", "希舒美")}, seed=1)
        text = out.turns[0].text
        assert "阿奇霉素" not in text
        assert text.count("泰力特") == 2 or text.count("希舒美") == 2


class TestBackTranslate:
    def test_identity_translator_unchanged(self):
        d = med_dialogue()
        assert back_translate(d, IdentityTranslator()) is d

    def test_roundtrip_composition_unchanged(self):
        class Rot:
            def forward(self, text):
                return text[::-1]

            def backward(self, text):
                return text[::-1]

        d = med_dialogue()
        assert back_translate(d, Rot()) is d

    def test_fixture_translator_updates_text_keeps_labels(self):
        d = dialogue(
            "d1",
            [patient("嗓子疼得厉害", label("Intent", "Informing", "Symptom", "嗓子疼"))],
        )
        translator = FixtureTranslator(FIXTURES / "translations.jsonl")
        out = back_translate(d, translator)
        assert out.turns[0].text == "嗓子很疼"
        assert out.turns[0].labels == d.turns[0].labels
        assert out.provenance is Provenance.PERTURBED

    def test_provider_failure_names_turn(self):
        class Boom:
            def forward(self, text):
                raise RuntimeError("offline")

            def backward(self, text):
                return text

        with pytest.raises(ForgeError, match="dialogue d1 turn 0"):
            back_translate(med_dialogue(), Boom())


class TestRandomModify:
    replace_only = PerturbConfig(
        rm_ops_per_dialogue=1, rm_op_mix={"add": 0.0, "delete": 0.0, "replace": 1.0}
    )

    def test_zero_ops_unchanged(self):
        d = med_dialogue()
        cfg = PerturbConfig(rm_ops_per_dialogue=0)
        assert random_modify(d, cfg, seed=1) is d

    def test_seeded_replace_golden(self):
        d = dialogue(
            "d1",
            [
                patient("my headache is bad", label("Intent", "Informing", "Symptom", "headache")),
                doctor("rest well", label("Action", "Recommendation", "Precaution", "rest")),
            ],
        )
        out = random_modify(d, self.replace_only, seed=7)
        # frozen from a seed-7 run: exactly one character differs, inside the span
        assert out.turns[0].text == "my headacle is bad"
        assert out.turns[1].text == "rest well"
        assert out.turns[0].labels[0].value == "headache"  # gold label untouched

    def test_one_char_entity_delete_skipped(self):
        d = dialogue(
            "d1",
            [patient("好痛。", label("Intent", "Informing", "Severity", "痛"))],
        )
        cfg = PerturbConfig(
            rm_ops_per_dialogue=1, rm_op_mix={"add": 0.0, "delete": 1.0, "replace": 0.0}
        )
        assert random_modify(d, cfg, seed=3) is d

    def test_no_entity_spans_unchanged(self):
        d = dialogue("d1", [patient("随便聊聊。", label("Intent", "Chitchat"))])
        assert random_modify(d, self.replace_only, seed=1) is d

    def test_at_most_n_positions_change(self):
        d = med_dialogue()
        for ops in (1, 2, 3):
            cfg = PerturbConfig(
                rm_ops_per_dialogue=ops, rm_op_mix={"add": 0.0, "delete": 0.0, "replace": 1.0}
            )
            out = random_modify(d, cfg, seed=11)
            diffs = sum(
                sum(1 for a, b in zip(t1.text, t2.text) if a != b)
                for t1, t2 in zip(d.turns, out.turns)
                if len(t1.text) == len(t2.text)
            )
            assert diffs <= ops


class TestPerturbCorpus:
    def base_corpus(self):
        return corpus(med_dialogue("d1"), med_dialogue("d2"))

    def full_cfg(self, **kw):
        defaults = dict(
            strategies=frozenset(
                {Strategy.ALIAS_SUBSTITUTION, Strategy.BACK_TRANSLATION,
                 Strategy.RANDOM_MODIFICATION}
            ),
            alias_lexicon_path=str(FIXTURES / "alias_lexicon.tsv"),
            translator="identity",
            rm_ops_per_dialogue=1,
            seed=13,
        )
        defaults.update(kw)
        return PerturbConfig(**defaults)

    def test_empty_strategies_rejected(self):
        with pytest.raises(ValidationError):
            perturb_corpus(self.base_corpus(), self.full_cfg(strategies=frozenset()))

    def test_alias_only_equals_mapped_strategy(self):
        from dialogforge.knowledge import load_alias_lexicon

        cfg = self.full_cfg(strategies=frozenset({Strategy.ALIAS_SUBSTITUTION}))
        c = self.base_corpus()
        got = perturb_corpus(c, cfg)
        lexicon = load_alias_lexicon(FIXTURES / "alias_lexicon.tsv")
        from dataclasses import replace

        want = [alias_substitute(d, lexicon, cfg.seed) for d in c.dialogues]
        want = [
            d if d.provenance is Provenance.PERTURBED else replace(d, provenance=Provenance.PERTURBED)
            for d in want
        ]
        assert list(got.dialogues) == want

    def test_identity_composition_reduces_to_alias(self):
        cfg_all = self.full_cfg(rm_ops_per_dialogue=0)
        cfg_alias = self.full_cfg(strategies=frozenset({Strategy.ALIAS_SUBSTITUTION}))
        c = self.base_corpus()
        assert perturb_corpus(c, cfg_all) == perturb_corpus(c, cfg_alias)

    def test_identity_config_is_identity_up_to_provenance(self, tmp_path):
        empty_lexicon = tmp_path / "empty.tsv"
        empty_lexicon.write_text("", "utf-8")
        cfg = self.full_cfg(alias_lexicon_path=str(empty_lexicon), rm_ops_per_dialogue=0)
        c = self.base_corpus()
        out = perturb_corpus(c, cfg)
        for before, after in zip(c.dialogues, out.dialogues):
            assert after.provenance is Provenance.PERTURBED
            assert after.turns == before.turns
            assert after.id == before.id

    def test_bit_identical_across_runs_and_workers(self):
        c = self.base_corpus()
        cfg = self.full_cfg()
        runs = [perturb_corpus(c, cfg, workers=w) for w in (1, 4, 8, 1, 1)]
        assert all(r == runs[0] for r in runs)

    def test_structure_preserved(self):
        c = self.base_corpus()
        out = perturb_corpus(c, self.full_cfg())
        for before, after in zip(c.dialogues, out.dialogues):
            assert after.id == before.id
            assert len(after.turns) == len(before.turns)
            assert [t.speaker for t in after.turns] == [t.speaker for t in before.turns]
            assert sum(len(t.labels) for t in after.turns) == sum(
                len(t.labels) for t in before.turns
            )

    def test_strategy_toggles_produce_distinct_corpora(self):
        c = self.base_corpus()
        outs = []
        for strategies in (
            {Strategy.ALIAS_SUBSTITUTION},
            {Strategy.BACK_TRANSLATION},
            {Strategy.RANDOM_MODIFICATION},
        ):
            cfg = self.full_cfg(
                strategies=frozenset(strategies),
                translator=f"fixture:{FIXTURES / 'translations.jsonl'}",
            )
            outs.append(perturb_corpus(c, cfg))
        texts = [tuple(t.text for d in o.dialogues for t in d.turns) for o in outs]
        assert len(set(texts)) == 3


class TestHttpTranslator:
    @pytest.fixture()
    def stub_url(self):
        import json as jsonlib
        import threading
        from http.server import BaseHTTPRequestHandler, HTTPServer

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                payload = jsonlib.loads(self.rfile.read(length))
                # uppercase pivot going out, marker coming back
                if payload["dst"] == "en":
                    text = payload["text"].upper()
                else:
                    text = payload["text"].lower() + "!"
                data = jsonlib.dumps({"text": text}).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        server = HTTPServer(("127.0.0.1", 0), Handler)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        yield f"http://127.0.0.1:{server.server_port}"
        server.shutdown()
        thread.join()

    def test_roundtrip_over_http(self, stub_url):
        translator = make_translator(stub_url)
        assert translator.forward("Sore Throat") == "SORE THROAT"
        assert translator.backward("SORE THROAT") == "sore throat!"
        d = dialogue("d1", [patient("AbC", label("Intent", "Chitchat"))])
        out = back_translate(d, translator)
        assert out.turns[0].text == "abc!"
        assert out.turns[0].labels == d.turns[0].labels


class TestTranslatorFactory:
    def test_identity(self):
        assert isinstance(make_translator("identity"), IdentityTranslator)

    def test_fixture(self):
        t = make_translator(f"fixture:{FIXTURES / 'translations.jsonl'}")
        assert t.forward("嗓子疼得厉害") == "My throat hurts badly"
        assert t.backward("My throat hurts badly") == "嗓子很疼"
        # unrecorded inputs pass through: the provider is total
        assert t.forward("悄悄话") == "悄悄话"

    def test_unknown_provider(self):
        with pytest.raises(ValidationError):
            make_translator("babelfish")
