import pytest

from streamitn import verbalize as vb
from streamitn.datagen import Example, GenConfig, generate, generate_one, read_corpus, split, write_corpus
from streamitn.streaming import postprocess
from streamitn.tags import SENTENCE_END, spans
from streamitn.wfst import transduce


def test_deterministic():
    a = generate(GenConfig(sentences=50, seed=9))
    b = generate(GenConfig(sentences=50, seed=9))
    c = generate(GenConfig(sentences=50, seed=10))
    assert a == b and a != c


def test_aligned_and_well_formed(corpus):
    for ex in corpus:
        n = len(ex.spoken)
        assert len(ex.nc_tags) == len(ex.punct_tags) == n
        assert len(ex.written.split(" ")) == len(ex.itn_flags)
        for k, t in enumerate(ex.nc_tags):
            if t.startswith("I-"):
                assert ex.nc_tags[k - 1][2:] == t[2:] and k > 0
        assert ex.punct_tags[-1] in SENTENCE_END
        assert len(spans(ex.nc_tags)) <= GenConfig().max_entities


def test_entity_spans_transduce_to_reference(corpus):
    checked = 0
    for ex in corpus:
        written = ex.written.split(" ")
        for start, end, cls in spans(ex.nc_tags):
            if cls == "CASE":
                continue
            text = transduce(ex.spoken[start:end], cls)
            assert text.parsed
            # the reference must contain the span's written form verbatim
            assert text.text in ex.written
            checked += 1
    assert checked > 50
    assert any(w for w in written)


def test_oracle_closure(corpus):
    for ex in corpus:
        assert postprocess(ex.spoken, ex.nc_tags, ex.punct_tags) == ex.written


def test_itn_flags_mark_transduced_words():
    ex = Example(["i", "paid", "five", "dollars"], ["O", "O", "B-NUMBER", "O"], ["O", "O", "O", "PERIOD"],
                 "I paid 5 dollars.", [False, False, True, False])
    assert Example.from_json(ex.to_json()) == ex


def test_split_disjoint(corpus):
    tr, va, te = split(corpus, seed=0)
    assert (len(tr), len(va), len(te)) == (320, 40, 40)
    keys = [{" ".join(e.spoken) for e in part} for part in (tr, va, te)]
    assert not (keys[0] & keys[1]) and not (keys[0] & keys[2]) and not (keys[1] & keys[2])


def test_corpus_file_roundtrip(tmp_path, corpus):
    path = tmp_path / "c.jsonl"
    write_corpus(path, corpus[:20])
    assert read_corpus(path) == corpus[:20]


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(category_mix={"NUMBER": 0.8, "DATE": 0.5})
    with pytest.raises(ValueError):
        GenConfig(type_mix={"QUESTION": -0.1})
    with pytest.raises(ValueError):
        GenConfig(join_prob=2)


def test_no_entities_when_mix_is_empty():
    import numpy as np
    cfg = GenConfig(sentences=20, category_mix={})
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert set(generate_one(cfg, rng).nc_tags) == {"O"}


def test_all_categories_and_marks_appear(corpus):
    classes = {cls for ex in corpus for _, _, cls in spans(ex.nc_tags)}
    marks = {p for ex in corpus for p in ex.punct_tags}
    assert classes == {"CASE", "NUMBER", "DATE", "PHONE"}
    assert marks == {"O", "COMMA", "PERIOD", "QUESTION", "EXCLAMATION"}


def test_verbalizer_tables():
    assert vb.cardinal(0) == ["zero"]
    assert vb.cardinal(115) == ["one", "hundred", "fifteen"]
    assert vb.cardinal(20_020) == ["twenty", "thousand", "twenty"]
    assert vb.decimal(3, "5") == ["three", "point", "five"]
    assert vb.date(3, 5, 2021) == ["march", "fifth"] + vb.cardinal(2021)
    assert vb.written_date(3, 5) == "March 5"
    assert vb.phone("031") == ["zero", "three", "one"]
    with pytest.raises(ValueError):
        vb.cardinal(vb.MAX_CARDINAL + 1)
