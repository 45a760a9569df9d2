import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streamitn.tags import IGNORE, NC_INDEX, PUNCT_INDEX
from streamitn.tokenizer import SPECIALS, Vocab, build_vocab, project_labels, split_word, tokenize

WELCOME_CORPUS = [["welcome"]] * 5 + [["well", "wells", "weld", "come", "comes", "become", "came"]]


def pieces(seq, vocab):
    return [vocab.pieces[i] for i in seq.token_ids]


def test_character_fallback_with_no_merges():
    v = build_vocab([["welcome"]], 0)
    assert v.pieces[:4] == SPECIALS
    assert set("welcom") <= set(v.pieces)
    assert len(v) == 4 + len(set("welcome"))


def test_welcome_splits_in_two():
    v = build_vocab(WELCOME_CORPUS, 5)
    seq = tokenize(["welcome"], v)
    assert pieces(seq, v) == ["wel", "come"]
    assert seq.word_ids == [0, 0]
    assert seq.is_first == [True, False]


def test_single_piece_word():
    v = build_vocab([["a", "b"]], 0)
    seq = tokenize(["a"], v)
    assert pieces(seq, v) == ["a"] and seq.word_ids == [0] and seq.is_first == [True]


def test_deterministic_and_dense_ids(corpus):
    words = [ex.spoken for ex in corpus]
    a, b = build_vocab(words, 60), build_vocab(words, 60)
    assert a.pieces == b.pieces
    assert sorted(a.piece_to_id.values()) == list(range(len(a)))


def test_lexicographic_tie_break():
    # "ab" and "cd" each occur once: the smaller pair merges first
    v = build_vocab([["ab", "cd"]], 1)
    assert v.pieces[-1] == "ab"


def test_empty_corpus_rejected():
    with pytest.raises(ValueError, match="empty corpus"):
        build_vocab([], 3)
    with pytest.raises(ValueError, match="empty corpus"):
        build_vocab([[]], 3)


def test_number_words_form_word_runs(vocab):
    seq = tokenize(["three", "point", "five"], vocab)
    runs = [k for k in range(len(seq)) if k == 0 or seq.word_ids[k] != seq.word_ids[k - 1]]
    assert len(runs) == 3 and seq.num_words == 3


def test_unknown_characters_map_to_unk(vocab):
    ids = split_word("z#q", vocab)
    assert vocab.unk_id in ids


def test_invalid_words_rejected(vocab):
    for bad in ([""], ["two words"], ["tab\tbed"]):
        with pytest.raises(ValueError):
            tokenize(bad, vocab)


def test_uppercase_input_is_lowercased(vocab):
    assert tokenize(["Three"], vocab).token_ids == tokenize(["three"], vocab).token_ids


def test_vocab_file_roundtrip(tmp_path, vocab):
    path = tmp_path / "v.txt"
    vocab.save(path)
    assert path.read_text().splitlines()[0].startswith("#")
    assert Vocab.load(path).pieces == vocab.pieces
    path.write_text("garbage\n")
    with pytest.raises(ValueError):
        Vocab.load(path)


def test_project_labels_first_subword():
    v = build_vocab(WELCOME_CORPUS, 5)
    seq = tokenize(["welcome"], v)
    lab = project_labels(["B-NUMBER"], ["O"], seq)
    assert lab.nc_labels == [NC_INDEX["B-NUMBER"], IGNORE]
    assert lab.punct_labels == [PUNCT_INDEX["O"], IGNORE]
    assert lab.loss_mask == [True, False]


def test_project_labels_counts(vocab):
    seq = tokenize(["welcome", "to", "vincom"], vocab)
    lab = project_labels(["O"] * 3, ["O", "O", "PERIOD"], seq)
    assert sum(lab.loss_mask) == 3
    assert [l for l, m in zip(lab.nc_labels, lab.loss_mask) if m] == [NC_INDEX["O"]] * 3


def test_project_labels_length_mismatch(vocab):
    seq = tokenize(["a", "b"], vocab)
    with pytest.raises(ValueError):
        project_labels(["O"], ["O", "O"], seq)


@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_roundtrip_and_alignment(vocab, data):
    alphabet = "".join(p for p in vocab.pieces if len(p) == 1)
    words = data.draw(st.lists(st.text(alphabet=alphabet, min_size=1, max_size=12), min_size=1, max_size=10))
    seq = tokenize(words, vocab)
    text = [vocab.pieces[i] for i in seq.token_ids]
    for w_idx, w in enumerate(words):
        assert "".join(p for p, k in zip(text, seq.word_ids) if k == w_idx) == w
    wid = np.asarray(seq.word_ids)
    assert wid[0] == 0 and np.all(np.diff(wid) >= 0) and np.all(np.diff(wid) <= 1)
    assert sum(seq.is_first) == len(words) == len(set(seq.word_ids))
    for k, first in enumerate(seq.is_first):
        assert first == (k == 0 or seq.word_ids[k] != seq.word_ids[k - 1])
