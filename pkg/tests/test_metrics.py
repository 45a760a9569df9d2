import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import all_strings, edit_distance, edit_distance_table
from streamitn.metrics import (EvalReport, Interval, align, bootstrap_ci, bootstrap_diff, build_report,
                               itn_region_errors, itn_wer, overall_f1, span_prf, wer)


def test_span_prf_perfect():
    gold = [["B-NUMBER", "I-NUMBER", "O", "B-CASE"]]
    out = span_prf(gold, gold)
    assert out["micro"].f1 == 1.0 and out["NUMBER"].precision == 1.0 and out["CASE"].recall == 1.0


def test_span_prf_no_predictions():
    out = span_prf([["B-DATE", "O"]], [["O", "O"]])
    assert (out["micro"].precision, out["micro"].recall, out["micro"].f1) == (0.0, 0.0, 0.0)


def test_span_prf_exact_match_only():
    out = span_prf([["B-NUMBER", "I-NUMBER", "O"]], [["B-NUMBER", "O", "O"]])
    m = out["micro"]
    assert (m.tp, m.fp, m.fn, m.f1) == (0, 1, 1, 0.0)


def test_span_prf_class_counts():
    gold = [["B-CASE", "O", "B-NUMBER", "I-NUMBER"], ["B-PHONE", "I-PHONE"]]
    pred = [["B-CASE", "O", "B-DATE", "I-DATE"], ["B-PHONE", "I-PHONE"]]
    out = span_prf(gold, pred)
    assert out["CASE"].f1 == 1.0 and out["NUMBER"].recall == 0.0 and out["DATE"].precision == 0.0
    assert (out["micro"].tp, out["micro"].fp, out["micro"].fn) == (2, 1, 1)
    assert out["micro"].f1 == pytest.approx(2 / 3)


def test_span_prf_length_mismatch():
    with pytest.raises(ValueError):
        span_prf([["O", "O"]], [["O"]])
    with pytest.raises(ValueError):
        span_prf([["O"]], [])


tag = st.sampled_from(["O", "B-CASE", "I-CASE", "B-NUMBER", "I-NUMBER", "B-DATE"])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=6), st.data())
def test_micro_f1_order_invariant(lengths, data):
    gold = [data.draw(st.lists(tag, min_size=n, max_size=n)) for n in lengths]
    pred = [data.draw(st.lists(tag, min_size=n, max_size=n)) for n in lengths]
    perm = data.draw(st.permutations(range(len(lengths))))
    a = span_prf(gold, pred)["micro"]
    b = span_prf([gold[i] for i in perm], [pred[i] for i in perm])["micro"]
    assert a.f1 == pytest.approx(b.f1, abs=1e-12)


def test_wer_examples():
    rate, ops = wer(list("abc"), list("abc"))
    assert rate == 0.0 and [o[0] for o in ops] == ["match"] * 3
    rate, ops = wer(["a", "b", "c"], ["a", "x", "c"])
    assert rate == pytest.approx(1 / 3) and [o[0] for o in ops] == ["match", "sub", "match"]
    assert wer([], []) == (0.0, [])
    with pytest.raises(ValueError):
        wer([], ["a"])


def test_alignment_tie_break():
    # one edit either way; substitution outranks a delete+insert pair, deletion outranks insertion
    assert [o[0] for o in align(["a"], ["b"])] == ["sub"]
    assert [o[0] for o in align(["a", "b"], ["b"])] == ["del", "match"]
    assert [o[0] for o in align(["b"], ["a", "b"])] == ["ins", "match"]


def apply(ops, ref, hyp):
    out = []
    for op, ri, hj in ops:
        if op == "match":
            assert ref[ri] == hyp[hj]
            out.append(ref[ri])
        elif op in ("sub", "ins"):
            out.append(hyp[hj])
    return out


word = st.lists(st.sampled_from("abc"), max_size=8)


@settings(max_examples=400, deadline=None)
@given(word, word)
def test_wer_matches_dp_oracle(ref, hyp):
    if not ref and hyp:
        return
    rate, ops = wer(ref, hyp)
    errors = sum(op[0] != "match" for op in ops)
    assert errors == edit_distance(ref, hyp)
    if ref:
        assert rate == errors / len(ref)
    assert apply(ops, ref, hyp) == list(hyp)
    assert [o[1] for o in ops if o[1] is not None] == list(range(len(ref)))


@settings(max_examples=200, deadline=None)
@given(word, word)
def test_distance_symmetric(a, b):
    cost = lambda r, h: sum(o[0] != "match" for o in align(r, h))
    assert cost(a, b) == cost(b, a)


def test_vectorized_oracle_agrees_with_scalar():
    refs, hyps = all_strings(3, 3), all_strings(3, 2)
    table = edit_distance_table(refs, hyps)
    for i in range(len(refs)):
        for j in range(len(hyps)):
            assert table[i, j] == edit_distance(refs[i].tolist(), hyps[j].tolist())


# Hand-computed I-WER / NI-WER fixtures: (reference, ITN flags, hypothesis, expected (I-WER, NI-WER)).
ITN_FIXTURES = [
    ("send 3.5 now", [0, 1, 0], "send 3.5 now", (0.0, 0.0)),
    ("send 3.5 now", [0, 1, 0], "send 35 now", (1.0, 0.0)),
    ("send 3.5 now", [0, 1, 0], "send 3.5 later", (0.0, 0.5)),
    # insertion after an ITN word belongs to it
    ("send 3.5 now", [0, 1, 0], "send 3.5 dollars now", (1.0, 0.0)),
    # sentence-initial insertion is non-ITN
    ("send 3.5 now", [0, 1, 0], "well send 3.5 now", (0.0, 0.5)),
    ("send 3.5 now", [0, 1, 0], "send now", (1.0, 0.0)),
    ("call 0319678116 on March 5, 2021", [0, 1, 0, 1, 1, 1], "call 0319678116 on march 5 2021", (0.5, 0.0)),
    ("hello there", [0, 0], "hello there", (0.0, 0.0)),
    # the substitution lands on "five", so both insertions precede every reference word (non-ITN,
    # a region with no reference words, which reports 0)
    ("3.5", [1], "three point five", (1.0, 0.0)),
    # same tie-break: "paid three point 3.5->five", insertions attach to "paid"
    ("I paid 3.5", [0, 0, 1], "I paid three point five", (1.0, 1.0)),
]


@pytest.mark.parametrize("ref,flags,hyp,expected", ITN_FIXTURES)
def test_itn_wer_fixtures(ref, flags, hyp, expected):
    assert itn_wer(ref.split(), [bool(f) for f in flags], hyp.split()) == expected


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abc"), st.booleans()), min_size=1, max_size=8), word)
def test_itn_errors_partition(ref_flags, hyp):
    ref = [r for r, _ in ref_flags]
    flags = [f for _, f in ref_flags]
    r = itn_region_errors(ref, flags, hyp)
    assert r.itn_errors + r.other_errors == edit_distance(ref, hyp)
    assert r.itn_ref + r.other_ref == len(ref)


def test_itn_wer_flag_mismatch():
    with pytest.raises(ValueError):
        itn_wer(["a", "b"], [True], ["a"])


def test_bootstrap_zero_variance():
    stats = np.tile(np.array([[3.0, 1.0, 2.0]]), (20, 1))[:, None, :]
    ci = bootstrap_ci(stats, overall_f1, iterations=500, seed=0)
    assert ci.lower == pytest.approx(ci.mean) and ci.upper == pytest.approx(ci.mean)


def test_bootstrap_deterministic(rng):
    stats = rng.integers(0, 5, (40, 3, 3)).astype(float)
    a = bootstrap_ci(stats, overall_f1, iterations=2000, seed=11)
    b = bootstrap_ci(stats, overall_f1, iterations=2000, seed=11)
    c = bootstrap_ci(stats, overall_f1, iterations=2000, seed=12)
    assert a == b and a != c
    assert a.mean == pytest.approx(float(overall_f1(stats.sum(0))))


def test_bootstrap_contains_point_estimate():
    rng = np.random.default_rng(5)
    hits = 0
    for k in range(50):
        stats = rng.integers(0, 6, (60, 2, 3)).astype(float)
        ci = bootstrap_ci(stats, overall_f1, iterations=1000, seed=k)
        hits += ci.lower <= ci.mean <= ci.upper
    assert hits / 50 > 0.9


def test_bootstrap_paired_difference(rng):
    a = rng.integers(0, 5, (30, 2, 3)).astype(float)
    same = bootstrap_diff(a, a, overall_f1, iterations=500)
    assert same.mean == 0 and same.lower == 0 and same.upper == 0
    with pytest.raises(ValueError):
        bootstrap_diff(a, a[:5], overall_f1)


def test_bootstrap_needs_data():
    with pytest.raises(ValueError):
        bootstrap_ci(np.zeros((0, 1, 3)), overall_f1)


def test_interval_format():
    iv = Interval(0.5, 0.25, 0.75)
    assert iv.half_width == 0.25 and str(iv).startswith("0.5") and "[" in str(iv)


def _report():
    gold_nc = [["B-NUMBER", "I-NUMBER", "O"], ["O", "B-CASE"]]
    pred_nc = [["B-NUMBER", "I-NUMBER", "O"], ["O", "O"]]
    gold_p = [["O", "O", "PERIOD"], ["COMMA", "QUESTION"]]
    pred_p = [["O", "O", "PERIOD"], ["O", "QUESTION"]]
    refs = [["I", "have", "35."], ["Hi,", "Anna?"]]
    flags = [[False, False, True], [False, True]]
    hyps = [["I", "have", "35."], ["Hi", "anna?"]]
    return build_report(gold_nc, pred_nc, gold_p, pred_p, refs, flags, hyps)


def test_build_report():
    r = _report()
    assert r.nc["NUMBER"].f1 == 1.0 and r.nc["CASE"].recall == 0.0
    assert r.nc["micro"].precision == 1.0 and r.nc["micro"].recall == 0.5
    assert r.punct["PERIOD"].f1 == 1.0 and r.punct["COMMA"].recall == 0.0
    assert r.i_wer == pytest.approx(1 / 2) and r.ni_wer == pytest.approx(1 / 3)
    # pooled over spans and marks: tp 1+2, fp 0, fn 1+1
    assert r.overall.f1 == pytest.approx(2 * 3 / (2 * 3 + 2))
    assert r.sentence_counts.shape[0] == 2


def test_report_rendering():
    from streamitn.metrics import add_confidence_intervals
    r = _report()
    cells = r.row("NS").split(" | ")
    assert cells[0] == "NS" and len(cells) == 6
    assert cells[4] == "50.00" and cells[5] == "33.33"
    add_confidence_intervals(r, iterations=200)
    assert "[" in r.row() and set(r.to_dict()["ci"]) == {"precision", "recall", "f1", "i_wer", "ni_wer"}
    for iv in r.ci.values():
        assert iv.lower <= iv.upper
    assert isinstance(r, EvalReport)
