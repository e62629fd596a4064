import itertools
import random

import numpy as np
import pytest

from compsynth import decomp, scan
from compsynth.decomp import SEP, MaskVariant, RelposBuckets, build_mask, relpos_bucket

from oracles import mask_row_oracle

VARIANTS = list(MaskVariant)


def row_set(mask, q):
    return set(mask.row(q))


# -- separators -------------------------------------------------------------


def test_insert_two_parts():
    seq = decomp.insert_separators(["WALK", "JUMP"], [(0, 1), (1, 2)])
    assert list(seq.tokens) == [SEP, "WALK", SEP, "JUMP", SEP]
    assert list(seq.sep_positions) == [0, 2, 4]
    assert seq.parts() == [("WALK",), ("JUMP",)]


def test_insert_three_part_program():
    prog = scan.translate_text("jump left twice and run right after walk thrice")
    seq = decomp.insert_separators(prog.tokens, prog.part_spans)
    # 9 actions and one separator before each of 3 parts plus a closing one
    assert len(seq.tokens) == 9 + 3 + 1 == 13
    assert list(seq.sep_positions) == [0, 4, 9, 12]
    assert decomp.strip_separators(seq.tokens) == list(prog.tokens)


@pytest.mark.parametrize("spans", [[(0, 1)], [(0, 1), (2, 3)], [(0, 2), (2, 2), (2, 3)], [(1, 3)]])
def test_insert_rejects_bad_tiling(spans):
    with pytest.raises(ValueError):
        decomp.insert_separators(["A", "B", "C"], spans)


def test_strip_examples():
    assert decomp.strip_separators([SEP, "WALK", SEP]) == ["WALK"]
    assert decomp.strip_separators(["WALK", "RUN"]) == ["WALK", "RUN"]
    assert decomp.strip_separators([SEP, SEP, SEP]) == []


# -- masks ------------------------------------------------------------------

SMALL = [SEP, "A", SEP, "B", SEP]


def test_mask_examples():
    assert row_set(build_mask(SMALL, "sep-full"), 2) == {0, 1, 2}
    assert row_set(build_mask(SMALL, "sep-to-last"), 2) == {1, 2}
    for v in VARIANTS:
        assert row_set(build_mask(SMALL, v), 3) == {2, 3}
    assert row_set(build_mask(SMALL, "sep-to-sep-and-last"), 4) == {0, 1, 2, 3, 4}


def test_mask_serializations():
    m = build_mask(SMALL, "sep-to-last")
    assert m.dense().splitlines() == ["10000", "11000", "01100", "00110", "01011"]
    assert m.sparse() == [[0], [0, 1], [1, 2], [2, 3], [1, 3, 4]]
    empty = build_mask([], "sep-full")
    assert len(empty) == 0 and empty.dense() == "" and empty.sparse() == []


def test_sep_full_rows_are_saturated():
    seq = decomp.insert_separators(list("abcdefg"), [(0, 2), (2, 3), (3, 7)])
    m = build_mask(seq, MaskVariant.SEP_FULL)
    for q in seq.sep_positions:
        assert m.row(q) == list(range(q + 1))


def check_mask_properties(tokens):
    masks = {v: build_mask(tokens, v) for v in VARIANTS}
    n = len(tokens)
    for v, m in masks.items():
        a = m.allow
        assert a.shape == (n, n) and a.dtype == bool
        assert not np.triu(a, 1).any(), "causal"
        assert a.any(axis=1).all(), "non-empty rows"
        for q in range(n):
            assert row_set(m, q) == mask_row_oracle(tokens, q, v.value, SEP), (tokens, v, q)
    full, mid, last = (masks[v].allow for v in
                       (MaskVariant.SEP_FULL, MaskVariant.SEP_TO_SEP_AND_LAST, MaskVariant.SEP_TO_LAST))
    for q, t in enumerate(tokens):
        if t == SEP:
            assert (last[q] <= mid[q]).all() and (mid[q] <= full[q]).all()
        else:
            assert (full[q] == mid[q]).all() and (mid[q] == last[q]).all()
            opener = max(k for k in range(q + 1) if tokens[k] == SEP)
            assert set(np.flatnonzero(full[q])) == set(range(opener, q + 1))


def sep_sequences(max_len):
    """All well-formed separated sequences up to max_len tokens (content tokens abstracted)."""
    out = []
    for n in range(1, max_len + 1):
        # SEP, then parts of size >= 1 each followed by SEP
        inner = n - 1
        for k in range(1, inner // 2 + 1):
            for sizes in itertools.product(range(1, inner + 1), repeat=k):
                if sum(sizes) + k != inner:
                    continue
                toks = [SEP]
                for i, s in enumerate(sizes):
                    toks += [f"t{i}{j}" for j in range(s)] + [SEP]
                out.append(toks)
    return out


def test_masks_exhaustive_small():
    seqs = sep_sequences(8)
    assert len(seqs) == 1 + 1 + 2 + 3 + 5 + 8
    for toks in seqs:
        check_mask_properties(toks)


def test_masks_exhaustive_arbitrary_token_strings():
    # predicted sequences may be malformed; rules must still hold whenever position 0 is a SEP
    for n in range(1, 9):
        for bits in itertools.product((True, False), repeat=n - 1):
            check_mask_properties([SEP] + [SEP if b else "x" for b in bits])


def test_masks_random():
    rng = random.Random(0)
    for _ in range(10_000):
        sizes = [rng.randint(1, 6) for _ in range(rng.randint(1, 6))]
        prog = [f"t{i}" for i in range(sum(sizes))]
        spans, pos = [], 0
        for s in sizes:
            spans.append((pos, pos + s))
            pos += s
        check_mask_properties(list(decomp.insert_separators(prog, spans).tokens))


# -- relative position buckets ----------------------------------------------


def test_bucket_examples():
    assert relpos_bucket(0) == 0
    assert relpos_bucket(500) == relpos_bucket(10_000)
    assert relpos_bucket(-500) == relpos_bucket(-10_000)
    for d in range(0, 1000):
        assert relpos_bucket(d) <= relpos_bucket(d + 1)
        assert relpos_bucket(-d) <= relpos_bucket(-d - 1)


@pytest.mark.parametrize("bidirectional", [True, False])
def test_bucket_properties(bidirectional):
    b = RelposBuckets(bidirectional=bidirectional)
    assert b(0) == 0
    sat_pos, sat_neg = b(128), b(-128)
    for d in range(128, 2000):
        assert b(d) == sat_pos and b(-d) == sat_neg
    ids = {b(d) for d in range(-512, 513)}
    assert ids <= set(range(32))
    if bidirectional:
        assert len(ids) == 32
        # small distances are exact on the past side and on the future side
        assert [b(-d) for d in range(8)] == list(range(8))
        assert [b(d) for d in range(1, 9)] == list(range(16, 24))
    else:
        assert {b(d) for d in range(0, 600)} == {0}
        assert [b(-d) for d in range(16)] == list(range(16))
        assert len(ids) == 32


def test_bucket_matrix():
    b = RelposBuckets()
    m = b.matrix(4, 6)
    assert m.shape == (4, 6)
    for q in range(4):
        for k in range(6):
            assert m[q, k] == b(k - q)
