"""Separator tokens, decompositional decoder masks and relative-position buckets."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SEP = "<SEP>"

NUM_BUCKETS = 32
MAX_DISTANCE = 128


class MaskVariant(str, enum.Enum):
    SEP_FULL = "sep-full"
    SEP_TO_SEP_AND_LAST = "sep-to-sep-and-last"
    SEP_TO_LAST = "sep-to-last"


@dataclass(frozen=True)
class SepSequence:
    tokens: tuple[str, ...]
    sep_positions: tuple[int, ...]

    def parts(self) -> list[tuple[str, ...]]:
        pos = self.sep_positions
        return [self.tokens[a + 1 : b] for a, b in zip(pos, pos[1:])]


@dataclass(frozen=True)
class MaskMatrix:
    variant: MaskVariant
    allow: np.ndarray  # (L, L) bool; allow[q, k]: query q may attend key k

    def __len__(self):
        return self.allow.shape[0]

    def row(self, q: int) -> list[int]:
        return np.flatnonzero(self.allow[q]).tolist()

    def dense(self) -> str:
        return "\n".join("".join("1" if v else "0" for v in row) for row in self.allow)

    def sparse(self) -> list[list[int]]:
        return [self.row(q) for q in range(len(self))]


def insert_separators(
    program_tokens: Sequence[str], part_spans: Sequence[tuple[int, int]]
) -> SepSequence:
    """Build ``SEP part1 SEP part2 ... SEP partN SEP``."""
    pos = 0
    tokens = [SEP]
    seps = [0]
    for start, end in part_spans:
        if start != pos or end <= start:
            raise ValueError(f"part spans do not tile the program: {list(part_spans)}")
        tokens.extend(program_tokens[start:end])
        seps.append(len(tokens))
        tokens.append(SEP)
        pos = end
    if pos != len(program_tokens):
        raise ValueError("part spans do not cover the whole program")
    return SepSequence(tuple(tokens), tuple(seps))


def strip_separators(tokens: Sequence[str]) -> list[str]:
    return [t for t in tokens if t != SEP]


def build_mask(seq: SepSequence | Sequence[str], variant: MaskVariant | str) -> MaskMatrix:
    """Decoder self-attention mask for a separated token sequence.

    A non-separator query sees its own part so far, opening separator
    included. A separator query sees, depending on ``variant``, the whole
    prefix, earlier separators plus the last token of each finished part, or
    only those last tokens; it always sees itself.
    """
    variant = MaskVariant(variant)
    tokens = seq.tokens if isinstance(seq, SepSequence) else tuple(seq)
    n = len(tokens)
    is_sep = np.array([t == SEP for t in tokens], dtype=bool)
    allow = np.zeros((n, n), dtype=bool)
    if n == 0:
        return MaskMatrix(variant, allow)
    # last token of a part: a non-separator immediately followed by a separator
    is_last = np.zeros(n, dtype=bool)
    is_last[:-1] = ~is_sep[:-1] & is_sep[1:]

    part_start = 0
    for q in range(n):
        if not is_sep[q]:
            allow[q, part_start : q + 1] = True
            continue
        if variant is MaskVariant.SEP_FULL:
            allow[q, : q + 1] = True
        else:
            allow[q, :q] = is_last[:q]
            if variant is MaskVariant.SEP_TO_SEP_AND_LAST:
                allow[q, :q] |= is_sep[:q]
            allow[q, q] = True
        part_start = q
    return MaskMatrix(variant, allow)


@dataclass(frozen=True)
class RelposBuckets:
    """Exact buckets for short distances, log-spaced buckets up to ``max_distance``.

    ``distance`` is key position minus query position. Bidirectional mode
    splits the buckets between the two signs, with distance 0 in the lower
    half and future keys counted from distance 1 in the upper half so that
    every bucket id is reachable. Unidirectional mode sends all future keys
    to bucket 0.
    """

    num_buckets: int = NUM_BUCKETS
    max_distance: int = MAX_DISTANCE
    bidirectional: bool = True

    def __call__(self, distance: int) -> int:
        buckets = self.num_buckets
        offset = 0
        if self.bidirectional:
            buckets //= 2
            if distance > 0:
                offset = buckets
                n = distance - 1
            else:
                n = -distance
        else:
            n = max(-distance, 0)
        max_exact = buckets // 2
        if n < max_exact:
            return offset + n
        scaled = math.log(n / max_exact) / math.log(self.max_distance / max_exact)
        return offset + min(max_exact + int(scaled * (buckets - max_exact)), buckets - 1)

    def matrix(self, query_len: int, key_len: int | None = None) -> np.ndarray:
        """Bucket ids for every (query, key) pair."""
        key_len = query_len if key_len is None else key_len
        rel = np.arange(key_len)[None, :] - np.arange(query_len)[:, None]
        lookup = {d: self(int(d)) for d in np.unique(rel)}
        return np.vectorize(lookup.__getitem__, otypes=[np.int64])(rel)


def relpos_bucket(
    distance: int,
    bidirectional: bool = True,
    num_buckets: int = NUM_BUCKETS,
    max_distance: int = MAX_DISTANCE,
) -> int:
    return RelposBuckets(num_buckets, max_distance, bidirectional)(distance)
