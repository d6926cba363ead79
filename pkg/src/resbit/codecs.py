"""One-hot, plain binary and residual-bit (ResBit) codecs over class indices.

A ResBit code for ``M`` classes splits ``M - 1`` greedily into terms
``2**b - 1`` and spends one block of ``b`` bits on each term.  A class index
is written block by block: a block is saturated (all ones) while the
remaining value can absorb it, and the first block that cannot holds the
remainder in plain binary.  Every bit pattern decodes to a value in
``[0, M - 1]``, so unlike plain binary there are no out-of-index codes.

Scalar functions work on tuples of ints; the ``*_array`` variants operate on
whole index vectors / bit matrices and are what the pipeline and the
simulation harness use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

from .exceptions import CodeRangeError, DomainError, MalformedCodeError, ShapeError

SCHEMES = ("onehot", "binary", "resbit")

#: Largest ``M`` accepted by :func:`optimal_block_lengths_oracle`.
ORACLE_LIMIT = 1 << 20


class OutOfIndex(NamedTuple):
    """A binary pattern whose value has no class behind it."""

    value: int


@dataclass(frozen=True)
class CategorySpace:
    """Fitted vocabulary of one categorical column.

    ``labels[i]`` is the label of class index ``i``.  ``block_lengths`` is
    derived from the class count and never passed in.
    """

    labels: tuple
    masked_label: str | None = None
    block_lengths: tuple = field(init=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise DomainError("a category space needs at least one label")
        if len(set(labels)) != len(labels):
            raise DomainError("category labels must be distinct")
        if self.masked_label is not None and self.masked_label not in labels:
            raise DomainError(f"masked label {self.masked_label!r} missing from labels")
        object.__setattr__(self, "block_lengths", tuple(block_lengths(len(labels))))

    @classmethod
    def of_size(cls, class_count: int) -> "CategorySpace":
        """Space whose labels are the decimal strings ``"0" .. "M-1"``."""
        _check_class_count(class_count)
        return cls(tuple(str(i) for i in range(class_count)))

    @property
    def class_count(self) -> int:
        return len(self.labels)

    @property
    def width(self) -> int:
        return sum(self.block_lengths)

    def index_of(self) -> dict:
        return {label: i for i, label in enumerate(self.labels)}


SpaceLike = Union[CategorySpace, int]


def _check_class_count(M) -> None:
    if isinstance(M, bool) or not isinstance(M, (int, np.integer)):
        raise DomainError(f"class count must be an integer, got {M!r}")
    if M < 1:
        raise DomainError(f"class count must be >= 1, got {M}")


def _class_count(space: SpaceLike) -> int:
    if isinstance(space, CategorySpace):
        return space.class_count
    _check_class_count(space)
    return int(space)


def _blocks(space: SpaceLike) -> tuple:
    if isinstance(space, CategorySpace):
        return space.block_lengths
    return tuple(block_lengths(space))


def _check_index(n, M: int) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise CodeRangeError(f"class index must be an integer, got {n!r}")
    if not 0 <= n < M:
        raise CodeRangeError(f"class index {n} outside [0, {M})")
    return int(n)


def _check_bits(code: Sequence[int], width: int) -> tuple:
    bits = tuple(int(b) for b in code)
    if len(bits) != width:
        raise ShapeError(f"expected a code of width {width}, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ShapeError("codes may only contain 0 and 1")
    return bits


def _bits_to_int(bits: Iterable[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | b
    return value


def _int_to_bits(value: int, width: int) -> tuple:
    return tuple((value >> (width - 1 - j)) & 1 for j in range(width))


# --------------------------------------------------------------------------
# widths


def block_lengths(M: int) -> list[int]:
    """Greedy ResBit block lengths for ``M`` classes.

    Repeatedly removes the longest run of ones ``2**b - 1`` that fits into
    what is left of ``M - 1``; stops as soon as the remainder itself is all
    ones.

    >>> block_lengths(50)
    [5, 4, 2]
    >>> block_lengths(1024)
    [10]
    """
    _check_class_count(M)
    remaining = int(M) - 1
    lengths: list[int] = []
    if remaining == 0:
        return lengths
    while True:
        n_bits = remaining.bit_length()
        if remaining == (1 << n_bits) - 1:
            lengths.append(n_bits)
            return lengths
        remaining -= (1 << (n_bits - 1)) - 1
        lengths.append(n_bits - 1)


def binary_width(M: int) -> int:
    """``ceil(log2 M)``, with a single bit for the constant column."""
    _check_class_count(M)
    return max(1, (int(M) - 1).bit_length())


def dims(M: int, scheme: str) -> int:
    """Number of output dimensions a column of ``M`` classes needs."""
    _check_class_count(M)
    if scheme == "onehot":
        return int(M)
    if scheme == "binary":
        return binary_width(M)
    if scheme == "resbit":
        return sum(block_lengths(M))
    raise DomainError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def reduction_vs_onehot(M: int, scheme: str = "resbit") -> float:
    """Percentage of one-hot dimensions saved by ``scheme``."""
    return 100.0 * (1.0 - dims(M, scheme) / M)


def min_width_table(limit: int) -> list[int]:
    """Minimal total block length for every target ``0 .. limit - 1``.

    Exact unbounded-knapsack DP with items ``(2**k - 1, cost k)``.
    """
    if limit < 1 or limit > ORACLE_LIMIT:
        raise DomainError(f"DP table size must lie in [1, {ORACLE_LIMIT}], got {limit}")
    items = []
    k = 1
    while (1 << k) - 1 < limit:
        items.append(((1 << k) - 1, k))
        k += 1
    cost = [0] * limit
    for v in range(1, limit):
        # k = 1 (weight 1) always applies, so every target is reachable.
        best = cost[v - 1] + 1
        for weight, c in items[1:]:
            if weight > v:
                break
            cand = cost[v - weight] + c
            if cand < best:
                best = cand
        cost[v] = best
    return cost


def optimal_block_lengths_oracle(M: int) -> tuple[int, list[int]]:
    """Minimal total ResBit width for ``M`` classes and one optimal multiset.

    Only used to cross-check :func:`block_lengths`; it never feeds the codecs.
    """
    _check_class_count(M)
    if M > ORACLE_LIMIT:
        raise DomainError(f"oracle is limited to M <= {ORACLE_LIMIT}, got {M}")
    cost = min_width_table(int(M))
    target = int(M) - 1
    lengths = []
    v = target
    while v > 0:
        k = 1
        while (1 << k) - 1 <= v:
            if cost[v - (1 << k) + 1] + k == cost[v]:
                lengths.append(k)
                v -= (1 << k) - 1
                break
            k += 1
    return cost[target], sorted(lengths, reverse=True)


# --------------------------------------------------------------------------
# ResBit


def encode_resbit(n: int, space: SpaceLike) -> tuple:
    """ResBit code of class index ``n``, blocks largest-first, big-endian."""
    M = _class_count(space)
    remaining = _check_index(n, M)
    bits: list[int] = []
    for b in _blocks(space):
        if remaining == 0:
            bits.extend([0] * b)
            continue
        full = (1 << b) - 1
        if full <= remaining:
            bits.extend([1] * b)
            remaining -= full
        else:
            bits.extend(_int_to_bits(remaining, b))
            remaining = 0
    return tuple(bits)


def decode_resbit(code: Sequence[int], space: SpaceLike) -> int:
    """Sum of the per-block binary values of ``code``.

    Total: every pattern of the right width maps into ``[0, M - 1]``.
    """
    lengths = _blocks(space)
    bits = _check_bits(code, sum(lengths))
    value = 0
    pos = 0
    for b in lengths:
        value += _bits_to_int(bits[pos:pos + b])
        pos += b
    return value


def encode_resbit_array(indices, lengths: Sequence[int]) -> np.ndarray:
    """Vectorised :func:`encode_resbit`; returns a ``(n, width)`` uint8 matrix."""
    remaining = np.asarray(indices, dtype=np.int64).copy()
    lengths = [int(b) for b in lengths]
    if remaining.size and (remaining.min() < 0 or remaining.max() > sum((1 << b) - 1 for b in lengths)):
        raise CodeRangeError("class index outside the range of the block lengths")
    out = np.zeros((remaining.shape[0], sum(lengths)), dtype=np.uint8)
    pos = 0
    for b in lengths:
        full = (1 << b) - 1
        block = np.minimum(remaining, full)
        remaining -= block
        shifts = np.arange(b - 1, -1, -1, dtype=np.int64)
        out[:, pos:pos + b] = (block[:, None] >> shifts) & 1
        pos += b
    return out


def decode_resbit_array(bits, lengths: Sequence[int]) -> np.ndarray:
    """Vectorised :func:`decode_resbit` over the rows of a bit matrix."""
    bits = np.asarray(bits)
    lengths = [int(b) for b in lengths]
    if bits.ndim != 2 or bits.shape[1] != sum(lengths):
        raise ShapeError(f"expected a bit matrix of width {sum(lengths)}, got shape {bits.shape}")
    values = np.zeros(bits.shape[0], dtype=np.int64)
    pos = 0
    for b in lengths:
        weights = 1 << np.arange(b - 1, -1, -1, dtype=np.int64)
        values += bits[:, pos:pos + b].astype(np.int64) @ weights
        pos += b
    return values


# --------------------------------------------------------------------------
# plain binary


def encode_binary(n: int, M: int) -> tuple:
    """Zero-padded big-endian binary of ``n`` in ``binary_width(M)`` bits."""
    n = _check_index(n, _class_count(M))
    return _int_to_bits(n, binary_width(M))


def decode_binary(code: Sequence[int], M: int) -> int | OutOfIndex:
    """Binary value of ``code``, or :class:`OutOfIndex` when it is ``>= M``."""
    bits = _check_bits(code, binary_width(M))
    value = _bits_to_int(bits)
    if value >= M:
        return OutOfIndex(value)
    return value


def encode_binary_array(indices, M: int) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= M):
        raise CodeRangeError(f"class index outside [0, {M})")
    width = binary_width(M)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((indices[:, None] >> shifts) & 1).astype(np.uint8)


def decode_binary_array(bits, M: int) -> np.ndarray:
    """Binary values of each row; out-of-index rows are returned unchanged.

    Callers compare against ``M`` to detect them.
    """
    bits = np.asarray(bits)
    width = binary_width(M)
    if bits.ndim != 2 or bits.shape[1] != width:
        raise ShapeError(f"expected a bit matrix of width {width}, got shape {bits.shape}")
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    return bits.astype(np.int64) @ weights


# --------------------------------------------------------------------------
# one-hot


def encode_onehot(n: int, M: int) -> tuple:
    n = _check_index(n, _class_count(M))
    return tuple(1 if i == n else 0 for i in range(M))


def decode_onehot(code: Sequence[int], M: int) -> int:
    bits = _check_bits(code, _class_count(M))
    hot = [i for i, b in enumerate(bits) if b == 1]
    if len(hot) != 1:
        raise MalformedCodeError(f"one-hot code has {len(hot)} set bits")
    return hot[0]


def encode_onehot_array(indices, M: int) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= M):
        raise CodeRangeError(f"class index outside [0, {M})")
    out = np.zeros((indices.shape[0], M), dtype=np.uint8)
    out[np.arange(indices.shape[0]), indices] = 1
    return out


def decode_onehot_array(bits, M: int) -> np.ndarray:
    """Hot index of each row, ``-1`` where the row is not exactly one-hot."""
    bits = np.asarray(bits)
    if bits.ndim != 2 or bits.shape[1] != M:
        raise ShapeError(f"expected a bit matrix of width {M}, got shape {bits.shape}")
    valid = bits.sum(axis=1) == 1
    return np.where(valid, bits.argmax(axis=1), -1).astype(np.int64)


# --------------------------------------------------------------------------
# scheme dispatch


def encode_array(indices, space: SpaceLike, scheme: str) -> np.ndarray:
    M = _class_count(space)
    if scheme == "resbit":
        return encode_resbit_array(indices, _blocks(space))
    if scheme == "binary":
        return encode_binary_array(indices, M)
    if scheme == "onehot":
        return encode_onehot_array(indices, M)
    raise DomainError(f"unknown scheme {scheme!r}")


def decode_array(bits, space: SpaceLike, scheme: str) -> np.ndarray:
    """Decode a bit matrix to indices.

    Out-of-index binary rows and malformed one-hot rows come back as ``-1``
    and ``-2`` respectively; ResBit never produces either.
    """
    M = _class_count(space)
    if scheme == "resbit":
        return decode_resbit_array(bits, _blocks(space))
    if scheme == "binary":
        values = decode_binary_array(bits, M)
        return np.where(values >= M, OUT_OF_INDEX, values)
    if scheme == "onehot":
        values = decode_onehot_array(bits, M)
        return np.where(values < 0, MALFORMED, values)
    raise DomainError(f"unknown scheme {scheme!r}")


OUT_OF_INDEX = -1
MALFORMED = -2
