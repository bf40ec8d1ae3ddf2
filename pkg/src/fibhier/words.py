"""Fibonacci word prefixes, factor sets and minimal forbidden factors.

Letters follow the convention L <-> 0, S <-> 1 everywhere in the package.
The Fibonacci word is the fixed point of the substitution 0 -> 01, 1 -> 0,
so it starts LSLLSLSLLSLLS...

Minimal forbidden factors (MFFs) are produced two ways that never share
code: ``scan_mffs`` extracts them from a long prefix whose completeness is
certified at runtime, and ``boundary_flip_mffs`` builds them by the
recursive three-letter flip.

Rung labelling: the rung-K set holds M_{F_3}, ..., M_{F_K} (lengths
2, 3, 5, 8, ...).  The flip recursion indexes the same words as
M_2, M_3, M_4, ... with |M_n| = F_{n+1}, so rung K stops at n = K - 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

LETTERS = "LS"
_BIT_OF = {"L": 0, "S": 1}
_FLIP = {"L": "S", "S": "L"}


class InsufficientPrefixError(ValueError):
    """The scanned prefix does not contain every factor of some length."""


@dataclass(frozen=True, order=True)
class Word:
    """Finite word over {L, S}."""

    letters: str = ""

    def __post_init__(self) -> None:
        if not isinstance(self.letters, str):
            raise TypeError("letters must be a str")
        bad = set(self.letters) - _BIT_OF.keys()
        if bad:
            raise ValueError(f"invalid letters {sorted(bad)!r}; alphabet is L, S")

    @classmethod
    def from_bits(cls, bits: Iterable[int] | str) -> Word:
        if isinstance(bits, str):
            bits = [int(c) for c in bits]
        return cls("".join(LETTERS[int(b)] for b in bits))

    @classmethod
    def from_int(cls, value: int, length: int) -> Word:
        """Decode a big-endian integer: position 0 is the most significant bit."""
        if length == 0:
            return cls("")
        return cls.from_bits(format(value, f"0{length}b"))

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(_BIT_OF[c] for c in self.letters)

    @property
    def bitstring(self) -> str:
        return "".join(str(b) for b in self.bits)

    def to_int(self) -> int:
        return int(self.bitstring, 2) if self.letters else 0

    def flip(self, positions: Iterable[int]) -> Word:
        """Swap S <-> L at the given 0-indexed positions."""
        chars = list(self.letters)
        for p in positions:
            chars[p] = _FLIP[chars[p]]
        return Word("".join(chars))

    def __len__(self) -> int:
        return len(self.letters)

    def __add__(self, other: Word) -> Word:
        return Word(self.letters + other.letters)

    def __getitem__(self, item: slice) -> Word:
        if not isinstance(item, slice):
            raise TypeError("Word supports slicing only; use .letters for symbols")
        return Word(self.letters[item])

    def __contains__(self, other: Word) -> bool:
        return other.letters in self.letters

    def __str__(self) -> str:
        return self.letters


def fibonacci_numbers(count: int) -> list[int]:
    """F_1, ..., F_count with F_1 = F_2 = 1."""
    fib = [1, 1]
    while len(fib) < count:
        fib.append(fib[-1] + fib[-2])
    return fib[:count]


def fibonacci(k: int) -> int:
    """F_k with F_1 = F_2 = 1 (and F_0 = 0)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a


@dataclass(frozen=True)
class MffSet:
    """Minimal forbidden factors M_{F_3}, ..., M_{F_K} of the Fibonacci word."""

    K: int
    members: tuple[Word, ...]

    def __post_init__(self) -> None:
        if self.K < 3:
            raise ValueError("K must be >= 3")
        expected = [fibonacci(k) for k in range(3, self.K + 1)]
        lengths = [len(m) for m in self.members]
        if lengths != expected:
            raise ValueError(f"member lengths {lengths} != Fibonacci lengths {expected}")

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def max_length(self) -> int:
        return len(self.members[-1])

    def to_json(self) -> dict:
        return {"K": self.K, "mffs": [m.letters for m in self.members]}

    @classmethod
    def from_json(cls, data: dict) -> MffSet:
        return cls(K=int(data["K"]), members=tuple(Word(s) for s in data["mffs"]))


def _prefix_string(length: int) -> str:
    # s_1 = L, s_2 = LS, s_n = s_{n-1} s_{n-2}; every s_n is a prefix of the fixed point
    prev, cur = "L", "LS"
    while len(cur) < length:
        prev, cur = cur, cur + prev
    return (cur if length > 1 else prev)[:length]


def fibonacci_word_prefix(length: int) -> Word:
    """First ``length`` letters of the infinite Fibonacci word."""
    if length < 1:
        raise ValueError("length must be >= 1")
    return Word(_prefix_string(length))


def factor_set(w: Word, n: int) -> set[Word]:
    """All distinct length-``n`` factors of ``w``."""
    if n < 1 or n > len(w):
        raise ValueError(f"factor length {n} outside 1..{len(w)}")
    return {Word(s) for s in _factors(w.letters, n)}


def _factors(s: str, n: int) -> set[str]:
    return {s[i : i + n] for i in range(len(s) - n + 1)}


def _certified_factors(text: str, max_length: int) -> list[set[str]] | None:
    """Factor sets for lengths 0..max_length, or None if some p(n) != n + 1."""
    table: list[set[str]] = [{""}]
    for n in range(1, max_length + 1):
        f = _factors(text, n)
        if len(f) != n + 1:
            return None
        table.append(f)
    return table


def scan_mffs(
    max_length: int,
    prefix_length: int | None = None,
    *,
    grow: bool = True,
    max_prefix: int = 1 << 22,
) -> MffSet:
    """Extract every MFF of length <= ``max_length`` by scanning a prefix.

    The prefix is accepted only if it exhibits exactly n + 1 distinct
    factors of each length n <= max_length; since the infinite word has
    exactly that many, the prefix then holds all of them.  With ``grow``
    the prefix is doubled until that holds, otherwise a too-short prefix
    raises ``InsufficientPrefixError``.
    """
    if max_length < 2:
        raise ValueError("max_length must be >= 2 (the shortest MFF has length 2)")
    length = prefix_length if prefix_length is not None else 4 * max_length + 8
    while True:
        if length < max_length:
            table = None
        else:
            table = _certified_factors(_prefix_string(length), max_length)
        if table is not None:
            break
        if not grow or length >= max_prefix:
            raise InsufficientPrefixError(
                f"prefix of length {length} does not contain all factors up to length {max_length}"
            )
        length = min(2 * max(length, 1), max_prefix)

    found: list[Word] = []
    for m in range(2, max_length + 1):
        # a u b is minimal forbidden iff a u and u b occur but a u b does not
        for u in sorted(table[m - 2]):
            for a in LETTERS:
                if a + u not in table[m - 1]:
                    continue
                for b in LETTERS:
                    cand = a + u + b
                    if u + b in table[m - 1] and cand not in table[m]:
                        found.append(Word(cand))
    found.sort(key=lambda w: (len(w), w.letters))

    lengths = [len(w) for w in found]
    if len(set(lengths)) != len(lengths):
        raise AssertionError(f"more than one MFF at some length: {lengths}")
    K = 2
    while fibonacci(K + 1) <= max_length:
        K += 1
    if K < 3:
        raise ValueError("max_length must be >= 2")
    return MffSet(K=K, members=tuple(found))


def boundary_flip_mffs(K: int) -> MffSet:
    """Build M_{F_3}..M_{F_K} by the boundary-flip recursion.

    M_2 = SS, M_3 = LLL; for n >= 4, M_n is M_{n-1} M_{n-2} with letters
    1, |M_{n-1}| and |M_{n-1}| + 1 (1-indexed) flipped.
    """
    if K < 3:
        raise ValueError("K must be >= 3")
    seq = [Word("SS"), Word("LLL")]
    while len(seq) < K - 2:
        prev, prev2 = seq[-1], seq[-2]
        w = prev + prev2
        seq.append(w.flip((0, len(prev) - 1, len(prev))))
    return MffSet(K=K, members=tuple(seq[: K - 2]))


def is_minimal_forbidden(m: Word, prefix: Word) -> bool:
    """True iff ``m`` is absent from ``prefix`` but both maximal proper factors occur.

    Only meaningful when ``prefix`` is known to contain every factor of
    length |m| - 1 of the infinite word.
    """
    if len(m) < 1:
        return False
    return m not in prefix and m[1:] in prefix and m[:-1] in prefix


def factor_complexity(w: Word, lengths: Sequence[int]) -> dict[int, int]:
    return {n: len(_factors(w.letters, n)) for n in lengths}
