"""Reduced words over a free-group basis, and raw words in the ambient monoid.

A letter is a nonzero integer: ``+i`` is the i-th generator, ``-i`` its
inverse (1-based).  Raw monoid words are arbitrary sequences of letters;
:class:`Word` instances are always freely reduced.  Text form: generator i
prints as the i-th lowercase ASCII letter and its inverse as the matching
uppercase letter, the identity being the empty string (text form caps the
rank at 26; the integer encoding does not).

The canonical letter order, used by every enumeration and serialization
in this package, is ``a < A < b < B < ...``: each generator immediately
followed by its inverse.
"""
from __future__ import annotations

import math
from typing import Iterable, Iterator, Sequence

from .errors import BudgetExceededError

MAX_TEXT_RANK = 26


def letter_key(letter: int) -> int:
    """Position of a letter in the canonical order a < A < b < B < ..."""
    return 2 * (abs(letter) - 1) + (letter < 0)


def letter_from_key(key: int) -> int:
    gen = key // 2 + 1
    return -gen if key & 1 else gen


def alphabet(n: int) -> tuple[int, ...]:
    """The 2n letters of rank n in canonical order."""
    if n < 1:
        raise ValueError(f"rank must be >= 1, got {n}")
    return tuple(letter_from_key(i) for i in range(2 * n))


def letter_to_char(letter: int) -> str:
    i = abs(letter)
    if not 1 <= i <= MAX_TEXT_RANK:
        raise ValueError(f"letter {letter} outside text range 1..{MAX_TEXT_RANK}")
    c = chr(ord("a") + i - 1)
    return c if letter > 0 else c.upper()


def char_to_letter(c: str, rank: int | None = None) -> int:
    if len(c) != 1 or not c.isascii() or not c.isalpha():
        raise ValueError(f"invalid word character {c!r}")
    if c.islower():
        letter = ord(c) - ord("a") + 1
    else:
        letter = -(ord(c) - ord("A") + 1)
    if rank is not None and abs(letter) > rank:
        raise ValueError(f"character {c!r} exceeds rank {rank}")
    return letter


def parse_letters(text: str, rank: int | None = None) -> tuple[int, ...]:
    """Parse text into a raw letter sequence (no reduction performed)."""
    return tuple(char_to_letter(c, rank) for c in text)


def format_letters(letters: Iterable[int]) -> str:
    return "".join(letter_to_char(l) for l in letters)


def is_reduced(letters: Sequence[int]) -> bool:
    return all(letters[i] != -letters[i + 1] for i in range(len(letters) - 1))


def free_reduce(letters: Iterable[int]) -> tuple[int, ...]:
    """Cancel adjacent inverse pairs until none remain (stack scan)."""
    out: list[int] = []
    for l in letters:
        if out and out[-1] == -l:
            out.pop()
        else:
            out.append(l)
    return tuple(out)


class Word(tuple):
    """A freely reduced word, stored as a tuple of letters.

    Construction through :meth:`parse`, :meth:`from_letters` or
    :func:`reduce_word` guarantees the no-adjacent-inverse invariant.
    The raw tuple constructor is used internally on sequences already
    known to be reduced.
    """

    __slots__ = ()

    @classmethod
    def parse(cls, text: str, rank: int | None = None) -> "Word":
        letters = parse_letters(text, rank)
        if not is_reduced(letters):
            raise ValueError(f"word {text!r} is not freely reduced")
        return cls(letters)

    @classmethod
    def from_letters(cls, letters: Iterable[int]) -> "Word":
        letters = tuple(letters)
        if not is_reduced(letters):
            raise ValueError(f"letters {letters} are not freely reduced")
        return cls(letters)

    @classmethod
    def identity(cls) -> "Word":
        return cls()

    def __mul__(self, other: "Word") -> "Word":  # type: ignore[override]
        if not isinstance(other, tuple):
            return NotImplemented
        return multiply(self, other)

    def __rmul__(self, other):  # no int repetition; words only
        return NotImplemented

    def inverse(self) -> "Word":
        return Word(-l for l in reversed(self))

    def text(self) -> str:
        return format_letters(self)

    def __str__(self) -> str:
        return self.text()

    def __repr__(self) -> str:
        return f"Word.parse({self.text()!r})"


def reduce_word(letters: Iterable[int]) -> Word:
    """Project a raw monoid word to its freely reduced form."""
    return Word(free_reduce(letters))


def multiply(u: Sequence[int], v: Sequence[int]) -> Word:
    """Product of two reduced words; cancellation happens only at the seam."""
    i, j = len(u), 0
    while i > 0 and j < len(v) and u[i - 1] == -v[j]:
        i -= 1
        j += 1
    return Word(tuple(u[:i]) + tuple(v[j:]))


def invert(u: Sequence[int]) -> Word:
    return Word(-l for l in reversed(u))


def cyclic_reduce(u: Sequence[int]) -> Word:
    """Strip inverse first/last pairs; result is cyclically reduced."""
    letters = free_reduce(u)
    lo, hi = 0, len(letters)
    while hi - lo >= 2 and letters[lo] == -letters[hi - 1]:
        lo += 1
        hi -= 1
    return Word(letters[lo:hi])


def cyclic_rotations(u: Sequence[int]) -> Iterator[tuple[int, ...]]:
    t = tuple(u)
    for r in range(len(t)):
        yield t[r:] + t[:r]


def canonical_rotation(u: Sequence[int]) -> tuple[int, ...]:
    """Least rotation of a cyclically reduced word under the letter order."""
    t = tuple(u)
    if not t:
        return t
    return min(cyclic_rotations(t), key=lambda w: tuple(letter_key(l) for l in w))


def abelianize(u: Sequence[int], n: int) -> tuple[int, ...]:
    """Exponent-sum vector of a word in rank n."""
    exps = [0] * n
    for l in u:
        i = abs(l)
        if i > n:
            raise ValueError(f"letter {l} exceeds rank {n}")
        exps[i - 1] += 1 if l > 0 else -1
    return tuple(exps)


def exponent_gcd(vec: Sequence[int]) -> int:
    return math.gcd(*[abs(e) for e in vec]) if vec else 0


def sphere_size(n: int, k: int) -> int:
    """Number of reduced words of length exactly k in rank n (exact integer)."""
    if n < 1:
        raise ValueError(f"rank must be >= 1, got {n}")
    if k < 0:
        raise ValueError(f"length must be >= 0, got {k}")
    if k == 0:
        return 1
    return 2 * n * (2 * n - 1) ** (k - 1)


def ball_size(n: int, k: int) -> int:
    """Number of reduced words of length at most k in rank n."""
    return sum(sphere_size(n, j) for j in range(k + 1))


def enumerate_sphere(
    n: int,
    k: int,
    first_letter: int | None = None,
    cap: int | None = None,
) -> Iterator[Word]:
    """Yield every reduced word of length k once, in canonical order.

    Order: the first letter runs through a < A < b < B < ...; each later
    letter runs through the same order with the inverse of its predecessor
    skipped.  ``first_letter`` restricts to one branch, so consumers can
    partition a sphere by first letter.  If ``cap`` is given and the number
    of words to emit would exceed it, raises :class:`BudgetExceededError`
    before yielding anything.
    """
    letters = alphabet(n)
    if first_letter is not None and first_letter not in letters:
        raise ValueError(f"first letter {first_letter} not in rank-{n} alphabet")
    if cap is not None:
        total = sphere_size(n, k)
        if first_letter is not None and k >= 1:
            total //= 2 * n
        if total > cap:
            raise BudgetExceededError(
                f"sphere enumeration of {total} words exceeds cap {cap}"
            )
    if k == 0:
        if first_letter is None:
            yield Word()
        return
    succ = {p: tuple(l for l in letters if l != -p) for p in letters}
    firsts = letters if first_letter is None else (first_letter,)
    if k == 1:
        for f in firsts:
            yield Word((f,))
        return
    for f in firsts:
        word = [f] + [0] * (k - 1)
        idx = [0] * k
        for t in range(1, k):
            word[t] = succ[word[t - 1]][0]
            idx[t] = 0
        while True:
            yield Word(word)
            t = k - 1
            while t >= 1:
                choices = succ[word[t - 1]]
                if idx[t] + 1 < len(choices):
                    idx[t] += 1
                    word[t] = choices[idx[t]]
                    for s in range(t + 1, k):
                        word[s] = succ[word[s - 1]][0]
                        idx[s] = 0
                    break
                t -= 1
            else:
                break


def random_reduced_word(n: int, k: int, rng) -> Word:
    """Uniform sample from the radius-k sphere (non-backtracking letters)."""
    if k == 0:
        return Word()
    letters = alphabet(n)
    first = letters[rng.integers(0, 2 * n)]
    out = [first]
    succ = {p: tuple(l for l in letters if l != -p) for p in letters}
    for _ in range(k - 1):
        out.append(succ[out[-1]][rng.integers(0, 2 * n - 1)])
    return Word(out)
