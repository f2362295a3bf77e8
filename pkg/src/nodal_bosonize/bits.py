"""Bit-word primitives for fermionic occupation states.

A many-fermion basis state is encoded as a Python integer whose bit ``m``
holds the occupation of mode ``m``.  Creation/annihilation operators follow
the Jordan-Wigner convention: acting on mode ``m`` picks up the sign
``(-1)**(number of occupied modes below m)``.
"""
from __future__ import annotations

from typing import Optional, Tuple


def parity_sign(word: int, mode: int) -> int:
    """Sign from commuting an operator past all occupied modes below `mode`."""
    return -1 if (word & ((1 << mode) - 1)).bit_count() & 1 else 1


def annihilate(word: int, mode: int) -> Optional[Tuple[int, int]]:
    """Apply c_mode.  Returns (new_word, sign), or None if the mode is empty."""
    bit = 1 << mode
    if not word & bit:
        return None
    return word ^ bit, parity_sign(word, mode)


def create(word: int, mode: int) -> Optional[Tuple[int, int]]:
    """Apply c†_mode.  Returns (new_word, sign), or None if already occupied."""
    bit = 1 << mode
    if word & bit:
        return None
    return word ^ bit, parity_sign(word, mode)


def hop(word: int, dst: int, src: int) -> Optional[Tuple[int, int]]:
    """Apply c†_dst c_src.  Returns (new_word, sign), or None if it vanishes.

    dst == src reduces to the number operator n_src (sign +1 when occupied).
    """
    removed = annihilate(word, src)
    if removed is None:
        return None
    w1, s1 = removed
    added = create(w1, dst)
    if added is None:
        return None
    w2, s2 = added
    return w2, s1 * s2


def popcount_words(n_modes: int, n_occupied: int) -> list[int]:
    """All words of `n_modes` bits with exactly `n_occupied` bits set, ascending.

    Uses Gosper's hack so the enumeration order is the lexicographic order of
    the bit words themselves.
    """
    if not 0 <= n_occupied <= n_modes:
        raise ValueError(
            f"occupation {n_occupied} out of range for {n_modes} modes"
        )
    if n_occupied == 0:
        return [0]
    limit = 1 << n_modes
    w = (1 << n_occupied) - 1
    out = []
    while w < limit:
        out.append(w)
        c = w & -w
        r = w + c
        w = (((r ^ w) >> 2) // c) | r
    return out


def occupations(word: int, n_modes: int) -> list[int]:
    """Occupation numbers (0/1) of the first `n_modes` modes."""
    return [(word >> m) & 1 for m in range(n_modes)]
