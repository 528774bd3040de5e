"""Dynkin form of the Baker-Campbell-Hausdorff series, truncated at a given step.

exp(X) exp(Y) = exp(P(X, Y)) with

    P(X, Y) = sum_{p=1}^{s} (-1)^{p+1} / p
              sum [X^{k_1}, Y^{l_1}, ..., X^{k_p}, Y^{l_p}]
                  / (k_1! ... k_p! l_1! ... l_p! * sum_i (k_i + l_i))

over compositions with k_i + l_i >= 1 and sum_i (k_i + l_i) <= s, where
[Z_1, ..., Z_{m+1}] = ad(Z_1) ... ad(Z_m) Z_{m+1} (right-nested).
"""

from fractions import Fraction
from functools import lru_cache
from itertools import product as cartesian
from math import factorial
from typing import Dict, Iterator, List, Tuple

# Letters of a bracket word: 0 stands for X, 1 for Y.
Word = Tuple[int, ...]

X_LETTER = 0
Y_LETTER = 1


def _blocks(max_total: int) -> List[Tuple[int, int]]:
    return [(k, l) for k in range(max_total + 1) for l in range(max_total + 1) if 1 <= k + l <= max_total]


def _compositions(p: int, step: int) -> Iterator[Tuple[Tuple[int, int], ...]]:
    """All p-tuples of (k_i, l_i) blocks with total degree at most step."""
    for blocks in cartesian(_blocks(step), repeat=p):
        if sum(k + l for k, l in blocks) <= step:
            yield blocks


def _word(blocks: Tuple[Tuple[int, int], ...]) -> Word:
    letters: List[int] = []
    for k, l in blocks:
        letters.extend([X_LETTER] * k)
        letters.extend([Y_LETTER] * l)
    return tuple(letters)


def _vanishes(word: Word) -> bool:
    # ad(Z) Z = 0: a trailing letter repeated kills the whole bracket
    return len(word) >= 2 and word[-1] == word[-2]


@lru_cache(maxsize=None)
def dynkin_terms(step: int) -> Tuple[Tuple[Word, Fraction], ...]:
    """Nonvanishing bracket words of the series up to degree step.

    Coefficients of identical words arising from different compositions are
    merged; words whose merged coefficient is zero are dropped.

    Args:
        step: Nilpotency step s (brackets longer than s vanish)

    Returns:
        Tuple of (word, exact rational coefficient), shortest words first
    """
    merged: Dict[Word, Fraction] = {}
    for p in range(1, step + 1):
        sign = Fraction((-1) ** (p + 1), p)
        for blocks in _compositions(p, step):
            word = _word(blocks)
            if _vanishes(word):
                continue
            denominator = sum(k + l for k, l in blocks)
            for k, l in blocks:
                denominator *= factorial(k) * factorial(l)
            merged[word] = merged.get(word, Fraction(0)) + sign / denominator

    terms = [(word, coef) for word, coef in merged.items() if coef != 0]
    terms.sort(key=lambda item: (len(item[0]), item[0]))
    return tuple(terms)
