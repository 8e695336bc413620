"""Exact moments of centred Gaussian vectors by enumerating pairings.

Indices are 0-based positions into the covariance matrix ``R``.  Every factor
of a product is a *slot*; a squared factor ``(X_i^2 - R_ii)`` contributes two
slots that share a group, and a pairing is *proper* when no pair joins two
slots of the same group.  Slots may point at the same matrix index, so
``E[(X_1^2 - R_11)^2] = 2 R_11^2`` comes out right.

Products are accumulated with ``math.fsum``.
"""
from __future__ import annotations

import itertools
import math
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "MAX_SLOTS",
    "pairings",
    "isserlis_moment",
    "proper_pairing_moment",
    "exp_tilted_proper_moment",
]

MAX_SLOTS = 16


def _as_cov(R) -> np.ndarray:
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if R.shape[0] != R.shape[1]:
        raise ValueError("covariance must be square")
    if not np.allclose(R, R.T, rtol=0, atol=1e-12 * max(1.0, np.abs(R).max())):
        raise ValueError("covariance must be symmetric")
    return R


def _check_slots(R: np.ndarray, idx: Sequence[int]) -> None:
    if len(idx) > MAX_SLOTS:
        raise ValueError(f"moment of order {len(idx)} exceeds the guard of {MAX_SLOTS}")
    for i in idx:
        if not 0 <= i < R.shape[0]:
            raise IndexError(f"index {i} out of range for dimension {R.shape[0]}")


def pairings(n: int, groups: Sequence[int] | None = None) -> Iterator[list[tuple[int, int]]]:
    """All pairings of slots ``0..n-1``, matching the smallest unpaired slot first.

    With ``groups`` given, only proper pairings are produced: slots ``a, b``
    with ``groups[a] == groups[b]`` are never paired.
    """
    if n % 2:
        return

    def rec(free: list[int]):
        if not free:
            yield []
            return
        a, rest = free[0], free[1:]
        for j, b in enumerate(rest):
            if groups is not None and groups[a] == groups[b]:
                continue
            for tail in rec(rest[:j] + rest[j + 1:]):
                yield [(a, b)] + tail

    yield from rec(list(range(n)))


def _pairing_sum(R: np.ndarray, idx: Sequence[int], groups=None) -> float:
    terms = (
        math.prod(R[idx[a], idx[b]] for a, b in p)
        for p in pairings(len(idx), groups)
    )
    return math.fsum(terms)


def isserlis_moment(R, indices: Sequence[int]) -> float:
    """E[X_{s1} ... X_{sm}] for centred X with covariance R (0 for odd m)."""
    R = _as_cov(R)
    idx = list(indices)
    _check_slots(R, idx)
    if len(idx) % 2:
        return 0.0
    return _pairing_sum(R, idx)


def _slots(squared: Sequence[int], single: Sequence[int]):
    idx, groups = [], []
    for g, i in enumerate(squared):
        idx += [i, i]
        groups += [g, g]
    base = len(squared)
    for g, i in enumerate(single):
        idx.append(i)
        groups.append(base + g)
    return idx, groups


def proper_pairing_moment(R, squared_indices: Sequence[int], single_indices: Sequence[int] = ()) -> float:
    """E[prod_i (X_i^2 - R_ii) * prod_j X_j] as a sum over proper pairings."""
    R = _as_cov(R)
    idx, groups = _slots(list(squared_indices), list(single_indices))
    _check_slots(R, idx)
    if len(single_indices) % 2:
        return 0.0
    return _pairing_sum(R, idx, groups)


def exp_tilted_proper_moment(R, squared_indices: Sequence[int], tilt_index: int = 0) -> float:
    """E[exp(X_0) prod_i (X_i^2 - R_ii)] via the three-way partition expansion.

    Every squared factor is assigned to one of three roles: kept squared
    (A1), contributing one linear slot weighted by 2 R_0i (A2, even count
    only), or replaced by R_0i^2 (A3).  The proper-pairing moment of the
    resulting slot multiset is weighted accordingly and the total is scaled
    by exp(R_00 / 2).
    """
    R = _as_cov(R)
    sq = list(squared_indices)
    _check_slots(R, [tilt_index] + sq + sq)
    r0 = R[tilt_index]
    terms = []
    for roles in itertools.product((1, 2, 3), repeat=len(sq)):
        a1 = [i for i, r in zip(sq, roles) if r == 1]
        a2 = [i for i, r in zip(sq, roles) if r == 2]
        a3 = [i for i, r in zip(sq, roles) if r == 3]
        if len(a2) % 2:
            continue
        weight = 2.0 ** len(a2) * math.prod(r0[i] for i in a2) * math.prod(r0[i] ** 2 for i in a3)
        if weight == 0.0:
            continue
        idx, groups = _slots(a1, a2)
        terms.append(weight * _pairing_sum(R, idx, groups))
    return math.exp(0.5 * R[tilt_index, tilt_index]) * math.fsum(terms)
