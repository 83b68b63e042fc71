"""Deadline placement under a per-period change budget."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

LATEST = "latest"
EARLIEST = "earliest"


@dataclass(frozen=True)
class ChangeRequest:
    station: int
    to_type: int
    deadline: int          # k*, 1-based
    direction: str = LATEST


def schedule_change(counts: Sequence[int], request: ChangeRequest, N: int, horizon: int | None = None) -> int | None:
    """Pick the placement period for ``request`` without committing it.

    ``counts[h - 1]`` is the number of changes already at period h. Latest
    direction scans down from the deadline; earliest scans up over 1..K.
    Returns None when every candidate period is full.
    """
    K = horizon if horizon is not None else len(counts)
    if request.direction == LATEST:
        for h in range(min(request.deadline, K), 0, -1):
            if counts[h - 1] < N:
                return h
        return None
    if request.direction == EARLIEST:
        for h in range(1, K + 1):
            if counts[h - 1] < N:
                return h
        return None
    raise ValueError(f"unknown direction {request.direction!r}")


def check_necessary(deadlines: Sequence[int], N: int, K: int) -> tuple[bool, int | None]:
    """Prefix test: at most k*N changes may be due by period k, for every k.

    Returns (feasible, first violated period).
    """
    due = [0] * (K + 1)
    for d in deadlines:
        if not 1 <= d <= K:
            raise ValueError(f"deadline {d} outside 1..{K}")
        due[d] += 1
    total = 0
    for k in range(1, K + 1):
        total += due[k]
        if total > k * N:
            return False, k
    return True, None


def greedy_schedule(deadlines: Sequence[int], N: int, K: int, direction: str = LATEST) -> list[int] | None:
    """Place requests in nondecreasing-deadline order at their latest free slot.

    Returns placements aligned with ``deadlines`` or None if some request finds
    no slot. ``direction=EARLIEST`` exists as a deliberately wrong variant for
    certification tests.
    """
    counts = [0] * K
    order = sorted(range(len(deadlines)), key=lambda i: (deadlines[i], i))
    out = [0] * len(deadlines)
    for i in order:
        if direction == EARLIEST:
            h = None
            for cand in range(1, deadlines[i] + 1):
                if counts[cand - 1] < N:
                    h = cand
                    break
        else:
            h = schedule_change(counts, ChangeRequest(-1, -1, deadlines[i], LATEST), N, K)
        if h is None:
            return None
        counts[h - 1] += 1
        out[i] = h
    return out


def lateness(deadlines: Sequence[int], placements: Sequence[int]) -> int:
    return sum(d - h for d, h in zip(deadlines, placements))
