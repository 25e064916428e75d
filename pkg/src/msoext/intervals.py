"""Finite sets of non-negative integers stored as sorted unions of intervals."""

from __future__ import annotations

import re
from typing import Iterable, Iterator, Tuple

from .errors import ParseError


class IntervalSet:
    """Immutable union of closed integer intervals.

    Intervals are kept sorted, disjoint and non-adjacent, so two sets are equal
    iff their interval tuples are equal.
    """

    __slots__ = ("intervals",)

    def __init__(self, intervals: Iterable[Tuple[int, int]] = ()):
        pieces = sorted((int(lo), int(hi)) for lo, hi in intervals if lo <= hi)
        merged = []
        for lo, hi in pieces:
            if merged and lo <= merged[-1][1] + 1:
                if hi > merged[-1][1]:
                    merged[-1] = (merged[-1][0], hi)
            else:
                merged.append((lo, hi))
        object.__setattr__(self, "intervals", tuple(merged))

    def __setattr__(self, name, value):
        raise AttributeError("IntervalSet is immutable")

    # constructors

    @classmethod
    def empty(cls):
        return cls(())

    @classmethod
    def interval(cls, lo, hi):
        return cls(((lo, hi),))

    @classmethod
    def point(cls, value):
        return cls(((value, value),))

    @classmethod
    def of(cls, values):
        return cls((v, v) for v in values)

    @classmethod
    def parse(cls, text, upper=None):
        """Parse ``0-3,5,7-`` style lists; an open end needs ``upper``."""
        text = text.strip()
        if text in ("", "{}", "empty"):
            return cls.empty()
        pieces = []
        for part in text.split(","):
            part = part.strip()
            m = re.fullmatch(r"(\d+)?\s*(-|\.\.)?\s*(\d+)?", part)
            if not m or (m.group(1) is None and m.group(3) is None):
                raise ParseError(f"bad interval {part!r}")
            lo, dash, hi = m.groups()
            if dash is None:
                pieces.append((int(lo), int(lo)))
                continue
            lo = 0 if lo is None else int(lo)
            if hi is None:
                if upper is None:
                    raise ParseError(f"open interval {part!r} needs an upper bound")
                hi = upper
            pieces.append((lo, int(hi)))
        return cls(pieces)

    # queries

    def __contains__(self, value):
        for lo, hi in self.intervals:
            if value < lo:
                return False
            if value <= hi:
                return True
        return False

    def __iter__(self) -> Iterator[int]:
        for lo, hi in self.intervals:
            yield from range(lo, hi + 1)

    def __len__(self):
        return sum(hi - lo + 1 for lo, hi in self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    def __eq__(self, other):
        return isinstance(other, IntervalSet) and self.intervals == other.intervals

    def __hash__(self):
        return hash(self.intervals)

    def __repr__(self):
        return f"IntervalSet({self})"

    def __str__(self):
        if not self.intervals:
            return "{}"
        return ",".join(str(lo) if lo == hi else f"{lo}-{hi}" for lo, hi in self.intervals)

    @property
    def is_interval(self):
        return len(self.intervals) <= 1

    def min(self):
        return self.intervals[0][0]

    def max(self):
        return self.intervals[-1][1]

    # algebra

    def intersect(self, other):
        out = []
        a, b = self.intervals, other.intervals
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    __and__ = intersect

    def union(self, other):
        return IntervalSet(self.intervals + other.intervals)

    __or__ = union

    def complement(self, lo, hi):
        """Complement within ``[lo, hi]``."""
        out = []
        cur = lo
        for a, b in self.intervals:
            if b < lo or a > hi:
                continue
            if a > cur:
                out.append((cur, a - 1))
            cur = max(cur, b + 1)
        if cur <= hi:
            out.append((cur, hi))
        return IntervalSet(out)

    def clip(self, lo, hi):
        return self.intersect(IntervalSet.interval(lo, hi))

    def shift(self, delta):
        return IntervalSet((lo + delta, hi + delta) for lo, hi in self.intervals)
