"""Fenwick (binary indexed) tree over float weights for O(log n) weighted
particle selection with dynamic rate updates."""
from __future__ import annotations

import numpy as np


class FenwickTree:
    """Prefix-sum tree over a growable array of non-negative weights.

    ``find(v)`` returns the smallest index whose cumulative weight exceeds
    ``v``, which turns a uniform draw on [0, total) into a weighted pick.
    """

    def __init__(self, capacity: int = 1024):
        self._cap = max(int(capacity), 1)
        self._tree = np.zeros(self._cap + 1)
        self._weights = np.zeros(self._cap)
        self.size = 0

    def _grow(self, need: int):
        new_cap = self._cap
        while new_cap < need:
            new_cap *= 2
        weights = np.zeros(new_cap)
        weights[: self.size] = self._weights[: self.size]
        self._cap = new_cap
        self._weights = weights
        self._rebuild()

    def _rebuild(self):
        self._tree = np.zeros(self._cap + 1)
        for i in range(self.size):
            w = self._weights[i]
            if w != 0.0:
                j = i + 1
                while j <= self._cap:
                    self._tree[j] += w
                    j += j & (-j)

    def append(self, weight: float) -> int:
        if self.size == self._cap:
            self._grow(self.size + 1)
        idx = self.size
        self.size += 1
        self.set(idx, weight)
        return idx

    def set(self, index: int, weight: float):
        if weight < 0:
            raise ValueError("weights must be non-negative")
        delta = weight - self._weights[index]
        if delta == 0.0:
            return
        self._weights[index] = weight
        j = index + 1
        while j <= self._cap:
            self._tree[j] += delta
            j += j & (-j)

    def get(self, index: int) -> float:
        return float(self._weights[index])

    def total(self) -> float:
        j = self.size
        s = 0.0
        while j > 0:
            s += self._tree[j]
            j -= j & (-j)
        return s

    def find(self, value: float) -> int:
        """Smallest index i with cumulative weight through i exceeding value."""
        idx = 0
        half = 1
        while half * 2 <= self._cap:
            half *= 2
        rest = value
        while half > 0:
            nxt = idx + half
            if nxt <= self._cap and self._tree[nxt] <= rest:
                rest -= self._tree[nxt]
                idx = nxt
            half //= 2
        # idx counts entries with cumulative weight <= value; clamp the
        # floating-point edge where value lands at or past the total
        return min(idx, self.size - 1)

    def pop_last(self):
        """Drop the last slot (its weight must already be zeroed)."""
        self.set(self.size - 1, 0.0)
        self.size -= 1

    def refresh(self, weights: np.ndarray):
        """Replace all weights from scratch (bounds floating-point drift)."""
        n = len(weights)
        if n > self._cap:
            self._grow(n)
        self._weights[:n] = weights
        self._weights[n:] = 0.0
        self.size = n
        self._rebuild()
