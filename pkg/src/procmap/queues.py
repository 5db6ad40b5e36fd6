"""Max-gain priority queue with last-in-first-out tie-breaking.

Implemented as a binary heap with lazy invalidation: pushing an already
queued node supersedes its old entry.  Among equal gains the most recently
pushed node pops first, matching the discipline of a bucket queue whose
buckets are stacks.
"""

from __future__ import annotations

import heapq


class GainQueue:
    def __init__(self):
        self._heap: list[tuple[int, int, int]] = []  # (-gain, -seq, node)
        self._seq = 0
        self._live: dict[int, tuple[int, int]] = {}  # node -> (gain, seq)

    def push(self, node: int, gain: int) -> None:
        """Insert `node`, or update its gain if already queued."""
        self._seq += 1
        self._live[node] = (gain, self._seq)
        heapq.heappush(self._heap, (-gain, -self._seq, node))

    def discard(self, node: int) -> None:
        self._live.pop(node, None)

    def __contains__(self, node: int) -> bool:
        return node in self._live

    def __len__(self) -> int:
        return len(self._live)

    def _prune(self) -> None:
        heap = self._heap
        live = self._live
        while heap:
            neg_gain, neg_seq, node = heap[0]
            if live.get(node) == (-neg_gain, -neg_seq):
                return
            heapq.heappop(heap)

    def peek(self) -> tuple[int, int] | None:
        """(node, gain) with the largest gain, or None when empty."""
        self._prune()
        if not self._heap:
            return None
        neg_gain, _, node = self._heap[0]
        return node, -neg_gain

    def pop(self) -> tuple[int, int]:
        self._prune()
        neg_gain, _, node = heapq.heappop(self._heap)
        del self._live[node]
        return node, -neg_gain
