"""Copy-on-write amplitude block storage.

Every data stage owns a :class:`BlockStore`. A block slot either holds an
owned array of ``block_size`` amplitudes or is empty, meaning it shares the
same-index block of the predecessor store. Following ``prev`` links ends at
the initial state ``|0...0>``.
"""
from __future__ import annotations

import numpy as np


def initial_block(index: int, block_size: int) -> np.ndarray:
    out = np.zeros(block_size, dtype=np.complex128)
    if index == 0:
        out[0] = 1.0
    return out


class BlockStore:
    def __init__(self, nblocks: int, block_size: int, owner: str = ""):
        self.nblocks = nblocks
        self.block_size = block_size
        self.owner = owner
        self.prev: BlockStore | None = None
        self.blocks: list[np.ndarray | None] = [None] * nblocks
        # writes of an in-flight update; promoted by commit(), dropped by abort()
        self.pending: dict[int, np.ndarray] = {}

    def __repr__(self) -> str:
        return f"<BlockStore {self.owner} owned={sorted(self.materialized())}>"

    def is_materialized(self, index: int) -> bool:
        return self.blocks[index] is not None

    def materialized(self) -> set[int]:
        return {b for b, blk in enumerate(self.blocks) if blk is not None}

    def source(self, index: int, staged: bool = True) -> BlockStore | None:
        """Store that physically holds block ``index`` (None: initial state)."""
        store = self
        while store is not None:
            if staged and index in store.pending:
                return store
            if store.blocks[index] is not None:
                return store
            store = store.prev
        return None

    def block(self, index: int, staged: bool = True) -> np.ndarray:
        """Resolve block ``index`` through the COW chain. Do not mutate the result."""
        store = self
        while store is not None:
            if staged:
                blk = store.pending.get(index)
                if blk is not None:
                    return blk
            blk = store.blocks[index]
            if blk is not None:
                return blk
            store = store.prev
        return initial_block(index, self.block_size)

    def read(self, first: int, last: int, staged: bool = True) -> np.ndarray:
        """Copy of the amplitudes held by blocks ``first..last`` inclusive."""
        return np.concatenate([self.block(b, staged) for b in range(first, last + 1)])

    def stage_write(self, first: int, data: np.ndarray) -> None:
        bs = self.block_size
        for k in range(len(data) // bs):
            self.pending[first + k] = data[k * bs:(k + 1) * bs]

    def commit(self) -> int:
        written = len(self.pending)
        for b, blk in self.pending.items():
            self.blocks[b] = blk
        self.pending.clear()
        return written

    def abort(self) -> None:
        self.pending.clear()

    def release(self) -> None:
        self.blocks = [None] * self.nblocks
        self.pending.clear()
        self.prev = None


def read_chain(head: BlockStore | None, lo: int, hi: int, block_size: int,
               staged: bool = False) -> np.ndarray:
    """Amplitudes ``lo..hi`` (inclusive) as seen from ``head`` without materializing."""
    if head is None:
        out = np.zeros(hi - lo + 1, dtype=np.complex128)
        if lo == 0:
            out[0] = 1.0
        return out
    first, last = lo // block_size, hi // block_size
    data = head.read(first, last, staged)
    off = first * block_size
    return data[lo - off:hi - off + 1]
