"""Partition dependency graph.

Nodes are the partitions of all stages in execution order. An edge
``q -> p`` means ``p`` reads a block last written by ``q``. Edges are found
by scanning stages backward (predecessors) or forward (successors) from a
partition and intersecting block ranges, masking blocks already claimed by
a closer stage. Sync and output nodes cover every block.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .plan import BlockRange, Partition, Stage, StageKind

Edge = tuple[Partition, Partition]


def intersects(a: BlockRange, b: BlockRange) -> bool:
    return max(a.first, b.first) <= min(a.last, b.last)


class _Uncovered:
    """Sorted disjoint block intervals still waiting for a dependency."""

    def __init__(self, r: BlockRange):
        self.spans = [(r.first, r.last)]

    def __bool__(self) -> bool:
        return bool(self.spans)

    def subtract(self, r: BlockRange) -> None:
        out = []
        for a, b in self.spans:
            if b < r.first or a > r.last:
                out.append((a, b))
                continue
            if a < r.first:
                out.append((a, r.first - 1))
            if b > r.last:
                out.append((r.last + 1, b))
        self.spans = out


@dataclass
class EdgeDelta:
    added: list[Edge] = field(default_factory=list)
    removed: list[Edge] = field(default_factory=list)
    predecessors: set[Partition] = field(default_factory=set)
    successors: set[Partition] = field(default_factory=set)


class PartitionGraph:
    def __init__(self, stages: Sequence[Stage] = ()):
        self.stages: list[Stage] = []
        self.succ: dict[Partition, set[Partition]] = {}
        self.pred: dict[Partition, set[Partition]] = {}
        self._pos: dict[Stage, int] = {}
        # per stage: partitions sorted by first block and their last blocks
        self._lookup: dict[Stage, tuple[list[Partition], list[int]]] = {}
        for s in stages:
            self._place(s, len(self.stages))
        for s in self.stages:
            for p in s.partitions:
                for q in self._scan(p, self._pos[s], -1):
                    self._add_edge(q, p)

    # bookkeeping ---------------------------------------------------------

    def _reindex(self) -> None:
        self._pos = {s: i for i, s in enumerate(self.stages)}

    def _place(self, stage: Stage, index: int) -> None:
        if stage in self._pos:
            raise ValueError(f"{stage.name} is already in the graph")
        self.stages.insert(index, stage)
        self._reindex()
        parts = sorted(stage.partitions, key=lambda p: p.blocks.first)
        self._lookup[stage] = (parts, [p.blocks.last for p in parts])
        for p in stage.partitions:
            self.succ[p] = set()
            self.pred[p] = set()

    def _add_edge(self, a: Partition, b: Partition) -> bool:
        if b in self.succ[a]:
            return False
        self.succ[a].add(b)
        self.pred[b].add(a)
        return True

    def _remove_edge(self, a: Partition, b: Partition) -> None:
        self.succ[a].discard(b)
        self.pred[b].discard(a)

    def _hits(self, stage: Stage, uncovered: _Uncovered) -> list[Partition]:
        parts, lasts = self._lookup[stage]
        found = []
        for a, b in uncovered.spans:
            k = bisect.bisect_left(lasts, a)
            while k < len(parts) and parts[k].blocks.first <= b:
                found.append(parts[k])
                k += 1
        return found

    def _scan(self, p: Partition, index: int, step: int) -> list[Partition]:
        """Closest partitions reading (step=+1) or writing (step=-1) p's blocks."""
        uncovered = _Uncovered(p.blocks)
        found: list[Partition] = []
        i = index + step
        while uncovered and 0 <= i < len(self.stages):
            hits = self._hits(self.stages[i], uncovered)
            for q in hits:
                uncovered.subtract(q.blocks)
            found.extend(hits)
            i += step
        return found

    # queries -------------------------------------------------------------

    def position(self, stage: Stage) -> int:
        return self._pos[stage]

    def __contains__(self, item) -> bool:
        if isinstance(item, Partition):
            return item in self.succ
        return item in self._pos

    def nodes(self) -> list[Partition]:
        return [p for s in self.stages for p in s.partitions]

    def edges(self) -> list[Edge]:
        return [(a, b) for a in self.nodes() for b in self.succ[a]]

    def edge_names(self) -> set[tuple[str, str]]:
        return {(a.name, b.name) for a, b in self.edges()}

    def predecessors_of(self, p: Partition) -> list[Partition]:
        """Fresh backward scan for ``p``; the exact read-from set."""
        return self._scan(p, self._pos[p.stage], -1)

    def topological_order(self, subset: Iterable[Partition] | None = None) -> list[Partition]:
        """Kahn order over ``subset`` (default: all nodes); raises on a cycle."""
        if subset is None:
            nodes = self.nodes()
        else:
            wanted = set(subset)
            nodes = [p for p in self.nodes() if p in wanted]
        members = set(nodes)
        indeg = {p: sum(1 for q in self.pred[p] if q in members) for p in nodes}
        ready = [p for p in nodes if indeg[p] == 0]
        order = []
        while ready:
            p = ready.pop()
            order.append(p)
            for s in self.succ[p]:
                if s in members:
                    indeg[s] -= 1
                    if indeg[s] == 0:
                        ready.append(s)
        if len(order) != len(nodes):
            raise RuntimeError("partition graph has a cycle")
        return order

    def reachable(self, sources: Iterable[Partition]) -> set[Partition]:
        seen: set[Partition] = set()
        stack = [p for p in sources if p in self.succ]
        while stack:
            p = stack.pop()
            if p in seen:
                continue
            seen.add(p)
            stack.extend(self.succ[p] - seen)
        return seen

    # modifiers -----------------------------------------------------------

    def connect_stage(self, stage: Stage, index: int) -> EdgeDelta:
        """Insert ``stage`` at execution position ``index`` and wire its partitions.

        Direct edges between a discovered predecessor and successor are
        dropped when the successor no longer reads any block from that
        predecessor; the path through the new stage carries the dependency.
        """
        self._place(stage, index)
        delta = EdgeDelta()
        for p in stage.partitions:
            for q in self._scan(p, index, -1):
                self._add_edge(q, p)
                delta.added.append((q, p))
                delta.predecessors.add(q)
            for s in self._scan(p, index, +1):
                self._add_edge(p, s)
                delta.added.append((p, s))
                delta.successors.add(s)
        for s in delta.successors:
            stale = (self.pred[s] & delta.predecessors) - set(self.predecessors_of(s))
            for q in stale:
                self._remove_edge(q, s)
                delta.removed.append((q, s))
        return delta

    def disconnect_stage(self, stage: Stage) -> EdgeDelta:
        """Remove ``stage``; its former successors are rewired to the blocks'
        new writers (always among the removed partitions' predecessors)."""
        delta = EdgeDelta()
        removed = set(stage.partitions)
        for p in stage.partitions:
            for q in self.pred.pop(p):
                self.succ[q].discard(p)
                delta.removed.append((q, p))
                delta.predecessors.add(q)
            for s in self.succ.pop(p):
                self.pred[s].discard(p)
                delta.removed.append((p, s))
                delta.successors.add(s)
        del self.stages[self._pos[stage]]
        del self._lookup[stage]
        self._reindex()
        delta.predecessors -= removed
        delta.successors -= removed
        for s in delta.successors:
            for q in self.predecessors_of(s):
                if self._add_edge(q, s):
                    delta.added.append((q, s))
        return delta

    def to_dot(self) -> str:
        return dump_dot(self)


def build_full(stages: Sequence[Stage]) -> PartitionGraph:
    """Graph of ``stages`` in execution order; an output stage is expected last."""
    return PartitionGraph(stages)


def _quote(s: str) -> str:
    return '"' + s.replace('"', r'\"') + '"'


def dump_dot(graph: PartitionGraph) -> str:
    nodes = graph.nodes()
    if all(p.stage.kind is StageKind.OUTPUT for p in nodes):
        return "digraph qtask { output; }\n"
    lines = ["digraph qtask {"]
    for p in nodes:
        kind = p.stage.kind
        if kind in (StageKind.SYNC, StageKind.OUTPUT):
            lines.append(f"  {_quote(p.name)} [label={_quote(p.name)}, shape=box];")
        else:
            lines.append(f"  {_quote(p.name)} [label={_quote(f'{p.name} {p.blocks}')}];")
    for a, b in sorted(graph.edge_names()):
        lines.append(f"  {_quote(a)} -> {_quote(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
