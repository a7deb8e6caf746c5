"""Simulated private memory with an allocation registry.

Cells are addressed by positive integers; 0 is the null sentinel and is never
part of a block.  Allocation is a bump allocator without reuse, so the same
program produces the same addresses at every party and in every run.

A cell holds a SharedValue (private scalar), a PrivPtr (pointer to private
data), or a plain int (public scalar or public pointer).
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Callable, Iterator

from .types import Type, cell_types

NULL = 0


class HeapError(RuntimeError):
    """Memory violation: null dereference, double free, bad block."""


@dataclass
class Block:
    base: int
    length: int
    elem_type: Type
    live: bool = True
    kind: str = "heap"  # "heap" (pmalloc), "static" (declared objects), "code"

    @property
    def elem_size(self) -> int:
        return self.elem_type.size

    @property
    def end(self) -> int:
        return self.base + self.length * self.elem_size


class Heap:
    def __init__(self, init_cell: Callable[[Type], object] | None = None):
        self.cells: dict[int, object] = {}
        self.blocks: dict[int, Block] = {}
        self._bases: list[int] = []
        self._next = 1
        self._init_cell = init_cell or (lambda t: 0)
        self._journals: list[dict[int, object]] = []
        self.released: set[int] = set()

    # -- allocation -------------------------------------------------------
    def alloc(self, count: int, elem_type: Type, kind: str = "heap") -> int:
        if count < 1:
            raise HeapError("allocation count must be >= 1")
        base = self._next
        blk = Block(base, count, elem_type, kind=kind)
        kinds = cell_types(elem_type)
        addr = base
        for _ in range(count):
            for ct in kinds:
                self.cells[addr] = self._init_cell(ct)
                addr += 1
        self._next = addr
        self.blocks[base] = blk
        self._bases.append(base)  # bump allocation keeps this sorted
        return base

    def release(self, base: int, kind: str = "heap") -> Block:
        """Remove a block; kind guards against freeing static or code storage."""
        blk = self.blocks.get(base)
        if blk is None:
            if base in self.released:
                raise HeapError(f"double free of address {base}")
            raise HeapError(f"free of non-block address {base}")
        if blk.kind != kind:
            raise HeapError(f"free of non-{kind} address {base}")
        blk.live = False
        del self.blocks[base]
        self._bases.pop(bisect.bisect_left(self._bases, base))
        for a in range(blk.base, blk.end):
            self.cells.pop(a, None)
        self.released.add(base)
        return blk

    def find_block(self, addr: int) -> tuple[Block, int] | None:
        """Live block containing addr at an element boundary, with its index."""
        i = bisect.bisect_right(self._bases, addr) - 1
        if i < 0 or addr <= NULL:
            return None
        blk = self.blocks[self._bases[i]]
        if addr >= blk.end:
            return None
        off, rem = divmod(addr - blk.base, blk.elem_size)
        if rem:
            return None
        return blk, off

    def enclosing(self, addr: int) -> Block | None:
        """Live block containing addr at any offset."""
        i = bisect.bisect_right(self._bases, addr) - 1
        if i < 0:
            return None
        blk = self.blocks[self._bases[i]]
        return blk if addr < blk.end else None

    def live_blocks(self) -> list[Block]:
        return [self.blocks[b] for b in self._bases]

    # -- cell access ------------------------------------------------------
    def is_valid(self, addr: int) -> bool:
        return addr in self.cells

    def read(self, addr: int) -> object:
        try:
            return self.cells[addr]
        except KeyError:
            if addr == NULL:
                raise HeapError("null dereference") from None
            raise HeapError(f"access to unallocated address {addr}") from None

    def write(self, addr: int, value: object) -> None:
        if addr not in self.cells:
            if addr == NULL:
                raise HeapError("null dereference")
            raise HeapError(f"access to unallocated address {addr}")
        if self._journals:
            j = self._journals[-1]
            if addr not in j:
                j[addr] = self.cells[addr]
        self.cells[addr] = value

    # -- journaling for private branches ----------------------------------
    def push_journal(self) -> None:
        self._journals.append({})

    def pop_journal(self) -> dict[int, object]:
        """Drop the innermost journal; returns {addr: value before the scope}.

        Entries are merged into the enclosing journal so outer scopes still
        see every cell first touched inside.
        """
        j = self._journals.pop()
        if self._journals:
            outer = self._journals[-1]
            for a, v in j.items():
                outer.setdefault(a, v)
        return j

    @property
    def journaling(self) -> bool:
        return bool(self._journals)

    def raw_set(self, addr: int, value: object) -> None:
        """Write without journaling (used when restoring or merging)."""
        self.cells[addr] = value

    def pointers(self) -> Iterator[tuple[int, object]]:
        from .privptr import PrivPtr
        for a, v in self.cells.items():
            if isinstance(v, PrivPtr):
                yield a, v
