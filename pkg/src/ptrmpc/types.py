"""Type descriptors shared by the heap, pointer operations, and the language."""

from __future__ import annotations

from dataclasses import dataclass, field


class Type:
    size = 1  # heap cells occupied

    @property
    def is_private(self) -> bool:
        return False


@dataclass(frozen=True)
class IntType(Type):
    bits: int = 32
    private: bool = True

    @property
    def is_private(self) -> bool:
        return self.private

    def __str__(self) -> str:
        return f"{'private' if self.private else 'public'} int<{self.bits}>"


@dataclass(frozen=True)
class VoidType(Type):
    private: bool = False

    @property
    def is_private(self) -> bool:
        return self.private

    def __str__(self) -> str:
        return f"{'private' if self.private else 'public'} void"


@dataclass(eq=False)
class StructType(Type):
    name: str
    fields: list[tuple[str, Type]] = field(default_factory=list)
    defined: bool = False

    def __eq__(self, other: object) -> bool:
        return isinstance(other, StructType) and other.name == self.name

    def __hash__(self) -> int:
        return hash(("struct", self.name))

    @property
    def size(self) -> int:  # type: ignore[override]
        return sum(t.size for _, t in self.fields) or 1

    def field(self, name: str) -> tuple[int, Type]:
        off = 0
        for fname, ftype in self.fields:
            if fname == name:
                return off, ftype
            off += ftype.size
        raise KeyError(name)

    def leaf_cells(self) -> list[Type]:
        out: list[Type] = []
        for _, ftype in self.fields:
            if isinstance(ftype, StructType):
                out.extend(ftype.leaf_cells())
            elif isinstance(ftype, ArrayType):
                out.extend(ftype.leaf_cells())
            else:
                out.append(ftype)
        return out

    @property
    def is_private(self) -> bool:
        return all_fields_private(self)

    def __str__(self) -> str:
        return f"struct {self.name}"


@dataclass(frozen=True)
class PtrType(Type):
    target: Type

    @property
    def is_private(self) -> bool:
        """Pointer to private data (its locations may become private)."""
        return points_to_private(self.target)

    @property
    def indirection(self) -> int:
        if isinstance(self.target, PtrType):
            return self.target.indirection + 1
        return 1

    @property
    def elem_size(self) -> int:
        return self.target.size

    def __str__(self) -> str:
        return f"{self.target}*"


@dataclass(frozen=True)
class ArrayType(Type):
    elem: Type
    length: int

    @property
    def size(self) -> int:  # type: ignore[override]
        return self.elem.size * self.length

    @property
    def is_private(self) -> bool:
        return self.elem.is_private

    def leaf_cells(self) -> list[Type]:
        if isinstance(self.elem, (StructType, ArrayType)):
            return self.elem.leaf_cells() * self.length
        return [self.elem] * self.length

    def __str__(self) -> str:
        return f"{self.elem}[{self.length}]"


@dataclass(frozen=True)
class FuncType(Type):
    name: str
    private: bool = True

    @property
    def is_private(self) -> bool:
        # a function pointer may take a private location set
        return self.private


def all_fields_private(struct: StructType, _seen: frozenset = frozenset()) -> bool:
    """Every field private, recursing into nested structs; cycles are skipped."""
    if struct.name in _seen:
        return True
    seen = _seen | {struct.name}
    for _, ftype in struct.fields:
        t = ftype
        while isinstance(t, ArrayType):
            t = t.elem
        if isinstance(t, StructType):
            if not all_fields_private(t, seen):
                return False
        elif isinstance(t, PtrType):
            if not _ptr_private(t, seen):
                return False
        elif not t.is_private:
            return False
    return True


def _ptr_private(ptr: PtrType, seen: frozenset) -> bool:
    t = ptr.target
    if isinstance(t, StructType):
        return all_fields_private(t, seen)
    if isinstance(t, PtrType):
        return _ptr_private(t, seen)
    return t.is_private


def points_to_private(target: Type) -> bool:
    if isinstance(target, StructType):
        return all_fields_private(target)
    if isinstance(target, PtrType):
        return points_to_private(target.target)
    return target.is_private


def cell_types(t: Type) -> list[Type]:
    """Scalar type of each heap cell in an object of type t."""
    if isinstance(t, (StructType, ArrayType)):
        return t.leaf_cells()
    return [t]
