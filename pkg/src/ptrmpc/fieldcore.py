"""Prime-field arithmetic and field-size selection."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

DEFAULT_KAPPA = 48

# Deterministic Miller-Rabin witnesses; exact for n < 3.3e24 and used as a
# strong probable-prime test above that.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


class FieldError(ArithmeticError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in _MR_WITNESSES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=None)
def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    if n <= 2:
        return 2
    c = n | 1 if n % 2 == 0 else n
    while not is_prime(c):
        c += 2
    return c


@dataclass(frozen=True)
class FieldParams:
    data_bitlen: int
    kappa: int
    field_bitlen: int
    prime: int


def select_field_params(max_data_bitlen: int, uses_comparison: bool,
                        kappa: int = DEFAULT_KAPPA) -> FieldParams:
    if max_data_bitlen < 1:
        raise ValueError("max_data_bitlen must be >= 1")
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    bits = max_data_bitlen + 1
    if uses_comparison:
        bits += kappa
    return FieldParams(max_data_bitlen, kappa, bits, next_prime(1 << bits))


class Field:
    """Arithmetic modulo a prime; values are plain ints in [0, prime)."""

    def __init__(self, prime: int):
        if not is_prime(prime):
            raise FieldError(f"{prime} is not prime")
        self.p = prime
        self.bytes_per_element = (prime.bit_length() + 7) // 8

    def __repr__(self) -> str:
        return f"Field({self.p})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Field) and other.p == self.p

    def __hash__(self) -> int:
        return hash(self.p)

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(value % self.p, self)

    def reduce(self, value: int) -> int:
        return value % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise FieldError("inverse of zero")
        return pow(a, -1, self.p)

    def signed(self, value: int) -> int:
        """Centered lift: residues >= p/2 read as negative."""
        value %= self.p
        return value - self.p if value > self.p // 2 else value

    def encode(self, value: int) -> int:
        return value % self.p


class FieldElement:
    __slots__ = ("value", "field")

    def __init__(self, value: int, field: Field):
        self.value = value % field.p
        self.field = field

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldError("mixing elements of different fields")
            return other.value
        if isinstance(other, int):
            return other
        return NotImplemented

    def _new(self, v: int) -> "FieldElement":
        return FieldElement(v, self.field)

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._new(self.value + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._new(self.value - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._new(o - self.value)

    def __mul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._new(self.value * o)

    __rmul__ = __mul__

    def __neg__(self):
        return self._new(-self.value)

    def inv(self) -> "FieldElement":
        return self._new(self.field.inv(self.value))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * self.field.inv(o)

    def __eq__(self, other) -> bool:
        if isinstance(other, FieldElement):
            return self.field == other.field and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.field.p
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.value, self.field.p))

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.field.p})"


def fe_arith(a: FieldElement, b: FieldElement | None, op: str) -> FieldElement:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "neg":
        return -a
    if op == "inv":
        return a.inv()
    raise ValueError(f"unknown field op {op!r}")
