"""Arithmetic in the BN254 scalar field.

``FieldElement`` is the value type used across the package.  Hot loops
(permutations, witness evaluation) work on plain canonical integers and only
wrap results at API boundaries; both representations agree on the reduced
residue, which is the observable contract.
"""

from __future__ import annotations

import builtins
from math import gcd
from typing import Union

P = 21888242871839275222246405745257275088548364400416034343698204186575808495617
MODULUS_ID = "bn254-fr"
BYTE_LEN = 32

_MODULI = {MODULUS_ID: P}
_HEXDIGITS = frozenset("0123456789abcdefABCDEF")

# Addition chains for the S-box exponents.  Each step multiplies two entries of
# the running list [x, ...]; the chain length is also the R1CS cost of one
# S-box in the circuit gadgets, so these are normative.
ADDITION_CHAINS: dict[int, tuple[tuple[int, int], ...]] = {
    1: (),
    2: ((0, 0),),
    3: ((0, 0), (1, 0)),  # x^2, x^3
    5: ((0, 0), (1, 1), (2, 0)),  # x^2, x^4, x^5
    7: ((0, 0), (1, 1), (2, 1), (3, 0)),  # x^2, x^4, x^6, x^7
}


class FieldError(ValueError):
    """Domain errors: mismatched moduli, bad exponents, out-of-range encodings."""


class FieldZeroDivisionError(FieldError, ZeroDivisionError):
    pass


FieldLike = Union["FieldElement", int]


class FieldElement:
    """Canonical residue modulo the BN254 scalar prime.

    Integers passed to the constructor are reduced, so ``FieldElement(-1)``
    is ``p - 1``.  Use :func:`from_bytes` / :func:`from_hex` for strict
    parsing of external data.
    """

    __slots__ = ("_value", "_modulus_id")

    def __init__(self, value: int = 0, modulus_id: str = MODULUS_ID):
        try:
            m = _MODULI[modulus_id]
        except KeyError:
            raise FieldError(f"unknown modulus id {modulus_id!r}") from None
        object.__setattr__(self, "_value", int(value) % m)
        object.__setattr__(self, "_modulus_id", modulus_id)

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    @property
    def value(self) -> int:
        return self._value

    @property
    def modulus_id(self) -> str:
        return self._modulus_id

    @property
    def modulus(self) -> int:
        return _MODULI[self._modulus_id]

    def __int__(self) -> int:
        return self._value

    __index__ = __int__

    def __eq__(self, other) -> bool:
        if isinstance(other, FieldElement):
            return self._value == other._value and self._modulus_id == other._modulus_id
        if isinstance(other, int):
            return self._value == other % self.modulus
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self._value, self._modulus_id))

    def __repr__(self) -> str:
        return f"FieldElement({self._value})"

    def hex(self) -> str:
        return to_hex(self)

    def __add__(self, other):
        return add(self, _coerce(other, self))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _coerce(other, self))

    def __rsub__(self, other):
        return sub(_coerce(other, self), self)

    def __mul__(self, other):
        return mul(self, _coerce(other, self))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return mul(self, inv(_coerce(other, self)))

    def __rtruediv__(self, other):
        return mul(_coerce(other, self), inv(self))

    def __neg__(self):
        return FieldElement(-self._value, self._modulus_id)

    def __pow__(self, e: int):
        return pow(self, e)

    def __bool__(self) -> bool:
        return self._value != 0


def _coerce(x, like: FieldElement) -> FieldElement:
    if isinstance(x, FieldElement):
        return x
    if isinstance(x, int):
        return FieldElement(x, like.modulus_id)
    raise TypeError(f"cannot combine FieldElement with {type(x).__name__}")


def fe(x: FieldLike) -> FieldElement:
    """Wrap an int (reducing it) or pass a FieldElement through."""
    return x if isinstance(x, FieldElement) else FieldElement(x)


def _check_pair(a: FieldElement, b: FieldElement) -> int:
    if a.modulus_id != b.modulus_id:
        raise FieldError(f"modulus mismatch: {a.modulus_id} vs {b.modulus_id}")
    return a.modulus


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    m = _check_pair(a, b)
    return FieldElement((a.value + b.value) % m, a.modulus_id)


def sub(a: FieldElement, b: FieldElement) -> FieldElement:
    m = _check_pair(a, b)
    return FieldElement((a.value - b.value) % m, a.modulus_id)


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    m = _check_pair(a, b)
    return FieldElement(a.value * b.value % m, a.modulus_id)


def pow_int(x: int, e: int, m: int = P) -> int:
    """x^e mod m on plain ints, via the fixed addition chain when one exists."""
    if e < 1:
        raise FieldError("exponent must be >= 1")
    chain = ADDITION_CHAINS.get(e)
    if chain is None:
        return builtins.pow(x, e, m)
    acc = [x % m]
    for i, j in chain:
        acc.append(acc[i] * acc[j] % m)
    return acc[-1]


def pow(a: FieldElement, e: int) -> FieldElement:  # noqa: A001 - mirrors the field op name
    if not isinstance(e, int) or isinstance(e, bool):
        raise FieldError("exponent must be an int")
    return FieldElement(pow_int(a.value, e, a.modulus), a.modulus_id)


def chain_cost(e: int) -> int:
    """Number of field multiplications used to raise to the power ``e``."""
    try:
        return len(ADDITION_CHAINS[e])
    except KeyError:
        raise FieldError(f"no fixed addition chain for exponent {e}") from None


def inv(a: FieldElement) -> FieldElement:
    if a.value == 0:
        raise FieldZeroDivisionError("inverse of zero")
    m = a.modulus
    return FieldElement(builtins.pow(a.value, m - 2, m), a.modulus_id)


def inv_int(x: int, m: int = P) -> int:
    x %= m
    if x == 0:
        raise FieldZeroDivisionError("inverse of zero")
    return builtins.pow(x, m - 2, m)


def check_exponent(d: int, m: int = P) -> None:
    """Raise unless x -> x^d is a bijection of the field."""
    if d < 2 or gcd(d, m - 1) != 1:
        raise FieldError(f"exponent {d} is not a permutation of F_p (gcd(d, p-1) != 1)")


def from_bytes(b: bytes) -> FieldElement:
    if len(b) != BYTE_LEN:
        raise FieldError(f"expected {BYTE_LEN} bytes, got {len(b)}")
    v = int.from_bytes(b, "big")
    if v >= P:
        raise FieldError("encoded integer is not below the modulus")
    return FieldElement(v)


def to_bytes(x: FieldLike) -> bytes:
    return fe(x).value.to_bytes(BYTE_LEN, "big")


def from_hex(s: str) -> FieldElement:
    """Parse a big-endian hex string of at most 32 bytes (``0x`` optional)."""
    s = s.strip()
    if s[:2].lower() == "0x":
        s = s[2:]
    if not s or len(s) > 2 * BYTE_LEN:
        raise FieldError(f"bad field element hex of length {len(s)}")
    if any(c not in _HEXDIGITS for c in s):
        raise FieldError(f"not a hex string: {s!r}")
    v = int(s, 16)
    if v >= P:
        raise FieldError("hex value is not below the modulus")
    return FieldElement(v)


def to_hex(x: FieldLike) -> str:
    return "0x" + to_bytes(x).hex()
