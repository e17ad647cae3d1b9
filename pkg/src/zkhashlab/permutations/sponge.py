"""Sponge hashing and the permutation entry points that take/return FieldElements."""

from __future__ import annotations

from typing import Sequence

from ..field import FieldElement, FieldLike, fe
from . import kernels
from ._backend import FAST_P, to_fast
from .params import ArityError, PermutationSpec, SpongeConfig, default_sponge, load_spec


def _as_int(x: FieldLike) -> int:
    return fe(x).value


def permute_ints(spec: PermutationSpec, state: Sequence[int]) -> list[int]:
    if len(state) != spec.t:
        raise ArityError(f"{spec.name} state must have {spec.t} elements, got {len(state)}")
    return [int(v) for v in kernels.permute_fast(spec, [to_fast(v) for v in state])]


def permute(spec: PermutationSpec, state: Sequence[FieldLike]) -> list[FieldElement]:
    return [FieldElement(v) for v in permute_ints(spec, [_as_int(x) for x in state])]


def _sponge_fast(spec: PermutationSpec, rate: int, values) -> int:
    p = FAST_P
    state = [to_fast(0)] * spec.t
    for start in range(0, len(values), rate):
        for i, v in enumerate(values[start : start + rate]):
            state[i] = (state[i] + v) % p
        state = kernels.permute_fast(spec, state)
    return int(state[0])


def sponge_hash_ints(spec: PermutationSpec, sponge: SpongeConfig, inputs: Sequence[int]) -> int:
    if not inputs:
        raise ArityError("sponge input must be non-empty")
    sponge.check(spec)
    return _sponge_fast(spec, sponge.rate, [to_fast(v) for v in inputs])


def sponge_hash(spec: PermutationSpec, sponge: SpongeConfig, inputs: Sequence[FieldLike]) -> FieldElement:
    """Absorb ``inputs`` rate-at-a-time into a zero state; squeeze lane 0."""
    return FieldElement(sponge_hash_ints(spec, sponge, [_as_int(x) for x in inputs]))


def hash2(spec: PermutationSpec, sponge: SpongeConfig, left: FieldLike, right: FieldLike) -> FieldElement:
    return sponge_hash(spec, sponge, [left, right])


class Hasher:
    """A (spec, sponge) pair with a call counter, used by the Merkle code."""

    def __init__(self, spec: PermutationSpec, sponge: SpongeConfig | None = None):
        self.spec = spec
        self.sponge = sponge or default_sponge(spec)
        self.sponge.check(spec)
        self.calls = 0

    @classmethod
    def named(cls, name: str, params_dir=None) -> "Hasher":
        return cls(load_spec(name, params_dir))

    @property
    def name(self) -> str:
        return self.spec.name

    def hash2(self, left: FieldLike, right: FieldLike) -> FieldElement:
        self.calls += 1
        return FieldElement(_sponge_fast(self.spec, self.sponge.rate, [to_fast(_as_int(left)), to_fast(_as_int(right))]))

    def hash(self, inputs: Sequence[FieldLike]) -> FieldElement:
        return sponge_hash(self.spec, self.sponge, inputs)

    def __repr__(self) -> str:
        return f"Hasher({self.spec.name}, rate={self.sponge.rate})"
