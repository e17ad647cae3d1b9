"""Circuit gadgets for the five hashes and for the deposit / withdraw relations.

The gadgets are written against :class:`~zkhashlab.circuit.CircuitBuilder`
directly from the parameter set, separately from the native kernels, so the
two implementations check each other.

Cost model per construction (R1CS): every S-box costs the length of its
addition chain, and nothing else is non-linear, so a hash2 gadget costs
``S-boxes x chain length``.  Each Merkle path level costs one hash2 plus three
constraints: two selections ``b * (sib - cur)``, ``b * (cur - sib)`` and the
boolean check ``b * (b - 1) = 0``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

from .circuit import (
    Circuit,
    CircuitBuilder,
    PlonkishSystem,
    R1CSSystem,
    Witness,
    circuit_power,
    eval_witness,
    lower_to_plonkish,
    lower_to_r1cs,
)
from .field import ADDITION_CHAINS, P, FieldElement, FieldLike, fe
from .merkle import MerklePath
from .permutations import HASHES, PermutationSpec, SpongeConfig, default_spec, default_sponge, sponge_hash

NULLIFIER_DOMAIN = int.from_bytes(hashlib.sha256(b"zkhashlab/nullifier-hash").digest(), "big") % P
BINDING_SIGNALS = ("recipient", "relayer", "fee", "refund")
DEFAULT_COMMITMENT_HASH = "poseidon2"


class CapabilityError(ValueError):
    pass


class DegenerateCircuitError(ValueError):
    pass


# -- native protocol hashes -------------------------------------------------


def commitment_hash(secret: FieldLike, nullifier: FieldLike, spec: PermutationSpec | None = None) -> FieldElement:
    spec = spec or default_spec(DEFAULT_COMMITMENT_HASH)
    return sponge_hash(spec, default_sponge(spec), [secret, nullifier])


def nullifier_hash(nullifier: FieldLike, spec: PermutationSpec | None = None) -> FieldElement:
    """Hash of the nullifier, domain-separated from commitments by a fixed second input."""
    spec = spec or default_spec(DEFAULT_COMMITMENT_HASH)
    return sponge_hash(spec, default_sponge(spec), [nullifier, NULLIFIER_DOMAIN])


# -- in-circuit building blocks ---------------------------------------------


class _Emitter:
    """Emits one hash construction into a builder; lanes that are known zero are ``None``."""

    def __init__(self, b: CircuitBuilder, spec: PermutationSpec, sponge: SpongeConfig | None = None):
        if spec.name not in HASHES:
            raise CapabilityError(f"no gadget for hash {spec.name!r}")
        if spec.d not in ADDITION_CHAINS:
            raise CapabilityError(f"no addition chain for S-box exponent {spec.d}")
        self.b = b
        self.spec = spec
        self.sponge = sponge or default_sponge(spec)
        self.sponge.check(spec)

    # lane helpers tolerate None as the zero lane
    def _add(self, x, y):
        if x is None:
            return y
        if y is None:
            return x
        return self.b.add(x, y)

    def _add_const(self, x, c):
        if c % P == 0:
            return x
        k = self.b.const(c)
        return k if x is None else self.b.add(x, k)

    def _sbox(self, x):
        if x is None:
            return None
        acc = [x]
        for i, j in ADDITION_CHAINS[self.spec.d]:
            acc.append(self.b.mul(acc[i], acc[j]))
        return acc[-1]

    def _matmul(self, m, s):
        out = []
        for row in m:
            acc = None
            for k, x in zip(row, s):
                if x is None or k % P == 0:
                    continue
                acc = self._add(acc, x if k % P == 1 else self.b.mul(self.b.const(k), x))
            out.append(acc)
        return out

    def permutation(self, s: list):
        spec = self.spec
        rc = spec.round_constants
        if spec.name == "mimc":
            xl, xr = s
            last = len(rc) - 1
            for r, (c,) in enumerate(rc):
                y = self._add(xr, self._sbox(self._add_const(xl, c)))
                xl, xr = (xl, y) if r == last else (y, xl)
            return [xl, xr]
        if spec.name == "gmimc":
            for (c,) in rc:
                f = self._sbox(self._add_const(s[0], c))
                s = [self._add(x, f) for x in s[1:]] + [s[0]]
            return s
        half = spec.rounds_full // 2
        partial = range(half, half + spec.rounds_partial)
        if spec.name == "poseidon":
            mds = spec.linear_layers["mds"]
            for r, row in enumerate(rc):
                s = [self._add_const(x, c) for x, c in zip(s, row)]
                s = [self._sbox(s[0])] + s[1:] if r in partial else [self._sbox(x) for x in s]
                s = self._matmul(mds, s)
            return s
        # poseidon2 skeleton (also used for neptune)
        ext, internal = spec.linear_layers["external"], spec.linear_layers["internal"]
        s = self._matmul(ext, s)
        for r, row in enumerate(rc):
            if r in partial:
                s = [self._sbox(self._add_const(s[0], row[0]))] + s[1:]
                s = self._matmul(internal, s)
            else:
                s = self._matmul(ext, [self._sbox(self._add_const(x, c)) for x, c in zip(s, row)])
        return s

    def sponge_hash(self, inputs: Sequence[int]) -> int:
        rate = self.sponge.rate
        s: list = [None] * self.spec.t
        for start in range(0, len(inputs), rate):
            for i, x in enumerate(inputs[start : start + rate]):
                s[i] = self._add(s[i], x)
            s = self.permutation(s)
        return s[0] if s[0] is not None else self.b.const(0)

    def hash2(self, left: int, right: int) -> int:
        return self.sponge_hash([left, right])


def _path(b: CircuitBuilder, em: _Emitter, leaf: int, prefix: str, depth: int) -> int:
    cur = leaf
    for i in range(depth):
        sib = b.input(f"{prefix}_sib{i}")
        bit = b.input(f"{prefix}_bit{i}")
        # left = cur + b (sib - cur), right = sib + b (cur - sib)
        d_left = b.mul(bit, b.sub(sib, cur))
        d_right = b.mul(bit, b.sub(cur, sib))
        left, right = b.add(cur, d_left), b.add(sib, d_right)
        b.assert_zero(b.mul(bit, b.add_const(bit, -1)))
        cur = em.hash2(left, right)
    return cur


# -- gadgets ----------------------------------------------------------------


@dataclass
class Gadget:
    circuit: Circuit
    inputs: dict[str, int]
    outputs: dict[str, int]
    spec: PermutationSpec
    kind: str
    depths: dict[str, int] = field(default_factory=dict)

    @cached_property
    def r1cs(self) -> R1CSSystem:
        return lower_to_r1cs(self.circuit)

    @cached_property
    def plonkish(self) -> PlonkishSystem:
        return lower_to_plonkish(self.circuit)

    def system(self, name: str):
        if name == "r1cs":
            return self.r1cs
        if name == "plonkish":
            return self.plonkish
        raise ValueError(f"unknown constraint system {name!r} (use r1cs or plonkish)")

    def witness(self, assignment: Mapping[str, FieldLike]) -> Witness:
        unknown = set(assignment) - set(self.inputs)
        if unknown:
            raise KeyError(f"unknown input signals: {sorted(unknown)}")
        return eval_witness(self.circuit, assignment)

    def evaluate(self, assignment: Mapping[str, FieldLike]) -> dict[str, FieldElement]:
        w = self.witness(assignment)
        return {name: w[g] for name, g in self.outputs.items()}


def _finish(b: CircuitBuilder, spec, kind, depths, **outputs) -> Gadget:
    for name, g in outputs.items():
        b.output(g, name)
    return Gadget(b.build(), dict(b.inputs), dict(outputs), spec, kind, depths)


def build_hash2_gadget(spec: PermutationSpec) -> Gadget:
    b = CircuitBuilder()
    em = _Emitter(b, spec)
    left, right = b.input("left"), b.input("right")
    with b.scope("hash"):
        out = em.hash2(left, right)
    return _finish(b, spec, "hash2", {}, out=out)


def build_merkle_root_gadget(spec: PermutationSpec, d_slot: int) -> Gadget:
    """The deposit relation: ``2^d_slot`` leaf signals in, the slot root out."""
    if d_slot < 1:
        raise DegenerateCircuitError("d_slot must be >= 1 (a depth-0 root is the leaf itself)")
    b = CircuitBuilder()
    em = _Emitter(b, spec)
    level = [b.input(f"leaf{i}") for i in range(1 << d_slot)]
    with b.scope("tree"):
        while len(level) > 1:
            level = [em.hash2(level[i], level[i + 1]) for i in range(0, len(level), 2)]
    return _finish(b, spec, "merkle_root", {"d_slot": d_slot}, r_slot=level[0])


def build_withdraw_gadget(
    spec: PermutationSpec, d_slot: int, d_era: int, commitment_spec: PermutationSpec | None = None
) -> Gadget:
    """The withdraw relation.

    Inputs: ``secret``, ``nullifier``, per-level ``slot_sib{i}``/``slot_bit{i}``
    and ``era_sib{i}``/``era_bit{i}``, plus the binding signals recipient,
    relayer, fee and refund.  Outputs: ``r_era`` and ``nullifier_hash``.  The
    commitment and nullifier hashes use ``commitment_spec`` (Poseidon2 by
    default); path hashing uses ``spec``.
    """
    if d_slot < 1 or d_era < 1:
        raise DegenerateCircuitError("d_slot and d_era must be >= 1")
    cspec = commitment_spec or default_spec(DEFAULT_COMMITMENT_HASH)
    b = CircuitBuilder()
    em, cem = _Emitter(b, spec), _Emitter(b, cspec)
    secret, nullifier = b.input("secret"), b.input("nullifier")
    with b.scope("commitment"):
        commitment = cem.hash2(secret, nullifier)
    with b.scope("nullifier"):
        nh = cem.sponge_hash([nullifier, b.const(NULLIFIER_DOMAIN)])
    with b.scope("slot_path"):
        r_slot = _path(b, em, commitment, "slot", d_slot)
    with b.scope("era_path"):
        r_era = _path(b, em, r_slot, "era", d_era)
    with b.scope("binding"):
        for name in BINDING_SIGNALS:
            x = b.input(name)
            b.mul(x, x, label=f"{name}^2")
    return _finish(b, spec, "withdraw", {"d_slot": d_slot, "d_era": d_era}, r_era=r_era, nullifier_hash=nh)


def path_inputs(prefix: str, path: MerklePath) -> dict[str, FieldElement]:
    out = {}
    for i, (sib, bit) in enumerate(zip(path.siblings, path.position_bits)):
        out[f"{prefix}_sib{i}"] = fe(sib)
        out[f"{prefix}_bit{i}"] = fe(bit)
    return out


def withdraw_inputs(
    secret: FieldLike,
    nullifier: FieldLike,
    path_slot: MerklePath,
    path_era: MerklePath,
    recipient: FieldLike = 0,
    relayer: FieldLike = 0,
    fee: FieldLike = 0,
    refund: FieldLike = 0,
) -> dict[str, FieldElement]:
    out = {"secret": fe(secret), "nullifier": fe(nullifier)}
    out.update(path_inputs("slot", path_slot))
    out.update(path_inputs("era", path_era))
    out.update(recipient=fe(recipient), relayer=fe(relayer), fee=fe(fee), refund=fe(refund))
    return out


def scope_totals(system) -> dict[str, int]:
    """Constraint counts per top-level scope."""
    out: dict[str, int] = {}
    for scope, n in system.scope_counts().items():
        top = scope.split("/")[0] or "(root)"
        out[top] = out.get(top, 0) + n
    return out


def constraint_report(gadget: Gadget, system: str = "r1cs") -> dict:
    sys_ = gadget.system(system)
    n = sys_.num_constraints
    return {
        "hash": gadget.spec.name,
        "kind": gadget.kind,
        "system": system,
        **gadget.depths,
        "constraints": n,
        "power": circuit_power(n),
        "scopes": scope_totals(sys_),
    }


def path_subtotal(gadget: Gadget, system: str = "r1cs") -> int:
    totals = scope_totals(gadget.system(system))
    return totals.get("slot_path", 0) + totals.get("era_path", 0)
