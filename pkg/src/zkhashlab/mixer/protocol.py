"""Contract, sequencer and user roles of the batched mixer.

Proofs are simulated.  A :class:`SimProof` carries a SHA-256 digest over the
public inputs plus the prover's witness; verification recomputes the relation
from the witness and re-derives the digest from the public inputs actually
submitted.  That reproduces the soundness consequences the protocol depends
on (changing a recipient or a root invalidates the proof) but is not
cryptographic: the witness travels with the proof.
"""

from __future__ import annotations

import hashlib
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from ..costmodel import TABLE2, GasSchedule
from ..field import P, FieldElement, FieldLike, fe, to_bytes
from ..hash_circuits import commitment_hash, nullifier_hash
from ..merkle import CapacityError, IncrementalMerkleTree, MerklePath, build, prove, sparse_path, verify_composed
from ..permutations import Hasher, PermutationSpec, default_spec

DEFAULT_D_SLOT = 5
DEFAULT_D_ERA = 20
DEFAULT_DENOMINATION = 100


class FundsError(ValueError):
    pass


class ProofError(ValueError):
    pass


def address_field(addr: str) -> FieldElement:
    """Field encoding of an address, used as a public input."""
    if not addr:
        return FieldElement(0)
    return FieldElement(int.from_bytes(hashlib.sha256(addr.encode()).digest(), "big") % P)


# -- notes ------------------------------------------------------------------


@dataclass(frozen=True)
class Note:
    secret: FieldElement = field(repr=False)
    nullifier: FieldElement = field(repr=False)
    owner: str
    denomination: int

    def commitment(self, spec: PermutationSpec | None = None) -> FieldElement:
        return commitment_hash(self.secret, self.nullifier, spec)

    def nullifier_hash(self, spec: PermutationSpec | None = None) -> FieldElement:
        return nullifier_hash(self.nullifier, spec)


def new_note(rng: random.Random, owner: str, denomination: int = DEFAULT_DENOMINATION) -> Note:
    return Note(FieldElement(rng.randrange(P)), FieldElement(rng.randrange(P)), owner, denomination)


# -- simulated proofs -------------------------------------------------------


@dataclass(frozen=True)
class SimProof:
    relation: str
    digest: bytes
    witness: object = field(repr=False, compare=False)


def _digest(relation: str, public: Sequence[FieldLike]) -> bytes:
    h = hashlib.sha256(relation.encode())
    for x in public:
        h.update(to_bytes(x))
    return h.digest()


@dataclass(frozen=True)
class SlotWitness:
    leaves: tuple[FieldElement, ...]


def prove_slot(leaves: Sequence[FieldLike], hasher: Hasher) -> tuple[FieldElement, SimProof]:
    leaves = tuple(fe(x) for x in leaves)
    depth = max(len(leaves) - 1, 0).bit_length()
    r_slot = build(leaves, hasher, depth).root
    return r_slot, SimProof("slot", _digest("slot", [r_slot, *leaves]), SlotWitness(leaves))


def verify_slot_proof(r_slot: FieldLike, leaves: Sequence[FieldLike], proof: SimProof, hasher: Hasher) -> bool:
    if proof.relation != "slot" or not isinstance(proof.witness, SlotWitness):
        return False
    if proof.digest != _digest("slot", [r_slot, *leaves]):
        return False
    w = proof.witness.leaves
    if tuple(fe(x) for x in leaves) != w:
        return False
    depth = max(len(w) - 1, 0).bit_length()
    return build(w, hasher, depth).root == fe(r_slot)


@dataclass(frozen=True)
class WithdrawWitness:
    secret: FieldElement
    nullifier: FieldElement
    path_slot: MerklePath
    r_slot: FieldElement
    path_era: MerklePath


@dataclass(frozen=True)
class WithdrawRequest:
    r_era: FieldElement
    nullifier_hash: FieldElement
    recipient: str
    relayer: str
    fee: int
    refund: int
    proof: SimProof

    def public_inputs(self) -> list[FieldElement]:
        return [
            self.r_era,
            self.nullifier_hash,
            address_field(self.recipient),
            address_field(self.relayer),
            fe(self.fee),
            fe(self.refund),
        ]

    def with_recipient(self, recipient: str) -> "WithdrawRequest":
        """The same request with the recipient swapped and the proof left as is."""
        return WithdrawRequest(self.r_era, self.nullifier_hash, recipient, self.relayer, self.fee, self.refund, self.proof)


def make_withdraw_request(
    note: Note,
    path_slot: MerklePath,
    r_slot: FieldLike,
    path_era: MerklePath,
    r_era: FieldLike,
    recipient: str,
    relayer: str = "",
    fee: int = 0,
    refund: int = 0,
    commitment_spec: PermutationSpec | None = None,
) -> WithdrawRequest:
    nh = note.nullifier_hash(commitment_spec)
    unsigned = WithdrawRequest(fe(r_era), nh, recipient, relayer, fee, refund, None)
    witness = WithdrawWitness(note.secret, note.nullifier, path_slot, fe(r_slot), path_era)
    proof = SimProof("withdraw", _digest("withdraw", unsigned.public_inputs()), witness)
    return WithdrawRequest(fe(r_era), nh, recipient, relayer, fee, refund, proof)


def verify_withdraw_proof(request: WithdrawRequest, hasher: Hasher, commitment_spec: PermutationSpec | None = None) -> bool:
    proof = request.proof
    if proof is None or proof.relation != "withdraw" or not isinstance(proof.witness, WithdrawWitness):
        return False
    if proof.digest != _digest("withdraw", request.public_inputs()):
        return False
    w = proof.witness
    if nullifier_hash(w.nullifier, commitment_spec) != request.nullifier_hash:
        return False
    c = commitment_hash(w.secret, w.nullifier, commitment_spec)
    return verify_composed(c, w.path_slot, w.r_slot, w.path_era, request.r_era, hasher)


# -- events and state -------------------------------------------------------


@dataclass(frozen=True)
class DepositEvent:
    index: int
    depositor: str
    commitment: FieldElement
    denomination: int


@dataclass(frozen=True)
class SlotBatch:
    slot_index: int
    events: tuple[DepositEvent, ...]

    @property
    def commitments(self) -> tuple[FieldElement, ...]:
        return tuple(e.commitment for e in self.events)

    @property
    def depositors(self) -> tuple[str, ...]:
        return tuple(e.depositor for e in self.events)

    def __len__(self) -> int:
        return len(self.events)


@dataclass
class ContractState:
    d_era: int
    hasher: Hasher
    schedule: GasSchedule = TABLE2
    denomination: int = DEFAULT_DENOMINATION
    commitment_spec: PermutationSpec | None = None
    root_history: int = 32
    era: IncrementalMerkleTree = field(init=False)
    spent: set = field(default_factory=set)
    balances: dict = field(default_factory=dict)
    pool: int = 0
    events: list = field(default_factory=list)
    gas_log: list = field(default_factory=list)
    slot_roots: list = field(default_factory=list)
    deposited: int = 0
    paid_out: int = 0
    fees_paid: int = 0

    def __post_init__(self):
        self.era = IncrementalMerkleTree(self.d_era, self.hasher, self.root_history)
        if self.commitment_spec is None:
            self.commitment_spec = default_spec("poseidon2")

    @property
    def known_roots(self):
        return self.era.roots

    def fund(self, addr: str, amount: int) -> None:
        self.balances[addr] = self.balances.get(addr, 0) + amount

    def conserved(self) -> bool:
        return self.deposited == self.pool + self.paid_out + self.fees_paid

    def gas_total(self) -> int:
        return sum(g for _, g in self.gas_log)


@dataclass
class SequencerState:
    d_slot: int
    pending: deque = field(default_factory=deque)
    banned: set = field(default_factory=set)
    completed_slots: int = 0
    skipped: list = field(default_factory=list)
    history: list = field(default_factory=list)  # (t, completed_slots)

    @property
    def batch_size(self) -> int:
        return 1 << self.d_slot

    def admissible(self, addr: str) -> bool:
        return addr not in self.banned

    def non_banned(self, addresses: Iterable[str]) -> set[str]:
        return {a for a in addresses if self.admissible(a)}

    def ban(self, addr: str) -> None:
        self.banned.add(addr)

    def unban(self, addr: str) -> None:
        self.banned.discard(addr)


# -- operations -------------------------------------------------------------


def deposit(state: ContractState, user: str, commitment: FieldLike, denomination: int) -> DepositEvent:
    """Move funds into the pool and emit an event; the era is not touched."""
    if denomination != state.denomination:
        raise FundsError(f"pool takes exactly {state.denomination} units, got {denomination}")
    if state.balances.get(user, 0) < denomination:
        raise FundsError(f"{user} has insufficient balance for a deposit of {denomination}")
    state.balances[user] -= denomination
    state.pool += denomination
    state.deposited += denomination
    ev = DepositEvent(len(state.events), user, fe(commitment), denomination)
    state.events.append(ev)
    state.gas_log.append(("deposit", state.schedule.deposit_gas))
    return ev


def sequencer_step(seq: SequencerState, events: Iterable[DepositEvent]) -> SlotBatch | None:
    """Queue admissible events in arrival order; emit one full batch if available.

    Admissibility is checked on arrival and again when a batch is cut, so a
    ban also removes already-queued commitments.
    """
    for ev in events:
        if seq.admissible(ev.depositor):
            seq.pending.append(ev)
        else:
            seq.skipped.append(ev)
    if any(not seq.admissible(ev.depositor) for ev in seq.pending):
        keep = deque()
        for ev in seq.pending:
            (keep if seq.admissible(ev.depositor) else seq.skipped).append(ev)
        seq.pending = keep
    if len(seq.pending) < seq.batch_size:
        return None
    batch = tuple(seq.pending.popleft() for _ in range(seq.batch_size))
    return SlotBatch(seq.completed_slots, batch)


def commit_batch(state: ContractState, r_slot: FieldLike, batch: SlotBatch, proof: SimProof) -> FieldElement:
    """Verify the slot proof and insert ``r_slot`` into the era; returns the new era root."""
    if not verify_slot_proof(r_slot, batch.commitments, proof, state.hasher):
        raise ProofError("slot proof does not verify")
    root = state.era.insert(r_slot)  # raises CapacityError when full, state unchanged
    state.slot_roots.append(fe(r_slot))
    state.gas_log.append(("commit", state.schedule.commit_gas))
    return root


@dataclass(frozen=True)
class WithdrawOutcome:
    ok: bool
    reason: str | None = None
    recipient: str | None = None
    paid: int = 0
    fee: int = 0


def withdraw(state: ContractState, request: WithdrawRequest) -> WithdrawOutcome:
    if request.nullifier_hash in state.spent:
        return WithdrawOutcome(False, "double-spend")
    if not state.era.is_known_root(request.r_era):
        return WithdrawOutcome(False, "stale-root")
    if not verify_withdraw_proof(request, state.hasher, state.commitment_spec):
        return WithdrawOutcome(False, "soundness")
    if request.refund != 0:
        return WithdrawOutcome(False, "refund")
    if not 0 <= request.fee <= state.denomination:
        return WithdrawOutcome(False, "fee")
    if state.pool < state.denomination:
        return WithdrawOutcome(False, "pool")
    state.spent.add(request.nullifier_hash)
    paid = state.denomination - request.fee
    state.pool -= state.denomination
    state.fund(request.recipient, paid)
    state.paid_out += paid
    if request.fee:
        state.fund(request.relayer, request.fee)
        state.fees_paid += request.fee
    state.gas_log.append(("withdraw", state.schedule.withdraw_gas))
    return WithdrawOutcome(True, None, request.recipient, paid, request.fee)


def oas(seq: SequencerState, t: int | None = None) -> int:
    """Observed anonymity set: ``2^d_slot`` times the slots completed by time ``t``."""
    if t is None:
        c_t = seq.completed_slots
    else:
        c_t = 0
        for step, completed in seq.history:
            if step > t:
                break
            c_t = completed
    return seq.batch_size * c_t


def privacy(seq: SequencerState, t: int | None = None) -> Fraction | None:
    """Linking probability ``1 / OAS``; ``None`` means no anonymity yet."""
    n = oas(seq, t)
    return Fraction(1, n) if n else None


# -- a whole pool -----------------------------------------------------------


@dataclass
class SlotRecord:
    batch: SlotBatch
    r_slot: FieldElement
    era_index: int


class Mixer:
    """Contract plus one honest sequencer, with the bookkeeping users need for paths."""

    def __init__(
        self,
        d_slot: int = DEFAULT_D_SLOT,
        d_era: int = DEFAULT_D_ERA,
        hasher: Hasher | None = None,
        schedule: GasSchedule = TABLE2,
        denomination: int = DEFAULT_DENOMINATION,
        commitment_spec: PermutationSpec | None = None,
    ):
        self.hasher = hasher or Hasher(default_spec("poseidon2"))
        self.state = ContractState(d_era, self.hasher, schedule, denomination, commitment_spec)
        self.seq = SequencerState(d_slot)
        self.slots: list[SlotRecord] = []
        self.slot_of: dict[FieldElement, tuple[int, int]] = {}  # commitment -> (slot, position)
        self._unsent: list[DepositEvent] = []
        self.t = 0

    @property
    def commitment_spec(self) -> PermutationSpec:
        return self.state.commitment_spec

    def deposit(self, note: Note) -> DepositEvent:
        ev = deposit(self.state, note.owner, note.commitment(self.commitment_spec), note.denomination)
        self._unsent.append(ev)
        return ev

    def step(self) -> SlotRecord | None:
        """One sequencer round: ingest new events and commit at most one batch."""
        events, self._unsent = self._unsent, []
        batch = sequencer_step(self.seq, events)
        rec = None
        if batch is not None and self.state.era.is_full:
            self.seq.pending.extendleft(reversed(batch.events))
            self.seq.history.append((self.t, self.seq.completed_slots))
            self.t += 1
            raise CapacityError(f"era of depth {self.state.d_era} is full")
        if batch is not None:
            r_slot, proof = prove_slot(batch.commitments, self.hasher)
            commit_batch(self.state, r_slot, batch, proof)
            rec = SlotRecord(batch, r_slot, len(self.state.slot_roots) - 1)
            self.slots.append(rec)
            for pos, c in enumerate(batch.commitments):
                self.slot_of.setdefault(c, (len(self.slots) - 1, pos))
            self.seq.completed_slots += 1
        self.seq.history.append((self.t, self.seq.completed_slots))
        self.t += 1
        return rec

    def paths(self, note: Note) -> tuple[MerklePath, FieldElement, MerklePath, FieldElement] | None:
        """(path_slot, r_slot, path_era, r_era) for a committed note, or None."""
        loc = self.slot_of.get(note.commitment(self.commitment_spec))
        if loc is None:
            return None
        rec = self.slots[loc[0]]
        tree = build(rec.batch.commitments, self.hasher, self.seq.d_slot)
        path_slot = prove(tree, loc[1])
        era = self.state.era
        path_era = sparse_path(self.state.slot_roots, rec.era_index, era.depth, self.hasher, era.zero_hashes)
        return path_slot, rec.r_slot, path_era, era.root

    def request(self, note: Note, recipient: str, relayer: str = "", fee: int = 0) -> WithdrawRequest | None:
        found = self.paths(note)
        if found is None:
            return None
        path_slot, r_slot, path_era, r_era = found
        return make_withdraw_request(note, path_slot, r_slot, path_era, r_era, recipient, relayer, fee, 0, self.commitment_spec)

    def withdraw(self, request: WithdrawRequest) -> WithdrawOutcome:
        return withdraw(self.state, request)

    def oas(self, t: int | None = None) -> int:
        return oas(self.seq, t)

    def privacy(self, t: int | None = None) -> Fraction | None:
        return privacy(self.seq, t)
