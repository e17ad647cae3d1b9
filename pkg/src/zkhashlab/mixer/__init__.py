"""Deterministic simulator of the batched, sequencer-screened mixer."""

from .protocol import (
    DEFAULT_D_ERA,
    DEFAULT_D_SLOT,
    DEFAULT_DENOMINATION,
    ContractState,
    DepositEvent,
    FundsError,
    Mixer,
    Note,
    ProofError,
    SequencerState,
    SimProof,
    SlotBatch,
    WithdrawOutcome,
    WithdrawRequest,
    address_field,
    commit_batch,
    deposit,
    make_withdraw_request,
    new_note,
    oas,
    privacy,
    prove_slot,
    sequencer_step,
    verify_slot_proof,
    verify_withdraw_proof,
    withdraw,
)
from .scenario import ScenarioParseError, ScenarioResult, bundled_scenarios, load_scenario, parse_script, run_scenario

__all__ = [
    "DEFAULT_D_ERA",
    "DEFAULT_D_SLOT",
    "DEFAULT_DENOMINATION",
    "ContractState",
    "DepositEvent",
    "FundsError",
    "Mixer",
    "Note",
    "ProofError",
    "ScenarioParseError",
    "ScenarioResult",
    "SequencerState",
    "SimProof",
    "SlotBatch",
    "WithdrawOutcome",
    "WithdrawRequest",
    "address_field",
    "bundled_scenarios",
    "commit_batch",
    "deposit",
    "load_scenario",
    "make_withdraw_request",
    "new_note",
    "oas",
    "parse_script",
    "privacy",
    "prove_slot",
    "run_scenario",
    "sequencer_step",
    "verify_slot_proof",
    "verify_withdraw_proof",
    "withdraw",
]
