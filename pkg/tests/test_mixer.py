import random
from dataclasses import replace
from fractions import Fraction

import pytest

from oracles import P
from zkhashlab.costmodel import TABLE2
from zkhashlab.merkle import CapacityError, build, join_paths, verify
from zkhashlab.mixer import (
    ContractState,
    DepositEvent,
    FundsError,
    Mixer,
    ProofError,
    ScenarioParseError,
    SequencerState,
    bundled_scenarios,
    commit_batch,
    deposit,
    load_scenario,
    new_note,
    oas,
    parse_script,
    privacy,
    prove_slot,
    run_scenario,
    sequencer_step,
)
from zkhashlab.permutations import Hasher


def hasher():
    return Hasher.named("poseidon2")


def event(i, who):
    return DepositEvent(i, who, i + 1, 100)


def mixer_with_slots(n_slots, d_slot=2, d_era=4, seed=0):
    rng = random.Random(seed)
    m = Mixer(d_slot, d_era, hasher())
    notes = []
    for k in range(n_slots << d_slot):
        note = new_note(rng, f"user{k}")
        m.state.fund(note.owner, 1000)
        m.deposit(note)
        notes.append(note)
    for _ in range(n_slots):
        m.step()
    return m, notes


# -- deposit ----------------------------------------------------------------


def test_deposit_leaves_the_era_untouched():
    state = ContractState(20, hasher())
    state.fund("alice", 3200)
    root = state.era.root
    for i in range(32):
        assert isinstance(deposit(state, "alice", i + 1, 100), DepositEvent)
    assert state.era.root == root and state.era.next_index == 0
    assert len(state.events) == 32
    assert state.gas_log[0] == ("deposit", 27_880)
    assert state.pool == 3200 and state.balances["alice"] == 0


def test_deposit_errors():
    state = ContractState(4, hasher())
    state.fund("bob", 50)
    with pytest.raises(FundsError):
        deposit(state, "bob", 1, 100)
    state.fund("bob", 100)
    with pytest.raises(FundsError):
        deposit(state, "bob", 1, 99)
    assert state.pool == 0 and state.events == []


# -- sequencer --------------------------------------------------------------


def test_banned_depositor_is_skipped():
    seq = SequencerState(2)
    seq.ban("mallory")
    evs = [event(0, "a"), event(1, "mallory"), event(2, "b"), event(3, "c"), event(4, "d")]
    batch = sequencer_step(seq, evs)
    assert [e.index for e in batch.events] == [0, 2, 3, 4]
    assert [e.index for e in seq.skipped] == [1]
    assert not seq.pending


def test_underfull_queue_emits_nothing():
    seq = SequencerState(3)
    assert sequencer_step(seq, [event(i, "a") for i in range(7)]) is None
    assert len(seq.pending) == 7
    assert len(sequencer_step(seq, [event(7, "a")])) == 8


def test_ban_after_queueing_removes_pending_events():
    seq = SequencerState(2)
    sequencer_step(seq, [event(0, "a"), event(1, "m"), event(2, "b")])
    seq.ban("m")
    batch = sequencer_step(seq, [event(3, "c"), event(4, "d")])
    assert [e.index for e in batch.events] == [0, 2, 3, 4]


def test_fcfs_order_and_liveness_over_random_streams():
    rng = random.Random(5)
    for _ in range(10_000):
        d = rng.randint(0, 3)
        seq = SequencerState(d)
        banned = {f"u{k}" for k in range(4) if rng.random() < 0.3}
        for b in banned:
            seq.ban(b)
        stream = [event(i, f"u{rng.randrange(4)}") for i in range(rng.randint(0, 20))]
        admissible = [e.index for e in stream if e.depositor not in banned]
        emitted, pos = [], 0
        while pos < len(stream):
            chunk = stream[pos : pos + rng.randint(1, 5)]
            pos += len(chunk)
            queued_before = len(seq.pending)
            new_ok = sum(e.depositor not in banned for e in chunk)
            batch = sequencer_step(seq, chunk)
            if queued_before + new_ok >= 1 << d:
                assert batch is not None  # liveness
            if batch is not None:
                assert len(batch) == 1 << d
                emitted += [e.index for e in batch.events]
                seq.completed_slots += 1
        assert emitted == admissible[: len(emitted)]
        assert all(e.depositor in banned for e in seq.skipped)


# -- commit -----------------------------------------------------------------


def test_commit_inserts_once_per_batch():
    state = ContractState(4, hasher())
    leaves = [random.Random(1).randrange(P) for _ in range(32)]
    batch = sequencer_step(SequencerState(5), [DepositEvent(i, "a", x, 100) for i, x in enumerate(leaves)])
    r_slot, proof = prove_slot(batch.commitments, state.hasher)
    assert r_slot == build(leaves, hasher(), 5).root
    commit_batch(state, r_slot, batch, proof)
    assert state.era.next_index == 1
    assert state.gas_log == [("commit", 1_135_599)]
    assert state.era.is_known_root(state.era.root)


def test_tampered_slot_root_is_rejected_and_state_unchanged():
    state = ContractState(4, hasher())
    batch = sequencer_step(SequencerState(1), [event(0, "a"), event(1, "b")])
    r_slot, proof = prove_slot(batch.commitments, state.hasher)
    root, n = state.era.root, state.era.next_index
    with pytest.raises(ProofError):
        commit_batch(state, r_slot + 1, batch, proof)
    other = sequencer_step(SequencerState(1), [event(5, "a"), event(6, "b")])
    with pytest.raises(ProofError):
        commit_batch(state, r_slot, other, proof)
    assert state.era.root == root and state.era.next_index == n and state.gas_log == []


def test_full_era_keeps_the_batch_queued():
    m, notes = mixer_with_slots(2, d_slot=1, d_era=1)
    assert m.state.era.is_full
    rng = random.Random(9)
    for k in range(2):
        note = new_note(rng, f"late{k}")
        m.state.fund(note.owner, 100)
        m.deposit(note)
    with pytest.raises(CapacityError):
        m.step()
    assert len(m.seq.pending) == 2
    assert m.state.era.next_index == 2


# -- withdraw ---------------------------------------------------------------


def test_happy_path_and_conservation():
    m, notes = mixer_with_slots(2)
    for k, note in enumerate(notes):
        out = m.withdraw(m.request(note, f"r{k}"))
        assert out.ok and out.paid == 100
        assert m.state.conserved()
    assert m.state.pool == 0
    assert m.state.balances["r3"] == 100


def test_replay_is_a_double_spend():
    m, notes = mixer_with_slots(1)
    req = m.request(notes[0], "alice")
    assert m.withdraw(req).ok
    out = m.withdraw(req)
    assert not out.ok and out.reason == "double-spend"
    fresh = m.request(notes[0], "alice")  # a new request for the same note
    assert m.withdraw(fresh).reason == "double-spend"


def test_recipient_tamper_is_a_soundness_failure():
    m, notes = mixer_with_slots(1)
    req = m.request(notes[0], "alice")
    out = m.withdraw(req.with_recipient("interceptor"))
    assert not out.ok and out.reason == "soundness"
    assert m.withdraw(req).ok


def test_unknown_root_is_stale():
    m, notes = mixer_with_slots(1)
    req = m.request(notes[0], "alice")
    assert m.withdraw(replace(req, r_era=req.r_era + 1)).reason == "stale-root"


def test_fee_goes_to_relayer():
    m, notes = mixer_with_slots(1)
    out = m.withdraw(m.request(notes[0], "alice", relayer="relay", fee=7))
    assert out.ok and out.paid == 93 and out.fee == 7
    assert m.state.balances["relay"] == 7 and m.state.conserved()
    bad = m.request(notes[1], "alice", relayer="relay", fee=101)
    assert m.withdraw(bad).reason == "fee"


def test_uncommitted_note_has_no_request():
    m, _ = mixer_with_slots(1)
    stray = new_note(random.Random(3), "x")
    assert m.request(stray, "alice") is None


def test_success_iff_leaf_of_flattened_tree():
    """A note withdraws exactly when its commitment is a leaf of the flattened tree."""
    rng = random.Random(11)
    for d_slot in (1, 2):
        m = Mixer(d_slot, 3, hasher())
        m.seq.ban("banned")
        notes = []
        for k in range(5 << d_slot):
            note = new_note(rng, "banned" if rng.random() < 0.3 else f"u{k}")
            m.state.fund(note.owner, 100)
            m.deposit(note)
            notes.append(note)
            if k % 3 == 2:
                m.step()
        m.step()
        flat = [c for rec in m.slots for c in rec.batch.commitments]
        for note in notes:
            c = note.commitment()
            req = m.request(note, "out")
            if req is None:
                assert c not in flat
                continue
            path_slot, _, path_era, r_era = m.paths(note)
            assert verify(c, r_era, join_paths(path_slot, path_era), m.hasher)
            assert m.withdraw(req).ok == (c in flat)


# -- anonymity set ----------------------------------------------------------


def test_oas_of_the_batch_size_four_example():
    seq = SequencerState(2, completed_slots=2)
    assert oas(seq) == 8
    assert privacy(seq) == Fraction(1, 8)


def test_oas_degenerate_cases():
    assert oas(SequencerState(0, completed_slots=1)) == 1
    assert privacy(SequencerState(0, completed_slots=1)) == 1
    assert privacy(SequencerState(3)) is None


def test_oas_counts_batches_and_is_monotone():
    rng = random.Random(4)
    for _ in range(20):
        m, _ = mixer_with_slots(rng.randint(0, 4), d_slot=rng.randint(0, 2), d_era=3, seed=rng.randrange(99))
        assert m.oas() == len(m.slots) * m.seq.batch_size
        traj = [m.oas(t) for t in range(m.t)]
        assert traj == sorted(traj)


# -- scenarios --------------------------------------------------------------


def test_bundled_scenarios_present():
    assert set(bundled_scenarios()) >= {"happy_path", "replay", "tamper", "censorship"}


def test_happy_path_amortized_gas():
    r = run_scenario(load_scenario("happy_path"))
    assert abs(r.metrics["amortized_gas"] - 331_331) <= 1
    assert r.metrics["amortized_gas_exact"] == "10602607/32"
    assert r.metrics["withdrawals"] == 32 and r.ok
    assert r.metrics["pool_balance"] == 0


def test_replay_and_tamper_scenarios():
    r = run_scenario(load_scenario("replay"))
    assert r.metrics["rejections"] == {"double-spend": 1} and r.ok
    r = run_scenario(load_scenario("tamper"))
    assert r.metrics["rejections"] == {"soundness": 1}
    assert r.metrics["withdrawals"] == 1 and r.ok


def test_censorship_scenario():
    r = run_scenario(load_scenario("censorship"))
    assert r.metrics["banned_commitments_in_slots"] == 0
    assert r.metrics["skipped_events"] == list(range(1, 44, 4))
    assert r.metrics["rejections"] == {"not-included": 2}
    assert r.metrics["withdrawals"] == 2 and r.metrics["slots"] == 1
    assert r.ok


def test_scenarios_are_deterministic():
    text = load_scenario("tamper")
    a, b = run_scenario(text, seed=3), run_scenario(text, seed=3)
    assert a.log_json() == b.log_json() and a.metrics_json() == b.metrics_json()
    assert run_scenario(text, seed=4).log_json() != a.log_json()


def test_empty_script():
    r = run_scenario("")
    assert r.log == []
    assert r.metrics["gas_total"] == 0 and r.metrics["deposits"] == 0 and r.metrics["oas"] == 0


def test_insufficient_funds_and_unknown_note_are_logged():
    r = run_scenario("deposit a 100\ndeposit a 100\nwithdraw 5 b\nwithdraw 0 b --replay\n", d_slot=1, d_era=2)
    assert r.metrics["rejections"] == {"unknown-note": 1, "nothing-to-replay": 1}


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("step\nfly away\n", 2),
        ("deposit a\n", 1),
        ("deposit a ten\n", 1),
        ("withdraw 0 b --replay --tamper-recipient\n", 1),
        ("\n\nwithdraw 0 b --bogus\n", 3),
        ("step --replay\n", 1),
        ("withdraw -1 b\n", 1),
        ("withdraw 0 b --fee\n", 1),
    ],
)
def test_parse_errors_carry_line_numbers(text, lineno):
    with pytest.raises(ScenarioParseError) as exc:
        parse_script(text)
    assert exc.value.lineno == lineno
    assert f"line {lineno}" in str(exc.value)


def test_parse_comments_and_flags():
    prog = parse_script("# hi\ndeposit a 100  # trailing\nwithdraw 0 b --relayer r --fee 3\n")
    assert [i.op for i in prog] == ["deposit", "withdraw"]
    assert dict(prog[1].flags) == {"relayer": "r", "fee": 3}


def test_gas_schedule_flows_into_metrics():
    r = run_scenario(load_scenario("happy_path"), schedule=TABLE2.with_batch_size(32))
    assert r.metrics["gas_by_op"] == {"deposit": 32 * 27_880, "commit": 1_135_599, "withdraw": 32 * 267_964}
