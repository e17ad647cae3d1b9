import dataclasses
import random

import pytest

from oracles import P
from zkhashlab.circuit import check_satisfied
from zkhashlab.hash_circuits import (
    NULLIFIER_DOMAIN,
    CapabilityError,
    DegenerateCircuitError,
    build_hash2_gadget,
    build_merkle_root_gadget,
    build_withdraw_gadget,
    commitment_hash,
    constraint_report,
    nullifier_hash,
    path_subtotal,
    withdraw_inputs,
)
from zkhashlab.merkle import build, prove
from zkhashlab.permutations import HASHES, Hasher, default_spec, default_sponge, hash2, sponge_hash

rng = random.Random(2024)

# R1CS counts of one hash2; Poseidon's first-round S-boxes on the zero
# capacity lane are constants, so 3 of its 243 S-box muls are linear.
HASH2_R1CS = {"mimc": 1320, "gmimc": 678, "poseidon": 240, "poseidon2": 240, "neptune": 276}


@pytest.fixture(scope="module")
def gadgets():
    return {name: build_hash2_gadget(default_spec(name)) for name in HASHES}


@pytest.mark.parametrize("name", HASHES)
def test_hash2_constraint_counts(gadgets, name):
    assert gadgets[name].r1cs.num_constraints == HASH2_R1CS[name]


@pytest.mark.parametrize("name", HASHES)
def test_gadget_agrees_with_native_hash_and_satisfies(gadgets, name):
    g = gadgets[name]
    spec = default_spec(name)
    sp = default_sponge(spec)
    for k in range(100):
        a, b = rng.randrange(P), rng.randrange(P)
        w = g.witness({"left": a, "right": b})
        assert w[g.outputs["out"]] == hash2(spec, sp, a, b)
        if k < 5:
            assert check_satisfied(g.r1cs, w)
            assert check_satisfied(g.plonkish, w)


@pytest.mark.parametrize("name", ["mimc", "poseidon2"])
def test_hash2_wrong_output_rejected(gadgets, name):
    g = gadgets[name]
    w = g.witness({"left": 1, "right": 2})
    r = g.r1cs.witness_vector(w)
    r[-1] = (r[-1] + 1) % P
    assert not check_satisfied(g.r1cs, r)
    assert not check_satisfied(g.plonkish, w.perturbed(g.outputs["out"]))


@pytest.mark.parametrize("name", ["mimc", "poseidon", "neptune"])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_merkle_root_gadget_matches_tree_build(name, d):
    spec = default_spec(name)
    g = build_merkle_root_gadget(spec, d)
    leaves = [rng.randrange(P) for _ in range(1 << d)]
    w = g.witness({f"leaf{i}": x for i, x in enumerate(leaves)})
    assert w[g.outputs["r_slot"]] == build(leaves, Hasher(spec), d).root
    assert g.r1cs.num_constraints == HASH2_R1CS[name] * ((1 << d) - 1)
    assert check_satisfied(g.r1cs, w) and check_satisfied(g.plonkish, w)


def test_deposit_circuit_mimc_depth5_count():
    g = build_merkle_root_gadget(default_spec("mimc"), 5)
    assert g.r1cs.num_constraints == 40_920
    assert constraint_report(g)["power"] == 16


def test_degenerate_depths_rejected():
    with pytest.raises(DegenerateCircuitError):
        build_merkle_root_gadget(default_spec("poseidon2"), 0)
    with pytest.raises(DegenerateCircuitError):
        build_withdraw_gadget(default_spec("poseidon2"), 0, 3)


def test_unsupported_exponent_is_a_capability_error():
    spec = dataclasses.replace(default_spec("poseidon2"), d=11)
    with pytest.raises(CapabilityError):
        build_hash2_gadget(spec)


def test_native_protocol_hashes():
    spec = default_spec("poseidon2")
    sp = default_sponge(spec)
    assert commitment_hash(3, 4) == hash2(spec, sp, 3, 4)
    assert nullifier_hash(4) == sponge_hash(spec, sp, [4, NULLIFIER_DOMAIN])
    assert nullifier_hash(4) != commitment_hash(4, 0)


# -- withdraw ---------------------------------------------------------------


def honest_withdraw(spec, d_slot, d_era, index=1, recipient=77):
    h = Hasher(spec)
    secret, nullifier = rng.randrange(P), rng.randrange(P)
    c = commitment_hash(secret, nullifier)
    slot_leaves = [rng.randrange(P) for _ in range(1 << d_slot)]
    slot_leaves[index] = c
    slot = build(slot_leaves, h, d_slot)
    era_leaves = [rng.randrange(P) for _ in range(1 << d_era)]
    era_leaves[2] = slot.root
    era = build(era_leaves, h, d_era)
    inputs = withdraw_inputs(secret, nullifier, prove(slot, index), prove(era, 2), recipient=recipient)
    return inputs, era.root, nullifier_hash(nullifier)


@pytest.fixture(scope="module")
def small_withdraw():
    return build_withdraw_gadget(default_spec("poseidon2"), 2, 3)


def test_withdraw_honest_witness(small_withdraw):
    g = small_withdraw
    inputs, r_era, nh = honest_withdraw(g.spec, 2, 3)
    w = g.witness(inputs)
    assert g.evaluate(inputs) == {"r_era": r_era, "nullifier_hash": nh}
    assert check_satisfied(g.r1cs, w) and check_satisfied(g.plonkish, w)


def test_withdraw_non_boolean_bit_rejected(small_withdraw):
    g = small_withdraw
    inputs, _, _ = honest_withdraw(g.spec, 2, 3)
    inputs["slot_bit0"] = 2
    w = g.witness(inputs)
    assert not check_satisfied(g.r1cs, w)
    assert not check_satisfied(g.plonkish, w)


def test_withdraw_recipient_column_is_bound(small_withdraw):
    g = small_withdraw
    inputs, _, _ = honest_withdraw(g.spec, 2, 3)
    r1cs = g.r1cs
    r = r1cs.witness_vector(g.witness(inputs))
    col = r1cs.column_names.index("recipient")
    r[col] = (r[col] + 1) % P
    assert not check_satisfied(r1cs, r)


def test_withdraw_perturbation_probes(small_withdraw):
    """Every non-input witness column of the R1CS is pinned by some row."""
    g = small_withdraw
    inputs, _, _ = honest_withdraw(g.spec, 2, 3)
    r1cs = g.r1cs
    r = r1cs.witness_vector(g.witness(inputs))
    cols = range(1 + r1cs.num_inputs, r1cs.num_columns)
    for j in random.Random(0).sample(list(cols), 50):
        bad = list(r)
        bad[j] = (bad[j] + 1) % P
        assert not check_satisfied(r1cs, bad)


def test_withdraw_unknown_signal_is_rejected(small_withdraw):
    with pytest.raises(KeyError):
        small_withdraw.witness({"secret": 1, "bogus": 2})


def test_withdraw_mimc_reference_counts():
    g = build_withdraw_gadget(default_spec("mimc"), 5, 20)
    n = g.r1cs.num_constraints
    assert path_subtotal(g) == (1320 + 3) * 25 == 33_075
    rep = constraint_report(g)
    assert rep["constraints"] == n
    assert rep["scopes"]["commitment"] == 240
    assert rep["scopes"]["nullifier"] == 240
    assert rep["scopes"]["binding"] == 4
    assert n == 33_075 + 240 + 240 + 4
