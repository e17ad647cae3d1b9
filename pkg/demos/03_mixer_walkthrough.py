"""
A batched mixer, step by step
=============================

Deposits do not touch the era tree; a sequencer packs 2^d_slot of them into a
slot and commits one root.  Withdrawals prove membership through both trees.

The proofs here are simulated (a binding digest plus a recomputation of the
statement), not SNARKs.
"""

# %%
import random

from zkhashlab.mixer import Mixer, load_scenario, new_note, run_scenario

rng = random.Random(3)
m = Mixer(d_slot=2, d_era=4)

# %%
notes = []
for k in range(6):
    note = new_note(rng, f"user{k}")
    m.state.fund(note.owner, 1_000)
    m.deposit(note)
    notes.append(note)
print("era leaves after 6 deposits:", m.state.era.next_index)

# %% [markdown]
# A ban issued before the sequencer runs keeps user1 out of every slot.

# %%
m.seq.ban("user1")
rec = m.step()
print("slot 0 events:", [e.index for e in rec.batch.events], " skipped:", [e.index for e in m.seq.skipped])
print("OAS:", m.oas(), " linking probability:", m.privacy())

# %%
req = m.request(notes[0], "fresh-address")
print("honest withdraw:", m.withdraw(req))
print("replayed:", m.withdraw(req))
req = m.request(notes[2], "fresh-address")
print("recipient swapped in flight:", m.withdraw(req.with_recipient("interceptor")))
print("user1's note has no path:", m.request(notes[1], "x") is None)
print("funds conserved:", m.state.conserved())

# %% [markdown]
# The bundled scenario with 32 deposits and the published gas schedule.

# %%
r = run_scenario(load_scenario("happy_path"))
print("amortized gas per transaction:", f"{r.metrics['amortized_gas']:,.2f}")
print("gas by operation:", r.metrics["gas_by_op"])
print("invariants:", r.metrics["invariants"])
