"""
Hashes and Merkle trees
=======================

The five permutations, their sponges, and the two kinds of trees the mixer
uses: a fully built slot tree and an incremental era tree.
"""

# %%
import random

import numpy as np

from zkhashlab.field import P, to_hex
from zkhashlab.merkle import IncrementalMerkleTree, build, join_paths, prove, verify, verify_composed
from zkhashlab.permutations import HASHES, Hasher, default_spec, default_sponge, hash2, permute_ints

rng = random.Random(1)

# %% [markdown]
# Shapes of the shipped parameter sets.  ``sbox_count`` times the addition
# chain length (3 for x^5) is roughly the circuit cost of one permutation.

# %%
for name in HASHES:
    spec = default_spec(name)
    sp = default_sponge(spec)
    print(f"{name:<10} t={spec.t}  rounds={spec.total_rounds:>3}  S-boxes={spec.sbox_count:>3}  rate={sp.rate}")

# %%
spec = default_spec("poseidon2")
sp = default_sponge(spec)
print("hash2(1, 2) =", to_hex(hash2(spec, sp, 1, 2)))
print("hash2(2, 1) =", to_hex(hash2(spec, sp, 2, 1)))

# %% [markdown]
# Soft avalanche check: flip the low bit of one input lane and count how many
# output bits change.  This is reported, not asserted; a value near 0.5 is
# what one expects from a permutation with no visible structure.

# %%
for name in HASHES:
    spec = default_spec(name)
    fractions = []
    for _ in range(300):
        state = [rng.randrange(P) for _ in range(spec.t)]
        flipped = list(state)
        flipped[0] ^= 1
        a, b = permute_ints(spec, state), permute_ints(spec, flipped)
        diff = sum(bin(x ^ y).count("1") for x, y in zip(a, b))
        fractions.append(diff / (254 * spec.t))
    print(f"{name:<10} mean flipped fraction {np.mean(fractions):.3f} (sd {np.std(fractions):.3f})")

# %% [markdown]
# A slot tree of depth 3 costs 2^3 - 1 = 7 hashes; a proof is 3 siblings.

# %%
h = Hasher.named("poseidon2")
leaves = [rng.randrange(P) for _ in range(8)]
tree = build(leaves, h, 3)
print("hash calls for the build:", h.calls)
path = prove(tree, 5)
print("leaf 5 verifies:", verify(leaves[5], tree.root, path, h))
print("leaf 4 against leaf 5's path:", verify(leaves[4], tree.root, path, h))

# %% [markdown]
# The era tree only keeps its frontier; each insert costs ``depth`` hashes.

# %%
era = IncrementalMerkleTree(20, h)
h.calls = 0
era.insert(tree.root)
print("hashes per era insert at depth 20:", h.calls)

# %% [markdown]
# Composed membership: a leaf in a slot whose root sits in a (full) era is a
# leaf of one flattened tree, with the two paths simply concatenated.

# %%
slots = [[rng.randrange(P) for _ in range(4)] for _ in range(4)]
slot_trees = [build(s, h, 2) for s in slots]
era_tree = build([t.root for t in slot_trees], h, 2)
ps, pe = prove(slot_trees[2], 1), prove(era_tree, 2)
print("composed:", verify_composed(slots[2][1], ps, slot_trees[2].root, pe, era_tree.root, h))
flat = build([x for s in slots for x in s], h, 4)
print("flattened root equal:", flat.root == era_tree.root)
print("joined path verifies in the flat tree:", verify(slots[2][1], flat.root, join_paths(ps, pe), h))
