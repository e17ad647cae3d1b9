"""
Circuits and their constraint counts
====================================

From the four-input worked example up to the full withdraw relation.
"""

# %%
from zkhashlab.circuit import check_satisfied, eval_witness, fig2_circuit, lower_to_plonkish, lower_to_r1cs
from zkhashlab.hash_circuits import (
    build_hash2_gadget,
    build_merkle_root_gadget,
    build_withdraw_gadget,
    constraint_report,
    path_subtotal,
)
from zkhashlab.permutations import HASHES, default_spec

# %% [markdown]
# ``y = (x1 + x2) * (x3 * x4)``: the addition folds into a linear
# combination, so R1CS needs two rows while Plonkish spends one row per gate.

# %%
c = fig2_circuit()
r1cs, plonk = lower_to_r1cs(c), lower_to_plonkish(c)
w = eval_witness(c, {"x1": 1, "x2": 2, "x3": 3, "x4": 4})
print("columns:", r1cs.column_names)
for i in range(r1cs.num_constraints):
    print(f"  row {i} ({r1cs.row_labels[i]}): A={r1cs.A[i]} B={r1cs.B[i]} C={r1cs.C[i]}")
print("plonkish selectors (Q_l, Q_r, Q_m, Q_c, Q_o):")
for row in plonk.rows:
    print(f"  {row.label:<6} {row.selectors}")
print("y =", w[c.outputs[0]], " satisfied:", check_satisfied(r1cs, w), check_satisfied(plonk, w))

# %% [markdown]
# One hash2 per hash function.  Poseidon would be 81 S-boxes x 3 = 243, but
# its first round applies an S-box to the all-zero capacity lane, which the
# lowering evaluates as a constant.

# %%
print(f"{'hash':<10}{'r1cs':>8}{'plonkish':>10}{'power':>7}")
for name in HASHES:
    g = build_hash2_gadget(default_spec(name))
    rep = constraint_report(g)
    print(f"{name:<10}{rep['constraints']:>8}{g.plonkish.num_rows:>10}{rep['power']:>7}")

# %% [markdown]
# The deposit relation proves a slot root over 2^d_slot leaves.

# %%
for name in ("mimc", "poseidon2"):
    g = build_merkle_root_gadget(default_spec(name), 5)
    print(f"{name:<10} slot root, d_slot=5: {g.r1cs.num_constraints} constraints")

# %% [markdown]
# The withdraw relation at (d_slot=5, d_era=20) with Poseidon2, broken down by
# scope.  Each path level is one hash2 plus three constraints.

# %%
g = build_withdraw_gadget(default_spec("poseidon2"), 5, 20)
rep = constraint_report(g)
for scope, n in sorted(rep["scopes"].items()):
    print(f"  {scope:<12}{n:>7}")
print("  total       ", rep["constraints"], " path part", path_subtotal(g))
