"""
Gas, fees and the depth trade-off
=================================

Per-transaction costs against the unbatched baseline, and how savings move
with the slot and era depths.  Ends with the witness-time scaling fit.
"""

# %%
import numpy as np

from zkhashlab import costmodel as cm
from zkhashlab.bench import bench_cell, linear_fit

# %%
s = cm.TABLE2
print(f"amortized gas: {float(cm.amortized_gas(s)):,.2f}  (baseline {s.baseline_total:,})")
print(f"savings: {float(cm.savings_ratio(s)):.1%}")
for row in cm.fee_table(s)[1:]:
    print(f"  {row['chain']:<9} {cm.sig3(row['amortized']):>9} vs {cm.sig3(row['baseline_total']):>9} {row['unit']}"
          f"   savings {float(row['savings']):.1%}")

# %% [markdown]
# Without batching the commit is paid per transaction and the scheme loses.

# %%
print(f"batch size 1: savings {float(cm.savings_ratio(s.with_batch_size(1))):.1%}")

# %% [markdown]
# Normalized savings, 1.0 at (d_slot=5, d_era=20).  Deeper slots amortize the
# commit further; deeper eras make each commit's insertion dearer.

# %%
slots, eras = range(1, 8), range(16, 25)
rows = cm.tradeoff_surface(cm.MIMC_MODEL, s, slots, eras)
grid = np.array([[float(r["normalized"]) for r in rows if r["d_slot"] == ds] for ds in slots])
print("d_slot\\d_era " + "".join(f"{e:>7}" for e in eras))
for ds, line in zip(slots, grid):
    print(f"{ds:<12}" + "".join(f"{v:>7.3f}" for v in line))

# %% [markdown]
# Witness generation time against constraint count for Poseidon2 slot trees
# of depth 0 to 7.  These are this package's own workloads, not prover runs.

# %%
xs, ys = [], []
for d in range(8):
    native, r1cs = bench_cell("poseidon2", d, 5, systems=("native", "r1cs"), track_memory=False)
    xs.append(r1cs.constraints)
    ys.append(r1cs.wall_ns)
    print(f"depth {d}: {native.hash_calls:>3} hashes, {r1cs.constraints:>6} constraints, {r1cs.wall_ns / 1e6:8.2f} ms")
slope, intercept, r2 = linear_fit(xs, ys)
print(f"{slope:.0f} ns per constraint, R^2 = {r2:.4f}")
