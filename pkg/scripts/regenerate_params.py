"""Rewrite the bundled parameter files from the deterministic generator.

    python3 scripts/regenerate_params.py [--seed 0] [--out src/zkhashlab/data/params]
"""

import argparse
from pathlib import Path

from zkhashlab.permutations import HASHES, generate_params, save_params

ap = argparse.ArgumentParser()
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "src/zkhashlab/data/params"))
args = ap.parse_args()

out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)
for name in HASHES:
    spec = generate_params(name, args.seed)
    save_params(spec, out / f"{name}.json")
    print(f"{name}: t={spec.t} rounds={spec.rounds_full}+{spec.rounds_partial} -> {out / (name + '.json')}")
