"""Timing harness for native Merkle builds and gadget witness generation.

The workloads are this package's own: a native tree build, and witness
evaluation of the matching gadget (a bare hash2 at depth 0, the slot-root
circuit otherwise).  They are not proving-system setup or prove phases, and
records say so in their ``workload`` field.

Methodology: monotonic ``perf_counter_ns``, one discarded warm-up run, the
median of ``repetitions`` timed runs.  Peak allocation comes from a separate
untimed run under ``tracemalloc``.
"""

from __future__ import annotations

import csv
import io
import json
import random
import statistics
import time
import tracemalloc
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .circuit import circuit_power, eval_witness
from .field import P
from .hash_circuits import build_hash2_gadget, build_merkle_root_gadget
from .merkle import build
from .permutations import Hasher, load_spec

CSV_COLUMNS = ("hash", "depth", "system", "workload", "constraints", "power", "wall_ns", "hash_calls", "peak_bytes")
SYSTEMS = ("native", "r1cs", "plonkish")
MAX_DEPTH = 12


@dataclass
class BenchRecord:
    hash: str
    depth: int
    system: str
    workload: str
    wall_ns: int
    hash_calls: int
    constraints: int | None = None
    power: int | None = None
    peak_bytes: int | None = None

    def row(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in CSV_COLUMNS}


def time_median(fn: Callable[[], object], repetitions: int) -> int:
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    fn()  # warm-up
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - t0)
    return max(1, int(statistics.median(samples)))


def peak_allocation(fn: Callable[[], object]) -> int | None:
    if tracemalloc.is_tracing():
        return None
    tracemalloc.start()
    try:
        fn()
        return tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()


def bench_cell(
    name: str,
    depth: int,
    repetitions: int = 3,
    *,
    seed: int = 0,
    params_dir=None,
    systems: Sequence[str] = SYSTEMS,
    track_memory: bool = True,
) -> list[BenchRecord]:
    """Records for one (hash, depth) cell, one per requested system."""
    if not 0 <= depth <= MAX_DEPTH:
        raise ValueError(f"depth must be in 0..{MAX_DEPTH}")
    spec = load_spec(name, params_dir)
    rng = random.Random(seed * 1_000_003 + depth)
    n_leaves = max(1 << depth, 2)
    leaves = [rng.randrange(P) for _ in range(n_leaves)]
    calls = (1 << depth) - 1 if depth else 1
    out = []

    if "native" in systems:
        hasher = Hasher(spec)
        if depth:
            work = lambda: build(leaves, hasher, depth)  # noqa: E731
        else:
            work = lambda: hasher.hash2(leaves[0], leaves[1])  # noqa: E731
        hasher.calls = 0
        work()
        measured_calls = hasher.calls
        wall = time_median(work, repetitions)
        peak = peak_allocation(work) if track_memory else None
        if measured_calls != calls:
            raise RuntimeError(f"expected {calls} hash calls at depth {depth}, counted {measured_calls}")
        out.append(BenchRecord(spec.name, depth, "native", "native-merkle-build", wall, measured_calls, peak_bytes=peak))

    gadget_systems = [s for s in systems if s != "native"]
    if gadget_systems:
        gadget = build_merkle_root_gadget(spec, depth) if depth else build_hash2_gadget(spec)
        names = sorted(gadget.inputs, key=gadget.inputs.get)
        assignment = dict(zip(names, leaves))
        for system in gadget_systems:
            lowered = gadget.system(system)
            if system == "r1cs":
                work = lambda: lowered.witness_vector(eval_witness(gadget.circuit, assignment))  # noqa: E731
            else:
                work = lambda: lowered.assign(eval_witness(gadget.circuit, assignment))  # noqa: E731
            wall = time_median(work, repetitions)
            peak = peak_allocation(work) if track_memory else None
            n = lowered.num_constraints
            out.append(
                BenchRecord(spec.name, depth, system, "witness-generation", wall, calls, n, circuit_power(n), peak)
            )
    return out


def run_bench(
    names: Iterable[str],
    depths: Iterable[int],
    repetitions: int = 3,
    *,
    seed: int = 0,
    params_dir=None,
    systems: Sequence[str] = SYSTEMS,
    track_memory: bool = True,
) -> list[BenchRecord]:
    records = []
    for name in names:
        for d in depths:
            records += bench_cell(
                name, d, repetitions, seed=seed, params_dir=params_dir, systems=systems, track_memory=track_memory
            )
    return records


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line; returns (slope, intercept, R^2)."""
    x, y = np.asarray(xs, float), np.asarray(ys, float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot else 1.0
    return float(slope), float(intercept), r2


def records_csv(records: Iterable[BenchRecord]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: ("" if v is None else v) for k, v in r.row().items()})
    return buf.getvalue()


def records_json(records: Iterable[BenchRecord]) -> str:
    return json.dumps([r.row() for r in records], indent=1)
