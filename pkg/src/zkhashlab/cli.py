"""Command-line entry point: ``zkhashlab <command> ...``.

Commands: ``hash``, ``merkle build|prove|verify``, ``arith report``, ``bench``,
``mixer run``, ``cost report``.  Global flags (``--params``, ``--seed``,
``--out``, ``--format``) are accepted before or after the command.

Exit codes: 0 success, 1 runtime failure (including a failed verification or a
violated scenario invariant), 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import costmodel as cm
from .bench import SYSTEMS, records_csv, records_json, run_bench
from .field import FieldError, from_hex, to_hex
from .hash_circuits import (
    build_hash2_gadget,
    build_merkle_root_gadget,
    build_withdraw_gadget,
    constraint_report,
    path_subtotal,
)
from .merkle import MerklePath, build, prove, read_leaf_file, verify
from .mixer import ScenarioParseError, load_scenario, run_scenario
from .permutations import HASHES, Hasher, ParameterError, default_sponge, load_spec, sponge_hash
from .permutations.params import canonical_name

COST_COLUMNS = ("d_slot", "d_era", "batch_size", "commit_gas", "amortized_gas", "savings", "normalized", "n_wit", "n_dep")


class UsageError(Exception):
    pass


def _hash_name(name: str) -> str:
    try:
        return canonical_name(name)
    except ParameterError:
        raise UsageError(f"no capability for hash function {name!r} (supported: {', '.join(HASHES)})") from None


def _spec(args, name=None):
    return load_spec(_hash_name(name or args.fn), args.params)


def _parse_range(text: str) -> list[int]:
    """'0-7' or '1,3,5' or a mix like '0-2,5'."""
    out: list[int] = []
    try:
        for part in text.split(","):
            if "-" in part:
                lo, hi = part.split("-")
                out += range(int(lo), int(hi) + 1)
            elif part:
                out.append(int(part))
    except ValueError:
        raise UsageError(f"bad range {text!r}") from None
    if not out:
        raise UsageError(f"empty range {text!r}")
    return out


def _parse_hex(text: str):
    try:
        return from_hex(text.strip())
    except FieldError as e:
        raise UsageError(f"bad field element {text!r}: {e}") from None


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _num(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    return x


def _csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _num(r.get(k, "")) for k in columns})
    return buf.getvalue()


# -- commands ---------------------------------------------------------------


def cmd_hash(args) -> int:
    spec = _spec(args)
    inputs = [_parse_hex(x) for x in args.inputs.split(",") if x.strip()]
    if not inputs:
        raise UsageError("--inputs needs at least one field element")
    _emit(args, to_hex(sponge_hash(spec, default_sponge(spec), inputs)))
    return 0


def _leaves(args):
    try:
        return read_leaf_file(args.leaves)
    except FieldError as e:
        raise UsageError(f"{args.leaves}: {e}") from None


def cmd_merkle(args) -> int:
    hasher = Hasher(_spec(args))
    if args.action == "build":
        leaves = _leaves(args)
        depth = args.depth if args.depth is not None else max(len(leaves) - 1, 0).bit_length()
        tree = build(leaves, hasher, depth)
        doc = {"hash": hasher.name, "depth": depth, "leaves": len(leaves), "root": to_hex(tree.root), "hash_calls": hasher.calls}
        _emit(args, json.dumps(doc) if args.format == "json" else to_hex(tree.root))
        return 0
    if args.action == "prove":
        leaves = _leaves(args)
        depth = args.depth if args.depth is not None else max(len(leaves) - 1, 0).bit_length()
        tree = build(leaves, hasher, depth)
        if not 0 <= args.index < len(tree.leaves):
            raise UsageError(f"leaf index {args.index} out of range for depth {depth}")
        _emit(args, prove(tree, args.index).to_json())
        return 0
    # verify
    try:
        path = MerklePath.from_json(Path(args.path).read_text())
    except (ValueError, KeyError, FieldError) as e:
        raise UsageError(f"bad path file {args.path}: {e}") from None
    ok = verify(_parse_hex(args.leaf), _parse_hex(args.root), path, hasher)
    _emit(args, json.dumps({"valid": ok}) if args.format == "json" else str(ok).lower())
    return 0 if ok else 1


def cmd_arith(args) -> int:
    spec = _spec(args)
    if args.circuit == "hash2":
        gadget = build_hash2_gadget(spec)
    elif args.circuit == "dep":
        gadget = build_merkle_root_gadget(spec, args.d_slot)
    else:
        gadget = build_withdraw_gadget(spec, args.d_slot, args.d_era)
    systems = ("r1cs", "plonkish") if args.system == "both" else (args.system,)
    reports = []
    for s in systems:
        rep = constraint_report(gadget, s)
        if gadget.kind == "withdraw":
            model = cm.ConstraintModel(build_hash2_gadget(spec).system(s).num_constraints)
            rep["path_constraints"] = path_subtotal(gadget, s)
            rep["model_n_wit"] = cm.n_wit(model, args.d_slot, args.d_era)
            rep["model_n_wit_simplified"] = cm.n_wit_simplified(model, args.d_slot, args.d_era)
        reports.append(rep)
    if args.export_circuit:
        Path(args.export_circuit).write_text(gadget.circuit.to_json())
    if args.export_system:
        Path(args.export_system).write_text(json.dumps({s: gadget.system(s).to_dict() for s in systems}))
    if args.format == "csv":
        cols = ["hash", "kind", "system", "d_slot", "d_era", "constraints", "power"]
        _emit(args, _csv(reports, cols))
    else:
        _emit(args, json.dumps(reports if len(reports) > 1 else reports[0], indent=1))
    return 0


def cmd_bench(args) -> int:
    names = [_hash_name(n) for n in args.fns.split(",")]
    depths = _parse_range(args.depths)
    if any(not 0 <= d <= 12 for d in depths):
        raise UsageError("depths must lie in 0..12")
    if args.repetitions < 3:
        raise UsageError("--repetitions must be >= 3")
    systems = tuple(args.systems.split(","))
    if any(s not in SYSTEMS for s in systems):
        raise UsageError(f"systems must be among {', '.join(SYSTEMS)}")
    records = run_bench(names, depths, args.repetitions, seed=args.seed, params_dir=args.params, systems=systems)
    _emit(args, records_json(records) if args.format == "json" else records_csv(records).rstrip("\n"))
    return 0


def cmd_mixer(args) -> int:
    try:
        script = load_scenario(args.scenario)
    except FileNotFoundError as e:
        raise UsageError(str(e)) from None
    schedule = cm.GasSchedule.load(args.gas) if args.gas else cm.TABLE2
    result = run_scenario(
        script,
        seed=args.seed,
        d_slot=args.d_slot,
        d_era=args.d_era,
        hash_name=_hash_name(args.fn),
        schedule=schedule.with_batch_size(1 << args.d_slot),
        params_dir=args.params,
    )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "log.json").write_text(result.log_json() + "\n")
        (out / "metrics.json").write_text(result.metrics_json() + "\n")
    else:
        print(result.metrics_json())
    if not result.ok:
        bad = [k for k, v in result.metrics["invariants"].items() if not v]
        print(f"invariant violated: {', '.join(bad)}", file=sys.stderr)
        return 1
    return 0


def cmd_cost(args) -> int:
    schedule = cm.GasSchedule.load(args.gas) if args.gas else cm.TABLE2
    if args.batch_size is not None:
        schedule = schedule.with_batch_size(args.batch_size)
    quotes = [cm.FeeQuote.load(q) for q in args.quote] if args.quote else list(cm.DEFAULT_QUOTES)
    model = cm.ConstraintModel.for_hash(_hash_name(args.fn)) if args.fn else cm.MIMC_MODEL
    table = cm.fee_table(schedule, quotes)
    surface = cm.tradeoff_surface(model, schedule, _parse_range(args.d_slots), _parse_range(args.d_eras))
    if args.format == "json":
        doc = {
            "schedule": schedule.to_dict(),
            "amortized_gas": _num(cm.amortized_gas(schedule)),
            "savings_ratio": _num(cm.savings_ratio(schedule)),
            "fees": [{k: _num(v) for k, v in row.items()} for row in table],
            "tradeoff": [{k: _num(v) for k, v in row.items()} for row in surface],
        }
        _emit(args, json.dumps(doc, indent=1))
    elif args.format == "csv":
        _emit(args, _csv(surface, COST_COLUMNS).rstrip("\n"))
    else:
        _emit(args, render_cost_text(schedule, table, surface))
    return 0


def render_cost_text(schedule, table, surface) -> str:
    lines = ["op costs per transaction (baseline vs batched)"]
    head = f"{'chain':<10}{'unit':<6}{'base dep':>14}{'base wd':>14}{'base total':>14}{'deposit':>12}{'commit':>12}{'withdraw':>12}{'total':>14}{'savings':>9}"
    lines.append(head)
    for r in table:
        total = r["amortized"]
        lines.append(
            f"{r['chain']:<10}{r['unit']:<6}"
            + "".join(f"{cm.sig3(r[k]):>14}" for k in ("baseline_deposit", "baseline_withdraw", "baseline_total"))
            + "".join(f"{cm.sig3(r[k]):>12}" for k in ("deposit", "commit", "withdraw"))
            + f"{cm.sig3(total):>14}{float(r['savings']) * 100:>8.1f}%"
        )
    lines.append(f"amortized gas per transaction: {float(cm.amortized_gas(schedule)):,.2f} (batch {schedule.batch_size})")
    lines.append("")
    lines.append("normalized savings (rows d_slot, columns d_era)")
    eras = sorted({r["d_era"] for r in surface})
    slots = sorted({r["d_slot"] for r in surface})
    cell = {(r["d_slot"], r["d_era"]): r["normalized"] for r in surface}
    lines.append("d_slot\\d_era" + "".join(f"{e:>8}" for e in eras))
    for s in slots:
        lines.append(f"{s:<12}" + "".join(f"{float(cell[s, e]):>8.3f}" for e in eras))
    return "\n".join(lines)


# -- parser -----------------------------------------------------------------


def _globals(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--params", default=d(None), help="directory of parameter JSON files")
    parser.add_argument("--seed", type=int, default=d(0), help="seed for generated data (u64)")
    parser.add_argument("--out", default=d(None), help="output file (directory for mixer run)")
    parser.add_argument("--format", choices=("csv", "json", "text"), default=d(None), help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zkhashlab", description=__doc__.splitlines()[0])
    _globals(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hash", parents=[common], help="sponge hash of field elements")
    p.add_argument("--fn", required=True)
    p.add_argument("--inputs", required=True, help="comma-separated hex field elements")
    p.set_defaults(func=cmd_hash)

    p = sub.add_parser("merkle", help="build, prove and verify Merkle trees")
    msub = p.add_subparsers(dest="action", required=True)
    for action in ("build", "prove"):
        q = msub.add_parser(action, parents=[common])
        q.add_argument("--fn", default="poseidon2")
        q.add_argument("--leaves", required=True, help="leaf file, one hex element per line")
        q.add_argument("--depth", type=int, default=None)
        if action == "prove":
            q.add_argument("--index", type=int, required=True)
        q.set_defaults(func=cmd_merkle)
    q = msub.add_parser("verify", parents=[common])
    q.add_argument("--fn", default="poseidon2")
    q.add_argument("--leaf", required=True)
    q.add_argument("--root", required=True)
    q.add_argument("--path", required=True, help="path JSON file")
    q.set_defaults(func=cmd_merkle)

    p = sub.add_parser("arith", help="constraint reports for the circuits")
    asub = p.add_subparsers(dest="action", required=True)
    q = asub.add_parser("report", parents=[common])
    q.add_argument("--fn", default="poseidon2")
    q.add_argument("--circuit", choices=("hash2", "dep", "wit"), default="hash2")
    q.add_argument("--system", choices=("r1cs", "plonkish", "both"), default="r1cs")
    q.add_argument("--d-slot", type=int, default=5)
    q.add_argument("--d-era", type=int, default=20)
    q.add_argument("--export-circuit", default=None, help="write the circuit interchange JSON here")
    q.add_argument("--export-system", default=None, help="write the lowered system(s) JSON here")
    q.set_defaults(func=cmd_arith)

    p = sub.add_parser("bench", parents=[common], help="timing records per hash and depth")
    p.add_argument("--fns", default=",".join(HASHES))
    p.add_argument("--depths", default="0-7")
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--systems", default=",".join(SYSTEMS))
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("mixer", help="run mixer scenarios")
    xsub = p.add_subparsers(dest="action", required=True)
    q = xsub.add_parser("run", parents=[common])
    q.add_argument("scenario", help="scenario file or bundled scenario name")
    q.add_argument("--fn", default="poseidon2", help="Merkle hash")
    q.add_argument("--d-slot", type=int, default=5)
    q.add_argument("--d-era", type=int, default=20)
    q.add_argument("--gas", default=None, help="gas schedule JSON")
    q.set_defaults(func=cmd_mixer)

    p = sub.add_parser("cost", help="gas / fee economics")
    csub = p.add_subparsers(dest="action", required=True)
    q = csub.add_parser("report", parents=[common])
    q.add_argument("--gas", default=None, help="gas schedule JSON")
    q.add_argument("--quote", action="append", default=None, help="fee quote JSON (repeatable)")
    q.add_argument("--batch-size", type=int, default=None)
    q.add_argument("--d-slots", default="1-7")
    q.add_argument("--d-eras", default="16-24")
    q.add_argument("--fn", default=None, help="take H_c from this hash's gadget (default: 1,320)")
    q.set_defaults(func=cmd_cost)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = {"bench": "csv", "cost": "text"}.get(args.command, "text")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"zkhashlab: error: {e}", file=sys.stderr)
        return 2
    except (ScenarioParseError, cm.ValidationError, ParameterError, json.JSONDecodeError) as e:
        print(f"zkhashlab: error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"zkhashlab: error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"zkhashlab: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
