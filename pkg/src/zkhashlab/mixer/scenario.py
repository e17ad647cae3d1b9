"""Line-oriented scenario scripts driving a :class:`~zkhashlab.mixer.protocol.Mixer`.

Grammar (one instruction per line, ``#`` starts a comment)::

    deposit <addr> <denom>
    ban <addr>
    unban <addr>
    step
    withdraw <note-id> <recipient> [--relayer <addr>] [--fee <n>] [--tamper-recipient | --replay]

Notes are numbered from 0 in order of their ``deposit`` lines.  Addresses are
funded on first use.  ``--tamper-recipient`` builds an honest request and lets
an interceptor swap the recipient before submission; ``--replay`` resubmits
the last request sent for that note.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from ..costmodel import TABLE2, GasSchedule
from ..field import to_hex
from ..merkle import CapacityError
from ..permutations import Hasher, load_spec
from .protocol import DEFAULT_D_ERA, DEFAULT_D_SLOT, DEFAULT_DENOMINATION, FundsError, Mixer, new_note

FUNDING = 10**6
ATTACKER = "interceptor"
SCENARIO_DIR = Path(__file__).resolve().parent.parent / "data" / "scenarios"


class ScenarioParseError(ValueError):
    def __init__(self, lineno: int, line: str, msg: str):
        super().__init__(f"line {lineno}: {msg}: {line.strip()!r}")
        self.lineno = lineno


@dataclass(frozen=True)
class Instruction:
    lineno: int
    op: str
    args: tuple
    flags: tuple = ()


_ARITY = {"deposit": 2, "ban": 1, "unban": 1, "step": 0, "withdraw": 2}


def parse_script(text: str) -> list[Instruction]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        words = line.split("#", 1)[0].split()
        if not words:
            continue
        op, rest = words[0], words[1:]
        if op not in _ARITY:
            raise ScenarioParseError(lineno, line, f"unknown instruction {op!r}")
        args, flags = [], {}
        it = iter(rest)
        for w in it:
            if not w.startswith("--"):
                args.append(w)
            elif op != "withdraw":
                raise ScenarioParseError(lineno, line, f"{op} takes no flags")
            elif w in ("--tamper-recipient", "--replay"):
                flags[w[2:]] = True
            elif w in ("--relayer", "--fee"):
                val = next(it, None)
                if val is None:
                    raise ScenarioParseError(lineno, line, f"{w} needs a value")
                flags[w[2:]] = val
            else:
                raise ScenarioParseError(lineno, line, f"unknown flag {w}")
        if len(args) != _ARITY[op]:
            raise ScenarioParseError(lineno, line, f"{op} takes {_ARITY[op]} argument(s), got {len(args)}")
        if "tamper-recipient" in flags and "replay" in flags:
            raise ScenarioParseError(lineno, line, "--tamper-recipient and --replay are exclusive")
        try:
            if op == "deposit":
                args = [args[0], int(args[1])]
            elif op == "withdraw":
                args = [int(args[0]), args[1]]
                if "fee" in flags:
                    flags["fee"] = int(flags["fee"])
        except ValueError:
            raise ScenarioParseError(lineno, line, "expected an integer") from None
        if op == "withdraw" and args[0] < 0:
            raise ScenarioParseError(lineno, line, "note id must be >= 0")
        out.append(Instruction(lineno, op, tuple(args), tuple(sorted(flags.items()))))
    return out


@dataclass
class ScenarioResult:
    log: list[dict]
    metrics: dict
    mixer: Mixer | None = field(default=None, repr=False)

    def log_json(self) -> str:
        return json.dumps(self.log, indent=1, sort_keys=True)

    def metrics_json(self) -> str:
        return json.dumps(self.metrics, indent=1, sort_keys=True)

    @property
    def ok(self) -> bool:
        return all(self.metrics["invariants"].values())


def run_scenario(
    script: str,
    *,
    seed: int = 0,
    d_slot: int = DEFAULT_D_SLOT,
    d_era: int = DEFAULT_D_ERA,
    hash_name: str = "poseidon2",
    schedule: GasSchedule = TABLE2,
    denomination: int = DEFAULT_DENOMINATION,
    params_dir=None,
) -> ScenarioResult:
    """Replay a script deterministically; returns the event log and metrics."""
    program = parse_script(script)
    rng = random.Random(seed)
    mixer = Mixer(d_slot, d_era, Hasher(load_spec(hash_name, params_dir)), schedule, denomination)
    state = mixer.state
    notes = []
    last_request = {}
    log: list[dict] = []
    rejections: dict[str, int] = {}
    accepted_nullifiers: list = []
    oas_trajectory = []
    banned_in_slots = 0

    def reject(entry, cause):
        entry.update(ok=False, reason=cause)
        rejections[cause] = rejections.get(cause, 0) + 1

    for ins in program:
        entry = {"t": mixer.t, "line": ins.lineno, "op": ins.op}
        flags = dict(ins.flags)
        if ins.op == "deposit":
            addr, denom = ins.args
            if addr not in state.balances:
                state.fund(addr, FUNDING)
            note = new_note(rng, addr, denom)
            notes.append(note)
            entry.update(note=len(notes) - 1, addr=addr, denomination=denom)
            try:
                ev = mixer.deposit(note)
                entry.update(ok=True, event=ev.index, commitment=to_hex(ev.commitment))
            except FundsError as e:
                reject(entry, "funds")
                entry["detail"] = str(e)
        elif ins.op in ("ban", "unban"):
            (addr,) = ins.args
            (mixer.seq.ban if ins.op == "ban" else mixer.seq.unban)(addr)
            entry.update(ok=True, addr=addr)
        elif ins.op == "step":
            skipped_before = len(mixer.seq.skipped)
            try:
                rec = mixer.step()
            except CapacityError:
                rec = None
                reject(entry, "era-full")
            entry["skipped"] = [ev.index for ev in mixer.seq.skipped[skipped_before:]]
            if rec is not None:
                banned_in_slots += sum(1 for d in rec.batch.depositors if d in mixer.seq.banned)
                entry.update(
                    ok=True,
                    slot=rec.batch.slot_index,
                    events=[ev.index for ev in rec.batch.events],
                    r_slot=to_hex(rec.r_slot),
                    r_era=to_hex(state.era.root),
                )
            elif "reason" not in entry:
                entry.update(ok=True, slot=None)
            entry["oas"] = mixer.oas()
        else:
            note_id, recipient = ins.args
            entry.update(note=note_id, recipient=recipient)
            if note_id >= len(notes):
                reject(entry, "unknown-note")
            elif flags.get("replay"):
                req = last_request.get(note_id)
                if req is None:
                    reject(entry, "nothing-to-replay")
                else:
                    entry["replay"] = True
                    _submit(mixer, req, entry, reject, accepted_nullifiers)
            else:
                req = mixer.request(notes[note_id], recipient, flags.get("relayer", ""), flags.get("fee", 0))
                if req is None:
                    reject(entry, "not-included")
                else:
                    if flags.get("tamper-recipient"):
                        req = req.with_recipient(ATTACKER)
                        entry["tampered_to"] = ATTACKER
                    last_request[note_id] = req
                    _submit(mixer, req, entry, reject, accepted_nullifiers)
        if ins.op != "step":
            mixer.t += 1
        oas_trajectory.append([entry["t"], mixer.oas()])
        log.append(entry)

    gas_by_op: dict[str, int] = {}
    for op, g in state.gas_log:
        gas_by_op[op] = gas_by_op.get(op, 0) + g
    n_dep = sum(1 for e in log if e["op"] == "deposit" and e.get("ok"))
    gas_total = state.gas_total()
    amortized = Fraction(gas_total, n_dep) if n_dep else Fraction(0)
    metrics = {
        "deposits": n_dep,
        "withdrawals": sum(1 for e in log if e["op"] == "withdraw" and e.get("ok")),
        "slots": len(mixer.slots),
        "rejections": rejections,
        "gas_total": gas_total,
        "gas_by_op": gas_by_op,
        "amortized_gas": float(amortized),
        "amortized_gas_exact": f"{amortized.numerator}/{amortized.denominator}",
        "oas": mixer.oas(),
        "oas_trajectory": oas_trajectory,
        "pool_balance": state.pool,
        "deposited": state.deposited,
        "paid_out": state.paid_out,
        "fees_paid": state.fees_paid,
        "skipped_events": [ev.index for ev in mixer.seq.skipped],
        "banned_commitments_in_slots": banned_in_slots,
        "invariants": {
            "conservation": state.conserved(),
            "no_double_spend": len(accepted_nullifiers) == len(set(accepted_nullifiers)),
            "censorship": banned_in_slots == 0,
        },
    }
    return ScenarioResult(log, metrics, mixer)


def _submit(mixer, req, entry, reject, accepted):
    out = mixer.withdraw(req)
    entry["nullifier_hash"] = to_hex(req.nullifier_hash)
    if out.ok:
        accepted.append(req.nullifier_hash)
        entry.update(ok=True, paid=out.paid, fee=out.fee, paid_to=out.recipient)
    else:
        reject(entry, out.reason)


def bundled_scenarios() -> dict[str, Path]:
    return {p.stem: p for p in sorted(SCENARIO_DIR.glob("*.txt"))}


def load_scenario(name_or_path) -> str:
    path = Path(name_or_path)
    if not path.exists():
        bundled = bundled_scenarios()
        if str(name_or_path) not in bundled:
            raise FileNotFoundError(f"no scenario file or bundled scenario named {name_or_path!r}")
        path = bundled[str(name_or_path)]
    return path.read_text()
