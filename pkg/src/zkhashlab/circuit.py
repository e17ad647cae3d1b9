"""Arithmetic-circuit IR over F_p, witness evaluation, and R1CS / Plonkish lowering.

A :class:`Circuit` is a topologically ordered gate list (``input``,
``constant``, ``add``, ``mul``) with designated outputs and an optional list
of *zero checks*: sink gates that must evaluate to 0 (boolean checks,
equalities).

R1CS witness columns are ordered ``[1, inputs..., internal wires..., outputs...]``.
Internal wires are the outputs of non-linear multiplications; additions and
multiplications by constants are folded into linear combinations.  An output
that is a linear combination is folded into the constraint of one of the
multiplications it depends on (the substitution ``m = (y - rest) / c``), and
only gets a separate binding constraint when it depends on no multiplication.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .field import P, FieldElement, FieldError, FieldLike, fe, from_hex, inv_int, to_hex

GATE_KINDS = ("input", "constant", "add", "mul")
ONE = -1  # symbol of the constant-1 witness slot


class CircuitError(ValueError):
    pass


class AssignmentError(CircuitError):
    pass


class ShapeError(CircuitError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: str
    operands: tuple[int, ...] = ()
    const: int | None = None
    label: str | None = None
    scope: str = ""


@dataclass
class Circuit:
    gates: list[Gate]
    outputs: list[int]
    output_names: list[str] = field(default_factory=list)
    zero_checks: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.output_names:
            self.output_names = [f"out{k}" for k in range(len(self.outputs))]
        self.validate()

    def validate(self) -> None:
        consumers = [0] * len(self.gates)
        for gid, g in enumerate(self.gates):
            if g.kind not in GATE_KINDS:
                raise CircuitError(f"gate {gid}: unknown kind {g.kind!r}")
            arity = 2 if g.kind in ("add", "mul") else 0
            if len(g.operands) != arity:
                raise CircuitError(f"gate {gid}: {g.kind} takes {arity} operands")
            for op in g.operands:
                if not 0 <= op < gid:
                    raise CircuitError(f"gate {gid}: operand {op} is not an earlier gate")
                consumers[op] += 1
            if g.kind == "constant" and g.const is None:
                raise CircuitError(f"gate {gid}: constant without a value")
        if not self.outputs:
            raise CircuitError("circuit needs at least one output")
        if len(self.output_names) != len(self.outputs):
            raise CircuitError("output_names must match outputs")
        for gid in self.outputs:
            if not 0 <= gid < len(self.gates):
                raise CircuitError(f"output {gid} is not a gate")
        outs = set(self.outputs)
        for gid in self.zero_checks:
            if not 0 <= gid < len(self.gates):
                raise CircuitError(f"zero check {gid} is not a gate")
            if consumers[gid] or gid in outs:
                raise CircuitError(f"zero-checked gate {gid} must be a sink")

    @property
    def input_ids(self) -> list[int]:
        return [i for i, g in enumerate(self.gates) if g.kind == "input"]

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def to_dict(self) -> dict:
        return {
            "gates": [
                {
                    "id": i,
                    "kind": g.kind,
                    "operands": list(g.operands),
                    "const": None if g.const is None else to_hex(g.const),
                    **({"label": g.label} if g.label else {}),
                    **({"scope": g.scope} if g.scope else {}),
                }
                for i, g in enumerate(self.gates)
            ],
            "outputs": list(self.outputs),
            "output_names": list(self.output_names),
            "zero_checks": list(self.zero_checks),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Circuit":
        gates = []
        for i, g in enumerate(doc["gates"]):
            if g.get("id", i) != i:
                raise CircuitError(f"gate ids must be dense and ordered (got {g.get('id')} at {i})")
            const = g.get("const")
            gates.append(
                Gate(
                    g["kind"],
                    tuple(g.get("operands", ())),
                    None if const is None else from_hex(const).value,
                    g.get("label"),
                    g.get("scope", ""),
                )
            )
        return cls(gates, list(doc["outputs"]), list(doc.get("output_names", [])), list(doc.get("zero_checks", [])))

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))


class CircuitBuilder:
    """Incremental construction helper; gates get the innermost active scope."""

    def __init__(self):
        self.gates: list[Gate] = []
        self.outputs: list[int] = []
        self.output_names: list[str] = []
        self.zero_checks: list[int] = []
        self.inputs: dict[str, int] = {}
        self._consts: dict[int, int] = {}
        self._scopes: list[str] = []

    @contextmanager
    def scope(self, name: str):
        self._scopes.append(name)
        try:
            yield
        finally:
            self._scopes.pop()

    def _gate(self, kind, operands=(), const=None, label=None) -> int:
        scope = "/".join(self._scopes)
        self.gates.append(Gate(kind, tuple(operands), const, label, scope))
        return len(self.gates) - 1

    def input(self, name: str) -> int:
        if name in self.inputs:
            raise CircuitError(f"duplicate input {name!r}")
        gid = self._gate("input", label=name)
        self.inputs[name] = gid
        return gid

    def const(self, value: int) -> int:
        value %= P
        if value not in self._consts:
            self._consts[value] = self._gate("constant", const=value)
        return self._consts[value]

    def add(self, a: int, b: int, label=None) -> int:
        return self._gate("add", (a, b), label=label)

    def mul(self, a: int, b: int, label=None) -> int:
        return self._gate("mul", (a, b), label=label)

    def add_const(self, a: int, k: int) -> int:
        return a if k % P == 0 else self.add(a, self.const(k))

    def scale(self, a: int, k: int) -> int:
        return a if k % P == 1 else self.mul(self.const(k), a)

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.scale(b, -1))

    def lincomb(self, terms: Sequence[tuple[int, int]]) -> int:
        """sum(k * wire) over ``(k, wire)`` pairs with non-zero k."""
        acc = None
        for k, w in terms:
            if k % P == 0:
                continue
            term = self.scale(w, k)
            acc = term if acc is None else self.add(acc, term)
        return self.const(0) if acc is None else acc

    def assert_zero(self, g: int) -> None:
        self.zero_checks.append(g)

    def output(self, g: int, name: str | None = None) -> int:
        self.outputs.append(g)
        self.output_names.append(name or f"out{len(self.outputs) - 1}")
        return g

    def build(self) -> Circuit:
        return Circuit(list(self.gates), list(self.outputs), list(self.output_names), list(self.zero_checks))


# -- witness ----------------------------------------------------------------


@dataclass
class Witness:
    """Assignment of every gate id to a field value (held as canonical ints)."""

    values: list[int]

    def __getitem__(self, gid: int) -> FieldElement:
        return FieldElement(self.values[gid])

    def __len__(self) -> int:
        return len(self.values)

    def perturbed(self, gid: int, delta: int = 1) -> "Witness":
        vals = list(self.values)
        vals[gid] = (vals[gid] + delta) % P
        return Witness(vals)


def _input_value(circuit: Circuit, inputs: Mapping, gid: int) -> int:
    g = circuit.gates[gid]
    for key in (gid, g.label):
        if key is not None and key in inputs:
            return fe(inputs[key]).value
    raise AssignmentError(f"input gate {gid} ({g.label or 'unnamed'}) is not assigned")


def eval_witness(circuit: Circuit, inputs: Mapping[Union[int, str], FieldLike]) -> Witness:
    """Evaluate every gate; inputs are keyed by gate id or input label."""
    vals = [0] * len(circuit.gates)
    for gid, g in enumerate(circuit.gates):
        k = g.kind
        if k == "add":
            a, b = g.operands
            vals[gid] = (vals[a] + vals[b]) % P
        elif k == "mul":
            a, b = g.operands
            vals[gid] = vals[a] * vals[b] % P
        elif k == "constant":
            vals[gid] = g.const % P
        else:
            vals[gid] = _input_value(circuit, inputs, gid)
    return Witness(vals)


def output_values(circuit: Circuit, witness: Witness) -> dict[str, FieldElement]:
    return {n: witness[g] for n, g in zip(circuit.output_names, circuit.outputs)}


# -- R1CS -------------------------------------------------------------------

LC = dict  # symbol/column -> coefficient


def _lc_add(x: LC, y: LC) -> LC:
    if len(x) < len(y):
        x, y = y, x
    out = dict(x)
    for s, v in y.items():
        c = (out.get(s, 0) + v) % P
        if c:
            out[s] = c
        else:
            out.pop(s, None)
    return out


def _lc_scale(x: LC, k: int) -> LC:
    k %= P
    if k == 0:
        return {}
    if k == 1:
        return x
    return {s: v * k % P for s, v in x.items()}


def _lc_const(x: LC):
    if not x:
        return 0
    if len(x) == 1 and ONE in x:
        return x[ONE]
    return None


def _substitute(lc: LC, subs: Mapping[int, LC]) -> LC:
    while subs.keys() & lc.keys():
        out: LC = {}
        for s, v in lc.items():
            if s in subs:
                out = _lc_add(out, _lc_scale(subs[s], v))
            else:
                out = _lc_add(out, {s: v})
        lc = out
    return lc


def _lc_eval(lc: Mapping[int, int], r: Sequence[int]) -> int:
    return sum(v * r[c] for c, v in lc.items()) % P


@dataclass
class R1CSSystem:
    """Sparse rank-1 constraint system; rows satisfy ``(A.r) * (B.r) = C.r``."""

    A: list[dict[int, int]]
    B: list[dict[int, int]]
    C: list[dict[int, int]]
    num_columns: int
    column_sources: list[tuple[str, int]]  # ("one", 0) | ("gate", gid)
    column_names: list[str]
    row_labels: list[str | None]
    row_scopes: list[str]
    num_inputs: int
    num_internal: int
    num_outputs: int

    @property
    def num_constraints(self) -> int:
        return len(self.A)

    def witness_vector(self, witness: Witness) -> list[int]:
        return [1 if kind == "one" else witness.values[g] for kind, g in self.column_sources]

    def dense(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        mats = []
        for sparse in (self.A, self.B, self.C):
            m = np.zeros((self.num_constraints, self.num_columns), dtype=object)
            for i, row in enumerate(sparse):
                for c, v in row.items():
                    m[i, c] = v
            mats.append(m)
        return tuple(mats)

    def scope_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for s in self.row_scopes:
            out[s] = out.get(s, 0) + 1
        return out

    def to_dict(self) -> dict:
        def triples(m):
            return [[i, c, to_hex(v)] for i, row in enumerate(m) for c, v in sorted(row.items())]

        return {
            "format": "r1cs",
            "num_constraints": self.num_constraints,
            "num_columns": self.num_columns,
            "columns": self.column_names,
            "A": triples(self.A),
            "B": triples(self.B),
            "C": triples(self.C),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def lower_to_r1cs(circuit: Circuit) -> R1CSSystem:
    gates = circuit.gates
    checked = set(circuit.zero_checks)
    lcs: list[LC | None] = [None] * len(gates)
    rows: list[list] = []  # [A, B, C, label, scope]
    nonlinear: list[int] = []
    nonlinear_set: set[int] = set()

    for gid, g in enumerate(gates):
        k = g.kind
        handled = False
        if k == "input":
            lc = {gid: 1}
        elif k == "constant":
            c = g.const % P
            lc = {ONE: c} if c else {}
        elif k == "add":
            lc = _lc_add(lcs[g.operands[0]], lcs[g.operands[1]])
        else:
            la, lb = lcs[g.operands[0]], lcs[g.operands[1]]
            ka, kb = _lc_const(la), _lc_const(lb)
            if ka is not None:
                lc = _lc_scale(lb, ka)
            elif kb is not None:
                lc = _lc_scale(la, kb)
            elif gid in checked:
                rows.append([la, lb, {}, g.label, g.scope])
                lc, handled = {}, True
            else:
                rows.append([la, lb, {gid: 1}, g.label, g.scope])
                lc = {gid: 1}
                nonlinear.append(gid)
                nonlinear_set.add(gid)
        if gid in checked and not handled:
            rows.append([lc, {ONE: 1}, {}, g.label, g.scope])
        lcs[gid] = lc

    # outputs: reuse a mul column, fold into a mul constraint, or bind
    subs: dict[int, LC] = {}
    claimed: set[int] = set()
    out_symbols: list[int] = []
    out_source: dict[int, int] = {}
    for k, gid in enumerate(circuit.outputs):
        lc = _substitute(lcs[gid], subs)
        if len(lc) == 1:
            (s, v), = lc.items()
            if v == 1 and s in nonlinear_set and s not in claimed:
                claimed.add(s)
                out_symbols.append(s)
                continue
        y = -(2 + k)
        out_source[y] = gid
        out_symbols.append(y)
        candidates = [s for s in lc if s in nonlinear_set and s not in claimed]
        if candidates:
            m = max(candidates)
            ic = inv_int(lc[m])
            expr = {y: ic}
            for s, v in lc.items():
                if s != m:
                    expr[s] = (-v * ic) % P
            subs[m] = expr
            claimed.add(m)
        else:
            g = gates[gid]
            rows.append([lc, {ONE: 1}, {y: 1}, g.label, g.scope])

    if subs:
        keys = subs.keys()
        for row in rows:
            for j in range(3):
                if keys & row[j].keys():
                    row[j] = _substitute(row[j], subs)

    inputs = circuit.input_ids
    internal = [s for s in nonlinear if s not in claimed]
    order = [ONE] + inputs + internal + out_symbols
    col = {s: i for i, s in enumerate(order)}
    sources: list[tuple[str, int]] = []
    names: list[str] = []
    for s in order:
        if s == ONE:
            sources.append(("one", 0))
            names.append("1")
        elif s >= 0:
            sources.append(("gate", s))
            names.append(gates[s].label or f"w{s}")
        else:
            sources.append(("gate", out_source[s]))
            names.append(circuit.output_names[-s - 2])
    for s, k in zip(out_symbols, range(len(out_symbols))):
        names[col[s]] = circuit.output_names[k]

    def remap(lc: LC) -> dict[int, int]:
        return {col[s]: v for s, v in lc.items()}

    return R1CSSystem(
        A=[remap(r[0]) for r in rows],
        B=[remap(r[1]) for r in rows],
        C=[remap(r[2]) for r in rows],
        num_columns=len(order),
        column_sources=sources,
        column_names=names,
        row_labels=[r[3] for r in rows],
        row_scopes=[r[4] for r in rows],
        num_inputs=len(inputs),
        num_internal=len(internal),
        num_outputs=len(out_symbols),
    )


def r1cs_violations(system: R1CSSystem, r: Sequence[int]) -> list[int]:
    bad = []
    for i, (a, b, c) in enumerate(zip(system.A, system.B, system.C)):
        if (_lc_eval(a, r) * _lc_eval(b, r) - _lc_eval(c, r)) % P:
            bad.append(i)
    return bad


# -- Plonkish ---------------------------------------------------------------


@dataclass(frozen=True)
class PlonkRow:
    x_l: int | None
    x_r: int | None
    x_o: int | None
    q_l: int = 0
    q_r: int = 0
    q_m: int = 0
    q_c: int = 0
    q_o: int = 0
    label: str | None = None
    scope: str = ""

    @property
    def selectors(self) -> tuple[int, int, int, int, int]:
        """(Q_l, Q_r, Q_m, Q_c, Q_o) as signed small ints where possible."""

        def signed(v):
            return v - P if v > P // 2 else v

        return tuple(signed(v) for v in (self.q_l, self.q_r, self.q_m, self.q_c, self.q_o))


Cell = tuple[int, int]  # (row, column) with column 0 = x_l, 1 = x_r, 2 = x_o


@dataclass
class PlonkishSystem:
    rows: list[PlonkRow]
    copy_constraints: list[tuple[Cell, Cell]]

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def num_constraints(self) -> int:
        return len(self.rows)

    def assign(self, witness: Witness) -> list[list[int]]:
        v = witness.values
        return [[0 if w is None else v[w] for w in (row.x_l, row.x_r, row.x_o)] for row in self.rows]

    def scope_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rows:
            out[r.scope] = out.get(r.scope, 0) + 1
        return out

    def to_dict(self) -> dict:
        return {
            "format": "plonkish",
            "num_rows": self.num_rows,
            "rows": [
                {
                    "x_l": r.x_l,
                    "x_r": r.x_r,
                    "x_o": r.x_o,
                    "q_l": to_hex(r.q_l),
                    "q_r": to_hex(r.q_r),
                    "q_m": to_hex(r.q_m),
                    "q_c": to_hex(r.q_c),
                    "q_o": to_hex(r.q_o),
                    **({"label": r.label} if r.label else {}),
                }
                for r in self.rows
            ],
            "copy_constraints": [[list(a), list(b)] for a, b in self.copy_constraints],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def lower_to_plonkish(circuit: Circuit) -> PlonkishSystem:
    """One row per add/mul/constant gate; zero-checked gates get ``Q_o = 0``."""
    checked = set(circuit.zero_checks)
    neg1 = P - 1
    rows: list[PlonkRow] = []
    for gid, g in enumerate(circuit.gates):
        chk = gid in checked
        x_o, q_o = (None, 0) if chk else (gid, neg1)
        if g.kind == "add":
            a, b = g.operands
            rows.append(PlonkRow(a, b, x_o, q_l=1, q_r=1, q_o=q_o, label=g.label, scope=g.scope))
        elif g.kind == "mul":
            a, b = g.operands
            rows.append(PlonkRow(a, b, x_o, q_m=1, q_o=q_o, label=g.label, scope=g.scope))
        elif g.kind == "constant":
            rows.append(PlonkRow(None, None, x_o, q_c=g.const % P, q_o=q_o, label=g.label, scope=g.scope))
        elif chk:
            rows.append(PlonkRow(gid, None, None, q_l=1, label=g.label, scope=g.scope))
    seen: dict[int, Cell] = {}
    copies: list[tuple[Cell, Cell]] = []
    for i, row in enumerate(rows):
        for j, w in enumerate((row.x_l, row.x_r, row.x_o)):
            if w is None:
                continue
            if w in seen:
                copies.append((seen[w], (i, j)))
            seen[w] = (i, j)
    return PlonkishSystem(rows, copies)


def plonkish_violations(system: PlonkishSystem, cells: Sequence[Sequence[int]]) -> tuple[list[int], list[int]]:
    bad_rows, bad_copies = [], []
    for i, (row, (vl, vr, vo)) in enumerate(zip(system.rows, cells)):
        if (row.q_l * vl + row.q_r * vr + row.q_m * vl * vr + row.q_c + row.q_o * vo) % P:
            bad_rows.append(i)
    for k, ((ra, ca), (rb, cb)) in enumerate(system.copy_constraints):
        if cells[ra][ca] % P != cells[rb][cb] % P:
            bad_copies.append(k)
    return bad_rows, bad_copies


# -- checks -----------------------------------------------------------------


def check_satisfied(system: Union[R1CSSystem, PlonkishSystem], witness) -> bool:
    """True iff every row equation (and, for Plonkish, every copy constraint) holds.

    ``witness`` is a :class:`Witness`, or the system-native assignment: the
    column vector for R1CS, the per-row ``[x_l, x_r, x_o]`` cells for Plonkish.
    """
    if isinstance(system, R1CSSystem):
        r = system.witness_vector(witness) if isinstance(witness, Witness) else [fe(x).value for x in witness]
        if len(r) != system.num_columns:
            raise ShapeError(f"witness has {len(r)} entries, system has {system.num_columns} columns")
        if r[0] != 1:
            return False
        return not r1cs_violations(system, r)
    if isinstance(system, PlonkishSystem):
        cells = system.assign(witness) if isinstance(witness, Witness) else witness
        if len(cells) != system.num_rows or any(len(c) != 3 for c in cells):
            raise ShapeError(f"assignment needs {system.num_rows} rows of 3 cells")
        bad_rows, bad_copies = plonkish_violations(system, cells)
        return not bad_rows and not bad_copies
    raise TypeError(f"unsupported system type {type(system).__name__}")


def circuit_power(num_constraints: int) -> int:
    """Smallest k with ``num_constraints <= 2^k``."""
    if num_constraints < 1:
        raise FieldError("circuit power is undefined for fewer than one constraint")
    return (num_constraints - 1).bit_length()


def fig2_circuit() -> Circuit:
    """The worked example ``y = (x1 + x2) * (x3 * x4)`` with the figure's gate labels."""
    b = CircuitBuilder()
    x1, x2, x3, x4 = (b.input(f"x{i}") for i in range(1, 5))
    x6 = b.add(x1, x2, label="Add")
    x5 = b.mul(x3, x4, label="Mul.2")
    y = b.mul(x6, x5, label="Mul.1")
    b.output(y, "y")
    return b.build()
