"""Permutation parameter sets: schema, validation, deterministic generation, JSON I/O."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

from ..field import P, FieldError, check_exponent, from_hex, inv_int, to_hex

HASHES = ("mimc", "gmimc", "poseidon", "poseidon2", "neptune")

# name -> (t, d, rounds_full, rounds_partial)
DEFAULT_SHAPES = {
    "mimc": (2, 5, 220, 0),
    "gmimc": (4, 5, 226, 0),
    "poseidon": (3, 5, 8, 57),
    "poseidon2": (3, 5, 8, 56),
    "neptune": (4, 5, 6, 68),
}

REQUIRED_MATRICES = {
    "mimc": (),
    "gmimc": (),
    "poseidon": ("mds",),
    "poseidon2": ("external", "internal"),
    "neptune": ("external", "internal"),
}

FEISTEL = ("mimc", "gmimc")

# 4x4 block used by the Poseidon2-style external layers.
M4 = ((5, 7, 1, 3), (4, 6, 1, 1), (1, 3, 5, 7), (1, 1, 4, 6))


class ParameterError(ValueError):
    """A parameter set violates one of the PermutationSpec invariants."""


class ArityError(ValueError):
    pass


def canonical_name(name: str) -> str:
    key = name.strip().lower()
    if key not in HASHES:
        raise ParameterError(f"unsupported hash {name!r}; expected one of {', '.join(HASHES)}")
    return key


@dataclass(frozen=True)
class PermutationSpec:
    """Full parameterization of one permutation.

    Constants and matrix entries are canonical residues held as ints.  For
    the Feistel constructions (MiMC, GMiMC) ``rounds_full`` is the round
    count and each constant row has a single entry.  For the Poseidon family
    every row has ``t`` entries; partial rounds of Poseidon2/Neptune only use
    the first one.
    """

    name: str
    t: int
    d: int
    rounds_full: int
    rounds_partial: int
    round_constants: tuple[tuple[int, ...], ...]
    linear_layers: Mapping[str, tuple[tuple[int, ...], ...]] = field(default_factory=dict)

    @property
    def total_rounds(self) -> int:
        return self.rounds_full + self.rounds_partial

    @property
    def sbox_count(self) -> int:
        """S-box applications in one permutation call."""
        if self.name in FEISTEL:
            return self.rounds_full
        return self.rounds_full * self.t + self.rounds_partial

    @cached_property
    def kernel_constants(self):
        from ._backend import to_fast

        return tuple(tuple(to_fast(c) for c in row) for row in self.round_constants)

    @cached_property
    def kernel_matrices(self):
        from ._backend import to_fast

        return {
            k: tuple(tuple(to_fast(c) for c in row) for row in m) for k, m in self.linear_layers.items()
        }

    def validate(self) -> "PermutationSpec":
        validate(self)
        return self

    def with_constant(self, row: int, col: int, value: int) -> "PermutationSpec":
        rows = [list(r) for r in self.round_constants]
        rows[row][col] = value % P
        return PermutationSpec(
            self.name,
            self.t,
            self.d,
            self.rounds_full,
            self.rounds_partial,
            tuple(tuple(r) for r in rows),
            dict(self.linear_layers),
        )


@dataclass(frozen=True)
class SpongeConfig:
    """Fixed-arity sponge: absorb ``rate`` elements per call, no padding."""

    rate: int
    capacity: int
    padding: str = "none"

    @property
    def width(self) -> int:
        return self.rate + self.capacity

    def check(self, spec: PermutationSpec) -> None:
        if self.rate < 1 or self.capacity < 0:
            raise ParameterError("sponge rate must be >= 1 and capacity >= 0")
        if self.rate + self.capacity != spec.t:
            raise ParameterError(f"rate + capacity = {self.rate + self.capacity} != t = {spec.t}")
        if self.padding != "none":
            raise ParameterError(f"unsupported padding rule {self.padding!r}")


def default_sponge(spec: PermutationSpec) -> SpongeConfig:
    return SpongeConfig(rate=spec.t - 1, capacity=1)


# -- linear algebra mod p ---------------------------------------------------


def det_mod(matrix, p: int = P) -> int:
    """Determinant over F_p by Gaussian elimination."""
    a = [[x % p for x in row] for row in matrix]
    n = len(a)
    det = 1
    for c in range(n):
        pivot = next((r for r in range(c, n) if a[r][c]), None)
        if pivot is None:
            return 0
        if pivot != c:
            a[c], a[pivot] = a[pivot], a[c]
            det = -det
        det = det * a[c][c] % p
        iv = inv_int(a[c][c], p)
        for r in range(c + 1, n):
            f = a[r][c] * iv % p
            if f:
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[c])]
    return det % p


def validate(spec: PermutationSpec) -> None:
    name = spec.name
    if name not in HASHES:
        raise ParameterError(f"unsupported hash {name!r}")
    try:
        check_exponent(spec.d)
    except FieldError as exc:
        raise ParameterError(f"exponent: {exc}") from None
    if spec.t < 2:
        raise ParameterError(f"width t must be >= 2, got {spec.t}")
    if name == "mimc" and spec.t != 2:
        raise ParameterError("MiMC Feistel requires t = 2")
    if name in FEISTEL:
        if spec.rounds_partial != 0:
            raise ParameterError(f"{name} has no partial rounds")
        if spec.rounds_full < 1:
            raise ParameterError("round count must be >= 1")
        width = 1
    else:
        if spec.rounds_full < 2 or spec.rounds_full % 2:
            raise ParameterError("full rounds must be a positive even number")
        if spec.rounds_partial < 0:
            raise ParameterError("partial round count must be >= 0")
        width = spec.t
    if len(spec.round_constants) != spec.total_rounds:
        raise ParameterError(
            f"constant count: {len(spec.round_constants)} rows for {spec.total_rounds} scheduled rounds"
        )
    for i, row in enumerate(spec.round_constants):
        if len(row) != width:
            raise ParameterError(f"constant row {i} has {len(row)} entries, expected {width}")
        for c in row:
            if not 0 <= c < P:
                raise ParameterError(f"constant in row {i} is not a reduced field element")
    required = REQUIRED_MATRICES[name]
    missing = [m for m in required if m not in spec.linear_layers]
    if missing:
        raise ParameterError(f"missing linear layer(s): {', '.join(missing)}")
    for mname, m in spec.linear_layers.items():
        if len(m) != spec.t or any(len(row) != spec.t for row in m):
            raise ParameterError(f"matrix {mname!r} is not {spec.t}x{spec.t}")
        if any(not 0 <= x < P for row in m for x in row):
            raise ParameterError(f"matrix {mname!r} has unreduced entries")
        if det_mod(m) == 0:
            raise ParameterError(f"matrix {mname!r} is singular over F_p")


# -- deterministic generation ------------------------------------------------


def _field_from_tag(tag: str) -> int:
    """Rejection-sample one field element from a SHAKE-256 stream keyed by ``tag``."""
    n = 8
    while True:
        stream = hashlib.shake_256(tag.encode("ascii")).digest(32 * n)
        for k in range(n):
            v = int.from_bytes(stream[32 * k : 32 * (k + 1)], "big") & ((1 << 254) - 1)
            if v < P:
                return v
        n *= 2


def _constant(name: str, t: int, r: int, j: int, seed: int) -> int:
    return _field_from_tag(f"{name}|{P}|{t}|{r}|{j}|seed={seed}")


def _circulant(first_row) -> tuple[tuple[int, ...], ...]:
    n = len(first_row)
    return tuple(tuple(first_row[(j - i) % n] for j in range(n)) for i in range(n))


def _external_matrix(t: int) -> tuple[tuple[int, ...], ...]:
    if t == 2:
        return _circulant((2, 1))
    if t == 3:
        return _circulant((2, 1, 1))
    if t % 4:
        raise ParameterError(f"external layer undefined for t = {t}")
    k = t // 4
    rows = []
    for bi in range(k):
        for i in range(4):
            row = []
            for bj in range(k):
                scale = 2 if bi == bj else 1
                row.extend(scale * M4[i][j] for j in range(4))
            rows.append(tuple(row))
    return tuple(rows)


def _internal_matrix(name: str, t: int, seed: int) -> tuple[tuple[int, ...], ...]:
    if t == 2:
        diag = (1, 2)
    elif t == 3:
        diag = (1, 1, 2)
    else:
        attempt = 0
        while True:
            diag = tuple(
                _field_from_tag(f"{name}|{P}|{t}|internal|{i}|{attempt}|seed={seed}") for i in range(t)
            )
            m = tuple(tuple((1 + (diag[i] if i == j else 0)) % P for j in range(t)) for i in range(t))
            if det_mod(m):
                return m
            attempt += 1
    return tuple(tuple(1 + (diag[i] if i == j else 0) for j in range(t)) for i in range(t))


def _cauchy(t: int) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(inv_int(i + (t + j)) for j in range(t)) for i in range(t))


def generate_params(
    name: str,
    seed: int = 0,
    *,
    t: int | None = None,
    d: int | None = None,
    rounds_full: int | None = None,
    rounds_partial: int | None = None,
) -> PermutationSpec:
    """Build a validated parameter set, deterministic in (name, seed, p, t, rounds)."""
    name = canonical_name(name)
    t0, d0, rf0, rp0 = DEFAULT_SHAPES[name]
    t = t0 if t is None else t
    d = d0 if d is None else d
    rf = rf0 if rounds_full is None else rounds_full
    rp = rp0 if rounds_partial is None else rounds_partial
    total = rf + rp
    if name in FEISTEL:
        consts = tuple((_constant(name, t, r, 0, seed),) for r in range(total))
        layers: dict = {}
    else:
        half = rf // 2
        rows = []
        for r in range(total):
            partial = half <= r < half + rp
            if partial and name != "poseidon":
                rows.append((_constant(name, t, r, 0, seed),) + (0,) * (t - 1))
            else:
                rows.append(tuple(_constant(name, t, r, j, seed) for j in range(t)))
        consts = tuple(rows)
        if name == "poseidon":
            layers = {"mds": _cauchy(t)}
        else:
            layers = {"external": _external_matrix(t), "internal": _internal_matrix(name, t, seed)}
    return PermutationSpec(name, t, d, rf, rp, consts, layers).validate()


# -- file I/O ---------------------------------------------------------------


def spec_to_dict(spec: PermutationSpec) -> dict:
    return {
        "name": spec.name,
        "t": spec.t,
        "d": spec.d,
        "rounds_full": spec.rounds_full,
        "rounds_partial": spec.rounds_partial,
        "constants": [[to_hex(c) for c in row] for row in spec.round_constants],
        "matrices": {k: [[to_hex(x) for x in row] for row in m] for k, m in spec.linear_layers.items()},
    }


def spec_from_dict(doc: Mapping) -> PermutationSpec:
    try:
        name = canonical_name(doc["name"])
        spec = PermutationSpec(
            name=name,
            t=int(doc["t"]),
            d=int(doc["d"]),
            rounds_full=int(doc["rounds_full"]),
            rounds_partial=int(doc["rounds_partial"]),
            round_constants=tuple(tuple(from_hex(c).value for c in row) for row in doc["constants"]),
            linear_layers={
                k: tuple(tuple(from_hex(x).value for x in row) for row in m)
                for k, m in doc.get("matrices", {}).items()
            },
        )
    except KeyError as exc:
        raise ParameterError(f"parameter file is missing field {exc.args[0]!r}") from None
    except FieldError as exc:
        raise ParameterError(f"bad field element in parameter file: {exc}") from None
    return spec.validate()


def save_params(spec: PermutationSpec, path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=1) + "\n")


def load_params(path) -> PermutationSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: not valid JSON ({exc})") from None
    return spec_from_dict(doc)


@lru_cache(maxsize=None)
def default_spec(name: str) -> PermutationSpec:
    """The shipped parameter set for ``name`` (package data, generated with seed 0)."""
    name = canonical_name(name)
    ref = resources.files("zkhashlab").joinpath("data", "params", f"{name}.json")
    return spec_from_dict(json.loads(ref.read_text()))


def load_spec(name: str, params_dir=None) -> PermutationSpec:
    if params_dir is None:
        return default_spec(name)
    return load_params(Path(params_dir) / f"{canonical_name(name)}.json")
