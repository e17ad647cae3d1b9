"""Closed-form constraint counts and gas / fee economics of the batched mixer.

Everything is computed in exact rationals (:class:`fractions.Fraction`);
:func:`sig3` renders a value to three significant figures for reports.

Constraint model, with ``H_c`` the constraints of one hash2 and a fixed
1,815-constraint overhead for the withdraw relation's non-path part::

    n_dep  = H_c * (2^d_slot - 1)
    n_tc   = 1815 + H_c * depth
    n_wit  = 1815 + (H_c + 3) * (d_slot + d_era)        # value-consistent form
    n_wit_simplified = 1815 + H_c * (2^d_slot + d_era)  # the simplified closed form

Gas trade-off surface: only the era insertion inside ``commit`` depends on
``d_era``.  Its per-level price is taken from the baseline's deposit, which
inserts into a depth-20 tree, minus our deposit, which inserts nothing:
``(938,626 - 27,880) / 20`` gas per level.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping

BASE_CONSTRAINTS = 1815
SELECTOR_CONSTRAINTS = 3
REFERENCE_D_SLOT = 5
REFERENCE_D_ERA = 20
GWEI = Fraction(1, 10**9)

_SCHEDULE_KEYS = {
    "deposit": "deposit_gas",
    "commit": "commit_gas",
    "withdraw": "withdraw_gas",
    "baseline_deposit": "baseline_deposit_gas",
    "baseline_withdraw": "baseline_withdraw_gas",
    "batch_size": "batch_size",
}


class ValidationError(ValueError):
    pass


def sig3(x) -> str:
    return format(float(x), ".3g")


def _plain(x: Fraction):
    """JSON-friendly number: an int when integral, else the shortest float."""
    return int(x) if x.denominator == 1 else float(x)


def _require(doc: Mapping, key: str, where: str):
    if key not in doc:
        raise ValidationError(f"{where}: missing field {key!r}")
    return doc[key]


# -- constraints ------------------------------------------------------------


@dataclass(frozen=True)
class ConstraintModel:
    h_c: int
    base: int = BASE_CONSTRAINTS

    @property
    def per_level(self) -> int:
        return self.h_c + SELECTOR_CONSTRAINTS

    @classmethod
    def for_hash(cls, name: str) -> "ConstraintModel":
        """Model whose ``H_c`` is the measured R1CS count of that hash's gadget."""
        from .hash_circuits import build_hash2_gadget
        from .permutations import default_spec

        return cls(build_hash2_gadget(default_spec(name)).r1cs.num_constraints)


MIMC_MODEL = ConstraintModel(1320)
POSEIDON2_MODEL = ConstraintModel(240)


def n_dep(model: ConstraintModel, d_slot: int) -> int:
    if d_slot < 1:
        raise ValueError("d_slot must be >= 1")
    return model.h_c * ((1 << d_slot) - 1)


def n_tc(model: ConstraintModel, depth: int) -> int:
    return model.base + model.h_c * depth


def n_wit(model: ConstraintModel, d_slot: int, d_era: int) -> int:
    """Withdraw constraints, one path level (hash2 + 3) per slot and era level."""
    return model.base + model.per_level * (d_slot + d_era)


def n_wit_simplified(model: ConstraintModel, d_slot: int, d_era: int) -> int:
    return model.base + model.h_c * ((1 << d_slot) + d_era)


def n_new_exact(model: ConstraintModel, d_slot: int, d_era: int) -> int:
    """Withdraw plus deposit relation: ``n_wit + n_dep``."""
    return n_wit(model, d_slot, d_era) + n_dep(model, d_slot)


# -- gas --------------------------------------------------------------------


@dataclass(frozen=True)
class GasSchedule:
    deposit_gas: int = 27_880
    commit_gas: int = 1_135_599
    withdraw_gas: int = 267_964
    baseline_deposit_gas: int = 938_626
    baseline_withdraw_gas: int = 267_998
    batch_size: int = 32

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not isinstance(v, int) or v < 0:
                raise ValidationError(f"{k} must be a nonnegative integer, got {v!r}")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")

    @property
    def baseline_total(self) -> int:
        return self.baseline_deposit_gas + self.baseline_withdraw_gas

    @property
    def total(self) -> int:
        return self.deposit_gas + self.commit_gas + self.withdraw_gas

    def with_batch_size(self, n: int) -> "GasSchedule":
        return replace(self, batch_size=n)

    def to_dict(self) -> dict:
        return {short: getattr(self, attr) for short, attr in _SCHEDULE_KEYS.items()}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "GasSchedule":
        return cls(**{attr: _require(doc, short, "gas schedule") for short, attr in _SCHEDULE_KEYS.items()})

    @classmethod
    def load(cls, path) -> "GasSchedule":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


TABLE2 = GasSchedule()


def amortized_gas(schedule: GasSchedule) -> Fraction:
    """Per-transaction gas with the batch commit split across the batch."""
    return schedule.deposit_gas + Fraction(schedule.commit_gas, schedule.batch_size) + schedule.withdraw_gas


def savings_ratio(schedule: GasSchedule) -> Fraction:
    if schedule.baseline_total <= 0:
        raise ValidationError("baseline gas must be positive")
    return 1 - amortized_gas(schedule) / schedule.baseline_total


def era_level_gas(schedule: GasSchedule, reference_d_era: int = REFERENCE_D_ERA) -> Fraction:
    """Gas of one era-insertion level (see the module notes)."""
    return Fraction(schedule.baseline_deposit_gas - schedule.deposit_gas, reference_d_era)


def commit_gas_at(schedule: GasSchedule, d_era: int, reference_d_era: int = REFERENCE_D_ERA) -> Fraction:
    level = era_level_gas(schedule, reference_d_era)
    return schedule.commit_gas + level * (d_era - reference_d_era)


def tradeoff_surface(
    model: ConstraintModel,
    schedule: GasSchedule,
    d_slots: Iterable[int],
    d_eras: Iterable[int],
    reference: tuple[int, int] = (REFERENCE_D_SLOT, REFERENCE_D_ERA),
) -> list[dict]:
    """Savings over the (d_slot, d_era) grid, normalized so the reference cell is 1.

    ``schedule.commit_gas`` is taken to be the commit cost at the reference
    era depth; the batch size of each cell is ``2^d_slot``.
    """
    d_slots, d_eras = list(d_slots), list(d_eras)
    if not d_slots or not d_eras:
        raise ValidationError("trade-off ranges must be nonempty")

    def cell_savings(ds, de):
        return 1 - amortized_for(schedule, ds, de, reference[1]) / schedule.baseline_total

    ref = cell_savings(*reference)
    rows = []
    for ds in d_slots:
        for de in d_eras:
            sv = cell_savings(ds, de)
            rows.append(
                {
                    "d_slot": ds,
                    "d_era": de,
                    "batch_size": 1 << ds,
                    "commit_gas": commit_gas_at(schedule, de, reference[1]),
                    "amortized_gas": amortized_for(schedule, ds, de, reference[1]),
                    "savings": sv,
                    "normalized": sv / ref,
                    "n_wit": n_wit(model, ds, de),
                    "n_dep": n_dep(model, ds) if ds >= 1 else 0,
                }
            )
    return rows


def amortized_for(schedule: GasSchedule, d_slot: int, d_era: int, reference_d_era: int = REFERENCE_D_ERA) -> Fraction:
    return schedule.deposit_gas + commit_gas_at(schedule, d_era, reference_d_era) / (1 << d_slot) + schedule.withdraw_gas


# -- fees -------------------------------------------------------------------

OPS = ("deposit", "commit", "withdraw", "baseline_deposit", "baseline_withdraw")


@dataclass(frozen=True)
class FeeQuote:
    """Converts operations to native-token and USD fees.

    ``gas`` pricing multiplies gas by ``gas_price_gwei``; ``per_op`` pricing
    (a fee schedule fixed per transaction type) reads the native fee of each
    operation from ``per_op``, where ``commit`` is the per-transaction share.
    Files may give ``usd_per_op`` instead; those are divided by ``native_usd``.
    """

    chain: str
    native: str
    native_usd: Fraction
    gas_price_gwei: Fraction | None = None
    per_op: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.native_usd <= 0:
            raise ValidationError("native_usd must be positive")
        if self.gas_price_gwei is None:
            missing = [op for op in OPS if op not in self.per_op]
            if missing:
                raise ValidationError(f"fee quote {self.chain}: missing per_op field {missing[0]!r}")
        elif self.gas_price_gwei <= 0:
            raise ValidationError("gas_price_gwei must be positive")

    @property
    def pricing(self) -> str:
        return "gas" if self.gas_price_gwei is not None else "per_op"

    @classmethod
    def from_dict(cls, doc: Mapping) -> "FeeQuote":
        where = f"fee quote {doc.get('chain', '?')}"
        native_usd = Fraction(str(_require(doc, "native_usd", where)))
        if "gas_price_gwei" in doc:
            return cls(doc.get("chain", "evm"), doc.get("native", "ETH"), native_usd, Fraction(str(doc["gas_price_gwei"])))
        if "per_op" in doc:
            per_op = {k: Fraction(str(v)) for k, v in doc["per_op"].items()}
        elif "usd_per_op" in doc:  # USD quotes, converted to native units
            per_op = {k: Fraction(str(v)) / native_usd for k, v in doc["usd_per_op"].items()}
        else:
            raise ValidationError(f"{where}: missing field 'gas_price_gwei', 'per_op' or 'usd_per_op'")
        return cls(doc.get("chain", "per-op"), doc.get("native", "HBAR"), native_usd, None, per_op)

    @classmethod
    def load(cls, path) -> "FeeQuote":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        doc = {"chain": self.chain, "native": self.native, "native_usd": _plain(self.native_usd)}
        if self.gas_price_gwei is not None:
            doc["gas_price_gwei"] = _plain(self.gas_price_gwei)
        else:
            doc["per_op"] = {k: _plain(v) for k, v in self.per_op.items()}
        return doc

    def native_fee(self, op: str, schedule: GasSchedule) -> Fraction:
        """Native-token fee of one operation, per transaction (commit amortized)."""
        if op not in OPS:
            raise ValueError(f"unknown operation {op!r}")
        if self.gas_price_gwei is None:
            return self.per_op[op]
        gas = getattr(schedule, f"{op}_gas")
        if op == "commit":
            gas = Fraction(gas, schedule.batch_size)
        return gas * self.gas_price_gwei * GWEI

    def usd_fee(self, op: str, schedule: GasSchedule) -> Fraction:
        return self.native_fee(op, schedule) * self.native_usd


ETHEREUM = FeeQuote("ethereum", "ETH", Fraction(3251), Fraction(10))
BNB_CHAIN = FeeQuote("bnb", "BNB", Fraction(609), Fraction(10))
HEDERA = FeeQuote(
    "hedera",
    "HBAR",
    Fraction("0.14"),
    None,
    {
        "deposit": Fraction("0.53"),
        "commit": Fraction("0.03"),
        "withdraw": Fraction("0.58"),
        "baseline_deposit": Fraction("0.96"),
        "baseline_withdraw": Fraction("0.58"),
    },
)
DEFAULT_QUOTES = (ETHEREUM, HEDERA, BNB_CHAIN)


def per_tx_fee(quote: FeeQuote, schedule: GasSchedule) -> Fraction:
    return sum(quote.native_fee(op, schedule) for op in ("deposit", "commit", "withdraw"))


def baseline_fee(quote: FeeQuote, schedule: GasSchedule) -> Fraction:
    return quote.native_fee("baseline_deposit", schedule) + quote.native_fee("baseline_withdraw", schedule)


def quote_savings(quote: FeeQuote, schedule: GasSchedule) -> Fraction:
    return 1 - per_tx_fee(quote, schedule) / baseline_fee(quote, schedule)


def fee_table(schedule: GasSchedule, quotes: Iterable[FeeQuote] = DEFAULT_QUOTES) -> list[dict]:
    """Rows shaped like the gas/fee comparison table: one gas row, one row per chain."""
    rows = [
        {
            "chain": "gas",
            "unit": "gas",
            "baseline_deposit": Fraction(schedule.baseline_deposit_gas),
            "baseline_withdraw": Fraction(schedule.baseline_withdraw_gas),
            "baseline_total": Fraction(schedule.baseline_total),
            "deposit": Fraction(schedule.deposit_gas),
            "commit": Fraction(schedule.commit_gas),
            "withdraw": Fraction(schedule.withdraw_gas),
            "total": Fraction(schedule.total),
            "amortized": amortized_gas(schedule),
            "savings": savings_ratio(schedule),
        }
    ]
    for q in quotes:
        unit = "gwei" if q.pricing == "gas" else q.native
        scale = 1 / GWEI if q.pricing == "gas" else 1
        row = {"chain": q.chain, "unit": unit}
        for op in ("baseline_deposit", "baseline_withdraw", "deposit", "commit", "withdraw"):
            row[op] = q.native_fee(op, schedule) * scale
        row["baseline_total"] = baseline_fee(q, schedule) * scale
        row["total"] = row["amortized"] = per_tx_fee(q, schedule) * scale
        row["amortized_usd"] = per_tx_fee(q, schedule) * q.native_usd
        row["baseline_usd"] = baseline_fee(q, schedule) * q.native_usd
        row["savings"] = quote_savings(q, schedule)
        rows.append(row)
    return rows
