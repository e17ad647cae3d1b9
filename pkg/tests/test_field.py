import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import P as ORACLE_P
from oracles import egcd_inverse, square_and_multiply
from zkhashlab import field as F
from zkhashlab.field import P, FieldElement, FieldError, FieldZeroDivisionError

elements = st.integers(min_value=0, max_value=P - 1)
rng = random.Random(1234)


def test_modulus_is_the_bn254_scalar_prime():
    assert P == ORACLE_P
    assert P == 21888242871839275222246405745257275088548364400416034343698204186575808495617


def test_values_are_reduced_and_compare_by_residue():
    assert FieldElement(P).value == 0
    assert FieldElement(-1).value == P - 1
    assert FieldElement(P + 5) == FieldElement(5)
    assert FieldElement(7) == 7
    assert FieldElement(7) != FieldElement(8)
    assert hash(FieldElement(P + 1)) == hash(FieldElement(1))


def test_field_elements_are_immutable():
    x = FieldElement(3)
    with pytest.raises(AttributeError):
        x._value = 4


def test_add_examples():
    x = FieldElement(rng.randrange(P))
    assert F.add(FieldElement(0), x) == x
    assert F.add(FieldElement(P - 1), FieldElement(1)) == 0


def test_mul_examples():
    x = FieldElement(rng.randrange(P))
    assert F.mul(FieldElement(1), x) == x
    assert F.mul(FieldElement(0), x) == 0


def test_add_mul_match_big_integer_oracle():
    for _ in range(1000):
        a, b = rng.randrange(P), rng.randrange(P)
        assert F.add(FieldElement(a), FieldElement(b)).value == (a + b) % ORACLE_P
        assert F.mul(FieldElement(a), FieldElement(b)).value == (a * b) % ORACLE_P
        assert F.sub(FieldElement(a), FieldElement(b)).value == (a - b) % ORACLE_P


def test_mismatched_modulus_is_a_domain_error(monkeypatch):
    monkeypatch.setitem(F._MODULI, "toy-97", 97)
    a, b = FieldElement(3), FieldElement(3, "toy-97")
    with pytest.raises(FieldError):
        F.add(a, b)
    with pytest.raises(FieldError):
        F.mul(a, b)
    assert a != b


def test_unknown_modulus_id_rejected():
    with pytest.raises(FieldError):
        FieldElement(1, "nope")


def test_pow_examples():
    x = FieldElement(rng.randrange(P))
    assert F.pow(x, 1) == x
    assert F.pow(FieldElement(2), 5) == 32
    with pytest.raises(FieldError):
        F.pow(x, 0)


def test_pow_matches_square_and_multiply():
    for _ in range(1000):
        a, e = rng.randrange(P), rng.choice((3, 5, 7))
        assert F.pow(FieldElement(a), e).value == square_and_multiply(a, e)


def test_pow_without_a_fixed_chain_falls_back():
    a = rng.randrange(P)
    assert F.pow(FieldElement(a), 11).value == square_and_multiply(a, 11)


@pytest.mark.parametrize("e, cost", [(5, 3), (7, 4)])
def test_addition_chain_costs_are_normative(e, cost):
    assert F.chain_cost(e) == cost
    chain = F.ADDITION_CHAINS[e]
    # replay the chain on exponents rather than values
    exps = [1]
    for i, j in chain:
        exps.append(exps[i] + exps[j])
    assert exps[-1] == e


def test_x7_chain_is_x2_x4_x6_x7():
    exps = [1]
    for i, j in F.ADDITION_CHAINS[7]:
        exps.append(exps[i] + exps[j])
    assert exps == [1, 2, 4, 6, 7]


def test_inverse():
    assert F.inv(FieldElement(1)) == 1
    for _ in range(1000):
        x = FieldElement(rng.randrange(1, P))
        assert x * F.inv(x) == 1
    for _ in range(100):
        a = rng.randrange(1, P)
        assert F.inv(FieldElement(a)).value == egcd_inverse(a)
    with pytest.raises(FieldZeroDivisionError):
        F.inv(FieldElement(0))
    with pytest.raises(ZeroDivisionError):
        FieldElement(5) / 0


def test_division_and_negation():
    a, b = FieldElement(rng.randrange(P)), FieldElement(rng.randrange(1, P))
    assert (a / b) * b == a
    assert -a + a == 0
    assert 3 - FieldElement(5) == P - 2


def test_check_exponent():
    F.check_exponent(5)
    F.check_exponent(7)
    with pytest.raises(FieldError):
        F.check_exponent(3)  # 3 divides p - 1
    with pytest.raises(FieldError):
        F.check_exponent(1)


def test_bytes_round_trip_and_strictness():
    assert F.from_bytes(bytes(32)) == 0
    for _ in range(1000):
        b = rng.randrange(P).to_bytes(32, "big")
        assert F.to_bytes(F.from_bytes(b)) == b
    with pytest.raises(FieldError):
        F.from_bytes(P.to_bytes(32, "big"))
    with pytest.raises(FieldError):
        F.from_bytes(bytes(31))


def test_hex_round_trip_and_strictness():
    x = FieldElement(rng.randrange(P))
    h = F.to_hex(x)
    assert h.startswith("0x") and len(h) == 66
    assert F.from_hex(h) == x
    assert F.from_hex(h[2:]) == x
    assert F.from_hex("0x01") == 1
    for bad in ("", "0x", "0xzz", "0x1_0", "+12", hex(P), "0x" + "1" * 65):
        with pytest.raises(FieldError):
            F.from_hex(bad)


@settings(max_examples=300, deadline=None)
@given(elements, elements, elements)
def test_field_axioms(a, b, c):
    x, y, z = FieldElement(a), FieldElement(b), FieldElement(c)
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x + y == y + x
    assert x * y == y * x
    assert x * (y + z) == x * y + x * z
    assert ((x * (y + z)).value) == (a * (b + c)) % ORACLE_P


def test_field_axioms_on_10k_random_triples():
    for _ in range(10_000):
        a, b, c = rng.randrange(P), rng.randrange(P), rng.randrange(P)
        x, y, z = FieldElement(a), FieldElement(b), FieldElement(c)
        assert (x * (y + z)).value == (a * (b + c)) % ORACLE_P
        assert ((x + y) * z).value == (x * z + y * z).value
