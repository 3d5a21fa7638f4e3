import random

import pytest
from cryptography.hazmat.primitives.asymmetric import ec as crypto_ec
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from curvepow import ec
from curvepow.ec import INFINITY, Affine, CurveParams, FieldElement
from curvepow.errors import DivisionByZero, InvalidPoint, SingularCurve, TooLarge

SECP256K1 = CurveParams(2**256 - 2**32 - 977, 0, 7)
SECP256K1_G = Affine(
    0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798,
    0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8,
)
P256_P = 2**256 - 2**224 + 2**192 + 2**96 - 1
P256 = CurveParams(P256_P, P256_P - 3, 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B)
P256_G = Affine(
    0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296,
    0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5,
)


def oracle_add(p, a, P, Q):
    # textbook affine formulas, written independently of the library
    if P is None:
        return Q
    if Q is None:
        return P
    if P[0] == Q[0] and (P[1] + Q[1]) % p == 0:
        return None
    if P == Q:
        lam = (3 * P[0] * P[0] + a) * pow(2 * P[1], p - 2, p) % p
    else:
        lam = (Q[1] - P[1]) * pow(Q[0] - P[0], p - 2, p) % p
    x = (lam * lam - P[0] - Q[0]) % p
    return (x, (lam * (P[0] - x) - P[1]) % p)


def oracle_count(p, a, b):
    n = 1
    for x in range(p):
        r = (x**3 + a * x + b) % p
        n += 1 if r == 0 else (2 if pow(r, (p - 1) // 2, p) == 1 else 0)
    return n


def all_points(E):
    pts = [None]
    for x in range(E.p):
        for y in range(E.p):
            if (y * y - E.rhs(x)) % E.p == 0:
                pts.append(Affine(x, y))
    return pts


# -- field elements --------------------------------------------------------------


def test_field_ops():
    a, b = FieldElement(5, 97), FieldElement(20, 97)
    assert (a + b).value == 25
    assert (a - b).value == 82
    assert (a * b).value == 3
    assert (a / b * b) == a
    assert (-a).value == 92
    assert (a**-1 * a).value == 1
    assert int(a**96) == 1


def test_field_inverse_of_zero():
    with pytest.raises(DivisionByZero):
        FieldElement(0, 97).inverse()


def test_field_mixed_moduli():
    with pytest.raises(ValueError):
        FieldElement(1, 97) + FieldElement(1, 101)


@given(st.integers(min_value=0, max_value=2**61 - 2))
def test_sqrt_mod_p(v):
    p = 2**61 - 1
    roots = ec.sqrt_mod_p(FieldElement(v, p))
    if v == 0:
        assert roots == (FieldElement(0, p),)
    elif pow(v, (p - 1) // 2, p) != 1:
        assert roots is None
    else:
        r1, r2 = roots
        assert (r1 * r1).value == v and (r1 + r2).value == 0


# -- curves ----------------------------------------------------------------------


def test_singular_curve_rejected():
    with pytest.raises(SingularCurve):
        CurveParams(97, 0, 0)
    assert ec.is_singular(97, 0, 0)
    # 4*(-3)^3 + 27*2^2 = 0
    with pytest.raises(SingularCurve):
        CurveParams(101, 101 - 3, 2)


def test_curve_requires_prime_modulus():
    with pytest.raises(ValueError):
        CurveParams(91, 1, 1)


def test_order_not_part_of_equality(small_curve):
    assert small_curve.with_order(100) == small_curve


def test_group_law_exhaustive(small_curve):
    E = small_curve
    pts = all_points(E)
    assert len(pts) == oracle_count(97, 2, 3)
    rnd = random.Random(3)
    for _ in range(400):
        P, Q, R = rnd.choice(pts), rnd.choice(pts), rnd.choice(pts)
        S = ec.point_add(E, P, Q)
        assert S == oracle_add(97, 2, P, Q)
        assert S == ec.point_add(E, Q, P)
        assert ec.point_add(E, S, R) == ec.point_add(E, P, ec.point_add(E, Q, R))
        assert ec.point_add(E, P, ec.point_neg(E, P)) is INFINITY
        assert ec.point_add(E, P, INFINITY) == P


def test_two_torsion_point_doubles_to_infinity():
    # x^3 + x over F_13 vanishes at x = 0, so (0, 0) has order 2
    E = CurveParams(13, 1, 0)
    assert ec.point_add(E, Affine(0, 0), Affine(0, 0)) is INFINITY
    assert ec.point_neg(E, Affine(0, 0)) == Affine(0, 0)


def test_off_curve_point_rejected(small_curve):
    with pytest.raises(InvalidPoint):
        ec.point_add(small_curve, Affine(0, 0), None)
    with pytest.raises(InvalidPoint):
        ec.scalar_mul(small_curve, 3, Affine(1, 1))


def test_scalar_mul_edge_cases(small_curve):
    E = small_curve
    P = ec.random_point(E, random.Random(1))
    assert ec.scalar_mul(E, 0, P) is INFINITY
    assert ec.scalar_mul(E, 1, P) == P
    assert ec.scalar_mul(E, 5, INFINITY) is INFINITY
    assert ec.scalar_mul(E, ec.count_points_naive(E), P) is INFINITY
    with pytest.raises(ValueError):
        ec.scalar_mul(E, -1, P)


@given(st.integers(min_value=1, max_value=2**256))
@settings(max_examples=25, deadline=None)
def test_scalar_mul_matches_cryptography_secp256k1(k):
    n = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
    assume(k % n)
    pub = crypto_ec.derive_private_key(k % n, crypto_ec.SECP256K1()).public_key().public_numbers()
    assert ec.scalar_mul(SECP256K1, k % n, SECP256K1_G) == (pub.x, pub.y)


@given(st.integers(min_value=1, max_value=2**255))
@settings(max_examples=25, deadline=None)
def test_scalar_mul_matches_cryptography_p256(k):
    pub = crypto_ec.derive_private_key(k, crypto_ec.SECP256R1()).public_key().public_numbers()
    assert ec.scalar_mul(P256, k, P256_G) == (pub.x, pub.y)


@given(st.integers(0, 10**6), st.integers(0, 10**6))
@settings(max_examples=50, deadline=None)
def test_scalar_mul_is_linear(j, k):
    E = CurveParams(1000003, 5, 7)
    P = ec.random_point(E, random.Random(j ^ k))
    lhs = ec.scalar_mul(E, j + k, P)
    assert lhs == ec.point_add(E, ec.scalar_mul(E, j, P), ec.scalar_mul(E, k, P))


# -- point counting ------------------------------------------------------------


def test_naive_count_against_oracle():
    rnd = random.Random(11)
    for _ in range(40):
        p = rnd.choice([101, 257, 499, 1009, 2003])
        a, b = rnd.randrange(p), rnd.randrange(p)
        if ec.is_singular(p, a, b):
            continue
        assert ec.count_points_naive(CurveParams(p, a, b)) == oracle_count(p, a, b)


def test_naive_count_guard():
    with pytest.raises(TooLarge):
        ec.count_points_naive(CurveParams(4194319, 1, 1))


@pytest.mark.parametrize("p", [101, 65521, 1000003])
def test_hasse_interval_contains_orders(p):
    lo, hi = ec.hasse_interval(p)
    rnd = random.Random(p)
    for _ in range(10):
        a, b = rnd.randrange(p), rnd.randrange(1, p)
        if ec.is_singular(p, a, b):
            continue
        assert lo <= ec.curve_order(CurveParams(p, a, b)) <= hi


def test_curve_order_small_fields_exhaustive():
    # tiny fields, where the Hasse interval is wide relative to p
    for p in (5, 7, 11, 13, 17, 19, 23):
        for a in range(p):
            for b in range(p):
                if ec.is_singular(p, a, b):
                    continue
                assert ec.curve_order(CurveParams(p, a, b)) == oracle_count(p, a, b), (p, a, b)


def test_curve_order_medium_fields():
    rnd = random.Random(5)
    for _ in range(60):
        p = rnd.choice([1000003, 2097143, 4194301])
        a, b = rnd.randrange(p), rnd.randrange(p)
        if ec.is_singular(p, a, b):
            continue
        E = CurveParams(p, a, b)
        assert ec.curve_order(E) == ec.count_points_naive(E)


def test_curve_order_annihilates_points_large_p():
    # beyond the naive range, check n*P = O and the Hasse bound instead
    p = (1 << 61) - 1
    E = CurveParams(p, 3, 11)
    n = ec.curve_order(E)
    lo, hi = ec.hasse_interval(p)
    assert lo <= n <= hi
    rnd = random.Random(2)
    for _ in range(5):
        assert ec.scalar_mul(E, n, ec.random_point(E, rnd)) is INFINITY


def test_curve_order_returns_known_order(small_curve):
    assert ec.curve_order(small_curve.with_order(12345)) == 12345


def test_two_torsion_screen_matches_parity():
    rnd = random.Random(9)
    for _ in range(200):
        p = rnd.choice([1009, 65521, 104729])
        a, b = rnd.randrange(p), rnd.randrange(p)
        if ec.is_singular(p, a, b):
            continue
        E = CurveParams(p, a, b)
        assert ec.has_rational_2_torsion(E) == (ec.count_points_naive(E) % 2 == 0)
