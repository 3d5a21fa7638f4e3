"""Prime-field and short-Weierstrass elliptic-curve arithmetic.

Points are affine: an :class:`Affine` pair of integers or ``INFINITY``
(``None``). Internal helpers prefixed with ``_`` take raw ``(x, y)``
tuples and skip validation; they are what the solvers' hot loops call.
"""
from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DivisionByZero, InvalidPoint, SingularCurve, TooLarge
from .nt import factorize, is_prime, sqrt_mod

NAIVE_COUNT_LIMIT = 1 << 22
ORDER_RETRIES = 64


@dataclass(frozen=True)
class FieldElement:
    value: int
    modulus: int

    def __post_init__(self):
        if self.modulus <= 3 or self.modulus % 2 == 0:
            raise ValueError(f"modulus must be an odd prime > 3, got {self.modulus}")
        if not 0 <= self.value < self.modulus:
            raise ValueError(f"{self.value} not reduced modulo {self.modulus}")

    @classmethod
    def of(cls, value: int, modulus: int) -> "FieldElement":
        return cls(value % modulus, modulus)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise ValueError("field elements from different fields")
            return other.value
        return other % self.modulus

    def __add__(self, other):
        return FieldElement((self.value + self._coerce(other)) % self.modulus, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement((self.value - self._coerce(other)) % self.modulus, self.modulus)

    def __rsub__(self, other):
        return FieldElement((self._coerce(other) - self.value) % self.modulus, self.modulus)

    def __mul__(self, other):
        return FieldElement(self.value * self._coerce(other) % self.modulus, self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value % self.modulus, self.modulus)

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return FieldElement(pow(self.value, e, self.modulus), self.modulus)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise DivisionByZero(f"inverse of 0 modulo {self.modulus}")
        return FieldElement(pow(self.value, -1, self.modulus), self.modulus)

    def __truediv__(self, other):
        return self * FieldElement.of(self._coerce(other), self.modulus).inverse()

    def __int__(self):
        return self.value


class Affine(NamedTuple):
    x: int
    y: int


CurvePoint = Optional[Affine]
INFINITY: CurvePoint = None


@dataclass(frozen=True)
class CurveParams:
    """y^2 = x^3 + a*x + b over F_p.

    ``order`` may be supplied when already known; :func:`curve_order`
    computes it otherwise. It takes no part in equality.
    """

    p: int
    a: int
    b: int
    order: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if self.p <= 3 or not is_prime(self.p):
            raise ValueError(f"p={self.p} is not a prime > 3")
        if not (0 <= self.a < self.p and 0 <= self.b < self.p):
            raise ValueError("coefficients must be reduced modulo p")
        if (4 * self.a**3 + 27 * self.b**2) % self.p == 0:
            raise SingularCurve(f"4A^3 + 27B^2 = 0 mod {self.p}")

    @property
    def trace(self) -> int:
        if self.order is None:
            raise ValueError("order not computed; use curve_order()")
        return self.p + 1 - self.order

    @property
    def A(self) -> FieldElement:
        return FieldElement(self.a, self.p)

    @property
    def B(self) -> FieldElement:
        return FieldElement(self.b, self.p)

    def with_order(self, order: int) -> "CurveParams":
        return CurveParams(self.p, self.a, self.b, order)

    def rhs(self, x: int) -> int:
        return (x * x * x + self.a * x + self.b) % self.p

    def contains(self, P: CurvePoint) -> bool:
        if P is None:
            return True
        x, y = P
        return 0 <= x < self.p and 0 <= y < self.p and (y * y - self.rhs(x)) % self.p == 0


def is_singular(p: int, a: int, b: int) -> bool:
    return (4 * a**3 + 27 * b**2) % p == 0


def sqrt_mod_p(a: FieldElement) -> Optional[tuple[FieldElement, ...]]:
    """Square roots of ``a``: ``(0,)``, ``(r, p - r)`` with r < p - r, or None."""
    p = a.modulus
    r = sqrt_mod(a.value, p)
    if r is None:
        return None
    if r == 0:
        return (FieldElement(0, p),)
    r = min(r, p - r)
    return FieldElement(r, p), FieldElement(p - r, p)


# -- raw group law on (x, y) tuples, None for the point at infinity ---------


def _neg(P, p):
    if P is None:
        return None
    return (P[0], -P[1] % p)


def _add(P, Q, a, p):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1 + a) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return (x3, (lam * (x1 - x3) - y1) % p)


def _mul(k, P, a, p):
    """Left-to-right double-and-add; returns (k*P, group operations used)."""
    if k == 0 or P is None:
        return None, 0
    if k < 0:
        k, P = -k, _neg(P, p)
    R = P
    ops = 0
    for bit in bin(k)[3:]:
        R = _add(R, R, a, p)
        ops += 1
        if bit == "1":
            R = _add(R, P, a, p)
            ops += 1
    return R, ops


def _wrap(P) -> CurvePoint:
    return None if P is None else Affine(P[0], P[1])


def _check(E: CurveParams, P: CurvePoint) -> None:
    if not E.contains(P):
        raise InvalidPoint(f"{P} is not on {E}")


def point_neg(E: CurveParams, P: CurvePoint) -> CurvePoint:
    _check(E, P)
    return _wrap(_neg(P, E.p))


def point_add(E: CurveParams, P: CurvePoint, Q: CurvePoint) -> CurvePoint:
    """Chord-and-tangent addition; both points must lie on ``E``."""
    _check(E, P)
    _check(E, Q)
    return _wrap(_add(P, Q, E.a, E.p))


def scalar_mul(E: CurveParams, n: int, P: CurvePoint) -> CurvePoint:
    if n < 0:
        raise ValueError("scalar must be nonnegative")
    _check(E, P)
    if E.order is not None:
        n %= E.order
    return _wrap(_mul(n, P, E.a, E.p)[0])


def random_point(E: CurveParams, rng: random.Random, tries: int = 1000) -> CurvePoint:
    """A random affine point, or None if ``tries`` x-coordinates all miss."""
    p = E.p
    for _ in range(tries):
        x = rng.randrange(p)
        y = sqrt_mod(E.rhs(x), p)
        if y is None:
            continue
        if rng.getrandbits(1):
            y = -y % p
        return Affine(x, y)
    return None


def count_points_naive(E: CurveParams) -> int:
    """|E| by enumerating every x in F_p. Oracle use only (p < 2^22)."""
    p = E.p
    if p >= NAIVE_COUNT_LIMIT:
        raise TooLarge(f"naive point counting refused for p={p} >= 2^22")
    x = np.arange(p, dtype=np.int64)
    squares = np.zeros(p, dtype=bool)
    squares[x * x % p] = True
    rhs = ((x * x % p) * x + E.a * x + E.b) % p
    zero = rhs == 0
    return 1 + int(zero.sum()) + 2 * int(squares[rhs[~zero]].sum())


def _cubic_mulmod(u, v, a, b, p):
    """Product of two quadratics modulo x^3 + a*x + b."""
    e = [0] * 5
    for i, ui in enumerate(u):
        for j, vj in enumerate(v):
            e[i + j] += ui * vj
    # x^4 = -a x^2 - b x ; x^3 = -a x - b
    e[2] -= a * e[4]
    e[1] -= b * e[4]
    e[1] -= a * e[3]
    e[0] -= b * e[3]
    return [e[0] % p, e[1] % p, e[2] % p]


def _poly_gcd_degree(f, g, p):
    """Degree of gcd(f, g) over F_p; coefficient lists, low order first."""

    def trim(h):
        while h and h[-1] % p == 0:
            h.pop()
        return h

    f, g = trim([c % p for c in f]), trim([c % p for c in g])
    while g:
        inv = pow(g[-1], -1, p)
        while len(f) >= len(g):
            q = f[-1] * inv % p
            shift = len(f) - len(g)
            for i, c in enumerate(g):
                f[i + shift] = (f[i + shift] - q * c) % p
            trim(f)
            if not f:
                break
        f, g = g, f
    return len(f) - 1


def has_rational_2_torsion(E: "CurveParams") -> bool:
    """True when x^3 + a*x + b has a root in F_p, i.e. |E| is even."""
    p, a, b = E.p, E.a, E.b
    r, base = [1, 0, 0], [0, 1, 0]
    for bit in bin(p)[2:]:
        r = _cubic_mulmod(r, r, a, b, p)
        if bit == "1":
            r = _cubic_mulmod(r, base, a, b, p)
    r[1] -= 1  # x^p - x
    return _poly_gcd_degree([b, a, 0, 1], r, p) >= 1


def hasse_interval(p: int) -> tuple[int, int]:
    r = 2 * math.isqrt(p - 1) + 2  # 2*ceil(sqrt(p)) for non-square p
    return max(1, p + 1 - r), p + 1 + r


class OrderUndetermined(Exception):
    """curve_order could not isolate a unique group order."""


def _batch_add(Ps, Qs, a, p):
    """Pairwise sums with a single modular inversion (Montgomery's trick)."""
    dens = []
    for P, Q in zip(Ps, Qs):
        if P is None or Q is None or P[0] == Q[0]:
            dens.append(1)
        else:
            dens.append(Q[0] - P[0])
    prefix = [1] * (len(dens) + 1)
    for i, d in enumerate(dens):
        prefix[i + 1] = prefix[i] * d % p
    inv = pow(prefix[-1], -1, p)
    out = [None] * len(dens)
    for i in range(len(dens) - 1, -1, -1):
        P, Q = Ps[i], Qs[i]
        if P is None or Q is None or P[0] == Q[0]:
            out[i] = _add(P, Q, a, p)
            continue
        d_inv = inv * prefix[i] % p
        inv = inv * dens[i] % p
        x1, y1 = P
        lam = (Q[1] - y1) * d_inv % p
        x3 = (lam * lam - x1 - Q[0]) % p
        out[i] = (x3, (lam * (x1 - x3) - y1) % p)
    return out


def _multiples(R, count, lanes, a, p):
    """[0*R, 1*R, ..., (count-1)*R] computed ``lanes`` at a time."""
    head = [None]
    for _ in range(min(lanes, count) - 1):
        head.append(_add(head[-1], R, a, p))
    out = list(head)
    if count <= len(head):
        return out[:count]
    stride = _add(head[-1], R, a, p)
    block = head
    while len(out) < count:
        block = _batch_add(block, [stride] * len(block), a, p)
        out.extend(block)
    return out[:count]


_LANES = 64


def _find_multiple(R, lo, hi, a, p):
    """Some k in [lo, hi] with k*R = O, by baby-step giant-step.

    The baby table is keyed on x only, so each giant step covers the
    window [c - m, c + m] around its centre c.
    """
    width = hi - lo + 1
    m = math.isqrt(width // 2) + 1
    baby = _multiples(R, m + 1, _LANES, a, p)
    table = {}
    for j, B in enumerate(baby):
        if B is not None:
            table.setdefault(B[0], j)
    stride = 2 * m + 1
    giants = -(-width // stride)
    step, _ = _mul(stride, R, a, p)
    lanes = min(_LANES, giants)
    first, _ = _mul(lo + m, R, a, p)
    lane_heads = [first]
    for _ in range(lanes - 1):
        lane_heads.append(_add(lane_heads[-1], step, a, p))
    jump, _ = _mul(lanes, step, a, p)
    g0 = 0
    while g0 < giants:
        for g, G in enumerate(lane_heads, start=g0):
            centre = lo + m + g * stride
            if G is None:
                k = centre
            else:
                j = table.get(G[0])
                if j is None:
                    continue
                k = centre - j if G[1] == baby[j][1] else centre + j
            if lo <= k <= hi and k > 0:
                return k
        g0 += lanes
        lane_heads = _batch_add(lane_heads, [jump] * lanes, a, p)
    return None


def _point_order(P, multiple, a, p):
    order = multiple
    for q, e in factorize(multiple).items():
        for _ in range(e):
            if _mul(order // q, P, a, p)[0] is None:
                order //= q
            else:
                break
    return order


def curve_order(E: CurveParams, rng: Optional[random.Random] = None) -> int:
    """Exact |E| via point orders over the Hasse interval (Mestre-style).

    Random points are drawn from ``rng``; without one, a generator seeded
    from (p, a, b) keeps the result reproducible. Returns ``E.order`` when
    already set. Raises :class:`OrderUndetermined` only when p is beyond
    the naive-count guard and 64 points leave the order ambiguous.
    """
    if E.order is not None:
        return E.order
    p, a = E.p, E.a
    if rng is None:
        seed = hashlib.sha3_256(f"{p}:{E.a}:{E.b}".encode()).digest()
        rng = random.Random(int.from_bytes(seed, "big"))
    lo, hi = hasse_interval(p)
    acc = 1
    for _ in range(ORDER_RETRIES):
        P = random_point(E, rng)
        if P is None:
            break
        R, _ = _mul(acc, tuple(P), a, p)
        if R is not None:
            j = _find_multiple(R, -(-lo // acc), hi // acc, a, p)
            if j is None:
                continue
            acc = math.lcm(acc, _point_order(tuple(P), acc * j, a, p))
        first = -(-lo // acc) * acc
        if first + acc > hi:
            return first
    if p < NAIVE_COUNT_LIMIT:
        return count_points_naive(E)
    raise OrderUndetermined(f"order of {E} ambiguous after {ORDER_RETRIES} points")
