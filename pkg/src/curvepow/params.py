"""Deterministic epoch parameter generation: prime, curve and base point.

Every function here is a pure function of its arguments, so any verifier
can recompute an epoch block's (p, E, P) from its h_prev alone.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional

from . import ec
from .codec import digest_to_int, field_width, int_to_bytes_fixed, int_to_digest, sha3
from .ec import Affine, CurveParams, OrderUndetermined
from .errors import GenerationExhausted, TooLarge
from .nt import is_prime, next_prime, sqrt_mod, squarefree_part

D_MIN = 4
D_MAX = 32
MAX_ITERATIONS = 10**6
EMBEDDING_BOUND = 20
PAPER_CM_THRESHOLD = 1 << 40
DESK_CM_THRESHOLD = 1 << 10
NAF_WEIGHT_LIMIT = 4
CM_FACTOR_LIMIT = 1 << 66  # |t^2 - 4p| for every p < 2^64


def check_difficulty(d: int, d_max: int = D_MAX) -> int:
    if not D_MIN <= d <= d_max:
        raise ValueError(f"difficulty d={d} outside [{D_MIN}, {d_max}]")
    return d


# -- exceptional primes -----------------------------------------------------


def is_crandall(p: int) -> Optional[tuple[int, int]]:
    """(k, c) when p = 2^k - c with 0 < c < 2^ceil(k/4), k = bitlen(p)."""
    k = p.bit_length()
    c = (1 << k) - p
    if 0 < c < 1 << -(-k // 4):
        return k, c
    return None


def naf(n: int) -> list[tuple[int, int]]:
    """Non-adjacent form of n > 0 as (sign, exponent) terms, low to high."""
    terms = []
    e = 0
    while n:
        if n & 1:
            digit = 2 - (n & 3)
            terms.append((digit, e))
            n -= digit
        n >>= 1
        e += 1
    return terms


def is_mersenne_like(p: int) -> Optional[list[tuple[int, int]]]:
    """Signed power-of-two terms when p has NAF weight <= 4."""
    terms = naf(p)
    return terms if len(terms) <= NAF_WEIGHT_LIMIT else None


def is_montgomery_friendly(p: int) -> Optional[tuple[int, int, int]]:
    """(alpha, beta, gamma) when p = 2^alpha (2^beta - gamma) - 1 with small gamma."""
    m = p + 1
    alpha = (m & -m).bit_length() - 1
    m >>= alpha
    beta = m.bit_length()
    gamma = (1 << beta) - m
    if alpha >= 2 and 0 < gamma < 1 << -(-beta // 4):
        return alpha, beta, gamma
    return None


@dataclass(frozen=True)
class ExceptionalityReport:
    crandall: Optional[tuple[int, int]]
    mersenne_like: Optional[list]
    montgomery_friendly: Optional[tuple[int, int, int]]

    @property
    def accepted(self) -> bool:
        return self.crandall is None and self.mersenne_like is None and self.montgomery_friendly is None


def exceptionality_report(p: int) -> ExceptionalityReport:
    return ExceptionalityReport(is_crandall(p), is_mersenne_like(p), is_montgomery_friendly(p))


def p_gen(d: int, h: bytes) -> tuple[int, int]:
    """First acceptable 2d-bit prime reached by rehashing ``h``.

    Returns ``(p, iterations)``. Candidates whose next prime overflows
    2d bits are skipped like exceptional ones.
    """
    bits = 2 * d
    top = 1 << (bits - 1)
    for it in range(1, MAX_ITERATIONS + 1):
        h = sha3(h)
        p = next_prime((digest_to_int(h) % (1 << bits)) | top)
        if p.bit_length() == bits and exceptionality_report(p).accepted:
            return p, it
    raise GenerationExhausted(f"p_gen(d={d}) found no prime in {MAX_ITERATIONS} iterations")


# -- curve security -----------------------------------------------------------


def embedding_degree_leq(n: int, p: int, bmax: int = EMBEDDING_BOUND) -> Optional[int]:
    """Smallest B <= bmax with p^B = 1 (mod n), else None."""
    x = 1
    for b in range(1, bmax + 1):
        x = x * p % n
        if x == 1:
            return b
    return None


def cm_discriminant(t: int, p: int) -> int:
    v = t * t - 4 * p
    if v >= 0:
        raise ValueError(f"trace {t} violates the Hasse bound for p={p}")
    if -v >= CM_FACTOR_LIMIT:
        raise TooLarge(f"|t^2 - 4p| = {-v} exceeds the factoring guard")
    delta = squarefree_part(v)
    return delta if delta % 4 == 1 else 4 * delta


@dataclass(frozen=True)
class SecurityReport:
    order: int
    order_prime: bool
    anomalous: bool
    embedding_degree_leq20: Optional[int]
    cm_discriminant: Optional[int]

    def passes(self, cm_threshold: int) -> bool:
        return (
            self.order_prime
            and not self.anomalous
            and self.embedding_degree_leq20 is None
            and self.cm_discriminant is not None
            and abs(self.cm_discriminant) > cm_threshold
        )


def security_report(E: CurveParams) -> SecurityReport:
    """Recompute every security property of ``E`` from (p, a, b)."""
    n = ec.curve_order(E)
    prime = is_prime(n)
    try:
        D = cm_discriminant(E.p + 1 - n, E.p)
    except TooLarge:
        D = None
    return SecurityReport(
        order=n,
        order_prime=prime,
        anomalous=n == E.p,
        embedding_degree_leq20=embedding_degree_leq(n, E.p) if prime else None,
        cm_discriminant=D,
    )


def e_gen(p: int, h: bytes, cm_threshold: int) -> tuple[CurveParams, SecurityReport, int]:
    if 4 * p <= cm_threshold:
        # |D| <= 4p, so the CM bound can never be met
        raise GenerationExhausted(f"no curve over p={p} can have |D| > {cm_threshold}")
    base = digest_to_int(h)
    for i in range(1, MAX_ITERATIONS + 1):
        a_digest = sha3(int_to_digest((base + i) % (1 << 512)))
        a = digest_to_int(a_digest) % p
        b = digest_to_int(sha3(a_digest)) % p
        if ec.is_singular(p, a, b):
            continue
        E = CurveParams(p, a, b)
        if ec.has_rational_2_torsion(E):
            continue  # even order
        try:
            n = ec.curve_order(E)
        except OrderUndetermined:
            continue
        # cheap screens first; the full report factors t^2 - 4p
        if n == p or not is_prime(n) or embedding_degree_leq(n, p) is not None:
            continue
        E = E.with_order(n)
        report = security_report(E)
        if report.passes(cm_threshold):
            return E, report, i
    raise GenerationExhausted(f"e_gen found no secure curve over p={p}")


# -- base point ---------------------------------------------------------------


def p_point_gen(h: int, E: CurveParams) -> Affine:
    """First point with x = h + i (mod p), i >= 0, taking the root y < p/2."""
    p = E.p
    x0 = h % p
    for i in range(p):
        x = (x0 + i) % p
        y = sqrt_mod(E.rhs(x), p)
        if y is not None:
            return Affine(x, min(y, p - y))
    raise ValueError(f"{E} has no affine points")


def base_point_seed(p: int, a: int, b: int) -> int:
    w = field_width(p)
    data = int_to_bytes_fixed(p, w) + int_to_bytes_fixed(a, w) + int_to_bytes_fixed(b, w)
    return digest_to_int(sha3(data))


@dataclass(frozen=True)
class EpochParams:
    d: int
    p: int
    curve: CurveParams
    base: Affine
    provenance: bytes
    cm_threshold: int
    p_iterations: int = field(default=0, compare=False)
    e_iterations: int = field(default=0, compare=False)
    exceptionality: Optional[ExceptionalityReport] = field(default=None, compare=False)
    security: Optional[SecurityReport] = field(default=None, compare=False)

    @property
    def order(self) -> int:
        return self.curve.order

    @property
    def width(self) -> int:
        return field_width(self.p)

    def fields(self):
        from .codec import EpochFields

        return EpochFields(self.p, self.curve.a, self.curve.b, self.base.x, self.base.y)


def epoch_params(d: int, h_prev: bytes, cm_threshold: int = DESK_CM_THRESHOLD, d_max: int = D_MAX) -> EpochParams:
    check_difficulty(d, d_max)
    p, p_it = p_gen(d, h_prev)
    E, report, e_it = e_gen(p, h_prev, cm_threshold)
    P = p_point_gen(base_point_seed(p, E.a, E.b), E)
    return EpochParams(
        d=d,
        p=p,
        curve=E,
        base=P,
        provenance=h_prev,
        cm_threshold=cm_threshold,
        p_iterations=p_it,
        e_iterations=e_it,
        exceptionality=exceptionality_report(p),
        security=report,
    )


@functools.lru_cache(maxsize=512)
def cached_epoch_params(d: int, h_prev: bytes, cm_threshold: int, d_max: int = D_MAX) -> EpochParams:
    """Memoized :func:`epoch_params`; safe because generation is pure."""
    return epoch_params(d, h_prev, cm_threshold, d_max)


def security_bits(d: int) -> float:
    """Expected generic-attack cost in bits for difficulty d (|E| ~ 2^(2d))."""
    return math.log2(math.sqrt(math.pi * (1 << (2 * d)) / 4))
