"""Elementary number theory on Python integers.

Primality, modular square roots, integer factorization and square-free
parts. Everything here is deterministic.
"""
from __future__ import annotations

import math
from collections import Counter

# Deterministic Miller-Rabin witnesses: the first 13 primes are a valid
# witness set for every n < 3.317e24 (comfortably above 2^64).
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_MR_DETERMINISTIC_BOUND = 3317044064679887385961981
_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


def is_prime(n: int) -> bool:
    """Miller-Rabin, deterministic below 3.3e24."""
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n == q:
            return True
        if n % q == 0:
            return False
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    bases = _MR_BASES
    if n >= _MR_DETERMINISTIC_BOUND:
        # probabilistic beyond the proven bound; 40 extra fixed bases
        bases = _MR_BASES + tuple(range(43, 43 + 2 * 40, 2))
    for a in bases:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    if n <= 2:
        return 2
    c = n | 1
    while not is_prime(c):
        c += 2
    return c


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) for an odd prime p, as -1, 0 or 1."""
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def sqrt_mod(a: int, p: int) -> int | None:
    """One square root of a modulo the odd prime p, or None.

    Tonelli-Shanks after an Euler-criterion check. The returned root is
    whichever one the algorithm lands on; callers pick the branch.
    """
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


def _pollard_brent(n: int, seed: int) -> int:
    """A nontrivial factor of the odd composite n (may equal n on failure)."""
    y, c, m = seed % n, (seed * 7 + 1) % n or 1, 128
    g = r = q = 1
    x = ys = 0
    while g == 1:
        x = y
        for _ in range(r):
            y = (y * y + c) % n
        k = 0
        while k < r and g == 1:
            ys = y
            for _ in range(min(m, r - k)):
                y = (y * y + c) % n
                q = q * abs(x - y) % n
            g = math.gcd(q, n)
            k += m
        r *= 2
    if g == n:
        while True:
            ys = (ys * ys + c) % n
            g = math.gcd(abs(x - ys), n)
            if g > 1:
                break
    return g


def factorize(n: int, trial_bound: int = 1000) -> Counter:
    """Prime factorization of |n| as a Counter {prime: exponent}.

    Trial division up to ``trial_bound``, then Pollard-Brent rho.
    """
    n = abs(n)
    out: Counter = Counter()
    if n < 2:
        return out
    for q in _trial_primes(trial_bound):
        if q * q > n:
            break
        while n % q == 0:
            out[q] += 1
            n //= q
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if is_prime(m):
            out[m] += 1
            continue
        r = math.isqrt(m)
        if r * r == m:
            stack += [r, r]
            continue
        seed = 2
        f = _pollard_brent(m, seed)
        while f in (1, m):
            seed += 1
            f = _pollard_brent(m, seed)
        stack += [f, m // f]
    return out


_TRIAL_CACHE: dict[int, tuple[int, ...]] = {}


def _trial_primes(bound: int) -> tuple[int, ...]:
    if bound not in _TRIAL_CACHE:
        sieve = bytearray([1]) * (bound + 1)
        sieve[0:2] = b"\x00\x00"
        for i in range(2, math.isqrt(bound) + 1):
            if sieve[i]:
                sieve[i * i :: i] = bytearray(len(sieve[i * i :: i]))
        _TRIAL_CACHE[bound] = tuple(i for i, v in enumerate(sieve) if v)
    return _TRIAL_CACHE[bound]


def squarefree_part(n: int) -> int:
    """Signed square-free part: n = squarefree_part(n) * k^2, same sign as n."""
    if n == 0:
        raise ValueError("square-free part of 0 is undefined")
    sign = -1 if n < 0 else 1
    core = 1
    for q, e in factorize(n).items():
        if e % 2:
            core *= q
    return sign * core
