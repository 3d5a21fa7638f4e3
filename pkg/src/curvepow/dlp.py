"""Discrete-logarithm solvers over prime-order curve groups.

All solvers return ``(N, SolverStats)`` and verify ``N*P == Q`` before
returning. Group operations (additions and doublings) are counted in
``SolverStats.group_ops``; the hot loops work on raw integers.
"""
from __future__ import annotations

import enum
import math
import random
import time
from dataclasses import dataclass
from typing import Optional

from .ec import CurveParams, CurvePoint, _add, _mul, _neg
from .errors import InternalError, InvalidPoint, NotInInterval, ResourceLimit, TooLarge

NAIVE_LIMIT = 1 << 22
BSGS_TABLE_LIMIT = 1 << 24
RHO_CLASSES = 32
RHO_DOUBLING_CLASSES = 4
_MIX = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


class Method(str, enum.Enum):
    NAIVE = "naive"
    BSGS = "bsgs"
    RHO = "rho"
    KANGAROO = "kangaroo"


@dataclass
class SolverStats:
    group_ops: int
    wall_time: float
    method: Method

    def line(self) -> str:
        return f"method={self.method.value} group_ops={self.group_ops} wall_time_s={self.wall_time:.6f}"


@dataclass(frozen=True)
class DlpInstance:
    """Find N with N*P = Q in the cyclic group of prime order n."""

    curve: CurveParams
    P: CurvePoint
    Q: CurvePoint
    n: int

    def __post_init__(self):
        if self.P is None:
            raise InvalidPoint("generator must not be the point at infinity")
        for pt in (self.P, self.Q):
            if not self.curve.contains(pt):
                raise InvalidPoint(f"{pt} is not on the curve")


def verify_solution(inst: DlpInstance, N: int) -> bool:
    return _mul(N, tuple(inst.P), inst.curve.a, inst.curve.p)[0] == _tuple(inst.Q)


def _tuple(pt):
    return None if pt is None else tuple(pt)


def _finish(inst: DlpInstance, N: int, ops: int, t0: float, method: Method):
    N %= inst.n
    if not verify_solution(inst, N):
        raise InternalError(f"{method.value} returned a wrong logarithm {N}")
    return N, SolverStats(max(ops, 1), time.perf_counter() - t0, method)


def solve_naive(inst: DlpInstance):
    """Exhaustive scan of k*P; oracle for small groups only."""
    if inst.n >= NAIVE_LIMIT:
        raise TooLarge(f"naive DLP refused for n={inst.n} >= 2^22")
    t0 = time.perf_counter()
    a, p = inst.curve.a, inst.curve.p
    P, Q = tuple(inst.P), _tuple(inst.Q)
    R = None
    for k in range(inst.n):
        if R == Q:
            return _finish(inst, k, k, t0, Method.NAIVE)
        R = _add(R, P, a, p)
    raise InternalError("no logarithm found; is P a generator of order n?")


def solve_bsgs(inst: DlpInstance):
    """Shanks' baby-step giant-step with ceil(sqrt(n)) baby steps."""
    t0 = time.perf_counter()
    n = inst.n
    m = math.isqrt(n - 1) + 1
    if m > BSGS_TABLE_LIMIT:
        raise ResourceLimit(f"BSGS table of {m} entries exceeds the limit")
    a, p = inst.curve.a, inst.curve.p
    P = tuple(inst.P)
    table = {}
    R = None
    for j in range(m):
        table.setdefault(R, j)
        R = _add(R, P, a, p)
    ops = m
    step = _neg(R, p)  # -(m*P)
    G = _tuple(inst.Q)
    for i in range(m):
        j = table.get(G)
        if j is not None:
            return _finish(inst, i * m + j, ops, t0, Method.BSGS)
        G = _add(G, step, a, p)
        ops += 1
    raise InternalError("BSGS exhausted its giant steps")


class RhoWalk:
    """Pollard rho with a 32-class mixed walk and Brent cycle detection.

    The walk can be advanced in bounded quanta (see :meth:`advance`), which
    is how the mining simulator interleaves competing miners. When a
    collision yields no information the walk restarts from ``seed + 1``.
    """

    def __init__(self, inst: DlpInstance, seed: int = 0):
        if inst.n < 5:
            raise ValueError("rho needs a group of order >= 5")
        self.inst = inst
        self.group_ops = 0
        self.restarts = 0
        self.result: Optional[int] = None
        self._reset(seed)

    def _reset(self, seed: int) -> None:
        self.seed = seed
        rng = random.Random(seed)
        inst = self.inst
        a, p, n = inst.curve.a, inst.curve.p, inst.n
        P, Q = tuple(inst.P), _tuple(inst.Q)
        self.mults = mx, my, ma, mb = _walk_multipliers(P, Q, a, p, n, rng, self)
        while True:
            # start one addition away from the last multiplier
            j = rng.randrange(len(mx) - 1)
            X = _add((mx[-1], my[-1]), (mx[j], my[j]), a, p)
            self.group_ops += 1
            if X is not None:
                break
        a0, b0 = (ma[-1] + ma[j]) % n, (mb[-1] + mb[j]) % n
        self.tortoise = (X, a0, b0)
        self.hare = (X, a0, b0)
        self.power = 1
        self.lam = 0

    def advance(self, budget: int) -> Optional[int]:
        """Run at most ``budget`` walk steps; return N once found."""
        if self.result is not None:
            return self.result
        inst = self.inst
        ca, p, n = inst.curve.a, inst.curve.p, inst.n
        mx, my, ma, mb = self.mults
        add_classes = len(mx)
        X, xa, xb = self.hare
        T, ta, tb = self.tortoise
        power, lam = self.power, self.lam
        steps = 0
        while steps < budget:
            # one step of the iteration function
            x, y = X
            c = ((x * _MIX) & _MASK64) >> 59
            if c < add_classes:
                u, v = mx[c], my[c]
                if x == u:
                    Z = _add(X, (u, v), ca, p)
                    if Z is None:
                        return self._restart(steps)
                    X = Z
                else:
                    s = (v - y) * pow(u - x, -1, p) % p
                    x3 = (s * s - x - u) % p
                    X = (x3, (s * (x - x3) - y) % p)
                xa = (xa + ma[c]) % n
                xb = (xb + mb[c]) % n
            else:
                if y == 0:
                    return self._restart(steps)
                s = (3 * x * x + ca) * pow(2 * y, -1, p) % p
                x3 = (s * s - 2 * x) % p
                X = (x3, (s * (x - x3) - y) % p)
                xa = 2 * xa % n
                xb = 2 * xb % n
            steps += 1
            lam += 1
            if X == T:
                self.group_ops += steps
                denom = (xb - tb) % n
                if denom == 0:
                    return self._restart(0)
                self.result = (ta - xa) * pow(denom, -1, n) % n
                return self.result
            if lam == power:
                T, ta, tb = X, xa, xb
                power *= 2
                lam = 0
        self.group_ops += steps
        self.hare = (X, xa, xb)
        self.tortoise = (T, ta, tb)
        self.power, self.lam = power, lam
        return None

    def _restart(self, steps: int) -> None:
        self.group_ops += steps
        self.restarts += 1
        self._reset(self.seed + 1)
        return None


def _walk_multipliers(P, Q, a, p, n, rng, counter):
    """Multipliers M_j = a_j P + b_j Q for the adding classes.

    M_0 = P, M_1 = Q, and each later M_j adds a random earlier multiplier
    (possibly itself) to M_(j-1), so the coefficients grow like a Fibonacci
    sequence and set-up costs one addition per class whatever the group
    size.
    """
    mx, my, ma, mb = [P[0], Q[0]], [P[1], Q[1]], [1, 0], [0, 1]
    while len(mx) < RHO_CLASSES - RHO_DOUBLING_CLASSES:
        k = rng.randrange(len(mx))
        M = _add((mx[-1], my[-1]), (mx[k], my[k]), a, p)
        counter.group_ops += 1
        if M is None:
            continue
        mx.append(M[0])
        my.append(M[1])
        ma.append((ma[-1] + ma[k]) % n)
        mb.append((mb[-1] + mb[k]) % n)
    return mx, my, ma, mb


def solve_rho(inst: DlpInstance, seed: int = 0):
    t0 = time.perf_counter()
    if inst.Q is None:
        return _finish(inst, 0, 1, t0, Method.RHO)
    walk = RhoWalk(inst, seed)
    N = None
    while N is None:
        N = walk.advance(1 << 16)
    return _finish(inst, N, walk.group_ops, t0, Method.RHO)


def distinguished_bits(n: int) -> int:
    """Trailing-zero count marking a distinguished x-coordinate."""
    return max(1, (math.isqrt(n).bit_length() - 1) - 6)


def solve_kangaroo(inst: DlpInstance, lo: int, hi: int, seed: int = 0, attempts: int = 8):
    """Pollard's lambda method for N known to lie in [lo, hi].

    One tame and one wild kangaroo hop with power-of-two jumps whose mean
    is about sqrt(hi - lo)/2 and meet at distinguished points. Each attempt
    is capped; after ``attempts`` failures the target is declared outside
    the interval.
    """
    width = hi - lo
    if width < 16:
        raise ValueError("kangaroo needs hi - lo >= 16")
    t0 = time.perf_counter()
    a, p, n = inst.curve.a, inst.curve.p, inst.n
    P, Q = tuple(inst.P), _tuple(inst.Q)
    root = math.isqrt(width)
    k = 1
    while ((1 << k) - 1) / k < root / 2:
        k += 1
    jumps = [P]
    for _ in range(k - 1):
        jumps.append(_add(jumps[-1], jumps[-1], a, p))
    ops = k - 1
    dp_mask = (1 << distinguished_bits(width)) - 1
    cap = 16 * root + 32 * (dp_mask + 1) + 64
    rng = random.Random(seed)
    for _ in range(attempts):
        tame_off = rng.randrange(root + 1)
        wild_off = rng.randrange(root + 1)
        T, o1 = _mul(hi + tame_off, P, a, p)
        W0, o2 = _mul(wild_off, P, a, p)
        W = _add(Q, W0, a, p)
        ops += o1 + o2 + 1
        # distances travelled, measured from each kangaroo's start
        herd = [[T, hi + tame_off, 0], [W, wild_off, 1]]
        seen: dict = {}
        N = None
        steps = 0
        while steps < cap and N is None:
            for roo in herd:
                X = roo[0]
                # the point at infinity always takes the unit jump
                j = 0 if X is None else (((X[0] * _MIX) & _MASK64) >> 59) % k
                roo[0] = _add(X, jumps[j], a, p)
                roo[1] += 1 << j
                steps += 1
                X = roo[0]
                if X is not None and X[0] & dp_mask == 0:
                    prev = seen.get(X)
                    if prev is None:
                        seen[X] = (roo[1], roo[2])
                    elif prev[1] != roo[2]:
                        tame, wild = (prev[0], roo[1]) if prev[1] == 0 else (roo[1], prev[0])
                        N = (tame - wild) % n
                        break
                    else:
                        steps = cap  # a kangaroo is cycling; reseed
                        break
        ops += steps
        if N is not None:
            c = _representative(N, lo, hi, n)
            if c is not None and verify_solution(inst, c):
                return c, _finish(inst, c, ops, t0, Method.KANGAROO)[1]
    raise NotInInterval(f"no logarithm in [{lo}, {hi}] after {attempts} attempts")


def _representative(N: int, lo: int, hi: int, n: int) -> Optional[int]:
    c = N + (lo - N + n - 1) // n * n  # smallest value >= lo congruent to N
    return c if c <= hi else None


def solve(inst: DlpInstance, method: Method | str = Method.RHO, seed: int = 0, workers: int = 1):
    method = Method(method)
    if workers > 1:
        from .parallel import solve_parallel

        return solve_parallel(inst, workers, method, seed)
    if method is Method.NAIVE:
        return solve_naive(inst)
    if method is Method.BSGS:
        return solve_bsgs(inst)
    if method is Method.RHO:
        return solve_rho(inst, seed)
    return solve_kangaroo(inst, 0, inst.n - 1, seed)
