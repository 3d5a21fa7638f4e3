import math
import os
import random
import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvepow import codec, dlp, ec, params
from curvepow.dlp import DlpInstance, Method
from curvepow.ec import CurveParams
from curvepow.errors import InvalidPoint, NotInInterval, TooLarge
from curvepow.parallel import solve_parallel

# y^2 = x^3 + 5 over F_97 has prime order 79
F97 = CurveParams(97, 0, 5, 79)


def brute_log(E, P, Q, n):
    R = None
    for k in range(n):
        if R == (None if Q is None else tuple(Q)):
            return k
        R = ec.point_add(E, R, P)


def instance(ep, k):
    E = ep.curve
    return DlpInstance(E, ep.base, ec.scalar_mul(E, k, ep.base), ep.order)


@pytest.fixture(scope="module")
def f97_gen():
    P = ec.random_point(F97, random.Random(0))
    return P


def test_f97_order_is_prime():
    from test_ec import oracle_count

    assert oracle_count(97, 0, 5) == 79


@pytest.mark.parametrize("k", [0, 1, 2, 40, 78])
@pytest.mark.parametrize("method", ["naive", "bsgs", "rho"])
def test_f97_roundtrip(f97_gen, k, method):
    Q = ec.scalar_mul(F97, k, f97_gen)
    N, stats = dlp.solve(DlpInstance(F97, f97_gen, Q, 79), method, seed=k)
    assert N == k == brute_log(F97, f97_gen, Q, 79)
    assert stats.group_ops > 0 and stats.method.value == method


def test_f97_kangaroo(f97_gen):
    for k in range(79):
        Q = ec.scalar_mul(F97, k, f97_gen)
        N, _ = dlp.solve_kangaroo(DlpInstance(F97, f97_gen, Q, 79), 0, 78, seed=k)
        assert N == k


def test_instance_validation(f97_gen):
    with pytest.raises(InvalidPoint):
        DlpInstance(F97, None, f97_gen, 79)
    with pytest.raises(InvalidPoint):
        DlpInstance(F97, f97_gen, (1, 1), 79)


def test_naive_guard(ep10):
    inst = instance(ep10, 5)
    object.__setattr__(inst, "n", 1 << 22)
    with pytest.raises(TooLarge):
        dlp.solve_naive(inst)


@given(st.integers(min_value=0, max_value=868576), st.integers(min_value=0, max_value=1000))
@settings(max_examples=30, deadline=None)
def test_solvers_agree(ep10, k, seed):
    inst = instance(ep10, k)
    assert dlp.solve_bsgs(inst)[0] == k
    assert dlp.solve_rho(inst, seed)[0] == k


def test_bsgs_op_bound(ep10):
    m = math.isqrt(ep10.order - 1) + 1
    rnd = random.Random(4)
    for _ in range(20):
        _, stats = dlp.solve_bsgs(instance(ep10, rnd.randrange(ep10.order)))
        assert stats.group_ops <= 2 * m + 4


def test_rho_mean_ops_near_expectation(ep10):
    # sqrt(pi n / 4) expected steps to the first collision
    rnd = random.Random(8)
    ops = [dlp.solve_rho(instance(ep10, rnd.randrange(ep10.order)), seed=s)[1].group_ops for s in range(100)]
    ratio = statistics.mean(ops) / (1.2533 * math.sqrt(ep10.order))
    assert 0.5 <= ratio <= 2.5


def test_rho_walk_resumable_matches_single_shot(ep10):
    inst = instance(ep10, 12345)
    walk = dlp.RhoWalk(inst, seed=3)
    N = None
    while N is None:
        N = walk.advance(17)
    assert N == 12345 == dlp.solve_rho(inst, seed=3)[0]
    assert walk.advance(1) == N


def test_kangaroo_narrow_interval(ep10):
    for k in (1000, 500000, 868570):
        inst = instance(ep10, k)
        assert dlp.solve_kangaroo(inst, k - 8, k + 8)[0] == k


def test_kangaroo_outside_interval(ep10):
    inst = instance(ep10, 1000)
    with pytest.raises(NotInInterval):
        dlp.solve_kangaroo(inst, 5000, 5000 + 4096, attempts=2)


def test_kangaroo_rejects_tiny_interval(ep10):
    with pytest.raises(ValueError):
        dlp.solve_kangaroo(instance(ep10, 3), 0, 10)


def test_kangaroo_full_interval_matches_naive(ep8):
    rnd = random.Random(6)
    for _ in range(20):
        inst = instance(ep8, rnd.randrange(ep8.order))
        assert dlp.solve_kangaroo(inst, 0, ep8.order - 1, seed=1)[0] == dlp.solve_naive(inst)[0]


def test_kangaroo_scaling_constant():
    # group of ~2^22 so widths up to 2^20 stay inside it
    ep = params.epoch_params(11, codec.sha3(b"kangaroo"))
    rnd = random.Random(2)
    widths, meds = [], []
    for e in (10, 12, 14, 16, 18, 20):
        w = 1 << e
        ops = []
        for t in range(15):
            lo = rnd.randrange(ep.order - w)
            k = lo + rnd.randrange(w + 1)
            ops.append(dlp.solve_kangaroo(instance(ep, k), lo, lo + w, seed=t)[1].group_ops)
        widths.append(w)
        meds.append(statistics.median(ops))
    c = statistics.mean(m / math.sqrt(w) for m, w in zip(meds, widths))
    assert 1 <= c <= 6


def test_distinguished_bits():
    assert dlp.distinguished_bits(1 << 20) == 4
    assert dlp.distinguished_bits(100) == 1


# -- parallel ---------------------------------------------------------------


@pytest.mark.parametrize("workers", [1, 2, 4, 8])
@pytest.mark.parametrize("method", ["rho", "bsgs"])
def test_parallel_same_answer(ep10, workers, method):
    inst = instance(ep10, 654321)
    N, stats = solve_parallel(inst, workers, method, seed=1)
    assert N == 654321 and stats.group_ops > 0


def test_parallel_single_worker_is_rho(ep10):
    inst = instance(ep10, 777)
    assert solve_parallel(inst, 1, "rho", seed=5)[0] == dlp.solve_rho(inst, 5)[0]


def test_parallel_rejects_zero_workers(ep10):
    with pytest.raises(ValueError):
        solve_parallel(instance(ep10, 1), 0)


@pytest.mark.slow
@pytest.mark.skipif((os.cpu_count() or 1) < 8, reason="needs 8 CPUs for a speedup measurement")
def test_parallel_speedup():
    ep = params.epoch_params(18, codec.sha3(b"speedup"))
    inst = instance(ep, ep.order // 3)
    _, one = solve_parallel(inst, 1, "rho", seed=0)
    _, eight = solve_parallel(inst, 8, "rho", seed=0)
    assert eight.wall_time < 0.35 * one.wall_time


def test_stats_line():
    s = dlp.SolverStats(10, 0.5, Method.RHO)
    assert s.line() == "method=rho group_ops=10 wall_time_s=0.500000"
