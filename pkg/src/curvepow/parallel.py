"""Multi-process DLP solving.

Rho workers run independent walks over a shared iteration function and
report distinguished points to the parent, which owns the collision
table. BSGS shards its giant steps across workers instead.
"""
from __future__ import annotations

import math
import multiprocessing as mp
import queue
import random
import time

from .dlp import (
    BSGS_TABLE_LIMIT,
    DlpInstance,
    Method,
    _finish,
    _MASK64,
    _MIX,
    _tuple,
    _walk_multipliers,
    distinguished_bits,
    solve,
)
from .ec import _add, _mul, _neg
from .errors import InternalError, ResourceLimit

_REPORT_EVERY = 4096


class _Counter:
    group_ops = 0


def _rho_worker(args, out, stop):
    p, a, b, n, P, Q, seed, worker, dp_bits = args
    rng = random.Random(seed)
    counter = _Counter()
    mx, my, ma, mb = _walk_multipliers(P, Q, a, p, n, rng, counter)
    add_classes = len(mx)
    mask = (1 << dp_bits) - 1
    # patience before assuming the walk is trapped in a DP-free cycle
    patience = 32 << dp_bits
    wrng = random.Random(f"{seed}:{worker}")
    ops = counter.group_ops if worker == 0 else 0
    while not stop.is_set():
        xa, xb = wrng.randrange(n), wrng.randrange(n)
        X = _add(_mul(xa, P, a, p)[0], _mul(xb, Q, a, p)[0], a, p)
        ops += 3 * n.bit_length()
        since = 0
        while X is not None and since < patience:
            x, y = X
            if x & mask == 0:
                out.put((x, y, xa, xb, ops))
                ops = 0
                if stop.is_set():
                    return
            c = ((x * _MIX) & _MASK64) >> 59
            if c < add_classes:
                X = _add(X, (mx[c], my[c]), a, p)
                xa = (xa + ma[c]) % n
                xb = (xb + mb[c]) % n
            else:
                X = _add(X, X, a, p)
                xa = 2 * xa % n
                xb = 2 * xb % n
            ops += 1
            since += 1
            if since % _REPORT_EVERY == 0 and stop.is_set():
                return


def _solve_rho_parallel(inst: DlpInstance, workers: int, seed: int):
    t0 = time.perf_counter()
    E = inst.curve
    if inst.Q is None:
        return _finish(inst, 0, 1, t0, Method.RHO)
    P, Q = tuple(inst.P), _tuple(inst.Q)
    dp_bits = distinguished_bits(inst.n)
    ctx = mp.get_context("fork")
    out = ctx.Queue()
    stop = ctx.Event()
    procs = [
        ctx.Process(
            target=_rho_worker,
            args=((E.p, E.a, E.b, inst.n, P, Q, seed, w, dp_bits), out, stop),
            daemon=True,
        )
        for w in range(workers)
    ]
    for pr in procs:
        pr.start()
    table = {}
    ops = 0
    N = None
    try:
        while N is None:
            try:
                x, y, xa, xb, used = out.get(timeout=60)
            except queue.Empty:
                if not any(pr.is_alive() for pr in procs):
                    raise InternalError("all rho workers died") from None
                continue
            ops += used
            prev = table.get((x, y))
            if prev is None:
                table[(x, y)] = (xa, xb)
                continue
            ya, yb = prev
            denom = (xb - yb) % inst.n
            if denom:
                N = (ya - xa) * pow(denom, -1, inst.n) % inst.n
    finally:
        stop.set()
        for pr in procs:
            pr.join(timeout=5)
            if pr.is_alive():
                pr.terminate()
    return _finish(inst, N, ops, t0, Method.RHO)


def _bsgs_shard(args):
    p, a, b, n, P, Q, m, start, stop_ = args
    table = {}
    R = None
    for j in range(m):
        table.setdefault(R, j)
        R = _add(R, P, a, p)
    ops = m
    step = _neg(R, p)
    G, used = _mul(start, step, a, p)
    G = _add(Q, G, a, p)
    ops += used + 1
    for i in range(start, stop_):
        j = table.get(G)
        if j is not None:
            return i * m + j, ops
        G = _add(G, step, a, p)
        ops += 1
    return None, ops


def _solve_bsgs_parallel(inst: DlpInstance, workers: int):
    t0 = time.perf_counter()
    E = inst.curve
    m = math.isqrt(inst.n - 1) + 1
    if m > BSGS_TABLE_LIMIT:
        raise ResourceLimit(f"BSGS table of {m} entries exceeds the limit")
    P, Q = tuple(inst.P), _tuple(inst.Q)
    bounds = [m * w // workers for w in range(workers + 1)]
    jobs = [(E.p, E.a, E.b, inst.n, P, Q, m, bounds[w], bounds[w + 1]) for w in range(workers)]
    ops = 0
    with mp.get_context("fork").Pool(workers) as pool:
        for N, used in pool.imap_unordered(_bsgs_shard, jobs):
            ops += used
            if N is not None:
                pool.terminate()
                return _finish(inst, N, ops, t0, Method.BSGS)
    raise InternalError("sharded BSGS found no logarithm")


def solve_parallel(inst: DlpInstance, workers: int, method: Method | str = Method.RHO, seed: int = 0):
    """Solve ``inst`` with ``workers`` processes; blocks until done.

    ``workers == 1`` is exactly the single-process solver. Only rho and
    BSGS parallelize; other methods run single-process.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    method = Method(method)
    if workers == 1 or method in (Method.NAIVE, Method.KANGAROO):
        return solve(inst, method, seed)
    if method is Method.BSGS:
        return _solve_bsgs_parallel(inst, workers)
    return _solve_rho_parallel(inst, workers, seed)
