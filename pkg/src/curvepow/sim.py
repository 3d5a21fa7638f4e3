"""Deterministic multi-miner simulation and the generation-vs-DLP benchmark.

Time in the simulator is logical: every tick, each miner spends a fixed
quantum of group operations on its current PoW. Wall-clock durations are
recorded for reporting but never influence the outcome.
"""
from __future__ import annotations

import csv
import heapq
import io
import random
import statistics
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import params
from .chain import (
    Block,
    BlockHeader,
    BlockKind,
    Chain,
    ChainConfig,
    Transaction,
    fork_choice,
    merkle_root,
    pow_target,
    verify_block,
)
from .codec import ZERO_DIGEST, digest_to_int, sha3
from .dlp import DlpInstance, Method, RhoWalk, solve, solve_rho
from .params import cached_epoch_params

BENCH_HEADER = ("d", "gen_time_s", "dlp_time_s", "group_ops")


@dataclass(frozen=True)
class SimConfig:
    miner_count: int = 4
    epoch_len: int = 8
    d: int = 10
    cm_threshold: int = params.DESK_CM_THRESHOLD
    solvers: tuple[str, ...] = ("rho",)
    relay_delay: int = 0
    rng_seed: int = 0
    run_length: int = 32
    work_quantum: int = 64

    def __post_init__(self):
        if self.miner_count < 1:
            raise ValueError("miner_count must be >= 1")
        if self.run_length < self.epoch_len:
            raise ValueError("run_length must be >= epoch_len")
        if self.relay_delay < 0 or self.work_quantum < 1:
            raise ValueError("relay_delay must be >= 0 and work_quantum >= 1")

    def solver_for(self, miner: int) -> Method:
        return Method(self.solvers[miner % len(self.solvers)])

    def chain_config(self) -> ChainConfig:
        return ChainConfig(self.d, self.epoch_len, self.cm_threshold)


@dataclass
class BlockRecord:
    height: int
    miner: int
    kind: str
    tick: int
    group_ops: int
    block_hash: str
    gen_time: float = 0.0
    dlp_time: float = 0.0


@dataclass(frozen=True)
class ForkEvent:
    tick: int
    miner: int
    fork_height: int
    own_tip: str
    other_tip: str
    adopted: bool


@dataclass
class SimResult:
    chain: Chain
    blocks: list[BlockRecord]
    fork_events: list[ForkEvent]
    ticks: int
    converged: bool

    def tallies(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for r in self.blocks:
            out[r.miner] = out.get(r.miner, 0) + 1
        return dict(sorted(out.items()))

    def to_csv(self, wall_times: bool = False) -> str:
        """Per-block CSV; deterministic unless ``wall_times`` is set."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["height", "miner", "kind", "tick", "group_ops", "block_hash"]
        if wall_times:
            cols += ["gen_time_s", "dlp_time_s"]
        w.writerow(cols)
        for r in self.blocks:
            row = [r.height, r.miner, r.kind, r.tick, r.group_ops, r.block_hash]
            if wall_times:
                row += [f"{r.gen_time:.6f}", f"{r.dlp_time:.6f}"]
            w.writerow(row)
        return buf.getvalue()


class _Job:
    """A PoW in progress that can be advanced by a budget of group operations."""

    def __init__(self, inst: DlpInstance, method: Method, seed: int):
        self.inst = inst
        self.wall = 0.0
        self._walk = None
        self._answer = None
        if method is Method.RHO and inst.Q is not None:
            self._walk = RhoWalk(inst, seed)
        else:
            # other methods are not resumable: solve now, reveal after their cost
            t0 = time.perf_counter()
            self._answer, stats = solve(inst, method, seed)
            self.wall = time.perf_counter() - t0
            self._cost = stats.group_ops
        self.spent = 0

    @property
    def group_ops(self) -> int:
        return self._walk.group_ops if self._walk is not None else self.spent

    def advance(self, budget: int) -> Optional[int]:
        if self._walk is not None:
            t0 = time.perf_counter()
            N = self._walk.advance(budget)
            self.wall += time.perf_counter() - t0
            return N
        self.spent = min(self._cost, self.spent + budget)
        return self._answer if self.spent >= self._cost else None


@dataclass
class _Miner:
    ident: int
    chain: Chain
    job: Optional[_Job] = None
    template: Optional[tuple] = None
    gen_time: float = 0.0


def _derive_seed(*parts) -> int:
    return int.from_bytes(sha3(repr(parts).encode())[:8], "big")


class _Simulation:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.chain_cfg = cfg.chain_config()
        self.rng = random.Random(cfg.rng_seed)
        self.miners = [_Miner(i, Chain(self.chain_cfg)) for i in range(cfg.miner_count)]
        self.inbox: list = []
        self.seq = 0
        self.records: dict[bytes, BlockRecord] = {}
        self.verified: set[bytes] = set()
        self.forks: list[ForkEvent] = []
        self.tick = 0

    # -- work --------------------------------------------------------------

    def _start(self, m: _Miner) -> None:
        chain = m.chain
        height = len(chain)
        parent = chain.tip.header if chain.tip else None
        h_prev = parent.digest() if parent else ZERO_DIGEST
        txs = (Transaction(f"coinbase miner={m.ident} height={height} seed={self.cfg.rng_seed}".encode()),)
        m.gen_time = 0.0
        if self.chain_cfg.is_epoch_height(height):
            kind = BlockKind.EB
            t0 = time.perf_counter()
            ep = params.epoch_params(self.cfg.d, h_prev, self.cfg.cm_threshold)
            m.gen_time = time.perf_counter() - t0
        else:
            kind = BlockKind.SB
            ep = chain.governing_params()
        merkle = merkle_root(txs)
        fields = ep.fields() if kind == BlockKind.EB else None
        T = pow_target(kind, h_prev, merkle, fields, ep.curve)
        inst = DlpInstance(ep.curve, ep.base, T, ep.order)
        seed = _derive_seed(self.cfg.rng_seed, m.ident, h_prev)
        m.job = _Job(inst, self.cfg.solver_for(m.ident), seed)
        m.template = (kind, h_prev, merkle, fields, ep, txs)

    def _finish(self, m: _Miner, N: int) -> Block:
        kind, h_prev, merkle, fields, ep, txs = m.template
        blk = Block(BlockHeader(kind, h_prev, merkle, N, ep.width, fields), txs)
        digest = blk.digest()
        self.records[digest] = BlockRecord(
            height=len(m.chain),
            miner=m.ident,
            kind=kind.name,
            tick=self.tick,
            group_ops=m.job.group_ops,
            block_hash=digest.hex(),
            gen_time=m.gen_time,
            dlp_time=m.job.wall,
        )
        self.verified.add(digest)
        m.job = None
        m.template = None
        return blk

    # -- gossip --------------------------------------------------------------

    def _broadcast(self, sender: _Miner) -> None:
        arrival = self.tick + 1 + self.cfg.relay_delay
        for m in self.miners:
            if m is not sender:
                heapq.heappush(self.inbox, (arrival, self.seq, m.ident, sender.chain))
                self.seq += 1

    def _valid(self, chain: Chain) -> bool:
        """Verify the blocks of ``chain`` not already known to be valid."""
        parent = None
        governing = None
        for height, blk in enumerate(chain.blocks):
            digest = blk.digest()
            if digest not in self.verified:
                if self.chain_cfg.is_epoch_height(height) != (blk.kind == BlockKind.EB):
                    return False
                if not verify_block(blk, parent, governing, self.chain_cfg, height).ok:
                    return False
                self.verified.add(digest)
            if blk.kind == BlockKind.EB:
                governing = cached_epoch_params(self.cfg.d, blk.header.h_prev, self.cfg.cm_threshold)
            parent = blk.header
        return True

    def _receive(self, m: _Miner, chain: Chain) -> None:
        own = m.chain
        if chain.tip_hash() == own.tip_hash() or not self._valid(chain):
            return
        shared = 0
        for a, b in zip(own.blocks, chain.blocks):
            if a.digest() != b.digest():
                break
            shared += 1
        best = fork_choice([own, chain])
        adopted = best is chain
        if shared < len(own) and shared < len(chain):
            self.forks.append(
                ForkEvent(self.tick, m.ident, shared, own.tip_hash().hex(), chain.tip_hash().hex(), adopted)
            )
        if adopted:
            m.chain = chain
            m.job = None  # preempted: partial rho state is discarded

    def _deliver(self, until: Optional[int]) -> None:
        while self.inbox and (until is None or self.inbox[0][0] <= until):
            _, _, dest, chain = heapq.heappop(self.inbox)
            self._receive(self.miners[dest], chain)

    # -- main loop -------------------------------------------------------------

    def run(self, max_ticks: int = 10**7) -> SimResult:
        cfg = self.cfg
        while self.tick < max_ticks:
            self._deliver(self.tick)
            for m in self.miners:
                if m.job is None:
                    self._start(m)
                N = m.job.advance(cfg.work_quantum)
                if N is not None:
                    m.chain = m.chain.extend(self._finish(m, N))
                    self._broadcast(m)
            if any(len(m.chain) >= cfg.run_length for m in self.miners):
                break
            self.tick += 1
        self._deliver(None)
        final = fork_choice([m.chain for m in self.miners])
        converged = all(m.chain.tip_hash() == final.tip_hash() for m in self.miners)
        blocks = [self.records[b.digest()] for b in final.blocks]
        return SimResult(final, blocks, list(self.forks), self.tick, converged)


def run_simulation(cfg: SimConfig) -> SimResult:
    """Run the discrete-tick mining race described by ``cfg``."""
    return _Simulation(cfg).run()


# -- benchmark ---------------------------------------------------------------------


@dataclass(frozen=True)
class BenchRow:
    d: int
    trial: int
    gen_time: float
    dlp_time: float
    group_ops: int


@dataclass
class BenchTable:
    rows: list[BenchRow] = field(default_factory=list)

    def medians(self) -> list[tuple[int, float, float, float]]:
        out = []
        for d in sorted({r.d for r in self.rows}):
            rs = [r for r in self.rows if r.d == d]
            out.append(
                (
                    d,
                    statistics.median(r.gen_time for r in rs),
                    statistics.median(r.dlp_time for r in rs),
                    statistics.median(r.group_ops for r in rs),
                )
            )
        return out

    def dlp_slope(self) -> float:
        """Least-squares slope of log2(median DLP time) against d."""
        med = self.medians()
        return fit_slope([m[0] for m in med], [m[2] for m in med])

    def ops_slope(self) -> float:
        med = self.medians()
        return fit_slope([m[0] for m in med], [m[3] for m in med])

    def gen_dlp_ratio(self, d: int) -> float:
        for row in self.medians():
            if row[0] == d:
                return row[1] / row[2]
        raise KeyError(d)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(BENCH_HEADER)
        for r in self.rows:
            w.writerow([r.d, f"{r.gen_time:.6f}", f"{r.dlp_time:.6f}", r.group_ops])
        buf.write("# summary\n")
        buf.write("# d,median_gen_time_s,median_dlp_time_s,median_group_ops\n")
        for d, g, t, ops in self.medians():
            buf.write(f"# {d},{g:.6f},{t:.6f},{ops:g}\n")
        if len(self.medians()) >= 2:
            buf.write(f"# slope_log2_dlp_time_per_d={self.dlp_slope():.4f}\n")
        return buf.getvalue()


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Slope of log2(ys) regressed on xs."""
    return float(np.polyfit(np.asarray(xs, float), np.log2(np.asarray(ys, float)), 1)[0])


def fit_exponent(ns: Sequence[float], ops: Sequence[float]) -> float:
    """Exponent alpha in ops ~ n^alpha (log-log least squares)."""
    return float(np.polyfit(np.log2(np.asarray(ns, float)), np.log2(np.asarray(ops, float)), 1)[0])


def bench_scaling(
    d_range: Sequence[int],
    trials: int,
    seed: int = 0,
    cm_threshold: int = params.DESK_CM_THRESHOLD,
    method: Method | str = Method.RHO,
    progress=None,
) -> BenchTable:
    """Time parameter generation and one PoW solve per (d, trial).

    Each trial seeds generation with a fresh pseudorandom h_prev, then
    solves the standard-block PoW for a one-transaction block under the
    generated epoch.
    """
    table = BenchTable()
    for d in d_range:
        params.check_difficulty(d)
        for trial in range(trials):
            h_prev = sha3(f"bench seed={seed} d={d} trial={trial}".encode())
            t0 = time.perf_counter()
            ep = params.epoch_params(d, h_prev, cm_threshold)
            gen_time = time.perf_counter() - t0
            merkle = merkle_root((Transaction(f"bench tx {trial}".encode()),))
            T = pow_target(BlockKind.SB, h_prev, merkle, None, ep.curve)
            inst = DlpInstance(ep.curve, ep.base, T, ep.order)
            if Method(method) is Method.RHO:
                _, stats = solve_rho(inst, digest_to_int(h_prev) & 0xFFFFFFFF)
            else:
                _, stats = solve(inst, method, trial)
            row = BenchRow(d, trial, gen_time, stats.wall_time, stats.group_ops)
            table.rows.append(row)
            if progress is not None:
                progress(row)
    return table


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    rx = np.argsort(np.argsort(xs))
    ry = np.argsort(np.argsort(ys))
    return float(np.corrcoef(rx, ry)[0, 1])


