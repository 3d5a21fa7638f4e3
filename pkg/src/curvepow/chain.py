"""Blocks, chains, proof-of-work and validation.

Height 0 is an epoch block (EB) seeded by the all-zero digest; every
``epoch_len``-th block after it is another EB that carries freshly derived
curve parameters. Standard blocks (SB) solve their PoW on the curve of the
most recent EB.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import codec, ec, params
from .codec import ZERO_DIGEST, BlockHeader, BlockKind, EpochFields, field_width, sha3
from .dlp import DlpInstance, Method, SolverStats, solve
from .ec import Affine, CurveParams
from .errors import ChainFormatError, CurvePowError, EncodingError, NoCandidates
from .params import EpochParams, cached_epoch_params

log = logging.getLogger(__name__)

PAPER_EPOCH_LEN = 2016
MAX_TX_SIZE = 4096


@dataclass(frozen=True)
class Transaction:
    payload: bytes

    def __post_init__(self):
        if not 1 <= len(self.payload) <= MAX_TX_SIZE:
            raise ValueError(f"transaction payload must be 1..{MAX_TX_SIZE} bytes")


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    transactions: tuple[Transaction, ...] = ()

    @property
    def kind(self) -> BlockKind:
        return self.header.kind

    def digest(self) -> bytes:
        return self.header.digest()


@dataclass(frozen=True)
class ChainConfig:
    d: int
    epoch_len: int = PAPER_EPOCH_LEN
    cm_threshold: int = params.PAPER_CM_THRESHOLD
    d_max: int = params.D_MAX

    def __post_init__(self):
        params.check_difficulty(self.d, self.d_max)
        if self.epoch_len < 1:
            raise ValueError("epoch_len must be positive")

    def is_epoch_height(self, height: int) -> bool:
        return height % self.epoch_len == 0


@dataclass(frozen=True)
class Chain:
    """Append-only block sequence; :meth:`extend` returns a new chain."""

    config: ChainConfig
    blocks: tuple[Block, ...] = ()

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def tip(self) -> Optional[Block]:
        return self.blocks[-1] if self.blocks else None

    def tip_hash(self) -> bytes:
        return self.blocks[-1].digest() if self.blocks else ZERO_DIGEST

    def extend(self, block: Block) -> "Chain":
        return Chain(self.config, self.blocks + (block,))

    def governing_params(self) -> Optional[EpochParams]:
        """Epoch parameters in force for the next SB (from the latest EB)."""
        for blk in reversed(self.blocks):
            if blk.kind == BlockKind.EB:
                return cached_epoch_params(self.config.d, blk.header.h_prev, self.config.cm_threshold, self.config.d_max)
        return None


def merkle_root(txs: Sequence[Transaction]) -> bytes:
    return codec.merkle_root([t.payload for t in txs])


# -- proof of work --------------------------------------------------------------


def pow_preimage(kind: BlockKind, h_prev: bytes, merkle: bytes, epoch: Optional[EpochFields], width: int) -> bytes:
    data = codec.challenge_bytes_sb(h_prev, merkle)
    if kind == BlockKind.EB:
        if epoch is None:
            raise EncodingError("EB preimage needs epoch fields")
        data += epoch.encode(width)
    elif epoch is not None:
        raise EncodingError("SB preimage must not carry epoch fields")
    return data


def pow_target(
    kind: BlockKind, h_prev: bytes, merkle: bytes, epoch: Optional[EpochFields], E: CurveParams
) -> Affine:
    """The point N*P must hit; always affine."""
    data = pow_preimage(kind, h_prev, merkle, epoch, field_width(E.p))
    return params.p_point_gen(codec.digest_to_int(sha3(data)), E)


def solve_pow(
    kind: BlockKind,
    h_prev: bytes,
    txs: Sequence[Transaction],
    epoch: EpochParams,
    solver: Method | str = Method.RHO,
    workers: int = 1,
    seed: int = 0,
) -> tuple[Block, SolverStats]:
    merkle = merkle_root(txs)
    fields = epoch.fields() if kind == BlockKind.EB else None
    T = pow_target(kind, h_prev, merkle, fields, epoch.curve)
    N, stats = solve(DlpInstance(epoch.curve, epoch.base, T, epoch.order), solver, seed, workers)
    header = BlockHeader(kind, h_prev, merkle, N, epoch.width, fields)
    return Block(header, tuple(txs)), stats


def _link(parent: Optional[BlockHeader]) -> bytes:
    return ZERO_DIGEST if parent is None else parent.digest()


def mine_block(
    parent: BlockHeader,
    txs: Sequence[Transaction],
    epoch: EpochParams,
    solver: Method | str = Method.RHO,
    workers: int = 1,
) -> Block:
    """Mine a standard block on top of ``parent`` under ``epoch``."""
    return solve_pow(BlockKind.SB, _link(parent), txs, epoch, solver, workers)[0]


def make_epoch_block(
    parent: Optional[BlockHeader],
    txs: Sequence[Transaction],
    d: int,
    cm_threshold: int,
    solver: Method | str = Method.RHO,
    workers: int = 1,
) -> tuple[Block, EpochParams]:
    """Derive the next epoch's parameters, then mine the EB on them.

    ``parent=None`` builds the genesis block.
    """
    h_prev = _link(parent)
    ep = cached_epoch_params(d, h_prev, cm_threshold)
    block, _ = solve_pow(BlockKind.EB, h_prev, txs, ep, solver, workers)
    return block, ep


# -- verification ---------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    height: int
    name: str
    ok: bool
    detail: str = ""


@dataclass
class VerdictReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failed_height(self) -> Optional[int]:
        for c in self.checks:
            if not c.ok:
                return c.height
        return None

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def add(self, height: int, name: str, ok: bool, detail: str = "") -> bool:
        self.checks.append(Check(height, name, bool(ok), detail))
        return bool(ok)

    def extend(self, other: "VerdictReport") -> None:
        self.checks.extend(other.checks)

    def to_json(self) -> str:
        return json.dumps(
            {
                "ok": self.ok,
                "failed_height": self.failed_height,
                "checks": [c.__dict__ for c in self.checks],
            },
            indent=2,
        )

    def to_text(self) -> str:
        lines = [
            f"{c.height:>6} {c.name:<20} {'pass' if c.ok else 'FAIL'} {c.detail}".rstrip() for c in self.checks
        ]
        verdict = "valid" if self.ok else f"INVALID at height {self.failed_height}"
        lines.append(f"chain {verdict}")
        return "\n".join(lines)


def _verify_epoch_fields(
    report: VerdictReport, height: int, header: BlockHeader, config: ChainConfig
) -> Optional[EpochParams]:
    """Re-derive and re-check an EB's parameters; returns them when sound."""
    ef = header.epoch
    p = ef.p
    report.add(height, "difficulty", p.bit_length() == 2 * config.d, f"bitlen(p)={p.bit_length()} d={config.d}")
    try:
        derived = cached_epoch_params(config.d, header.h_prev, config.cm_threshold, config.d_max)
    except CurvePowError as exc:
        report.add(height, "rederive", False, str(exc))
        return None
    same = derived.fields().encode(derived.width) == ef.encode(header.width) and derived.width == header.width
    report.add(height, "rederive", same, "" if same else "epoch fields differ from re-derivation")
    # independent re-checks of the header's own values
    report.add(height, "p_prime", params.is_prime(p))
    exc_report = params.exceptionality_report(p)
    report.add(height, "p_exceptionality", exc_report.accepted, "" if exc_report.accepted else repr(exc_report))
    try:
        E = CurveParams(p, ef.a, ef.b)
    except (ValueError, CurvePowError) as exc:
        report.add(height, "curve", False, str(exc))
        return None
    report.add(height, "curve", True)
    try:
        sec = params.security_report(E)
    except ec.OrderUndetermined as exc:
        report.add(height, "order_prime", False, str(exc))
        return None
    report.add(height, "order_prime", sec.order_prime, f"|E|=0x{sec.order:x}")
    report.add(height, "not_anomalous", not sec.anomalous)
    report.add(height, "embedding_degree", sec.embedding_degree_leq20 is None, f"B={sec.embedding_degree_leq20}")
    D = sec.cm_discriminant
    report.add(height, "cm_discriminant", D is not None and abs(D) > config.cm_threshold, f"D={D}")
    E = E.with_order(sec.order)
    base = Affine(ef.px, ef.py)
    expected = params.p_point_gen(params.base_point_seed(p, ef.a, ef.b), E)
    report.add(height, "base_point", base == expected and E.contains(base))
    if not report.ok:
        return None
    return EpochParams(config.d, p, E, base, header.h_prev, config.cm_threshold)


def verify_block(
    blk: Block,
    parent: Optional[BlockHeader],
    governing: Optional[EpochParams],
    config: ChainConfig,
    height: int = 0,
) -> VerdictReport:
    """Check one block; failures are report entries, never exceptions.

    For an EB the parameters are re-derived from (d, h_prev) and the PoW is
    checked on the EB's own curve; ``governing`` is only used for SBs.
    """
    report = VerdictReport()
    hdr = blk.header
    report.add(height, "linkage", hdr.h_prev == _link(parent))
    report.add(height, "merkle", merkle_root(blk.transactions) == hdr.merkle_root)
    if hdr.kind == BlockKind.EB:
        epoch = _verify_epoch_fields(report, height, hdr, config)
    else:
        epoch = governing
        if epoch is None:
            report.add(height, "governing_epoch", False, "no epoch block precedes this SB")
    if epoch is None:
        return report
    report.add(height, "width", hdr.width == epoch.width, f"W={hdr.width}")
    in_range = 0 <= hdr.nonce < epoch.order
    report.add(height, "nonce_range", in_range, f"N=0x{hdr.nonce:x}")
    if in_range:
        T = pow_target(hdr.kind, hdr.h_prev, hdr.merkle_root, hdr.epoch, epoch.curve)
        ok = ec.scalar_mul(epoch.curve, hdr.nonce, epoch.base) == T
        report.add(height, "pow", ok)
    return report


def validate_chain(chain: Chain) -> VerdictReport:
    """Verify every block in order; stops at the earliest failing height."""
    report = VerdictReport()
    cfg = chain.config
    parent: Optional[BlockHeader] = None
    governing: Optional[EpochParams] = None
    for height, blk in enumerate(chain.blocks):
        expect_eb = cfg.is_epoch_height(height)
        if not report.add(height, "schedule", (blk.kind == BlockKind.EB) == expect_eb, f"kind={blk.kind.name}"):
            break
        r = verify_block(blk, parent, governing, cfg, height)
        report.extend(r)
        if not r.ok:
            break
        if blk.kind == BlockKind.EB:
            governing = cached_epoch_params(cfg.d, blk.header.h_prev, cfg.cm_threshold, cfg.d_max)
        parent = blk.header
    return report


def fork_choice(candidates: Sequence[Chain]) -> Chain:
    """Longest chain; ties go to the lexicographically smaller tip hash."""
    if not candidates:
        raise NoCandidates("fork_choice needs at least one chain")
    return min(candidates, key=lambda c: (-len(c), c.tip_hash()))


def adjust_difficulty(
    epoch_duration: float, target: float, d: int, d_min: int = params.D_MIN, d_max: int = params.D_MAX
) -> int:
    """Coarse retarget hook: one step of d per epoch, clamped to the guard."""
    if epoch_duration < target / 2:
        d += 1
    elif epoch_duration > 2 * target:
        d -= 1
    return max(d_min, min(d_max, d))


# -- persistence ----------------------------------------------------------------


def encode_record(blk: Block) -> str:
    return json.dumps({"header": blk.header.encode().hex(), "txs": [t.payload.hex() for t in blk.transactions]})


def decode_record(line: str, height: int) -> Block:
    try:
        obj = json.loads(line)
        header = codec.decode_header(bytes.fromhex(obj["header"]))
        txs = tuple(Transaction(bytes.fromhex(t)) for t in obj["txs"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ChainFormatError(height, str(exc)) from None
    return Block(header, txs)


def save_chain(chain: Chain, path: str | Path) -> None:
    Path(path).write_text("".join(encode_record(b) + "\n" for b in chain.blocks))


def append_blocks(path: str | Path, blocks: Iterable[Block]) -> None:
    with open(path, "a") as fh:
        for b in blocks:
            fh.write(encode_record(b) + "\n")


def load_chain(path: str | Path, config: ChainConfig) -> Chain:
    lines = Path(path).read_text().splitlines()
    return Chain(config, tuple(decode_record(line, h) for h, line in enumerate(lines)))


def mine_chain(
    config: ChainConfig,
    count: int,
    chain: Optional[Chain] = None,
    solver: Method | str = Method.RHO,
    workers: int = 1,
    tx_source=None,
    on_block=None,
) -> Chain:
    """Extend ``chain`` (or start a new one) by ``count`` honest blocks.

    ``tx_source(height)`` supplies each block's transactions; ``on_block``
    is called with (height, block, gen_time, stats) after each block.
    """
    chain = chain if chain is not None else Chain(config)
    if tx_source is None:
        tx_source = default_transactions
    for _ in range(count):
        height = len(chain)
        parent = chain.tip.header if chain.tip else None
        txs = tx_source(height)
        t0 = time.perf_counter()
        if config.is_epoch_height(height):
            ep = params.epoch_params(config.d, _link(parent), config.cm_threshold, config.d_max)
            gen_time = time.perf_counter() - t0
            blk, stats = solve_pow(BlockKind.EB, _link(parent), txs, ep, solver, workers)
        else:
            ep = chain.governing_params()
            gen_time = 0.0
            blk, stats = solve_pow(BlockKind.SB, _link(parent), txs, ep, solver, workers)
        chain = chain.extend(blk)
        log.debug("mined height %d (%s) N=%d", height, blk.kind.name, blk.header.nonce)
        if on_block is not None:
            on_block(height, blk, gen_time, stats)
    return chain


def default_transactions(height: int) -> tuple[Transaction, ...]:
    return (Transaction(f"coinbase height={height}".encode()),)
