"""SHA3-512 hashing, digest/integer conversions and the canonical header layout.

All integers are big-endian. Header wire format::

    tag (1) || h_prev (64) || merkle_root (64)
        [EB only: W (2) || p || A || B || P.x || P.y   each W bytes]
        || N (W + 8)

with W = ceil(bitlen(p) / 8) of the curve governing the block.
"""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import EncodingError

DIGEST_SIZE = 64
ZERO_DIGEST = bytes(DIGEST_SIZE)
NONCE_EXTRA = 8


def sha3(data: bytes) -> bytes:
    """SHA3-512 of ``data`` (64-byte digest)."""
    return hashlib.sha3_512(data).digest()


def digest_to_int(h: bytes) -> int:
    if len(h) != DIGEST_SIZE:
        raise EncodingError(f"digest must be {DIGEST_SIZE} bytes, got {len(h)}")
    return int.from_bytes(h, "big")


def int_to_digest(v: int) -> bytes:
    return int_to_bytes_fixed(v, DIGEST_SIZE)


def int_to_bytes_fixed(v: int, width: int) -> bytes:
    if v < 0 or v >= 1 << (8 * width):
        raise EncodingError(f"{v} does not fit in {width} bytes")
    return v.to_bytes(width, "big")


def field_width(p: int) -> int:
    return (p.bit_length() + 7) // 8


def challenge_bytes_sb(h_prev: bytes, merkle: bytes) -> bytes:
    """Preimage of a standard block's PoW target: h_prev || merkle."""
    if len(h_prev) != DIGEST_SIZE or len(merkle) != DIGEST_SIZE:
        raise EncodingError("h_prev and merkle root must be 64-byte digests")
    return h_prev + merkle


def merkle_root(leaves: Sequence[bytes]) -> bytes:
    """Merkle root over raw transaction payloads.

    Leaves are hashed once; odd levels duplicate their last node; an
    empty list hashes the empty string; a single leaf is its own root.
    """
    if not leaves:
        return sha3(b"")
    level = [sha3(t) for t in leaves]
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [sha3(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]


class BlockKind(enum.IntEnum):
    SB = 0
    EB = 1


@dataclass(frozen=True)
class EpochFields:
    """Curve parameters carried by an epoch block header."""

    p: int
    a: int
    b: int
    px: int
    py: int

    def encode(self, width: int) -> bytes:
        return b"".join(int_to_bytes_fixed(v, width) for v in (self.p, self.a, self.b, self.px, self.py))


@dataclass(frozen=True)
class BlockHeader:
    kind: BlockKind
    h_prev: bytes
    merkle_root: bytes
    nonce: int
    width: int
    epoch: Optional[EpochFields] = None

    def __post_init__(self):
        if (self.kind == BlockKind.EB) != (self.epoch is not None):
            raise EncodingError("epoch fields present iff the block is an EB")
        if self.epoch is not None and self.width != field_width(self.epoch.p):
            raise EncodingError(f"width {self.width} does not match p")
        if not 1 <= self.width < 1 << 16:
            raise EncodingError(f"bad field width {self.width}")

    def encode(self) -> bytes:
        return encode_header(self)

    def digest(self) -> bytes:
        return sha3(encode_header(self))


def encode_header(hdr: BlockHeader) -> bytes:
    if len(hdr.h_prev) != DIGEST_SIZE or len(hdr.merkle_root) != DIGEST_SIZE:
        raise EncodingError("h_prev and merkle root must be 64-byte digests")
    parts = [bytes([hdr.kind]), hdr.h_prev, hdr.merkle_root]
    if hdr.epoch is not None:
        parts.append(int_to_bytes_fixed(hdr.width, 2))
        parts.append(hdr.epoch.encode(hdr.width))
    parts.append(int_to_bytes_fixed(hdr.nonce, hdr.width + NONCE_EXTRA))
    return b"".join(parts)


def decode_header(data: bytes) -> BlockHeader:
    """Inverse of :func:`encode_header`; rejects any non-canonical input."""
    if len(data) < 1 + 2 * DIGEST_SIZE + NONCE_EXTRA + 1:
        raise EncodingError(f"header too short ({len(data)} bytes)")
    try:
        kind = BlockKind(data[0])
    except ValueError:
        raise EncodingError(f"unknown block tag 0x{data[0]:02x}") from None
    h_prev, merkle = data[1:65], data[65:129]
    rest = data[129:]
    epoch = None
    if kind == BlockKind.SB:
        width = len(rest) - NONCE_EXTRA
    else:
        width = int.from_bytes(rest[:2], "big")
        if width == 0 or len(rest) != 2 + 5 * width + width + NONCE_EXTRA:
            raise EncodingError("epoch header length does not match its width field")
        vals = [int.from_bytes(rest[2 + i * width : 2 + (i + 1) * width], "big") for i in range(5)]
        epoch = EpochFields(*vals)
        if field_width(epoch.p) != width:
            raise EncodingError("width field is not minimal for p")
        rest = rest[2 + 5 * width :]
    nonce = int.from_bytes(rest, "big")
    return BlockHeader(kind, h_prev, merkle, nonce, width, epoch)
