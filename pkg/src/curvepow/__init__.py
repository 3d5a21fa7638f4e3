"""Proof-of-work blockchain whose puzzles are elliptic-curve discrete logarithms.

Each epoch derives a fresh prime, curve and base point from the chain
state; miners solve N*P = T for a target point T fixed by the block.
"""
from .chain import (
    Block,
    Chain,
    ChainConfig,
    Transaction,
    fork_choice,
    make_epoch_block,
    mine_block,
    validate_chain,
    verify_block,
)
from .ec import INFINITY, Affine, CurveParams, FieldElement, curve_order, point_add, scalar_mul
from .params import EpochParams, epoch_params

__all__ = [
    "Affine",
    "Block",
    "Chain",
    "ChainConfig",
    "CurveParams",
    "EpochParams",
    "FieldElement",
    "INFINITY",
    "Transaction",
    "curve_order",
    "epoch_params",
    "fork_choice",
    "make_epoch_block",
    "mine_block",
    "point_add",
    "scalar_mul",
    "validate_chain",
    "verify_block",
]

__version__ = "0.1.0"
