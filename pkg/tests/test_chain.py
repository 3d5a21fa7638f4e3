import dataclasses

import pytest

from curvepow import chain as ch
from curvepow import codec, ec, params
from curvepow.chain import Block, Chain, ChainConfig, Transaction
from curvepow.codec import BlockHeader, BlockKind, EpochFields
from curvepow.ec import Affine
from curvepow.errors import ChainFormatError, EncodingError, NoCandidates

CFG = ChainConfig(d=10, epoch_len=8, cm_threshold=params.DESK_CM_THRESHOLD)


@pytest.fixture(scope="module")
def chain24():
    return ch.mine_chain(CFG, 24)


def failing(report):
    return {c.name for c in report.failures()}


def replace_header(blk, **kw):
    return Block(dataclasses.replace(blk.header, **kw), blk.transactions)


# -- frozen vectors --------------------------------------------------------------


def test_pow_target_pipeline_vector(ep10):
    h_prev = codec.sha3(b"parent")
    merkle = codec.merkle_root([b"tx1", b"tx2"])
    T = ch.pow_target(BlockKind.SB, h_prev, merkle, None, ep10.curve)
    assert T == Affine(196026, 52834)
    # x = H(h_prev || M) mod p plus one step, so x = 196025 has no point
    assert codec.digest_to_int(codec.sha3(h_prev + merkle)) % ep10.p == 196025
    assert ec.sqrt_mod_p(ec.FieldElement(ep10.curve.rhs(196025), ep10.p)) is None


def test_genesis_vector():
    blk, ep = ch.make_epoch_block(None, ch.default_transactions(0), 8, params.DESK_CM_THRESHOLD)
    assert blk.header.nonce == 1884
    assert blk.digest().hex() == (
        "123871b509ae88572c417d557217fb9921ea13de60b1a1bab35b99332b4215ef"
        "bb4b3bdb9e2fc0636cc96837f3e78decd6437ce8c80c1215c257fbd4e5cd71dd"
    )
    assert ep.p == 48179
    T = ch.pow_target(BlockKind.EB, codec.ZERO_DIGEST, blk.header.merkle_root, ep.fields(), ep.curve)
    assert ec.scalar_mul(ep.curve, 1884, ep.base) == T


def test_merkle_over_transactions():
    txs = [Transaction(b"a"), Transaction(b"b")]
    assert ch.merkle_root(txs) == codec.merkle_root([b"a", b"b"])


def test_transaction_size_bounds():
    with pytest.raises(ValueError):
        Transaction(b"")
    with pytest.raises(ValueError):
        Transaction(bytes(4097))
    Transaction(bytes(4096))


def test_preimage_shapes(ep10):
    h, m = codec.sha3(b"h"), codec.sha3(b"m")
    assert ch.pow_preimage(BlockKind.SB, h, m, None, 3) == h + m
    assert ch.pow_preimage(BlockKind.EB, h, m, ep10.fields(), 3) == h + m + ep10.fields().encode(3)
    with pytest.raises(EncodingError):
        ch.pow_preimage(BlockKind.EB, h, m, None, 3)
    with pytest.raises(EncodingError):
        ch.pow_preimage(BlockKind.SB, h, m, ep10.fields(), 3)


# -- mining and validation --------------------------------------------------------


def test_honest_chain_validates(chain24):
    assert len(chain24) == 24
    kinds = [b.kind for b in chain24.blocks]
    assert [i for i, k in enumerate(kinds) if k == BlockKind.EB] == [0, 8, 16]
    report = ch.validate_chain(chain24)
    assert report.ok and report.failed_height is None
    assert "chain valid" in report.to_text()


def test_epochs_rotate_curves(chain24):
    ps = {chain24.blocks[h].header.epoch.p for h in (0, 8, 16)}
    assert len(ps) == 3


def test_eb_pow_on_its_own_curve(chain24):
    eb = chain24.blocks[8].header
    ep = params.epoch_params(10, eb.h_prev)
    T = ch.pow_target(BlockKind.EB, eb.h_prev, eb.merkle_root, eb.epoch, ep.curve)
    assert ec.scalar_mul(ep.curve, eb.nonce, ep.base) == T


def test_mine_block_extends(chain24):
    ep = chain24.governing_params()
    blk = ch.mine_block(chain24.tip.header, [Transaction(b"extra")], ep)
    r = ch.verify_block(blk, chain24.tip.header, ep, CFG, 24)
    assert r.ok


def test_wrong_nonce_rejected(chain24):
    blk = chain24.blocks[3]
    bad = replace_header(blk, nonce=(blk.header.nonce + 1) % chain24.governing_params().order)
    r = ch.verify_block(bad, chain24.blocks[2].header, chain24.governing_params(), CFG, 3)
    assert failing(r) == {"pow"}


def test_nonce_out_of_range(chain24):
    ep = ch.Chain(CFG, chain24.blocks[:3]).governing_params()
    bad = replace_header(chain24.blocks[3], nonce=ep.order)
    r = ch.verify_block(bad, chain24.blocks[2].header, ep, CFG, 3)
    assert "nonce_range" in failing(r)


def test_sb_without_epoch_rejected(chain24):
    r = ch.verify_block(chain24.blocks[1], chain24.blocks[0].header, None, CFG, 1)
    assert "governing_epoch" in failing(r)


def test_broken_linkage(chain24):
    blocks = list(chain24.blocks)
    blocks[5], blocks[6] = blocks[6], blocks[5]
    r = ch.validate_chain(Chain(CFG, tuple(blocks)))
    assert r.failed_height == 5 and "linkage" in failing(r)


def test_swapped_transactions(chain24):
    blk = chain24.blocks[4]
    forged = Block(blk.header, (Transaction(b"forged"),))
    blocks = chain24.blocks[:4] + (forged,) + chain24.blocks[5:]
    r = ch.validate_chain(Chain(CFG, blocks))
    assert r.failed_height == 4 and failing(r) == {"merkle"}


def test_schedule_enforced(chain24):
    # an SB where the EB belongs
    r = ch.validate_chain(Chain(CFG, chain24.blocks[1:]))
    assert r.failed_height == 0 and "schedule" in failing(r)


@pytest.mark.parametrize("field", ["p", "a", "b", "px", "py"])
def test_eb_field_substitution_rejected(chain24, field):
    eb = chain24.blocks[8]
    f = eb.header.epoch
    changed = dataclasses.replace(f, **{field: getattr(f, field) ^ 1})
    try:
        bad = replace_header(eb, epoch=changed)
    except EncodingError:
        return  # p change altered its width; cannot even be framed
    r = ch.verify_block(bad, chain24.blocks[7].header, None, CFG, 8)
    assert not r.ok and "rederive" in failing(r)


def test_foreign_secure_curve_rejected(chain24):
    # a perfectly secure epoch for a different provenance is still rejected
    other = params.epoch_params(10, codec.sha3(b"elsewhere"))
    eb = chain24.blocks[8]
    bad = replace_header(eb, epoch=other.fields(), width=other.width)
    r = ch.verify_block(bad, chain24.blocks[7].header, None, CFG, 8)
    assert "rederive" in failing(r)


def test_weak_curve_checks_itemised():
    # a singular-free but insecure curve gets the individual checks
    cfg = ChainConfig(d=10, epoch_len=8, cm_threshold=params.DESK_CM_THRESHOLD)
    weak = EpochFields(1000003, 1, 0, 0, 0)
    hdr = BlockHeader(BlockKind.EB, codec.ZERO_DIGEST, ch.merkle_root(ch.default_transactions(0)), 0, 3, weak)
    r = ch.verify_block(Block(hdr, ch.default_transactions(0)), None, None, cfg, 0)
    names = failing(r)
    assert {"rederive", "order_prime"} <= names


def test_verdict_json(chain24):
    import json

    r = ch.validate_chain(Chain(CFG, chain24.blocks[1:]))
    obj = json.loads(r.to_json())
    assert obj["ok"] is False and obj["failed_height"] == 0


# -- fork choice, retarget -------------------------------------------------------


def test_fork_choice_longest(chain24):
    short = Chain(CFG, chain24.blocks[:10])
    assert ch.fork_choice([short, chain24]) is chain24


def test_fork_choice_tie_break(chain24):
    base = Chain(CFG, chain24.blocks[:3])
    ep = base.governing_params()
    a = base.extend(ch.mine_block(base.tip.header, [Transaction(b"A")], ep))
    b = base.extend(ch.mine_block(base.tip.header, [Transaction(b"B")], ep))
    winner = min((a, b), key=lambda c: c.tip_hash())
    assert ch.fork_choice([a, b]) is winner
    assert ch.fork_choice([b, a]) is winner


def test_fork_choice_empty():
    with pytest.raises(NoCandidates):
        ch.fork_choice([])


@pytest.mark.parametrize(
    "duration,d,expected", [(10, 10, 11), (100, 10, 10), (1000, 10, 9), (1000, 4, 4), (1, 32, 32)]
)
def test_adjust_difficulty(duration, d, expected):
    assert ch.adjust_difficulty(duration, 100, d) == expected


def test_chain_config_guards():
    with pytest.raises(ValueError):
        ChainConfig(d=3)
    with pytest.raises(ValueError):
        ChainConfig(d=10, epoch_len=0)
    assert ChainConfig(d=10).epoch_len == 2016


# -- persistence -------------------------------------------------------------------


def test_save_load_roundtrip(chain24, tmp_path):
    path = tmp_path / "c.jsonl"
    ch.save_chain(Chain(CFG, chain24.blocks[:12]), path)
    ch.append_blocks(path, chain24.blocks[12:])
    assert ch.load_chain(path, CFG) == chain24


def test_record_errors_carry_height():
    with pytest.raises(ChainFormatError) as e:
        ch.decode_record("{not json", 7)
    assert e.value.height == 7
    with pytest.raises(ChainFormatError):
        ch.decode_record('{"header": "00", "txs": []}', 2)
