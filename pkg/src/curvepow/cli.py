"""``curvepow`` command-line interface.

Exit codes: 0 ok, 1 verification failure, 2 generation exhausted,
3 chain corrupt, 64 usage, 65 bad data, 66 missing file.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import chain as chainmod
from . import ec, params, sim
from .codec import DIGEST_SIZE
from .config import ConfigError, load_config
from .dlp import DlpInstance, Method, solve
from .ec import Affine, CurveParams
from .errors import ChainFormatError, CurvePowError, GenerationExhausted, InvalidPoint

EX_OK = 0
EX_VERIFY = 1
EX_EXHAUSTED = 2
EX_CORRUPT = 3
EX_USAGE = 64
EX_DATAERR = 65
EX_NOINPUT = 66


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EX_USAGE)


def hx(v: int) -> str:
    return f"-0x{-v:x}" if v < 0 else f"0x{v:x}"


def _int(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def _digest(text: str) -> bytes:
    t = text[2:] if text.lower().startswith("0x") else text
    if len(t) != 2 * DIGEST_SIZE:
        raise UsageError(f"h_prev must be {DIGEST_SIZE} bytes of hex, got {len(t)} hex digits")
    try:
        return bytes.fromhex(t)
    except ValueError:
        raise UsageError(f"h_prev is not valid hex: {text!r}") from None


def _config(args, **extra):
    overrides = {
        "profile": args.profile,
        "d": args.d,
        "epoch_len": args.epoch_len,
        "cm_threshold": args.cm_threshold,
        "solver": getattr(args, "solver", None),
        "workers": getattr(args, "workers", None),
        "seed": getattr(args, "seed", None),
        "chain_path": getattr(args, "chain", None),
    }
    overrides.update(extra)
    return load_config(args.config, overrides)


def _print_params(ep: params.EpochParams) -> None:
    E = ep.curve
    exc, sec = ep.exceptionality, ep.security
    lines = [
        ("d", hx(ep.d)),
        ("h_prev", "0x" + ep.provenance.hex()),
        ("p", hx(ep.p)),
        ("A", hx(E.a)),
        ("B", hx(E.b)),
        ("P.x", hx(ep.base.x)),
        ("P.y", hx(ep.base.y)),
        ("order", hx(E.order)),
        ("trace", hx(E.trace)),
        ("p_iterations", hx(ep.p_iterations)),
        ("e_iterations", hx(ep.e_iterations)),
        ("exceptionality.crandall", _opt(exc.crandall)),
        ("exceptionality.mersenne_like", _opt(exc.mersenne_like)),
        ("exceptionality.montgomery_friendly", _opt(exc.montgomery_friendly)),
        ("exceptionality.accepted", str(exc.accepted).lower()),
        ("security.order_prime", str(sec.order_prime).lower()),
        ("security.anomalous", str(sec.anomalous).lower()),
        ("security.embedding_degree_leq20", _opt(sec.embedding_degree_leq20)),
        ("security.cm_discriminant", hx(sec.cm_discriminant)),
        ("security.cm_threshold", hx(ep.cm_threshold)),
        ("security.accepted", str(sec.passes(ep.cm_threshold)).lower()),
    ]
    for k, v in lines:
        print(f"{k} = {v}")


def _opt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, int):
        return hx(v)
    if isinstance(v, list):
        return " ".join(f"{'+' if s > 0 else '-'}2^{hx(e)}" for s, e in v)
    return "(" + ", ".join(hx(x) for x in v) + ")"


# -- commands ---------------------------------------------------------------------


def cmd_params(args) -> int:
    cfg = _config(args)
    h_prev = _digest(args.h_prev)
    try:
        ep = params.epoch_params(cfg.d, h_prev, cfg.cm_threshold, cfg.d_max)
    except GenerationExhausted as exc:
        print(f"generation exhausted: {exc}", file=sys.stderr)
        return EX_EXHAUSTED
    _print_params(ep)
    return EX_OK


def _load_valid(path: Path, ccfg: chainmod.ChainConfig):
    """(chain, report); raises ChainFormatError on unparsable records."""
    chain = chainmod.load_chain(path, ccfg)
    return chain, chainmod.validate_chain(chain)


def cmd_mine(args) -> int:
    cfg = _config(args)
    path = Path(cfg.chain_path)
    ccfg = cfg.chain_config()
    chain = chainmod.Chain(ccfg)
    if path.exists():
        try:
            chain, report = _load_valid(path, ccfg)
        except ChainFormatError as exc:
            print(f"chain corrupt: {exc}", file=sys.stderr)
            return EX_CORRUPT
        if not report.ok:
            print(f"existing chain invalid at height {report.failed_height}; refusing to extend", file=sys.stderr)
            return EX_CORRUPT
    else:
        path.touch()

    def on_block(height, blk, gen_time, stats):
        chainmod.append_blocks(path, [blk])
        print(
            f"height={hx(height)} kind={blk.kind.name} N={hx(blk.header.nonce)} "
            f"gen_time_s={gen_time:.6f} dlp_time_s={stats.wall_time:.6f} group_ops={hx(stats.group_ops)}",
            flush=True,
        )

    try:
        chainmod.mine_chain(ccfg, args.count, chain, cfg.solver, cfg.workers, on_block=on_block)
    except GenerationExhausted as exc:
        print(f"generation exhausted: {exc}", file=sys.stderr)
        return EX_EXHAUSTED
    return EX_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    path = Path(cfg.chain_path)
    if not path.exists():
        print(f"no such chain file: {path}", file=sys.stderr)
        return EX_NOINPUT
    try:
        _, report = _load_valid(path, cfg.chain_config())
    except ChainFormatError as exc:
        print(f"chain corrupt: {exc}", file=sys.stderr)
        print(f"earliest bad record: {exc.height}")
        return EX_CORRUPT
    print(report.to_json() if args.json else report.to_text())
    return EX_OK if report.ok else EX_VERIFY


def cmd_solve(args) -> int:
    try:
        E = CurveParams(args.p, args.a % args.p, args.b % args.p)
    except (ValueError, CurvePowError) as exc:
        print(f"bad curve: {exc}", file=sys.stderr)
        return EX_DATAERR
    P, Q = Affine(args.px, args.py), Affine(args.qx, args.qy)
    for name, pt in (("P", P), ("Q", Q)):
        if not E.contains(pt):
            print(f"{name} is not on the curve", file=sys.stderr)
            return EX_DATAERR
    try:
        n = args.order or ec.curve_order(E)
        n = ec._point_order(tuple(P), n, E.a, E.p)
        if Method(args.method) in (Method.RHO, Method.KANGAROO) and not params.is_prime(n):
            print(f"{args.method} needs a base point of prime order (order {hx(n)})", file=sys.stderr)
            return EX_DATAERR
        N, stats = solve(DlpInstance(E, P, Q, n), args.method, args.seed, args.workers)
    except (InvalidPoint, CurvePowError, ec.OrderUndetermined) as exc:
        print(f"cannot solve: {exc}", file=sys.stderr)
        return EX_DATAERR
    print(f"N = {hx(N)}")
    print(f"n = {hx(n)}")
    print(stats.line())
    return EX_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    if args.d_min > args.d_max:
        raise UsageError("d-min must not exceed d-max")
    for d in (args.d_min, args.d_max):
        if not params.D_MIN <= d <= cfg.d_max:
            raise UsageError(f"d={d} outside [{params.D_MIN}, {cfg.d_max}]")

    def progress(row):
        print(f"d={row.d} trial={row.trial} gen_time_s={row.gen_time:.6f} dlp_time_s={row.dlp_time:.6f}", file=sys.stderr)

    table = sim.bench_scaling(
        range(args.d_min, args.d_max + 1), args.trials, cfg.seed, cfg.cm_threshold, cfg.solver, progress
    )
    Path(args.out).write_text(table.to_csv())
    if args.d_max > args.d_min:
        print(f"slope log2(dlp_time)/d = {table.dlp_slope():.4f}")
        print(f"slope log2(group_ops)/d = {table.ops_slope():.4f}")
    print(f"gen/dlp ratio at d={args.d_max}: {table.gen_dlp_ratio(args.d_max):.4f}")
    return EX_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    sc = sim.SimConfig(
        miner_count=args.miners if args.miners is not None else cfg.miners,
        epoch_len=cfg.epoch_len,
        d=cfg.d,
        cm_threshold=cfg.cm_threshold,
        solvers=(cfg.solver,),
        relay_delay=args.relay_delay if args.relay_delay is not None else cfg.relay_delay,
        rng_seed=cfg.seed,
        run_length=args.run_length if args.run_length is not None else cfg.run_length,
        work_quantum=args.work_quantum if args.work_quantum is not None else cfg.work_quantum,
    )
    result = sim.run_simulation(sc)
    print(f"blocks = {hx(len(result.chain))}")
    print(f"ticks = {hx(result.ticks)}")
    print(f"fork_events = {hx(len(result.fork_events))}")
    print(f"converged = {str(result.converged).lower()}")
    for miner, wins in result.tallies().items():
        print(f"miner {hx(miner)} wins = {hx(wins)}")
    if args.out:
        Path(args.out).write_text(result.to_csv(wall_times=args.wall_times))
    return EX_OK


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file (default: $CURVEPOW_CONFIG)")
    common.add_argument("--profile", choices=["paper", "desk"])
    common.add_argument("--d", type=int, help="difficulty parameter (p has 2d bits)")
    common.add_argument("--epoch-len", type=int)
    common.add_argument("--cm-threshold", type=str, help="minimum |D|, e.g. 2^10")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="curvepow", description="Elliptic-curve DLP proof-of-work chain tools")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("params", parents=[common], help="derive epoch parameters from h_prev")
    p.add_argument("--h-prev", required=True, help="64-byte previous-header digest in hex")
    p.set_defaults(func=cmd_params)

    def chain_opts(sp, mining):
        sp.add_argument("--chain", help="chain file path")
        if mining:
            sp.add_argument("--solver", choices=[m.value for m in Method])
            sp.add_argument("--workers", type=int)

    p = sub.add_parser("mine", parents=[common], help="append blocks to the chain file")
    p.add_argument("--count", type=int, required=True)
    chain_opts(p, True)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("verify", parents=[common], help="validate the whole chain file")
    chain_opts(p, False)
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("solve", help="solve one ECDLP instance")
    for name in ("p", "a", "b", "px", "py", "qx", "qy"):
        p.add_argument(f"--{name}", type=_int, required=True)
    p.add_argument("--order", type=_int, help="group order, if known")
    p.add_argument("--method", choices=[m.value for m in Method], default="rho")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", parents=[common], help="generation vs DLP timing table")
    p.add_argument("--d-min", type=int, required=True)
    p.add_argument("--d-max", type=int, required=True)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int)
    p.add_argument("--solver", choices=["rho", "bsgs", "kangaroo"])
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("simulate", parents=[common], help="run the multi-miner simulation")
    p.add_argument("--miners", type=int)
    p.add_argument("--relay-delay", type=int)
    p.add_argument("--run-length", type=int)
    p.add_argument("--work-quantum", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--solver", choices=["rho", "bsgs", "kangaroo"])
    p.add_argument("--out", help="per-block CSV output path")
    p.add_argument("--wall-times", action="store_true", help="include wall-clock columns in the CSV")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"curvepow: error: {exc}", file=sys.stderr)
        return EX_USAGE
    except FileNotFoundError as exc:
        print(f"curvepow: {exc}", file=sys.stderr)
        return EX_NOINPUT


if __name__ == "__main__":
    sys.exit(main())
