"""
sftkit - construct, check, transform and measure two-dimensional subshifts
of finite type from the command line
"""

# Load environment variables from .env file
from dotenv import load_dotenv
load_dotenv()

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, List, Optional, Sequence

from pydantic import BaseModel

from app.config import settings
from app.schemas.gluing import GapTable
from app.schemas.pattern import Pattern, SftDefinition
from app.schemas.render import RenderStyle
from app.services import delta, distort, entropy, gluing, periodic
from app.services.builtin_sfts import builtin_names, load_pattern, load_sft
from app.services.completion import complete_block
from app.services.petals import density, extract_petals
from app.services.render import render_to_file
from app.services.robinson import supertile
from app.services.sft_core import count_blocks, enumerate_blocks
from app.utils.error_handler import DefinitionError, ErrorHandler, SftkitError

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.log_level.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """Plain JSON form of reports; patterns and SFTs use their file formats"""
    if isinstance(value, (Pattern, SftDefinition)):
        return value.to_json_dict()
    if isinstance(value, BaseModel):
        return {name: to_jsonable(getattr(value, name)) for name in type(value).model_fields}
    if isinstance(value, dict):
        return {(",".join(str(k) for k in key) if isinstance(key, tuple) else str(key)): to_jsonable(v)
                for key, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, Fraction):
        return str(value)
    return value


def _dump(value: Any) -> str:
    return json.dumps(to_jsonable(value), ensure_ascii=False, separators=(",", ":"))


def _emit(value: Any, out: Optional[str] = None) -> None:
    text = _dump(value)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        logger.info(f"Wrote {out}")
    else:
        print(text)


def _gap_table(source: str) -> GapTable:
    """Integer constant or JSON file {"n": f(n), ...}"""
    try:
        return GapTable.constant(int(source))
    except ValueError:
        pass
    try:
        data = json.loads(Path(source).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DefinitionError(f"No gap table file {source!r}")
    except json.JSONDecodeError as e:
        raise DefinitionError(f"Gap table {source} is not valid JSON", original_error=e)
    return GapTable(values={int(k): int(v) for k, v in data.items()})


class _ChainAction(argparse.Action):
    """Collects --d, --r R and --rho into one operator chain, in command-line order"""

    def __call__(self, parser, namespace, values, option_string=None):
        chain = list(getattr(namespace, self.dest) or [])
        if option_string == "--r":
            chain.append(f"d_r:{values}")
        elif option_string == "--rho":
            chain.append("rho")
        else:
            chain.append("d")
        setattr(namespace, self.dest, chain)


# ---- commands -------------------------------------------------------------

def cmd_count(args) -> None:
    sft = load_sft(args.sft)
    if args.collect:
        blocks = enumerate_blocks(sft, args.n)
        _emit({"n": args.n, "count": len(blocks), "blocks": blocks}, args.out)
    else:
        _emit({"n": args.n, "count": count_blocks(sft, args.n)}, args.out)


def cmd_glue(args) -> None:
    sft = load_sft(args.sft)
    if args.pair:
        p, q = (load_pattern(path) for path in args.pair)
        if not args.net:
            _emit({"offsets": gluing.gluing_set(sft, p, q, args.window, args.margin)}, args.out)
        elif sft.name == "robinson_adr":
            _emit(gluing.robinson_net_witness(p, q, window=args.window), args.out)
        else:
            found = gluing.net_gluing_witness(sft, p, q, args.window, args.margin)
            _emit({"anchor": found[0] if found else None, "period": found[1] if found else None}, args.out)
    else:
        _emit(gluing.gap_estimate(sft, args.n, args.window, args.margin, threads=args.threads), args.out)


def cmd_glue_class(args) -> None:
    sft = load_sft(args.sft)
    report = gluing.classify_gluing(sft, _gap_table(args.f), args.n_max, margin=args.margin, window=args.window)
    _emit(report, args.out)


def cmd_power_gaps(args) -> None:
    sft = load_sft(args.sft)
    _emit(gluing.power_sequence_gaps(sft, args.c, args.m, args.l_max, margin=args.margin), args.out)


def cmd_robinson_supertile(args) -> None:
    tile = supertile(args.order, args.orientation)
    _emit(tile, args.out)
    if args.svg:
        render_to_file(tile, args.svg, RenderStyle(cell_px=args.cell_px, draw_petals=args.petals))


def cmd_robinson_petals(args) -> None:
    _emit(extract_petals(load_pattern(args.input)), args.out)


def cmd_robinson_complete(args) -> None:
    _emit(complete_block(load_pattern(args.input)), args.out)


def cmd_robinson_density(args) -> None:
    _emit(density(load_pattern(args.input), max_order=args.max_order), args.out)


def cmd_delta_curves(args) -> None:
    _emit(delta.curves(load_pattern(args.input)), args.out)


def cmd_delta_complete_t(args) -> None:
    _emit(delta.complete_T(load_pattern(args.input)), args.out)


def cmd_delta_compactify(args) -> None:
    _emit(delta.compactify(load_pattern(args.input)), args.out)


def cmd_delta_shift(args) -> None:
    _emit(delta.shift_curves(load_pattern(args.input), args.t, complete=not args.no_complete), args.out)


def cmd_distort(args) -> None:
    if not args.chain:
        raise DefinitionError("Give at least one operator: --d, --r R or --rho")
    _emit(distort.apply_chain(load_sft(args.sft), args.chain), args.out)


def cmd_entropy(args) -> None:
    report = entropy.entropy_estimate(load_sft(args.sft), args.max_n, args.strip_width, target=args.target)
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
    _emit(report, args.out)


def cmd_entropy_shift(args) -> None:
    report = entropy.entropy_shift_check(load_sft(args.sft), args.r, n_max=args.max_n, strip_width=args.strip_width)
    _emit(report, args.out)


def cmd_periodic_find(args) -> None:
    _emit(periodic.find_periodic_point(load_sft(args.sft), _gap_table(args.f), args.n), args.out)


def cmd_periodic_containing(args) -> None:
    sft = load_sft(args.sft)
    _emit(periodic.periodic_point_containing(sft, load_pattern(args.block), _gap_table(args.f)), args.out)


def cmd_periodic_decide(args) -> None:
    sft = load_sft(args.sft)
    domain = periodic.membership_domain(sft, load_pattern(args.block), _gap_table(args.f), budget=args.budget)
    _emit({"member": domain is not None, "domain": domain}, args.out)


def cmd_refute_period(args) -> None:
    found = periodic.refute_period(load_sft(args.sft), args.max, threads=args.threads)
    _emit({"max_period": args.max, "periods": [[d.width, d.height] for d in found]}, args.out)


def cmd_render(args) -> None:
    if not args.out:
        raise DefinitionError("render writes SVG; give --out")
    style = RenderStyle(cell_px=args.cell_px, draw_petals=args.petals)
    render_to_file(load_pattern(args.input), args.out, style)


# ---- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sftkit", description=__doc__)
    parser.add_argument("--threads", type=int, default=settings.threads,
                        help="worker threads for glue and refute-period (default: SFTKIT_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text, parent=sub):
        p = parent.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--out", help="write JSON here instead of stdout")
        return p

    sft_help = f"built-in name ({', '.join(builtin_names())}) or JSON file"

    p = command("count", cmd_count, "count (or list) admissible n-blocks")
    p.add_argument("--sft", required=True, help=sft_help)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--collect", action="store_true")

    p = command("glue", cmd_glue, "uniform gap estimate, or the gluing set of a pair")
    p.add_argument("--sft", required=True, help=sft_help)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--margin", type=int, default=1)
    p.add_argument("--pair", nargs=2, metavar=("P", "Q"))
    p.add_argument("--net", action="store_true", help="with --pair: lattice anchor and period")

    p = command("glue-class", cmd_glue_class, "block gluing / net gluing / block transitivity for a gap function")
    p.add_argument("--sft", required=True, help=sft_help)
    p.add_argument("--f", required=True, help="constant gap or JSON table")
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--window", type=int)
    p.add_argument("--margin", type=int, default=1)

    p = command("power-gaps", cmd_power_gaps, "gaps at sizes c^l + m extended to every n")
    p.add_argument("--sft", required=True, help=sft_help)
    p.add_argument("--c", type=int, default=2)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--l-max", type=int, required=True)
    p.add_argument("--margin", type=int, default=1)

    robinson = sub.add_parser("robinson", help="aligned Robinson subshift")
    rsub = robinson.add_subparsers(dest="robinson_command", required=True)
    p = command("supertile", cmd_robinson_supertile, "order-n supertile", rsub)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--orientation", default="sw", choices=["sw", "se", "nw", "ne"])
    p.add_argument("--svg")
    p.add_argument("--cell-px", type=int, default=12)
    p.add_argument("--petals", action="store_true")
    p = command("petals", cmd_robinson_petals, "petal hierarchy of a window", rsub)
    p.add_argument("--in", dest="input", required=True)
    p = command("complete", cmd_robinson_complete, "supertile containing a block", rsub)
    p.add_argument("--in", dest="input", required=True)
    p = command("density", cmd_robinson_density, "blue corner densities of a window", rsub)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--max-order", type=int, default=2)

    curve = sub.add_parser("delta", help="curve layer constructions")
    dsub = curve.add_subparsers(dest="delta_command", required=True)
    p = command("curves", cmd_delta_curves, "curves through a window", dsub)
    p.add_argument("--in", dest="input", required=True)
    p = command("complete-t", cmd_delta_complete_t, "rectangle with left-to-right curves containing a block", dsub)
    p.add_argument("--in", dest="input", required=True)
    p = command("compactify", cmd_delta_compactify, "close the gaps between outgoing curves", dsub)
    p.add_argument("--in", dest="input", required=True)
    p = command("shift", cmd_delta_shift, "shift the outgoing curves t times", dsub)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--no-complete", action="store_true")

    p = command("distort", cmd_distort, "apply operators left to right")
    p.add_argument("--sft", required=True, help=sft_help)
    p.add_argument("--d", dest="chain", nargs=0, action=_ChainAction, help="plain distortion")
    p.add_argument("--r", dest="chain", type=int, action=_ChainAction, help="distortion with counters mod R")
    p.add_argument("--rho", dest="chain", nargs=0, action=_ChainAction, help="quarter turn")

    p = command("entropy", cmd_entropy, "block ratios and strip bounds")
    p.add_argument("--sft", required=True, help=sft_help)
    p.add_argument("--max-n", type=int, required=True)
    p.add_argument("--strip-width", type=int, required=True)
    p.add_argument("--target", type=float)
    p.add_argument("--csv")

    p = command("entropy-shift", cmd_entropy_shift, "lower-bound check for the counter distortion")
    p.add_argument("--sft", required=True, help=sft_help)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--max-n", type=int, default=0)
    p.add_argument("--strip-width", type=int)

    per = sub.add_parser("periodic", help="periodic points")
    psub = per.add_subparsers(dest="periodic_command", required=True)
    p = command("find", cmd_periodic_find, "periodic point from an n-wide strip", psub)
    p.add_argument("--sft", required=True, help=sft_help)
    p.add_argument("--f", required=True, help="constant gap or JSON table")
    p.add_argument("--n", type=int, required=True)
    p = command("containing", cmd_periodic_containing, "periodic point containing a block", psub)
    p.add_argument("--sft", required=True, help=sft_help)
    p.add_argument("--f", required=True, help="constant gap or JSON table")
    p.add_argument("--block", required=True)
    p = command("decide", cmd_periodic_decide, "whether a block occurs in a periodic point", psub)
    p.add_argument("--sft", required=True, help=sft_help)
    p.add_argument("--f", required=True, help="constant gap or JSON table")
    p.add_argument("--block", required=True)
    p.add_argument("--budget", type=int)

    p = command("refute-period", cmd_refute_period, "every torus size up to a bound that carries a configuration")
    p.add_argument("--sft", required=True, help=sft_help)
    p.add_argument("--max", type=int, required=True)

    p = command("render", cmd_render, "SVG of a pattern")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--cell-px", type=int, default=24)
    p.add_argument("--petals", action="store_true")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    if args.threads < 1:
        print("sftkit: error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except (SftkitError, ValueError, OSError) as e:
        payload = ErrorHandler.create_error_payload(e, include_details=logger.isEnabledFor(logging.DEBUG))
        print(json.dumps(payload, ensure_ascii=False), file=sys.stderr)
        return ErrorHandler.exit_code(e)
    return 0


if __name__ == "__main__":
    sys.exit(main())
