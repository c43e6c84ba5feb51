# backend/cli.py
"""
irelab command line.

Every command prints one JSON envelope on stdout
    {"tool", "version", "command", "config", "seed", "result"}
and a short human summary on stderr (logging).

Exit codes: 0 ok, 1 verification failure, 2 invalid input, 3 budget exceeded.
"""

import argparse
import json
import logging
import sys
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from . import __version__
from .errors import (
    GroupMismatchError,
    InfeasibleError,
    IrelabError,
    ParseError,
    PreconditionError,
    SizeLimitError,
)
from .estimates import run_streams
from .finite_graphs import (
    corpus_graph,
    expansion_profile,
    hyperfinite_exact,
    hyperfinite_greedy,
    read_edge_list,
    robustness_check,
    write_edge_list,
)
from .groups import parse_group
from .local_stats import NeighborhoodDistribution, bvt_cell_profiles, collect_distribution, tv_distance
from .sampling import IntensitySpec, SeedSpec
from .settings import default_workers, load_config_file
from .tiling import (
    MIN_VERIFY_SAMPLES,
    bound_reports,
    determinacy_window,
    exact_distribution,
    lemma_bounds_pass,
    oracle_comparison,
    parse_cell_set,
    sample_outcomes,
)
from .voronoi import (
    BvtParams,
    BvtSampler,
    bvt_cell_size_histogram,
    bvt_intensity_identity,
    format_cell,
    sample_bvt_root_cell,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_BUDGET = 3

GLOBAL_DEFAULTS = {"format": "json", "verbose": False, "quiet": False}
BOOL_FLAGS = {"oracle", "verbose", "quiet"}
TRUTHY = {"1", "true", "yes", "on"}
INTERNAL_KEYS = {
    "handler", "fill", "need", "csv_ok", "command", "command_group",
    "bvt_command", "graph_command", "config", "workers", "format", "verbose", "quiet",
}


# --------- Parser --------- #

def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="flat key=value file; flags win")
    parser.add_argument("--workers", type=int, default=default, help="worker processes (IRELAB_WORKERS)")
    parser.add_argument("--format", choices=["json", "csv"], default=default)
    parser.add_argument("--verbose", action="store_true", default=default)
    parser.add_argument("--quiet", action="store_true", default=default)


def _seed_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="master seed (default 0)")
    parser.add_argument("--stream", type=int, help="first stream index (default 0)")


def _bvt_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--group", help="z:d or f:k")
    parser.add_argument("--p", type=float, help="Bernoulli intensity in (0, 1)")
    parser.add_argument("--rmax", type=int, help="radius cap (default 50)")
    parser.add_argument("--samples", type=int)
    _seed_flags(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irelab",
        description="Sample and verify invariant random equivalence relations on groups.",
    )
    _global_flags(parser, suppress=False)
    parser.add_argument("--version", action="version", version=f"irelab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    commands = parser.add_subparsers(dest="command_group", required=True)

    fire = commands.add_parser("fire-verify", parents=[common], help="check the tiling FIRE bounds")
    fire.add_argument("--group")
    fire.add_argument("--cell-set", help="ball:r or explicit:g1,g2,...")
    fire.add_argument("--delta", type=float)
    fire.add_argument("--samples", type=int)
    fire.add_argument("--oracle", action="store_true", default=None, help="also run the exact oracle")
    _seed_flags(fire)
    fire.set_defaults(handler=cmd_fire_verify, command="fire-verify",
                      fill={"samples": 10**5, "seed": 0, "stream": 0, "oracle": False},
                      need=("group", "cell_set", "delta"), csv_ok=False)

    bvt = commands.add_parser("bvt", help="Bernoulli Voronoi tessellation")
    bvt_commands = bvt.add_subparsers(dest="bvt_command", required=True)
    bvt_fill = {"rmax": 50, "seed": 0, "stream": 0}
    bvt_need = ("group", "p")

    sample = bvt_commands.add_parser("sample", parents=[common], help="sample root cells")
    _bvt_flags(sample)
    sample.set_defaults(handler=cmd_bvt_sample, command="bvt sample",
                        fill={**bvt_fill, "samples": 1}, need=bvt_need, csv_ok=False)

    check = bvt_commands.add_parser("intensity-check", parents=[common], help="E[1/|cell|] = p")
    _bvt_flags(check)
    check.set_defaults(handler=cmd_bvt_intensity, command="bvt intensity-check",
                       fill={**bvt_fill, "samples": 10**4}, need=bvt_need, csv_ok=False)

    hist = bvt_commands.add_parser("histogram", parents=[common], help="root cell size law")
    _bvt_flags(hist)
    hist.set_defaults(handler=cmd_bvt_histogram, command="bvt histogram",
                      fill={**bvt_fill, "samples": 10**4}, need=bvt_need, csv_ok=True)

    nbhd = bvt_commands.add_parser("nbhd", parents=[common], help="rooted neighborhood distribution")
    _bvt_flags(nbhd)
    nbhd.add_argument("--radius", type=int)
    nbhd.add_argument("--output", help="also write the distribution JSON here")
    nbhd.set_defaults(handler=cmd_bvt_nbhd, command="bvt nbhd",
                      fill={**bvt_fill, "samples": 10**4, "radius": 2}, need=bvt_need, csv_ok=False)

    profile = bvt_commands.add_parser("profile", parents=[common], help="hyperfiniteness profile of cells")
    _bvt_flags(profile)
    profile.add_argument("--epsilon", type=float)
    profile.add_argument("--k", type=int)
    profile.add_argument("--N", type=int)
    profile.set_defaults(handler=cmd_bvt_profile, command="bvt profile",
                         fill={**bvt_fill, "samples": 100, "N": 3}, need=bvt_need + ("epsilon", "k"),
                         csv_ok=True)

    graph = commands.add_parser("graph", help="finite graph certificates")
    graph_commands = graph.add_subparsers(dest="graph_command", required=True)

    hyper = graph_commands.add_parser("hyperfinite", parents=[common], help="(eps, k)-hyperfiniteness")
    hyper.add_argument("--input")
    hyper.add_argument("--epsilon", type=float)
    hyper.add_argument("--k", type=int)
    hyper.add_argument("--mode", choices=["exact", "greedy"])
    hyper.set_defaults(handler=cmd_graph_hyperfinite, command="graph hyperfinite",
                       fill={"mode": "exact"}, need=("input", "epsilon", "k"), csv_ok=False)

    expansion = graph_commands.add_parser("expansion", parents=[common], help="small-set expansion profile")
    expansion.add_argument("--input")
    expansion.add_argument("--N", type=int)
    expansion.set_defaults(handler=cmd_graph_expansion, command="graph expansion",
                           fill={}, need=("input", "N"), csv_ok=True)

    robust = graph_commands.add_parser("robustness", parents=[common], help="robustness of non-hyperfiniteness")
    robust.add_argument("--input")
    robust.add_argument("--kappa", type=float)
    robust.add_argument("--N", type=int)
    robust.add_argument("--epsilon", type=float)
    robust.add_argument("--seed", type=int, help="seed for subset sampling on large graphs")
    robust.set_defaults(handler=cmd_graph_robustness, command="graph robustness",
                        fill={"seed": 0}, need=("input", "kappa", "N", "epsilon"), csv_ok=False)

    generate = graph_commands.add_parser("generate", parents=[common], help="write a corpus graph")
    generate.add_argument("--name", help="cycle:n, path:n, complete:n, hypercube:d, regular:d:n:seed")
    generate.add_argument("--output")
    generate.set_defaults(handler=cmd_graph_generate, command="graph generate",
                          fill={}, need=("name",), csv_ok=False)

    bs = commands.add_parser("bs-distance", parents=[common], help="TV distance of two distributions")
    bs.add_argument("first")
    bs.add_argument("second")
    bs.set_defaults(handler=cmd_bs_distance, command="bs-distance", fill={}, need=(), csv_ok=False)

    return parser


def _resolve(parser: argparse.ArgumentParser, argv: List[str]) -> argparse.Namespace:
    """Parse, merge the config file (flags win), then apply defaults and checks."""
    args = parser.parse_args(argv)
    if args.config:
        current = vars(args)
        extra: List[str] = []
        for key, value in load_config_file(args.config).items():
            if key not in current or key in ("config", "handler", "fill", "need", "csv_ok", "command"):
                raise ParseError(f"unknown config key {key!r} for {args.command}")
            if current[key] is not None:
                continue
            flag = "--" + key.replace("_", "-")
            if key in BOOL_FLAGS:
                if value.lower() in TRUTHY:
                    extra.append(flag)
            else:
                extra.extend([flag, value])
        if extra:
            args = parser.parse_args(argv + extra)

    for key, value in {**GLOBAL_DEFAULTS, **args.fill}.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if args.workers is None:
        args.workers = default_workers()
    if args.workers < 1:
        raise ParseError(f"--workers must be >= 1, got {args.workers}")
    missing = [name for name in args.need if getattr(args, name) is None]
    if missing:
        raise ParseError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
    if args.format == "csv" and not args.csv_ok:
        raise ParseError("--format csv is only available for bvt histogram, bvt profile and graph expansion")
    return args


def _configure_logging(args: Optional[argparse.Namespace]) -> None:
    level = logging.INFO
    if args is not None and args.verbose:
        level = logging.DEBUG
    elif args is not None and args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format="[%(levelname)s] %(message)s", stream=sys.stderr, force=True)


# --------- Output --------- #

def _config_echo(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in INTERNAL_KEYS}


def _emit(args: argparse.Namespace, result: Any, seed: Optional[int]) -> None:
    envelope = {
        "tool": "irelab",
        "version": __version__,
        "command": args.command,
        "config": _config_echo(args),
        "seed": seed,
        "result": result,
    }
    sys.stdout.write(json.dumps(envelope, sort_keys=True, separators=(",", ":")) + "\n")


def _emit_frame(frame: pd.DataFrame) -> None:
    frame.to_csv(sys.stdout, index=False)


def _records(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    return frame.astype(object).where(frame.notna(), None).to_dict(orient="records")


def _bvt_params(args: argparse.Namespace) -> BvtParams:
    return BvtParams(parse_group(args.group), IntensitySpec(args.p), args.rmax)


def _seed(args: argparse.Namespace) -> SeedSpec:
    return SeedSpec(args.seed, args.stream)


# --------- Commands --------- #

def cmd_fire_verify(args: argparse.Namespace) -> int:
    spec = parse_group(args.group)
    cell_set = parse_cell_set(spec, args.cell_set, args.delta)
    if args.samples < MIN_VERIFY_SAMPLES:
        raise PreconditionError(f"--samples must be >= {MIN_VERIFY_SAMPLES}, got {args.samples}")
    law = exact_distribution(cell_set) if args.oracle else None

    outcomes = sample_outcomes(cell_set, args.samples, _seed(args), args.workers)
    reports = bound_reports(cell_set, outcomes)
    ok = lemma_bounds_pass(reports)
    result: Dict[str, Any] = {
        "cell_set": cell_set.describe(),
        "window_size": len(determinacy_window(cell_set)),
        "samples": args.samples,
        "bounds": [r.to_dict() for r in reports],
        "all_pass": ok,
    }
    if law is not None:
        result["oracle"] = {"law": law.to_dict(), "comparison": oracle_comparison(law, outcomes)}
    _emit(args, result, args.seed)
    logging.info("fire-verify on |A|=%d, delta=%s: %s", cell_set.size, args.delta,
                 "all bounds pass" if ok else "BOUND FAILURE")
    return EXIT_OK if ok else EXIT_FAILED


def _bvt_cell_dict(params: BvtParams, seed: SeedSpec) -> Dict[str, Any]:
    return sample_bvt_root_cell(params, seed).to_dict()


def cmd_bvt_sample(args: argparse.Namespace) -> int:
    params = _bvt_params(args)
    cells = run_streams(partial(_bvt_cell_dict, params), args.samples, _seed(args), args.workers, "bvt cells")
    undetermined = sum(1 for c in cells if not c["determined"])
    _emit(args, {"params": params.describe(), "cells": cells, "undetermined": undetermined}, args.seed)
    if args.samples == 1:
        logging.info("%s", format_cell(sample_bvt_root_cell(params, _seed(args))))
    logging.info("%d cells sampled, %d undetermined", len(cells), undetermined)
    return EXIT_OK


def cmd_bvt_intensity(args: argparse.Namespace) -> int:
    params = _bvt_params(args)
    report = bvt_intensity_identity(params, args.samples, _seed(args), args.workers)
    _emit(args, {"params": params.describe(), **report.to_dict()}, args.seed)
    if report.estimate is not None:
        logging.info("E[1/|cell|] = %.5f +- %.5f vs p = %s (%s)", report.estimate.value, report.estimate.stderr,
                     params.p.p, "pass" if report.passes else "FAIL")
    logging.info("undetermined fraction %.4f", report.undetermined_fraction)
    return EXIT_OK if report.passes else EXIT_FAILED


def cmd_bvt_histogram(args: argparse.Namespace) -> int:
    params = _bvt_params(args)
    hist = bvt_cell_size_histogram(params, args.samples, _seed(args), args.workers)
    if args.format == "csv":
        _emit_frame(hist.to_frame())
    else:
        _emit(args, {"params": params.describe(), **hist.to_dict()}, args.seed)
    logging.info("%d sizes seen, undetermined fraction %.4f", len(hist.counts), hist.undetermined_fraction)
    return EXIT_OK


def cmd_bvt_nbhd(args: argparse.Namespace) -> int:
    params = _bvt_params(args)
    dist = collect_distribution(BvtSampler(params), args.radius, args.samples, _seed(args), args.workers)
    if args.output:
        Path(args.output).write_text(dist.to_json() + "\n", encoding="utf-8")
        logging.info("wrote %s", args.output)
    _emit(args, dist.to_dict(), args.seed)
    return EXIT_OK


def cmd_bvt_profile(args: argparse.Namespace) -> int:
    params = _bvt_params(args)
    frame = bvt_cell_profiles(params, args.epsilon, args.k, args.N, args.samples, _seed(args), args.workers)
    if args.format == "csv":
        _emit_frame(frame)
    else:
        _emit(args, {"params": params.describe(), "profiles": _records(frame)}, args.seed)
    logging.info("%d profiles", len(frame))
    return EXIT_OK


def cmd_graph_hyperfinite(args: argparse.Namespace) -> int:
    g = read_edge_list(args.input)
    if args.mode == "exact":
        cert = hyperfinite_exact(g, args.epsilon, args.k)
    else:
        cert = hyperfinite_greedy(g, args.epsilon, args.k)
    _emit(args, {"graph": g.describe(), "certificate": cert.to_dict()}, None)
    logging.info("(%s, %d)-hyperfinite: %s", args.epsilon, args.k, "yes" if cert.verdict else "no")
    return EXIT_OK


def cmd_graph_expansion(args: argparse.Namespace) -> int:
    g = read_edge_list(args.input)
    profile = expansion_profile(g, args.N)
    if args.format == "csv":
        _emit_frame(profile.to_frame())
    else:
        _emit(args, {"graph": g.describe(), "profile": profile.to_dict()}, None)
    logging.info("kappa = %s over |F| <= %d", profile.kappa, args.N)
    return EXIT_OK


def cmd_graph_robustness(args: argparse.Namespace) -> int:
    g = read_edge_list(args.input)
    report = robustness_check(g, args.kappa, args.N, args.epsilon, seed=args.seed)
    _emit(args, {"graph": g.describe(), "report": report.to_dict()}, args.seed)
    logging.info("%d subsets checked, %d counterexamples", report.checked, len(report.counterexamples))
    return EXIT_OK if report.holds else EXIT_FAILED


def cmd_graph_generate(args: argparse.Namespace) -> int:
    g = corpus_graph(args.name)
    result: Dict[str, Any] = {"name": args.name, "graph": g.describe()}
    if args.output:
        write_edge_list(g, args.output)
        result["output"] = args.output
    else:
        result["edges"] = [list(e) for e in g.edges]
    _emit(args, result, None)
    return EXIT_OK


def _load_distribution(path: str) -> NeighborhoodDistribution:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not JSON ({exc})")
    if isinstance(data, dict) and data.get("tool") == "irelab":
        data = data["result"]
    return NeighborhoodDistribution.from_dict(data)


def cmd_bs_distance(args: argparse.Namespace) -> int:
    a, b = _load_distribution(args.first), _load_distribution(args.second)
    tv = tv_distance(a, b)
    _emit(args, {"tv_distance": tv, "radius": a.radius, "totals": [a.total, b.total],
                 "undetermined": [a.undetermined, b.undetermined]}, None)
    logging.info("TV distance at radius %d: %.6f", a.radius, tv)
    return EXIT_OK


# --------- Entry --------- #

def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _configure_logging(None)
    parser = build_parser()
    try:
        args = _resolve(parser, argv)
    except IrelabError as exc:
        logging.error("%s", exc)
        return EXIT_INVALID
    _configure_logging(args)

    try:
        return args.handler(args)
    except (ParseError, PreconditionError, GroupMismatchError) as exc:
        logging.error("%s", exc)
        return EXIT_INVALID
    except (InfeasibleError, SizeLimitError) as exc:
        logging.error("%s", exc)
        return EXIT_BUDGET
    except IrelabError as exc:
        logging.error("%s", exc)
        return EXIT_INVALID
    except OSError as exc:
        logging.error("%s", exc)
        return EXIT_INVALID
